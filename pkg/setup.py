"""Build the optional Cython interval kernels.

The package works without them; ``timingcert.interval`` falls back to the
numpy implementation when the extension is missing.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("TIMINGCERT_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "timingcert.interval._ckernels",
                    ["src/timingcert/interval/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    # no -ffast-math: the kernels rely on IEEE round-to-nearest
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
