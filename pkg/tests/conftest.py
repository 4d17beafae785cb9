import warnings

import numpy as np
import pytest

CRITERIA = {
    1: "decomposition equals product-form transition matrix",
    2: "event-matrix zero products and commutation",
    3: "verified spectral norm and exponential enclosures",
    4: "deviation bound soundness and tightness",
    5: "positive certified jitter scale by bisection",
    6: "certified decay against Monte-Carlo simulation",
    7: "Lyapunov/LMI posteriors and norm-LMI equivalence",
    8: "Jordan-block counterexample",
    9: "block-diagonal doubling scalability",
    10: "CLI exit codes and JSON round trip",
}

_outcomes = {}
_metrics = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def _quiet_solver_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="Solution may be inaccurate")
        yield


@pytest.fixture
def record(request):
    """``record(text)`` attaches a measured value to the criterion's summary line."""
    k = _criterion(request.node.name.split("[")[0])

    def _add(text):
        _metrics.setdefault(k, []).append(str(text))
        print(f"criterion {k}: {text}")

    return _add


def _criterion(item_name):
    # test_criterion_07_... -> 7
    parts = item_name.split("_")
    if len(parts) > 2 and parts[0] == "test" and parts[1] == "criterion":
        try:
            return int(parts[2])
        except ValueError:
            return None
    return None


def pytest_runtest_logreport(report):
    k = _criterion(report.nodeid.split("::")[-1].split("[")[0])
    if k is None:
        return
    failed = report.failed or (report.when == "call" and report.skipped)
    prev = _outcomes.get(k, "PASS")
    if failed:
        _outcomes[k] = "FAIL"
    elif report.when == "call":
        _outcomes[k] = prev


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        if k in _outcomes:
            extra = "; ".join(_metrics.get(k, []))
            line = f"criterion {k:2d}: {_outcomes[k]}  {CRITERIA[k]}"
            terminalreporter.write_line(f"{line}  [{extra}]" if extra else line)
