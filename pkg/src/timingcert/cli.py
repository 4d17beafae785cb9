"""Command-line front end: ``verify <config> [options]``.

Exit status: 0 stable, 2 unknown, 1 input or usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from decimal import ROUND_CEILING, ROUND_FLOOR, Context, Decimal

import numpy as np

from . import pnorm as _pn
from .decomp import decompose
from .model import ClosedLoopSystem, InvalidInstanceError
from .synth import LMI_CHECK_TOL, beta_search, spectral_radius
from .verify import NO_SENSITIVITY, STABLE, UNKNOWN, approx_certify, certify

EXIT_STABLE = 0
EXIT_ERROR = 1
EXIT_UNKNOWN = 2

MATRIX_FIELDS = ("A_p", "B_p", "C_p", "A_d", "B_d", "C_d")
VECTOR_FIELDS = ("dt_u_lo", "dt_u_hi", "dt_y_lo", "dt_y_hi")
SYSTEM_FIELDS = MATRIX_FIELDS + ("T",) + VECTOR_FIELDS
MODES = ("verified", "approx", "both")
DEFAULT_OPTIONS = {
    "taylor_order": _pn.DEFAULT_ORDER,
    "approx_samples": 100,
    "lmi_tolerance": LMI_CHECK_TOL,
    "heuristic_iterations": 3,
    "mode": "verified",
}


class ConfigError(ValueError):
    """Malformed job description; the message names the offending field."""


# -- config -----------------------------------------------------------------

def _number(v, where):
    if isinstance(v, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(v, (int, float)):
        x = float(v)
    elif isinstance(v, str):
        try:
            x = float(Decimal(v.strip()))
        except ArithmeticError:
            raise ConfigError(f"{where}: {v!r} is not a decimal number") from None
    else:
        raise ConfigError(f"{where}: expected a number, got {type(v).__name__}")
    if not math.isfinite(x):
        raise ConfigError(f"{where}: must be finite")
    return x


def _matrix(v, where):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{where}: expected a non-empty list of rows")
    rows = []
    for i, row in enumerate(v):
        if not isinstance(row, list) or not row:
            raise ConfigError(f"{where}[{i}]: expected a non-empty list of numbers")
        rows.append([_number(x, f"{where}[{i}][{j}]") for j, x in enumerate(row)])
    if len({len(r) for r in rows}) != 1:
        raise ConfigError(f"{where}: rows have different lengths")
    return np.array(rows)


def _vector(v, where):
    if not isinstance(v, list):
        raise ConfigError(f"{where}: expected a list of numbers")
    return np.array([_number(x, f"{where}[{i}]") for i, x in enumerate(v)], dtype=float)


def _int_option(v, where, lo):
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ConfigError(f"{where}: expected an integer >= {lo}")
    return v


@dataclass(eq=False)
class JobConfig:
    system: ClosedLoopSystem
    options: dict = field(default_factory=lambda: dict(DEFAULT_OPTIONS))

    def __eq__(self, other):
        if not isinstance(other, JobConfig):
            return NotImplemented
        return to_dict(self) == to_dict(other)


def parse_config(data: dict) -> JobConfig:
    """Validate a decoded JSON document."""
    if not isinstance(data, dict):
        raise ConfigError("top level: expected an object with 'system' and 'options'")
    extra = set(data) - {"system", "options"}
    if extra:
        raise ConfigError(f"top level: unknown key(s) {sorted(extra)}")
    if "system" not in data:
        raise ConfigError("top level: missing 'system'")
    sd = data["system"]
    if not isinstance(sd, dict):
        raise ConfigError("system: expected an object")
    extra = set(sd) - set(SYSTEM_FIELDS)
    if extra:
        raise ConfigError(f"system: unknown key(s) {sorted(extra)}")
    missing = [k for k in MATRIX_FIELDS + ("T",) if k not in sd]
    if missing:
        raise ConfigError(f"system: missing field(s) {missing}")
    kw = {k: _matrix(sd[k], f"system.{k}") for k in MATRIX_FIELDS}
    kw["T"] = _number(sd["T"], "system.T")
    for k in VECTOR_FIELDS:
        if k in sd:
            kw[k] = _vector(sd[k], f"system.{k}")
    try:
        system = ClosedLoopSystem(**kw)
    except InvalidInstanceError as exc:
        raise ConfigError(f"system.{exc}") from None

    od = data.get("options", {})
    if not isinstance(od, dict):
        raise ConfigError("options: expected an object")
    extra = set(od) - set(DEFAULT_OPTIONS)
    if extra:
        raise ConfigError(f"options: unknown key(s) {sorted(extra)}")
    opts = dict(DEFAULT_OPTIONS)
    for k, v in od.items():
        where = f"options.{k}"
        if k == "mode":
            if v not in MODES:
                raise ConfigError(f"{where}: expected one of {list(MODES)}")
            opts[k] = v
        elif k == "lmi_tolerance":
            x = _number(v, where)
            if not x > 0.0:
                raise ConfigError(f"{where}: must be positive")
            opts[k] = x
        else:
            opts[k] = _int_option(v, where, 1)
    return JobConfig(system, opts)


def load_config(path: str) -> JobConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(data)


def to_dict(job: JobConfig) -> dict:
    """Serialise a job so that :func:`parse_config` reproduces it exactly."""
    s = job.system
    sd = {k: [[repr(float(x)) for x in row] for row in getattr(s, k)] for k in MATRIX_FIELDS}
    sd["T"] = repr(float(s.T))
    for k in VECTOR_FIELDS:
        sd[k] = [repr(float(x)) for x in getattr(s, k)]
    return {"system": sd, "options": dict(job.options)}


# -- reporting ---------------------------------------------------------------

def outward_str(x: float, up: bool) -> str:
    """Shortest decimal string on the outer side of ``x``.

    The decimal value is ``<= x`` (``up=False``) or ``>= x`` (``up=True``)
    and reads back as ``x`` when that is possible with at most 17
    significant digits; otherwise the exact binary value is written.
    """
    x = float(x)
    if x == 0.0 or not math.isfinite(x):
        return repr(x)
    exact = Decimal(x)
    rounding = ROUND_CEILING if up else ROUND_FLOOR
    for prec in range(1, 18):
        d = Context(prec=prec, rounding=rounding).plus(exact)
        if float(d) == x:
            return _dec_str(d)
    return _dec_str(exact)


_EXACT = Context(prec=1100)  # wide enough for any double, so never rounds


def _dec_str(d: Decimal) -> str:
    d = d.normalize(_EXACT)
    return format(d, "e") if abs(d.adjusted()) > 6 else format(d, "f")


def _interval_dict(iv):
    if iv is None:
        return None
    return {"lo": outward_str(iv.lo, False), "hi": outward_str(iv.hi, True)}


@dataclass
class RunResult:
    verdict: str
    reason: str
    mode: str
    certificate: object = None
    approx: object = None
    search: object = None
    timing: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_STABLE if self.verdict == STABLE else EXIT_UNKNOWN


def run_job(job: JobConfig) -> RunResult:
    opts = job.options
    mode = opts["mode"]
    sys_ = job.system
    timing = {}
    t0 = time.perf_counter()
    dec = decompose(sys_)
    search = beta_search(sys_, dec, iterations=opts["heuristic_iterations"],
                         tol=opts["lmi_tolerance"])
    timing["synthesis_s"] = time.perf_counter() - t0
    if not search.ok:
        rho = spectral_radius(dec.A_nominal)
        reason = (f"nominal spectral radius {rho:.6g} >= 1" if rho >= 1.0
                  else f"no Lyapunov matrix found ({search.status})")
        cert = None
        if mode in ("verified", "both"):
            # still report verified norms, measured with P = I
            t = time.perf_counter()
            cert = certify(sys_, np.eye(sys_.n), order=opts["taylor_order"], dec=dec)
            timing["certify_s"] = time.perf_counter() - t
        return RunResult(UNKNOWN, reason, mode, cert, search=search, timing=timing)
    cert = approx = None
    if mode in ("approx", "both"):
        t = time.perf_counter()
        approx = approx_certify(sys_, search.K, samples=opts["approx_samples"], dec=dec)
        timing["approx_s"] = time.perf_counter() - t
    if mode in ("verified", "both"):
        t = time.perf_counter()
        cert = certify(sys_, search.K, order=opts["taylor_order"], dec=dec)
        timing["certify_s"] = time.perf_counter() - t
        verdict, reason = cert.verdict, cert.reason
    elif approx.rho_tilde < 1.0:
        verdict, reason = STABLE, "approximate: sampled rho_tilde < 1 (not verified)"
    else:
        verdict, reason = UNKNOWN, "approximate: sampled rho_tilde >= 1"
    return RunResult(verdict, reason, mode, cert, approx, search, timing)


def report_dict(res: RunResult) -> dict:
    out = {
        "verdict": res.verdict,
        "reason": res.reason,
        "mode": res.mode,
        "verified": res.certificate is not None,
    }
    cert = res.certificate
    if cert is not None:
        out["rho_n"] = _interval_dict(cert.rho_n)
        out["rho_tilde"] = _interval_dict(cert.rho_tilde)
        out["taylor_order"] = cert.order
        out["cges"] = None if cert.cges is None else {
            "lambda": outward_str(cert.cges.lam, True),
            "D": outward_str(cert.cges.D, True),
        }
        rows = [] if cert.sensitivity is None else cert.sensitivity.rows
        out["sensitivity"] = [{"channel": str(k), "bound_hi": outward_str(v, True)}
                              for k, v in rows]
        out["sensitivity_note"] = "" if cert.sensitivity is None else cert.sensitivity.note
    if res.approx is not None:
        out["rho_n_approx"] = repr(res.approx.rho_n)
        out["rho_tilde_approx"] = repr(res.approx.rho_tilde)
        out["approx_samples"] = res.approx.samples
        if cert is None:
            rows = sorted(res.approx.bounds.items(), key=lambda kv: (-kv[1], kv[0].sort_key))
            out["sensitivity"] = [{"channel": str(k), "bound_approx": repr(v)} for k, v in rows]
            out["sensitivity_note"] = NO_SENSITIVITY if all(v == 0 for _, v in rows) else ""
    if res.search is not None and res.search.K is not None:
        out["P_factor"] = [[repr(float(x)) for x in row] for row in res.search.K]
        out["synthesis"] = {"fallback": res.search.fallback, "rho_bar": repr(res.search.rho_bar),
                            "gamma": repr(float(res.search.gamma))}
    out["timing"] = {k: round(v, 6) for k, v in res.timing.items()}
    return out


def report_text(res: RunResult) -> str:
    lines = [f"verdict: {res.verdict}"]
    if res.reason:
        lines.append(f"reason: {res.reason}")
    cert = res.certificate
    if cert is not None and cert.rho_n is not None:
        lines.append(f"rho_n      in [{outward_str(cert.rho_n.lo, False)}, {outward_str(cert.rho_n.hi, True)}]")
        lines.append(f"rho_tilde  in [{outward_str(cert.rho_tilde.lo, False)}, "
                     f"{outward_str(cert.rho_tilde.hi, True)}]")
        if cert.cges is not None:
            lines.append(f"CGES: lambda = {outward_str(cert.cges.lam, True)} 1/s, "
                         f"D = {outward_str(cert.cges.D, True)}")
    if res.approx is not None:
        lines.append(f"rho_tilde_approx = {res.approx.rho_tilde!r} "
                     f"({res.approx.samples} samples, {res.timing.get('approx_s', 0.0):.3f} s)")
    if cert is not None and cert.sensitivity is not None:
        lines.append("sensitivity (deviation bound, upper end):")
        if cert.sensitivity.note:
            lines.append(f"  {cert.sensitivity.note}")
        for k, v in cert.sensitivity.rows:
            lines.append(f"  {str(k):<12} {outward_str(v, True)}")
    for k, v in res.timing.items():
        lines.append(f"{k.replace('_s', '')} time: {v:.3f} s")
    return "\n".join(lines) + "\n"


# -- entry point -------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="verify", description="Certify exponential stability of a sampled-data "
                 "control loop under bounded sensor/actuator timing deviations.")
    ap.add_argument("config", help="JSON job description")
    ap.add_argument("--mode", choices=MODES, help="verified (default), approx or both")
    ap.add_argument("--taylor-order", type=int, metavar="N", help="Taylor terms in h (default 10)")
    ap.add_argument("--samples", type=int, metavar="N", help="samples per channel in approx mode")
    ap.add_argument("--json", action="store_true", help="machine-readable report")
    ap.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = load_config(args.config)
        if args.mode is not None:
            job.options["mode"] = args.mode
        if args.taylor_order is not None:
            job.options["taylor_order"] = _int_option(args.taylor_order, "--taylor-order", 1)
        if args.samples is not None:
            job.options["approx_samples"] = _int_option(args.samples, "--samples", 1)
    except ConfigError as exc:
        print(f"verify: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    res = run_job(job)
    text = (json.dumps(report_dict(res), indent=2) + "\n") if args.json else report_text(res)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"verify: error: {args.out}: {exc.strerror}", file=sys.stderr)
            return EXIT_ERROR
    else:
        sys.stdout.write(text)
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
