"""Command-line front end.

    rdiag-brown cdf --measure qc.json --grid 0.05:0.95:19
    rdiag-brown det --measure m.json --lambda 3,0
    rdiag-brown consistency --measure m.json --tol cdf_route=1e-10

Exit status is 0 on success, 1 when a computation or validation fails and 2
on bad input.  Failures write ``{"code", "message", "context"}`` as JSON to
standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import brown, matrix_oracle, subordination
from .errors import (
    DiracMeasure,
    InputError,
    NegativeDensity,
    NegativeSupport,
    NonIntegrable,
    NonNormalized,
    RDiagError,
    RegimeError,
    ToleranceExceeded,
)
from .measures import MeasureRPlus, is_dirac, lambda_bounds, load_measure, moment, pushforward_square
from .subordination import INFINITE, KFunction, Regime, Unbounded, classify

COMMANDS = ("cdf", "density", "det", "subord", "moments", "validate-mc", "consistency")

DEFAULT_TOLERANCES = {
    "cdf_route": 1e-9,
    "log_potential": 1e-6,
    "gradient": 1e-6,
    "solver": 1e-9,
    "quadrature": 1e-9,
    "ks": 0.07,
    "h": 2e-2,
    "trace": 5e-2,
}

INPUT_ERRORS = (InputError, NonNormalized, NegativeSupport, NegativeDensity, NonIntegrable)

ERROR_SCHEMA = {
    "type": "object",
    "required": ["code", "message", "context"],
    "properties": {
        "code": {"type": "string"},
        "message": {"type": "string"},
        "context": {"type": "object"},
    },
    "additionalProperties": False,
}

_num_or_tag = {"anyOf": [{"type": "number"}, {"enum": ["+inf", "-inf"]}]}

ROWS_SCHEMA = {
    "type": "object",
    "required": ["command", "columns", "rows"],
    "properties": {
        "command": {"type": "string"},
        "columns": {"type": "array", "items": {"type": "string"}},
        "rows": {"type": "array", "items": {"type": "array", "items": _num_or_tag}},
        "summary": {"type": "object"},
    },
}

MOMENTS_SCHEMA = {
    "type": "object",
    "required": ["lambda1", "lambda2", "zero_mass", "dirac", "regimes"],
    "properties": {
        "lambda1": {"type": "number"},
        "lambda2": _num_or_tag,
        "zero_mass": {"type": "number"},
        "mass": {"type": "number"},
        "dirac": {"type": "boolean"},
        "kind": {"type": "string"},
        "n_nodes": {"type": "integer"},
        "regimes": {"type": "object"},
    },
}

CONSISTENCY_SCHEMA = {
    "type": "object",
    "required": ["passed", "checks"],
    "properties": {
        "passed": {"type": "boolean"},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "max_error", "tolerance", "passed"],
                "properties": {
                    "name": {"type": "string"},
                    "max_error": {"type": ["number", "null"]},
                    "tolerance": {"type": "number"},
                    "passed": {"type": "boolean"},
                    "skipped": {"type": "string"},
                    "error": ERROR_SCHEMA,
                    "seconds": {"type": "number"},
                },
            },
        },
    },
}

MC_SCHEMA = {
    "type": "object",
    "required": ["n", "n_samples", "seed", "ks", "per_lambda"],
    "properties": {
        "n": {"type": "integer"},
        "n_samples": {"type": "integer"},
        "seed": {"type": "integer"},
        "model": {"type": "string"},
        "ks": {"type": ["number", "null"]},
        "ks_tolerance": {"type": "number"},
        "passed": {"type": "boolean"},
        "per_lambda": {"type": "array", "items": {"type": "object"}},
    },
}

SCHEMAS = {
    "error": ERROR_SCHEMA,
    "rows": ROWS_SCHEMA,
    "moments": MOMENTS_SCHEMA,
    "consistency": CONSISTENCY_SCHEMA,
    "validate-mc": MC_SCHEMA,
}


@dataclass
class RunConfig:
    command: str
    measure_path: Optional[str] = None
    grid: Optional[tuple] = None
    t: Optional[float] = None
    lam: Optional[complex] = None
    output_path: Optional[str] = None
    fmt: str = "csv"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 0
    n: int = 1000
    n_samples: int = 1
    model: str = "rdiagonal"


# ------------------------------------------------------------- parsing


def parse_grid(text: str) -> tuple:
    parts = text.split(":")
    try:
        if len(parts) != 3:
            raise ValueError
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InputError("grid must be rmin:rmax:n", grid=text) from None
    if not (0 < lo <= hi and n >= 1):
        raise InputError("grid bounds must be positive and ordered with n >= 1", grid=text)
    if n > 1 and lo == hi:
        raise InputError("grid with n > 1 needs rmin < rmax", grid=text)
    return lo, hi, n


def parse_lambda(text: str) -> complex:
    try:
        re_, im_ = (float(x) for x in text.split(","))
    except ValueError:
        raise InputError("lambda must be re,im", value=text) from None
    return complex(re_, im_)


def parse_tolerances(items) -> dict:
    tol = dict(DEFAULT_TOLERANCES)
    for item in items or ():
        name, sep, val = item.partition("=")
        if not sep or name not in tol:
            raise InputError("tolerance override must be name=value with a known name", item=item, known=sorted(tol))
        try:
            tol[name] = float(val)
        except ValueError:
            raise InputError("tolerance value is not a number", item=item) from None
    return tol


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rdiag-brown", description="Brown measures of R-diagonal operators.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--measure", dest="measure_path", help="JSON measure specification")
    p.add_argument("--grid", help="rmin:rmax:n")
    p.add_argument("--lambda", dest="lam", help="re,im")
    p.add_argument("--t", type=float)
    p.add_argument("--out", dest="output_path")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", action="append", default=[], metavar="NAME=VAL")
    p.add_argument("--n", type=int, default=1000, help="matrix size for validate-mc")
    p.add_argument("--samples", dest="n_samples", type=int, default=1)
    p.add_argument("--model", choices=("rdiagonal", "ginibre"), default="rdiagonal")
    return p


def config_from_args(argv) -> RunConfig:
    p = build_parser()
    try:
        ns = p.parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:
            raise
        raise InputError("could not parse command line", argv=list(argv)) from None
    fmt = ns.fmt or ("json" if ns.command in ("moments", "validate-mc", "consistency") else "csv")
    if ns.seed < 0 or ns.seed >= 2 ** 64:
        raise InputError("seed must be an unsigned 64-bit integer", seed=ns.seed)
    return RunConfig(
        command=ns.command,
        measure_path=ns.measure_path,
        grid=parse_grid(ns.grid) if ns.grid else None,
        t=ns.t,
        lam=parse_lambda(ns.lam) if ns.lam else None,
        output_path=ns.output_path,
        fmt=fmt,
        tolerances=parse_tolerances(ns.tol),
        seed=ns.seed,
        n=ns.n,
        n_samples=ns.n_samples,
        model=ns.model,
    )


# -------------------------------------------------------------- output


def _jsonable(x):
    if isinstance(x, Unbounded):
        return x.value
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, float) and math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _fmt_cell(x) -> str:
    if isinstance(x, Unbounded):
        return x.value
    return format(float(x), ".16e")


def render(payload: dict, fmt: str) -> str:
    if fmt == "json" or "rows" not in payload:
        return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(payload["columns"])
    for row in payload["rows"]:
        w.writerow([_fmt_cell(c) for c in row])
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(target.parent), prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ------------------------------------------------------------ commands


def _measure(cfg: RunConfig) -> MeasureRPlus:
    if not cfg.measure_path:
        raise InputError("--measure is required", command=cfg.command)
    path = Path(cfg.measure_path)
    if not path.is_file():
        err = InputError("measure file not found", path=str(path))
        err.code = "input_not_found"
        raise err
    return load_measure(path)


def _grid(cfg: RunConfig) -> np.ndarray:
    if cfg.grid is None:
        raise InputError("--grid is required", command=cfg.command)
    lo, hi, n = cfg.grid
    return np.linspace(lo, hi, n)


def _summary(kf: KFunction) -> dict:
    b = kf.bounds
    lam2 = INFINITE if math.isinf(b.lambda2) else b.lambda2
    return {
        "lambda1": b.lambda1,
        "lambda2": lam2,
        "zero_mass": kf.base.zero_atom,
        "regimes": {"inner": [0.0, b.lambda1], "annulus": [b.lambda1, lam2], "outer": [lam2, INFINITE]},
    }


def cmd_cdf(cfg: RunConfig, density_only: bool = False) -> dict:
    mu = _measure(cfg)
    kf = KFunction(mu)
    kf.require_non_dirac()
    mu_sq = pushforward_square(mu)
    rows = []
    for r in _grid(cfg):
        inside = classify(r, kf.bounds) is Regime.ANNULUS
        if density_only and not inside:
            raise RegimeError("density grid must lie inside the annulus", r=float(r),
                                    lambda1=kf.bounds.lambda1, lambda2=kf.bounds.lambda2)
        d = 2 * math.pi * r * brown.radial_density(kf, r, mu_sq) if inside else 0.0
        rows.append([r, brown.radial_cdf(kf, r), d])
    return {"command": cfg.command, "columns": ["r", "cdf", "density"], "rows": rows, "summary": _summary(kf)}


def cmd_det(cfg: RunConfig) -> dict:
    mu = _measure(cfg)
    kf = KFunction(mu)
    kf.require_non_dirac()
    if cfg.lam is None and cfg.grid is None:
        raise InputError("det needs --lambda or --grid")
    phase = 1.0 + 0j
    if cfg.lam is not None and cfg.lam != 0:
        phase = cfg.lam / abs(cfg.lam)
    lams = [cfg.lam] if cfg.grid is None else [r * phase for r in _grid(cfg)]
    t = cfg.t or 0.0
    if t < 0:
        raise InputError("t must be >= 0", t=t)
    rows = []
    for lam in lams:
        val = brown.fk_det_regularized(kf, lam, t) if t > 0 else brown.fk_det(kf, lam)
        rows.append([lam.real, lam.imag, t, val.log_delta])
    return {"command": "det", "columns": ["re_lambda", "im_lambda", "t", "log_delta"], "rows": rows, "summary": _summary(kf)}


def cmd_subord(cfg: RunConfig) -> dict:
    mu = _measure(cfg)
    kf = KFunction(mu)
    kf.require_non_dirac()
    if cfg.t is None or not cfg.t > 0:
        raise InputError("subord needs --t > 0", t=cfg.t)
    rows = []
    for r in _grid(cfg):
        res = kf.solve(r, cfg.t)
        fp = subordination.fixed_point_omega1(kf, r, cfg.t)
        rows.append([r, cfg.t, res.s, res.omega2.imag, fp.imag, res.residual])
    cols = ["r", "t", "s", "omega2_im", "omega1_im_fixed_point", "residual"]
    return {"command": "subord", "columns": cols, "rows": rows, "summary": _summary(kf)}


def cmd_moments(cfg: RunConfig) -> dict:
    mu = _measure(cfg)
    b = lambda_bounds(mu)
    lam2 = INFINITE if math.isinf(b.lambda2) else b.lambda2
    out = {
        "lambda1": b.lambda1,
        "lambda2": lam2,
        "zero_mass": mu.zero_atom,
        "mass": mu.mass,
        "dirac": bool(b.dirac),
        "kind": mu.kind,
        "n_nodes": int(mu.n_nodes),
        "regimes": {"inner": [0.0, b.lambda1], "annulus": [b.lambda1, lam2], "outer": [lam2, INFINITE]},
    }
    return out


def cmd_validate_mc(cfg: RunConfig) -> dict:
    mu = None if cfg.model == "ginibre" and not cfg.measure_path else _measure(cfg)
    lams = (cfg.lam,) if cfg.lam is not None else ()
    ts = (cfg.t,) if cfg.t is not None else ()
    mc = matrix_oracle.McConfig(cfg.n, cfg.n_samples, cfg.seed, lams, ts, cfg.model)
    if cfg.model == "ginibre":
        cdf = lambda r: np.clip(np.asarray(r) ** 2, 0.0, 1.0)  # noqa: E731
        h_an = tr_an = None
    else:
        kf = KFunction(mu)
        kf.require_non_dirac()
        cdf = lambda r: brown.radial_cdf(kf, r) if r > 0 else 0.0  # noqa: E731
        h_an = lambda lam, t: kf.h(kf.solve(abs(lam), t).s) if lam != 0 else kf.h(t)  # noqa: E731
        tr_an = (lambda lam, t: brown.resolvent_traces(kf, lam, t)[0]) if all(l != 0 for l in lams) else None  # noqa: E731,E741
    rep = matrix_oracle.run_ensemble(mu, mc, cdf, h_an, tr_an)
    out = rep.to_dict()
    out["model"] = cfg.model
    out["ks_tolerance"] = cfg.tolerances["ks"]
    ok = rep.ks_to_analytic <= cfg.tolerances["ks"]
    for row in out["per_lambda"]:
        ok &= row.get("h_error", 0.0) <= cfg.tolerances["h"]
        ok &= row.get("trace_error", 0.0) <= cfg.tolerances["trace"]
    out["passed"] = bool(ok)
    return out


# ----------------------------------------------------- consistency suite


def _check(name, fn, tol, skip=None):
    if skip:
        return {"name": name, "max_error": None, "tolerance": tol, "passed": True, "skipped": skip}
    t0 = time.perf_counter()
    try:
        err = float(fn())
    except (RDiagError, ArithmeticError) as exc:
        return {"name": name, "max_error": None, "tolerance": tol, "passed": False,
                "error": error_payload(exc), "seconds": time.perf_counter() - t0}
    return {"name": name, "max_error": err, "tolerance": tol, "passed": bool(err <= tol),
            "seconds": time.perf_counter() - t0}


def annulus_grid(kf: KFunction, n: int) -> np.ndarray:
    lam1, lam2 = kf.bounds.lambda1, kf.bounds.lambda2
    if math.isinf(lam2):
        lam2 = brown.default_r_grid(kf, 2)[-1] * 1.5
    return np.linspace(lam1, lam2, n + 2)[1:-1]


def check_cdf_routes(kf: KFunction, n: int = 50) -> float:
    mu_sq = pushforward_square(kf.base)
    return max(abs(brown.radial_cdf(kf, r) - brown.radial_cdf_via_s_transform(kf, r, mu_sq)) for r in annulus_grid(kf, n))


def check_gradient(kf: KFunction, n: int = 10) -> float:
    worst = 0.0
    for r in annulus_grid(kf, n):
        h = 1e-5 * r
        up = brown.fk_det(kf, r + h).log_delta
        dn = brown.fk_det(kf, r - h).log_delta
        fd = (up - dn) / (2 * h)
        worst = max(worst, abs(fd - brown.radial_cdf(kf, r) / r))
    return worst


def check_solver(kf: KFunction, n: int = 20) -> float:
    worst = 0.0
    lam2 = kf.bounds.lambda2 if math.isfinite(kf.bounds.lambda2) else annulus_grid(kf, 2)[-1]
    for r in np.linspace(0.05, 1.5, n) * lam2:
        for t in np.logspace(-3, 3, n):
            s = kf.solve(r, t).s
            w = subordination.fixed_point_omega1(kf, r, t)
            worst = max(worst, abs(w.imag - s) / max(1.0, s))
    return worst


def check_quadrature(kf: KFunction, n: int = 20) -> float:
    """CDF change when the quadrature is rebuilt with twice the nodes."""
    mu = kf.base
    fine = KFunction(mu.rebuild(2 * mu.n_nodes))
    grid = annulus_grid(kf, n)
    return max(abs(brown.radial_cdf(kf, r) - brown.radial_cdf(fine, r)) for r in grid)


def consistency_suite(mu: MeasureRPlus, tolerances: Optional[dict] = None) -> dict:
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    if is_dirac(mu):
        raise DiracMeasure("consistency checks need a non-Dirac law of |T|")
    kf = KFunction(mu)
    compact = math.isfinite(kf.bounds.lambda2)
    checks = [
        _check("cdf_route_agreement", lambda: check_cdf_routes(kf), tol["cdf_route"]),
        _check("log_potential", lambda: brown.log_potential_consistency(None, kf, brown.regime_spanning_grid(kf)),
               tol["log_potential"], None if compact else "needs compact support"),
        _check("gradient", lambda: check_gradient(kf), tol["gradient"]),
        _check("solver_equivalence", lambda: check_solver(kf), tol["solver"]),
        _check("quadrature_resolution", lambda: check_quadrature(kf), tol["quadrature"],
               None if mu.rebuild is not None else "measure is not a discretized density"),
    ]
    return {"passed": all(c["passed"] for c in checks), "checks": checks, **_summary(kf)}


def cmd_consistency(cfg: RunConfig) -> dict:
    return consistency_suite(_measure(cfg), cfg.tolerances)


HANDLERS = {
    "cdf": cmd_cdf,
    "density": lambda cfg: cmd_cdf(cfg, density_only=True),
    "det": cmd_det,
    "subord": cmd_subord,
    "moments": cmd_moments,
    "validate-mc": cmd_validate_mc,
    "consistency": cmd_consistency,
}


# --------------------------------------------------------------- driver


def error_payload(exc: Exception) -> dict:
    if isinstance(exc, RDiagError):
        return {"code": exc.code, "message": str(exc), "context": _jsonable(_safe_context(exc.context))}
    return {"code": "internal_error", "message": f"{type(exc).__name__}: {exc}", "context": {}}


def _safe_context(ctx: dict) -> dict:
    out = {}
    for k, v in ctx.items():
        try:
            json.dumps(_jsonable(v))
            out[k] = v
        except (TypeError, ValueError):
            out[k] = repr(v)
    return out


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        payload = HANDLERS[cfg.command](cfg)
        text = render(payload, cfg.fmt)
        if cfg.output_path:
            write_atomic(cfg.output_path, text)
        else:
            stdout.write(text)
        if payload.get("passed") is False:
            failed = [c["name"] for c in payload.get("checks", []) if not c["passed"]]
            raise ToleranceExceeded("validation failed", failed_checks=failed)
        return 0
    except INPUT_ERRORS as exc:
        stderr.write(json.dumps(error_payload(exc)) + "\n")
        return 2
    except (RDiagError, ArithmeticError, ValueError) as exc:
        stderr.write(json.dumps(error_payload(exc)) + "\n")
        return 1


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = config_from_args(argv)
    except INPUT_ERRORS as exc:
        sys.stderr.write(json.dumps(error_payload(exc)) + "\n")
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
