"""Command-line front end: one subcommand per experiment.

Each subcommand reads an optional YAML config (unknown keys are rejected),
applies ``--seed`` if given, and writes a CSV whose first two lines are
``# schema: <id>`` and ``# params: <json>``.  Floats are written with a fixed
format so that re-running a config with the same seed reproduces the file
byte for byte.  ``verify`` writes a JSON report instead and exits nonzero
when any check fails.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import yaml

from . import entropy
from .codec import memory_gain_db, run_rd_sweep
from .detect import DetectionModel, estimate_pe
from .entropy import binary_entropy
from .oracle import BudgetExceeded, EnumerationBudget, exact_ar1_conditional_entropy, exact_conditional_entropy, exact_pe
from .rd import slb_ar1_upper, slb_validity
from .reality import Ar1FieldSpec, BscFieldSpec, StaticWallSpec
from .seeding import make_rng
from .walk import WalkParams, recurrence_probs

SCHEMA_VERSION = 1
FLOAT_FMT = ".10g"
STREAM_CLI = 7

EXPERIMENTS = ("fig-bounds-static", "fig-memory", "fig-dynamic-bounds", "fig-dpcm", "verify")


@dataclass
class ExperimentConfig:
    """Parameters shared by all experiments; unset fields take per-experiment defaults.

    ``p_w``, ``p_i``, ``rho`` and ``lams`` are sweep lists.  ``M`` is the
    largest memory, ``t`` the horizon (largest step for ``verify``), ``L``
    the largest block length for ``verify``.
    """

    experiment: str
    p_w: list | None = None
    p_x: float | None = None
    p_i: list | None = None
    rho: list | None = None
    L: int | None = None
    M: int | None = None
    t: int | None = None
    trials: int | None = None
    alphabet: int | None = None
    lams: list | None = None
    grid: int | None = None
    seed: int = 0
    out: str | None = None
    tol: float = 1e-12
    max_terms: int = 10**8

    def params(self) -> dict:
        return dataclasses.asdict(self)


DEFAULTS = {
    "fig-bounds-static": dict(p_w=np.linspace(0.0, 0.5, 26).tolist(), p_x=0.5, L=9),
    "fig-memory": dict(p_w=[0.1, 0.3, 0.5], alphabet=256, M=10_000, p_i=[0.01, 0.1], p_x=0.5, L=8, grid=120),
    "fig-dynamic-bounds": dict(
        p_w=[0.5, 0.05], p_x=0.5, L=8, p_i=np.geomspace(1e-5, 0.5, 100).tolist(),
        rho=[0.1, 0.3, 0.5, 0.7, 0.8, 0.9, 0.95, 0.99], trials=100_000, grid=11,
    ),
    "fig-dpcm": dict(
        p_w=[0.5], rho=[0.99], L=8, t=10_000, trials=20,
        lams=np.geomspace(2e-4, 1e-1, 14).tolist(),
    ),
    "verify": dict(p_w=[0.1, 0.3, 0.5], p_x=0.5, p_i=[0.0, 0.1], rho=[0.5, 0.9], L=3, t=4, alphabet=2),
}

_LIST_FIELDS = {"p_w", "p_i", "rho", "lams"}
_INT_FIELDS = {"L", "M", "t", "trials", "alphabet", "grid", "seed", "max_terms"}
_FLOAT_FIELDS = {"p_x", "tol"}


class ConfigError(ValueError):
    pass


def _coerce(key, value):
    if key in _LIST_FIELDS:
        seq = value if isinstance(value, (list, tuple)) else [value]
        try:
            return [float(v) for v in seq]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key}: expected numbers, got {value!r}") from exc
    if key in _INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(value)
    if key in _FLOAT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if key == "out" and value is not None and not isinstance(value, str):
        raise ConfigError("out: expected a path")
    return value


def build_config(experiment: str, overrides: dict | None = None) -> ExperimentConfig:
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    overrides = dict(overrides or {})
    named = overrides.pop("experiment", experiment)
    if named != experiment:
        raise ConfigError(f"config is for {named!r}, not {experiment!r}")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)} - {"experiment"}
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    values = {**DEFAULTS[experiment], **overrides}
    cfg = ExperimentConfig(experiment, **{k: _coerce(k, v) for k, v in values.items()})
    if cfg.tol <= 0:
        raise ConfigError("tol must be positive")
    return cfg


def load_config(path: str | None, experiment: str) -> ExperimentConfig:
    data = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
    return build_config(experiment, data)


# --- output --------------------------------------------------------------------


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return format(x + 0.0, FLOAT_FMT)  # folds -0.0 into 0
    return str(x)


def render_csv(schema: str, cfg: ExperimentConfig, columns: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {schema}/v{SCHEMA_VERSION}\n")
    buf.write(f"# params: {json.dumps(cfg.params(), sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def write_output(text: str, path: str | None) -> None:
    """Write atomically (temp file + rename), or to stdout without a path."""
    if not path:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pmap(fn, items, threads: int):
    """Order-preserving map; results do not depend on ``threads``."""
    items = list(items)
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _point_seed(seed: int, index: int) -> int:
    return int(make_rng(seed, STREAM_CLI, index).integers(2**62))


def _mc_fano(model: DetectionModel, detector: str, trials: int, seed: int) -> tuple[float, float]:
    """``(pe, H(pe))`` using the upper 95% limit of the Monte-Carlo error rate."""
    report = estimate_pe(model, detector, trials, seed)
    pe = min(report.upper95, 0.5)
    return pe, binary_entropy(pe)


# --- experiments -----------------------------------------------------------------


def fig_bounds_static(cfg: ExperimentConfig, threads: int = 1) -> str:
    """Static binary wall: lower/upper entropy-rate bounds versus ``p_w``.

    The slack is the exact Bayes error of detecting one increment from two
    consecutive frames.
    """
    wall = StaticWallSpec.bernoulli(cfg.p_x)
    h_x = entropy.discrete_entropy(wall.pmf)
    budget = EnumerationBudget(cfg.max_terms)

    def row(p):
        walk = WalkParams(p)
        pe = exact_pe(walk, wall, cfg.L, budget)
        rep = entropy.static_bounds(walk, h_x, binary_entropy(pe))
        return dict(p_w=p, lower=rep.lower, upper=rep.upper, pe_used=pe, fano_slack=rep.terms["fano_slack"])

    rows = _pmap(row, cfg.p_w, threads)
    return render_csv("fig-bounds-static", cfg, ["p_w", "lower", "upper", "pe_used", "fano_slack"], rows)


def _memory_grid(m_max: int, n: int) -> np.ndarray:
    return np.unique(np.round(np.geomspace(1, m_max, n)).astype(np.int64))


def fig_memory(cfg: ExperimentConfig, threads: int = 1) -> str:
    """Memory-``M`` upper bound minus its ``M -> infinity`` limit.

    ``family=static`` uses a uniform wall of ``alphabet`` symbols; ``family=bsc``
    uses a binary field with innovations ``p_i`` and block length ``L``.
    """
    ms = _memory_grid(cfg.M, cfg.grid)
    h_x = math.log2(cfg.alphabet)
    jobs = [("static", p, None) for p in cfg.p_w] + [("bsc", p, pi) for p in cfg.p_w for pi in cfg.p_i]

    def curve(job):
        family, p, pi = job
        walk = WalkParams(p)
        if family == "static":
            bound = entropy.memory_bound_curve(walk, h_x, cfg.M)
            limit = entropy.static_bounds(walk, h_x).upper
        else:
            spec = BscFieldSpec(cfg.p_x, pi)
            bound = entropy.dynamic_memory_curve(walk, spec, cfg.L, cfg.M)
            rate = entropy.dynamic_cond_rate_bsc(entropy.DynamicRateInputs(walk, spec, cfg.L, cfg.tol))
            limit = binary_entropy(p) + rate.value
        return [
            dict(family=family, p_w=p, p_i=pi if pi is not None else math.nan, M=int(m),
                 bound_bits=float(bound[m - 1]), limit_bits=limit, difference_bits=float(bound[m - 1]) - limit)
            for m in ms
        ]

    rows = [r for block in _pmap(curve, jobs, threads) for r in block]
    cols = ["family", "p_w", "p_i", "M", "bound_bits", "limit_bits", "difference_bits"]
    return render_csv("fig-memory", cfg, cols, rows)


def find_crossings(x, y1, y2) -> list[float]:
    """Abscissae where ``y1 - y2`` changes sign (linear interpolation)."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(y1, dtype=float) - np.asarray(y2, dtype=float)
    out = []
    for k in range(d.size - 1):
        if d[k] == 0.0:
            out.append(float(x[k]))
        elif d[k] * d[k + 1] < 0:
            out.append(float(x[k] - d[k] * (x[k + 1] - x[k]) / (d[k + 1] - d[k])))
    if d.size and d[-1] == 0.0:
        out.append(float(x[-1]))
    return out


def fig_dynamic_bounds(cfg: ExperimentConfig, threads: int = 1) -> str:
    """Dynamic-field bounds.

    ``panel=bsc``: bounds versus ``p_i`` for each ``p_w`` with a Monte-Carlo
    Hamming-detector Fano slack.  ``panel=bsc_grid``: upper bound on a
    ``p_i x p_w`` grid.  ``panel=gauss``: differential-entropy bounds versus
    ``rho`` with an MMSE-detector slack.  ``panel=crossing`` lists where the
    first two ``p_w`` upper-bound curves cross.
    """
    L, trials = cfg.L, cfg.trials
    jobs = []
    for p in cfg.p_w:
        jobs += [("bsc", p, pi, math.nan) for pi in cfg.p_i]
    for p in np.linspace(0.0, 0.5, cfg.grid).tolist():
        jobs += [("bsc_grid", p, pi, math.nan) for pi in cfg.p_i]
    for p in cfg.p_w:
        jobs += [("gauss", p, math.nan, r) for r in cfg.rho]

    def row(indexed):
        index, (panel, p, pi, r) = indexed
        walk = WalkParams(p)
        if panel == "gauss":
            spec = Ar1FieldSpec(r)
            value = entropy.dynamic_cond_rate_ar1(entropy.DynamicRateInputs(walk, spec, L, cfg.tol)).value
            detector = "mmse"
        else:
            spec = BscFieldSpec(cfg.p_x, pi)
            value = entropy.dynamic_cond_rate_bsc(entropy.DynamicRateInputs(walk, spec, L, cfg.tol)).value
            detector = "hamming"
        pe = slack = 0.0
        if panel != "bsc_grid" and p > 0:
            pe, slack = _mc_fano(DetectionModel(walk, spec, L), detector, trials, _point_seed(cfg.seed, index))
        rep = entropy.dynamic_bounds(value, walk, slack)
        return dict(panel=panel, p_w=p, p_i=pi, rho=r, lower=rep.lower, upper=rep.upper, pe_used=pe)

    rows = _pmap(row, enumerate(jobs), threads)
    if len(cfg.p_w) >= 2:
        a, b = cfg.p_w[0], cfg.p_w[1]
        ua = [r["upper"] for r in rows if r["panel"] == "bsc" and r["p_w"] == a]
        ub = [r["upper"] for r in rows if r["panel"] == "bsc" and r["p_w"] == b]
        for x in find_crossings(cfg.p_i, ua, ub):
            rows.append(dict(panel="crossing", p_w=math.nan, p_i=x, rho=math.nan, lower=math.nan, upper=math.nan,
                             pe_used=math.nan))
    cols = ["panel", "p_w", "p_i", "rho", "lower", "upper", "pe_used"]
    return render_csv("fig-dynamic-bounds", cfg, cols, rows)


def fig_dpcm(cfg: ExperimentConfig, threads: int = 1) -> str:
    """Operational DPCM curves for one-frame and infinite memory, plus the analytic bound.

    ``series=operational`` rows are measured points; ``series=analytic`` is the
    trajectory-conditional SLB upper bound on an SNR grid with its validity
    flag; ``series=threshold`` holds the SNR above which the bound is valid;
    ``series=gain`` is the infinite-minus-one-frame SNR at matched rates.
    """
    walk, field_spec = WalkParams(cfg.p_w[0]), Ar1FieldSpec(cfg.rho[0])
    points = run_rd_sweep(walk, field_spec, cfg.L, cfg.lams, trials=cfg.trials, horizon=cfg.t, seed=cfg.seed)
    nan = math.nan
    rows = []
    for pt in points:
        rows.append(dict(series="operational", memory=pt.memory, lam=pt.lam, rate=pt.rate, snr_db=pt.snr_db,
                         snr_ci95=pt.snr_ci95, distortion=pt.mse, bound_rate=pt.analytic_rate,
                         valid=pt.analytic_valid))
    validity = slb_validity(field_spec.rho)
    for s in np.arange(0.0, 45.01, 1.0):
        d = 10.0 ** (-s / 10.0)
        pt = slb_ar1_upper(walk, field_spec, cfg.L, d, cfg.tol)
        rows.append(dict(series="analytic", memory="", lam=nan, rate=pt.rate, snr_db=s, snr_ci95=nan,
                         distortion=d, bound_rate=pt.rate, valid=pt.valid))
    rows.append(dict(series="threshold", memory="", lam=nan, rate=nan, snr_db=validity.snr_threshold_db,
                     snr_ci95=nan, distortion=validity.d_max, bound_rate=nan, valid=True))
    grid = np.linspace(1.0, 3.0, 21)
    for r, g in zip(grid, memory_gain_db(points, grid)):
        rows.append(dict(series="gain", memory="", lam=nan, rate=r, snr_db=g, snr_ci95=nan, distortion=nan,
                         bound_rate=nan, valid=not math.isnan(g)))
    cols = ["series", "memory", "lam", "rate", "snr_db", "snr_ci95", "distortion", "bound_rate", "valid"]
    return render_csv("fig-dpcm", cfg, cols, rows)


# --- verify ------------------------------------------------------------------------


def _check(name, params, lower, value, upper, tol):
    ok = bool(lower - tol <= value <= upper + tol)
    return dict(check=name, params=params, lower=lower, value=value, upper=upper, **{"pass": ok})


def verify_checks(cfg: ExperimentConfig, tol: float = 1e-9) -> list[dict]:
    """Oracle sandwich on the tiny grid plus analytic invariants."""
    budget = EnumerationBudget(cfg.max_terms)
    results = []
    realities = [("static_uniform", StaticWallSpec.uniform(cfg.alphabet)),
                 ("static_bernoulli", StaticWallSpec.bernoulli(0.3))]
    realities += [(f"bsc_{pi:g}", BscFieldSpec(cfg.p_x, pi)) for pi in cfg.p_i]
    for p in cfg.p_w:
        walk = WalkParams(p)
        for L in range(2, cfg.L + 1):
            for label, reality in realities:
                params = dict(p_w=p, L=L, reality=label, t_max=cfg.t)
                try:
                    pe = exact_pe(walk, reality, L, budget)
                    exact = exact_conditional_entropy(walk, reality, L, cfg.t, budget)
                except BudgetExceeded as exc:
                    results.append(dict(check="oracle_sandwich", params=params, lower=None, value=None,
                                        upper=None, status="skipped", reason=str(exc), **{"pass": None}))
                    continue
                slack = binary_entropy(pe)
                for t in range(1, cfg.t + 1):
                    rep = entropy.dynamic_bounds_finite(walk, reality, L, t, slack)
                    results.append(_check("oracle_sandwich", {**params, "t": t, "pe": pe},
                                          rep.lower, exact.conditional[t - 1], rep.upper, tol))
            for rho in cfg.rho:
                exact = exact_ar1_conditional_entropy(walk, rho, L, cfg.t)
                total = float(np.sum(entropy.innovation_terms(walk, Ar1FieldSpec(rho), L, cfg.t)))
                results.append(_check("ar1_chain_rule", dict(p_w=p, L=L, rho=rho, t=cfg.t),
                                      total, exact, total, max(tol, 1e-9 * abs(total))))
        for rho in cfg.rho:
            idc = entropy.catalan_sum_identity_check(walk, rho)
            results.append(_check("catalan_identity", dict(p_w=p, rho=rho), -1e-8, idc.residual, 1e-8, 0.0))
        mass = float(recurrence_probs(walk, 2 * cfg.t)[-1])
        results.append(_check("recurrence_mass", dict(p_w=p, t=2 * cfg.t), 0.0, mass, 2 * p, tol))
    return results


def verify_report(cfg: ExperimentConfig, tol: float) -> tuple[str, bool]:
    results = verify_checks(cfg, tol)
    ok = all(r["pass"] is not False for r in results)
    report = {
        "schema": f"verify/v{SCHEMA_VERSION}",
        "params": cfg.params(),
        "tolerance": tol,
        "passed": ok,
        "n_checks": len(results),
        "n_failed": sum(r["pass"] is False for r in results),
        "n_skipped": sum(r["pass"] is None for r in results),
        "results": results,
    }
    return json.dumps(report, indent=1, sort_keys=True, default=float) + "\n", ok


# --- entry point -------------------------------------------------------------------

COMMANDS = {
    "fig-bounds-static": fig_bounds_static,
    "fig-memory": fig_memory,
    "fig-dynamic-bounds": fig_dynamic_bounds,
    "fig-dpcm": fig_dpcm,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plenoptic-rates", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=(COMMANDS.get(name) or verify_checks).__doc__.split("\n")[0])
        sp.add_argument("--config", metavar="PATH", help="YAML config; unknown keys are rejected")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", metavar="PATH", help="output file (default: config 'out', else stdout)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
        sp.add_argument("--verify-tolerance", type=float, default=1e-9, help="slack allowed by verify checks")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command)
    except (ConfigError, OSError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed
    out = args.out or cfg.out
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    if args.command == "verify":
        text, ok = verify_report(cfg, args.verify_tolerance)
        write_output(text, out)
        return 0 if ok else 1
    try:
        text = COMMANDS[args.command](cfg, args.threads)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    write_output(text, out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
