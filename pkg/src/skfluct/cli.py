"""Batch runner: one subcommand per verification suite, CSV or JSON output.

Configuration is merged as built-in defaults < ``--config`` file < flags and
the merged result is echoed in the output, so feeding an output file back via
``--config`` reruns the same experiment. The process exits with status 1 iff
some inequality row is unsatisfied.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import bounds, estimators
from .coupled import MAX_N_PAIR
from .sk_core import MAX_N

log = logging.getLogger("skfluct")

SUBCOMMANDS = (
    "variance-scan",
    "identity-check",
    "lemma-check",
    "interpolation-check",
    "derivative-check",
    "mgf-check",
    "monotonicity",
    "annealed-mgf",
)

_KEYS = ["subcommand", "n", "beta", "t", "lambda", "k", "seed"]
_VARIANCE_COLS = _KEYS + [
    "var_direct", "var_direct_stderr", "var_identity", "var_identity_stderr",
    "difference", "window", "var_over_n", "var_over_n_stderr", "scaling_window",
    "envelope_c1", "ratio", "satisfied", "note", "seconds",
]
COLUMNS = {
    "variance-scan": _VARIANCE_COLS,
    "identity-check": _VARIANCE_COLS,
    "lemma-check": _KEYS + ["estimate", "stderr", "bound", "window", "satisfied", "seconds"],
    "interpolation-check": _KEYS + ["lhs", "rhs", "difference", "stderr", "window", "satisfied", "seconds"],
    "derivative-check": _KEYS + [
        "h", "finite_difference", "ibp", "difference", "stderr", "window", "slack", "satisfied", "seconds",
    ],
    "mgf-check": _KEYS + ["x", "exact", "bound", "satisfied", "strict", "seconds"],
    "monotonicity": _KEYS + [
        "t_next", "value", "value_stderr", "step", "step_stderr", "window", "satisfied", "seconds",
    ],
    "annealed-mgf": _KEYS + ["x", "estimate", "stderr", "exact", "difference", "window", "satisfied", "seconds"],
}


@dataclass
class ExperimentConfig:
    subcommand: str
    n: list = field(default_factory=lambda: [8])
    beta: list = field(default_factory=lambda: ["critical"])
    near: list | None = None
    samples: int = 2000
    seed: int = 20240601
    nodes: int = 16
    threads: int | None = None
    out: str | None = None
    format: str = "csv"
    t_grid: list | None = None
    t_fractions: list | None = None
    lambda_grid: list | None = None
    points: list | None = None
    x_grid: list | None = None
    x: float = 0.3
    h: float = 1e-4
    richardson: bool = False
    identity: bool = True

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def betas(self, n: int) -> list[float]:
        if self.near is not None:
            alpha, d = self.near
            return [bounds.near_critical_beta(n, alpha, d)]
        return [bounds.beta_critical() if str(b).lower() in ("critical", "c") else float(b) for b in self.beta]


# Per-subcommand defaults matching the acceptance grids.
DEFAULTS: dict[str, dict[str, Any]] = {
    "variance-scan": {"n": [4, 8, 12, 16], "samples": 4000},
    "identity-check": {"n": [10], "samples": 4000},
    "lemma-check": {
        "n": [6, 8, 10], "beta": [0.3, "critical"],
        "t_fractions": [round(0.1 * i, 10) for i in range(10)],
    },
    "interpolation-check": {
        "n": [8],
        "points": [[0.1, 0.1], [0.2, 0.3], [0.4, 0.2], [0.3, 0.5], [0.6, 0.2], [0.8, 0.1]],
    },
    "derivative-check": {"n": [6], "samples": 4000, "t_grid": [0.25, 0.5, 0.75], "lambda_grid": [0.0, 0.1]},
    "mgf-check": {"n": list(range(1, 31)), "x_grid": [round(0.05 * i, 10) for i in range(1, 10)]},
    "monotonicity": {"n": [8], "t_grid": [i / 8 for i in range(9)]},
    "annealed-mgf": {"n": [6], "samples": 5000, "x": 0.3},
}


def _row(cfg: ExperimentConfig, n, beta, t=None, lam=None, stochastic=True, **rest) -> dict:
    row = {
        "subcommand": cfg.subcommand, "n": n, "beta": beta, "t": t, "lambda": lam,
        "k": cfg.samples if stochastic else None, "seed": cfg.seed if stochastic else None,
    }
    row.update(rest)
    return row


def _fit_log_slope(ns, variances) -> float | None:
    if len(ns) < 2:
        return None
    slope, _ = np.polyfit(np.log(ns), variances, 1)
    return float(slope)


def _variance_rows(cfg: ExperimentConfig, with_identity: bool) -> tuple[list[dict], dict]:
    rows, summary_pts = [], []
    prev: tuple[float, float] | None = None
    rule = estimators.gauss_legendre(cfg.nodes)
    regime = bounds.NearCritical(*cfg.near) if cfg.near is not None else "critical"
    for n in cfg.n:
        cap = MAX_N
        if n < 1 or n > cap:
            log.warning("n=%d outside [1, %d]; skipped", n, cap)
            rows.append(_row(cfg, n, None, note=f"n outside [1, {cap}]"))
            continue
        for beta in cfg.betas(n):
            start = time.perf_counter()
            if with_identity:
                chk = estimators.identity_check(n, beta, cfg.samples, rule, cfg.seed, cfg.threads)
                direct = chk.direct
                extra = dict(
                    var_identity=chk.identity.value, var_identity_stderr=chk.identity.stderr,
                    difference=chk.comparison.difference, window=chk.comparison.window,
                )
                ok = chk.comparison.agrees()
            else:
                direct = estimators.variance_direct(n, beta, cfg.samples, cfg.seed, cfg.threads)
                extra, ok = {}, True
            var_n, var_n_err = direct.variance / n, direct.stderr_variance / n
            scaling_window = None
            if prev is not None and cfg.subcommand == "variance-scan":
                scaling_window = 3.0 * math.hypot(var_n_err, prev[1])
                ok = ok and var_n <= prev[0] + scaling_window
            prev = (var_n, var_n_err)
            envelope = bounds.theorem_envelope(n, regime)
            rows.append(_row(
                cfg, n, beta,
                var_direct=direct.variance, var_direct_stderr=direct.stderr_variance,
                var_over_n=var_n, var_over_n_stderr=var_n_err, scaling_window=scaling_window,
                envelope_c1=envelope, ratio=direct.variance / envelope, satisfied=ok,
                seconds=time.perf_counter() - start, **extra,
            ))
            summary_pts.append((n, direct.variance))
    summary = {}
    if summary_pts:
        ns, vs = zip(*summary_pts)
        summary = {
            "empirical_constant": bounds.empirical_constant(ns, vs, regime),
            "log_n_slope": _fit_log_slope(ns, vs),
        }
    return rows, summary


def run_variance_scan(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    return _variance_rows(cfg, with_identity=cfg.identity)


def run_identity_check(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    return _variance_rows(cfg, with_identity=True)


def run_lemma_check(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    rows = []
    for n in cfg.n:
        for beta in cfg.betas(n):
            if cfg.t_grid is not None:
                ts = list(cfg.t_grid)
            else:
                ts = [f / (2 * beta * beta) for f in cfg.t_fractions]
            kept = []
            for t in ts:
                if not 0 <= t <= 1:
                    log.warning("t=%.6g outside [0, 1] at beta=%.6g; skipped", t, beta)
                elif 2 * beta * beta * t > 0.9 + 1e-12:
                    log.warning("2 beta^2 t=%.6g > 0.9; skipped", 2 * beta * beta * t)
                else:
                    kept.append(t)
            if not kept:
                continue
            start = time.perf_counter()
            vals = estimators.replica_values(
                lambda cd: estimators.r2_profile(cd, beta, kept), n, cfg.samples, cfg.seed, cfg.threads
            )
            secs = time.perf_counter() - start
            for j, t in enumerate(kept):
                est = estimators.summarize(vals[:, j], cfg.seed)
                rep = bounds.BoundReport(est.mean, bounds.lemma_bound(n, beta, t), est.stderr_mean)
                rows.append(_row(
                    cfg, n, beta, t, 0.0, estimate=rep.value_estimated, stderr=rep.stderr,
                    bound=rep.value_bound, window=rep.window, satisfied=rep.satisfied, seconds=secs,
                ))
    return rows, {}


def run_interpolation_check(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    rows = []
    for n in cfg.n:
        if n > MAX_N_PAIR:
            log.warning("n=%d above pair-enumeration cap %d; skipped", n, MAX_N_PAIR)
            continue
        for beta in cfg.betas(n):
            pts = []
            for t, lam in cfg.points:
                if 2 * beta * beta * (lam + t) >= 1 or not 0 <= t <= 1:
                    log.warning("(t=%g, lambda=%g) violates 2 beta^2 (lambda+t) < 1; skipped", t, lam)
                else:
                    pts.append((float(t), float(lam)))
            start = time.perf_counter()
            comps = estimators.interpolation_gap(n, beta, pts, cfg.samples, cfg.seed, cfg.threads)
            secs = time.perf_counter() - start
            for (t, lam), c in zip(pts, comps):
                rows.append(_row(
                    cfg, n, beta, t, lam, lhs=c.lhs, rhs=c.rhs, difference=c.difference,
                    stderr=c.stderr, window=c.window, satisfied=c.at_most(), seconds=secs,
                ))
    return rows, {}


def run_derivative_check(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    rows = []
    pts = [(float(t), float(lam)) for lam in cfg.lambda_grid for t in cfg.t_grid]
    slack = 10.0 * cfg.h**2
    for n in cfg.n:
        for beta in cfg.betas(n):
            start = time.perf_counter()
            comps = estimators.derivative_gap(
                n, beta, pts, cfg.samples, cfg.seed, h=cfg.h, richardson=cfg.richardson, threads=cfg.threads
            )
            secs = time.perf_counter() - start
            for (t, lam), c in zip(pts, comps):
                rows.append(_row(
                    cfg, n, beta, t, lam, h=cfg.h, finite_difference=c.lhs, ibp=c.rhs,
                    difference=c.difference, stderr=c.stderr, window=c.window, slack=slack,
                    satisfied=c.agrees(slack), seconds=secs,
                ))
    return rows, {}


def run_mgf_check(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    rows = []
    for n in cfg.n:
        for x in cfg.x_grid:
            start = time.perf_counter()
            exact = bounds.rademacher_mgf_exact(n, x)
            bound = bounds.mgf_bound(x)
            rows.append(_row(
                cfg, n, None, stochastic=False, x=x, exact=exact, bound=bound,
                satisfied=exact <= bound, strict=exact < bound, seconds=time.perf_counter() - start,
            ))
    return rows, {}


def run_monotonicity(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    rows = []
    for n in cfg.n:
        for beta in cfg.betas(n):
            start = time.perf_counter()
            scan = estimators.monotonicity_scan(n, beta, cfg.samples, cfg.t_grid, cfg.seed, cfg.threads)
            secs = time.perf_counter() - start
            for j, step in enumerate(scan.steps):
                window = 3.0 * step.stderr_mean
                rows.append(_row(
                    cfg, n, beta, scan.t_grid[j], 0.0, t_next=scan.t_grid[j + 1],
                    value=scan.values[j].mean, value_stderr=scan.values[j].stderr_mean,
                    step=step.mean, step_stderr=step.stderr_mean, window=window,
                    satisfied=step.mean >= -window, seconds=secs,
                ))
    return rows, {}


def run_annealed_mgf(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    rows = []
    for n in cfg.n:
        for beta in cfg.betas(n):
            start = time.perf_counter()
            est = estimators.annealed_overlap_mgf(n, cfg.x, cfg.samples, cfg.seed, beta, cfg.threads)
            exact = bounds.rademacher_mgf_exact(n, cfg.x)
            diff = est.mean - exact
            window = 3.0 * est.stderr_mean
            rows.append(_row(
                cfg, n, beta, 0.0, cfg.x / beta**2, x=cfg.x, estimate=est.mean, stderr=est.stderr_mean,
                exact=exact, difference=diff, window=window, satisfied=abs(diff) <= window,
                seconds=time.perf_counter() - start,
            ))
    return rows, {}


RUNNERS = {
    "variance-scan": run_variance_scan,
    "identity-check": run_identity_check,
    "lemma-check": run_lemma_check,
    "interpolation-check": run_interpolation_check,
    "derivative-check": run_derivative_check,
    "mgf-check": run_mgf_check,
    "monotonicity": run_monotonicity,
    "annealed-mgf": run_annealed_mgf,
}


def run(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    return RUNNERS[cfg.subcommand](cfg)


# -- serialisation -----------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def render(cfg: ExperimentConfig, rows: list[dict], summary: dict) -> str:
    cols = COLUMNS[cfg.subcommand]
    if cfg.format == "json":
        doc = {
            "config": cfg.to_dict(),
            "rows": [{c: _jsonable(r.get(c)) for c in cols} for r in rows],
            "summary": {k: _jsonable(v) for k, v in summary.items()},
        }
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(cfg.to_dict(), sort_keys=True) + "\n")
    if summary:
        buf.write("# summary: " + json.dumps({k: _jsonable(v) for k, v in summary.items()}) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        writer.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()


def load_config_file(path: str | Path) -> dict:
    """Read a config object from a plain JSON config, a JSON result or a CSV result."""
    text = Path(path).read_text()
    if text.startswith("# config: "):
        return json.loads(text.splitlines()[0][len("# config: "):])
    doc = json.loads(text)
    return doc["config"] if "config" in doc and "rows" in doc else doc


# -- argument parsing --------------------------------------------------------

def _floats(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x.strip()]


def _ints(s: str) -> list[int]:
    out = []
    for part in s.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _betas(s: str) -> list:
    return [tok if tok.strip().lower() in ("critical", "c") else float(tok) for tok in s.split(",")]


def _points(s: str) -> list[list[float]]:
    return [[float(a) for a in p.split(":")] for p in s.split(",") if p.strip()]


def _near(s: str) -> list[float]:
    vals = _floats(s)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("--near expects alpha,d")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config, or a previous JSON/CSV result to replay")
    common.add_argument("--n", type=_ints, help="system sizes, e.g. 4,8,12 or 1-30")
    temp = common.add_mutually_exclusive_group()
    temp.add_argument("--beta", type=_betas, help="comma list of inverse temperatures; 'critical' allowed")
    temp.add_argument("--critical", action="store_true", help="use beta_c = 1/sqrt(2)")
    temp.add_argument("--near", type=_near, metavar="ALPHA,D", help="beta^2 = 1/2 + d n^-alpha")
    common.add_argument("--samples", type=int, help="disorder realizations k")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--nodes", type=int, help="Gauss-Legendre nodes on [0, 1]")
    common.add_argument("--threads", type=int, help=f"worker threads (default ${estimators.THREADS_ENV} or 1)")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="skfluct", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "variance-scan":
            p.add_argument("--no-identity", dest="identity", action="store_false", default=None)
        if name == "lemma-check":
            p.add_argument("--t-fractions", type=_floats, help="t as fractions of 1/(2 beta^2)")
            p.add_argument("--t-grid", type=_floats, help="explicit t values (overrides --t-fractions)")
        if name == "interpolation-check":
            p.add_argument("--points", type=_points, help="t:lambda pairs, e.g. 0.4:0.2,0.1:0.1")
        if name == "derivative-check":
            p.add_argument("--t-grid", type=_floats)
            p.add_argument("--lambda-grid", type=_floats)
            p.add_argument("--h", type=float, help="finite-difference step")
            p.add_argument("--richardson", action="store_true", default=None)
        if name == "monotonicity":
            p.add_argument("--t-grid", type=_floats)
        if name == "mgf-check":
            p.add_argument("--x-grid", type=_floats)
        if name == "annealed-mgf":
            p.add_argument("--x", type=float)
    return parser


_NOT_CONFIG = {"config", "verbose", "critical"}


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    merged: dict[str, Any] = {"subcommand": args.subcommand}
    merged.update(DEFAULTS[args.subcommand])
    if args.config:
        from_file = load_config_file(args.config)
        if from_file.get("subcommand", args.subcommand) != args.subcommand:
            raise SystemExit(f"config is for {from_file['subcommand']!r}, not {args.subcommand!r}")
        merged.update(from_file)
    flags = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG and v is not None}
    if args.critical:
        flags["beta"] = ["critical"]
    if "beta" in flags:
        merged["near"] = None
    if "near" in flags:
        merged["beta"] = ["critical"]
    merged.update(flags)
    return ExperimentConfig.from_dict(merged)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    cfg = config_from_args(args)
    rows, summary = run(cfg)
    text = render(cfg, rows, summary)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 1 if any(r.get("satisfied") is False for r in rows) else 0


if __name__ == "__main__":
    sys.exit(main())
