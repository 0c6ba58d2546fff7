"""Benchmark harness: run seed batches, aggregate with confidence bands,
emit CSV traces and self-contained SVG convergence plots."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy import stats

from .ars import ArsConfig, run_ars
from .core import ConfigError, RngHandle
from .greedy import GreedyConfig, run_greedy
from .testfns import bench_function, biased_prior_feed
from .trace import COLUMNS, RunTrace

GREEDY_ALGOS = ("rgf", "prgf", "history_prgf")
ARS_ALGOS = ("ars", "pars_naive", "pars_impl", "pars_est", "history_pars")
PRIOR_MODES = ("none", "historical", "biased")

CSV_HEADER = ("seed",) + COLUMNS


@dataclass
class RunConfig:
    function: str
    dim: int
    algo: str
    q: int
    budget: int
    lhat: Optional[float] = None          # absolute; or use lhat_scale
    lhat_scale: Optional[float] = None    # multiple of the true L
    tau_hat: Union[float, str] = 0.0      # "true" resolves to the function's tau
    mu: float = 1e-6
    seeds: Sequence[int] = (0,)
    prior: str = "none"
    restart: bool = False
    gamma0: Optional[float] = None
    oracle_mode: str = "fd"
    log_every: int = 1
    diagnostics: bool = False
    target_log10: Optional[float] = None
    stop_on_target: bool = False
    label: str = ""
    out: Optional[str] = None

    def __post_init__(self):
        if self.algo not in GREEDY_ALGOS + ARS_ALGOS:
            raise ConfigError(f"unknown algo {self.algo!r}")
        if self.prior not in PRIOR_MODES:
            raise ConfigError(f"prior must be one of {PRIOR_MODES}, got {self.prior!r}")
        if len(self.seeds) < 1:
            raise ConfigError("need at least one seed")
        if self.lhat is None and self.lhat_scale is None:
            raise ConfigError("one of lhat / lhat_scale is required")
        needs_biased = self.algo in ("prgf", "pars_naive", "pars_impl", "pars_est")
        if needs_biased and self.prior != "biased":
            raise ConfigError(f"algo {self.algo!r} requires prior='biased'")
        if self.algo in ("rgf", "ars") and self.prior != "none":
            raise ConfigError(f"algo {self.algo!r} takes no prior")
        if self.algo in ("history_prgf", "history_pars") and self.prior == "biased":
            raise ConfigError(f"algo {self.algo!r} manages its own historical prior")
        if not self.label:
            self.label = self.algo


@dataclass
class Aggregate:
    grid: np.ndarray      # common dd-query grid
    mean: np.ndarray      # seed mean of log10 rel err (or f when no f*)
    lo: np.ndarray        # 95% t-interval
    hi: np.ndarray
    label: str = ""


@dataclass
class BatchResult:
    config: RunConfig
    traces: List[RunTrace]
    aggregate: Aggregate

    def mean_final_log10(self) -> float:
        return float(np.mean([t.rows[-1][4] for t in self.traces]))

    def reach_queries(self) -> List[Optional[int]]:
        return [t.reached_queries for t in self.traces]


def run_single(config: RunConfig, seed: int) -> RunTrace:
    fn = bench_function(config.function, config.dim)
    obj = fn.as_objective()
    if config.lhat is not None:
        lhat = config.lhat
    else:
        if fn.L is None:
            raise ConfigError(f"{fn.name} has no true L; pass an absolute lhat")
        lhat = config.lhat_scale * fn.L
    tau_hat = fn.tau if config.tau_hat == "true" else float(config.tau_hat)

    prior_feed = None
    if config.prior == "biased":
        # dedicated stream so the frame noise is unchanged across prior modes
        prior_feed = biased_prior_feed(fn, RngHandle(seed + 0x9E3779B9))

    common = dict(oracle_mode=config.oracle_mode, mu=config.mu,
                  diagnostics=config.diagnostics, log_every=config.log_every,
                  target_log10=config.target_log10,
                  stop_on_target=config.stop_on_target)
    if config.algo in GREEDY_ALGOS:
        source = {"rgf": "none", "prgf": "external", "history_prgf": "historical"}[config.algo]
        gcfg = GreedyConfig(L_hat=lhat, q=config.q, prior_source=source, budget=config.budget)
        trace = run_greedy(obj, gcfg, seed, prior_feed, **common)
    else:
        acfg = ArsConfig(L_hat=lhat, q=config.q, variant=config.algo, tau_hat=tau_hat,
                         gamma0=config.gamma0, restart=config.restart, budget=config.budget)
        trace = run_ars(obj, acfg, seed, prior_feed, **common)
    trace.label = config.label
    return trace


def _values_for_aggregation(trace: RunTrace) -> np.ndarray:
    v = trace.column("log10_rel_err")
    if np.all(np.isnan(v)):
        v = trace.column("f_value")
    return v


def aggregate_traces(traces: List[RunTrace], label: str = "") -> Aggregate:
    """Resample traces onto the first trace's query grid (last value carried
    forward) and form the seed mean with a 95% t-interval."""
    if not traces:
        raise ConfigError("no traces to aggregate")
    grid = traces[0].column("dd_queries")
    n = len(traces)
    mat = np.empty((n, len(grid)))
    for i, tr in enumerate(traces):
        qs = tr.column("dd_queries")
        vals = _values_for_aggregation(tr)
        idx = np.searchsorted(qs, grid, side="right") - 1
        idx = np.clip(idx, 0, len(qs) - 1)
        mat[i] = vals[idx]
    mean = mat.mean(axis=0)
    if n > 1:
        half = stats.t.ppf(0.975, n - 1) * mat.std(axis=0, ddof=1) / math.sqrt(n)
    else:
        half = np.zeros_like(mean)
    return Aggregate(grid=grid, mean=mean, lo=mean - half, hi=mean + half, label=label)


def run_batch(config: RunConfig) -> BatchResult:
    traces = [run_single(config, s) for s in config.seeds]
    return BatchResult(config=config, traces=traces,
                       aggregate=aggregate_traces(traces, label=config.label))


# -- CSV ---------------------------------------------------------------------

def _fmt(v: float) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return format(v, ".17g")


def emit_csv(traces: List[RunTrace], path: str) -> str:
    try:
        with open(path, "w") as fh:
            fh.write(",".join(CSV_HEADER) + "\n")
            for tr in traces:
                for row in tr.rows:
                    fh.write(",".join([str(tr.seed)] + [_fmt(v) for v in row]) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path


def read_csv(path: str) -> List[RunTrace]:
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if tuple(header) != CSV_HEADER:
                raise ConfigError(f"unexpected CSV header in {path}: {header}")
            by_seed: dict[int, RunTrace] = {}
            for line in fh:
                parts = line.rstrip("\n").split(",")
                seed = int(parts[0])
                vals = [float(p) if p else math.nan for p in parts[1:]]
                tr = by_seed.setdefault(seed, RunTrace(seed=seed))
                tr.rows.append(tuple([int(vals[0]), int(vals[1]), int(vals[2])] + vals[3:]))
    except OSError as exc:
        raise OSError(f"cannot read CSV from {path}: {exc}") from exc
    return list(by_seed.values())


# -- SVG ---------------------------------------------------------------------

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#17becf", "#7f7f7f")
_W, _H = 860, 520
_ML, _MR, _MT, _MB = 70, 20, 20, 50


def _finite(values: np.ndarray, fallback: float) -> np.ndarray:
    out = np.array(values, dtype=float)
    out[~np.isfinite(out)] = fallback
    return out


def emit_svg(aggregates: List[Aggregate], path: str, title: str = "",
             x_label: str = "directional-derivative queries",
             y_label: str = "log10 relative error") -> str:
    """Single self-contained chart: one mean polyline and one shaded
    confidence band per aggregate."""
    if not aggregates:
        raise ConfigError("no aggregates to plot")
    all_y = np.concatenate([np.concatenate([a.lo, a.hi]) for a in aggregates])
    finite_y = all_y[np.isfinite(all_y)]
    y_min = float(finite_y.min()) if finite_y.size else -1.0
    y_max = float(finite_y.max()) if finite_y.size else 0.0
    if y_max == y_min:
        y_max += 1.0
    x_max = max(float(a.grid.max()) for a in aggregates)
    x_min = 0.0

    def sx(x):
        return _ML + (x - x_min) / (x_max - x_min) * (_W - _ML - _MR)

    def sy(y):
        return _H - _MB - (y - y_min) / (y_max - y_min) * (_H - _MT - _MB)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
             f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>']
    # axes and ticks
    parts.append(f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>')
    parts.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>')
    for i in range(6):
        xv = x_min + i * (x_max - x_min) / 5
        parts.append(f'<line x1="{sx(xv):.1f}" y1="{_H - _MB}" x2="{sx(xv):.1f}" '
                     f'y2="{_H - _MB + 5}" stroke="black"/>')
        parts.append(f'<text x="{sx(xv):.1f}" y="{_H - _MB + 18}" text-anchor="middle">'
                     f'{xv:.3g}</text>')
        yv = y_min + i * (y_max - y_min) / 5
        parts.append(f'<line x1="{_ML - 5}" y1="{sy(yv):.1f}" x2="{_ML}" y2="{sy(yv):.1f}" '
                     f'stroke="black"/>')
        parts.append(f'<text x="{_ML - 8}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    parts.append(f'<text x="{(_ML + _W - _MR) / 2}" y="{_H - 12}" text-anchor="middle">{x_label}</text>')
    parts.append(f'<text x="16" y="{(_MT + _H - _MB) / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2})">{y_label}</text>')
    if title:
        parts.append(f'<text x="{(_ML + _W - _MR) / 2}" y="{_MT - 4}" text-anchor="middle">{title}</text>')

    for k, agg in enumerate(aggregates):
        color = _PALETTE[k % len(_PALETTE)]
        lo = _finite(agg.lo, y_min)
        hi = _finite(agg.hi, y_min)
        mean = _finite(agg.mean, y_min)
        band = ("M" + " L".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in zip(agg.grid, hi))
                + " L" + " L".join(f"{sx(x):.1f},{sy(y):.1f}"
                                   for x, y in zip(agg.grid[::-1], lo[::-1])) + " Z")
        parts.append(f'<path class="band" d="{band}" fill="{color}" fill-opacity="0.18" stroke="none"/>')
        pts = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in zip(agg.grid, mean))
        parts.append(f'<polyline class="mean" points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        ly = _MT + 16 + 16 * k
        parts.append(f'<line x1="{_W - _MR - 170}" y1="{ly}" x2="{_W - _MR - 140}" y2="{ly}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{_W - _MR - 134}" y="{ly + 4}">{agg.label}</text>')
    parts.append("</svg>")
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(parts))
    except OSError as exc:
        raise OSError(f"cannot write SVG to {path}: {exc}") from exc
    return path


# -- presets -------------------------------------------------------------------

DEFAULT_SEEDS = tuple(range(10))
# 11 dd queries per iteration across algorithms: plain frames use q=11,
# prior-guided frames q=10, and the two extra fixed-point queries leave q=8.
Q_PLAIN, Q_PRIOR, Q_IMPL = 11, 10, 8
FIG1_BUDGET = 11 * 2500
FIG2_BUDGET = 11 * 12000
# Rosenbrock has no usable global L; smallest stable value from a grid search
# at d=256 (smaller halves the powers diverge, larger ones just slow down).
F3_LHAT = 256.0


def preset(name: str) -> List[RunConfig]:
    fig1 = {
        "fig1_f1": ("f1", 0.0),
        "fig1_f2": ("f2", "true"),
        "fig1_f3": ("f3", 0.0),
    }
    fig2 = {"fig2_f1": "f1", "fig2_f2": "f2", "fig2_f4": "f4"}
    if name in fig1:
        fn, tau = fig1[name]
        lhat = dict(lhat_scale=1.0) if fn != "f3" else dict(lhat=F3_LHAT)
        mk = lambda **kw: RunConfig(function=fn, dim=256, budget=FIG1_BUDGET,
                                    seeds=DEFAULT_SEEDS, **lhat, **kw)
        return [
            mk(algo="rgf", q=Q_PLAIN, label="RGF"),
            mk(algo="prgf", q=Q_PRIOR, prior="biased", label="PRGF"),
            mk(algo="ars", q=Q_PLAIN, tau_hat=tau, label="ARS"),
            mk(algo="pars_naive", q=Q_PRIOR, prior="biased", tau_hat=tau, label="PARS-Naive"),
            mk(algo="pars_impl", q=Q_IMPL, prior="biased", tau_hat=tau, label="PARS"),
        ]
    if name in fig2:
        fn = fig2[name]
        mk = lambda scale, **kw: RunConfig(function=fn, dim=500, budget=FIG2_BUDGET,
                                           seeds=DEFAULT_SEEDS, lhat_scale=scale, **kw)
        out = []
        for scale, suffix in ((1.0, ""), (50.0, "-0.02")):
            out += [
                mk(scale, algo="rgf", q=Q_PLAIN, label=f"RGF{suffix}"),
                mk(scale, algo="history_prgf", q=Q_PRIOR, prior="historical",
                   label=f"History-PRGF{suffix}"),
                mk(scale, algo="ars", q=Q_PLAIN, restart=True, label=f"ARS{suffix}"),
                mk(scale, algo="history_pars", q=Q_PRIOR, restart=True,
                   label=f"History-PARS{suffix}"),
            ]
        return out
    raise ConfigError(f"unknown preset {name!r}; expected one of "
                      "fig1_f1, fig1_f2, fig1_f3, fig2_f1, fig2_f2, fig2_f4")
