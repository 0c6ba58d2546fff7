"""Monte-Carlo and trace-based verification of the estimator/convergence claims.

Everything here uses true-gradient access and exact directional derivatives;
none of it is charged to oracle query counters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .core import Array, ConfigError, RngHandle, sample_unit_sphere
from .frames import (ProbeSet, build_frame, g2_unbiased, g2_variance_reduced,
                     subspace_estimate)
from .greedy import GreedyConfig, run_greedy
from .testfns import bench_function


@dataclass(frozen=True)
class DriftSample:
    C_t: float
    D_t: float
    theta_t: Optional[float]
    iteration: int


@dataclass(frozen=True)
class BoundCheck:
    name: str
    T: int
    observed: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.observed <= self.bound


def _exact_probes(frame, grad: Array) -> ProbeSet:
    pd = float(frame.prior @ grad) if frame.prior is not None else None
    return ProbeSet(frame=frame, prior_deriv=pd, dir_derivs=frame.directions @ grad)


def _cos_sq(a: Array, b: Array) -> float:
    return float((a @ b) ** 2 / ((a @ a) * (b @ b)))


def _prior_with_quality(grad: Array, D: float, rng: RngHandle) -> Array:
    """Unit vector whose squared cosine with ``grad`` is exactly D."""
    g_hat = grad / np.linalg.norm(grad)
    while True:
        w = sample_unit_sphere(rng, len(grad))
        w = w - (w @ g_hat) * g_hat
        n = np.linalg.norm(w)
        if n > 1e-12:
            break
    w /= n
    return np.sqrt(D) * g_hat + np.sqrt(1.0 - D) * w


def mc_rgf_drift(d: int, q: int, n_samples: int, rng: RngHandle) -> tuple[float, float]:
    """MC mean/stderr of C_t for plain random frames against a fixed gradient."""
    if q > d:
        raise ConfigError(f"q={q} exceeds d={d}")
    if n_samples < 1000:
        raise ConfigError("use at least 1000 samples")
    grad = sample_unit_sphere(rng, d)
    cs = np.empty(n_samples)
    for i in range(n_samples):
        frame = build_frame(rng, d, q)
        cs[i] = _cos_sq(grad, subspace_estimate(_exact_probes(frame, grad)))
    return float(cs.mean()), float(cs.std(ddof=1) / np.sqrt(n_samples))


def mc_prgf_drift(d: int, q: int, D_fixed: float, n_samples: int,
                  rng: RngHandle) -> tuple[float, float]:
    """MC mean/stderr of C_t for prior-guided frames at fixed prior quality D."""
    if q > d - 1:
        raise ConfigError(f"q={q} must satisfy q <= d-1={d - 1}")
    if n_samples < 1000:
        raise ConfigError("use at least 1000 samples")
    grad = sample_unit_sphere(rng, d)
    prior = _prior_with_quality(grad, D_fixed, rng)
    cs = np.empty(n_samples)
    for i in range(n_samples):
        frame = build_frame(rng, d, q, prior=prior)
        cs[i] = _cos_sq(grad, subspace_estimate(_exact_probes(frame, grad)))
    return float(cs.mean()), float(cs.std(ddof=1) / np.sqrt(n_samples))


def mc_g2_moments(d: int, q: int, D: float, n_samples: int, rng: RngHandle,
                  variance_reduced: bool = False) -> tuple[float, float]:
    """(relative error of the MC mean of g2, MC mean of ||g2||^2 / ||grad||^2).

    The plain construction removes the prior from the random directions; the
    variance-reduced one keeps them uniform and uses the prior as a control
    variate.
    """
    grad = 2.0 * sample_unit_sphere(rng, d)
    prior = _prior_with_quality(grad, D, rng)
    acc = np.zeros(d)
    norm_sq = 0.0
    for _ in range(n_samples):
        if variance_reduced:
            frame = build_frame(rng, d, q)
            probes = _exact_probes(frame, grad)
            g2 = g2_variance_reduced(probes, prior, float(prior @ grad))
        else:
            frame = build_frame(rng, d, q, prior=prior)
            g2 = g2_unbiased(_exact_probes(frame, grad))
        acc += g2
        norm_sq += g2 @ g2
    mean = acc / n_samples
    gn2 = float(grad @ grad)
    rel_err = float(np.linalg.norm(mean - grad) / np.sqrt(gn2))
    return rel_err, float(norm_sq / n_samples / gn2)


def subspace_optimality_margin(d: int, q: int, n_vectors: int, rng: RngHandle,
                               n_trials: int = 20) -> float:
    """Worst observed cos^2 margin of the projection direction over random
    in-subspace unit vectors; nonnegative up to rounding if the projection
    is optimal."""
    worst = np.inf
    for _ in range(n_trials):
        grad = sample_unit_sphere(rng, d) * rng.gen.uniform(0.5, 2.0)
        frame = build_frame(rng, d, q)
        g1 = subspace_estimate(_exact_probes(frame, grad))
        best = _cos_sq(grad, g1)
        z = rng.gen.standard_normal((n_vectors, q))
        w = z @ frame.directions
        w /= np.linalg.norm(w, axis=1, keepdims=True)
        competitors = (w @ grad) ** 2 / (grad @ grad)
        worst = min(worst, best - float(competitors.max()))
    return worst


def check_lemma36(d: int, q: int, L_hat_mult: float, iterations: int,
                  seed: int, tol: float = 1e-9) -> tuple[int, List[DriftSample]]:
    """Count violations of D_t >= (1 - L/L̂)^2 C_{t-1} along a History-PRGF
    run on the diagonal quadratic with an exact oracle. Zero on quadratics
    whenever L̂ >= L."""
    fn = bench_function("f2", d)
    L = fn.L
    cfg = GreedyConfig(L_hat=L_hat_mult * L, q=q, prior_source="historical",
                       budget=iterations * (q + 1))
    trace = run_greedy(fn.as_objective(), cfg, seed, oracle_mode="exact",
                       diagnostics=True, log_every=1)
    a = (1.0 - 1.0 / L_hat_mult) ** 2
    c_col, d_col = trace.column("C_t"), trace.column("D_t")
    samples: List[DriftSample] = []
    violations = 0
    for t in range(1, iterations):
        c_prev, d_t = c_col[t - 1], d_col[t]
        if np.isnan(c_prev) or np.isnan(d_t):
            continue
        samples.append(DriftSample(C_t=float(c_col[t]), D_t=float(d_t), theta_t=None, iteration=t))
        if d_t < a * c_prev - tol:
            violations += 1
    return violations, samples


def bound_report_csv(checks: Sequence[BoundCheck], path: str) -> str:
    """Write bound-check results as CSV (same conventions as the bench files)."""
    try:
        with open(path, "w") as fh:
            fh.write("name,T,observed,bound,ok\n")
            for c in checks:
                fh.write(f"{c.name},{c.T},{format(c.observed, '.17g')},"
                         f"{format(c.bound, '.17g')},{int(c.ok)}\n")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def _delta_at(trace, T: int, f_star: float) -> float:
    rows = {int(r[0]): r[3] for r in trace.rows}
    if T not in rows:
        raise ConfigError(f"trace has no row for iteration {T}")
    return rows[T] - f_star


def check_theorem_bounds(d: int, q: int, T_values: Sequence[int], seeds: Sequence[int],
                         L_hat_mult: float = 1.0, historical: bool = False,
                         slack: float = 0.2) -> List[BoundCheck]:
    """Seed-averaged delta_T against the applicable convergence bound on the
    diagonal quadratic.

    Plain frames: the strongly-convex rate exp(-(tau/L')(q/d) T) and the
    smooth-convex rate 2 L' (d/q) R^2 / (T+1), both with multiplicative
    slack. Historical prior at a conservative learning rate: the factor-2
    bound with rate 0.1 (q/d)(tau/L), valid for T >= 5 d/q.
    """
    if len(seeds) < 20:
        raise ConfigError("bound checks need at least 20 seeds")
    fn = bench_function("f2", d)
    obj = fn.as_objective()
    L, tau = fn.L, fn.tau
    L_hat = L_hat_mult * L
    L_prime = L / (1.0 - (1.0 - L / L_hat) ** 2) if L_hat > L else L
    T_max = max(T_values)
    cfg = GreedyConfig(L_hat=L_hat, q=q,
                       prior_source="historical" if historical else "none",
                       budget=T_max * (q + 1 if historical else q))
    deltas = {T: [] for T in T_values}
    for seed in seeds:
        trace = run_greedy(obj, cfg, seed, oracle_mode="exact", diagnostics=False,
                           log_every=1)
        for T in T_values:
            deltas[T].append(_delta_at(trace, T, fn.f_star))
    delta0 = fn.eval(fn.x0) - fn.f_star
    R = float(d)  # farthest sublevel point puts all mass on the flattest axis
    checks: List[BoundCheck] = []
    for T in T_values:
        mean = float(np.mean(deltas[T]))
        if historical:
            if T < 5 * d / q:
                raise ConfigError(f"historical-prior bound needs T >= 5d/q, got T={T}")
            bound = 2.0 * np.exp(-0.1 * (q / d) * (tau / L) * T) * delta0
            checks.append(BoundCheck("history_factor2_rate", T, mean, float(bound)))
        else:
            bound_strong = delta0 * np.exp(-(tau / L_prime) * (q / d) * T) * (1.0 + slack)
            bound_smooth = 2.0 * L_prime * (d / q) * R * R / (T + 1) * (1.0 + slack)
            checks.append(BoundCheck("strongly_convex_rate", T, mean, float(bound_strong)))
            checks.append(BoundCheck("smooth_convex_rate", T, mean, float(bound_smooth)))
    return checks
