"""Accelerated random search and its prior-guided variants.

All variants share one momentum skeleton: a step coefficient theta sets the
mixing weight alpha through alpha^2 = theta*((1-alpha)*gamma + alpha*taû),
the probe point is y = (1-beta)x + beta*m, the iterate descends along the
subspace estimate g1, and the momentum point moves along an unbiased
estimate g2. The variants differ in how theta is chosen and which frame and
g2 construction they use:

  ars          fixed theta = q^2/(L̂ d^2), plain random frame, g2 = (d/q) g1
  pars_naive   fixed theta, prior-guided frame, g2 = (d/q) g1 (still biased)
  pars_est     conservative theta from a sacrificial frame, then a fresh
               frame for the estimates (guess/verify loop on theta)
  pars_impl    two fixed-point passes for theta using one prior query each,
               gradient norm approximated by a windowed average
  history_pars previous iteration's theta and estimate direction as prior
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .core import Array, ConfigError, ObjectiveSpec, OracleHandle, RngHandle, sample_unit_sphere
from .frames import (build_frame, estimate_Dt, estimate_grad_norm_sq, g2_unbiased,
                     probe, subspace_estimate)
from .trace import RunTrace

VARIANTS = ("ars", "pars_naive", "pars_est", "pars_impl", "history_pars")


def theta_from_D(D: float, q: int, d: int, L_hat: float) -> float:
    """Step coefficient as a function of prior quality D, nondecreasing in D."""
    if not 0.0 <= D <= 1.0:
        raise ConfigError(f"D must lie in [0, 1], got {D}")
    if q > d - 1:
        raise ConfigError(f"q={q} must satisfy q <= d-1={d - 1}")
    c = q / (d - 1)
    num = D + c * (1.0 - D)
    den = L_hat * (D + (1.0 - D) / c)
    return num / den


def theta_floor(q: int, d: int, L_hat: float) -> float:
    """Worst-case theta (D = 0); every prior-guided variant stays above it."""
    return q * q / (L_hat * (d - 1) ** 2)


def alpha_beta_gamma(theta: float, gamma: float, tau_hat: float) -> tuple[float, float, float]:
    """Positive root of alpha^2 = theta*((1-alpha)*gamma + alpha*taû) plus
    the induced mixing weight beta and next gamma."""
    if theta < 0.0 or gamma <= 0.0:
        raise ConfigError(f"need theta >= 0 and gamma > 0, got {theta}, {gamma}")
    if theta == 0.0:
        return 0.0, 0.0, gamma
    # gamma >= tau_hat is maintained by the recursion, so b >= 0 and the
    # cancellation-free form of the quadratic root applies.
    b = theta * (gamma - tau_hat)
    alpha = 2.0 * theta * gamma / (b + math.sqrt(b * b + 4.0 * theta * gamma))
    beta = alpha * gamma / (gamma + alpha * tau_hat)
    gamma_next = (1.0 - alpha) * gamma + alpha * tau_hat
    return alpha, beta, gamma_next


@dataclass
class ArsConfig:
    L_hat: float
    q: int
    variant: str = "ars"
    tau_hat: float = 0.0
    gamma0: Optional[float] = None   # defaults to L_hat
    B_ub: float = 0.6
    avg_window_k: int = 10
    restart: bool = False
    budget: int = 0
    kappa: float = 0.9               # pars_est guess discount
    max_guess: int = 8

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.L_hat <= 0.0:
            raise ConfigError(f"L_hat must be positive, got {self.L_hat}")
        if self.q < 1:
            raise ConfigError(f"q must be >= 1, got {self.q}")
        if self.tau_hat < 0.0:
            raise ConfigError(f"tau_hat must be nonnegative, got {self.tau_hat}")
        if self.gamma0 is None:
            self.gamma0 = self.L_hat
        if self.gamma0 < self.tau_hat or self.gamma0 <= 0.0:
            raise ConfigError(f"gamma0 must be positive and >= tau_hat, got {self.gamma0}")
        if not 0.0 < self.B_ub <= 1.0:
            raise ConfigError(f"B_ub must lie in (0, 1], got {self.B_ub}")
        if self.avg_window_k < 1:
            raise ConfigError(f"avg_window_k must be >= 1, got {self.avg_window_k}")
        if not 0.0 < self.kappa <= 1.0:
            raise ConfigError(f"kappa must lie in (0, 1], got {self.kappa}")

    @property
    def min_queries_per_iteration(self) -> int:
        if self.variant == "ars":
            return self.q
        if self.variant in ("pars_naive", "history_pars"):
            return self.q + 1
        if self.variant == "pars_impl":
            return self.q + 3
        return 3 * (self.q + 1)  # pars_est: initial pass + one verify + resample


@dataclass
class ArsState:
    x: Array
    m: Array
    gamma: float
    theta_prev: float = 0.0
    v_prev: Optional[Array] = None
    norm_sq_history: List[float] = field(default_factory=list)
    last_f_y: Optional[float] = None
    iteration: int = 0
    # per-step bookkeeping for traces and tests
    last_theta: float = float("nan")
    last_Dhat: float = float("nan")
    last_C: float = float("nan")
    last_D: float = float("nan")
    last_guess_passes: int = 0
    restarts: int = 0


def maybe_restart(state: ArsState, f_y_current: float, config: ArsConfig) -> bool:
    """Adaptive restart: reset momentum when f(y_t) increased over f(y_{t-1})."""
    restarted = False
    if state.last_f_y is not None and f_y_current > state.last_f_y:
        state.m = state.x.copy()
        state.gamma = config.gamma0
        state.restarts += 1
        restarted = True
    state.last_f_y = f_y_current
    return restarted


def _cos_sq(a: Array, b: Array) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return float("nan")
    return float((a @ b) ** 2 / (na * na * nb * nb))


def _diagnose(state: ArsState, oracle: OracleHandle, y: Array, g1: Array, p: Optional[Array]):
    grad = oracle.gradient_at(y)
    state.last_C = _cos_sq(grad, g1)
    state.last_D = _cos_sq(grad, p) if p is not None else float("nan")


def _apply_updates(state: ArsState, config: ArsConfig, y: Array, alpha: float,
                   gamma_next: float, theta_for_m: float, g1: Array, g2: Array):
    state.x = y - g1 / config.L_hat
    lam = config.tau_hat * alpha / gamma_next
    coef = theta_for_m / alpha if alpha > 0.0 else 0.0  # theta=0 limit
    state.m = (1.0 - lam) * state.m + lam * y - coef * g2
    state.gamma = gamma_next
    state.iteration += 1


def _finish(state: ArsState, oracle: OracleHandle, config: ArsConfig, y: Array):
    if config.restart:
        maybe_restart(state, oracle.function_value(y), config)


def _step_ars(state: ArsState, oracle: OracleHandle, config: ArsConfig, rng: RngHandle,
              prior: Optional[Array] = None, diagnostics: bool = False):
    d = oracle.objective.dim
    theta = config.q ** 2 / (config.L_hat * d * d)
    alpha, beta, gamma_next = alpha_beta_gamma(theta, state.gamma, config.tau_hat)
    y = (1.0 - beta) * state.x + beta * state.m
    if config.variant == "pars_naive":
        frame = build_frame(rng, d, config.q, prior=prior)
    else:
        frame = build_frame(rng, d, config.q)
    probes = probe(oracle, y, frame)
    g1 = subspace_estimate(probes)
    g2 = (d / config.q) * g1
    if diagnostics:
        _diagnose(state, oracle, y, g1, frame.prior)
    state.last_theta = theta
    _apply_updates(state, config, y, alpha, gamma_next, theta, g1, g2)
    _finish(state, oracle, config, y)
    return state


def _step_pars_impl(state: ArsState, oracle: OracleHandle, config: ArsConfig, rng: RngHandle,
                    prior: Array, diagnostics: bool = False):
    d = oracle.objective.dim
    p = np.asarray(prior, dtype=float)
    p = p / np.linalg.norm(p)
    avg = float(np.mean(state.norm_sq_history)) if state.norm_sq_history else 0.0

    def clipped_dhat(deriv: float) -> float:
        if avg <= 0.0:
            return 0.0  # no norm history yet: fall back to the theta floor
        return min(deriv * deriv / avg, config.B_ub)

    # fixed-point pass 1: evaluate the prior derivative at y^(0) = x_t
    d0 = float(oracle.directional_derivatives(state.x, p[None, :])[0])
    theta = theta_from_D(clipped_dhat(d0), config.q, d, config.L_hat)
    # fixed-point pass 2: re-evaluate at the y this theta induces
    _, beta, _ = alpha_beta_gamma(theta, state.gamma, config.tau_hat)
    y1 = (1.0 - beta) * state.x + beta * state.m
    d1 = float(oracle.directional_derivatives(y1, p[None, :])[0])
    dhat = clipped_dhat(d1)
    theta = theta_from_D(dhat, config.q, d, config.L_hat)

    alpha, beta, gamma_next = alpha_beta_gamma(theta, state.gamma, config.tau_hat)
    y = (1.0 - beta) * state.x + beta * state.m
    frame = build_frame(rng, d, config.q, prior=p)
    probes = probe(oracle, y, frame)
    g1 = subspace_estimate(probes)
    g2 = g2_unbiased(probes)
    state.norm_sq_history.append(estimate_grad_norm_sq(probes))
    if len(state.norm_sq_history) > config.avg_window_k:
        state.norm_sq_history.pop(0)
    if diagnostics:
        _diagnose(state, oracle, y, g1, p)
    state.last_theta = theta
    state.last_Dhat = dhat
    _apply_updates(state, config, y, alpha, gamma_next, theta, g1, g2)
    _finish(state, oracle, config, y)
    return state


def _step_pars_est(state: ArsState, oracle: OracleHandle, config: ArsConfig, rng: RngHandle,
                   prior: Array, diagnostics: bool = False):
    d = oracle.objective.dim
    p = np.asarray(prior, dtype=float)
    p = p / np.linalg.norm(p)
    pass_cost = config.q + 1

    def conservative_theta_at(point: Array) -> float:
        frame = build_frame(rng, d, config.q, prior=p)
        probes = probe(oracle, point, frame)
        return theta_from_D(estimate_Dt(probes, conservative=True), config.q, d, config.L_hat)

    theta_bound = conservative_theta_at(state.x)  # theta=0 implies y = x_t
    theta = None
    passes = 0
    for _ in range(config.max_guess):
        if oracle.dd_queries + 2 * pass_cost > config.budget:
            break  # keep the verify pass plus the final resample affordable
        guess = config.kappa * theta_bound
        _, beta, _ = alpha_beta_gamma(guess, state.gamma, config.tau_hat)
        y_guess = (1.0 - beta) * state.x + beta * state.m
        passes += 1
        theta_bound = conservative_theta_at(y_guess)
        if guess <= theta_bound:
            theta = guess
            break
    if theta is None:
        theta = theta_floor(config.q, d, config.L_hat)
    alpha, beta, gamma_next = alpha_beta_gamma(theta, state.gamma, config.tau_hat)
    y = (1.0 - beta) * state.x + beta * state.m

    frame = build_frame(rng, d, config.q, prior=p)  # fresh frame for the estimates
    probes = probe(oracle, y, frame)
    g1 = subspace_estimate(probes)
    g2 = g2_unbiased(probes)
    if diagnostics:
        _diagnose(state, oracle, y, g1, p)
    state.last_theta = theta
    state.last_guess_passes = passes
    _apply_updates(state, config, y, alpha, gamma_next, theta, g1, g2)
    _finish(state, oracle, config, y)
    return state


def _step_history_pars(state: ArsState, oracle: OracleHandle, config: ArsConfig, rng: RngHandle,
                       prior: Optional[Array] = None, diagnostics: bool = False):
    d = oracle.objective.dim
    theta_used = state.theta_prev
    alpha, beta, gamma_next = alpha_beta_gamma(theta_used, state.gamma, config.tau_hat)
    y = (1.0 - beta) * state.x + beta * state.m
    p = state.v_prev
    frame = build_frame(rng, d, config.q, prior=p)
    probes = probe(oracle, y, frame)
    g1 = subspace_estimate(probes)
    g2 = g2_unbiased(probes)
    # theta for the *next* iteration, from this iteration's probes
    state.theta_prev = theta_from_D(estimate_Dt(probes), config.q, d, config.L_hat)
    if diagnostics:
        _diagnose(state, oracle, y, g1, frame.prior)
    state.last_theta = state.theta_prev
    _apply_updates(state, config, y, alpha, gamma_next, theta_used, g1, g2)
    n = np.linalg.norm(g1)
    if n > 0.0:
        state.v_prev = g1 / n
    _finish(state, oracle, config, y)
    return state


_STEPPERS: dict[str, Callable] = {
    "ars": _step_ars,
    "pars_naive": _step_ars,
    "pars_impl": _step_pars_impl,
    "pars_est": _step_pars_est,
    "history_pars": _step_history_pars,
}

ars_step = _step_ars
pars_impl_step = _step_pars_impl
pars_est_step = _step_pars_est
history_pars_step = _step_history_pars
pars_naive_step = _step_ars


def run_ars(objective: ObjectiveSpec, config: ArsConfig, seed: int,
            prior_feed: Optional[Callable[[Array], Array]] = None, *,
            oracle_mode: str = "fd", mu: float = 1e-6,
            diagnostics: Optional[bool] = None, log_every: int = 1,
            target_log10: Optional[float] = None,
            stop_on_target: bool = False) -> RunTrace:
    """Run the configured ARS variant until the dd-query budget is exhausted."""
    needs_prior = config.variant in ("pars_naive", "pars_impl", "pars_est")
    if needs_prior and prior_feed is None:
        raise ConfigError(f"variant {config.variant!r} requires a prior_feed callable")
    min_cost = config.min_queries_per_iteration
    if config.budget < min_cost:
        raise ConfigError(f"budget {config.budget} is below one iteration's cost {min_cost}")
    if diagnostics is None:
        diagnostics = objective.true_gradient is not None

    rng = RngHandle(seed)
    oracle = OracleHandle(objective, mu=mu, mode=oracle_mode)
    x0 = np.array(objective.x0, dtype=float)
    state = ArsState(x=x0, m=x0.copy(), gamma=config.gamma0)
    if config.variant == "history_pars":
        state.v_prev = sample_unit_sphere(rng, objective.dim)
    step = _STEPPERS[config.variant]

    f0 = oracle.peek_function_value(state.x)
    trace = RunTrace(seed=seed, f0=f0, f_star=objective.f_star)
    if target_log10 is not None:
        trace.mark_reached(target_log10, f0, 0)

    while oracle.dd_queries + min_cost <= config.budget:
        x_here = state.x
        dd_before, fn_before = oracle.dd_queries, oracle.fn_evals
        prior = prior_feed(state.x) if needs_prior else None
        step(state, oracle, config, rng, prior, diagnostics)
        t = state.iteration - 1
        f_here = oracle.peek_function_value(x_here)
        if t % log_every == 0:
            trace.append(t, dd_before, fn_before, f_here,
                         state.last_C, state.last_D, state.last_theta)
        if config.variant == "pars_est":
            trace.guess_passes.append(state.last_guess_passes)
        if target_log10 is not None:
            trace.mark_reached(target_log10, f_here, dd_before)
            if stop_on_target and trace.reached_queries is not None:
                break
    f_final = oracle.peek_function_value(state.x)
    trace.append(state.iteration, oracle.dd_queries, oracle.fn_evals, f_final)
    if target_log10 is not None:
        trace.mark_reached(target_log10, f_final, oracle.dd_queries)
    trace.restarts = state.restarts
    return trace
