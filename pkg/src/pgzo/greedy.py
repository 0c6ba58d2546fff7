"""Greedy descent driven by subspace gradient estimates.

Each iteration probes a random orthonormal frame (optionally containing a
prior direction), forms the projection estimate g1, and steps x <- x - g1/L̂.
Prior sources: none (plain random search), historical (previous estimate
direction), or external (a caller-supplied per-iterate callable).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Array, ConfigError, ObjectiveSpec, OracleHandle, RngHandle, sample_unit_sphere
from .frames import build_frame, probe, subspace_estimate
from .trace import RunTrace

PRIOR_SOURCES = ("none", "historical", "external")


@dataclass
class GreedyConfig:
    L_hat: float
    q: int
    prior_source: str = "none"
    budget: int = 0            # total directional-derivative queries

    def __post_init__(self):
        if self.L_hat <= 0.0:
            raise ConfigError(f"L_hat must be positive, got {self.L_hat}")
        if self.q < 1:
            raise ConfigError(f"q must be >= 1, got {self.q}")
        if self.prior_source not in PRIOR_SOURCES:
            raise ConfigError(f"prior_source must be one of {PRIOR_SOURCES}")

    @property
    def queries_per_iteration(self) -> int:
        return self.q + (0 if self.prior_source == "none" else 1)


@dataclass
class GreedyState:
    x: Array
    prior: Optional[Array] = None
    iteration: int = 0
    last_g1: Optional[Array] = field(default=None, repr=False)
    last_C: float = float("nan")
    last_D: float = float("nan")


def _cos_sq(a: Array, b: Array) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return float("nan")
    return float((a @ b) ** 2 / (na * na * nb * nb))


def greedy_step(state: GreedyState, oracle: OracleHandle, config: GreedyConfig,
                rng: RngHandle, prior_feed: Optional[Callable[[Array], Array]] = None,
                diagnostics: bool = False) -> GreedyState:
    """One frame probe and descent update; mutates and returns ``state``."""
    d = oracle.objective.dim
    prior = None
    if config.prior_source == "historical":
        prior = state.prior
    elif config.prior_source == "external":
        prior = prior_feed(state.x)

    frame = build_frame(rng, d, config.q, prior=prior)
    probes = probe(oracle, state.x, frame)
    g1 = subspace_estimate(probes)

    if diagnostics:
        grad = oracle.gradient_at(state.x)
        state.last_C = _cos_sq(grad, g1)
        state.last_D = _cos_sq(grad, frame.prior) if frame.prior is not None else float("nan")

    state.x = state.x - g1 / config.L_hat
    if config.prior_source == "historical":
        n = np.linalg.norm(g1)
        if n > 0.0:  # zero estimate: keep the old prior
            state.prior = g1 / n
    state.last_g1 = g1
    state.iteration += 1
    return state


def run_greedy(objective: ObjectiveSpec, config: GreedyConfig, seed: int,
               prior_feed: Optional[Callable[[Array], Array]] = None, *,
               oracle_mode: str = "fd", mu: float = 1e-6,
               diagnostics: Optional[bool] = None, log_every: int = 1,
               target_log10: Optional[float] = None,
               stop_on_target: bool = False) -> RunTrace:
    """Iterate greedy_step until the dd-query budget is exhausted.

    ``diagnostics=None`` records C_t/D_t whenever a true gradient exists.
    Row t's f-value reuses the base evaluation made by the step's own finite
    differences; only the first and last rows need uncharged diagnostic reads.
    ``target_log10`` marks (and with ``stop_on_target`` ends at) the first
    crossing of a relative-error level.
    """
    cost = config.queries_per_iteration
    if config.budget < cost:
        raise ConfigError(f"budget {config.budget} is below one iteration's cost {cost}")
    if config.prior_source == "external" and prior_feed is None:
        raise ConfigError("prior_source='external' requires a prior_feed callable")
    if diagnostics is None:
        diagnostics = objective.true_gradient is not None

    rng = RngHandle(seed)
    oracle = OracleHandle(objective, mu=mu, mode=oracle_mode)
    state = GreedyState(x=np.array(objective.x0, dtype=float))
    if config.prior_source == "historical":
        state.prior = sample_unit_sphere(rng, objective.dim)

    f0 = oracle.peek_function_value(state.x)
    trace = RunTrace(seed=seed, f0=f0, f_star=objective.f_star)
    if target_log10 is not None:
        trace.mark_reached(target_log10, f0, 0)

    while oracle.dd_queries + cost <= config.budget:
        x_here = state.x
        dd_before, fn_before = oracle.dd_queries, oracle.fn_evals
        greedy_step(state, oracle, config, rng, prior_feed, diagnostics)
        t = state.iteration - 1  # index of the iterate the step started from
        f_here = oracle.peek_function_value(x_here)  # cached by the step's probes
        if t % log_every == 0:
            trace.append(t, dd_before, fn_before, f_here, state.last_C, state.last_D)
        if target_log10 is not None:
            trace.mark_reached(target_log10, f_here, dd_before)
            if stop_on_target and trace.reached_queries is not None:
                break
    f_final = oracle.peek_function_value(state.x)
    trace.append(state.iteration, oracle.dd_queries, oracle.fn_evals, f_final)
    if target_log10 is not None:
        trace.mark_reached(target_log10, f_final, oracle.dd_queries)
    return trace
