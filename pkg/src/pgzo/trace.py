"""Per-iteration run traces shared by the optimizers and the bench harness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Array

COLUMNS = ("iteration", "dd_queries", "fn_evals", "f_value",
           "log10_rel_err", "C_t", "D_t", "theta_t")


@dataclass
class RunTrace:
    """Append-only log of an optimization run.

    Row t describes the iterate x_t: the queries spent to *reach* it, its
    function value, and the diagnostics of the step taken from it (NaN on the
    final row and wherever a quantity does not apply). ``log_every`` thins the
    rows of long runs; the initial and final rows are always kept.
    """

    label: str = ""
    seed: int = 0
    f0: Optional[float] = None
    f_star: Optional[float] = None
    rows: list = field(default_factory=list)
    reached_queries: Optional[int] = None
    restarts: int = 0
    guess_passes: list = field(default_factory=list)  # pars_est bookkeeping

    def log10_rel_err(self, f_value: float) -> float:
        if self.f_star is None or self.f0 is None or self.f0 <= self.f_star:
            return math.nan
        rel = (f_value - self.f_star) / (self.f0 - self.f_star)
        return math.log10(rel) if rel > 0.0 else -math.inf

    def append(self, iteration: int, dd_queries: int, fn_evals: int, f_value: float,
               c_t: float = math.nan, d_t: float = math.nan, theta_t: float = math.nan):
        self.rows.append((iteration, dd_queries, fn_evals, f_value,
                          self.log10_rel_err(f_value), c_t, d_t, theta_t))

    def column(self, name: str) -> Array:
        idx = COLUMNS.index(name)
        return np.array([r[idx] for r in self.rows], dtype=float)

    @property
    def final_f(self) -> float:
        return self.rows[-1][3]

    @property
    def final_queries(self) -> int:
        return int(self.rows[-1][1])

    def mark_reached(self, target_log10: float, f_value: float, dd_queries: int):
        if self.reached_queries is None and self.log10_rel_err(f_value) <= target_log10:
            self.reached_queries = dd_queries
