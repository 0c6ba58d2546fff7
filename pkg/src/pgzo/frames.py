"""Orthonormal probe frames and the gradient estimators built on them.

A frame holds an optional prior direction plus q random orthonormal
directions spanning the probe subspace. Directions are stored as rows of a
(q, d) array so probing an entire frame is one vectorized oracle call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import lapack

from .core import Array, ConfigError, InvalidPriorError, OracleHandle, RngHandle

# Gram-Schmidt residuals below this trigger a resample of the direction.
RESIDUAL_EPS = 1e-12


@dataclass
class OrthonormalFrame:
    """Prior direction (optional) plus q orthonormal random directions."""

    directions: Array          # (q, d), orthonormal rows
    prior: Optional[Array]     # (d,) unit vector, orthogonal to all rows
    dim: int

    @property
    def q(self) -> int:
        return self.directions.shape[0]

    def stacked(self) -> Array:
        """All probe directions as rows, prior first when present."""
        if self.prior is None:
            return self.directions
        return np.vstack([self.prior[None, :], self.directions])


@dataclass
class ProbeSet:
    """Directional derivatives measured along a frame at one point."""

    frame: OrthonormalFrame
    prior_deriv: Optional[float]
    dir_derivs: Array          # (q,)


def _gram_schmidt_rows(raw: Array, prior: Optional[Array], rng: RngHandle) -> Array:
    """Reference construction: project each draw against the prior and all
    earlier directions, normalize, resample on near-zero residuals."""
    q, d = raw.shape
    out = np.empty((q, d))
    for j in range(q):
        v = raw[j]
        for _ in range(64):
            w = v.copy()
            if prior is not None:
                w -= (prior @ w) * prior
            for k in range(j):
                w -= (out[k] @ w) * out[k]
            n = np.linalg.norm(w)
            if n >= RESIDUAL_EPS:
                out[j] = w / n
                break
            v = rng.gen.standard_normal(d)  # probability-zero degenerate draw
        else:
            raise ConfigError("could not build an orthonormal frame (d too small?)")
    return out


def build_frame(rng: RngHandle, d: int, q: int, prior: Optional[Array] = None) -> OrthonormalFrame:
    """Sample q directions uniformly and orthonormalize them (and the prior).

    The prior is only normalized, never rotated; the random directions are
    made orthogonal to it and to each other. Gaussian draws are used directly
    since projection + normalization is direction-invariant under scaling.
    """
    if q < 1:
        raise ConfigError(f"q must be >= 1, got {q}")
    p = None
    if prior is not None:
        pn = np.linalg.norm(prior)
        if pn < RESIDUAL_EPS:
            raise InvalidPriorError(f"prior has near-zero norm {pn}")
        p = np.asarray(prior, dtype=float) / pn
        if q > d - 1:
            raise ConfigError(f"q={q} with a prior requires q <= d-1={d - 1}")
    elif q > d:
        raise ConfigError(f"q={q} exceeds dimension d={d}")

    raw = rng.gen.standard_normal((q, d))
    if p is not None:
        raw -= np.outer(raw @ p, p)
    # Cholesky-QR: identical to Gram-Schmidt in exact arithmetic, one LAPACK
    # call instead of q passes. The Cholesky diagonal equals the per-direction
    # Gram-Schmidt residual norms; anywhere near degeneracy (where CholQR's
    # conditioning degrades) falls back to the stable explicit construction.
    gram = raw @ raw.T
    chol, info = lapack.dpotrf(gram, lower=1)
    if info == 0 and np.min(np.diagonal(chol)) >= 1e-6:
        inv_l, info2 = lapack.dtrtri(chol, lower=1)
        if info2 == 0:
            return OrthonormalFrame(directions=inv_l @ raw, prior=p, dim=d)
    return OrthonormalFrame(directions=_gram_schmidt_rows(raw, p, rng), prior=p, dim=d)


def probe(oracle: OracleHandle, x: Array, frame: OrthonormalFrame) -> ProbeSet:
    """One directional-derivative query per frame vector (prior included)."""
    if frame.dim != oracle.objective.dim:
        raise ConfigError(f"frame dim {frame.dim} != oracle dim {oracle.objective.dim}")
    vals = oracle.directional_derivatives(x, frame.stacked())
    if frame.prior is None:
        return ProbeSet(frame=frame, prior_deriv=None, dir_derivs=vals)
    return ProbeSet(frame=frame, prior_deriv=float(vals[0]), dir_derivs=vals[1:])


def subspace_estimate(probes: ProbeSet) -> Array:
    """g1: the projection of the gradient onto the probed subspace."""
    g = probes.dir_derivs @ probes.frame.directions
    if probes.prior_deriv is not None:
        g = g + probes.prior_deriv * probes.frame.prior
    return g


def g2_unbiased(probes: ProbeSet) -> Array:
    """Unbiased gradient estimate: prior term plus (d-1)/q-scaled random part."""
    if probes.prior_deriv is None:
        raise ConfigError("g2_unbiased requires a frame with a prior")
    d, q = probes.frame.dim, probes.frame.q
    scale = (d - 1) / q
    return probes.prior_deriv * probes.frame.prior + scale * (probes.dir_derivs @ probes.frame.directions)


def g2_variance_reduced(probes_plain: ProbeSet, prior_orig: Array, prior_deriv_orig: float) -> Array:
    """Control-variate unbiased estimate from *unprojected* uniform directions.

    The directions must have been sampled without removing the prior; the
    prior enters only through the separately queried derivative along it.
    """
    if probes_plain.frame.prior is not None:
        raise ConfigError("g2_variance_reduced expects a frame without a prior")
    pn = np.linalg.norm(prior_orig)
    if pn < RESIDUAL_EPS:
        raise InvalidPriorError(f"prior has near-zero norm {pn}")
    p = np.asarray(prior_orig, dtype=float) / pn
    d, q = probes_plain.frame.dim, probes_plain.frame.q
    u = probes_plain.frame.directions
    corrected = probes_plain.dir_derivs - prior_deriv_orig * (u @ p)
    return (d / q) * (corrected @ u) + prior_deriv_orig * p


def estimate_grad_norm_sq(probes: ProbeSet) -> float:
    """Unbiased estimate of ||grad f||^2 from the frame's probe values."""
    if probes.prior_deriv is None:
        raise ConfigError("estimate_grad_norm_sq requires a frame with a prior")
    d, q = probes.frame.dim, probes.frame.q
    return float(probes.prior_deriv ** 2 + (d - 1) / q * np.sum(probes.dir_derivs ** 2))


def estimate_Dt(probes: ProbeSet, conservative: bool = False) -> float:
    """Estimated squared cosine between the prior and the gradient, in [0, 1].

    The conservative variant doubles the random-part weight in the
    denominator so the estimate undershoots with high probability.
    """
    if probes.prior_deriv is None:
        raise ConfigError("estimate_Dt requires a frame with a prior")
    d, q = probes.frame.dim, probes.frame.q
    factor = (2.0 if conservative else 1.0) * (d - 1) / q
    num = probes.prior_deriv ** 2
    denom = num + factor * float(np.sum(probes.dir_derivs ** 2))
    if denom == 0.0:
        return 0.0  # gradient may genuinely vanish; callers take a zero step
    return float(num / denom)
