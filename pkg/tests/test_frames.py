import numpy as np
import pytest

from pgzo.core import ConfigError, InvalidPriorError, OracleHandle, RngHandle
from pgzo.frames import (ProbeSet, _gram_schmidt_rows, build_frame, estimate_Dt,
                         estimate_grad_norm_sq, g2_unbiased, g2_variance_reduced,
                         probe, subspace_estimate)
from pgzo.testfns import bench_function


def exact_probes(frame, grad):
    pd = float(frame.prior @ grad) if frame.prior is not None else None
    return ProbeSet(frame=frame, prior_deriv=pd, dir_derivs=frame.directions @ grad)


def test_frame_d2_prior_e1_gives_pm_e2():
    frame = build_frame(RngHandle(0), 2, 1, prior=np.array([1.0, 0.0]))
    u = frame.directions[0]
    assert abs(abs(u[1]) - 1.0) < 1e-12 and abs(u[0]) < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_frame_orthonormal_no_prior(seed):
    frame = build_frame(RngHandle(seed), 10, 3)
    gram = frame.directions @ frame.directions.T
    assert np.abs(gram - np.eye(3)).max() < 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_frame_with_prior_spans_whole_space(seed):
    rng = RngHandle(seed)
    prior = rng.gen.standard_normal(5)
    frame = build_frame(rng, 5, 4, prior=prior)
    stacked = frame.stacked()
    gram = stacked @ stacked.T
    assert np.abs(gram - np.eye(5)).max() < 1e-10
    # 5 orthonormal vectors in R^5: determinant of the square stack is +-1
    assert abs(abs(np.linalg.det(stacked)) - 1.0) < 1e-10


def test_frame_prior_kept_unrotated():
    rng = RngHandle(3)
    prior = np.array([3.0, 0.0, 4.0, 0.0])
    frame = build_frame(rng, 4, 2, prior=prior)
    np.testing.assert_allclose(frame.prior, prior / 5.0, atol=1e-15)


def test_fast_path_matches_reference_gram_schmidt():
    rng1, rng2 = RngHandle(11), RngHandle(11)
    prior = np.ones(8) / np.sqrt(8)
    raw = rng1.gen.standard_normal((4, 8))
    projected = raw - np.outer(raw @ prior, prior)
    ref = _gram_schmidt_rows(projected, prior, rng2)
    fast = build_frame(RngHandle(11), 8, 4, prior=prior)
    np.testing.assert_allclose(fast.directions, ref, atol=1e-9)


def test_zero_prior_rejected():
    with pytest.raises(InvalidPriorError):
        build_frame(RngHandle(0), 4, 2, prior=np.zeros(4))


def test_q_bounds_enforced():
    with pytest.raises(ConfigError):
        build_frame(RngHandle(0), 4, 5)
    with pytest.raises(ConfigError):
        build_frame(RngHandle(0), 4, 4, prior=np.ones(4))


def test_probe_query_counts():
    fn = bench_function("f2", 20)
    oracle = OracleHandle(fn.as_objective(), mu=1e-6)
    rng = RngHandle(1)
    frame = build_frame(rng, 20, 10, prior=np.ones(20))
    probe(oracle, fn.x0, frame)
    assert oracle.dd_queries == 11  # q + 1 with a prior
    frame = build_frame(rng, 20, 11)
    probe(oracle, fn.x0, frame)
    assert oracle.dd_queries == 22  # 11 more without one


def test_probe_exact_mode_linear_function():
    g = np.arange(1.0, 7.0)
    from pgzo.core import ObjectiveSpec
    obj = ObjectiveSpec(dim=6, eval=lambda x: float(g @ x), true_gradient=lambda x: g.copy(),
                        x0=np.zeros(6))
    oracle = OracleHandle(obj, mode="exact")
    frame = build_frame(RngHandle(2), 6, 3)
    ps = probe(oracle, np.zeros(6), frame)
    np.testing.assert_allclose(ps.dir_derivs, frame.directions @ g, atol=1e-14)


def test_subspace_estimate_full_basis_recovers_gradient():
    grad = np.array([3.0, 4.0])
    frame = build_frame(RngHandle(0), 2, 1, prior=np.array([1.0, 0.0]))
    g1 = subspace_estimate(exact_probes(frame, grad))
    np.testing.assert_allclose(g1, grad, atol=1e-12)


def test_subspace_estimate_zero_probes():
    frame = build_frame(RngHandle(0), 5, 2)
    ps = ProbeSet(frame=frame, prior_deriv=None, dir_derivs=np.zeros(2))
    np.testing.assert_array_equal(subspace_estimate(ps), np.zeros(5))


def test_subspace_estimate_equals_projector():
    rng = RngHandle(9)
    grad = rng.gen.standard_normal(5)
    frame = build_frame(rng, 5, 2)
    g1 = subspace_estimate(exact_probes(frame, grad))
    proj = frame.directions.T @ frame.directions @ grad
    np.testing.assert_allclose(g1, proj, atol=1e-10)


def test_g2_full_basis_d2():
    grad = np.array([3.0, 4.0])
    frame = build_frame(RngHandle(0), 2, 1, prior=np.array([1.0, 0.0]))
    np.testing.assert_allclose(g2_unbiased(exact_probes(frame, grad)), grad, atol=1e-12)


def test_g2_requires_prior():
    frame = build_frame(RngHandle(0), 5, 2)
    with pytest.raises(ConfigError):
        g2_unbiased(exact_probes(frame, np.ones(5)))


def test_g2_variance_reduced_prior_orthogonal_reduces_to_scaled_rgf():
    rng = RngHandle(4)
    d, q = 10, 3
    grad = rng.gen.standard_normal(d)
    p = rng.gen.standard_normal(d)
    p -= (p @ grad) / (grad @ grad) * grad  # orthogonal prior
    frame = build_frame(rng, d, q)
    ps = exact_probes(frame, grad)
    g2 = g2_variance_reduced(ps, p, float(p / np.linalg.norm(p) @ grad))
    plain = (d / q) * (ps.dir_derivs @ frame.directions)
    np.testing.assert_allclose(g2, plain, atol=1e-12)


def test_estimate_grad_norm_sq_full_basis():
    grad = np.array([3.0, 4.0])
    frame = build_frame(RngHandle(0), 2, 1, prior=np.array([1.0, 0.0]))
    assert estimate_grad_norm_sq(exact_probes(frame, grad)) == pytest.approx(25.0)
    zeros = ProbeSet(frame=frame, prior_deriv=0.0, dir_derivs=np.zeros(1))
    assert estimate_grad_norm_sq(zeros) == 0.0


def test_estimate_Dt_values():
    frame = build_frame(RngHandle(0), 2, 1, prior=np.array([1.0, 0.0]))
    ps = ProbeSet(frame=frame, prior_deriv=3.0, dir_derivs=np.array([4.0]))
    assert estimate_Dt(ps) == pytest.approx(0.36)
    assert estimate_Dt(ps, conservative=True) == pytest.approx(9.0 / 41.0)
    aligned = ProbeSet(frame=frame, prior_deriv=3.0, dir_derivs=np.zeros(1))
    assert estimate_Dt(aligned) == 1.0
    silent = ProbeSet(frame=frame, prior_deriv=0.0, dir_derivs=np.zeros(1))
    assert estimate_Dt(silent) == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_conservative_Dt_never_exceeds_plain(seed):
    rng = RngHandle(seed)
    frame = build_frame(rng, 12, 4, prior=rng.gen.standard_normal(12))
    ps = exact_probes(frame, rng.gen.standard_normal(12))
    plain, cons = estimate_Dt(ps), estimate_Dt(ps, conservative=True)
    assert 0.0 <= cons <= plain <= 1.0
