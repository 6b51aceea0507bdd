import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy.stats import unitary_group

from hermite_flow import bellman as bm
from hermite_flow import checks

exponents = st.sampled_from([1.2, 1.5, 2.0, 2.5, 3.0, 4.0, 8.0])


def point(zeta, eta, Z, H):
    return bm.BellmanPoint(np.atleast_1d(zeta), np.atleast_1d(eta), Z, H)


def test_params():
    bp = bm.BellmanParams(4.0)
    assert bp.q == pytest.approx(4 / 3)
    assert 1 / bp.p + 1 / bp.q == pytest.approx(1.0)
    assert bp.delta == pytest.approx(bp.q * (bp.q - 1) / 8)
    assert bm.BellmanParams(2.0).delta == 0.25
    for p in (1.0, 0.5, math.inf):
        with pytest.raises(ValueError):
            bm.BellmanParams(p)


def test_q_examples():
    bp = bm.BellmanParams(2.0)
    assert bm.q_eval(point(0, 0, 1.3, 0.4), bp) == pytest.approx(2 * 1.7)
    assert bm.q_eval(point(1, 2, 1, 4), bp) == pytest.approx(4.75, abs=1e-14)
    assert bm.q_eval(point(2, 1, 4, 1), bp) == pytest.approx(4.0, abs=1e-14)


def test_domain_violation_rejected():
    with pytest.raises(bm.DomainError):
        bm.q_eval(point(2.0, 0.0, 1.0, 1.0), bm.BellmanParams(2.0))


def test_tau_examples():
    assert bm.tau_select(2, 1, bm.BellmanParams(2.0)) == 1.0
    assert bm.tau_select(1, 2, bm.BellmanParams(2.0)) == 1.0
    assert bm.tau_select(1, 3, bm.BellmanParams(4.0)) == pytest.approx(3 ** (2 / 3), rel=1e-14)
    with pytest.raises(ValueError):
        bm.tau_select(0.0, 0.0, bm.BellmanParams(4.0))


def test_swap_symmetry():
    rng = np.random.default_rng(1)
    for p in (1.3, 1.7):
        bp, bq = bm.BellmanParams(p), bm.BellmanParams(p / (p - 1))
        for _ in range(20):
            z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            e = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            Z = np.linalg.norm(z) ** bp.p + 1
            H = np.linalg.norm(e) ** bp.q + 1
            assert bm.q_eval(point(z, e, Z, H), bp) == pytest.approx(bm.q_eval(point(e, z, H, Z), bq), rel=1e-13)


@given(p=exponents, seed=st.integers(0, 2 ** 32 - 1))
def test_q_below_linear_part(p, seed):
    bp = bm.BellmanParams(p)
    rng = np.random.default_rng(seed)
    spec = bm.SamplerSpec(samples=1)
    z, e, Z, H = (a[0] for a in bm.sample_omega(spec, bp, 2, 2, 1, rng))
    assert bm.q_eval(point(z, e, Z, H), bp) <= 2 * (Z + H)


@given(p=exponents, seed=st.integers(0, 2 ** 32 - 1))
def test_rotational_invariance(p, seed):
    bp = bm.BellmanParams(p)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    e = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    w = point(z, e, np.linalg.norm(z) ** p + 1, np.linalg.norm(e) ** bp.q + 1)
    U, V = unitary_group.rvs(3, random_state=rng), unitary_group.rvs(2, random_state=rng)
    rotated = point(U @ z, V @ e, w.Z, w.H)
    assert bm.q_eval(rotated, bp) == pytest.approx(bm.q_eval(w, bp), rel=1e-12, abs=1e-12)


@given(p=exponents, seed=st.integers(0, 2 ** 32 - 1))
def test_gradient_and_hessian_structure(p, seed):
    bp = bm.BellmanParams(p)
    rng = np.random.default_rng(seed)
    z, e, Z, H = (a[0] for a in bm.sample_omega(bm.SamplerSpec(samples=1), bp, 2, 1, 1, rng))
    w = point(z, e, Z, H)
    g = bm.q_gradient(w, bp)
    assert g.shape == (8,)
    assert g[-2] == 2.0 and g[-1] == 2.0
    hf = bm.q_hessian(w, bp)
    h = hf.matrix
    np.testing.assert_array_equal(h, h.T)
    assert np.all(h[-2:] == 0) and np.all(h[:, -2:] == 0)
    block = h[:-2, :-2]
    assert np.max(np.linalg.eigvalsh(block)) <= 1e-10 * np.max(np.abs(block))
    assert not hf.near_gamma


@pytest.mark.parametrize("p", [1.5, 2.0, 2.5, 4.0])
def test_derivatives_match_finite_differences(p):
    grad, hess = checks.bellman_derivative_checks(p, points=150, seed=3)
    assert grad.passed, grad
    assert hess.passed, hess


def test_gradient_continuous_across_switch_surface():
    for p in (2.5, 4.0, 1.5):
        bp = bm.BellmanParams(p)
        v = 1.3
        u = v ** (bp.q / bp.p)
        above = bm.q_gradient(point(u * (1 + 1e-9), v, 10.0, 10.0), bp)
        below = bm.q_gradient(point(u * (1 - 1e-9), v, 10.0, 10.0), bp)
        assert np.max(np.abs(above - below)) <= 1e-6 * np.max(np.abs(above))
        assert bm.branch_label(u * (1 + 1e-9), v, bp) != bm.branch_label(u * (1 - 1e-9), v, bp)


def test_hessian_flags_switch_surface():
    bp = bm.BellmanParams(3.0)
    v = 2.0
    u = v ** (bp.q / bp.p)
    hf = bm.q_hessian(point(u * (1 + 1e-5), v, 10.0, 10.0), bp)
    assert hf.near_gamma and "gamma" in hf.flags


@pytest.mark.parametrize("p", [1.3, 2.0, 2.5, 3.0, 4.0, 8.0])
def test_theorem_properties_on_samples(p):
    reports = bm.certify_theorem21(bm.SamplerSpec(samples=3000, increments=20, seed=p.__hash__() % 97),
                                   bm.BellmanParams(p))
    assert {r.name for r in reports} == {"theorem21-i", "theorem21-ii", "theorem21-iii"}
    for r in reports:
        assert r.passed, r


def test_concave_bound_without_delta_on_branch_a():
    reports = bm.certify_theorem21(bm.SamplerSpec(samples=3000, increments=20), bm.BellmanParams(4.0),
                                   delta_factor=1.0)
    for r in reports:
        if r.params["branch"] == "A" and r.name != "theorem21-i":
            assert r.passed, r


def test_affine_ray_equality():
    # on ζ = η = 0 the quantity Q - ω·∇Q vanishes identically
    bp = bm.BellmanParams(2.0)
    w = point(0.0, 0.0, 1.5, 2.5)
    g = bm.q_gradient(w, bp)
    assert bm.q_eval(w, bp) - w.real_vector() @ g == 0.0


def test_gradient_constants_within_analytic_bounds():
    bp = bm.BellmanParams(3.0)
    rng = np.random.default_rng(7)
    z, e, Z, H = bm.sample_omega(bm.SamplerSpec(samples=500), bp, 2, 2, 500, rng)
    pts = [point(*a) for a in zip(z, e, Z, H)]
    cz, ce = bm.gradient_constants(pts, bp)
    az, ae = bm.analytic_gradient_constants(bp)
    assert 0 < cz <= az * (1 + 1e-12)
    assert 0 < ce <= ae * (1 + 1e-12)


def test_sampler_stays_off_gamma():
    bp = bm.BellmanParams(2.5)
    spec = bm.SamplerSpec(samples=2000)
    z, e, Z, H = bm.sample_omega(spec, bp, 3, 2, 2000, np.random.default_rng(0))
    u, v = np.linalg.norm(z, axis=1), np.linalg.norm(e, axis=1)
    assert np.all(bm.gamma_distance(u, v, bp) >= spec.eps / (1 + spec.eps) * (1 - 1e-9))
    assert np.all(u ** bp.p <= Z * (1 + 1e-12)) and np.all(v ** bp.q <= H * (1 + 1e-12))
