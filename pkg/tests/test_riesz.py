import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from hermite_flow import checks
from hermite_flow import riesz as rz
from hermite_flow.hermite import (HermiteExpansion, SpectralEvaluationError, apply_ladder, apply_spectral,
                                  random_expansion)

h0 = HermiteExpansion.basis([0])
h1 = HermiteExpansion.basis([1])


def test_riesz_ground_state():
    assert rz.riesz_apply(0, rz.PLAIN, h0).allclose(math.sqrt(2) * h1, atol=0)
    assert rz.riesz_apply(0, rz.STAR, h0).l2_norm() == 0


@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 3))
def test_l2_identity(seed, n):
    f = random_expansion(n, 5, np.random.default_rng(seed))
    total = sum(c.l2_norm() ** 2 for c in rz.riesz_vector(f))
    assert total == pytest.approx(2 * f.l2_norm() ** 2, rel=1e-12)
    assert rz.riesz_vector_norm(f, 2) == pytest.approx(math.sqrt(2) * f.l2_norm(), abs=1e-10)


def test_vector_norm_examples():
    assert rz.riesz_vector_norm(h0, 2) == pytest.approx(math.sqrt(2))
    assert rz.riesz_vector_norm(HermiteExpansion.zeros(1, 3), 3.0) == 0.0
    # at p = 2 the grid route agrees with the coefficient route
    f = random_expansion(1, 6, np.random.default_rng(1))
    from hermite_flow.hermite import default_lp_grid, lp_norm, on_grid
    grid = default_lp_grid(8, 1)
    vals = np.stack([on_grid(c, grid) for c in rz.riesz_vector(f)], -1)
    assert lp_norm(vals, 2, grid) == pytest.approx(rz.riesz_vector_norm(f, 2), rel=1e-10)


@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 2), j=st.integers(0, 1),
       kind=st.sampled_from([rz.PLAIN, rz.STAR]))
def test_adjoint(seed, n, j, kind):
    j = j % n
    rng = np.random.default_rng(seed)
    f = random_expansion(n, 4, rng)
    g = random_expansion(n, 5, rng)
    lhs = rz.riesz_apply(j, kind, f).inner(g)
    rhs = f.inner(rz.riesz_adjoint(j, kind, g))
    assert lhs == pytest.approx(rhs, abs=1e-13)


@pytest.mark.parametrize("n", [1, 2])
def test_spectral_self_consistency(n):
    import itertools
    for alpha in itertools.product(range(5), repeat=n):
        if sum(alpha) > 4:
            continue
        h = HermiteExpansion.basis(alpha, 4)
        for j in range(n):
            for kind, ladder in ((rz.PLAIN, "creation"), (rz.STAR, "annihilation")):
                left = rz.riesz_apply(j, kind, apply_spectral(math.sqrt, h))
                right = apply_ladder(j, ladder, h)
                assert left.allclose(right, atol=1e-14)


def test_word_parse_and_compose():
    w = rz.RieszWord.parse("1- 1+")
    assert w.n == 1 and w.length == 2 and str(w) == "1- 1+"
    assert rz.riesz_compose(w, h0).allclose(2 / math.sqrt(3) * h0, atol=1e-15)
    # the star letter acting first kills the ground state
    assert rz.riesz_compose(rz.RieszWord.parse("1+ 1-"), h0).l2_norm() == 0
    w3 = rz.RieszWord.parse("1+ 1− 2+")
    assert w3.n == 2 and w3.letters[1] == (0, rz.STAR)
    assert rz.RieszWord.parse("2+", n=3).n == 3
    for bad in ("", "x+", "0+ 1+"):
        with pytest.raises(ValueError):
            rz.RieszWord.parse(bad)
    with pytest.raises(ValueError):
        rz.riesz_compose(w3, h0)


def test_word_adjoint():
    rng = np.random.default_rng(3)
    w = rz.RieszWord.parse("1+ 2- 2+")
    f, g = random_expansion(2, 4, rng), random_expansion(2, 5, rng)
    assert rz.riesz_compose(w, f).inner(g) == pytest.approx(f.inner(rz.riesz_compose_adjoint(w, g)), abs=1e-13)


def test_length_two_enumeration():
    words = rz.all_words(1, 2)
    assert len(words) == 4
    total = sum(rz.riesz_compose(w, h0).l2_norm() ** 2 for w in words)
    # only R R h0 and R* R h0 survive: 4/3·2 and 4/3
    assert total == pytest.approx(8 / 3 + 4 / 3)
    assert math.sqrt(total) <= (96 * 1) ** 2


def test_o_multiplier_examples():
    o = rz.o_multiplier(2, 5)
    assert o.values[0] == pytest.approx(-(math.sqrt(2) + 2) ** 2 / (2 * math.sqrt(2)), abs=1e-12)
    assert o.values[0] == pytest.approx(-4.12132, abs=1e-5)
    star = rz.o_multiplier(2, 5, star=True)
    assert star.values[0] == 0
    np.testing.assert_allclose(star.values[1:], o.values[:-1])
    assert abs(rz.o_multiplier(1, 1000).values[-1]) == pytest.approx(4.0, abs=1e-5)


@given(k=st.floats(1.0, 1e6))
def test_psi_monotone_and_bounded(k):
    assert 4.0 < rz.psi_griffi(k) <= rz.psi_griffi(1.0)
    assert rz.psi_griffi(k + 2) <= rz.psi_griffi(k)


@pytest.mark.parametrize("kind", [rz.PLAIN, rz.STAR])
def test_duality_formula(kind):
    rng = np.random.default_rng(8)
    for n in (1, 2):
        for _ in range(5):
            f = random_expansion(n, 4, rng)
            g = random_expansion(n, 5, rng)
            assert rz.duality_formula_check(0, kind, f, g).passed


def test_duality_example_and_orthogonal_case():
    f = apply_spectral(math.sqrt, h0)
    lhs = rz.riesz_apply(0, rz.PLAIN, f).inner(h1)
    assert lhs == pytest.approx(math.sqrt(2))
    assert rz.duality_rhs(0, rz.PLAIN, f, h1) == pytest.approx(lhs, abs=1e-8)
    assert abs(rz.duality_rhs(0, rz.PLAIN, f, HermiteExpansion.basis([3]))) < 1e-12


def test_heat_norms():
    two, inf = rz.heat_norm_identities(1.0, 1)
    assert two == pytest.approx(math.exp(-1))
    assert inf == pytest.approx(math.cosh(2.0) ** -0.5, rel=1e-14)
    assert inf == pytest.approx(0.515560, abs=1e-6)
    for t in np.geomspace(1e-4, 10, 50):
        two, inf = rz.heat_norm_identities(float(t), 2)
        assert two <= inf
    two, inf = rz.heat_norm_identities(1e-12, 3)
    assert two == pytest.approx(1.0) and inf == pytest.approx(1.0)


def test_zusatz_examples():
    assert rz.todor_integral(1.0, 2, 2.0) == pytest.approx(1.0, abs=1e-10)
    assert rz.zusatz_bound(1.0, 2, 2.0) == pytest.approx(1.0, abs=1e-14)
    assert rz._gamma_p(2, 2.0) == 0.0
    with pytest.raises(rz.DivergenceError):
        rz.todor_integral(3.0, 3, 2.0)
    with pytest.raises(rz.DivergenceError):
        rz.zusatz_bound(4.0, 3, 2.0)


def test_zusatz_alpha_zero_limit():
    # α = a - 2n/p* = 0 at n=2, p=4 (p*=4), a=1
    at = rz.zusatz_bound(1.0, 2, 4.0)
    near = rz.zusatz_bound(1.0 + 1e-7, 2, 4.0)
    assert at == pytest.approx(0.5 * math.log(2) + 1.0)
    assert near == pytest.approx(at, rel=1e-6)


def test_todor_against_independent_quadrature():
    n, a, p = 5, 2.5, 4.0
    g = 1 - 2 / 4.0
    ref = quad(lambda t: math.exp((a - n) * t) * (math.exp(-2 * t) * math.cosh(2 * t)) ** (-n * g / 2),
               0, 50)[0]
    assert rz.todor_integral(a, n, p) == pytest.approx(ref, rel=1e-9)


def test_zusatz_grid():
    reports = checks.zusatz_checks()
    assert all(r.passed for r in reports), [str(r) for r in reports]


def test_psi_analytic_at_infinity():
    psi = rz.griffi_analytic()
    for k in (5.0, 9.0, 41.0):
        assert psi(k, series=True) == pytest.approx(rz.psi_griffi(k), rel=1e-10)
    assert psi.flagged(1, 5) == [1.0]
    e = random_expansion(1, 6, np.random.default_rng(0))
    assert rz.psi_L_apply(rz.identity_analytic(), e).allclose(e)
    with pytest.raises(SpectralEvaluationError):
        rz.psi_L_apply(psi, e, series=True, strict=True)
    out = rz.psi_L_apply(psi, e)
    assert out.l2_norm() <= rz.psi_griffi(1.0) * e.l2_norm() * (1 + 1e-14)


def test_identity_norm_is_one():
    fam = rz.scan_family(1, 8, 2, seed=0)
    for p in (1.5, 3.0):
        assert rz.lp_operator_norm_lower(rz.identity_op(), p, fam, iterations=3).value == pytest.approx(1.0)


def test_riesz_norm_p2():
    fam = rz.scan_family(1, 16, 2, seed=0)
    est = rz.lp_operator_norm_lower(rz.riesz_vector_op(), 2.0, fam)
    assert est.value == pytest.approx(math.sqrt(2), abs=1e-6)


def test_norm_estimate_is_lower_bound_at_p2_for_multiplier():
    psi = rz.griffi_analytic()
    fam = rz.scan_family(1, 12, 3, seed=1)
    est = rz.lp_operator_norm_lower(rz.multiplier_op(rz.psi_shell(psi, 1, 12)), 2.0, fam)
    assert est.value <= rz.psi_griffi(1.0) + 1e-12
    assert est.value == pytest.approx(rz.psi_griffi(1.0), rel=1e-12)


def test_loglog_slope():
    assert rz.loglog_slope([2, 4, 8], [3, 6, 12]) == pytest.approx(1.0)
