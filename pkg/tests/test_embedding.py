import math

import numpy as np
import pytest
from scipy.integrate import quad

from hermite_flow import bellman as bm
from hermite_flow import checks
from hermite_flow import embedding as emb
from hermite_flow.hermite import HermiteExpansion, random_expansion

BP2 = bm.BellmanParams(2.0)
h0 = HermiteExpansion.basis([0])


def test_gaussian_lhs_closed_form():
    # ∫ h0²(1+2x²) dx = 2 and ∫ t e^{-2t} dt = 1/4
    closed = quad(lambda x: math.exp(-x * x) / math.sqrt(math.pi) * (1 + 2 * x * x), -np.inf, np.inf)[0] * \
        quad(lambda t: t * math.exp(-2 * t), 0, np.inf)[0]
    assert closed == pytest.approx(0.5, abs=1e-12)
    val = emb.bilinear_integral(h0, h0, BP2)
    assert val.converged
    assert val.value == pytest.approx(0.5, abs=1e-6)


def test_zero_data():
    z = HermiteExpansion.zeros(1, 2)
    assert emb.bilinear_integral(h0, z, BP2).value == 0.0
    assert emb.middle_integral(z, z, BP2).value == 0.0


def test_scaling_invariance():
    rng = np.random.default_rng(0)
    f, g = random_expansion(1, 3, rng), random_expansion(1, 3, rng)
    a = emb.bilinear_integral(f, g, BP2, check=False).value
    b = emb.bilinear_integral(3.5 * f, g / 3.5, BP2, check=False).value
    assert b == pytest.approx(a, rel=1e-13)


def test_gaussian_chain():
    r = emb.embedding_chain(h0, h0, BP2)
    assert r.middle >= 0.25 * 0.5 - 1e-6
    assert r.upper == pytest.approx(12.0, rel=1e-12)
    assert r.middle <= r.upper
    assert r.ratio == pytest.approx(0.5, abs=1e-6)
    assert r.middle_check.converged and r.lhs_check.converged


@pytest.mark.parametrize("p", [2.0, 4.0, 1.5])
def test_random_chain(p):
    bp = bm.BellmanParams(p)
    for f, g in emb.random_pairs(3, 1, 4, seed=1):
        r = emb.embedding_chain(f, g, bp, check=False)
        assert r.lower_margin >= -1e-5 * abs(r.middle)
        assert r.upper_margin >= -1e-5 * abs(r.upper)
        assert r.ratio <= 96


def test_ratio_swap_symmetry():
    f, g = emb.random_pairs(1, 1, 3, seed=4)[0]
    bp, bq = bm.BellmanParams(3.0), bm.BellmanParams(1.5)
    a = emb.embedding_ratio(emb.bilinear_integral(f, g, bp, check=False).value, f, g, bp)
    b = emb.embedding_ratio(emb.bilinear_integral(g, f, bq, check=False).value, g, f, bq)
    assert a == pytest.approx(b, rel=1e-10)


def test_ratio_scan_bounded():
    fam = emb.random_pairs(3, 1, 4, seed=2)
    rows = emb.embedding_ratio_scan(fam, [1.5, 2.0, 4.0])
    assert all(0 < r["max_ratio"] <= 96 for r in rows)


def test_resolution_refinement():
    res = emb.Resolution()
    fine = res.refined()
    assert fine.t_order == res.t_order + 8 and fine.panel_width(1) == res.panel_width(1) / 2
    ts, w = emb.t_rule(res)
    assert np.sum(w) == pytest.approx(res.t_max)
    with pytest.raises(ValueError):
        emb.x_grid(emb.Resolution(x_kind="bogus"), 4, 1)


def test_potential_term_examples():
    at0 = emb.potential_term(0.0, 1)
    assert at0.I1 == 0.0
    assert at0.I2 == pytest.approx(1.0, abs=1e-6)
    assert at0.total == pytest.approx(at0.bound, abs=1e-6)
    for y in (1.0, 2.0, 4.0, 8.0):
        pt = emb.potential_term(y, 1)
        i1, i2 = emb.potential_term_closed(y, 1)
        assert pt.I1 == pytest.approx(i1, abs=1e-6) and pt.I2 == pytest.approx(i2, abs=1e-6)
        assert pt.total <= pt.bound + 1e-6
        # L·1 = |x|², so the t-weighted Poisson integral of |x|² is L^{-1}|x|² = 1 at every source
        assert pt.total == pytest.approx(1.0, abs=1e-6)
        # the mass moves from the variance term to the drift term as |y| grows
        assert pt.I1 > pt.I2 or y < 1.5


@pytest.mark.parametrize("n", [2, 3])
def test_potential_term_higher_dimension(n):
    for y in (0.0, 1.5):
        pt = emb.potential_term(y, n)
        assert pt.total <= pt.bound + 1e-6
        assert pt.total == pytest.approx(1.0, abs=1e-6)


def test_dimension_checks():
    reports = checks.dimension_checks((1, 2), 2.0)
    assert all(r.passed for r in reports)
