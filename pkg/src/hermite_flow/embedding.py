"""The bilinear embedding chain δ·lhs ≤ middle ≤ upper and the potential term.

lhs    = ∫_0^∞ ∫ ‖P_t f(x)‖_* ‖P_t g(x)‖_* dx t dt
middle = ∫_0^∞ ∫ −L′b(x, t) dx t dt
upper  = 6 (‖f‖_p^p + ‖g‖_q^q)

Both integrals use a tensor rule in x and composite Gauss-Legendre on
geometric panels in t, with a doubling check against a refined rule.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from . import bellman as bm
from .field import lprime_b_from_snapshots, snapshot_on_grid
from .hermite import (HermiteExpansion, QuadratureGrid, default_lp_grid, expansion_lp_norm, gauss_hermite_grid,
                      interval_grid)
from .kernels import default_subordination_nodes, heat_kernel_mass, log_cosh
from .report import CheckReport, stopwatch


@dataclass(frozen=True)
class Resolution:
    """Quadrature settings for the (x, t) integrals.

    t: panels [0, t_first], then doubling edges up to t_max, ``t_order``
    Gauss-Legendre nodes each.  x: ``x_kind`` "interval" (composite
    Gauss-Legendre on [-X, X], X = sqrt(2M+n) + 8), "gauss-hermite" or "auto"
    (interval for n ≤ 2, Gauss-Hermite for n = 3).
    """

    t_first: float = 1 / 64
    t_max: float = 32.0
    t_order: int = 12
    x_kind: str = "auto"
    x_panel: float | None = None
    x_refine: int = 0
    x_order: int = 8
    gh_nodes: int | None = None
    rtol: float = 1e-6

    def panel_width(self, n: int) -> float:
        # 0.5 in 1D; 2D tensor grids get coarser panels to stay tractable
        base = self.x_panel if self.x_panel is not None else (0.5 if n == 1 else 1.0)
        return base / 2 ** self.x_refine

    def refined(self) -> "Resolution":
        return replace(self, t_order=self.t_order + 8, x_refine=self.x_refine + 1,
                       gh_nodes=None if self.gh_nodes is None else self.gh_nodes + 8)


def t_rule(res: Resolution) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights of ∫_0^{t_max} · dt on geometric panels."""
    edges = [0.0, res.t_first]
    while edges[-1] < res.t_max:
        edges.append(edges[-1] * 2)
    edges = np.array(edges)
    xg, wg = np.polynomial.legendre.leggauss(res.t_order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    return (mid[:, None] + half[:, None] * xg).reshape(-1), (half[:, None] * wg).reshape(-1)


def x_grid(res: Resolution, degree: int, n: int) -> QuadratureGrid:
    kind = res.x_kind
    if kind == "auto":
        kind = "interval" if n <= 2 else "gauss-hermite"
    if kind == "interval":
        return default_lp_grid(degree, n, panel_width=res.panel_width(n), order=res.x_order)
    if kind == "gauss-hermite":
        return gauss_hermite_grid(res.gh_nodes or (2 * degree + 12), n)
    raise ValueError(f"unknown x grid kind {kind!r}")


@dataclass(frozen=True)
class IntegralValue:
    value: float
    refined: float | None
    tail_bound: float
    converged: bool
    gamma_fraction: float = 0.0

    @property
    def discrepancy(self) -> float:
        if self.refined is None:
            return 0.0
        return abs(self.value - self.refined) / max(abs(self.refined), 1e-300)


def _degree(f, g) -> int:
    return max(e.degree for e in _as_list(f) + _as_list(g)) + 1


def _as_list(f) -> list[HermiteExpansion]:
    return [f] if isinstance(f, HermiteExpansion) else list(f)


def _ground_rate(f) -> float:
    return np.sqrt(_as_list(f)[0].n)


def _integrate(f, g, bp, res: Resolution, kind: str):
    n = _as_list(f)[0].n
    grid = x_grid(res, _degree(f, g), n)
    ts, wt = t_rule(res)
    w = grid.tensor_weights
    r2 = grid.radius_squared
    total = 0.0
    band = 0.0
    last = 0.0
    for t, wtt in zip(ts, wt):
        sf = snapshot_on_grid(f, grid, t)
        sg = snapshot_on_grid(g, grid, t)
        if kind == "lhs":
            dens = sf.star_norm * sg.star_norm
        else:
            dens = lprime_b_from_snapshots(sf, sg, r2, bp)
            u = np.sqrt(np.sum(np.abs(sf.value) ** 2, axis=0))
            v = np.sqrt(np.sum(np.abs(sg.value) ** 2, axis=0))
            near = bm.gamma_distance(u, v, bp) < bm.GAMMA_EPS
            band += wtt * t * float(np.sum(w * near))
        slab = float(np.sum(w * dens))
        total += wtt * t * slab
        last = slab
    # beyond t_max every component decays at least like e^{-√n t}; the slab
    # density is quadratic in P_t so it decays like e^{-2√n t}
    c = 2 * _ground_rate(f)
    T = res.t_max
    tail = abs(last) * (T / c + 1 / c ** 2)
    vol = float(np.sum(w)) * 0.5 * T ** 2
    return total, tail, band / vol if vol > 0 else 0.0


def _with_check(f, g, bp, res: Resolution, kind: str, check: bool) -> IntegralValue:
    if all(not np.any(e.array) for e in _as_list(f)) or all(not np.any(e.array) for e in _as_list(g)):
        return IntegralValue(0.0, 0.0 if check else None, 0.0, True)
    v, tail, band = _integrate(f, g, bp, res, kind)
    if not check:
        return IntegralValue(v, None, tail, True, band)
    v2, _, _ = _integrate(f, g, bp, res.refined(), kind)
    ok = abs(v - v2) <= res.rtol * max(abs(v2), 1e-300) + tail
    return IntegralValue(v2, v, tail, ok, band)


def bilinear_integral(f, g, bp: bm.BellmanParams, res: Resolution | None = None,
                      check: bool = True) -> IntegralValue:
    """∫∫ ‖P_t f‖_* ‖P_t g‖_* dx t dt; ``value`` is the refined-rule result."""
    return _with_check(f, g, bp, res or Resolution(), "lhs", check)


def middle_integral(f, g, bp: bm.BellmanParams, res: Resolution | None = None,
                    check: bool = True) -> IntegralValue:
    """∫∫ −L′b dx t dt.

    The integrand is assembled off and on the switch surface alike (Q is C¹
    and the branch formulas give the one-sided second derivatives on γ);
    ``gamma_fraction`` reports the share of quadrature mass within the
    ε-band around γ.
    """
    return _with_check(f, g, bp, res or Resolution(), "middle", check)


def upper_bound(f, g, bp: bm.BellmanParams, grid: QuadratureGrid | None = None) -> float:
    """6 (‖f‖_p^p + ‖g‖_q^q)."""
    fp = expansion_lp_norm(_as_list(f), bp.p, grid)
    gq = expansion_lp_norm(_as_list(g), bp.q, grid)
    return 6.0 * (fp ** bp.p + gq ** bp.q)


@dataclass(frozen=True)
class EmbeddingResult:
    lhs: float
    middle: float
    upper: float
    ratio: float
    delta: float
    lhs_check: IntegralValue | None = None
    middle_check: IntegralValue | None = None

    @property
    def lower_margin(self) -> float:
        return self.middle - self.delta * self.lhs

    @property
    def upper_margin(self) -> float:
        return self.upper - self.middle


def embedding_ratio(lhs: float, f, g, bp: bm.BellmanParams) -> float:
    """lhs / ((p* - 1) ‖f‖_p ‖g‖_q)."""
    den = (bp.pstar - 1) * expansion_lp_norm(_as_list(f), bp.p) * expansion_lp_norm(_as_list(g), bp.q)
    return lhs / den if den > 0 else 0.0


def embedding_chain(f, g, bp: bm.BellmanParams, res: Resolution | None = None, check: bool = True,
                    with_middle: bool = True) -> EmbeddingResult:
    res = res or Resolution()
    lhs = bilinear_integral(f, g, bp, res, check)
    mid = middle_integral(f, g, bp, res, check) if with_middle else None
    up = upper_bound(f, g, bp)
    return EmbeddingResult(lhs.value, mid.value if mid else float("nan"), up,
                           embedding_ratio(lhs.value, f, g, bp), bp.delta, lhs, mid)


def chain_reports(res_: EmbeddingResult, params: dict, rtol: float = 1e-6, runtime_ms: int = 0) -> list[CheckReport]:
    """Reports for δ·lhs ≤ middle and middle ≤ upper (relative margins)."""
    lo = CheckReport("embedding-lower", dict(params), res_.delta * res_.lhs, res_.middle,
                     res_.lower_margin / max(abs(res_.middle), 1e-300), rtol, runtime_ms)
    hi = CheckReport("embedding-upper", dict(params), res_.middle, res_.upper,
                     res_.upper_margin / max(abs(res_.upper), 1e-300), rtol, runtime_ms)
    return [lo, hi]


# --------------------------------------------------------------------------
# potential term


@dataclass(frozen=True)
class PotentialTerm:
    total: float
    I1: float
    I2: float
    bound: float


def potential_term_closed(y: float, n: int) -> tuple[float, float]:
    """I₁ and I₂ as single integrals in r = t²/(2s), using ∫ s dμ(s) = 1/2.

    I₁ = ½|y|² ∫ e^{-|y|² tanh r / 2} cosh^{-2-n/2} r dr
    I₂ = ½ n ∫ e^{-|y|² tanh r / 2} cosh^{-1-n/2} r sinh r dr
    """
    y2 = float(y) ** 2

    def g1(r):
        return np.exp(-0.5 * y2 * np.tanh(r) - (2 + n / 2) * log_cosh(r))

    # sinh r / cosh^{1+n/2} r = tanh r · cosh^{-n/2} r
    def g2s(r):
        return np.exp(-0.5 * y2 * np.tanh(r) - (n / 2) * log_cosh(r)) * np.tanh(r)

    i1 = 0.5 * y2 * quad(g1, 0, np.inf, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    i2 = 0.5 * n * quad(g2s, 0, np.inf, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return i1, i2


def potential_term(y, n: int | None = None, t_order: int = 24, r_max: float = 60.0) -> PotentialTerm:
    """(2π)^{-n/2} ∫∫∫ |x|² K_{t²/4s}(x, y) dμ(s) dx t dt by quadrature.

    The x-integral uses the Gaussian moments of the normalized kernel
    (mass · (|mean|² + n·var)); the (s, t) integral runs over the
    subordination rule and, for each node s, a composite Gauss-Legendre rule
    in t on [0, sqrt(2 s r_max)] with geometric panels.  ``total`` is
    compared with 2 - e^{-|y|²/2}.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if n is None:
        n = y.size
    elif y.size == 1 and n > 1:
        y = np.concatenate([y, np.zeros(n - 1)])
    y2 = float(y @ y)
    nodes = default_subordination_nodes()
    xg, wg = np.polynomial.legendre.leggauss(t_order)
    # panels in r = t²/(2s): [0, 1/64], doubling to r_max
    edges = [0.0, 1 / 64]
    while edges[-1] < r_max:
        edges.append(edges[-1] * 2)
    edges = np.sqrt(np.array(edges))  # geometric panels in t/√(2s)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    base = (mid[:, None] + half[:, None] * xg).reshape(-1)
    bw = (half[:, None] * wg).reshape(-1)
    i1 = i2 = 0.0
    for s, w in zip(nodes.nodes, nodes.weights):
        scale = np.sqrt(2 * s)
        t = scale * base
        wt = scale * bw
        tau = t * t / (4 * s)
        mass = heat_kernel_mass(tau, y2, n=n)
        ch = np.cosh(2 * tau)
        mean2 = y2 / ch ** 2
        var = np.tanh(2 * tau)
        i1 += w * float(np.sum(wt * t * mass * mean2))
        i2 += w * float(np.sum(wt * t * mass * n * var))
    return PotentialTerm(i1 + i2, i1, i2, 2 - np.exp(-0.5 * y2))


# --------------------------------------------------------------------------
# scans


def gaussian_pair(n: int) -> tuple[HermiteExpansion, HermiteExpansion]:
    h0 = HermiteExpansion.basis([0] * n)
    return h0, h0


def random_pairs(count: int, n: int, degree: int, seed: int) -> list[tuple[HermiteExpansion, HermiteExpansion]]:
    """Seeded unit-norm complex pairs of degree ≤ ``degree``."""
    from .hermite import random_expansion

    rng = np.random.default_rng(seed)
    return [(random_expansion(n, degree, rng), random_expansion(n, degree, rng)) for _ in range(count)]


def embedding_ratio_scan(family: Sequence[tuple], ps: Sequence[float], res: Resolution | None = None,
                         check: bool = False) -> list[dict]:
    """Max observed lhs / ((p*-1)‖f‖_p‖g‖_q) per p over ``family``."""
    rows = []
    for p in ps:
        bp = bm.BellmanParams(p)
        ratios = [embedding_ratio(bilinear_integral(f, g, bp, res, check).value, f, g, bp) for f, g in family]
        rows.append({"p": p, "max_ratio": max(ratios), "ratios": ratios})
    return rows


def dimension_scan(ns: Sequence[int], p: float = 2.0, res: Resolution | None = None) -> list[dict]:
    """Ratio for the Gaussian pair f = g = h_0 across dimensions."""
    bp = bm.BellmanParams(p)
    out = []
    for n in ns:
        f, g = gaussian_pair(n)
        lhs = bilinear_integral(f, g, bp, res, check=False).value
        out.append({"n": n, "lhs": lhs, "ratio": embedding_ratio(lhs, f, g, bp)})
    return out


__all__ = [
    "Resolution", "IntegralValue", "EmbeddingResult", "PotentialTerm", "bilinear_integral", "middle_integral",
    "upper_bound", "embedding_ratio", "embedding_chain", "chain_reports", "potential_term",
    "potential_term_closed", "gaussian_pair", "random_pairs", "embedding_ratio_scan", "dimension_scan",
    "t_rule", "x_grid", "interval_grid", "stopwatch",
]
