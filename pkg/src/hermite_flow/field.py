"""Poisson extensions of test functions and the Bellman field b = Q(v(x, t)).

P_t f and its x/t derivatives are exact in coefficient space.  The Z and H
slots, P_t|f|^p and P_t|g|^q, have no finite Hermite expansion and are
computed by kernel quadrature (or, optionally, by a high-degree expansion
of |f|^p).  Because Q is affine in (Z, H), −L′b does not depend on those
slots at all; it is assembled from the spectral data alone.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import bellman as bm
from .hermite import (HermiteExpansion, QuadratureGrid, apply_shell, coordinate_multiply, default_lp_grid,
                      evaluate, gauss_hermite_grid, on_grid, project, spatial_derivative)
from .kernels import default_subordination_nodes, poisson_average


def _as_list(f) -> list[HermiteExpansion]:
    return [f] if isinstance(f, HermiteExpansion) else list(f)


def poisson_apply(e: HermiteExpansion, t: float) -> HermiteExpansion:
    """P_t e = e^{-t√L} e."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return e
    m = np.arange(e.degree + 1)
    return apply_shell(np.exp(-t * np.sqrt(2.0 * m + e.n)), e)


def poisson_dt(e: HermiteExpansion, t: float) -> HermiteExpansion:
    """∂_t P_t e = -√L P_t e."""
    m = np.arange(e.degree + 1)
    lam = np.sqrt(2.0 * m + e.n)
    return apply_shell(-lam * np.exp(-t * lam), e)


def poisson_dtt(e: HermiteExpansion, t: float) -> HermiteExpansion:
    """∂²_t P_t e = L P_t e."""
    m = np.arange(e.degree + 1)
    lam = 2.0 * m + e.n
    return apply_shell(lam * np.exp(-t * np.sqrt(lam)), e)


# --------------------------------------------------------------------------
# snapshots


@dataclass(frozen=True)
class SemigroupSnapshot:
    """P_t f and its derivative data at a batch of points.

    value: (K, ...)   P_t f for K components
    dt:    (K, ...)   ∂_t P_t f
    grad:  (n, K, ...) ∂_{x_j} P_t f
    xval:  (n, K, ...) x_j P_t f
    """

    value: np.ndarray
    dt: np.ndarray
    grad: np.ndarray
    xval: np.ndarray

    @property
    def star_norm2(self) -> np.ndarray:
        return (np.sum(np.abs(self.dt) ** 2, axis=0)
                + np.sum(np.abs(self.grad) ** 2, axis=(0, 1))
                + np.sum(np.abs(self.xval) ** 2, axis=(0, 1)))

    @property
    def star_norm(self) -> np.ndarray:
        return np.sqrt(self.star_norm2)

    @property
    def ladder_star_norm2(self) -> np.ndarray:
        """|∂_t φ|² + ½ Σ_j (|Z_j φ|² + |Z_j* φ|²) with Z_j = -∂_j + x_j, Z_j* = ∂_j + x_j."""
        cre = -self.grad + self.xval
        ann = self.grad + self.xval
        return (np.sum(np.abs(self.dt) ** 2, axis=0)
                + 0.5 * np.sum(np.abs(cre) ** 2 + np.abs(ann) ** 2, axis=(0, 1)))

    def increments(self) -> np.ndarray:
        """∂_j P_t f for j = 0 (time), 1..n (space), shape (n+1, K, ...)."""
        return np.concatenate([self.dt[None], self.grad], axis=0)


def _evaluator(kind: str, target):
    if kind == "points":
        pts = np.atleast_2d(np.asarray(target, dtype=float))
        return lambda e: evaluate(e, pts)
    return lambda e: on_grid(e, target)


def _snapshot(f, t: float, kind: str, target) -> SemigroupSnapshot:
    comps = _as_list(f)
    ev = _evaluator(kind, target)
    n = comps[0].n
    vals, dts, grads, xvals = [], [], [], []
    for c in comps:
        pc = poisson_apply(c, t)
        vals.append(ev(pc))
        dts.append(ev(poisson_dt(c, t)))
        grads.append([ev(spatial_derivative(j, pc)) for j in range(n)])
        xvals.append([ev(coordinate_multiply(j, pc)) for j in range(n)])
    grads = np.moveaxis(np.asarray(grads), 1, 0)
    xvals = np.moveaxis(np.asarray(xvals), 1, 0)
    return SemigroupSnapshot(np.asarray(vals), np.asarray(dts), grads, xvals)


def snapshot(f, x, t: float) -> SemigroupSnapshot:
    """Field data of P_t f at points ``x`` (shape (npts, n) or (n,))."""
    return _snapshot(f, t, "points", x)


def snapshot_on_grid(f, grid: QuadratureGrid, t: float) -> SemigroupSnapshot:
    return _snapshot(f, t, "grid", grid)


# --------------------------------------------------------------------------
# P_t |φ|^s


def _fn_of(phi) -> Callable[[np.ndarray], np.ndarray]:
    """Turn an expansion (or list of them) into a pointwise |·| evaluator."""
    if callable(phi) and not isinstance(phi, HermiteExpansion):
        return lambda pts: np.abs(phi(pts))
    comps = _as_list(phi)

    def fn(pts):
        shape = pts.shape[:-1]
        flat = pts.reshape(-1, pts.shape[-1])
        tot = sum(np.abs(evaluate(c, flat)) ** 2 for c in comps)
        return np.sqrt(tot).reshape(shape)
    return fn


def pt_power_mean(phi, s: float, x, t: float, nodes: QuadratureGrid | None = None,
                  order: int = 40) -> np.ndarray:
    """P_t|φ|^s at points ``x`` by subordination and Gaussian-adapted quadrature.

    ``phi`` is an expansion, a list of expansions (vector-valued, Euclidean
    modulus) or a callable on points (..., n).
    """
    fn = _fn_of(phi)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return poisson_average(t, lambda pts: fn(pts) ** s, x, nodes=nodes, order=order)


def power_expansion(phi, s: float, degree: int, nodes: int | None = None) -> HermiteExpansion:
    """Degree-``degree`` Hermite projection of |φ|^s on a Gauss-Hermite grid."""
    comps = _as_list(phi)
    n = comps[0].n
    grid = gauss_hermite_grid(nodes or (degree + 8), n)
    vals = np.sqrt(sum(np.abs(on_grid(c, grid)) ** 2 for c in comps)) ** s
    return project(vals, grid, degree)


def pt_power_spectral(phi, s: float, x, t: float, degree: int = 60) -> np.ndarray:
    """P_t|φ|^s via the spectral route (accurate when |φ|^s is smooth)."""
    e = power_expansion(phi, s, degree)
    return np.real(evaluate(poisson_apply(e, t), np.atleast_2d(x)))


# --------------------------------------------------------------------------
# the Bellman field


def _zeta_eta(sf: SemigroupSnapshot, sg: SemigroupSnapshot):
    zeta = np.moveaxis(sf.value, 0, -1)
    eta = np.moveaxis(sg.value, 0, -1)
    return zeta, eta


def lprime_b_from_snapshots(sf: SemigroupSnapshot, sg: SemigroupSnapshot, r2, bp: bm.BellmanParams):
    """−L′b = Σ_{j=0}^n ⟨d²Φ ∂_j w, ∂_j w⟩ + |x|² Λ with w = (P_t f, P_t g)."""
    zeta, eta = _zeta_eta(sf, sg)
    zw, ew = (eta, zeta) if bp.swapped else (zeta, eta)
    parts = bm.phi_parts(np.sqrt(np.sum(np.abs(zw) ** 2, -1)), np.sqrt(np.sum(np.abs(ew) ** 2, -1)), bp)
    total = np.zeros(zeta.shape[:-1])
    for dz, de in zip(sf.increments(), sg.increments()):
        total = total + bm.hessian_quadratic_form(zeta, eta, np.moveaxis(dz, 0, -1), np.moveaxis(de, 0, -1),
                                                  bp, parts=parts)
    lam = bm.lambda_term(zeta, eta, bp)
    return total + np.asarray(r2) * lam


def lprime_b(f, g, bp: bm.BellmanParams, x, t: float) -> np.ndarray:
    """−L′b(x, t) at points ``x`` (shape (npts, n))."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    sf, sg = snapshot(f, x, t), snapshot(g, x, t)
    return lprime_b_from_snapshots(sf, sg, np.sum(x * x, axis=-1), bp)


def lemma31_rhs(f, g, bp: bm.BellmanParams, x, t: float) -> np.ndarray:
    """δ ‖P_t f(x)‖_* ‖P_t g(x)‖_*."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return bp.delta * snapshot(f, x, t).star_norm * snapshot(g, x, t).star_norm


def gamma_mask(f, g, bp: bm.BellmanParams, x, t: float, eps: float = bm.GAMMA_EPS) -> np.ndarray:
    """True where v(x, t) lies within relative distance ``eps`` of γ."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    sf, sg = snapshot(f, x, t), snapshot(g, x, t)
    zeta, eta = _zeta_eta(sf, sg)
    u = np.sqrt(np.sum(np.abs(zeta) ** 2, -1))
    v = np.sqrt(np.sum(np.abs(eta) ** 2, -1))
    return bm.gamma_distance(u, v, bp) < eps


def field_v(f, g, bp: bm.BellmanParams, x, t: float, zh: str = "quadrature", **kw):
    """v(x, t) = (P_t f, P_t g, P_t|f|^p, P_t|g|^q); returns (zeta, eta, Z, H).

    ``zh`` selects how the last two slots are computed: ``"quadrature"``
    (kernel quadrature) or ``"spectral"`` (expansion of |f|^p; ``degree`` kw).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    zeta = np.moveaxis(np.asarray([evaluate(poisson_apply(c, t), x) for c in _as_list(f)]), 0, -1)
    eta = np.moveaxis(np.asarray([evaluate(poisson_apply(c, t), x) for c in _as_list(g)]), 0, -1)
    if zh == "quadrature":
        Z = pt_power_mean(f, bp.p, x, t, **kw)
        H = pt_power_mean(g, bp.q, x, t, **kw)
    elif zh == "spectral":
        Z = pt_power_spectral(f, bp.p, x, t, **kw)
        H = pt_power_spectral(g, bp.q, x, t, **kw)
    else:
        raise ValueError(f"unknown Z/H route {zh!r}")
    return zeta, eta, Z, H


def b_value(f, g, bp: bm.BellmanParams, x, t: float, zh: str = "quadrature", **kw) -> np.ndarray:
    """b(x, t) = Q(v(x, t)), no domain check (quadrature noise may sit on ∂Ω)."""
    zeta, eta, Z, H = field_v(f, g, bp, x, t, zh=zh, **kw)
    return 2 * (Z + H) - bm.bellman_phi(zeta, eta, bp)


def lprime_b_finite_difference(f, g, bp: bm.BellmanParams, x, t: float, h: float = 1e-4,
                               zh: str = "quadrature", **kw) -> np.ndarray:
    """−L′b = −∂²_t b − Δb + |x|² b by central differences of b = Q∘v."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[1]
    b0 = b_value(f, g, bp, x, t, zh, **kw)
    lap = (b_value(f, g, bp, x, t + h, zh, **kw) - 2 * b0 + b_value(f, g, bp, x, t - h, zh, **kw)) / h ** 2
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        lap = lap + (b_value(f, g, bp, x + e, t, zh, **kw) - 2 * b0 + b_value(f, g, bp, x - e, t, zh, **kw)) / h ** 2
    return -lap + np.sum(x * x, axis=1) * b0


# --------------------------------------------------------------------------
# boundary terms of the t-integration by parts


def dt_l1_norm(g: HermiteExpansion, t: float, grid: QuadratureGrid | None = None) -> float:
    """∫ |t ∂_t P_t g| dx."""
    grid = default_lp_grid(g.degree, g.n) if grid is None else grid
    vals = on_grid(poisson_dt(g, t), grid)
    return float(t * np.sum(np.abs(vals) * grid.tensor_weights))


def dt_integral(g: HermiteExpansion, t: float, grid: QuadratureGrid | None = None) -> float:
    """t · |∫ ∂_t P_t g dx|."""
    grid = default_lp_grid(g.degree, g.n) if grid is None else grid
    vals = on_grid(poisson_dt(g, t), grid)
    return float(t * abs(np.sum(vals * grid.tensor_weights)))


def sample_field_points(rng: np.random.Generator, count: int, n: int, box: float = 3.0,
                        t_range: tuple[float, float] = (1e-3, 20.0)):
    """x uniform in [-box, box]^n and t log-uniform on ``t_range``."""
    x = rng.uniform(-box, box, (count, n))
    t = np.exp(rng.uniform(np.log(t_range[0]), np.log(t_range[1]), count))
    return x, t


def lemma31_margins(f, g, bp: bm.BellmanParams, x: np.ndarray, t: Sequence[float]) -> np.ndarray:
    """−L′b − δ‖P_tf‖_*‖P_tg‖_* at paired samples (x_i, t_i)."""
    out = np.empty(len(t))
    for i, (xi, ti) in enumerate(zip(x, t)):
        xi = xi[None, :]
        sf, sg = snapshot(f, xi, ti), snapshot(g, xi, ti)
        lhs = lprime_b_from_snapshots(sf, sg, np.sum(xi * xi, 1), bp)
        out[i] = float(lhs[0] - bp.delta * sf.star_norm[0] * sg.star_norm[0])
    return out


__all__ = [
    "SemigroupSnapshot", "poisson_apply", "poisson_dt", "poisson_dtt", "snapshot", "snapshot_on_grid",
    "pt_power_mean", "power_expansion", "pt_power_spectral", "lprime_b", "lprime_b_from_snapshots",
    "lemma31_rhs", "gamma_mask", "field_v", "b_value", "lprime_b_finite_difference", "dt_l1_norm",
    "dt_integral", "sample_field_points", "lemma31_margins", "default_subordination_nodes",
]
