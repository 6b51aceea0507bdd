"""Hermite-Riesz transforms, shell multipliers and the L^p norm scans.

R_j = Z_j L^{-1/2} and R_j* = Z_j* L^{-1/2}, with Z_j the creation and Z_j*
the annihilation operator on axis j.  Everything here acts on coefficient
arrays; L^p quantities are evaluated on a quadrature grid.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .field import poisson_apply, poisson_dt
from .hermite import (HermiteExpansion, QuadratureGrid, SpectralEvaluationError, apply_ladder, apply_shell,
                      default_lp_grid, interval_grid, lp_norm, on_grid, project, random_expansion)
from .kernels import heat_kernel_mass
from .report import CheckReport, error_report, stopwatch

PLAIN = "plain"
STAR = "star"


def _inv_sqrt_l(e: HermiteExpansion) -> HermiteExpansion:
    m = np.arange(e.degree + 1)
    return apply_shell(1.0 / np.sqrt(2.0 * m + e.n), e)


def riesz_apply(j: int, kind: str, e: HermiteExpansion) -> HermiteExpansion:
    """R_j (kind "plain") or R_j* (kind "star") on axis ``j`` (0-based)."""
    if kind == PLAIN:
        return apply_ladder(j, "creation", _inv_sqrt_l(e))
    if kind == STAR:
        return apply_ladder(j, "annihilation", _inv_sqrt_l(e))
    raise ValueError(f"kind must be {PLAIN!r} or {STAR!r}, got {kind!r}")


def riesz_adjoint(j: int, kind: str, e: HermiteExpansion) -> HermiteExpansion:
    """Hilbert-space adjoint of riesz_apply: L^{-1/2} Z_j* (plain) or L^{-1/2} Z_j (star)."""
    if kind == PLAIN:
        return _inv_sqrt_l(apply_ladder(j, "annihilation", e))
    if kind == STAR:
        return _inv_sqrt_l(apply_ladder(j, "creation", e))
    raise ValueError(f"kind must be {PLAIN!r} or {STAR!r}, got {kind!r}")


def riesz_vector(e: HermiteExpansion) -> list[HermiteExpansion]:
    """Components (R_1 f, ..., R_n f, R_1* f, ..., R_n* f), all at degree + 1."""
    d = e.degree + 1
    return [riesz_apply(j, PLAIN, e) for j in range(e.n)] + \
        [riesz_apply(j, STAR, e).with_degree(d) for j in range(e.n)]


def riesz_vector_adjoint(comps: Sequence[HermiteExpansion]) -> HermiteExpansion:
    n = comps[0].n
    plain = [riesz_adjoint(j, PLAIN, comps[j]) for j in range(n)]
    star = [riesz_adjoint(j, STAR, comps[n + j]) for j in range(n)]
    d = max(c.degree for c in plain + star)
    out = plain[0].with_degree(d)
    for c in plain[1:] + star:
        out = out + c.with_degree(d)
    return out


def riesz_vector_norm(e: HermiteExpansion, p: float, grid: QuadratureGrid | None = None) -> float:
    """‖(Σ|R_j f|² + Σ|R_j* f|²)^{1/2}‖_p on ``grid`` (exact coefficient sum at p = 2)."""
    comps = riesz_vector(e)
    if p == 2:
        return float(np.sqrt(sum(c.l2_norm() ** 2 for c in comps)))
    grid = grid or default_lp_grid(e.degree + 1, e.n)
    vals = np.stack([on_grid(c, grid) for c in comps], axis=-1)
    return lp_norm(vals, p, grid)


# --------------------------------------------------------------------------
# words


@dataclass(frozen=True)
class RieszWord:
    """A product of Riesz transforms, written as an operator product.

    ``letters`` lists (axis, kind) pairs left to right; the rightmost letter
    acts first, so the word R*R maps h_0 to (2/√3) h_0.
    """

    letters: tuple[tuple[int, str], ...]
    n: int

    def __post_init__(self):
        if not self.letters:
            raise ValueError("a word needs at least one letter")
        for j, kind in self.letters:
            if not 0 <= j < self.n:
                raise ValueError(f"axis {j} out of range for n={self.n}")
            if kind not in (PLAIN, STAR):
                raise ValueError(f"unknown kind {kind!r}")

    @property
    def length(self) -> int:
        return len(self.letters)

    @classmethod
    def parse(cls, text: str, n: int | None = None) -> "RieszWord":
        """Parse e.g. "1+ 1- 2+" (1-based axes; + plain, - or − star)."""
        tokens = text.replace("−", "-").split()
        letters = []
        for tok in tokens:
            m = re.fullmatch(r"(\d+)([+-])", tok)
            if not m:
                raise ValueError(f"bad word token {tok!r}; expected e.g. '2+' or '1-'")
            letters.append((int(m.group(1)) - 1, PLAIN if m.group(2) == "+" else STAR))
        if n is None:
            n = max(j for j, _ in letters) + 1 if letters else 1
        return cls(tuple(letters), n)

    def __str__(self) -> str:
        return " ".join(f"{j + 1}{'+' if k == PLAIN else '-'}" for j, k in self.letters)


def riesz_compose(word: RieszWord, e: HermiteExpansion) -> HermiteExpansion:
    if e.n != word.n:
        raise ValueError("word and expansion dimensions differ")
    out = e
    for j, kind in reversed(word.letters):
        out = riesz_apply(j, kind, out)
    return out


def riesz_compose_adjoint(word: RieszWord, e: HermiteExpansion) -> HermiteExpansion:
    out = e
    for j, kind in word.letters:
        out = riesz_adjoint(j, kind, out)
    return out


def all_words(n: int, d: int) -> list[RieszWord]:
    """Every word of length d over R_1..R_n, R_1*..R_n*."""
    import itertools

    alphabet = [(j, k) for k in (PLAIN, STAR) for j in range(n)]
    return [RieszWord(tuple(w), n) for w in itertools.product(alphabet, repeat=d)]


# --------------------------------------------------------------------------
# shell multipliers


@dataclass(frozen=True)
class ShellMultiplier:
    """Values ψ_m on the eigenspaces 2m + n, m = 0..M."""

    n: int
    values: np.ndarray
    tag: str = ""

    @property
    def degree(self) -> int:
        return len(self.values) - 1

    def __call__(self, e: HermiteExpansion) -> HermiteExpansion:
        if e.n != self.n:
            raise ValueError("multiplier and expansion dimensions differ")
        if e.degree > self.degree:
            raise ValueError(f"multiplier covers m ≤ {self.degree}, expansion has degree {e.degree}")
        return apply_shell(self.values, e)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def psi_griffi(k):
    """(√k + √(k+2))² / (√k √(k+2)), evaluated as 4 + 4 / ((√k + √(k+2))² √k √(k+2)).

    The second form follows from √(k+2) - √k = 2 / (√k + √(k+2)) and keeps
    the approach to 4 free of cancellation.
    """
    k = np.asarray(k, dtype=float)
    a, b = np.sqrt(k), np.sqrt(k + 2)
    return 4.0 + 4.0 / ((a + b) ** 2 * a * b)


def o_multiplier(n: int, M: int, star: bool = False) -> ShellMultiplier:
    """o_m = -Ψ(2m+n); the star version is o*_m = o_{m-1} with o*_0 = 0."""
    m = np.arange(M + 1)
    if not star:
        return ShellMultiplier(n, -psi_griffi(2.0 * m + n), "o")
    vals = np.zeros(M + 1)
    vals[1:] = -psi_griffi(2.0 * (m[1:] - 1) + n)
    return ShellMultiplier(n, vals, "o*")


def _inner(a: HermiteExpansion, b: HermiteExpansion) -> complex:
    d = max(a.degree, b.degree)
    return a.with_degree(d).inner(b.with_degree(d))


def _t_rule(order: int = 20, t_max: float = 48.0):
    edges = [0.0, 1 / 64]
    while edges[-1] < t_max:
        edges.append(edges[-1] * 2)
    edges = np.array(edges)
    xg, wg = np.polynomial.legendre.leggauss(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    return (mid[:, None] + half[:, None] * xg).reshape(-1), (half[:, None] * wg).reshape(-1)


def duality_rhs(j: int, kind: str, f: HermiteExpansion, g: HermiteExpansion, order: int = 20) -> complex:
    """∫_0^∞ ⟨Z P_t 𝒪 f, ∂_t P_t g⟩ t dt, with Z = Z_j, 𝒪 = o (plain) or Z_j*, o* (star)."""
    mult = o_multiplier(f.n, f.degree, star=(kind == STAR))
    of = mult(f)
    ladder = "creation" if kind == PLAIN else "annihilation"
    ts, ws = _t_rule(order)
    total = 0.0 + 0.0j
    for t, w in zip(ts, ws):
        left = apply_ladder(j, ladder, poisson_apply(of, t))
        total += w * t * _inner(left, poisson_dt(g, t))
    return total


def duality_formula_check(j: int, kind: str, f: HermiteExpansion, g: HermiteExpansion,
                          tolerance: float = 1e-8, order: int = 20) -> CheckReport:
    """Compare the semigroup representation of ⟨R f, g⟩ with the spectral value."""
    with stopwatch() as ms:
        lhs = _inner(riesz_apply(j, kind, f), g)
        rhs = duality_rhs(j, kind, f, g, order)
        # doubling check on the t-rule
        rhs2 = duality_rhs(j, kind, f, g, order + 8)
    scale = max(1.0, abs(lhs))
    err = abs(lhs - rhs) / scale
    details = {"lhs": complex(lhs), "rhs": complex(rhs), "t_rule_change": abs(rhs - rhs2) / scale}
    return error_report(f"duality-{kind}", {"j": j + 1, "n": f.n, "degree": f.degree}, err, tolerance, ms[0],
                        details)


# --------------------------------------------------------------------------
# closed forms


def heat_norm_identities(t: float, n: int) -> tuple[float, float]:
    """(‖e^{-tL}‖_{2→2}, ‖e^{-tL}‖_{∞→∞}) = (e^{-nt}, (cosh 2t)^{-n/2})."""
    if t <= 0:
        raise ValueError("t must be positive")
    return math.exp(-n * t), float(heat_kernel_mass(t, 0.0, n=n))


def heat_two_norm_from_coefficients(t: float, n: int, degree: int = 20) -> float:
    """max_m e^{-t(2m+n)}, the largest coefficient decay factor."""
    return max(math.exp(-(2 * m + n) * t) for m in range(degree + 1))


class DivergenceError(ArithmeticError):
    """The integral diverges (requires n > a)."""


def _gamma_p(n: int, p: float) -> float:
    if p == 1 or p == math.inf:
        return 1.0
    if p < 1:
        raise ValueError("p must be ≥ 1")
    ps = max(p, p / (p - 1))
    return 1.0 - 2.0 / ps


def _pstar(p: float) -> float:
    if p == 1 or p == math.inf:
        return math.inf
    return max(p, p / (p - 1))


def todor_integral(a: float, n: int, p: float) -> float:
    """∫_0^∞ e^{(a-n)t} [e^{-2t} cosh 2t]^{-nγ/2} dt, γ = 1 - 2/p*."""
    if not n > a:
        raise DivergenceError(f"integral diverges for n={n} ≤ a={a}")
    g = _gamma_p(n, p)

    def integrand(t):
        # e^{-2t} cosh 2t = (1 + e^{-4t}) / 2
        return math.exp((a - n) * t - 0.5 * n * g * math.log(0.5 * (1 + math.exp(-4 * t))))

    val, _ = quad(integrand, 0, math.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def zusatz_bound(a: float, n: int, p: float) -> float:
    """(√2^α - 1)/α + √2^α/β with α = a - 2n/p*, β = n - a (α → 0: log√2 + 1/β)."""
    if not n > a:
        raise DivergenceError(f"bound requires n={n} > a={a}")
    ps = _pstar(p)
    alpha = a - (0.0 if ps == math.inf else 2 * n / ps)
    beta = n - a
    ls2 = 0.5 * math.log(2)
    first = ls2 if alpha == 0 else math.expm1(alpha * ls2) / alpha
    return first + math.exp(alpha * ls2) / beta


# --------------------------------------------------------------------------
# multipliers analytic at infinity


@dataclass(frozen=True)
class AnalyticAtInfinity:
    """Ψ(k) = Ψ(∞) + Φ(1/k), Φ(w) = Σ_{i≥1} c_i w^i convergent for |w| < 1/radius.

    ``exact`` optionally evaluates Ψ directly; without it the truncated
    series is used.
    """

    at_infinity: complex
    coefficients: tuple = ()
    radius: float = 0.0
    exact: Callable[[float], complex] | None = field(default=None, compare=False)

    def phi(self, w):
        w = np.asarray(w, dtype=float)
        out = np.zeros_like(w, dtype=complex if np.iscomplexobj(np.asarray(self.coefficients)) else float)
        for i, c in enumerate(self.coefficients, start=1):
            out = out + c * w ** i
        return out

    def __call__(self, k, series: bool = False):
        if self.exact is not None and not series:
            return self.exact(k)
        return self.at_infinity + self.phi(1.0 / np.asarray(k, dtype=float))

    def flagged(self, n: int, degree: int) -> list[float]:
        """Eigenvalues 2m + n ≤ radius, where the series is not guaranteed to converge."""
        return [2.0 * m + n for m in range(degree + 1) if 2.0 * m + n <= self.radius]


def griffi_analytic(terms: int = 40) -> AnalyticAtInfinity:
    """Ψ(k) = 2 + 2(1+w)(1+2w)^{-1/2}, w = 1/k; Ψ(∞) = 4, singular at w = -1/2."""
    # (1+2w)^{-1/2} = Σ binom(-1/2, i) 2^i w^i
    coef = [1.0]
    for i in range(1, terms + 2):
        coef.append(coef[-1] * (-0.5 - (i - 1)) / i * 2)
    # 2(1+w) Σ a_i w^i = 2 Σ (a_i + a_{i-1}) w^i
    series = [2 * (coef[i] + coef[i - 1]) for i in range(1, terms + 1)]
    return AnalyticAtInfinity(4.0, tuple(series), 2.0, exact=psi_griffi)


def identity_analytic() -> AnalyticAtInfinity:
    return AnalyticAtInfinity(1.0, (), 0.0)


def psi_L_apply(psi: AnalyticAtInfinity, e: HermiteExpansion, series: bool = False,
                strict: bool = False) -> HermiteExpansion:
    """Ψ(L) e, shell by shell.

    With ``series=True`` the truncated expansion at infinity is used; shells
    whose eigenvalue lies within the radius are then flagged (and rejected
    when ``strict``).
    """
    lam = 2.0 * np.arange(e.degree + 1) + e.n
    if series:
        bad = psi.flagged(e.n, e.degree)
        if bad and strict:
            raise SpectralEvaluationError(bad[0], "eigenvalue inside the non-analyticity radius")
    vals = np.asarray(psi(lam, series=series))
    return apply_shell(vals, e)


def psi_shell(psi: AnalyticAtInfinity, n: int, M: int) -> ShellMultiplier:
    lam = 2.0 * np.arange(M + 1) + n
    return ShellMultiplier(n, np.asarray(psi(lam), dtype=float), "psi")


# --------------------------------------------------------------------------
# empirical L^p operator norms


@dataclass(frozen=True)
class LinearOp:
    """A linear map between expansions, its Hilbert adjoint and the output degree shift."""

    apply: Callable[[HermiteExpansion], list[HermiteExpansion]]
    adjoint: Callable[[list[HermiteExpansion]], HermiteExpansion]
    shift: int = 0
    name: str = "op"


def identity_op() -> LinearOp:
    return LinearOp(lambda e: [e], lambda c: c[0], 0, "identity")


def riesz_vector_op() -> LinearOp:
    return LinearOp(riesz_vector, riesz_vector_adjoint, 1, "riesz-vector")


def word_op(word: RieszWord) -> LinearOp:
    return LinearOp(lambda e: [riesz_compose(word, e)], lambda c: riesz_compose_adjoint(word, c[0]),
                    word.length, f"word[{word}]")


def multiplier_op(mult: ShellMultiplier) -> LinearOp:
    return LinearOp(lambda e: [mult(e)], lambda c: apply_shell(np.conj(mult.values), c[0]), 0, mult.tag)


@dataclass(frozen=True)
class NormEstimate:
    value: float
    ratios: tuple[float, ...]


def _duality_map(vals: np.ndarray, p: float) -> np.ndarray:
    """|v|^{p-2} v pointwise; ``vals`` has the vector index last."""
    mod = np.sqrt(np.sum(np.abs(vals) ** 2, axis=-1, keepdims=True))
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(mod > 0, mod ** (p - 2), 0.0)
    return vals * scale


def _ratio(op: LinearOp, f: HermiteExpansion, p: float, grid_in, grid_out):
    out = op.apply(f)
    num = lp_norm(np.stack([on_grid(c, grid_out) for c in out], -1), p, grid_out)
    den = lp_norm(on_grid(f, grid_in), p, grid_in)
    return num / den, out


def _norm_grid(degree: int, n: int) -> QuadratureGrid:
    if n <= 2:
        return default_lp_grid(degree, n)
    # 3D tensor grids with 0.5 panels are too large for a scan
    X = math.sqrt(2 * degree + n) + 4
    return interval_grid(X, n, panel_width=1.0, order=6)


def lp_operator_norm_lower(op: LinearOp, p: float, family: Sequence[HermiteExpansion],
                           iterations: int = 50, grid: QuadratureGrid | None = None,
                           out_grid: QuadratureGrid | None = None) -> NormEstimate:
    """Largest ‖op f‖_p / ‖f‖_p seen over the family and a duality-map power iteration.

    Each member is polished with f ← P_M J_q(op* J_p(op f)), where J_p is the
    L^p duality map and P_M the projection onto degree ≤ M.  Every ratio is
    evaluated for an actual expansion, so the result is a lower bound.
    """
    if not family:
        raise ValueError("empty family")
    M = max(e.degree for e in family)
    n = family[0].n
    grid = grid or _norm_grid(M, n)
    out_grid = out_grid or _norm_grid(M + op.shift, n)
    q = p / (p - 1)
    ratios = []
    for f in family:
        f = f.with_degree(M)
        best, out = _ratio(op, f, p, grid, out_grid)
        for _ in range(iterations if p != 2 else 0):
            vals = np.stack([on_grid(c, out_grid) for c in out], -1)
            jp = _duality_map(vals, p)
            comps = [project(jp[..., i], out_grid, M + op.shift) for i in range(jp.shape[-1])]
            z = op.adjoint(comps).with_degree(M)
            zv = on_grid(z, grid)
            nf = project(_duality_map(zv[..., None], q)[..., 0], grid, M)
            norm = nf.l2_norm()
            if norm == 0 or not np.isfinite(norm):
                break
            f = nf / norm
            r, out = _ratio(op, f, p, grid, out_grid)
            # the projected iteration can wander; keep the best seen
            best = max(best, r)
        ratios.append(best)
    return NormEstimate(float(max(ratios)), tuple(ratios))


def scan_family(n: int, degree: int, count: int, seed: int, real: bool = True) -> list[HermiteExpansion]:
    rng = np.random.default_rng(seed)
    fam = [random_expansion(n, degree, rng, complex_valued=not real) for _ in range(count)]
    # add a few structured members: the ground state and low shells
    fam.append(HermiteExpansion.basis([0] * n, degree))
    fam.append(HermiteExpansion.basis([1] + [0] * (n - 1), degree))
    return fam


def loglog_slope(ps: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(value) against log(p)."""
    return float(np.polyfit(np.log(ps), np.log(values), 1)[0])


def riesz_p_scan(ps: Sequence[float], n: int = 1, degree: int = 64, count: int = 4, seed: int = 0,
                 iterations: int = 50) -> list[dict]:
    """Rows {p, norm_lower, ratio_to_linear} for the vector Riesz transform."""
    from ._parallel import pmap

    fam = scan_family(n, degree, count, seed)
    op = riesz_vector_op()

    def one(p):
        est = lp_operator_norm_lower(op, p, fam, iterations)
        return {"p": p, "norm_lower": est.value, "ratio_to_linear": est.value / (_pstar(p) - 1)}

    return pmap(one, list(ps))


__all__ = [
    "PLAIN", "STAR", "riesz_apply", "riesz_adjoint", "riesz_vector", "riesz_vector_adjoint", "riesz_vector_norm",
    "RieszWord", "riesz_compose", "riesz_compose_adjoint", "all_words", "ShellMultiplier", "psi_griffi",
    "o_multiplier", "duality_rhs", "duality_formula_check", "heat_norm_identities",
    "heat_two_norm_from_coefficients", "DivergenceError", "todor_integral", "zusatz_bound", "AnalyticAtInfinity",
    "griffi_analytic", "identity_analytic", "psi_L_apply", "psi_shell", "LinearOp", "identity_op",
    "riesz_vector_op", "word_op", "multiplier_op", "NormEstimate", "lp_operator_norm_lower", "scan_family",
    "loglog_slope", "riesz_p_scan",
]
