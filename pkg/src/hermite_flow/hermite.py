"""Hermite functions, tensor expansions and the spectral calculus of L = -Δ + |x|².

Expansions are stored as dense coefficient cubes of shape ``(degree + 1,) * n``
with every entry of total degree ``|α| > degree`` held at zero.  All operators
act in coefficient space; point values come from the normalized three-term
recurrence.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import roots_hermite

PI_M14 = np.pi ** -0.25
MAX_DEGREE = 2048
X_GUARD = 1e150
_RESCALE = 1e150
_LOG_RESCALE = np.log(_RESCALE)

DEFAULT_DEGREE = {1: 64, 2: 16, 3: 8}


class SpectralEvaluationError(ValueError):
    """A spectral function failed (or was non-finite) at an eigenvalue of L."""

    def __init__(self, eigenvalue, cause=None):
        self.eigenvalue = eigenvalue
        msg = f"spectral function failed at eigenvalue {eigenvalue}"
        if cause is not None:
            msg += f": {cause}"
        super().__init__(msg)


class MultiIndex(tuple):
    """Element of N_0^n indexing the tensor Hermite function h_α."""

    def __new__(cls, entries: Iterable[int]):
        entries = tuple(int(a) for a in entries)
        if not entries:
            raise ValueError("multi-index must have at least one entry")
        if any(a < 0 for a in entries):
            raise ValueError(f"multi-index entries must be non-negative: {entries}")
        return super().__new__(cls, entries)

    @property
    def n(self) -> int:
        return len(self)

    @property
    def order(self) -> int:
        return sum(self)

    def shift(self, axis: int, step: int) -> "MultiIndex":
        a = list(self)
        a[axis] += step
        return MultiIndex(a)


@lru_cache(maxsize=64)
def _total_degree(n: int, size: int) -> np.ndarray:
    idx = np.indices((size,) * n)
    out = idx.sum(axis=0)
    out.setflags(write=False)
    return out


def eigenvalues(n: int, degree: int) -> np.ndarray:
    """Array of 2|α| + n over the coefficient cube of an expansion."""
    return 2.0 * _total_degree(n, degree + 1) + n


# --------------------------------------------------------------------------
# point evaluation


def hermite_functions(degree: int, x) -> np.ndarray:
    """Values h_0(x), ..., h_degree(x), stacked along a new leading axis.

    Uses h_{m+1} = x sqrt(2/(m+1)) h_m - sqrt(m/(m+1)) h_{m-1} on the
    polynomial part with periodic rescaling, so neither the Gaussian factor
    nor the polynomial growth can underflow/overflow before the final product.
    """
    if degree < 0 or degree > MAX_DEGREE:
        raise ValueError(f"degree must lie in [0, {MAX_DEGREE}], got {degree}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(np.abs(x) > X_GUARD):
        raise OverflowError(f"|x| exceeds the recurrence range {X_GUARD:g}")
    out = np.empty((degree + 1,) + x.shape)
    logscale = -0.5 * x * x
    prev = np.zeros_like(x)
    cur = np.full_like(x, PI_M14)
    out[0] = cur * np.exp(logscale)
    for m in range(degree):
        nxt = x * np.sqrt(2.0 / (m + 1)) * cur - np.sqrt(m / (m + 1.0)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if np.any(big):
            cur = np.where(big, cur / _RESCALE, cur)
            prev = np.where(big, prev / _RESCALE, prev)
            logscale = np.where(big, logscale + _LOG_RESCALE, logscale)
        out[m + 1] = cur * np.exp(logscale)
    return out


def hermite_eval(m: int, x):
    """L²-normalized Hermite function h_m at x (scalar or array)."""
    val = hermite_functions(m, x)[m]
    return float(val) if np.ndim(val) == 0 else val


def hermite_tensor_eval(alpha: Sequence[int], x) -> float:
    """h_α(x) = Π_j h_{α_j}(x_j)."""
    alpha = MultiIndex(alpha)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != alpha.n:
        raise ValueError(f"dimension mismatch: len(x)={x.size}, len(alpha)={alpha.n}")
    return float(np.prod([hermite_eval(a, xj) for a, xj in zip(alpha, x)]))


# --------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Tensor quadrature rule on R^n; the same 1-D rule is used on every axis.

    ``kind`` is ``"gauss-hermite"`` (weights with e^{-x²} already removed, so
    ``sum(w f)`` approximates ``∫ f dx``) or ``"interval"`` (composite
    Gauss-Legendre on [-X, X]).
    """

    nodes: np.ndarray
    weights: np.ndarray
    n: int = 1
    kind: str = "gauss-hermite"
    exactness: int | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be matching 1-D arrays")
        if nodes.size == 0:
            raise ValueError("empty quadrature grid")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nodes.size,) * self.n

    @property
    def size(self) -> int:
        return self.nodes.size ** self.n

    @property
    def points(self) -> np.ndarray:
        """All tensor points, shape (size, n), C order."""
        mesh = np.meshgrid(*([self.nodes] * self.n), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    @property
    def tensor_weights(self) -> np.ndarray:
        w = self.weights
        for _ in range(self.n - 1):
            w = np.multiply.outer(w, self.weights)
        return w

    @property
    def radius_squared(self) -> np.ndarray:
        """|x|² on the tensor grid."""
        sq = self.nodes ** 2
        out = sq
        for _ in range(self.n - 1):
            out = np.add.outer(out, sq)
        return out

    def integrate(self, values) -> complex | float:
        values = np.asarray(values)
        return np.tensordot(values, self.tensor_weights, axes=self.n) if values.shape == self.shape \
            else np.sum(values.reshape(self.shape) * self.tensor_weights)


def gauss_hermite_grid(nodes: int, n: int = 1) -> QuadratureGrid:
    """Gauss-Hermite rule with the weight e^{-x²} divided out.

    The modified weights are the reciprocal Christoffel sums 1/Σ_k h_k(x_i)²,
    which avoids forming e^{x_i²}.  Exact for f = poly·e^{-x²} with poly of
    degree ≤ 2·nodes - 1, i.e. for products h_m h_k with m + k ≤ 2·nodes - 1.
    """
    if nodes < 1:
        raise ValueError("need at least one node")
    x, _ = roots_hermite(nodes)
    h = hermite_functions(nodes - 1, x)
    w = 1.0 / np.sum(h * h, axis=0)
    return QuadratureGrid(x, w, n=n, kind="gauss-hermite", exactness=2 * nodes - 1)


def interval_grid(half_width: float, n: int = 1, panel_width: float = 0.5, order: int = 8) -> QuadratureGrid:
    """Composite Gauss-Legendre rule on [-X, X] (tensorized over n axes)."""
    if half_width <= 0:
        raise ValueError("half_width must be positive")
    panels = max(1, int(np.ceil(2 * half_width / panel_width)))
    edges = np.linspace(-half_width, half_width, panels + 1)
    xg, wg = np.polynomial.legendre.leggauss(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * xg[None, :]).reshape(-1)
    weights = (half[:, None] * wg[None, :]).reshape(-1)
    return QuadratureGrid(nodes, weights, n=n, kind="interval")


def default_lp_grid(degree: int, n: int, panel_width: float = 0.5, order: int = 8) -> QuadratureGrid:
    """Truncated-interval grid on [-X, X]^n with X = sqrt(2M + n) + 8."""
    return interval_grid(np.sqrt(2 * degree + n) + 8.0, n=n, panel_width=panel_width, order=order)


# --------------------------------------------------------------------------
# expansions


@dataclass(frozen=True, eq=False)
class HermiteExpansion:
    """Truncated Hermite expansion Σ_{|α| ≤ degree} c_α h_α on R^n."""

    array: np.ndarray

    def __post_init__(self):
        a = np.array(self.array, copy=True)
        if a.ndim < 1 or len(set(a.shape)) != 1 or a.shape[0] < 1:
            raise ValueError(f"coefficient array must be a non-empty cube, got shape {a.shape}")
        if not np.issubdtype(a.dtype, np.complexfloating):
            a = a.astype(float)
        mask = _total_degree(a.ndim, a.shape[0]) > a.shape[0] - 1
        if np.any(a[mask] != 0):
            raise ValueError("coefficients with |α| > degree must vanish")
        a.setflags(write=False)
        object.__setattr__(self, "array", a)

    # construction
    @classmethod
    def zeros(cls, n: int, degree: int, dtype=float) -> "HermiteExpansion":
        return cls(np.zeros((degree + 1,) * n, dtype=dtype))

    @classmethod
    def basis(cls, alpha: Sequence[int], degree: int | None = None) -> "HermiteExpansion":
        alpha = MultiIndex(alpha)
        degree = alpha.order if degree is None else degree
        if alpha.order > degree:
            raise ValueError("|α| exceeds the requested degree")
        a = np.zeros((degree + 1,) * alpha.n)
        a[tuple(alpha)] = 1.0
        return cls(a)

    @classmethod
    def from_coeffs(cls, coeffs: Mapping[Sequence[int], complex], n: int, degree: int | None = None):
        keys = [MultiIndex(k) for k in coeffs]
        if any(k.n != n for k in keys):
            raise ValueError("multi-index length does not match n")
        if degree is None:
            degree = max((k.order for k in keys), default=0)
        dtype = complex if any(np.iscomplexobj(v) for v in coeffs.values()) else float
        a = np.zeros((degree + 1,) * n, dtype=dtype)
        for k, v in zip(keys, coeffs.values()):
            if k.order > degree:
                raise ValueError(f"|α|={k.order} exceeds degree {degree}")
            a[tuple(k)] = v
        return cls(a)

    # shape
    @property
    def n(self) -> int:
        return self.array.ndim

    @property
    def degree(self) -> int:
        return self.array.shape[0] - 1

    @property
    def coeffs(self) -> dict[MultiIndex, complex]:
        """Non-zero coefficients keyed by multi-index."""
        idx = np.argwhere(self.array != 0)
        return {MultiIndex(i): self.array[tuple(i)].item() for i in idx}

    def with_degree(self, degree: int) -> "HermiteExpansion":
        """Zero-pad or truncate (by total degree) to a new degree."""
        d = self.degree
        if degree == d:
            return self
        size = degree + 1
        if degree > d:
            a = np.zeros((size,) * self.n, dtype=self.array.dtype)
            a[(slice(0, d + 1),) * self.n] = self.array
        else:
            a = np.array(self.array[(slice(0, size),) * self.n])
            a[_total_degree(self.n, size) > degree] = 0
        return HermiteExpansion(a)

    # linear structure
    def _aligned(self, other: "HermiteExpansion"):
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        d = max(self.degree, other.degree)
        return self.with_degree(d).array, other.with_degree(d).array

    def __add__(self, other):
        if not isinstance(other, HermiteExpansion):
            return NotImplemented
        a, b = self._aligned(other)
        return HermiteExpansion(a + b)

    def __sub__(self, other):
        if not isinstance(other, HermiteExpansion):
            return NotImplemented
        a, b = self._aligned(other)
        return HermiteExpansion(a - b)

    def __mul__(self, scalar):
        if isinstance(scalar, HermiteExpansion):
            return NotImplemented
        return HermiteExpansion(self.array * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return HermiteExpansion(self.array / scalar)

    def __neg__(self):
        return HermiteExpansion(-self.array)

    def conj(self) -> "HermiteExpansion":
        return HermiteExpansion(np.conj(self.array))

    def inner(self, other: "HermiteExpansion") -> complex:
        """L² inner product ⟨self, other⟩ = ∫ self · conj(other)."""
        a, b = self._aligned(other)
        return complex(np.vdot(b, a))

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.array) ** 2)))

    def allclose(self, other: "HermiteExpansion", atol: float = 1e-12) -> bool:
        a, b = self._aligned(other)
        return bool(np.allclose(a, b, rtol=0, atol=atol))

    def __repr__(self):
        return f"HermiteExpansion(n={self.n}, degree={self.degree}, nnz={np.count_nonzero(self.array)})"


def random_expansion(n: int, degree: int, rng: np.random.Generator, complex_valued: bool = True,
                     normalize: bool = True) -> HermiteExpansion:
    """Random expansion with Gaussian coefficients on {|α| ≤ degree}."""
    size = degree + 1
    a = rng.standard_normal((size,) * n)
    if complex_valued:
        a = a + 1j * rng.standard_normal((size,) * n)
    a[_total_degree(n, size) > degree] = 0
    if normalize:
        a = a / np.sqrt(np.sum(np.abs(a) ** 2))
    return HermiteExpansion(a)


def on_grid(e: HermiteExpansion, grid: QuadratureGrid) -> np.ndarray:
    """Values of the expansion on the tensor grid, shape grid.shape."""
    if grid.n != e.n:
        raise ValueError("grid dimension does not match expansion")
    basis = hermite_functions(e.degree, grid.nodes)
    out = e.array
    for _ in range(e.n):
        out = np.tensordot(out, basis, axes=([0], [0]))
    return out


def evaluate(e: HermiteExpansion, points) -> np.ndarray:
    """Values at scattered points of shape (npts, n); returns (npts,)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[-1] != e.n:
        raise ValueError(f"points have dimension {pts.shape[-1]}, expansion has {e.n}")
    out = e.array
    for j in range(e.n):
        basis = hermite_functions(e.degree, pts[:, j])
        if j == 0:
            out = np.tensordot(out, basis, axes=([0], [0]))
        else:
            out = np.einsum("a...i,ai->...i", out, basis)
    return out


def expand(f: Callable[[np.ndarray], np.ndarray], n: int, degree: int, grid: QuadratureGrid) -> HermiteExpansion:
    """Hermite coefficients c_α = ∫ f h_α dx computed on ``grid``.

    ``f`` receives points of shape (npts, n) and returns (npts,) values.
    """
    if grid.n != n:
        raise ValueError("grid dimension does not match n")
    if grid.exactness is not None and 2 * degree > grid.exactness:
        raise ValueError(f"grid exact to degree {grid.exactness} cannot resolve expansions of degree {degree}")
    values = np.asarray(f(grid.points)).reshape(grid.shape)
    return project(values, grid, degree)


def project(values: np.ndarray, grid: QuadratureGrid, degree: int) -> HermiteExpansion:
    """Coefficients of grid samples against h_α, |α| ≤ degree."""
    basis = hermite_functions(degree, grid.nodes)
    out = np.asarray(values) * grid.tensor_weights
    for _ in range(grid.n):
        out = np.tensordot(out, basis, axes=([0], [1]))
    out = np.array(out)
    out[_total_degree(grid.n, degree + 1) > degree] = 0
    return HermiteExpansion(out)


# --------------------------------------------------------------------------
# ladder and spectral operators


def apply_ladder(j: int, kind: str, e: HermiteExpansion, policy: str = "grow") -> HermiteExpansion:
    """Creation (-∂_j + x_j) or annihilation (∂_j + x_j) on axis ``j``.

    creation:     h_α ↦ sqrt(2(α_j+1)) h_{α+e_j}
    annihilation: h_α ↦ sqrt(2 α_j) h_{α-e_j}
    ``policy="grow"`` raises the degree by one for creation; ``"truncate"``
    keeps the degree and drops the overflow shell.
    """
    if not 0 <= j < e.n:
        raise ValueError(f"axis {j} out of range for n={e.n}")
    if policy not in ("grow", "truncate"):
        raise ValueError(f"unknown policy {policy!r}")
    d = e.degree
    src = np.moveaxis(e.array, j, 0)
    if kind == "creation":
        size = d + 2
        dst = np.zeros((size,) * e.n, dtype=e.array.dtype)
        dst = np.moveaxis(dst, j, 0)
        factors = np.sqrt(2.0 * np.arange(1, d + 2))
        pad = [(0, 1)] * (e.n - 1)
        body = src * factors.reshape((-1,) + (1,) * (e.n - 1))
        dst[1:] = np.pad(body, [(0, 0)] + pad)
        out = HermiteExpansion(np.moveaxis(dst, 0, j))
        return out if policy == "grow" else out.with_degree(d)
    if kind == "annihilation":
        dst = np.zeros_like(src)
        factors = np.sqrt(2.0 * np.arange(1, d + 1))
        dst[:-1] = src[1:] * factors.reshape((-1,) + (1,) * (e.n - 1))
        return HermiteExpansion(np.moveaxis(dst, 0, j))
    raise ValueError(f"kind must be 'creation' or 'annihilation', got {kind!r}")


def creation(j: int, e: HermiteExpansion, policy: str = "grow") -> HermiteExpansion:
    return apply_ladder(j, "creation", e, policy)


def annihilation(j: int, e: HermiteExpansion) -> HermiteExpansion:
    return apply_ladder(j, "annihilation", e)


def spatial_derivative(j: int, e: HermiteExpansion, policy: str = "grow") -> HermiteExpansion:
    """∂/∂x_j = (annihilation - creation) / 2."""
    return (annihilation(j, e) - creation(j, e, policy)) * 0.5


def coordinate_multiply(j: int, e: HermiteExpansion, policy: str = "grow") -> HermiteExpansion:
    """Multiplication by x_j = (annihilation + creation) / 2."""
    return (annihilation(j, e) + creation(j, e, policy)) * 0.5


def spectral_values(phi: Callable[[float], complex], n: int, degree: int) -> np.ndarray:
    """φ(2m + n) for m = 0..degree, with failures tagged by eigenvalue."""
    vals = np.empty(degree + 1, dtype=complex)
    for m in range(degree + 1):
        lam = 2.0 * m + n
        try:
            v = complex(phi(lam))
        except Exception as exc:  # noqa: BLE001 - re-raised with the eigenvalue attached
            raise SpectralEvaluationError(lam, exc) from exc
        if not np.isfinite(v):
            raise SpectralEvaluationError(lam, "non-finite value")
        vals[m] = v
    if np.all(vals.imag == 0):
        vals = vals.real
    return vals


def apply_shell(values: np.ndarray, e: HermiteExpansion) -> HermiteExpansion:
    """Multiply the m-th eigenspace (|α| = m) by ``values[m]``."""
    values = np.asarray(values)
    if values.shape[0] < e.degree + 1:
        raise ValueError("shell values do not cover the expansion degree")
    # corner entries with |α| > degree are zero by invariant; clip their index
    td = np.minimum(_total_degree(e.n, e.degree + 1), e.degree)
    return HermiteExpansion(e.array * values[td])


def apply_spectral(phi: Callable[[float], complex], e: HermiteExpansion) -> HermiteExpansion:
    """φ(L): c_α ↦ φ(2|α| + n) c_α."""
    return apply_shell(spectral_values(phi, e.n, e.degree), e)


def number_operator(e: HermiteExpansion) -> HermiteExpansion:
    """½ Σ_j (Z_j Z_j* + Z_j* Z_j) computed purely with ladder shifts (equals L)."""
    total = None
    for j in range(e.n):
        term = creation(j, annihilation(j, e)) + annihilation(j, creation(j, e))
        total = term if total is None else total + term
    return total * 0.5


# --------------------------------------------------------------------------
# norms


def lp_norm(values, p: float, grid: QuadratureGrid) -> float:
    """Quadrature L^p norm of samples on ``grid`` (p = np.inf gives the max).

    ``values`` has shape ``grid.shape`` or ``grid.shape + (N,)``; in the latter
    case the pointwise modulus is the Euclidean norm over the last axis.
    """
    values = np.asarray(values)
    if grid.size == 0:
        raise ValueError("empty grid")
    if values.shape == grid.shape:
        mod = np.abs(values)
    elif values.shape[:-1] == grid.shape:
        mod = np.sqrt(np.sum(np.abs(values) ** 2, axis=-1))
    elif values.shape == (grid.size,):
        mod = np.abs(values).reshape(grid.shape)
    else:
        raise ValueError(f"values of shape {values.shape} do not match grid {grid.shape}")
    if p == np.inf:
        return float(np.max(mod))
    if p < 1:
        raise ValueError("p must be ≥ 1")
    return float(np.sum(mod ** p * grid.tensor_weights) ** (1.0 / p))


def expansion_lp_norm(e: HermiteExpansion | Sequence[HermiteExpansion], p: float,
                      grid: QuadratureGrid | None = None) -> float:
    """L^p norm of an expansion (or of a vector of expansions, Euclidean pointwise)."""
    comps = [e] if isinstance(e, HermiteExpansion) else list(e)
    if p == 2:
        return float(np.sqrt(sum(c.l2_norm() ** 2 for c in comps)))
    if grid is None:
        grid = default_lp_grid(max(c.degree for c in comps), comps[0].n)
    vals = np.stack([on_grid(c, grid) for c in comps], axis=-1)
    if p == np.inf:
        return _polished_sup(comps, vals, grid)
    return lp_norm(vals, p, grid)


def _polished_sup(comps: Sequence[HermiteExpansion], vals: np.ndarray, grid: QuadratureGrid) -> float:
    """Grid maximum of the pointwise modulus, refined by a local search from the best node."""
    from scipy.optimize import minimize

    mod2 = np.sum(np.abs(vals) ** 2, axis=-1).reshape(-1)
    k = int(np.argmax(mod2))
    x0 = grid.points[k]

    def neg(x):
        return -float(sum(np.abs(evaluate(c, x[None, :])[0]) ** 2 for c in comps))

    res = minimize(neg, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-16, "maxiter": 2000})
    return float(np.sqrt(max(mod2[k], -res.fun)))
