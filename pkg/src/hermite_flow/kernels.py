"""Mehler heat kernel, subordinated Poisson kernel and their kernel bounds.

Conventions: ``K_t(x, y)`` is the Mehler kernel without the (2π)^{-n/2}
normalization, so e^{-tL}φ(x) = (2π)^{-n/2} ∫ K_t(x, y) φ(y) dy.  The Poisson
kernel P_t(x, y) includes that normalization.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln, logsumexp, roots_genlaguerre, roots_hermite

from .hermite import QuadratureGrid
from .report import CheckReport, stopwatch


@dataclass(frozen=True)
class KernelPoint:
    t: float
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError(f"kernel time must be positive, got {self.t}")
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be vectors of equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class GaussianBoundParams:
    """Constants in the bounds C t^power e^{-(a/t)|x-y|²}."""

    C: float = 10.0
    a: float = 0.125

    def __post_init__(self):
        if self.C <= 0 or self.a <= 0:
            raise ValueError("C and a must be positive")


# --------------------------------------------------------------------------
# stable hyperbolic logs


def log_sinh(z):
    z = np.asarray(z, dtype=float)
    return z + np.log(-np.expm1(-2 * z)) - np.log(2.0)


def log_cosh(z):
    z = np.abs(np.asarray(z, dtype=float))
    return z + np.log1p(np.exp(-2 * z)) - np.log(2.0)


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise ValueError("kernel time must be positive")
    return t


# --------------------------------------------------------------------------
# heat kernel


def log_heat_kernel(t, x, y):
    """log K_t(x, y); x, y broadcast with the vector axis last."""
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[-1]
    d2 = np.sum((x - y) ** 2, axis=-1)
    r2 = np.sum(x * x, axis=-1) + np.sum(y * y, axis=-1)
    ls = log_sinh(2 * t)
    return -0.5 * n * ls - 0.5 * d2 * np.exp(-ls) - 0.5 * r2 * np.tanh(t)


def heat_kernel(kp: KernelPoint) -> float:
    """Exact Mehler kernel K_t(x, y)."""
    return float(np.exp(log_heat_kernel(kp.t, kp.x, kp.y)))


def heat_kernel_grad_x(t, x, y):
    """Analytic ∂K_t/∂x_j, shape (..., n)."""
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = np.exp(log_heat_kernel(t, x, y))[..., None]
    tt = np.asarray(t)[..., None] if np.ndim(t) else t
    return k * (-(x - y) * np.exp(-log_sinh(2 * tt)) - x * np.tanh(tt))


def heat_kernel_dt(t, x, y):
    """Analytic ∂K_t/∂t = K_t [(|x|²+|y|²-2⟨x,y⟩cosh 2t)/sinh² 2t - n coth 2t]."""
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[-1]
    ls = log_sinh(2 * t)
    lc = log_cosh(2 * t)
    r2 = np.sum(x * x, axis=-1) + np.sum(y * y, axis=-1)
    xy = np.sum(x * y, axis=-1)
    bracket = r2 * np.exp(-2 * ls) - 2 * xy * np.exp(lc - 2 * ls) - n * np.exp(lc - ls)
    return np.exp(log_heat_kernel(t, x, y)) * bracket


def gaussian_domination_bound(t, x, y):
    """(2t)^{-n/2} e^{-|x-y|²/(4t)}, the free heat kernel majorant."""
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[-1]
    d2 = np.sum((x - y) ** 2, axis=-1)
    return np.exp(-0.5 * n * np.log(2 * t) - d2 / (4 * t))


def heat_kernel_mass(t, x, n: int | None = None):
    """(2π)^{-n/2} ∫ K_t(x, y) dy = (cosh 2t)^{-n/2} e^{-|x|² tanh(2t)/2}.

    ``x`` is a point (vector axis last).  When ``n`` is given, ``x`` may
    instead be |x|² as a scalar or array.
    """
    t = _check_t(t)
    if n is None:
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        r2 = np.sum(x * x, axis=-1)
    else:
        r2 = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * n * log_cosh(2 * t) - 0.5 * r2 * np.tanh(2 * t))
    return float(out) if np.ndim(out) == 0 else out


def heat_gaussian(t, x):
    """Decompose (2π)^{-n/2}K_t(x, ·) = mass · N(mean, var·I).

    Returns (mass, mean, var) with mean = x / cosh 2t and var = tanh 2t.
    """
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    mass = heat_kernel_mass(t, x)
    tt = np.asarray(t)[..., None] if np.ndim(t) else t
    mean = x * np.exp(-log_cosh(2 * tt))
    var = np.tanh(2 * t)
    return mass, mean, var


# --------------------------------------------------------------------------
# direct quadrature oracles


def _adapted_interval_rule(center, half_width, panels=24, order=16):
    xg, wg = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(center - half_width, center + half_width, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * xg).reshape(-1)
    weights = (half[:, None] * wg).reshape(-1)
    return nodes, weights


def _tensor(nodes_list, weights_list):
    mesh = np.meshgrid(*nodes_list, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    w = weights_list[0]
    for wk in weights_list[1:]:
        w = np.multiply.outer(w, wk)
    return pts, w.reshape(-1)


def heat_mass_quadrature(t: float, x, width: float = 14.0) -> float:
    """(2π)^{-n/2} ∫ K_t(x, y) dy by brute-force Gauss-Legendre in y.

    The window is centred on the kernel's peak with half-width ``width``
    standard deviations; the kernel itself is evaluated pointwise.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.size
    sigma = np.sqrt(np.tanh(2 * t))
    center = x / np.cosh(2 * t)
    rules = [_adapted_interval_rule(c, width * sigma) for c in center]
    pts, w = _tensor([r[0] for r in rules], [r[1] for r in rules])
    vals = np.exp(log_heat_kernel(t, x[None, :], pts))
    return float(np.sum(w * vals) / (2 * np.pi) ** (n / 2))


def heat_semigroup_quadrature(t: float, s: float, x, y, width: float = 14.0) -> float:
    """(2π)^{-n/2} ∫ K_t(x, z) K_s(z, y) dz by Gauss-Legendre in z."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    # the product is Gaussian in z; centre the window on its mode
    at, bt = 1 / np.tanh(2 * t), 1 / np.sinh(2 * t)
    as_, bs = 1 / np.tanh(2 * s), 1 / np.sinh(2 * s)
    prec = at + as_
    center = (bt * x + bs * y) / prec
    sigma = 1 / np.sqrt(prec)
    rules = [_adapted_interval_rule(c, width * sigma) for c in center]
    pts, w = _tensor([r[0] for r in rules], [r[1] for r in rules])
    vals = np.exp(log_heat_kernel(t, x[None, :], pts) + log_heat_kernel(s, pts, y[None, :]))
    return float(np.sum(w * vals) / (2 * np.pi) ** (x.size / 2))


def gaussian_expectation(fn: Callable[[np.ndarray], np.ndarray], mean, var, order: int = 40) -> np.ndarray:
    """E[fn(mean + sqrt(var) Z)] for Z standard normal in R^n, by tensor Gauss-Hermite.

    ``mean`` has shape (..., n) and ``var`` broadcasts against (...,).
    ``fn`` maps points (..., n) to values (...).
    """
    mean = np.asarray(mean, dtype=float)
    n = mean.shape[-1]
    z, w = roots_hermite(order)
    z = z * np.sqrt(2.0)
    w = w / np.sqrt(np.pi)
    pts, wt = _tensor([z] * n, [w] * n)
    sd = np.sqrt(np.asarray(var, dtype=float))[..., None, None]
    samples = mean[..., None, :] + sd * pts
    vals = fn(samples)
    return np.sum(vals * wt, axis=-1)


def heat_apply(t: float, fn: Callable[[np.ndarray], np.ndarray], x, order: int = 40):
    """e^{-tL}φ(x) = mass · E[φ(mean + sqrt(var) Z)] (Gaussian-adapted quadrature)."""
    mass, mean, var = heat_gaussian(t, x)
    return mass * gaussian_expectation(fn, mean, var, order)


# --------------------------------------------------------------------------
# subordination


SUBORDINATION_KINDS = ("log-trapezoid", "gauss-laguerre")


def subordination_measure_nodes(k: int | None = None, kind: str = "log-trapezoid") -> QuadratureGrid:
    """Nodes s_i and weights for dμ(s) = π^{-1/2} e^{-s} s^{-1/2} ds.

    ``"log-trapezoid"`` (default) applies the trapezoid rule in u = log s on
    [-72, 4.5]; the integrand decays double-exponentially at both ends, so
    the rule is spectrally accurate uniformly in the parameter of
    e^{-c/s}.  ``"gauss-laguerre"`` is the generalized Gauss-Laguerre rule with
    exponent -1/2, which loses accuracy when c is small.
    """
    if kind == "gauss-laguerre":
        k = 64 if k is None else k
        if k < 1:
            raise ValueError("need at least one node")
        s, w = roots_genlaguerre(k, -0.5)
        w = w / np.sqrt(np.pi)
        return QuadratureGrid(s, w / np.sum(w) * 1.0, kind="subordination-gauss-laguerre", exactness=2 * k - 1)
    if kind != "log-trapezoid":
        raise ValueError(f"unknown subordination rule {kind!r}; expected one of {SUBORDINATION_KINDS}")
    k = 600 if k is None else k
    if k < 2:
        raise ValueError("log-trapezoid rule needs at least two nodes")
    u, h = np.linspace(-72.0, 4.5, k, retstep=True)
    w = h * np.exp(0.5 * u - np.exp(u)) / np.sqrt(np.pi)
    keep = w > 1e-300
    return QuadratureGrid(np.exp(u[keep]), w[keep], kind="subordination-log-trapezoid")


_DEFAULT_NODES: QuadratureGrid | None = None


def default_subordination_nodes() -> QuadratureGrid:
    global _DEFAULT_NODES
    if _DEFAULT_NODES is None:
        _DEFAULT_NODES = subordination_measure_nodes()
    return _DEFAULT_NODES


def subordinate_scalar(fn: Callable[[np.ndarray], np.ndarray], nodes: QuadratureGrid | None = None) -> float:
    """∫ fn(s) dμ(s) on the subordination rule."""
    nodes = default_subordination_nodes() if nodes is None else nodes
    return float(np.sum(nodes.weights * fn(nodes.nodes)))


class KernelUnderflowError(ArithmeticError):
    pass


def poisson_kernel(kp: KernelPoint, nodes: QuadratureGrid | None = None) -> float:
    """P_t(x, y) = (2π)^{-n/2} ∫ K_{t²/4s}(x, y) dμ(s), summed in log space."""
    nodes = default_subordination_nodes() if nodes is None else nodes
    tau = kp.t ** 2 / (4 * nodes.nodes)
    logs = log_heat_kernel(tau, kp.x[None, :], kp.y[None, :]) + np.log(nodes.weights)
    if not np.any(np.isfinite(logs)):
        raise KernelUnderflowError(f"all subordinated heat kernel values underflow at t={kp.t}")
    return float(np.exp(logsumexp(logs) - 0.5 * kp.n * np.log(2 * np.pi)))


def poisson_kernel_dt(kp: KernelPoint, nodes: QuadratureGrid | None = None) -> float:
    """∂P_t(x, y)/∂t = (2π)^{-n/2} ∫ (t/2s) ψ'(t²/4s) dμ(s), ψ(u) = K_u(x, y)."""
    nodes = default_subordination_nodes() if nodes is None else nodes
    s = nodes.nodes
    tau = kp.t ** 2 / (4 * s)
    d = heat_kernel_dt(tau, kp.x[None, :], kp.y[None, :]) * kp.t / (2 * s)
    return float(np.sum(nodes.weights * d) / (2 * np.pi) ** (kp.n / 2))


def poisson_kernel_grad_x(kp: KernelPoint, nodes: QuadratureGrid | None = None) -> np.ndarray:
    nodes = default_subordination_nodes() if nodes is None else nodes
    tau = kp.t ** 2 / (4 * nodes.nodes)
    g = heat_kernel_grad_x(tau, kp.x[None, :], kp.y[None, :])
    return np.sum(nodes.weights[:, None] * g, axis=0) / (2 * np.pi) ** (kp.n / 2)


def poisson_bound(kp: KernelPoint) -> float:
    """Γ((n+1)/2) π^{-(n+1)/2} t / (|x-y|² + t²)^{(n+1)/2}."""
    n = kp.n
    d2 = float(np.sum((kp.x - kp.y) ** 2))
    logc = gammaln((n + 1) / 2) - 0.5 * (n + 1) * np.log(np.pi)
    return float(np.exp(logc + np.log(kp.t) - 0.5 * (n + 1) * np.log(d2 + kp.t ** 2)))


def poisson_mass(t: float, x, nodes: QuadratureGrid | None = None) -> float:
    """∫ P_t(x, y) dy = ∫ mass(t²/4s, x) dμ(s)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    nodes = default_subordination_nodes() if nodes is None else nodes
    tau = t ** 2 / (4 * nodes.nodes)
    return float(np.sum(nodes.weights * heat_kernel_mass(tau, float(x @ x), n=x.size)))


def poisson_average(t: float, fn: Callable[[np.ndarray], np.ndarray], x, nodes: QuadratureGrid | None = None,
                  order: int = 40, prune: float = 1e-18) -> np.ndarray:
    """P_tφ(x) by subordination and Gaussian-adapted quadrature at each node.

    ``x`` has shape (..., n).  Nodes whose total weight w_i·mass_i is below
    ``prune`` at every x are skipped; their contribution is bounded by
    ``prune`` times sup|φ| per node.
    """
    x = np.asarray(x, dtype=float)
    nodes = default_subordination_nodes() if nodes is None else nodes
    if t == 0:
        return fn(x)
    out = np.zeros(x.shape[:-1])
    r2 = np.sum(x * x, axis=-1)
    n = x.shape[-1]
    for s, w in zip(nodes.nodes, nodes.weights):
        tau = t * t / (4 * s)
        mass = heat_kernel_mass(tau, r2, n=n)
        if np.all(w * mass < prune):
            continue
        mean = x / np.cosh(2 * tau)
        out = out + w * mass * gaussian_expectation(fn, mean, np.tanh(2 * tau), order)
    return out


def heat_dt_mass(t, y, n: int, s):
    """(2π)^{-n/2} ∫ ∂_t K_{t²/4s}(x, y) dx in closed form.

    With α = sinh(t²/2s) and β = cosh(t²/2s) this equals
    -(t/2s) β^{-n/2} e^{-α|y|²/(2β)} [|y|²/β² + nα/β].
    ``y`` is |y| (scalar) or a vector.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t <= 0) or np.any(s <= 0):
        raise ValueError("t and s must be positive")
    y = np.asarray(y, dtype=float)
    r2 = float(y @ y) if y.ndim == 1 else y ** 2
    z = t * t / (2 * s)
    lb = log_cosh(z)
    th = np.tanh(z)
    val = -(t / (2 * s)) * np.exp(-0.5 * n * lb - 0.5 * th * r2) * (r2 * np.exp(-2 * lb) + n * th)
    return float(val) if np.ndim(val) == 0 else val


def heat_dt_mass_quadrature(t: float, y, n: int, s: float, width: float = 14.0) -> float:
    """(2π)^{-n/2} ∫ ∂_t K_{t²/4s}(x, y) dx by Gauss-Legendre in x (oracle)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.size == 1 and n > 1:
        y = np.concatenate([y, np.zeros(n - 1)])
    tau = t * t / (4 * s)
    sigma = np.sqrt(np.tanh(2 * tau))
    center = y / np.cosh(2 * tau)
    rules = [_adapted_interval_rule(c, width * sigma) for c in center]
    pts, w = _tensor([r[0] for r in rules], [r[1] for r in rules])
    vals = heat_kernel_dt(tau, pts, y[None, :]) * t / (2 * s)
    return float(np.sum(w * vals) / (2 * np.pi) ** (n / 2))


# --------------------------------------------------------------------------
# gradient-bound certification


GRADIENT_KINDS = ("heat-dx", "heat-dt", "poisson-dx", "poisson-dt")


def sample_kernel_points(rng: np.random.Generator, count: int, n: int, box: float = 3.0,
                         t_range: tuple[float, float] = (0.01, 10.0)) -> list[KernelPoint]:
    """x, y uniform in [-box, box]^n and t log-uniform on ``t_range``."""
    xs = rng.uniform(-box, box, size=(count, n))
    ys = rng.uniform(-box, box, size=(count, n))
    ts = np.exp(rng.uniform(np.log(t_range[0]), np.log(t_range[1]), size=count))
    # a slice of exact diagonal samples, where only smoothness is at stake
    ys[: count // 20] = xs[: count // 20]
    return [KernelPoint(float(t), x, y) for t, x, y in zip(ts, xs, ys)]


def _fd_derivative(kind: str, kp: KernelPoint, nodes) -> float:
    """Central finite-difference derivative magnitude (max over axes for dx)."""
    if kind.startswith("heat"):
        f = lambda t, x: heat_kernel(KernelPoint(t, x, kp.y))  # noqa: E731
    else:
        f = lambda t, x: poisson_kernel(KernelPoint(t, x, kp.y), nodes)  # noqa: E731
    if kind.endswith("dt"):
        h = 1e-5 * kp.t
        return abs(f(kp.t + h, kp.x) - f(kp.t - h, kp.x)) / (2 * h)
    h = 1e-5 * np.sqrt(kp.t) if kind.startswith("heat") else 1e-5 * kp.t
    worst = 0.0
    for j in range(kp.n):
        e = np.zeros(kp.n)
        e[j] = h
        worst = max(worst, abs(f(kp.t, kp.x + e) - f(kp.t, kp.x - e)) / (2 * h))
    return worst


def gradient_bound_value(kind: str, kp: KernelPoint, params: GaussianBoundParams) -> float:
    """Right-hand side of the kernel derivative bound for ``kind``."""
    n, t = kp.n, kp.t
    d2 = float(np.sum((kp.x - kp.y) ** 2))
    if kind == "heat-dx":
        return params.C * t ** (-(n + 1) / 2) * np.exp(-params.a * d2 / t)
    if kind == "heat-dt":
        return params.C * t ** (-n / 2 - 1) * np.exp(-params.a * d2 / t)
    if kind == "poisson-dx":
        return params.C * t / (d2 + t * t) ** ((n + 2) / 2)
    if kind == "poisson-dt":
        return params.C / (d2 + t * t) ** ((n + 1) / 2)
    raise ValueError(f"unknown bound kind {kind!r}; expected one of {GRADIENT_KINDS}")


def max_decay_rate(samples: list[KernelPoint], C: float, kind: str = "heat-dx") -> float:
    """Largest a for which the heat bound with constant C holds on ``samples``.

    Each sample with x ≠ y gives a ≤ (t/|x-y|²) log(C t^power / |D|); a
    diagonal sample either holds for every a or fails for all of them.
    """
    if kind not in ("heat-dx", "heat-dt"):
        raise ValueError("decay rate only applies to heat kernel bounds")
    best = np.inf
    for kp in samples:
        d = _fd_derivative(kind, kp, None)
        power = -(kp.n + 1) / 2 if kind == "heat-dx" else -kp.n / 2 - 1
        base = C * kp.t ** power
        d2 = float(np.sum((kp.x - kp.y) ** 2))
        if d == 0:
            continue
        if d2 == 0:
            if d > base:
                return -np.inf
            continue
        best = min(best, kp.t / d2 * np.log(base / d))
    return float(best)


def certify_gradient_bounds(samples: list[KernelPoint], params: GaussianBoundParams | None = None,
                            kind: str = "heat-dx", nodes: QuadratureGrid | None = None,
                            tolerance: float = 0.0) -> CheckReport:
    """Compare finite-difference kernel derivatives with the stated bound.

    value = worst ratio |derivative| / bound, margin = 1 - value.
    """
    params = GaussianBoundParams() if params is None else params
    if kind not in GRADIENT_KINDS:
        raise ValueError(f"unknown bound kind {kind!r}; expected one of {GRADIENT_KINDS}")
    with stopwatch() as ms:
        worst = 0.0
        worst_at = None
        for kp in samples:
            d = _fd_derivative(kind, kp, nodes)
            b = gradient_bound_value(kind, kp, params)
            r = d / b if b > 0 else np.inf
            if r > worst:
                worst, worst_at = r, kp
    n = samples[0].n if samples else 0
    details = {} if worst_at is None else {"t": worst_at.t, "x": worst_at.x.tolist(), "y": worst_at.y.tolist()}
    return CheckReport(
        name=f"kernel-bound-{kind}",
        params={"n": n, "C": params.C, "a": params.a, "samples": len(samples)},
        value=float(worst), bound=1.0, margin=float(1.0 - worst), tolerance=tolerance,
        runtime_ms=ms[0], details=details,
    )
