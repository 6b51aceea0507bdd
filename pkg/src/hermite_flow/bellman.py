"""The two-branch Bellman function Q on Ω and certification of its properties.

Q(ζ, η, Z, H) = 2(Z + H) - Φ(ζ, η), with Φ = φ(|ζ|, |η|) and, for p ≥ 2,

    φ(u, v) = (1 + 2δ/p) u^p + (1 + (2/q - 1)δ) v^q      if u^p ≥ v^q  (branch "A")
    φ(u, v) = u^p + v^q + δ u² v^{2-q}                     if u^p ≤ v^q  (branch "B")

with q = p/(p-1) and δ = q(q-1)/8.  For p < 2 the roles of (ζ, Z, p) and
(η, H, q) are exchanged, so every formula below runs on the "working"
orientation in which the exponent on the first slot is ≥ 2.

Differential forms use real coordinates (Re ζ, Im ζ, Re η, Im η, Z, H).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .report import CheckReport, stopwatch

GAMMA_EPS = 1e-3


class DomainError(ValueError):
    """The point does not lie in Ω."""


@dataclass(frozen=True)
class BellmanParams:
    p: float

    def __post_init__(self):
        if not (np.isfinite(self.p) and self.p > 1):
            raise ValueError(f"p must exceed 1, got {self.p}")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1)

    @property
    def pstar(self) -> float:
        return max(self.p, self.q)

    @property
    def swapped(self) -> bool:
        return self.p < 2

    @property
    def P(self) -> float:
        """Working exponent on the first slot (≥ 2)."""
        return self.pstar

    @property
    def Qx(self) -> float:
        """Working conjugate exponent (≤ 2)."""
        return min(self.p, self.q)

    @property
    def delta(self) -> float:
        r = self.Qx
        return r * (r - 1) / 8


@dataclass(frozen=True)
class BellmanPoint:
    zeta: np.ndarray
    eta: np.ndarray
    Z: float
    H: float

    def __post_init__(self):
        object.__setattr__(self, "zeta", np.atleast_1d(np.asarray(self.zeta, dtype=complex)))
        object.__setattr__(self, "eta", np.atleast_1d(np.asarray(self.eta, dtype=complex)))

    @property
    def M(self) -> int:
        return self.zeta.size

    @property
    def N(self) -> int:
        return self.eta.size

    def real_vector(self) -> np.ndarray:
        return np.concatenate([self.zeta.real, self.zeta.imag, self.eta.real, self.eta.imag, [self.Z, self.H]])

    @classmethod
    def from_real(cls, w, M: int, N: int) -> "BellmanPoint":
        w = np.asarray(w, dtype=float)
        z = w[:M] + 1j * w[M:2 * M]
        e = w[2 * M:2 * M + N] + 1j * w[2 * M + N:2 * M + 2 * N]
        return cls(z, e, float(w[-2]), float(w[-1]))

    def check_domain(self, bp: BellmanParams, rtol: float = 1e-12) -> None:
        u = np.linalg.norm(self.zeta)
        v = np.linalg.norm(self.eta)
        if u ** bp.p > self.Z * (1 + rtol) or v ** bp.q > self.H * (1 + rtol):
            raise DomainError(f"point outside Ω: |ζ|^p={u ** bp.p:.6g} > Z={self.Z:.6g} "
                              f"or |η|^q={v ** bp.q:.6g} > H={self.H:.6g}")


# --------------------------------------------------------------------------
# the profile φ(u, v) in working orientation


@dataclass
class PhiParts:
    """φ and its first/second partial derivatives at (u, v); arrays broadcast."""

    phi: np.ndarray
    u: np.ndarray
    v: np.ndarray
    uu: np.ndarray
    uv: np.ndarray
    vv: np.ndarray
    branch_a: np.ndarray


def _pow(x, e):
    if e == 0:
        return np.ones(np.shape(x))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, np.power(np.maximum(x, 1e-300), e), 0.0 if e > 0 else np.inf)


def _times(coef, w):
    """coef·w with 0·∞ read as 0 (a singular coefficient against a vanishing increment)."""
    with np.errstate(invalid="ignore"):
        return np.where(w == 0, 0.0, coef * w)


def phi_parts(u, v, bp: BellmanParams) -> PhiParts:
    """φ, φ_u, φ_v, φ_uu, φ_uv, φ_vv in working exponents P ≥ 2 ≥ Qx."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    P, q, d = bp.P, bp.Qx, bp.delta
    up, vq = _pow(u, P), _pow(v, q)
    a = up >= vq
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # branch A
        ca, cb = 1 + 2 * d / P, 1 + (2 / q - 1) * d
        phiA = ca * up + cb * vq
        uA = (P + 2 * d) * _pow(u, P - 1)
        vA = (q + (2 - q) * d) * _pow(v, q - 1)
        uuA = (P + 2 * d) * (P - 1) * _pow(u, P - 2)
        vvA = (q + (2 - q) * d) * (q - 1) * _pow(v, q - 2)
        uvA = np.zeros(np.broadcast(u, v).shape)
        # branch B
        v2q = _pow(v, 2 - q)
        phiB = up + vq + d * u * u * v2q
        uB = P * _pow(u, P - 1) + 2 * d * u * v2q
        vB = q * _pow(v, q - 1) + d * (2 - q) * u * u * _pow(v, 1 - q)
        uuB = P * (P - 1) * _pow(u, P - 2) + 2 * d * v2q
        vvB = q * (q - 1) * _pow(v, q - 2) + d * (2 - q) * (1 - q) * u * u * _pow(v, -q)
        uvB = 2 * d * (2 - q) * u * _pow(v, 1 - q)
    pick = lambda x, y: np.where(a, x, y)  # noqa: E731
    return PhiParts(pick(phiA, phiB), pick(uA, uB), pick(vA, vB), pick(uuA, uuB), pick(uvA, uvB),
                    pick(vvA, vvB), a)


def _working(zeta, eta, bp: BellmanParams):
    return (eta, zeta) if bp.swapped else (zeta, eta)


def _norms(x):
    return np.sqrt(np.sum(np.abs(x) ** 2, axis=-1))


def tau_working(u, v, bp: BellmanParams):
    """τ in working orientation: (P-1)u^{P-2} on branch A, v^{2-q} on branch B."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    a = _pow(u, bp.P) >= _pow(v, bp.Qx)
    return np.where(a, (bp.P - 1) * _pow(u, bp.P - 2), _pow(v, 2 - bp.Qx))


def tau_select(u: float, v: float, bp: BellmanParams) -> float:
    """τ(|ζ|, |η|) for which (ii) and (iii) hold; oriented as in the statement.

    Raises ValueError on the degenerate set where the branch formula gives 0.
    """
    if u < 0 or v < 0:
        raise ValueError("u and v are norms and must be non-negative")
    uw, vw = (v, u) if bp.swapped else (u, v)
    t = float(tau_working(uw, vw, bp))
    if not (t > 0 and np.isfinite(t)):
        raise ValueError(f"degenerate τ at (u, v)=({u}, {v}): the branch formula gives {t}")
    return 1.0 / t if bp.swapped else t


def gamma_distance(u, v, bp: BellmanParams):
    """Relative distance |u^p - v^q| / max(u^p, v^q) to the switch surface."""
    up = _pow(np.asarray(u, dtype=float), bp.p)
    vq = _pow(np.asarray(v, dtype=float), bp.q)
    m = np.maximum(up, vq)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(m > 0, np.abs(up - vq) / m, np.inf)


def branch_label(u: float, v: float, bp: BellmanParams) -> str:
    """"A" where |ζ_w|^P ≥ |η_w|^q in working orientation, else "B"."""
    uw, vw = (v, u) if bp.swapped else (u, v)
    return "A" if uw ** bp.P >= vw ** bp.Qx else "B"


# --------------------------------------------------------------------------
# vectorized field-level helpers (used by the semigroup field)


def bellman_phi(zeta, eta, bp: BellmanParams):
    """Φ(ζ, η) for arrays of complex vectors (vector axis last)."""
    zw, ew = _working(np.asarray(zeta), np.asarray(eta), bp)
    return phi_parts(_norms(zw), _norms(ew), bp).phi


def lambda_term(zeta, eta, bp: BellmanParams):
    """Λ = uφ_u + vφ_v - φ = Q - ω·∇Q."""
    zw, ew = _working(np.asarray(zeta), np.asarray(eta), bp)
    u, v = _norms(zw), _norms(ew)
    pp = phi_parts(u, v, bp)
    return u * pp.u + v * pp.v - pp.phi


def hessian_quadratic_form(zeta, eta, dzeta, deta, bp: BellmanParams, parts: PhiParts | None = None):
    """⟨d²Φ h, h⟩ = ⟨-d²Q h, h⟩ for the increment h = (dζ, dη), batched.

    Uses the radial split φ_uu a² + 2φ_uv ab + φ_vv b² + (φ_u/u)|P_ζ h_ζ|² + (φ_v/v)|P_η h_η|²
    with a = Re⟨h_ζ, e_ζ⟩ and b = Re⟨h_η, e_η⟩.  At ζ = 0 (resp. η = 0) the
    tangential coefficient is taken as its limit φ_uu (resp. φ_vv).
    """
    zw, ew = _working(np.asarray(zeta), np.asarray(eta), bp)
    dzw, dew = _working(np.asarray(dzeta), np.asarray(deta), bp)
    u, v = _norms(zw), _norms(ew)
    pp = phi_parts(u, v, bp) if parts is None else parts
    with np.errstate(invalid="ignore", divide="ignore"):
        ez = np.where(u[..., None] > 0, zw / np.where(u > 0, u, 1)[..., None], 0)
        ee = np.where(v[..., None] > 0, ew / np.where(v > 0, v, 1)[..., None], 0)
        a = np.real(np.sum(dzw * np.conj(ez), axis=-1))
        b = np.real(np.sum(dew * np.conj(ee), axis=-1))
        hz2 = np.sum(np.abs(dzw) ** 2, axis=-1)
        he2 = np.sum(np.abs(dew) ** 2, axis=-1)
        tu = np.where(u > 0, pp.u / np.where(u > 0, u, 1), pp.uu)
        tv = np.where(v > 0, pp.v / np.where(v > 0, v, 1), pp.vv)
        radial = _times(pp.uu, a * a) + 2 * _times(pp.uv, a * b) + _times(pp.vv, b * b)
        return radial + _times(tu, np.maximum(hz2 - a * a, 0)) + _times(tv, np.maximum(he2 - b * b, 0))


# --------------------------------------------------------------------------
# point API


def q_eval(w: BellmanPoint, bp: BellmanParams, check: bool = True) -> float:
    """Q(ω) = 2(Z + H) - Φ(ζ, η)."""
    if check:
        w.check_domain(bp)
    return float(2 * (w.Z + w.H) - bellman_phi(w.zeta, w.eta, bp))


def _blocks(M: int, N: int):
    z = np.arange(0, 2 * M)
    e = np.arange(2 * M, 2 * M + 2 * N)
    return z, e


def _real(x):
    return np.concatenate([x.real, x.imag])


def q_gradient(w: BellmanPoint, bp: BellmanParams) -> np.ndarray:
    """∇Q in real coordinates (Re ζ, Im ζ, Re η, Im η, Z, H); ∂Q/∂Z = ∂Q/∂H = 2."""
    zw, ew = _working(w.zeta, w.eta, bp)
    u, v = np.linalg.norm(zw), np.linalg.norm(ew)
    pp = phi_parts(u, v, bp)
    gz = -float(pp.u) * (_real(zw) / u if u > 0 else np.zeros(2 * zw.size))
    ge = -float(pp.v) * (_real(ew) / v if v > 0 else np.zeros(2 * ew.size))
    if bp.swapped:
        gz, ge = ge, gz
    return np.concatenate([gz, ge, [2.0, 2.0]])


@dataclass(frozen=True)
class HessianForm:
    """Real Hessian of Q with the side of γ it was evaluated on."""

    matrix: np.ndarray
    branch: str
    near_gamma: bool
    near_origin: bool = False
    flags: tuple[str, ...] = field(default=())


def q_hessian(w: BellmanPoint, bp: BellmanParams, eps: float = GAMMA_EPS) -> HessianForm:
    """d²Q in real coordinates; one-sided (branch of ω) on γ."""
    zw, ew = _working(w.zeta, w.eta, bp)
    u, v = np.linalg.norm(zw), np.linalg.norm(ew)
    pp = phi_parts(u, v, bp)
    mz, me = 2 * zw.size, 2 * ew.size
    ez = _real(zw) / u if u > 0 else np.zeros(mz)
    ee = _real(ew) / v if v > 0 else np.zeros(me)
    tu = float(pp.u) / u if u > 0 else float(pp.uu)
    tv = float(pp.v) / v if v > 0 else float(pp.vv)
    hz = float(pp.uu) * np.outer(ez, ez) + tu * (np.eye(mz) - np.outer(ez, ez))
    he = float(pp.vv) * np.outer(ee, ee) + tv * (np.eye(me) - np.outer(ee, ee))
    hze = float(pp.uv) * np.outer(ez, ee)
    d2phi = np.block([[hz, hze], [hze.T, he]])
    if bp.swapped:
        perm = np.concatenate([np.arange(mz, mz + me), np.arange(mz)])
        d2phi = d2phi[np.ix_(perm, perm)]
    full = np.zeros((d2phi.shape[0] + 2,) * 2)
    full[:-2, :-2] = -d2phi
    near = bool(gamma_distance(np.linalg.norm(w.zeta), np.linalg.norm(w.eta), bp) < eps)
    origin = bool(u == 0 or v == 0)
    flags = tuple(f for f, on in (("gamma", near), ("origin", origin)) if on)
    return HessianForm(full, "A" if bool(pp.branch_a) else "B", near, origin, flags)


def gradient_constants(samples: list[BellmanPoint], bp: BellmanParams) -> tuple[float, float]:
    """Empirical sup of |∇_ζQ| / max(|ζ|^{p-1}, |η|) and |∇_ηQ| / |η|^{q-1} (p ≥ 2 form).

    For p < 2 the statement is read in working orientation.
    """
    cz, ce = 0.0, 0.0
    for w in samples:
        g = q_gradient(w, bp)
        mz = 2 * w.M
        gz, ge = np.linalg.norm(g[:mz]), np.linalg.norm(g[mz:-2])
        u, v = np.linalg.norm(w.zeta), np.linalg.norm(w.eta)
        if bp.swapped:
            gz, ge, u, v = ge, gz, v, u
        den = max(u ** (bp.P - 1), v)
        if den > 0:
            cz = max(cz, gz / den)
        if v > 0:
            ce = max(ce, ge / v ** (bp.Qx - 1))
    return cz, ce


def analytic_gradient_constants(bp: BellmanParams) -> tuple[float, float]:
    """Upper bounds for the gradient constants from the branch formulas.

    Branch A gives (P + 2δ)u^{P-1} and (q + (2-q)δ)v^{q-1}.  On branch B,
    u ≤ v^{q/P} makes u v^{2-q} ≤ v and u² v^{1-q} ≤ v^{q-1}.
    """
    P, q, d = bp.P, bp.Qx, bp.delta
    return P + 2 * d, q + (2 - q) * d


# --------------------------------------------------------------------------
# sampling and certification


@dataclass(frozen=True)
class SamplerSpec:
    """How to draw ω ∈ Ω for certification.

    Magnitudes: v log-uniform in [10^-v_decades, 10^v_decades]; the ratio
    ρ = u^p / v^q log-uniform in [10^-ratio_decades, 10^ratio_decades] with
    |ρ - 1| / max(ρ, 1) < eps rejected, which keeps samples off γ.
    """

    samples: int = 100_000
    dims: tuple[tuple[int, int], ...] = tuple((m, n) for m in (1, 2, 3) for n in (1, 2, 3))
    increments: int = 100
    eps: float = GAMMA_EPS
    v_decades: float = 3.0
    ratio_decades: float = 6.0
    seed: int = 0


def _unit_complex(rng, count, dim):
    x = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def sample_omega(spec: SamplerSpec, bp: BellmanParams, M: int, N: int, count: int,
                 rng: np.random.Generator):
    """Return (zeta, eta, Z, H) batches in Ω, off γ and off the coordinate origins."""
    v = 10 ** rng.uniform(-spec.v_decades, spec.v_decades, count)
    lo = np.log10(1 + spec.eps)
    sign = np.where(rng.random(count) < 0.5, -1.0, 1.0)
    logr = sign * rng.uniform(lo, spec.ratio_decades, count)
    u = (10 ** logr * v ** bp.q) ** (1 / bp.p)
    zeta = u[:, None] * _unit_complex(rng, count, M)
    eta = v[:, None] * _unit_complex(rng, count, N)
    # Z, H on the boundary of Ω for a quarter of the points, strictly inside otherwise
    slack = rng.exponential(1.0, (2, count)) * (rng.random((2, count)) > 0.25)
    Z = u ** bp.p * (1 + slack[0])
    H = v ** bp.q * (1 + slack[1])
    return zeta, eta, Z, H


def _hessian_batch(zeta, eta, bp: BellmanParams):
    """Real d²Φ for a batch, shape (count, 2M+2N, 2M+2N), in original orientation."""
    count = zeta.shape[0]
    zw, ew = _working(zeta, eta, bp)
    u, v = _norms(zw), _norms(ew)
    pp = phi_parts(u, v, bp)
    ez = np.concatenate([zw.real, zw.imag], axis=1) / u[:, None]
    ee = np.concatenate([ew.real, ew.imag], axis=1) / v[:, None]
    mz, me = ez.shape[1], ee.shape[1]
    out = np.zeros((count, mz + me, mz + me))
    pz = np.einsum("ki,kj->kij", ez, ez)
    pe = np.einsum("ki,kj->kij", ee, ee)
    out[:, :mz, :mz] = pp.uu[:, None, None] * pz + (pp.u / u)[:, None, None] * (np.eye(mz) - pz)
    out[:, mz:, mz:] = pp.vv[:, None, None] * pe + (pp.v / v)[:, None, None] * (np.eye(me) - pe)
    cross = pp.uv[:, None, None] * np.einsum("ki,kj->kij", ez, ee)
    out[:, :mz, mz:] = cross
    out[:, mz:, :mz] = np.transpose(cross, (0, 2, 1))
    if bp.swapped:
        perm = np.concatenate([np.arange(mz, mz + me), np.arange(mz)])
        out = out[:, perm][:, :, perm]
    return out, pp


def certify_theorem21(spec: SamplerSpec, bp: BellmanParams, tolerance: float = 1e-8,
                      delta_factor: float | None = None) -> list[CheckReport]:
    """Certify properties (i)-(iii) on sampled ω; one report per (property, branch).

    (ii) is checked two ways: the smallest eigenvalue of d²Φ - δ·diag(τI, τ⁻¹I)
    (covers every increment) and ``spec.increments`` random unit increments per
    point (the Z, H components of an increment do not enter).  Margins are
    relative to a local scale; ``tolerance`` is the allowed negative relative
    margin.  ``delta_factor`` overrides δ (e.g. 1.0 for the δ-free variant).
    """
    d = bp.delta if delta_factor is None else delta_factor
    rng = np.random.default_rng(spec.seed)
    per_dim = [spec.samples // len(spec.dims) + (1 if i < spec.samples % len(spec.dims) else 0)
               for i in range(len(spec.dims))]
    acc = {(prop, br): [np.inf, 0, 0.0, 0.0] for prop in ("i", "ii", "iii") for br in ("A", "B")}

    def record(prop, branch_a, margin, value, bound):
        for br, mask in (("A", branch_a), ("B", ~branch_a)):
            if not np.any(mask):
                continue
            slot = acc[(prop, br)]
            k = int(np.argmin(np.where(mask, margin, np.inf)))
            if margin[k] < slot[0]:
                slot[0], slot[2], slot[3] = float(margin[k]), float(value[k]), float(bound[k])
            slot[1] += int(np.sum(mask))

    with stopwatch() as ms:
        for (M, N), count in zip(spec.dims, per_dim):
            if count == 0:
                continue
            zeta, eta, Z, H = sample_omega(spec, bp, M, N, count, rng)
            hess, pp = _hessian_batch(zeta, eta, bp)
            ba = np.asarray(pp.branch_a)
            zw, ew = _working(zeta, eta, bp)
            u, v = _norms(zw), _norms(ew)
            tau = tau_working(u, v, bp)
            # (i): Q ≤ 2(Z+H), exact
            q = 2 * (Z + H) - pp.phi
            record("i", ba, 2 * (Z + H) - q, q, 2 * (Z + H))
            # (ii) via eigenvalues
            mz = 2 * M
            diag = np.concatenate([np.full(mz, 1.0), np.full(2 * N, 0.0)])
            tz, te = (1 / tau, tau) if bp.swapped else (tau, 1 / tau)
            weights = tz[:, None] * diag + te[:, None] * (1 - diag)
            shifted = hess - d * weights[:, :, None] * np.eye(hess.shape[1])
            lam = np.linalg.eigvalsh(shifted)[:, 0]
            scale = np.max(np.abs(np.linalg.eigvalsh(hess)), axis=1) + d * (tau + 1 / tau)
            record("ii", ba, lam / scale, lam, np.zeros_like(lam))
            # (ii) via random unit increments
            worst = np.full(count, np.inf)
            worst_val = np.zeros(count)
            for _ in range(spec.increments):
                h = rng.standard_normal((count, hess.shape[1] + 2))
                h /= np.linalg.norm(h, axis=1, keepdims=True)
                hv = h[:, :-2]
                form = np.einsum("ki,kij,kj->k", hv, hess, hv)
                rhs = d * (tz * np.sum(hv[:, :mz] ** 2, 1) + te * np.sum(hv[:, mz:] ** 2, 1))
                m = (form - rhs) / scale
                better = m < worst
                worst = np.where(better, m, worst)
                worst_val = np.where(better, form, worst_val)
            record("ii", ba, worst, worst_val, np.zeros(count))
            # (iii): Q - ω·∇Q = Λ ≥ δ(τ|ζ|² + τ⁻¹|η|²), working orientation
            lam3 = u * pp.u + v * pp.v - pp.phi
            rhs3 = d * (tau * u * u + v * v / tau)
            scale3 = np.abs(pp.phi) + u * pp.u + v * pp.v + rhs3
            record("iii", ba, (lam3 - rhs3) / scale3, lam3, rhs3)
    reports = []
    for (prop, br), (margin, n_pts, value, bound) in sorted(acc.items()):
        if n_pts == 0:
            continue
        tol = 0.0 if prop == "i" else tolerance
        reports.append(CheckReport(
            name=f"theorem21-{prop}",
            params={"p": bp.p, "branch": br, "samples": n_pts, "delta": d},
            value=value, bound=bound, margin=margin, tolerance=tol, runtime_ms=ms[0],
        ))
    return reports
