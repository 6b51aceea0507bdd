"""Report-producing verifications shared by the CLI and the acceptance suite.

Each function returns one or more CheckReport objects; none of them print.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from . import bellman as bm
from . import embedding as emb
from . import kernels as kn
from . import riesz as rz
from .field import dt_integral, dt_l1_norm, lemma31_margins, sample_field_points
from .hermite import DEFAULT_DEGREE, HermiteExpansion, MultiIndex, evaluate, random_expansion
from .report import CheckReport, error_report, stopwatch


def _rel(a, b) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


# --------------------------------------------------------------------------
# kernels


def mass_identity_check(n: int, pairs: int = 20, seed: int = 0, tolerance: float = 1e-8) -> CheckReport:
    """Closed-form heat kernel mass against brute-force quadrature."""
    rng = np.random.default_rng(seed)
    with stopwatch() as ms:
        worst = 0.0
        for _ in range(pairs):
            t = float(np.exp(rng.uniform(np.log(0.01), np.log(5.0))))
            x = rng.uniform(-3, 3, n)
            worst = max(worst, _rel(kn.heat_mass_quadrature(t, x), kn.heat_kernel_mass(t, x)))
    return error_report("kernel-mass-identity", {"n": n, "pairs": pairs}, worst, tolerance, ms[0])


def semigroup_check(n: int, pairs: int = 20, seed: int = 0, tolerance: float = 1e-8) -> CheckReport:
    """∫ K_t(x, z) K_s(z, y) dz against K_{t+s}(x, y)."""
    rng = np.random.default_rng(seed + 1)
    with stopwatch() as ms:
        worst = 0.0
        for _ in range(pairs):
            t, s = np.exp(rng.uniform(np.log(0.02), np.log(3.0), 2))
            x, y = rng.uniform(-2, 2, (2, n))
            direct = kn.heat_kernel(kn.KernelPoint(float(t + s), x, y))
            worst = max(worst, _rel(kn.heat_semigroup_quadrature(float(t), float(s), x, y), direct))
    return error_report("kernel-semigroup", {"n": n, "pairs": pairs}, worst, tolerance, ms[0])


def domination_check(n: int, samples: int = 10_000, seed: int = 0) -> CheckReport:
    """K_t(x, y) ≤ (2t)^{-n/2} e^{-|x-y|²/4t} pointwise, compared in log space with no slack."""
    rng = np.random.default_rng(seed + 2)
    with stopwatch() as ms:
        t = np.exp(rng.uniform(np.log(0.01), np.log(10.0), samples))
        x = rng.uniform(-3, 3, (samples, n))
        y = rng.uniform(-3, 3, (samples, n))
        y[: samples // 20] = x[: samples // 20]
        log_k = kn.log_heat_kernel(t, x, y)
        log_b = -0.5 * n * np.log(2 * t) - np.sum((x - y) ** 2, axis=1) / (4 * t)
        gap = log_b - log_k
        k = int(np.argmin(gap))
    return CheckReport("kernel-gaussian-domination", {"n": n, "samples": samples}, float(log_k[k]),
                       float(log_b[k]), float(gap[k]), 0.0, ms[0])


def poisson_spectral_check(n: int, max_order: int = 6, tolerance: float = 1e-6,
                           ts: Sequence[float] = (0.1, 0.5, 1.0, 2.0), order: int | None = None) -> CheckReport:
    """Subordinated P_t h_α against e^{-t√(2|α|+n)} h_α for |α| ≤ max_order."""
    import itertools

    xs = np.array(list(itertools.product(*([[-1.3, 0.0, 0.7, 2.1]] * n))))
    order = order or (40 if n == 1 else 20)
    with stopwatch() as ms:
        worst = 0.0
        for alpha in itertools.product(range(max_order + 1), repeat=n):
            if sum(alpha) > max_order:
                continue
            h = HermiteExpansion.basis(alpha)
            lam = 2 * sum(alpha) + n

            def fn(pts, h=h):
                return evaluate(h, pts.reshape(-1, n)).reshape(pts.shape[:-1])

            exact = evaluate(h, xs)
            for t in ts:
                got = kn.poisson_average(t, fn, xs, order=order)
                worst = max(worst, float(np.max(np.abs(got - math.exp(-t * math.sqrt(lam)) * exact))))
    return error_report("poisson-spectral", {"n": n, "max_order": max_order}, worst, tolerance, ms[0])


def heat_norm_checks(n: int, points: int = 100, tolerance: float = 1e-10) -> list[CheckReport]:
    ts = np.geomspace(1e-3, 10, points)
    with stopwatch() as ms:
        decay_err = 0.0
        mass_err = 0.0
        order_gap = np.inf
        xs = np.linspace(-3, 3, 61)[:, None] * np.ones(n)
        for t in ts:
            two, inf = rz.heat_norm_identities(float(t), n)
            decay_err = max(decay_err, abs(rz.heat_two_norm_from_coefficients(float(t), n) - two))
            sup = float(np.max(kn.heat_kernel_mass(float(t), xs)))
            mass_err = max(mass_err, _rel(sup, inf))
            order_gap = min(order_gap, inf - two)
    return [
        error_report("heat-norm-two", {"n": n, "points": points}, decay_err, 0.0, ms[0]),
        error_report("heat-norm-sup", {"n": n, "points": points}, mass_err, tolerance, ms[0]),
        CheckReport("heat-norm-order", {"n": n, "points": points}, 0.0, float(order_gap), float(order_gap), 0.0, ms[0]),
    ]


def gradient_checks(n: int, samples: int = 200, seed: int = 0,
                    params: kn.GaussianBoundParams | None = None,
                    kinds: Iterable[str] = kn.GRADIENT_KINDS) -> list[CheckReport]:
    rng = np.random.default_rng(seed + 3)
    pts = kn.sample_kernel_points(rng, samples, n)
    return [kn.certify_gradient_bounds(pts, params, kind) for kind in kinds]


# --------------------------------------------------------------------------
# bellman


def bellman_checks(ps: Sequence[float], samples: int = 100_000, seed: int = 0,
                   tolerance: float = 1e-8) -> list[CheckReport]:
    from ._parallel import pmap

    spec = bm.SamplerSpec(samples=samples, seed=seed)
    out = pmap(lambda p: bm.certify_theorem21(spec, bm.BellmanParams(p), tolerance), list(ps))
    return [r for rs in out for r in rs]


def bellman_derivative_checks(p: float, points: int = 1000, seed: int = 0, grad_tol: float = 1e-6,
                              hess_tol: float = 1e-5) -> list[CheckReport]:
    """Analytic gradient/Hessian of Q against central differences at off-γ points."""
    bp = bm.BellmanParams(p)
    rng = np.random.default_rng(seed + 4)
    spec = bm.SamplerSpec(samples=points, seed=seed)
    with stopwatch() as ms:
        g_err = 0.0
        h_err = 0.0
        for k in range(points):
            M, N = spec.dims[k % len(spec.dims)]
            zeta, eta, Z, H = (a[0] for a in bm.sample_omega(spec, bp, M, N, 1, rng))
            w = bm.BellmanPoint(zeta, eta, float(Z), float(H))
            x0 = w.real_vector()
            u, v = np.linalg.norm(zeta), np.linalg.norm(eta)
            # one step scale per block: ζ coordinates, η coordinates, (Z, H)
            scale = np.concatenate([np.full(2 * M, u), np.full(2 * N, v), [1.0, 1.0]])
            grad = bm.q_gradient(w, bp)
            hess = bm.q_hessian(w, bp).matrix

            def q_at(x):
                # Q minus its linear part 2(Z + H), which would swamp the differences
                pt = bm.BellmanPoint.from_real(x, M, N)
                return -float(bm.bellman_phi(pt.zeta, pt.eta, bp))

            def grad_at(x):
                return bm.q_gradient(bm.BellmanPoint.from_real(x, M, N), bp)

            fd_g = np.empty_like(grad)
            fd_h = np.empty_like(hess)
            for i, e in enumerate(np.eye(x0.size)):
                hg, hh = 1e-4 * scale[i], 1e-5 * scale[i]
                fd_g[i] = (q_at(x0 + hg * e) - q_at(x0 - hg * e)) / (2 * hg)
                fd_h[i] = (grad_at(x0 + hh * e) - grad_at(x0 - hh * e)) / (2 * hh)
            fd_g[-2:] += 2.0
            # errors are measured against the natural size of each entry
            gs = np.abs(grad) + np.max(np.abs(grad[:-2]))
            g_err = max(g_err, float(np.max(np.abs(fd_g - grad) / gs)))
            d = np.sqrt(np.abs(np.diag(hess))) + 1e-300
            hs = np.outer(d, d) + np.abs(hess)
            mask = hs > 1e-250
            h_err = max(h_err, float(np.max(np.abs(fd_h - hess)[mask] / hs[mask])))
    params = {"p": p, "points": points}
    return [error_report("bellman-gradient-fd", params, g_err, grad_tol, ms[0]),
            error_report("bellman-hessian-fd", params, h_err, hess_tol, ms[0])]


# --------------------------------------------------------------------------
# semigroup field and embedding


def lemma31_check(f, g, p: float, points: int = 1000, seed: int = 0, tolerance: float = 1e-8,
                  tag: str = "") -> CheckReport:
    bp = bm.BellmanParams(p)
    n = (f if isinstance(f, HermiteExpansion) else f[0]).n
    rng = np.random.default_rng(seed + 5)
    x, t = sample_field_points(rng, points, n)
    with stopwatch() as ms:
        m = lemma31_margins(f, g, bp, x, t)
    params = {"p": p, "n": n, "points": points}
    if tag:
        params["family"] = tag
    return CheckReport("pointwise-lower-bound", params, float(np.min(m)), 0.0, float(np.min(m)), tolerance, ms[0])


def gaussian_lhs_check(n: int = 1, p: float = 2.0, tolerance: float = 1e-6,
                       res: emb.Resolution | None = None, with_middle: bool = True) -> list[CheckReport]:
    """f = g = h_0: lhs = 1/2 in closed form; chain margins."""
    bp = bm.BellmanParams(p)
    f, g = emb.gaussian_pair(n)
    with stopwatch() as ms:
        r = emb.embedding_chain(f, g, bp, res, check=True, with_middle=with_middle)
    params = {"n": n, "p": p, "family": "gaussian"}
    out = [error_report("embedding-lhs-closed-form", params, abs(r.lhs - 0.5), tolerance, ms[0],
                        {"lhs": r.lhs})]
    if with_middle:
        out += emb.chain_reports(r, params, 0.0, ms[0])
    return out


def random_chain_checks(n: int, p: float, count: int = 20, degree: int = 4, seed: int = 0,
                        rtol: float = 1e-5, res: emb.Resolution | None = None) -> list[CheckReport]:
    """Worst relative margins of δ·lhs ≤ middle ≤ upper over seeded random pairs."""
    from ._parallel import pmap

    bp = bm.BellmanParams(p)
    pairs = emb.random_pairs(count, n, degree, seed)
    with stopwatch() as ms:
        results = pmap(lambda fg: emb.embedding_chain(fg[0], fg[1], bp, res, check=False), pairs)
    lo = min(results, key=lambda r: r.lower_margin / max(abs(r.middle), 1e-300))
    hi = min(results, key=lambda r: r.upper_margin / max(abs(r.upper), 1e-300))
    params = {"n": n, "p": p, "pairs": count, "degree": degree, "family": "random"}
    return [emb.chain_reports(lo, params, rtol, ms[0])[0], emb.chain_reports(hi, params, rtol, ms[0])[1]]


def dimension_checks(ns: Sequence[int] = (1, 2, 3), p: float = 2.0, cap: float = 96.0,
                     res: emb.Resolution | None = None) -> list[CheckReport]:
    """Gaussian-family ratio non-increasing in n and ≤ cap."""
    with stopwatch() as ms:
        rows = emb.dimension_scan(ns, p, res)
    ratios = [r["ratio"] for r in rows]
    steps = [ratios[i] - ratios[i + 1] for i in range(len(ratios) - 1)]
    # non-increasing up to rounding of the quadrature
    worst_step = min(steps) if steps else 0.0
    params = {"p": p, "ns": list(ns)}
    return [
        CheckReport("embedding-dimension-monotone", params, float(max(ratios)), float(ratios[0]),
                    float(worst_step), 1e-9, ms[0], {"ratios": ratios}),
        CheckReport("embedding-dimension-cap", params, float(max(ratios)), cap, cap - float(max(ratios)), 0.0, ms[0]),
    ]


def potential_checks(ys: Sequence[float] = (0, 1, 2, 4), n: int = 1, tolerance: float = 1e-6) -> list[CheckReport]:
    out = []
    for y in ys:
        with stopwatch() as ms:
            pt = emb.potential_term(y, n)
            i1, i2 = emb.potential_term_closed(y, n)
        params = {"y": y, "n": n}
        out.append(CheckReport("potential-bound", params, pt.total, pt.bound, pt.bound - pt.total, tolerance, ms[0],
                               {"I1": pt.I1, "I2": pt.I2, "I1_r": i1, "I2_r": i2}))
        out.append(error_report("potential-single-integral", params, abs(pt.I1 + pt.I2 - i1 - i2), tolerance, ms[0]))
        if y == 0:
            out.append(error_report("potential-equality", params, abs(pt.total - 1.0), tolerance, ms[0]))
    return out


def boundary_checks(n: int = 1, degree: int = 4, count: int = 20, seed: int = 0) -> list[CheckReport]:
    """Boundary terms of the t-integration by parts on the seeded degree-≤``degree`` family.

    For a single shell the small-t ratio is about 10^-3 e^{√λ}, so it exceeds
    1% once √λ > ln 10 ≈ 2.3; the details record that ceiling.
    """
    fam = [g for _, g in emb.random_pairs(count, n, degree, seed)]
    with stopwatch() as ms:
        small = max(dt_l1_norm(g, 1e-3) / dt_l1_norm(g, 1.0) for g in fam)
        far = max(dt_integral(g, 20.0) for g in fam)
    lam = 2 * degree + n
    ceiling = 1e-3 * math.exp(math.sqrt(lam) * (1 - 1e-3))
    params = {"n": n, "degree": degree, "count": count}
    return [CheckReport("boundary-small-t", params, small, 0.01, 0.01 - small, 0.0, ms[0],
                        {"top_shell_ratio": ceiling}),
            CheckReport("boundary-large-t", params, far, 1e-6, 1e-6 - far, 0.0, ms[0])]


# --------------------------------------------------------------------------
# riesz and multipliers


def riesz_l2_checks(n: int = 1, count: int = 100, degree: int = 8, seed: int = 0,
                    tolerance: float = 1e-10) -> list[CheckReport]:
    rng = np.random.default_rng(seed + 7)
    with stopwatch() as ms:
        worst = 0.0
        for _ in range(count):
            f = random_expansion(n, degree, rng)
            worst = max(worst, abs(rz.riesz_vector_norm(f, 2) - math.sqrt(2) * f.l2_norm()))
        h0 = HermiteExpansion.basis([0] * n)
        r = rz.riesz_apply(0, rz.PLAIN, h0)
        target = HermiteExpansion.basis(MultiIndex([0] * n).shift(0, 1)) * math.sqrt(2.0 / n)
        coeff_err = float(np.max(np.abs(r.array - target.with_degree(r.degree).array)))
    params = {"n": n, "count": count, "degree": degree}
    return [error_report("riesz-l2-identity", params, worst, tolerance, ms[0]),
            error_report("riesz-ground-state", {"n": n}, coeff_err, 0.0 if n == 1 else 1e-15, ms[0])]


def riesz_scan_checks(ps: Sequence[float], n: int = 1, degree: int = 64, count: int = 4, seed: int = 0,
                      iterations: int = 50, slope_cap: float = 1.2, const: float = 96.0,
                      p2_tol: float = 1e-6) -> tuple[list[CheckReport], list[dict]]:
    with stopwatch() as ms:
        rows = rz.riesz_p_scan(ps, n, degree, count, seed, iterations)
    reports = []
    for row in rows:
        p = row["p"]
        cap = const * (rz._pstar(p) - 1)
        reports.append(CheckReport("riesz-norm", {"n": n, "p": p, "degree": degree}, row["norm_lower"], cap,
                                   cap - row["norm_lower"], 0.0, ms[0]))
        if p == 2:
            reports.append(error_report("riesz-norm-p2", {"n": n, "degree": degree},
                                        abs(row["norm_lower"] - math.sqrt(2)), p2_tol, ms[0]))
    if len(rows) >= 2:
        slope = rz.loglog_slope([r["p"] for r in rows], [r["norm_lower"] for r in rows])
        reports.append(CheckReport("riesz-slope", {"n": n, "ps": list(ps), "degree": degree}, slope, slope_cap,
                                   slope_cap - slope, 0.0, ms[0]))
    return reports, rows


def word_scan_checks(word: rz.RieszWord, ps: Sequence[float], degree: int, count: int = 3, seed: int = 0,
                     iterations: int = 20, const: float = 96.0) -> tuple[list[CheckReport], list[dict]]:
    fam = rz.scan_family(word.n, degree, count, seed)
    op = rz.word_op(word)
    reports, rows = [], []
    for p in ps:
        with stopwatch() as ms:
            est = rz.lp_operator_norm_lower(op, p, fam, iterations)
        cap = (const * (rz._pstar(p) - 1)) ** word.length
        rows.append({"p": p, "norm_lower": est.value, "ratio_to_linear": est.value / (rz._pstar(p) - 1) ** word.length})
        reports.append(CheckReport("riesz-word-norm", {"word": str(word), "n": word.n, "p": p, "degree": degree},
                                   est.value, cap, cap - est.value, 0.0, ms[0]))
    return reports, rows


def duality_checks(n: int, count: int = 100, degree: int = 6, seed: int = 0,
                   tolerance: float = 1e-8) -> list[CheckReport]:
    rng = np.random.default_rng(seed + 8)
    worst = {rz.PLAIN: None, rz.STAR: None}
    for _ in range(count):
        f = random_expansion(n, degree, rng)
        g = random_expansion(n, degree + 1, rng)
        j = int(rng.integers(n))
        for kind in (rz.PLAIN, rz.STAR):
            r = rz.duality_formula_check(j, kind, f, g, tolerance)
            if worst[kind] is None or r.value > worst[kind].value:
                worst[kind] = r
    out = []
    for kind, r in worst.items():
        out.append(error_report(r.name, {"n": n, "count": count, "degree": degree}, r.value, tolerance, r.runtime_ms))
    return out


def o_multiplier_checks(ns: Sequence[int] = (1, 2, 3), tolerance: float = 1e-12) -> list[CheckReport]:
    out = []
    for n in ns:
        closed = -((math.sqrt(n) + math.sqrt(n + 2)) ** 2) / (math.sqrt(n) * math.sqrt(n + 2))
        o0 = float(rz.o_multiplier(n, 2).values[0])
        out.append(error_report("multiplier-o0", {"n": n}, abs(o0 - closed), tolerance, 0, {"o0": o0}))
        star0 = float(rz.o_multiplier(n, 2, star=True).values[0])
        out.append(error_report("multiplier-o0-star", {"n": n}, abs(star0), 0.0))
    big = rz.o_multiplier(1, 1000).values[-1]
    out.append(error_report("multiplier-limit", {"m": 1000}, abs(abs(big) - 4.0), 1e-6))
    return out


def zusatz_checks(ns: Sequence[int] = range(2, 11), ps: Sequence[float] = (1, 2, 4, math.inf),
                  rtol: float = 1e-12, eq_tol: float = 1e-8) -> list[CheckReport]:
    with stopwatch() as ms:
        worst = math.inf
        where = None
        for n in ns:
            for a in (0.5, 1.0, n - 0.5):
                for p in ps:
                    lhs = rz.todor_integral(a, n, p)
                    rhs = rz.zusatz_bound(a, n, p)
                    m = (rhs - lhs) / rhs
                    if m < worst:
                        worst, where = m, {"n": n, "a": a, "p": str(p), "todor": lhs, "zusatz": rhs}
        eq_l = rz.todor_integral(1.0, 2, 2.0)
        eq_r = rz.zusatz_bound(1.0, 2, 2.0)
    grid = {"ns": [int(n) for n in ns], "ps": [str(p) for p in ps]}
    return [
        CheckReport("zusatz-chain", grid, where["todor"], where["zusatz"], worst, rtol, ms[0], where),
        error_report("zusatz-equality", {"n": 2, "a": 1.0, "p": 2.0}, max(abs(eq_l - 1), abs(eq_r - 1)), eq_tol,
                     ms[0], {"todor": eq_l, "zusatz": eq_r}),
    ]


MULTIPLIER_DEGREE = {1: 32, 2: 12, 3: 6}


def psi_flatness_checks(ns: Sequence[int] = (1, 2, 3), ps: Sequence[float] = (1.25, 2.0, 4.0), count: int = 3,
                        seed: int = 0, iterations: int = 30, spread: float = 0.05) -> tuple[list[CheckReport], list[dict]]:
    """Empirical ‖Ψ(L)‖_{p→p} lower bounds; the relative spread max/min - 1 should stay below ``spread``."""
    psi = rz.griffi_analytic()
    rows = []
    reports = []
    with stopwatch() as ms:
        for n in ns:
            M = MULTIPLIER_DEGREE.get(n, DEFAULT_DEGREE.get(n, 6))
            fam = rz.scan_family(n, M, count, seed)
            op = rz.multiplier_op(rz.psi_shell(psi, n, M))
            for p in ps:
                est = rz.lp_operator_norm_lower(op, p, fam, iterations)
                rows.append({"n": n, "p": p, "norm_lower": est.value})
        # the p = 2 norm is the sup of the symbol, attained at m = 0
        for n in ns:
            sup = float(np.max(np.abs(rz.psi_shell(psi, n, 50).values)))
            reports.append(error_report("multiplier-l2-sup", {"n": n}, abs(sup - rz.psi_griffi(n)), 1e-12))
    vals = [r["norm_lower"] for r in rows]
    s = max(vals) / min(vals) - 1
    reports.append(CheckReport("multiplier-flatness", {"ns": list(ns), "ps": list(ps)}, s, spread, spread - s, 0.0,
                               ms[0], {"rows": rows}))
    return reports, rows


def sort_reports(reports: Iterable[CheckReport]) -> list[CheckReport]:
    return sorted(reports, key=lambda r: r.sort_key())
