"""The fifteen acceptance criteria at their stated tolerances.

Each test records a one-line verdict (printed immediately and again in the
terminal summary).  Criteria 11 and 14(a) are not attainable as stated; they
run in full, report FAIL, and are marked strict xfail with the reason.
"""
import json
import math
import re
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from hermite_flow import bellman as bm
from hermite_flow import checks, cli
from hermite_flow import embedding as emb

pytestmark = pytest.mark.slow


def record(k, reports, label="", extra=""):
    reports = list(reports)
    ok = all(r.passed for r in reports)
    bad = [str(r) for r in reports if not r.passed]
    worst = min(reports, key=lambda r: r.margin + r.tolerance)
    detail = f"{label}{len(reports)} checks, worst {worst.name} margin={worst.margin:.3g}"
    if extra:
        detail += f", {extra}"
    if bad:
        detail += f", failing: {bad[0]}"
    ACCEPTANCE.setdefault(k, []).append((ok, detail))
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}")
    return ok, bad


def assert_all(k, reports, label="", extra=""):
    ok, bad = record(k, reports, label, extra)
    assert ok, bad


def test_c01_bellman_theorem():
    t0 = time.perf_counter()
    reports = checks.bellman_checks([2.0, 2.5, 3.0, 4.0, 8.0], samples=100_000, seed=0, tolerance=1e-8)
    elapsed = time.perf_counter() - t0
    assert {r.params["samples"] for r in reports if r.name == "theorem21-i"}
    per_p = {}
    for r in reports:
        if r.name == "theorem21-i":
            per_p[r.params["p"]] = per_p.get(r.params["p"], 0) + r.params["samples"]
    assert all(v == 100_000 for v in per_p.values())
    assert all(r.tolerance == 0 for r in reports if r.name == "theorem21-i")
    assert_all(1, reports, extra=f"{elapsed:.1f}s")
    assert elapsed < 120


def test_c02_gradient_oracle():
    from hermite_flow._parallel import pmap
    out = pmap(lambda p: checks.bellman_derivative_checks(p, points=1000, seed=0), [1.5, 2.0, 2.5, 3.0, 4.0, 8.0])
    assert_all(2, [r for rs in out for r in rs])


def test_c03_kernel_identities():
    reports = []
    for n in (1, 2):
        reports.append(checks.mass_identity_check(n, pairs=20, tolerance=1e-8))
        reports.append(checks.semigroup_check(n, pairs=20, tolerance=1e-8))
        reports.append(checks.domination_check(n, samples=10_000))
    assert all(r.tolerance == 0 for r in reports if r.name == "kernel-gaussian-domination")
    assert_all(3, reports)


def test_c04_poisson_spectral():
    assert_all(4, [checks.poisson_spectral_check(n, max_order=6, tolerance=1e-6) for n in (1, 2)])


def test_c05_embedding_chain():
    reports = checks.gaussian_lhs_check(1, 2.0, tolerance=1e-6)
    lhs = reports[0]
    assert lhs.name == "embedding-lhs-closed-form"
    # positive margins for the Gaussian chain, and the stated 12 for the upper bound
    r = emb.embedding_chain(*emb.gaussian_pair(1), bm.BellmanParams(2.0))
    assert r.lower_margin > 0 and r.middle < 12.0 and r.upper == pytest.approx(12.0)
    for n in (1, 2):
        for p in (2.0, 4.0):
            reports += checks.random_chain_checks(n, p, count=20, degree=4, seed=0, rtol=1e-5)
    dim = checks.dimension_checks((1, 2, 3), 2.0, cap=96.0)
    reports += dim
    assert_all(5, reports, extra=f"lhs={lhs.details['lhs']:.9f}, ratios={dim[0].details['ratios']}")


def test_c06_pointwise_lower_bound():
    reports = []
    for n in (1, 2):
        for p in (2.0, 4.0):
            f, g = emb.random_pairs(1, n, 4, seed=n)[0]
            reports.append(checks.lemma31_check(f, g, p, points=1000, seed=0, tolerance=1e-8, tag="random"))
    f, g = emb.gaussian_pair(1)
    reports.append(checks.lemma31_check(f, g, 2.0, points=1000, tolerance=1e-8, tag="gaussian"))
    assert_all(6, reports)


def test_c07_potential_term():
    reports = checks.potential_checks((0, 1, 2, 4), n=1, tolerance=1e-6)
    eq = [r for r in reports if r.name == "potential-equality"]
    assert len(eq) == 1
    assert_all(7, reports)


def test_c08_riesz_l2():
    reports = checks.riesz_l2_checks(1, count=100, degree=8, tolerance=1e-10)
    ground = [r for r in reports if r.name == "riesz-ground-state"][0]
    assert ground.value == 0.0
    assert_all(8, reports)


def test_c09_riesz_growth():
    t0 = time.perf_counter()
    reports, rows = checks.riesz_scan_checks([2, 4, 8, 16, 32], n=1, degree=64, count=4, seed=0, iterations=50,
                                             slope_cap=1.2, const=96.0)
    elapsed = time.perf_counter() - t0
    slope = [r for r in reports if r.name == "riesz-slope"][0]
    table = ", ".join(f"p={r['p']}:{r['norm_lower']:.4f}" for r in rows)
    assert_all(9, reports, extra=f"slope={slope.value:.3f}, {table}, {elapsed:.0f}s")
    assert elapsed < 600


def test_c10_duality():
    assert_all(10, [r for n in (1, 2) for r in checks.duality_checks(n, count=100, degree=6, tolerance=1e-8)])


def test_c11_multiplier_values():
    assert_all(11, checks.o_multiplier_checks((1, 2, 3), tolerance=1e-12), label="o0: ")


@pytest.mark.xfail(strict=True, reason="the exact L2 norms Ψ(n) already differ by 6% across n=1..3, "
                                       "so a 5% spread is unattainable; see the decisions ledger")
def test_c11_multiplier_flatness():
    reports, rows = checks.psi_flatness_checks((1, 2, 3), (1.25, 2.0, 4.0), count=3, seed=0, iterations=30,
                                               spread=0.05)
    table = ", ".join(f"n={r['n']} p={r['p']}:{r['norm_lower']:.4f}" for r in rows)
    assert_all(11, reports, label="flatness: ", extra=table)


def test_c12_zusatz():
    reports = checks.zusatz_checks(range(2, 11), (1, 2, 4, math.inf), rtol=1e-12, eq_tol=1e-8)
    eq = [r for r in reports if r.name == "zusatz-equality"][0]
    assert_all(12, reports, extra=f"equality todor={eq.details['todor']:.9f} zusatz={eq.details['zusatz']:.9f}")


def test_c13_heat_norms():
    reports = [r for n in (1, 2, 3) for r in checks.heat_norm_checks(n, points=100, tolerance=1e-10)]
    assert all(r.value == 0 for r in reports if r.name == "heat-norm-two")
    assert_all(13, reports)


def test_c14_boundary_large_t():
    small, large = checks.boundary_checks(n=1, degree=4, count=20, seed=0)
    assert_all(14, [large], label="t=20: ")


@pytest.mark.xfail(strict=True, reason="for a shell with √λ > ln 10 the t=1e-3 / t=1 ratio is about "
                                       "1e-3·e^{√λ} > 1%; degree 4 reaches √9 = 3")
def test_c14_boundary_small_t():
    small, large = checks.boundary_checks(n=1, degree=4, count=20, seed=0)
    assert_all(14, [small], label="t=1e-3: ", extra=f"single top shell {small.details['top_shell_ratio']:.4f}")


def _cli(argv, capsys):
    code = cli.main(argv)
    return code, capsys.readouterr().out


def test_c15_cli_contract(capsys, tmp_path):
    from conftest import ACCEPTANCE as acc

    argv = ["kernels", "--n", "1", "2", "--samples", "2000", "--seed", "7", "--quiet"]
    code_a, a = _cli(argv, capsys)
    code_b, b = _cli(argv, capsys)
    mask = re.compile(r'"runtime_ms": \d+')
    same = mask.sub('"runtime_ms": 0', a) == mask.sub('"runtime_ms": 0', b)
    assert len(json.loads(a)["reports"]) > 0
    # exit-code contract: pass → 0, failing report → 1, config error → 2, usage error → 64
    failing, _ = _cli(["multiplier", "--n", "1", "3", "--p", "2", "--samples", "2", "--iterations", "1",
                       "--quiet"], capsys)
    config, empty = _cli(["verify-bellman", "--samples", "0"], capsys)
    usage, _ = _cli(["no-such-command"], capsys)
    codes = {"pass": code_a, "fail": failing, "config": config, "usage": usage}
    ok = same and codes == {"pass": 0, "fail": 1, "config": 2, "usage": 64} and json.loads(empty)["reports"] == []
    detail = f"byte-identical modulo runtime: {same}, exit codes {codes}"
    acc.setdefault(15, []).append((ok, detail))
    print(f"criterion 15: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok
