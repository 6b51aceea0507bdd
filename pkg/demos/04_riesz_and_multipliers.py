"""
Riesz transforms and shell multipliers
======================================

The vector Riesz transform is an isometry up to sqrt(2) on L^2.  On L^p we
can only estimate norms from below; the growth in p stays roughly linear.
"""
# %%
import math

import numpy as np

from hermite_flow import riesz as rz
from hermite_flow.hermite import HermiteExpansion, random_expansion

h0 = HermiteExpansion.basis([0])
print("R h0     :", rz.riesz_apply(0, rz.PLAIN, h0).coeffs)
print("R* R h0  :", rz.riesz_compose(rz.RieszWord.parse("1- 1+"), h0).coeffs, " 2/sqrt(3) =", 2 / math.sqrt(3))

f = random_expansion(2, 6, np.random.default_rng(1))
print("||Rf||_2 / ||f||_2 =", rz.riesz_vector_norm(f, 2) / f.l2_norm())

# %%
# A smaller version of the p-scan used by the acceptance suite.
rows = rz.riesz_p_scan([2, 4, 8, 16], n=1, degree=32, count=2, iterations=20)
for row in rows:
    print(row)
print("log-log slope:", rz.loglog_slope([r["p"] for r in rows], [r["norm_lower"] for r in rows]))

# %%
# The multiplier in the duality formulas and its L^2 norm per dimension.
for n in (1, 2, 3):
    o = rz.o_multiplier(n, 3)
    print(f"n={n}: o_0 = {o.values[0]:.6f}, sup |Psi| = Psi(n) = {rz.psi_griffi(n):.6f}")

# %%
# The closed-form integral bound on a few points of its grid.
for n, a, p in [(2, 1.0, 2.0), (4, 0.5, 4.0), (6, 5.5, math.inf)]:
    print(n, a, p, rz.todor_integral(a, n, p), "<=", rz.zusatz_bound(a, n, p))
