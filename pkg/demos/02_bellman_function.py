"""
The two-branch Bellman function
===============================

Evaluate Q on a few points, then certify its three defining properties on
a sample of the domain and print the reports.
"""
# %%
import numpy as np

from hermite_flow import bellman as bm

bp = bm.BellmanParams(2.0)
print("delta =", bp.delta)
print("Q(1, 2, 1, 4) =", bm.q_eval(bm.BellmanPoint([1], [2], 1.0, 4.0), bp))
print("Q(2, 1, 4, 1) =", bm.q_eval(bm.BellmanPoint([2], [1], 4.0, 1.0), bp))

# %%
# The shared tau on each side of the switch surface |ζ|^p = |η|^q.
for u, v in [(2.0, 1.0), (1.0, 2.0)]:
    print(f"tau({u}, {v}) =", bm.tau_select(u, v, bp), "branch", bm.branch_label(u, v, bp))

# %%
# Gradient and Hessian at a random interior point.
rng = np.random.default_rng(0)
bp4 = bm.BellmanParams(4.0)
z, e, Z, H = (a[0] for a in bm.sample_omega(bm.SamplerSpec(samples=1), bp4, 2, 2, 1, rng))
w = bm.BellmanPoint(z, e, float(Z), float(H))
print("dQ/dZ, dQ/dH:", bm.q_gradient(w, bp4)[-2:])
print("largest eigenvalue of d2Q on (zeta, eta):", np.linalg.eigvalsh(bm.q_hessian(w, bp4).matrix[:-2, :-2]).max())

# %%
# Certification on 20 000 points across M, N in {1, 2, 3}.
for p in (1.5, 2.0, 4.0):
    for r in bm.certify_theorem21(bm.SamplerSpec(samples=20_000, increments=20), bm.BellmanParams(p)):
        print(r)
