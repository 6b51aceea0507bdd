"""
The bilinear embedding, numerically
===================================

For f = g = h0 the left-hand side has the closed form 1/2.  We compute it,
the middle integral of -L'b and the upper bound, then look at random
pairs and at the potential term.
"""
# %%
from hermite_flow import bellman as bm
from hermite_flow import embedding as emb

bp = bm.BellmanParams(2.0)
f, g = emb.gaussian_pair(1)
r = emb.embedding_chain(f, g, bp)
print(f"lhs = {r.lhs:.9f}  delta*lhs = {r.delta * r.lhs:.6f}  middle = {r.middle:.6f}  upper = {r.upper:.1f}")

# %%
# Random unit-norm pairs of degree <= 4: the chain holds with room to spare.
for p in (2.0, 4.0):
    bp = bm.BellmanParams(p)
    for f, g in emb.random_pairs(3, 1, 4, seed=0):
        r = emb.embedding_chain(f, g, bp, check=False)
        print(f"p={p}: delta*lhs={r.delta * r.lhs:.4f} <= middle={r.middle:.4f} <= upper={r.upper:.3f}"
              f"  ratio={r.ratio:.3f}")

# %%
# Potential term: the t-weighted Poisson integral of |x|^2 equals 1 at every
# source point (L applied to 1 is |x|^2), well inside the bound 2 - e^{-|y|^2/2}.
for y in (0, 1, 2, 4):
    pt = emb.potential_term(y, 1)
    print(f"|y|={y}: I1={pt.I1:.6f} I2={pt.I2:.6f} total={pt.total:.8f} bound={pt.bound:.6f}")

# %%
# The Gaussian ratio across dimensions.
for row in emb.dimension_scan((1, 2, 3)):
    print(row)
