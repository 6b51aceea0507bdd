"""
Hermite expansions in a few lines
=================================

Build expansions, move between coefficients and grid values, and apply
functions of the Hermite operator L = -Δ + |x|² shell by shell.
"""
# %%
import math

import numpy as np

from hermite_flow.hermite import (HermiteExpansion, apply_ladder, apply_spectral, default_lp_grid, expand,
                                  expansion_lp_norm, gauss_hermite_grid, hermite_eval, on_grid)

print("h0(0) =", hermite_eval(0, 0.0), " pi^(-1/4) =", math.pi ** -0.25)

# %%
# Expanding x·h0 recovers the single coefficient 1/sqrt(2) at h1.
grid = gauss_hermite_grid(30)
e = expand(lambda p: p[:, 0] * hermite_eval(0, p[:, 0]), n=1, degree=6, grid=grid)
print("coefficients of x*h0:", e.coeffs)

# %%
# Creation and annihilation act by shifting coefficients.
h0 = HermiteExpansion.basis([0])
print("creation h0     ->", apply_ladder(0, "creation", h0).coeffs)
print("annihilation h2 ->", apply_ladder(0, "annihilation", HermiteExpansion.basis([2])).coeffs)

# %%
# e^{-t sqrt(L)} on the 4-dimensional ground state multiplies by e^{-2t}.
t = 0.5
g4 = HermiteExpansion.basis([0, 0, 0, 0])
print("P_t h0 in 4D:", apply_spectral(lambda lam: math.exp(-t * math.sqrt(lam)), g4).coeffs,
      " e^{-2t} =", math.exp(-2 * t))

# %%
# L^p norms go through a truncated interval grid.
f = HermiteExpansion.from_coeffs({(0,): 1.0, (3,): 0.5}, n=1)
for p in (1.5, 2.0, 4.0, np.inf):
    print(f"||f||_{p} = {expansion_lp_norm(f, p):.6f}")
vals = on_grid(f, default_lp_grid(3, 1))
print("grid samples:", vals.shape)
