"""Spectral tools for the Hermite operator L = -Δ + |x|².

Hermite expansions and quadrature, Mehler/Poisson kernels, the Bellman
function behind the bilinear embedding, semigroup fields, Riesz transforms,
shell multipliers and a reporting CLI.
"""
__version__ = "0.1.0"

from .bellman import BellmanParams, BellmanPoint, certify_theorem21, q_eval, q_gradient, q_hessian
from .embedding import Resolution, bilinear_integral, embedding_chain, middle_integral, potential_term, upper_bound
from .hermite import (HermiteExpansion, MultiIndex, QuadratureGrid, apply_ladder, apply_spectral, default_lp_grid,
                      expansion_lp_norm, gauss_hermite_grid, hermite_functions, on_grid, random_expansion)
from .kernels import KernelPoint, heat_kernel, heat_kernel_mass, poisson_kernel
from .report import CheckReport
from .riesz import (RieszWord, lp_operator_norm_lower, o_multiplier, psi_L_apply, riesz_apply, riesz_compose,
                    riesz_vector_norm, todor_integral, zusatz_bound)

__all__ = [
    "BellmanParams", "BellmanPoint", "certify_theorem21", "q_eval", "q_gradient", "q_hessian", "Resolution",
    "bilinear_integral", "embedding_chain", "middle_integral", "potential_term", "upper_bound", "HermiteExpansion",
    "MultiIndex", "QuadratureGrid", "apply_ladder", "apply_spectral", "default_lp_grid", "expansion_lp_norm",
    "gauss_hermite_grid", "hermite_functions", "on_grid", "random_expansion", "KernelPoint", "heat_kernel",
    "heat_kernel_mass", "poisson_kernel", "CheckReport", "RieszWord", "lp_operator_norm_lower", "o_multiplier",
    "psi_L_apply", "riesz_apply", "riesz_compose", "riesz_vector_norm", "todor_integral", "zusatz_bound",
]
