"""Norm engines: small-ball (SBE), Besov and p-variation, plus power-law fits."""

from .besov import (BesovParams, BesovReport, besov_norm, besov_report, block_multipliers, cutoff,
                    density_on_grid, deposit_grid)
from .regression import PowerFit, holder_exponent
from .sbe import (SbeGrid, SbeParams, SbeReport, dirac_profile_constant, resolve_sbe_grid,
                  sbe_norm, sbe_refinement, sbe_report, sbe_sensitivity)
from .variation import (DyadicBound, VariationParams, VariationResult, distance_matrix,
                        dyadic_increments, dyadic_variation_bound, p_variation, p_variation_distances,
                        p_variation_exhaustive, p_variation_partition, powered, variation_of_occupation)

__all__ = [
    "BesovParams", "BesovReport", "besov_norm", "besov_report", "block_multipliers", "cutoff",
    "density_on_grid", "deposit_grid",
    "PowerFit", "holder_exponent",
    "SbeGrid", "SbeParams", "SbeReport", "dirac_profile_constant", "resolve_sbe_grid",
    "sbe_norm", "sbe_refinement", "sbe_report", "sbe_sensitivity",
    "DyadicBound", "VariationParams", "VariationResult", "distance_matrix", "dyadic_increments",
    "dyadic_variation_bound", "p_variation", "p_variation_distances", "p_variation_exhaustive",
    "p_variation_partition", "powered", "variation_of_occupation",
]
