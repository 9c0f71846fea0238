"""Worked example models with closed-form oracles."""
from . import bidisc, moment, projective
from .bidisc import bidisc_F_hol, bidisc_flow, bidisc_kernel, bidisc_ks_reference
from .moment import (DiscreteOracle, MomentMeasure, OrthoPolyBasis, chi_n, discrete_oracle,
                     ortho_polys, sigma_kernel, sigma_kernel_value, translation_model)

__all__ = [
    "bidisc", "moment", "projective",
    "bidisc_kernel", "bidisc_flow", "bidisc_F_hol", "bidisc_ks_reference",
    "MomentMeasure", "OrthoPolyBasis", "DiscreteOracle", "ortho_polys", "chi_n",
    "sigma_kernel", "sigma_kernel_value", "translation_model", "discrete_oracle",
]
