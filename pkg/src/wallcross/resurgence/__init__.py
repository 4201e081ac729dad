"""Resurgence experiments: thimbles, Borel sums, Stokes data, Ecalle-Voronin gluing, twists."""

from .ecalle import (ContractionError, EVData, EVError, EVFormal, EVGrid, EVSolution, NormalFormReport,
                     conjugate_germ, ev_formal, ev_normal_form_check, ev_solve, normalizing_map,
                     recover_normalizing)
from .series import BorelSeries, GevreyFit, SeriesError, Singularity, TSeries, borel, gevrey_fit
from .stokes import (PsiEngine, PsiResult, RHSplit, SplitError, StokesData, StokesError, circle_grid,
                     psi_series, rh_split, tail_bounds)
from .thimble import (CriticalPoint, StokesJump, ThimbleError, ThimbleResult, critical_points, critical_values,
                      parse_poly, saddle_expansion, stokes_jump, thimble_integral)
from .twist import SectorError, TwistedAutomorphism, twist, twist_factor

__all__ = [
    "BorelSeries", "ContractionError", "CriticalPoint", "EVData", "EVError", "EVFormal", "EVGrid", "EVSolution",
    "GevreyFit", "NormalFormReport", "PsiEngine", "PsiResult", "RHSplit", "SectorError", "SeriesError",
    "Singularity", "SplitError", "StokesData", "StokesError", "StokesJump", "TSeries", "ThimbleError",
    "ThimbleResult", "TwistedAutomorphism", "borel", "circle_grid", "conjugate_germ", "critical_points",
    "critical_values", "ev_formal", "ev_normal_form_check", "ev_solve", "gevrey_fit", "normalizing_map",
    "parse_poly", "psi_series", "recover_normalizing", "rh_split", "saddle_expansion", "stokes_jump",
    "tail_bounds", "thimble_integral", "twist", "twist_factor",
]
