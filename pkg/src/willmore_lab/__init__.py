"""Willmore energies of tori and bending energies of curves in model Riemannian manifolds."""

from .errors import (ChartDomainError, ConfigError, DimensionError, OptimizationError,
                     ParameterError, RegularityError, WillmoreLabError)
from .metrics import MetricChart, catalog_lookup, riemann_tensor, sectional_curvature
from .grid import ClosedCurve, TorusImmersion, make_family, make_curve
from .shape import shape_data
from .energy import EnergyReport, bending_energy, closed_form, willmore
from .euler_lagrange import el_residual
from .optimize import OptimizationTrace, ShapeParameters, minimize_bending, minimize_willmore, scan_family

__version__ = "0.1.0"

__all__ = [
    "ChartDomainError", "ConfigError", "DimensionError", "OptimizationError", "ParameterError",
    "RegularityError", "WillmoreLabError", "MetricChart", "catalog_lookup", "riemann_tensor",
    "sectional_curvature", "ClosedCurve", "TorusImmersion", "make_family", "make_curve",
    "shape_data", "EnergyReport", "bending_energy", "closed_form", "willmore", "el_residual",
    "OptimizationTrace", "ShapeParameters", "minimize_bending", "minimize_willmore", "scan_family",
]
