"""kinetic-gap: desk-scale numerics for the non-cutoff Boltzmann operator near equilibrium."""

from .backend import backend_name
from .fields import DistributionField, SplitParams, maxwellian
from .grids import (AngularQuadrature, KernelParams, TorusModes, VelocityGrid,
                    build_angular, build_grid)
from .reports import EstimateReport

__version__ = "0.1.0"

__all__ = [
    "AngularQuadrature", "DistributionField", "EstimateReport", "KernelParams",
    "SplitParams", "TorusModes", "VelocityGrid", "backend_name",
    "build_angular", "build_grid", "maxwellian", "__version__",
]
