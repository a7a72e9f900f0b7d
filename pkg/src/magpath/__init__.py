"""Path integrals for a particle in a magnetic field.

Modules, roughly in dependency order:

* ``fourier_measure``: point-mass measures, vector potentials, parameters
* ``cameron_martin``: Brownian paths, Cameron-Martin bases and areas
* ``stoch_integrals``: discretized line integrals and closed forms
* ``dyson``: exact Dyson expansion terms on plane-wave packets
* ``feynman_mc``: Monte Carlo estimators of the same quantities
* ``renormalization``: the quadratic-form operator and basis renormalization
* ``reference_solver``: split-step Fourier PDE solver used as an oracle
* ``experiments``: named experiments and their config format
"""

from .fourier_measure import (
    LinearVectorPotential,
    PhysicalParams,
    PointMassMeasure,
    VectorPotentialFourier,
    cos_field,
    lambda_star,
    lambda_star_z,
    landau_gauge,
    symmetric_gauge,
)
from .stoch_integrals import QuadratureRule

__version__ = "0.1.0"

__all__ = [
    "LinearVectorPotential",
    "PhysicalParams",
    "PointMassMeasure",
    "QuadratureRule",
    "VectorPotentialFourier",
    "cos_field",
    "lambda_star",
    "lambda_star_z",
    "landau_gauge",
    "symmetric_gauge",
]
