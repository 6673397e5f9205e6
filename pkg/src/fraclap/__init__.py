"""Finite elements for the one-dimensional integral fractional Laplacian."""

__version__ = "0.1.0"

from .elliptic import (
    EllipticSolution,
    ErrorReport,
    NumericalFailure,
    convergence_study,
    exact_integral,
    exact_solution,
    hs_error,
    linf_error,
    loglog_slope,
    solve_elliptic,
)
from .estimators import FractionalPoissonSolver, PenalizedHUMControl
from .evolution import ControlRegion, HeatSystem, TimeGrid, Trajectory, make_region
from .hum import (
    ControlSetup,
    HumResult,
    controllability_study,
    dual_functional,
    gradient_apply,
    make_setup,
    minimize_dual,
    primal_energy,
)
from .mesh import (
    FracProblem,
    MassMatrix,
    StiffnessMatrix,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    make_mesh,
    normalization_constant,
    stiffness_entry,
)
from .spectral import SpectrumReport, asymptotic_eigenvalue, discrete_spectrum

__all__ = [
    "ControlRegion",
    "ControlSetup",
    "EllipticSolution",
    "ErrorReport",
    "FracProblem",
    "FractionalPoissonSolver",
    "HeatSystem",
    "HumResult",
    "MassMatrix",
    "NumericalFailure",
    "PenalizedHUMControl",
    "SpectrumReport",
    "StiffnessMatrix",
    "TimeGrid",
    "Trajectory",
    "assemble_load",
    "assemble_mass",
    "assemble_stiffness",
    "asymptotic_eigenvalue",
    "controllability_study",
    "convergence_study",
    "discrete_spectrum",
    "dual_functional",
    "exact_integral",
    "exact_solution",
    "gradient_apply",
    "hs_error",
    "linf_error",
    "loglog_slope",
    "make_mesh",
    "make_region",
    "make_setup",
    "minimize_dual",
    "normalization_constant",
    "primal_energy",
    "solve_elliptic",
    "stiffness_entry",
]
