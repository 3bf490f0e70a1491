"""Multi-feature hyperspectral unmixing via constrained CP decomposition."""

__version__ = "0.1.0"

from .solver import (  # noqa: F401
    FactorModel,
    SolverConfig,
    multi_start,
    solve_cpd,
    solve_nmf,
)
