"""l0-penalized least squares by proximal gradient descent."""
from .core import (
    ConfigError, DimensionError, HypothesisError, InvalidData, InvalidInit, L0ProxError,
    NonDecreaseDetected, ProblemInstance, RefuseEnumeration, SupportGrowthDetected,
    denormalize_code, normalize_instance, objective, support,
)
from .pgd import PgdOptions, SolveReport, StepMode, ista_init, pgd_solve
from .randomized import JlDistribution, pgd_rdr_solve, pgd_rma_solve, range_finder, sample_jl
from .theory import BoundCertificate, brute_force_global, theorem1_bound

__version__ = "0.1.0"
