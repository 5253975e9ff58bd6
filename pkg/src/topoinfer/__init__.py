"""Persistent homology, heat-kernel vectorization and transposition tests for groups of diagrams."""

from .hk import HKVector, TriangleBasis, build_basis, hk_coefficients, hk_distance, standardize
from .inference import TestResult, permanova_test, t_anova_test, two_sample_test
from .ph import PersistenceDiagram, representative_cycle, rips_persistence

__version__ = "0.1.0"

__all__ = [
    "HKVector",
    "PersistenceDiagram",
    "TestResult",
    "TriangleBasis",
    "build_basis",
    "hk_coefficients",
    "hk_distance",
    "permanova_test",
    "representative_cycle",
    "rips_persistence",
    "standardize",
    "t_anova_test",
    "two_sample_test",
]
