"""
Pydantic Schemas
================

Experiment configuration and report schemas.
"""

from sarmmv.schemas.common import ErrorDetail, ReportSchema, StrictSchema
from sarmmv.schemas.experiment import ExperimentConfig, SolverConfig
from sarmmv.schemas.reports import (
    CoherenceReport,
    Diagnostic,
    RegimeReport,
    RunManifest,
    ScoreReport,
)

__all__ = [
    "CoherenceReport",
    "Diagnostic",
    "ErrorDetail",
    "ExperimentConfig",
    "RegimeReport",
    "ReportSchema",
    "RunManifest",
    "ScoreReport",
    "SolverConfig",
    "StrictSchema",
]
