"""
Error Handling
==============

Standardized error codes and the exception hierarchy used by the library
and the command-line runner.

Every exception carries a stable ``code`` and the process exit code the CLI
returns for it.
"""

from typing import Any, Optional

from pydantic import ValidationError as PydanticValidationError


# =============================================================================
# Error Codes
# =============================================================================

class ErrorCodes:
    """Standardized error codes."""

    # Configuration (CFG_001 - CFG_010)
    CFG_PARSE_FAILED = "CFG_001"
    CFG_INVALID_VALUE = "CFG_002"
    CFG_UNKNOWN_PRESET = "CFG_003"
    CFG_FILE_NOT_FOUND = "CFG_004"

    # Geometry (GEO_001 - GEO_010)
    GEO_NON_FINITE = "GEO_001"
    GEO_ZERO_RANGE = "GEO_002"
    GEO_EXTRAPOLATION = "GEO_003"
    GEO_INVALID_TRAJECTORY = "GEO_004"

    # Scene (SCENE_001 - SCENE_010)
    SCENE_INVALID_GRID = "SCENE_001"
    SCENE_INDEX_OUT_OF_RANGE = "SCENE_002"
    SCENE_OUTSIDE_WINDOW = "SCENE_003"
    SCENE_EMPTY_SCATTERER = "SCENE_004"

    # Segmentation / sampling (SEG_001 - SEG_010)
    SEG_EXCEEDS_APERTURE = "SEG_001"
    SEG_EXCEEDS_BAND = "SEG_002"
    SEG_MISALIGNED = "SEG_003"

    # Regime (REGIME_001)
    REGIME_HARD_FAIL = "REGIME_001"

    # Solver (SOLVER_001 - SOLVER_010)
    SOLVER_DIVERGED = "SOLVER_001"
    SOLVER_SHAPE_MISMATCH = "SOLVER_002"

    # Artifacts (ART_001 - ART_010)
    ART_BAD_MAGIC = "ART_001"
    ART_TRUNCATED = "ART_002"
    ART_MISSING = "ART_003"

    # General
    INTERNAL_ERROR = "INTERNAL_ERROR"
    VALIDATION_ERROR = "VALIDATION_ERROR"


# =============================================================================
# Custom Exceptions
# =============================================================================

class SarMmvError(Exception):
    """Base exception with a structured detail payload and an exit code."""

    exit_code: int = 1

    def __init__(
        self,
        code: str,
        message: str,
        field: Optional[str] = None,
        **extra: Any,
    ):
        self.code = code
        self.message = message
        self.field = field
        self.extra = extra
        super().__init__(message)

    def to_dict(self) -> dict[str, Any]:
        """Detail payload used in logs and the run manifest."""
        detail: dict[str, Any] = {"code": self.code, "message": self.message}
        if self.field:
            detail["field"] = self.field
        detail.update(self.extra)
        return detail

    def __str__(self) -> str:
        if self.field:
            return f"[{self.code}] {self.field}: {self.message}"
        return f"[{self.code}] {self.message}"


class ValidationError(SarMmvError):
    """Invalid argument passed to a library function."""

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        code: str = ErrorCodes.VALIDATION_ERROR,
        **extra: Any,
    ):
        super().__init__(code=code, message=message, field=field, **extra)


class ConfigError(SarMmvError):
    """Experiment configuration could not be parsed or validated."""

    exit_code = 2

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        code: str = ErrorCodes.CFG_INVALID_VALUE,
        **extra: Any,
    ):
        super().__init__(code=code, message=message, field=field, **extra)


class GeometryError(SarMmvError):
    """Degenerate geometry, e.g. a zero platform-to-point range."""

    def __init__(
        self,
        message: str,
        code: str = ErrorCodes.GEO_ZERO_RANGE,
        **extra: Any,
    ):
        super().__init__(code=code, message=message, **extra)


class SamplingError(SarMmvError):
    """Segmentation does not fit the available aperture or band."""

    def __init__(
        self,
        message: str,
        code: str = ErrorCodes.SEG_EXCEEDS_APERTURE,
        **extra: Any,
    ):
        super().__init__(code=code, message=message, **extra)


class RegimeError(SarMmvError):
    """A regime diagnostic failed and the run was not forced."""

    exit_code = 3

    def __init__(self, message: str, failed: Optional[list[str]] = None):
        super().__init__(
            code=ErrorCodes.REGIME_HARD_FAIL,
            message=message,
            failed=failed or [],
        )


class SolverDivergenceError(SarMmvError):
    """GeLMA residual grew beyond the divergence limit."""

    exit_code = 4

    def __init__(self, message: str, iteration: int, residual: float):
        super().__init__(
            code=ErrorCodes.SOLVER_DIVERGED,
            message=message,
            iteration=iteration,
            residual=residual,
        )


class ArtifactError(SarMmvError):
    """A run artifact is missing or malformed."""

    def __init__(
        self,
        message: str,
        code: str = ErrorCodes.ART_MISSING,
        **extra: Any,
    ):
        super().__init__(code=code, message=message, **extra)


# =============================================================================
# Conversion Helpers
# =============================================================================

def config_error_from_pydantic(
    exc: PydanticValidationError,
    source: Optional[str] = None,
) -> ConfigError:
    """
    Convert a pydantic validation error into a ConfigError.

    Only the first error is reported, with its location joined into a
    dotted field path.
    """
    errors = exc.errors()
    first_error = errors[0] if errors else {}
    field = ".".join(str(loc) for loc in first_error.get("loc", []))
    message = first_error.get("msg", "Invalid configuration")

    extra: dict[str, Any] = {"error_count": len(errors)}
    if source:
        extra["source"] = source

    return ConfigError(message=message, field=field or None, **extra)
