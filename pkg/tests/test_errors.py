"""
Error Tests
===========

Exit codes, detail payloads and pydantic conversion.
"""

import pytest
from pydantic import ValidationError as PydanticValidationError

from sarmmv.core.errors import (
    ArtifactError,
    ConfigError,
    ErrorCodes,
    GeometryError,
    RegimeError,
    SamplingError,
    SarMmvError,
    SolverDivergenceError,
    ValidationError,
    config_error_from_pydantic,
)
from sarmmv.schemas.experiment import ExperimentConfig


def _pydantic_error(raw: dict) -> PydanticValidationError:
    with pytest.raises(PydanticValidationError) as info:
        ExperimentConfig.model_validate(raw)
    return info.value


class TestExitCodes:
    """Each failure class maps to one process exit code."""

    @pytest.mark.parametrize(
        "exc, code",
        [
            (ConfigError("bad"), 2),
            (RegimeError("fails", failed=["m8"]), 3),
            (SolverDivergenceError("grew", iteration=12, residual=3.0), 4),
            (ValidationError("nope"), 1),
            (GeometryError("zero range"), 1),
            (SamplingError("too long"), 1),
            (ArtifactError("missing"), 1),
        ],
    )
    def test_exit_code(self, exc: SarMmvError, code: int):
        assert exc.exit_code == code


class TestDetail:
    """Structured payloads."""

    def test_to_dict_includes_extra(self):
        exc = SolverDivergenceError("grew", iteration=12, residual=3.0)
        detail = exc.to_dict()
        assert detail["code"] == ErrorCodes.SOLVER_DIVERGED
        assert detail["iteration"] == 12
        assert detail["residual"] == 3.0

    def test_regime_error_lists_failures(self):
        exc = RegimeError("fails", failed=["m8", "rot_cross"])
        assert exc.code == ErrorCodes.REGIME_HARD_FAIL
        assert exc.extra["failed"] == ["m8", "rot_cross"]

    def test_str_with_field(self):
        exc = ValidationError("must be positive", field="radius")
        assert str(exc) == "[VALIDATION_ERROR] radius: must be positive"

    def test_str_without_field(self):
        assert str(ArtifactError("gone")) == f"[{ErrorCodes.ART_MISSING}] gone"


class TestConfigErrorFromPydantic:
    """Only the first pydantic error is reported, with a dotted path."""

    def test_nested_field(self):
        exc = config_error_from_pydantic(_pydantic_error({"pulse": {"carrier_hz": -1.0}}), source="x.toml")
        assert isinstance(exc, ConfigError)
        assert exc.field == "pulse.carrier_hz"
        assert exc.extra["source"] == "x.toml"
        assert exc.extra["error_count"] == 1

    def test_unknown_key(self):
        exc = config_error_from_pydantic(_pydantic_error({"grid": {"extent_m": 3.0}}))
        assert exc.field == "grid.extent_m"
        assert exc.code == ErrorCodes.CFG_INVALID_VALUE
        assert "source" not in exc.extra
