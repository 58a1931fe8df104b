"""
Settings Tests
==============

Environment-driven runner settings.
"""

import logging

import pytest
from pydantic import ValidationError as PydanticValidationError

from sarmmv.config import Settings, get_settings


class TestSettings:
    """Defaults, coercion and cross-field checks."""

    def test_defaults(self):
        s = Settings(_env_file=None)
        assert s.OUTPUT_ROOT == "runs"
        assert s.JOBS == 1
        assert s.REGIME_SMALL_THRESHOLD < s.REGIME_WARN_THRESHOLD

    def test_log_level_is_upper_cased(self):
        s = Settings(_env_file=None, LOG_LEVEL="debug")
        assert s.LOG_LEVEL == "DEBUG"
        assert s.log_level_value == logging.DEBUG

    def test_unknown_log_level_rejected(self):
        with pytest.raises(PydanticValidationError):
            Settings(_env_file=None, LOG_LEVEL="chatty")

    def test_plot_format_normalised(self):
        assert Settings(_env_file=None, PLOT_FORMAT=".SVG").PLOT_FORMAT == "svg"

    def test_plot_format_rejects_pdf(self):
        with pytest.raises(PydanticValidationError):
            Settings(_env_file=None, PLOT_FORMAT="pdf")

    def test_warn_threshold_must_exceed_small(self):
        with pytest.raises(PydanticValidationError):
            Settings(_env_file=None, REGIME_SMALL_THRESHOLD=0.5, REGIME_WARN_THRESHOLD=0.5)

    def test_environment_prefix(self, monkeypatch):
        monkeypatch.setenv("SARMMV_JOBS", "4")
        assert Settings(_env_file=None).JOBS == 4

    def test_is_production(self):
        assert Settings(_env_file=None, ENVIRONMENT="Production").is_production
        assert not Settings(_env_file=None).is_production

    def test_get_settings_is_cached(self):
        assert get_settings() is get_settings()
