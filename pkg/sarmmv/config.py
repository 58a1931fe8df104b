"""
Application Configuration
=========================

Process-level configuration using Pydantic Settings.
Loads from environment variables (prefix ``SARMMV_``) and an optional
``.env`` file. Experiment parameters live in TOML files instead, see
``sarmmv.schemas.experiment``.
"""

import logging
from functools import lru_cache

from pydantic import Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runner settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="SARMMV_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Environment
    ENVIRONMENT: str = Field(default="development")
    LOG_LEVEL: str = Field(default="INFO", description="Root logging level")

    # Output
    OUTPUT_ROOT: str = Field(
        default="runs",
        description="Directory under which run directories are created",
    )
    PLOT_FORMAT: str = Field(default="png", description="png or svg")

    # Parallelism
    JOBS: int = Field(default=1, ge=1, description="Concurrent experiments in a batch")
    SIM_WORKERS: int = Field(
        default=1,
        ge=1,
        description="Threads used for simulation and migration chunks",
    )

    # Regime thresholds for "much less than one" diagnostics
    REGIME_SMALL_THRESHOLD: float = Field(default=0.1, gt=0)
    REGIME_WARN_THRESHOLD: float = Field(default=1.0, gt=0)

    # Solver
    POWER_ITERATIONS: int = Field(
        default=30,
        ge=1,
        description="Power iterations for the spectral norm estimate",
    )

    @property
    def is_production(self) -> bool:
        """Check if running in production environment."""
        return self.ENVIRONMENT.lower() == "production"

    @property
    def log_level_value(self) -> int:
        """Numeric logging level."""
        return logging.getLevelName(self.LOG_LEVEL)

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Ensure the level is one the logging module knows."""
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Unknown LOG_LEVEL '{v}'")
        return level

    @field_validator("PLOT_FORMAT")
    @classmethod
    def validate_plot_format(cls, v: str) -> str:
        """Only raster PNG and vector SVG are rendered."""
        fmt = v.lower().lstrip(".")
        if fmt not in {"png", "svg"}:
            raise ValueError("PLOT_FORMAT must be 'png' or 'svg'")
        return fmt

    @model_validator(mode="after")
    def validate_thresholds(self) -> "Settings":
        """The warning band must sit above the pass threshold."""
        if self.REGIME_WARN_THRESHOLD <= self.REGIME_SMALL_THRESHOLD:
            raise ValueError(
                "REGIME_WARN_THRESHOLD must exceed REGIME_SMALL_THRESHOLD"
            )
        return self


@lru_cache
def get_settings() -> Settings:
    """
    Get cached settings instance.

    Uses lru_cache to ensure settings are loaded only once.
    """
    return Settings()


# Export a default settings instance
settings = get_settings()
