"""
Experiment Schemas
==================

Pydantic models for the TOML experiment configuration. Every physical
quantity carries its unit in the key name. Defaults reproduce the GOTCHA
circular-SAR constants: X-band carrier at 9.6 GHz, 622 MHz bandwidth,
circular path of radius 7.1 km at height 7.3 km flown at 70 m/s.
"""

from typing import Literal, Optional

from pydantic import Field, field_validator, model_validator

from sarmmv.schemas.common import StrictSchema


# =============================================================================
# Platform and Pulse
# =============================================================================

class TrajectoryConfig(StrictSchema):
    """Platform path and slow-time sampling."""

    kind: Literal["circular", "custom"] = "circular"
    height_m: float = Field(default=7300.0, ge=0)
    radius_m: float = Field(default=7100.0, gt=0)
    speed_mps: float = Field(default=70.0, ge=0)
    slow_time_step_s: float = Field(default=0.015, gt=0)
    n_slow: Optional[int] = Field(
        default=None,
        ge=1,
        description="Slow-time samples; defaults to exactly what the segmentation uses",
    )
    start_angle_rad: float = Field(default=0.0, description="Angle of r(0) from +x")
    points_m: Optional[list[list[float]]] = Field(
        default=None,
        description="Stored positions for the custom kind, one per slow-time sample",
    )

    @model_validator(mode="after")
    def validate_custom_points(self) -> "TrajectoryConfig":
        if self.kind == "custom":
            if not self.points_m or len(self.points_m) < 2:
                raise ValueError("custom trajectories need at least two points_m")
            if any(len(p) != 3 for p in self.points_m):
                raise ValueError("points_m entries must be 3-vectors")
        return self


class PulseConfig(StrictSchema):
    """Idealized compressed-chirp pulse."""

    carrier_hz: float = Field(default=9.6e9, gt=0)
    bandwidth_hz: float = Field(default=622e6, gt=0)
    spectrum_level: float = Field(default=1.0, gt=0)
    wave_speed_mps: float = Field(default=3.0e8, gt=0)

    @model_validator(mode="after")
    def validate_narrowband(self) -> "PulseConfig":
        if self.bandwidth_hz / self.carrier_hz >= 0.2:
            raise ValueError("bandwidth_hz/carrier_hz must be below 0.2")
        return self


# =============================================================================
# Imaging Window and Segmentation
# =============================================================================

class GridConfig(StrictSchema):
    """Image window centred on the reference point."""

    extent_range_m: float = Field(default=40.0, ge=0)
    extent_cross_m: float = Field(default=40.0, ge=0)
    step_range_m: float = Field(default=2.0, gt=0)
    step_cross_m: float = Field(default=1.0, gt=0)
    center_m: list[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0])

    @field_validator("center_m")
    @classmethod
    def validate_center(cls, v: list[float]) -> list[float]:
        if len(v) != 3:
            raise ValueError("center_m must have three coordinates")
        if v[2] != 0.0:
            raise ValueError("center_m must lie in the image plane z = 0")
        return v


class SegmentationConfig(StrictSchema):
    """Sub-apertures and sub-bands."""

    n_apertures: int = Field(default=8, ge=1)
    n_subbands: int = Field(default=1, ge=1)
    subaperture_m: float = Field(default=42.0, gt=0)
    subband_hz: Optional[float] = Field(
        default=None,
        gt=0,
        description="Sub-band width; defaults to bandwidth_hz/15",
    )
    n_freq: int = Field(default=15, ge=1, description="Frequencies per sub-band")


# =============================================================================
# Scene
# =============================================================================

class ProfileConfig(StrictSchema):
    """Dependence of a scatterer on the sub-aperture or sub-band index."""

    kind: Literal["constant", "gaussian", "indicator"] = "constant"
    peak: float = Field(default=1.0, description="1-based centre index for gaussian")
    width: float = Field(default=1.0, gt=0)
    indices: list[int] = Field(
        default_factory=list,
        description="1-based indices where an indicator profile is one",
    )

    @model_validator(mode="after")
    def validate_indicator(self) -> "ProfileConfig":
        if self.kind == "indicator" and not self.indices:
            raise ValueError("indicator profiles need at least one index")
        return self


class ScattererConfig(StrictSchema):
    """Point scatterer on (or near) the image grid."""

    position_m: Optional[list[float]] = Field(
        default=None,
        description="(range, cross-range) offset from the window centre",
    )
    grid_index: Optional[int] = Field(default=None, ge=0)
    amplitude: float = 1.0
    phase_rad: float = 0.0
    direction: ProfileConfig = Field(default_factory=ProfileConfig)
    frequency: ProfileConfig = Field(default_factory=ProfileConfig)
    table_real: Optional[list[list[float]]] = Field(
        default=None,
        description="Explicit amplitudes indexed [alpha-1][beta-1]",
    )
    table_imag: Optional[list[list[float]]] = None

    @model_validator(mode="after")
    def validate_location(self) -> "ScattererConfig":
        if (self.position_m is None) == (self.grid_index is None):
            raise ValueError("give exactly one of position_m or grid_index")
        if self.position_m is not None and len(self.position_m) != 2:
            raise ValueError("position_m is (range, cross-range)")
        if self.table_imag is not None and self.table_real is None:
            raise ValueError("table_imag requires table_real")
        return self


class SceneConfig(StrictSchema):
    """Ground-truth scene."""

    scatterers: list[ScattererConfig] = Field(default_factory=list)
    allow_off_grid: bool = Field(
        default=False,
        description="Keep off-grid positions in the simulation (stress mode)",
    )


class NoiseConfig(StrictSchema):
    """Additive noise."""

    level: float = Field(default=0.0, ge=0)
    seed: int = 0
    mode: Literal["frobenius", "per_sample"] = "frobenius"


# =============================================================================
# Model and Solver
# =============================================================================

class SolverConfig(StrictSchema):
    """
    GeLMA-MMV parameters.

    ``step`` and ``regularization`` are expressed for the internally
    normalised problem (model matrix scaled to unit spectral norm, data
    scaled so the largest row of the back-projection has unit norm).
    In those units the largest row of the first update mu A^* D has norm
    mu, so the first shrinkage mu * gamma removes ``first_threshold`` of
    it when gamma is left unset. Gamma at or above 1 makes the
    multiplier update unstable.
    """

    step: float = Field(default=0.5, gt=0, le=0.9)
    regularization: Optional[float] = Field(
        default=None,
        gt=0,
        lt=1,
        description="Defaults to first_threshold",
    )
    first_threshold: float = Field(
        default=1e-3,
        gt=0,
        lt=1,
        description="First shrinkage as a fraction of the largest initial row norm",
    )
    max_iters: int = Field(default=5000, ge=1)
    tol_residual: Optional[float] = Field(
        default=None,
        ge=0,
        description="Relative residual; defaults to the noise level times discrepancy_factor",
    )
    tol_change: float = Field(default=1e-10, ge=0)
    support_threshold: float = Field(default=0.1, ge=0, lt=1)
    power_iterations: Optional[int] = Field(default=None, ge=1)
    discrepancy_factor: float = Field(default=1.1, ge=1)
    divergence_factor: float = Field(default=10.0, gt=1)
    divergence_window: int = Field(default=100, ge=1)
    seed: int = 0

    @property
    def gamma(self) -> float:
        return self.first_threshold if self.regularization is None else self.regularization

    def residual_tolerance(self, noise_level: float) -> float:
        """Relative residual target for a given data noise fraction."""
        if self.tol_residual is not None:
            return self.tol_residual
        if noise_level > 0:
            return self.discrepancy_factor * noise_level
        return 1e-9


class ModelConfig(StrictSchema):
    """Data model choices."""

    doppler: bool = Field(default=False, description="Use the Doppler model matrices")
    simulator: Literal["auto", "start_stop", "doppler"] = "auto"
    downramp: Literal["doppler", "start_stop"] = "doppler"
    continuous_profiles: bool = False
    matrix_free: bool = False

    @property
    def simulator_kind(self) -> str:
        if self.simulator == "auto":
            return "doppler" if self.doppler else "start_stop"
        return self.simulator


class RegimeConfig(StrictSchema):
    """Overrides of the regime thresholds from the environment settings."""

    small_threshold: Optional[float] = Field(default=None, gt=0)
    warn_threshold: Optional[float] = Field(default=None, gt=0)
    enforce: bool = Field(default=True, description="Hard-fail stops the run")


class OutputsConfig(StrictSchema):
    """Where and what to write."""

    directory: Optional[str] = None
    plots: bool = True
    plot_format: Optional[Literal["png", "svg"]] = None
    write_data: bool = True
    dump_model: bool = False
    coherence: bool = True
    coherence_random_pairs: int = Field(default=200, ge=0)


# =============================================================================
# Experiment
# =============================================================================

class ExperimentConfig(StrictSchema):
    """Complete experiment description."""

    name: str = "experiment"
    preset: Optional[str] = None
    description: str = ""
    trajectory: TrajectoryConfig = Field(default_factory=TrajectoryConfig)
    pulse: PulseConfig = Field(default_factory=PulseConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    segmentation: SegmentationConfig = Field(default_factory=SegmentationConfig)
    scene: SceneConfig = Field(default_factory=SceneConfig)
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    regime: RegimeConfig = Field(default_factory=RegimeConfig)
    outputs: OutputsConfig = Field(default_factory=OutputsConfig)

    @field_validator("name")
    @classmethod
    def validate_name(cls, v: str) -> str:
        if not v or any(ch in v for ch in "/\\"):
            raise ValueError("name must be a non-empty path segment")
        return v

    @property
    def subband_hz(self) -> float:
        if self.segmentation.subband_hz is not None:
            return self.segmentation.subband_hz
        return self.pulse.bandwidth_hz / 15.0
