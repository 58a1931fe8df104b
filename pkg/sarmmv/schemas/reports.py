"""
Report Schemas
==============

Regime, coherence and score reports plus the run manifest. All of them
serialize to JSON through pydantic; the regime report also renders as a
flat key/value text block.
"""

from typing import Any, Optional

from pydantic import Field

from sarmmv.core.limits import STATUS_FAIL, STATUS_WARN
from sarmmv.schemas.common import ErrorDetail, ReportSchema


# =============================================================================
# Regime
# =============================================================================

class Diagnostic(ReportSchema):
    """One dimensionless regime diagnostic."""

    name: str
    value: Optional[float] = None
    status: str
    description: str = ""
    note: Optional[str] = None


class RegimeReport(ReportSchema):
    """Regime diagnostics for a geometry and segmentation."""

    diagnostics: dict[str, Diagnostic] = Field(default_factory=dict)
    small_threshold: float = 0.1
    warn_threshold: float = 1.0
    # Resolution constants that go with the diagnostics
    crossrange_resolution_m: float = 0.0
    range_resolution_m: Optional[float] = None
    wavelength_m: float = 0.0
    range_m: float = 0.0

    def value(self, name: str) -> Optional[float]:
        return self.diagnostics[name].value

    @property
    def failed(self) -> list[str]:
        return [d.name for d in self.diagnostics.values() if d.status == STATUS_FAIL]

    @property
    def warned(self) -> list[str]:
        return [d.name for d in self.diagnostics.values() if d.status == STATUS_WARN]

    @property
    def hard_fail(self) -> bool:
        return bool(self.failed)

    def to_text(self) -> str:
        """Flat ``key = value  # status`` block, one diagnostic per line."""
        lines = [
            f"wavelength_m = {self.wavelength_m:.6g}",
            f"range_m = {self.range_m:.6g}",
            f"crossrange_resolution_m = {self.crossrange_resolution_m:.6g}",
        ]
        if self.range_resolution_m is not None:
            lines.append(f"range_resolution_m = {self.range_resolution_m:.6g}")
        for diag in self.diagnostics.values():
            value = "n/a" if diag.value is None else f"{diag.value:.6g}"
            suffix = f"  # {diag.status}"
            if diag.note:
                suffix += f" ({diag.note})"
            lines.append(f"{diag.name} = {value}{suffix}")
        return "\n".join(lines) + "\n"


# =============================================================================
# Coherence
# =============================================================================

class PairCoherence(ReportSchema):
    """Numeric vs predicted coherence for one pair of columns or rows."""

    first: int
    second: int
    numeric: float
    predicted: float
    abs_error: float
    valid: bool
    separation_cells: float


class CoherenceReport(ReportSchema):
    """Gram-matrix coherence against the sinc-product prediction."""

    kind: str
    alpha: Optional[int] = None
    beta: Optional[int] = None
    max_offdiag_numeric: float = 0.0
    max_abs_error: float = 0.0
    max_abs_error_valid: float = 0.0
    n_pairs: int = 0
    n_valid: int = 0
    adjacent_coherence: Optional[float] = None
    pairs: list[PairCoherence] = Field(default_factory=list)

    def summary(self) -> dict[str, Any]:
        """Report without the per-pair table."""
        return self.model_dump(exclude={"pairs"})


# =============================================================================
# Scores
# =============================================================================

class ScoreReport(ReportSchema):
    """Reconstruction quality against the ground truth."""

    precision: float
    recall: float
    support_true: list[int] = Field(default_factory=list)
    support_est: list[int] = Field(default_factory=list)
    relative_error: float
    max_entry_error: float
    direction_rmse: dict[int, float] = Field(default_factory=dict)
    frequency_rmse: dict[int, float] = Field(default_factory=dict)
    migration_hit_rate: Optional[float] = None
    migration_peaks: list[int] = Field(default_factory=list)

    @property
    def exact_support(self) -> bool:
        return self.support_true == self.support_est


# =============================================================================
# Manifest
# =============================================================================

class ArtifactEntry(ReportSchema):
    """File written by a run."""

    path: str
    kind: str
    sha256: str
    size_bytes: int


class RunManifest(ReportSchema):
    """Everything a run produced, written atomically as manifest.json."""

    name: str
    tool_version: str
    created_at: str
    status: str = "ok"
    seed: int = 0
    config: dict[str, Any] = Field(default_factory=dict)
    layout: dict[str, Any] = Field(default_factory=dict)
    regime: Optional[RegimeReport] = None
    coherence: list[dict[str, Any]] = Field(default_factory=list)
    score: Optional[ScoreReport] = None
    solver: dict[str, Any] = Field(default_factory=dict)
    artifacts: list[ArtifactEntry] = Field(default_factory=list)
    timings_s: dict[str, float] = Field(default_factory=dict)
    warnings: list[str] = Field(default_factory=list)
    error: Optional[ErrorDetail] = None

    def artifact(self, kind: str) -> Optional[ArtifactEntry]:
        for entry in self.artifacts:
            if entry.kind == kind:
                return entry
        return None
