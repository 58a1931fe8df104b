"""
Plotting Service
================

Static figures of a finished run, rendered on bare Figure objects with the Agg
backend: no display server, and concurrent batch runs do not share
pyplot state.

    1-D window   one line plot of truth, MMV and migration vs cross-range
    2-D window   peak-over-(alpha, beta) heatmaps of truth, MMV and
                 migration, plus |R| over (alpha, beta) per true scatterer

Figures are rendered from the run's SARC1M matrices and the manifest
layout. SVG output uses a fixed hash salt and no date metadata, so the
same run always produces the same bytes.
"""

import logging
from pathlib import Path
from typing import Optional, Union

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from sarmmv.config import settings
from sarmmv.core.errors import ArtifactError, ErrorCodes
from sarmmv.schemas.reports import RunManifest
from sarmmv.services import artifacts

logger = logging.getLogger(__name__)

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "sarmmv"

_METADATA = {
    "svg": {"Date": None},
    "png": {"Software": None},
}

_LAYOUT_KEYS = ("n_range", "n_cross", "step_range_m", "step_cross_m", "n_apertures", "n_subbands")


# =============================================================================
# Figures
# =============================================================================

def _offsets(n: int, step: float) -> np.ndarray:
    return (np.arange(n) - (n - 1) / 2.0) * step


def peak_over_cells(values: np.ndarray) -> np.ndarray:
    """Per-pixel max |R| over all (alpha, beta) columns."""
    if values.shape[1] == 0:
        return np.zeros(values.shape[0])
    return np.abs(values).max(axis=1)


def render_line_profile(
    cross_m: np.ndarray,
    truth: np.ndarray,
    estimate: np.ndarray,
    migration: np.ndarray,
    title: str = "",
) -> Figure:
    """Truth, MMV and migration magnitudes along a cross-range line."""
    fig = Figure(figsize=(8, 4))
    ax = fig.subplots()
    ax.plot(cross_m, truth, "k-", label="truth", linewidth=1.5)
    ax.plot(cross_m, estimate, "o", color="tab:blue", label="MMV", markersize=4)
    ax.plot(cross_m, migration, "--", color="tab:red", label="migration", linewidth=1.0)
    ax.set_xlabel("cross-range (m)")
    ax.set_ylabel("|reflectivity|")
    ax.set_title(title)
    ax.legend(loc="upper right")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return fig


def render_heatmap(
    image: np.ndarray,
    range_m: np.ndarray,
    cross_m: np.ndarray,
    title: str,
    vmax: Optional[float] = None,
) -> Figure:
    """Magnitude map with range vertical and cross-range horizontal."""
    fig = Figure(figsize=(5, 4.5))
    ax = fig.subplots()
    extent = (
        cross_m[0] - 0.5 * _step(cross_m),
        cross_m[-1] + 0.5 * _step(cross_m),
        range_m[0] - 0.5 * _step(range_m),
        range_m[-1] + 0.5 * _step(range_m),
    )
    vmax = vmax if vmax and vmax > 0 else max(float(image.max(initial=0.0)), 1.0)
    mesh = ax.imshow(image, origin="lower", extent=extent, aspect="auto", cmap="viridis", vmin=0.0, vmax=vmax)
    fig.colorbar(mesh, ax=ax)
    ax.set_xlabel("cross-range (m)")
    ax.set_ylabel("range (m)")
    ax.set_title(title)
    fig.tight_layout()
    return fig


def _step(axis: np.ndarray) -> float:
    return float(axis[1] - axis[0]) if len(axis) > 1 else 1.0


def render_profiles(
    truth: np.ndarray,
    estimate: np.ndarray,
    pixels: list[int],
    n_apertures: int,
    n_subbands: int,
) -> Figure:
    """|R| over (alpha, beta) for each pixel: truth on top, MMV below."""
    n = max(len(pixels), 1)
    fig = Figure(figsize=(2.6 * n + 1, 5))
    axes = fig.subplots(2, n, squeeze=False)
    if not pixels:
        for ax in axes.ravel():
            ax.set_axis_off()
        axes[0, 0].text(0.5, 0.5, "no scatterers", ha="center", va="center")
        return fig

    for k, q in enumerate(pixels):
        cells_true = np.abs(truth[q]).reshape(n_apertures, n_subbands)
        cells_est = np.abs(estimate[q]).reshape(n_apertures, n_subbands)
        vmax = max(float(cells_true.max()), float(cells_est.max()), 1e-12)
        for row, (cells, label) in enumerate(((cells_true, "truth"), (cells_est, "MMV"))):
            ax = axes[row, k]
            ax.imshow(
                cells,
                origin="lower",
                aspect="auto",
                cmap="magma",
                vmin=0.0,
                vmax=vmax,
                extent=(0.5, n_subbands + 0.5, 0.5, n_apertures + 0.5),
            )
            ax.set_title(f"pixel {q} {label}", fontsize=8)
            ax.set_xlabel("sub-band")
            ax.set_ylabel("sub-aperture")
    fig.tight_layout()
    return fig


# =============================================================================
# Run Directory
# =============================================================================

def _save(fig: Figure, path: Path, fmt: str) -> Path:
    fig.savefig(path, format=fmt, dpi=120, metadata=_METADATA[fmt])
    return path


def _layout(manifest: RunManifest) -> dict:
    missing = [key for key in _LAYOUT_KEYS if key not in manifest.layout]
    if missing:
        raise ArtifactError(
            message=f"Manifest of '{manifest.name}' has no layout for {', '.join(missing)}",
            code=ErrorCodes.ART_MISSING,
        )
    return manifest.layout


def emit_plots(
    run_dir: Union[str, Path],
    fmt: Optional[str] = None,
    manifest: Optional[RunManifest] = None,
) -> dict[str, Path]:
    """
    Render the figures of a run directory.

    Returns:
        Plot name -> written path

    Raises:
        ArtifactError: If the manifest or a matrix artifact is missing
    """
    run_dir = Path(run_dir)
    manifest = manifest or artifacts.read_manifest(run_dir)
    fmt = (fmt or manifest.config.get("outputs", {}).get("plot_format") or settings.PLOT_FORMAT).lower()
    if fmt not in _METADATA:
        raise ArtifactError(message=f"Unsupported plot format '{fmt}'", code=ErrorCodes.ART_BAD_MAGIC)
    layout = _layout(manifest)

    _, truth = artifacts.read_matrix(run_dir / "truth.sarc")
    _, estimate = artifacts.read_matrix(run_dir / "estimate.sarc")
    _, migration = artifacts.read_matrix(run_dir / "migration.sarc")
    migration = np.abs(migration[:, 0])

    n_range, n_cross = layout["n_range"], layout["n_cross"]
    range_m = _offsets(n_range, layout["step_range_m"])
    cross_m = _offsets(n_cross, layout["step_cross_m"])
    truth_peak = peak_over_cells(truth)
    estimate_peak = peak_over_cells(estimate)

    paths: dict[str, Path] = {}
    if n_range == 1:
        fig = render_line_profile(cross_m, truth_peak, estimate_peak, migration, title=manifest.name)
        paths["line"] = _save(fig, run_dir / f"line.{fmt}", fmt)
    else:
        shape = (n_range, n_cross)
        vmax = float(max(truth_peak.max(initial=0.0), estimate_peak.max(initial=0.0)))
        maps = (
            ("truth_map", truth_peak, "truth", vmax),
            ("mmv_map", estimate_peak, "MMV", vmax),
            ("migration_map", migration, "migration", None),
        )
        for name, image, title, scale in maps:
            fig = render_heatmap(image.reshape(shape), range_m, cross_m, title, scale)
            paths[name] = _save(fig, run_dir / f"{name}.{fmt}", fmt)
        support = [int(q) for q in np.flatnonzero(truth_peak > 0)]
        fig = render_profiles(truth, estimate, support, layout["n_apertures"], layout["n_subbands"])
        paths["profiles"] = _save(fig, run_dir / f"profiles.{fmt}", fmt)

    logger.info("Wrote %d plots to %s", len(paths), run_dir)
    return paths


def refresh_plots(run_dir: Union[str, Path], fmt: Optional[str] = None) -> RunManifest:
    """Re-render a run's plots and replace their manifest entries."""
    run_dir = Path(run_dir)
    manifest = artifacts.read_manifest(run_dir)
    paths = emit_plots(run_dir, fmt, manifest)
    kept = [entry for entry in manifest.artifacts if not entry.kind.startswith("plot:")]
    manifest.artifacts = kept + [
        artifacts.artifact_entry(run_dir, path, f"plot:{name}") for name, path in paths.items()
    ]
    artifacts.write_manifest(run_dir, manifest)
    return manifest
