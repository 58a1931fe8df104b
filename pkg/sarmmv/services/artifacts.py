"""
Artifact Service
================

Files written into a run directory and read back by the plot command.

Binary layouts (all little-endian):

    SARC1   data cube   b"SARC1" | u8 N_s | u8 N_omega |
                        c16 values (N_s x N_omega, row-major) |
                        f8 slow times (N_s) | f8 frequencies (N_omega)
    SARC1M  matrix      b"SARC1M" | u2 tag length | tag (utf-8) |
                        u8 rows | u8 cols | c16 values (row-major)

Tables are CSV with a header row. Floats are written with 17 significant
digits so identical runs produce identical bytes.
"""

import csv
import io
import json
import logging
import struct
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from sarmmv.core.errors import ArtifactError, ErrorCodes
from sarmmv.models.data import DataCube
from sarmmv.models.mmv import SolveResult
from sarmmv.schemas.reports import (
    ArtifactEntry,
    CoherenceReport,
    RegimeReport,
    RunManifest,
    ScoreReport,
)
from sarmmv.utils.helpers import atomic_write_bytes, atomic_write_text, sha256_file

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

DATA_MAGIC = b"SARC1"
MATRIX_MAGIC = b"SARC1M"
MANIFEST_NAME = "manifest.json"

_COMPLEX = np.dtype("<c16")
_FLOAT = np.dtype("<f8")


def _num(value: float) -> str:
    return f"{value:.17g}"


# =============================================================================
# Binary Files
# =============================================================================

def write_data_cube(path: PathLike, cube: DataCube) -> Path:
    """Write a data cube in the SARC1 layout."""
    n_s, n_omega = cube.shape
    payload = b"".join(
        [
            DATA_MAGIC,
            struct.pack("<QQ", n_s, n_omega),
            np.ascontiguousarray(cube.values, dtype=_COMPLEX).tobytes(),
            np.ascontiguousarray(cube.slow_times, dtype=_FLOAT).tobytes(),
            np.ascontiguousarray(cube.frequencies, dtype=_FLOAT).tobytes(),
        ]
    )
    return atomic_write_bytes(path, payload)


def read_data_cube(path: PathLike) -> DataCube:
    """
    Read a SARC1 data cube.

    Raises:
        ArtifactError: If the file is missing, has the wrong magic or is
            shorter than its header announces
    """
    raw = _read_bytes(path)
    if not raw.startswith(DATA_MAGIC) or raw.startswith(MATRIX_MAGIC):
        raise ArtifactError(message=f"{path} is not a SARC1 data cube", code=ErrorCodes.ART_BAD_MAGIC)
    offset = len(DATA_MAGIC)
    n_s, n_omega = _unpack(raw, "<QQ", offset, path)
    offset += 16
    values = _take(raw, offset, _COMPLEX, n_s * n_omega, path).reshape(n_s, n_omega)
    offset += values.nbytes
    slow_times = _take(raw, offset, _FLOAT, n_s, path)
    offset += slow_times.nbytes
    frequencies = _take(raw, offset, _FLOAT, n_omega, path)
    return DataCube(values=values, slow_times=slow_times, frequencies=frequencies)


def write_matrix(path: PathLike, values: np.ndarray, tag: str) -> Path:
    """Write a complex matrix (vectors become one column) in the SARC1M layout."""
    matrix = np.asarray(values)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    tag_bytes = tag.encode("utf-8")
    payload = b"".join(
        [
            MATRIX_MAGIC,
            struct.pack("<H", len(tag_bytes)),
            tag_bytes,
            struct.pack("<QQ", *matrix.shape),
            np.ascontiguousarray(matrix, dtype=_COMPLEX).tobytes(),
        ]
    )
    return atomic_write_bytes(path, payload)


def read_matrix(path: PathLike) -> tuple[str, np.ndarray]:
    """
    Read a SARC1M matrix.

    Returns:
        (tag, values) with values shaped rows x cols

    Raises:
        ArtifactError: If the file is missing, malformed or truncated
    """
    raw = _read_bytes(path)
    if not raw.startswith(MATRIX_MAGIC):
        raise ArtifactError(message=f"{path} is not a SARC1M matrix", code=ErrorCodes.ART_BAD_MAGIC)
    offset = len(MATRIX_MAGIC)
    (tag_len,) = _unpack(raw, "<H", offset, path)
    offset += 2
    if len(raw) < offset + tag_len:
        raise ArtifactError(message=f"{path} is truncated", code=ErrorCodes.ART_TRUNCATED)
    tag = raw[offset : offset + tag_len].decode("utf-8")
    offset += tag_len
    rows, cols = _unpack(raw, "<QQ", offset, path)
    offset += 16
    values = _take(raw, offset, _COMPLEX, rows * cols, path).reshape(rows, cols)
    return tag, values


def _read_bytes(path: PathLike) -> bytes:
    try:
        return Path(path).read_bytes()
    except FileNotFoundError as exc:
        raise ArtifactError(message=f"Missing artifact {path}", code=ErrorCodes.ART_MISSING) from exc


def _unpack(raw: bytes, fmt: str, offset: int, path: PathLike) -> tuple:
    size = struct.calcsize(fmt)
    if len(raw) < offset + size:
        raise ArtifactError(message=f"{path} is truncated", code=ErrorCodes.ART_TRUNCATED)
    return struct.unpack_from(fmt, raw, offset)


def _take(raw: bytes, offset: int, dtype: np.dtype, count: int, path: PathLike) -> np.ndarray:
    if len(raw) < offset + count * dtype.itemsize:
        raise ArtifactError(message=f"{path} is truncated", code=ErrorCodes.ART_TRUNCATED)
    return np.frombuffer(raw, dtype=dtype, count=count, offset=offset).copy()


# =============================================================================
# Tables
# =============================================================================

def _write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return atomic_write_text(path, buffer.getvalue())


def write_history_csv(path: PathLike, result: SolveResult) -> Path:
    """Per-iteration residual and J21 norm."""
    rows = (
        (k + 1, _num(res), _num(j21))
        for k, (res, j21) in enumerate(zip(result.residual_history, result.j21_history))
    )
    return _write_csv(path, ("iteration", "residual", "j21"), rows)


def write_scores_csv(path: PathLike, report: ScoreReport) -> Path:
    """Global scores followed by per-scatterer profile errors."""
    rows: list[tuple] = [
        ("precision", "", _num(report.precision)),
        ("recall", "", _num(report.recall)),
        ("relative_error", "", _num(report.relative_error)),
        ("max_entry_error", "", _num(report.max_entry_error)),
    ]
    if report.migration_hit_rate is not None:
        rows.append(("migration_hit_rate", "", _num(report.migration_hit_rate)))
    for q in sorted(report.direction_rmse):
        rows.append(("direction_rmse", q, _num(report.direction_rmse[q])))
    for q in sorted(report.frequency_rmse):
        rows.append(("frequency_rmse", q, _num(report.frequency_rmse[q])))
    return _write_csv(path, ("metric", "pixel", "value"), rows)


def write_coherence_csv(path: PathLike, report: CoherenceReport) -> Path:
    """Per-pair coherence table."""
    rows = (
        (p.first, p.second, _num(p.numeric), _num(p.predicted), _num(p.abs_error), int(p.valid), _num(p.separation_cells))
        for p in report.pairs
    )
    header = ("first", "second", "numeric", "predicted", "abs_error", "valid", "separation_cells")
    return _write_csv(path, header, rows)


def write_profiles_csv(
    path: PathLike,
    truth: np.ndarray,
    estimate: np.ndarray,
    pixels: Sequence[int],
    n_apertures: int,
    n_subbands: int,
) -> Path:
    """|R_true| and |R_est| over (alpha, beta) for each listed pixel."""
    rows = []
    for q in pixels:
        true_cells = np.abs(truth[q]).reshape(n_apertures, n_subbands)
        est_cells = np.abs(estimate[q]).reshape(n_apertures, n_subbands)
        for a in range(n_apertures):
            for b in range(n_subbands):
                rows.append((q, a + 1, b + 1, _num(true_cells[a, b]), _num(est_cells[a, b])))
    return _write_csv(path, ("pixel", "alpha", "beta", "truth_abs", "estimate_abs"), rows)


def write_regime_text(path: PathLike, report: RegimeReport) -> Path:
    return atomic_write_text(path, report.to_text())


# =============================================================================
# Manifest
# =============================================================================

def artifact_entry(run_dir: PathLike, path: PathLike, kind: str) -> ArtifactEntry:
    """Inventory entry with the file's sha256 and a run-relative path."""
    path = Path(path)
    return ArtifactEntry(
        path=path.relative_to(run_dir).as_posix(),
        kind=kind,
        sha256=sha256_file(path),
        size_bytes=path.stat().st_size,
    )


def write_manifest(run_dir: PathLike, manifest: RunManifest) -> Path:
    """Write manifest.json atomically."""
    path = Path(run_dir) / MANIFEST_NAME
    atomic_write_text(path, manifest.model_dump_json(indent=2) + "\n")
    logger.info("Manifest written to %s (%d artifacts)", path, len(manifest.artifacts))
    return path


def read_manifest(run_dir: PathLike) -> RunManifest:
    """
    Load a run's manifest.

    Raises:
        ArtifactError: If the manifest is missing or not a valid manifest
    """
    path = Path(run_dir) / MANIFEST_NAME
    raw = _read_bytes(path)
    try:
        return RunManifest.model_validate(json.loads(raw))
    except (json.JSONDecodeError, PydanticValidationError) as exc:
        raise ArtifactError(message=f"Invalid manifest {path}: {exc}", code=ErrorCodes.ART_BAD_MAGIC) from exc
