"""
Artifact Tests
==============

SARC1 binary files, CSV tables and the run manifest.
"""

import csv
import hashlib

import numpy as np
import pytest

from sarmmv.core.errors import ArtifactError, ErrorCodes
from sarmmv.models.data import DataCube
from sarmmv.models.mmv import SolveResult
from sarmmv.schemas.reports import RunManifest, ScoreReport
from sarmmv.services.artifacts import (
    artifact_entry,
    read_data_cube,
    read_manifest,
    read_matrix,
    write_data_cube,
    write_history_csv,
    write_manifest,
    write_matrix,
    write_profiles_csv,
    write_scores_csv,
)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _make_cube() -> DataCube:
    values = np.array([[1 + 2j, -0.5j, 3.0], [0.25, 1e-300, -7 - 7j]])
    return DataCube(values=values, slow_times=np.array([0.0, 0.015]), frequencies=np.array([6.0e10, 6.1e10, 6.2e10]))


def _read_rows(path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.reader(handle))


def _make_manifest(**overrides) -> RunManifest:
    fields = {"name": "unit", "tool_version": "0.1.0", "created_at": "2026-01-01T00:00:00Z"}
    fields.update(overrides)
    return RunManifest(**fields)


class TestDataCubeFile:
    """SARC1 layout."""

    def test_write_then_read(self, tmp_path):
        cube = _make_cube()
        path = write_data_cube(tmp_path / "data.sarc", cube)
        back = read_data_cube(path)
        assert np.array_equal(back.values, cube.values)
        assert np.array_equal(back.slow_times, cube.slow_times)
        assert np.array_equal(back.frequencies, cube.frequencies)

    def test_header(self, tmp_path):
        raw = write_data_cube(tmp_path / "data.sarc", _make_cube()).read_bytes()
        assert raw[:5] == b"SARC1"
        assert int.from_bytes(raw[5:13], "little") == 2
        assert int.from_bytes(raw[13:21], "little") == 3
        assert len(raw) == 5 + 16 + 6 * 16 + 2 * 8 + 3 * 8

    def test_identical_inputs_identical_bytes(self, tmp_path):
        first = write_data_cube(tmp_path / "a.sarc", _make_cube()).read_bytes()
        second = write_data_cube(tmp_path / "b.sarc", _make_cube()).read_bytes()
        assert first == second

    def test_matrix_file_is_not_a_cube(self, tmp_path):
        path = write_matrix(tmp_path / "m.sarc", np.eye(2), "truth")
        with pytest.raises(ArtifactError) as info:
            read_data_cube(path)
        assert info.value.code == ErrorCodes.ART_BAD_MAGIC

    def test_truncated(self, tmp_path):
        path = write_data_cube(tmp_path / "data.sarc", _make_cube())
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(ArtifactError) as info:
            read_data_cube(path)
        assert info.value.code == ErrorCodes.ART_TRUNCATED

    def test_missing(self, tmp_path):
        with pytest.raises(ArtifactError) as info:
            read_data_cube(tmp_path / "nope.sarc")
        assert info.value.code == ErrorCodes.ART_MISSING


class TestMatrixFile:
    """SARC1M layout."""

    def test_write_then_read(self, tmp_path):
        values = np.arange(6).reshape(3, 2) * (1 - 1j)
        tag, back = read_matrix(write_matrix(tmp_path / "m.sarc", values, "estimate"))
        assert tag == "estimate"
        assert np.array_equal(back, values)

    def test_vector_becomes_column(self, tmp_path):
        _, back = read_matrix(write_matrix(tmp_path / "v.sarc", np.ones(4), "migration"))
        assert back.shape == (4, 1)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.sarc"
        path.write_bytes(b"NOTSARC")
        with pytest.raises(ArtifactError):
            read_matrix(path)

    def test_truncated_tag(self, tmp_path):
        path = tmp_path / "short.sarc"
        path.write_bytes(b"SARC1M" + (40).to_bytes(2, "little") + b"abc")
        with pytest.raises(ArtifactError) as info:
            read_matrix(path)
        assert info.value.code == ErrorCodes.ART_TRUNCATED


class TestTables:
    """CSV outputs."""

    def test_history(self, tmp_path):
        result = SolveResult(
            X=np.zeros((2, 1)),
            iterations=2,
            residual_history=[1.0, 0.5],
            j21_history=[0.0, 0.25],
            converged=False,
            step=0.5,
            regularization=0.5,
            spectral_norm=1.0,
            stop_reason="max_iters",
        )
        rows = _read_rows(write_history_csv(tmp_path / "history.csv", result))
        assert rows[0] == ["iteration", "residual", "j21"]
        assert rows[2] == ["2", "0.5", "0.25"]

    def test_scores(self, tmp_path):
        report = ScoreReport(
            precision=1.0,
            recall=0.5,
            relative_error=0.1,
            max_entry_error=0.2,
            direction_rmse={3: 0.01},
            frequency_rmse={3: 0.02},
        )
        rows = _read_rows(write_scores_csv(tmp_path / "scores.csv", report))
        assert rows[0] == ["metric", "pixel", "value"]
        assert ["recall", "", "0.5"] in rows
        assert ["direction_rmse", "3", "0.01"] in rows
        assert not any(row[0] == "migration_hit_rate" for row in rows)

    def test_profiles(self, tmp_path):
        truth = np.zeros((3, 4), dtype=complex)
        truth[1] = [1, 2, 3, 4]
        rows = _read_rows(write_profiles_csv(tmp_path / "p.csv", truth, truth * 0.5j, [1], 2, 2))
        assert rows[0] == ["pixel", "alpha", "beta", "truth_abs", "estimate_abs"]
        assert rows[1:] == [
            ["1", "1", "1", "1", "0.5"],
            ["1", "1", "2", "2", "1"],
            ["1", "2", "1", "3", "1.5"],
            ["1", "2", "2", "4", "2"],
        ]


class TestManifest:
    """manifest.json and artifact inventory."""

    def test_write_then_read(self, tmp_path):
        manifest = _make_manifest(layout={"n_range": 3}, warnings=["careful"])
        write_manifest(tmp_path, manifest)
        back = read_manifest(tmp_path)
        assert back.name == "unit"
        assert back.layout == {"n_range": 3}
        assert back.warnings == ["careful"]
        assert back.status == "ok"

    def test_invalid_manifest(self, tmp_path):
        (tmp_path / "manifest.json").write_text('{"name": 3}', encoding="utf-8")
        with pytest.raises(ArtifactError):
            read_manifest(tmp_path)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(ArtifactError) as info:
            read_manifest(tmp_path)
        assert info.value.code == ErrorCodes.ART_MISSING

    def test_artifact_entry(self, tmp_path):
        path = write_matrix(tmp_path / "sub" / "truth.sarc", np.eye(2), "truth")
        entry = artifact_entry(tmp_path, path, "truth")
        assert entry.path == "sub/truth.sarc"
        assert entry.sha256 == hashlib.sha256(path.read_bytes()).hexdigest()
        assert entry.size_bytes == path.stat().st_size
        manifest = _make_manifest(artifacts=[entry])
        assert manifest.artifact("truth") == entry
        assert manifest.artifact("model") is None
