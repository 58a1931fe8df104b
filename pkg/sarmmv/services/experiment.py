"""
Experiment Service
==================

Config loading and the end-to-end pipeline behind ``sarmmv run``:

    simulate -> noise -> segment -> MMV -> GeLMA -> demodulate
             -> migrate -> score -> artifacts + manifest

Configs are TOML files validated against ``ExperimentConfig``. A config
may name a ``preset`` from ``sarmmv/presets``; the preset's keys are
merged underneath the file's own. Batch files list one config path or
preset name per line and run concurrently up to ``--jobs``.
"""

import logging
import threading
import time
import tomllib
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Iterator, Optional, Union

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from sarmmv import __version__
from sarmmv.config import settings
from sarmmv.core.errors import (
    ConfigError,
    ErrorCodes,
    RegimeError,
    SarMmvError,
    config_error_from_pydantic,
)
from sarmmv.models.data import DataModelKind
from sarmmv.models.geometry import Trajectory
from sarmmv.models.mmv import ReflectivityField
from sarmmv.models.scene import GroundTruth, ImageGrid, Scene
from sarmmv.models.segmentation import Segmentation
from sarmmv.models.waveform import Pulse
from sarmmv.schemas.common import ErrorDetail
from sarmmv.schemas.experiment import ExperimentConfig
from sarmmv.schemas.reports import CoherenceReport, RegimeReport, RunManifest
from sarmmv.services import artifacts
from sarmmv.services.analysis import column_coherence, row_coherence, score
from sarmmv.services.baselines import migrate
from sarmmv.services.forward_model import (
    assemble_subset,
    assemble_subset_doppler,
    build_mmv,
    demodulate,
)
from sarmmv.services.geometry import circular_trajectory, custom_trajectory
from sarmmv.services.scene import grid_from_config, ground_truth_matrix, scene_from_config
from sarmmv.services.segmentation import regime_report, samples_per_subaperture, segment
from sarmmv.services.simulator import add_noise, simulate
from sarmmv.services.solver import gelma_mmv, row_support
from sarmmv.services.waveform import make_pulse
from sarmmv.utils.helpers import format_datetime, utc_now

logger = logging.getLogger(__name__)

PRESET_PACKAGE = "sarmmv.presets"

ConfigSource = Union[str, Path]


# =============================================================================
# Config Loading
# =============================================================================

def available_presets() -> list[str]:
    """Names of the bundled presets."""
    root = resources.files(PRESET_PACKAGE)
    return sorted(p.name[: -len(".toml")] for p in root.iterdir() if p.name.endswith(".toml"))


def load_preset(name: str) -> dict[str, Any]:
    """
    Raw TOML table of a bundled preset.

    Raises:
        ConfigError: If no preset has that name
    """
    resource = resources.files(PRESET_PACKAGE) / f"{name}.toml"
    if not resource.is_file():
        raise ConfigError(
            message=f"Unknown preset '{name}' (available: {', '.join(available_presets())})",
            field="preset",
            code=ErrorCodes.CFG_UNKNOWN_PRESET,
        )
    return _parse_toml(resource.read_text(encoding="utf-8"), f"preset {name}")


def _parse_toml(text: str, source: str) -> dict[str, Any]:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(
            message=f"Cannot parse {source}: {exc}",
            code=ErrorCodes.CFG_PARSE_FAILED,
            source=source,
        ) from exc


def _deep_merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    """Recursively overlay ``override`` on ``base``; tables merge, values replace."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def parse_config(raw: dict[str, Any], source: Optional[str] = None) -> ExperimentConfig:
    """
    Validate a raw config table, merging its preset underneath.

    Raises:
        ConfigError: On unknown keys, invalid values or an unknown preset
    """
    preset = raw.get("preset")
    if preset:
        base = load_preset(preset)
        base.pop("preset", None)
        raw = _deep_merge(base, raw)
    try:
        return ExperimentConfig.model_validate(raw)
    except PydanticValidationError as exc:
        raise config_error_from_pydantic(exc, source=source) from exc


def load_config(source: ConfigSource) -> ExperimentConfig:
    """
    Load a config from a TOML file, or a preset by name.

    Raises:
        ConfigError: If the file cannot be read, parsed or validated
    """
    path = Path(source)
    if path.is_file():
        raw = _parse_toml(path.read_text(encoding="utf-8"), str(path))
        raw.setdefault("name", path.stem)
        config = parse_config(raw, source=str(path))
    elif path.suffix == "" and str(source) in available_presets():
        raw = load_preset(str(source))
        raw.setdefault("name", str(source))
        config = parse_config(raw, source=f"preset {source}")
    else:
        raise ConfigError(
            message=f"No config file or preset named '{source}'",
            code=ErrorCodes.CFG_FILE_NOT_FOUND,
        )
    logger.debug("Loaded config '%s' from %s", config.name, source)
    return config


def load_batch(path: ConfigSource) -> list[ExperimentConfig]:
    """
    Configs listed in a batch file, one path or preset name per line.

    Relative paths resolve against the batch file's directory; ``#``
    starts a comment.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError as exc:
        raise ConfigError(message=f"Batch file {path} not found", code=ErrorCodes.CFG_FILE_NOT_FOUND) from exc

    configs = []
    for line in lines:
        entry = line.split("#", 1)[0].strip()
        if not entry:
            continue
        candidate = path.parent / entry
        configs.append(load_config(candidate if candidate.is_file() else entry))
    return configs


def with_seed(config: ExperimentConfig, seed: Optional[int]) -> ExperimentConfig:
    """Copy of ``config`` with the noise and solver seeds replaced."""
    if seed is None:
        return config
    return config.model_copy(
        update={
            "noise": config.noise.model_copy(update={"seed": seed}),
            "solver": config.solver.model_copy(update={"seed": seed}),
        }
    )


# =============================================================================
# Setup
# =============================================================================

@dataclass(eq=False)
class ExperimentSetup:
    """Geometry, sampling and ground truth of one experiment."""

    config: ExperimentConfig
    trajectory: Trajectory
    pulse: Pulse
    segmentation: Segmentation
    grid: ImageGrid
    scene: Scene
    truth: GroundTruth


def build_trajectory(config: ExperimentConfig) -> Trajectory:
    """Trajectory with enough slow-time samples for the segmentation."""
    block = config.trajectory
    c = config.pulse.wave_speed_mps
    if block.kind == "custom":
        return custom_trajectory(block.points_m, block.slow_time_step_s, wave_speed=c)

    n_slow = block.n_slow
    if n_slow is None:
        n_s = samples_per_subaperture(config.segmentation.subaperture_m, block.speed_mps, block.slow_time_step_s)
        n_slow = config.segmentation.n_apertures * n_s
    return circular_trajectory(
        height=block.height_m,
        radius=block.radius_m,
        speed=block.speed_mps,
        slow_time_step=block.slow_time_step_s,
        n_slow=n_slow,
        wave_speed=c,
        start_angle=block.start_angle_rad,
    )


def build_setup(config: ExperimentConfig) -> ExperimentSetup:
    """
    Assemble every physical object an experiment needs.

    The grid's range axis is the horizontal range direction of the first
    sub-aperture.
    """
    pulse = make_pulse(
        config.pulse.carrier_hz,
        config.pulse.bandwidth_hz,
        spectrum_level=config.pulse.spectrum_level,
        wave_speed=config.pulse.wave_speed_mps,
    )
    traj = build_trajectory(config)
    center = np.asarray(config.grid.center_m, dtype=float)
    block = config.segmentation
    seg = segment(
        traj,
        pulse,
        block.n_apertures,
        block.n_subbands,
        block.subaperture_m,
        config.subband_hz,
        block.n_freq,
        reference_point=center,
    )
    grid = grid_from_config(config.grid, range_axis=seg.frames[0].horizontal_range_axis)
    scene = scene_from_config(config.scene, grid, block.n_apertures, block.n_subbands)
    truth = ground_truth_matrix(scene, grid, seg)
    return ExperimentSetup(
        config=config,
        trajectory=traj,
        pulse=pulse,
        segmentation=seg,
        grid=grid,
        scene=scene,
        truth=truth,
    )


def regime_for_setup(setup: ExperimentSetup) -> RegimeReport:
    """Regime report with the config's threshold overrides."""
    block = setup.config.regime
    return regime_report(
        setup.trajectory,
        setup.grid,
        setup.segmentation,
        setup.pulse,
        small_threshold=block.small_threshold,
        warn_threshold=block.warn_threshold,
    )


def regime_for_config(config: ExperimentConfig) -> RegimeReport:
    return regime_for_setup(build_setup(config))


def check_regime(report: RegimeReport, force: bool = False, enforce: bool = True) -> None:
    """
    Gate the solver on the regime report.

    Raises:
        RegimeError: If a diagnostic failed, unless forced or not enforced
    """
    if not report.hard_fail:
        return
    if force or not enforce:
        logger.warning("Regime check failed (%s); continuing because it is forced", ", ".join(report.failed))
        return
    raise RegimeError(
        message=f"Regime check failed: {', '.join(report.failed)}",
        failed=report.failed,
    )


def coherence_for_setup(
    setup: ExperimentSetup,
    alpha: int = 1,
    beta: int = 1,
    n_random: Optional[int] = None,
) -> list[CoherenceReport]:
    """Column and row coherence of the subset matrix of cell (alpha, beta)."""
    config = setup.config
    n_random = config.outputs.coherence_random_pairs if n_random is None else n_random
    assemble = assemble_subset_doppler if config.model.doppler else assemble_subset
    A = assemble(setup.trajectory, setup.grid, setup.segmentation, alpha, beta)
    seed = config.solver.seed
    return [
        column_coherence(A, setup.grid, setup.segmentation, alpha, beta, n_random=n_random, seed=seed),
        row_coherence(A, setup.grid, setup.segmentation, alpha, beta, n_random=n_random, seed=seed),
    ]


def coherence_for_config(config: ExperimentConfig, alpha: int = 1, beta: int = 1) -> list[CoherenceReport]:
    return coherence_for_setup(build_setup(config), alpha, beta)


# =============================================================================
# Run
# =============================================================================

class _WarningCollector(logging.Handler):
    """Collects warnings logged by the current thread."""

    def __init__(self):
        super().__init__(level=logging.WARNING)
        self.thread = threading.get_ident()
        self.messages: list[str] = []

    def emit(self, record: logging.LogRecord) -> None:
        if record.thread == self.thread:
            self.messages.append(f"{record.name}: {record.getMessage()}")


@contextmanager
def _collect_warnings() -> Iterator[_WarningCollector]:
    handler = _WarningCollector()
    package_logger = logging.getLogger("sarmmv")
    package_logger.addHandler(handler)
    try:
        yield handler
    finally:
        package_logger.removeHandler(handler)


@contextmanager
def _stage(timings: dict[str, float], name: str) -> Iterator[None]:
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[name] = time.perf_counter() - start
        logger.debug("Stage %s took %.3f s", name, timings[name])


def run_directory(config: ExperimentConfig, output_dir: Optional[ConfigSource] = None) -> Path:
    """Directory a run writes into."""
    if output_dir is not None:
        return Path(output_dir)
    root = Path(config.outputs.directory or settings.OUTPUT_ROOT)
    return root / config.name


def _layout(setup: ExperimentSetup) -> dict[str, Any]:
    grid = setup.grid
    return {
        "n_range": grid.n_range,
        "n_cross": grid.n_cross,
        "step_range_m": grid.step_range,
        "step_cross_m": grid.step_cross,
        "n_apertures": setup.segmentation.n_apertures,
        "n_subbands": setup.segmentation.n_subbands,
    }


def run_experiment(
    config: ExperimentConfig,
    output_dir: Optional[ConfigSource] = None,
    force: bool = False,
    seed: Optional[int] = None,
    dump_model: bool = False,
    plots: Optional[bool] = None,
) -> RunManifest:
    """
    Run the full pipeline and write the run directory.

    The manifest is written even when a stage fails, with status
    ``failed`` and the error detail; the exception is then re-raised.

    Raises:
        RegimeError: If the regime check fails and ``force`` is not set
        SolverDivergenceError: If GeLMA diverges
    """
    config = with_seed(config, seed)
    run_dir = run_directory(config, output_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    dump_model = dump_model or config.outputs.dump_model
    plots = config.outputs.plots if plots is None else plots

    manifest = RunManifest(
        name=config.name,
        tool_version=__version__,
        created_at=format_datetime(utc_now()),
        seed=config.noise.seed,
        config=config.model_dump(mode="json"),
    )
    logger.info("Running experiment '%s' into %s", config.name, run_dir)

    with _collect_warnings() as collector:
        try:
            _run_pipeline(config, run_dir, manifest, force, dump_model, plots)
        except SarMmvError as exc:
            _fail(manifest, exc.code, exc.message, exc.field, exc.extra)
            raise
        except Exception as exc:
            _fail(manifest, ErrorCodes.INTERNAL_ERROR, str(exc), None, {"type": type(exc).__name__})
            raise
        finally:
            manifest.warnings = list(collector.messages)
            artifacts.write_manifest(run_dir, manifest)

    logger.info("Experiment '%s' finished in %.2f s", config.name, sum(manifest.timings_s.values()))
    return manifest


def _fail(manifest: RunManifest, code: str, message: str, field: Optional[str], extra: dict[str, Any]) -> None:
    manifest.status = "failed"
    manifest.error = ErrorDetail(code=code, message=message, field=field, extra=extra)
    logger.error("Experiment '%s' failed: [%s] %s", manifest.name, code, message)


def _run_pipeline(
    config: ExperimentConfig,
    run_dir: Path,
    manifest: RunManifest,
    force: bool,
    dump_model: bool,
    plots: bool,
) -> None:
    timings = manifest.timings_s

    with _stage(timings, "setup"):
        setup = build_setup(config)
    manifest.layout = _layout(setup)
    traj, grid, seg, pulse = setup.trajectory, setup.grid, setup.segmentation, setup.pulse

    with _stage(timings, "regime"):
        report = regime_for_setup(setup)
        manifest.regime = report
    check_regime(report, force=force, enforce=config.regime.enforce)

    with _stage(timings, "simulate"):
        data = simulate(
            setup.scene,
            grid,
            traj,
            pulse,
            seg,
            kind=DataModelKind(config.model.simulator_kind),
            downramp=config.model.downramp,
            continuous=config.model.continuous_profiles,
            workers=settings.SIM_WORKERS,
        )
        data = add_noise(data, config.noise.level, seed=config.noise.seed, mode=config.noise.mode)

    with _stage(timings, "solve"):
        problem = build_mmv(data, traj, grid, seg, doppler=config.model.doppler)
        result = gelma_mmv(problem, config.solver, matrix_free=config.model.matrix_free)
        field = demodulate(result.X, seg, grid, doppler=config.model.doppler)
        estimate = ReflectivityField(
            values=field.values,
            grid=grid,
            segmentation=seg,
            support=row_support(field.values, config.solver.support_threshold),
        )
    manifest.solver = {
        "iterations": result.iterations,
        "converged": result.converged,
        "stop_reason": result.stop_reason,
        "feasible_iteration": result.feasible_iteration,
        "step": result.step,
        "regularization": result.regularization,
        "spectral_norm": result.spectral_norm,
        "final_residual": result.residual_history[-1],
        "matrix_kind": problem.matrix.kind.value,
    }

    with _stage(timings, "migrate"):
        migration = migrate(data, traj, grid, pulse, workers=settings.SIM_WORKERS)

    with _stage(timings, "score"):
        manifest.score = score(estimate, setup.truth, config.solver.support_threshold, migration)

    coherence: list[CoherenceReport] = []
    if config.outputs.coherence:
        with _stage(timings, "coherence"):
            coherence = coherence_for_setup(setup)
        manifest.coherence = [report.summary() for report in coherence]

    with _stage(timings, "write"):
        written: list[tuple[Path, str]] = []
        if config.outputs.write_data:
            written.append((artifacts.write_data_cube(run_dir / "data.sarc", data), "data"))
        written += [
            (artifacts.write_matrix(run_dir / "truth.sarc", setup.truth.values, "truth"), "truth"),
            (artifacts.write_matrix(run_dir / "estimate.sarc", estimate.values, "estimate"), "estimate"),
            (artifacts.write_matrix(run_dir / "migration.sarc", migration, "migration"), "migration"),
            (artifacts.write_history_csv(run_dir / "history.csv", result), "history"),
            (artifacts.write_scores_csv(run_dir / "scores.csv", manifest.score), "scores"),
            (
                artifacts.write_profiles_csv(
                    run_dir / "profiles.csv",
                    setup.truth.values,
                    estimate.values,
                    setup.truth.support,
                    seg.n_apertures,
                    seg.n_subbands,
                ),
                "profiles",
            ),
            (artifacts.write_regime_text(run_dir / "regime.txt", report), "regime"),
        ]
        for report_ in coherence:
            path = artifacts.write_coherence_csv(run_dir / f"coherence_{report_.kind}.csv", report_)
            written.append((path, f"coherence_{report_.kind}"))
        if dump_model:
            written.append((artifacts.write_matrix(run_dir / "model.sarc", problem.matrix.values, problem.matrix.kind.value), "model"))
        manifest.artifacts = [artifacts.artifact_entry(run_dir, path, kind) for path, kind in written]

    if plots:
        # matplotlib is imported only when plotting
        from sarmmv.services.plotting import emit_plots

        with _stage(timings, "plot"):
            paths = emit_plots(run_dir, manifest=manifest)
        manifest.artifacts += [artifacts.artifact_entry(run_dir, path, f"plot:{name}") for name, path in paths.items()]


# =============================================================================
# Batch
# =============================================================================

@dataclass(eq=False)
class BatchOutcome:
    """Result of one experiment in a batch."""

    name: str
    manifest: Optional[RunManifest] = None
    error: Optional[Exception] = None

    @property
    def exit_code(self) -> int:
        if self.error is None:
            return 0
        return getattr(self.error, "exit_code", 1)


def run_batch(
    configs: list[ExperimentConfig],
    output_root: Optional[ConfigSource] = None,
    jobs: Optional[int] = None,
    force: bool = False,
    seed: Optional[int] = None,
    dump_model: bool = False,
) -> list[BatchOutcome]:
    """
    Run independent experiments concurrently, each into its own directory.

    Duplicate names get a numeric suffix. Failures are returned, not raised.
    """
    jobs = jobs or settings.JOBS
    seen: dict[str, int] = {}
    planned: list[tuple[str, ExperimentConfig, Optional[Path]]] = []
    for config in configs:
        count = seen.get(config.name, 0)
        seen[config.name] = count + 1
        name = config.name if count == 0 else f"{config.name}-{count + 1}"
        if name != config.name:
            config = config.model_copy(update={"name": name})
        target = Path(output_root) / name if output_root is not None else None
        planned.append((name, config, target))

    def run_one(item: tuple[str, ExperimentConfig, Optional[Path]]) -> BatchOutcome:
        name, config, target = item
        try:
            return BatchOutcome(name=name, manifest=run_experiment(config, target, force, seed, dump_model))
        except Exception as exc:
            return BatchOutcome(name=name, error=exc)

    logger.info("Running %d experiments with %d jobs", len(planned), jobs)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        outcomes = list(pool.map(run_one, planned))

    failed = [o.name for o in outcomes if o.error is not None]
    if failed:
        logger.warning("%d of %d experiments failed: %s", len(failed), len(outcomes), ", ".join(failed))
    return outcomes
