"""
Geometry Service
================

Platform positions, travel times, local sub-aperture frames and Doppler
factors.

Conventions:
    - The image plane is z = 0 and the reference point y_o lies in it.
    - Circular paths start at angle ``start_angle`` from +x and turn
      counter-clockwise, theta(s) = start_angle + V s / R.
    - The frame normal n satisfies t' = -(V/R) n, so on a circle it is
      the horizontal unit vector pointing away from the circle axis.

All functions are pure; arrays broadcast over slow times.
"""

from __future__ import annotations

import logging
import math
from typing import Optional, Sequence, Union

import numpy as np

from sarmmv.core.errors import ErrorCodes, GeometryError, ValidationError
from sarmmv.models.geometry import SubapertureFrame, Trajectory, TrajectoryKind
from sarmmv.utils.validators import validate_finite, validate_positive, validate_vector3

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

_Z_AXIS = np.array([0.0, 0.0, 1.0])


# =============================================================================
# Construction
# =============================================================================

def circular_trajectory(
    height: float,
    radius: float,
    speed: float,
    slow_time_step: float,
    n_slow: int,
    wave_speed: float = 3.0e8,
    start_angle: float = 0.0,
) -> Trajectory:
    """Circular path at constant height flown at arc speed ``speed``."""
    validate_positive(radius, "radius")
    validate_positive(speed, "speed", allow_zero=True)
    validate_positive(slow_time_step, "slow_time_step")
    validate_positive(wave_speed, "wave_speed")
    validate_finite(height, "height")
    if n_slow < 1:
        raise ValidationError(message="n_slow must be at least 1", field="n_slow")
    return Trajectory(
        kind=TrajectoryKind.CIRCULAR,
        speed=float(speed),
        slow_time_step=float(slow_time_step),
        n_slow=int(n_slow),
        wave_speed=float(wave_speed),
        height=float(height),
        radius=float(radius),
        start_angle=float(start_angle),
    )


def custom_trajectory(
    points: ArrayLike,
    slow_time_step: float,
    wave_speed: float = 3.0e8,
) -> Trajectory:
    """
    Path through stored positions, one per slow-time sample.

    The speed is the mean segment length over the sample step; callers
    are expected to supply uniformly spaced points.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 2:
        raise ValidationError(
            message="points must be an (N >= 2) x 3 array",
            field="points",
            code=ErrorCodes.GEO_INVALID_TRAJECTORY,
        )
    validate_finite(pts, "points")
    validate_positive(slow_time_step, "slow_time_step")
    segment_lengths = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    speed = float(segment_lengths.mean() / slow_time_step)
    return Trajectory(
        kind=TrajectoryKind.CUSTOM,
        speed=speed,
        slow_time_step=float(slow_time_step),
        n_slow=len(pts),
        wave_speed=float(wave_speed),
        height=float(pts[:, 2].mean()),
        points=pts,
    )


# =============================================================================
# Position and Derivatives
# =============================================================================

def _angle(traj: Trajectory, s: np.ndarray) -> np.ndarray:
    return traj.start_angle + traj.speed * s / traj.radius


def _segment(traj: Trajectory, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Segment index and fractional position, extrapolating the end segments."""
    u = s / traj.slow_time_step
    idx = np.clip(np.floor(u).astype(int), 0, traj.n_slow - 2)
    return idx, u - idx


def _check_slow_time(traj: Trajectory, s: np.ndarray) -> None:
    validate_finite(s, "s")
    tol = 1e-9 * max(traj.slow_time_step, 1.0)
    if np.any(s < -tol) or np.any(s > traj.duration + tol):
        logger.debug(
            "Slow time outside sampled interval [0, %.6g] s, extrapolating",
            traj.duration,
        )


def platform_position(traj: Trajectory, s: ArrayLike) -> np.ndarray:
    """
    Platform location r(s).

    Returns an array of shape ``np.shape(s) + (3,)``.

    Raises:
        ValidationError: If s is not finite
    """
    s = np.asarray(s, dtype=float)
    _check_slow_time(traj, s)
    if traj.kind == TrajectoryKind.CIRCULAR:
        theta = _angle(traj, s)
        return np.stack(
            [
                traj.radius * np.cos(theta),
                traj.radius * np.sin(theta),
                np.full_like(theta, traj.height),
            ],
            axis=-1,
        )
    idx, frac = _segment(traj, s)
    p0 = traj.points[idx]
    p1 = traj.points[idx + 1]
    return p0 + frac[..., None] * (p1 - p0)


def platform_velocity(traj: Trajectory, s: ArrayLike) -> np.ndarray:
    """Platform velocity r'(s); two-point differences for custom paths."""
    s = np.asarray(s, dtype=float)
    validate_finite(s, "s")
    if traj.kind == TrajectoryKind.CIRCULAR:
        theta = _angle(traj, s)
        return traj.speed * np.stack(
            [-np.sin(theta), np.cos(theta), np.zeros_like(theta)], axis=-1
        )
    idx, _ = _segment(traj, s)
    return (traj.points[idx + 1] - traj.points[idx]) / traj.slow_time_step


def unit_tangent(traj: Trajectory, s: float) -> np.ndarray:
    """Direction of travel, defined even for a stationary circular platform."""
    if traj.kind == TrajectoryKind.CIRCULAR:
        theta = float(_angle(traj, np.asarray(s, dtype=float)))
        return np.array([-math.sin(theta), math.cos(theta), 0.0])
    velocity = platform_velocity(traj, s)
    norm = np.linalg.norm(velocity)
    if norm == 0.0:
        raise GeometryError(
            message="Stationary custom trajectory has no tangent",
            code=ErrorCodes.GEO_INVALID_TRAJECTORY,
        )
    return velocity / norm


def _normal_and_radius(traj: Trajectory, s: float, tangent: np.ndarray) -> tuple[np.ndarray, float]:
    if traj.kind == TrajectoryKind.CIRCULAR:
        theta = float(_angle(traj, np.asarray(s, dtype=float)))
        return np.array([math.cos(theta), math.sin(theta), 0.0]), traj.radius

    # Turn rate of the tangent between neighbouring segments
    h = traj.slow_time_step
    before = unit_tangent(traj, max(s - h, 0.0))
    after = unit_tangent(traj, min(s + h, traj.duration))
    span = min(s + h, traj.duration) - max(s - h, 0.0)
    turn = (after - before) / span if span > 0 else np.zeros(3)
    rate = np.linalg.norm(turn)
    if rate * traj.speed < 1e-12 * max(traj.speed, 1.0) or traj.speed == 0.0:
        normal = np.cross(tangent, _Z_AXIS)
        norm = np.linalg.norm(normal)
        normal = normal / norm if norm > 0 else np.array([1.0, 0.0, 0.0])
        return normal, float("inf")
    return -turn / rate, traj.speed / rate


# =============================================================================
# Ranges, Travel Times and Doppler Factors
# =============================================================================

def range_vector(traj: Trajectory, s: ArrayLike, y: ArrayLike) -> np.ndarray:
    """
    Unit vector m(s, y) from y toward the platform.

    Raises:
        GeometryError: If y coincides with r(s)
    """
    diff = platform_position(traj, s) - np.asarray(y, dtype=float)
    dist = np.linalg.norm(diff, axis=-1, keepdims=True)
    if np.any(dist == 0.0):
        raise GeometryError(message="Point coincides with the platform position")
    return diff / dist


def distances(traj: Trajectory, s: ArrayLike, points: np.ndarray) -> np.ndarray:
    """|r(s_j) - y_q| as a (len(s), Q) array."""
    positions = platform_position(traj, np.atleast_1d(np.asarray(s, dtype=float)))
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return np.linalg.norm(positions[:, None, :] - pts[None, :, :], axis=-1)


def travel_time(traj: Trajectory, s: ArrayLike, y: ArrayLike) -> np.ndarray:
    """
    One-way travel time tau(s, y) = |r(s) - y| / c.

    Raises:
        ValidationError: If s or y is not finite
    """
    y = np.asarray(y, dtype=float)
    validate_finite(y, "y")
    diff = platform_position(traj, s) - y
    return np.linalg.norm(diff, axis=-1) / traj.wave_speed


def doppler_factor(traj: Trajectory, s: ArrayLike, y: ArrayLike) -> np.ndarray:
    """
    Doppler factor gamma(s, y) = r'(s) . m(s, y) / c.

    It equals d tau / ds and is bounded by V / c.

    Raises:
        GeometryError: If y coincides with r(s)
    """
    m = range_vector(traj, s, y)
    velocity = platform_velocity(traj, s)
    return np.sum(velocity * m, axis=-1) / traj.wave_speed


# =============================================================================
# Frames
# =============================================================================

def subaperture_frame(
    traj: Trajectory,
    center_time: float,
    reference_point: Optional[ArrayLike] = None,
) -> SubapertureFrame:
    """
    Local frame at slow time ``center_time`` about the reference point.

    Raises:
        GeometryError: If the reference point coincides with the platform
    """
    y_o = validate_vector3(
        reference_point if reference_point is not None else np.zeros(3),
        "reference_point",
    )
    position = platform_position(traj, center_time)
    diff = position - y_o
    distance = float(np.linalg.norm(diff))
    if distance == 0.0:
        raise GeometryError(message="Reference point coincides with the platform")

    m = diff / distance
    tangent = unit_tangent(traj, center_time)
    normal, curvature_radius = _normal_and_radius(traj, center_time, tangent)
    return SubapertureFrame(
        center_time=float(center_time),
        center_position=position,
        range_vector=m,
        tangent=tangent,
        normal=normal,
        range=distance,
        projector=np.eye(3) - np.outer(m, m),
        velocity=platform_velocity(traj, center_time),
        curvature_radius=float(curvature_radius),
    )
