"""
GeLMA-MMV Solver
================

Row-sparse recovery of X from A X = D by the generalized Lagrangian
multiplier shrinkage iteration

    E = D - A X
    X <- shrink(X + mu A^*(Z + E), mu gamma)
    Z <- Z + gamma E

whose fixed points minimise the (2,1)-norm subject to A X = D and do not
depend on gamma. The iteration runs on a normalised copy of the problem:
A is scaled to unit spectral norm (power iteration) and D so that the
largest row of A^* D has unit norm. Histories are reported in the
original units.

Also here: row shrinkage, the (2,1)-norm, row supports and an exhaustive
support-enumeration oracle for small instances.
"""

import itertools
import logging
import math
from typing import Optional, Union

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator

from sarmmv.config import settings
from sarmmv.core.errors import SolverDivergenceError, ValidationError
from sarmmv.models.mmv import MMVProblem, ModelMatrix, SolveResult
from sarmmv.schemas.experiment import SolverConfig

logger = logging.getLogger(__name__)

Operator = Union[ModelMatrix, LinearOperator, np.ndarray]

# Iterations between progress log lines
LOG_EVERY = 500


# =============================================================================
# Row Utilities
# =============================================================================

def row_norms(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[:, None]
    return np.linalg.norm(X, axis=1)


def j21_norm(X: np.ndarray) -> float:
    """Sum over rows of the row l2 norms."""
    return float(np.sum(row_norms(X)))


def row_soft_threshold(X: np.ndarray, threshold: float) -> np.ndarray:
    """
    Shrink every row toward zero by ``threshold`` in l2 norm.

    Rows whose norm does not exceed the threshold become exactly zero;
    other rows keep their direction. This is the proximal map of
    threshold * J_{2,1}.

    Raises:
        ValidationError: If the threshold is negative
    """
    if threshold < 0:
        raise ValidationError(message="Threshold must be non-negative", field="threshold")
    X = np.asarray(X)
    norms = row_norms(X)
    scale = np.zeros_like(norms)
    active = norms > threshold
    scale[active] = 1.0 - threshold / norms[active]
    return X * (scale[:, None] if X.ndim == 2 else scale)


def row_support(X: np.ndarray, support_threshold: float = 0.0) -> np.ndarray:
    """
    Indices of rows with norm above ``support_threshold`` times the
    largest row norm; a threshold of 0 gives the nonzero rows.
    """
    if not 0 <= support_threshold < 1:
        raise ValidationError(message="support_threshold must be in [0, 1)", field="support_threshold")
    norms = row_norms(X)
    peak = norms.max(initial=0.0)
    if peak == 0.0:
        return np.zeros(0, dtype=int)
    return np.flatnonzero(norms > support_threshold * peak)


# =============================================================================
# Operators
# =============================================================================

def as_operator(matrix: Operator, matrix_free: bool = False) -> LinearOperator:
    if isinstance(matrix, ModelMatrix):
        return matrix.as_linear_operator(matrix_free=matrix_free)
    if isinstance(matrix, LinearOperator):
        return matrix
    return LinearOperator(
        shape=matrix.shape,
        matvec=lambda x: matrix @ x,
        rmatvec=lambda y: matrix.conj().T @ y,
        matmat=lambda X: matrix @ X,
        rmatmat=lambda Y: matrix.conj().T @ Y,
        dtype=np.complex128,
    )


def spectral_norm(operator: LinearOperator, iterations: Optional[int] = None, seed: int = 0) -> float:
    """Largest singular value by power iteration on A^* A."""
    iterations = iterations or settings.POWER_ITERATIONS
    rng = np.random.default_rng(seed)
    n = operator.shape[1]
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    sigma_sq = 0.0
    for _ in range(iterations):
        w = operator.rmatvec(operator.matvec(v))
        sigma_sq = float(np.linalg.norm(w))
        if sigma_sq == 0.0:
            return 0.0
        v = w / sigma_sq
    return math.sqrt(sigma_sq)


# =============================================================================
# GeLMA
# =============================================================================

def gelma(
    matrix: Operator,
    D: np.ndarray,
    config: Optional[SolverConfig] = None,
    noise_level: float = 0.0,
    matrix_free: bool = False,
) -> SolveResult:
    """
    Solve A X = D for a row-sparse X.

    Stops when the relative residual drops to the tolerance, when the
    relative change of X falls below ``tol_change`` or after
    ``max_iters`` iterations. With noisy data (``noise_level`` > 0) the
    residual bound only marks the first feasible iterate, which is not
    yet row-sparse; the iteration continues until the change test or
    the iteration limit ends it.

    Raises:
        SolverDivergenceError: If the residual grows by
            ``divergence_factor`` within ``divergence_window`` iterations
    """
    config = config or SolverConfig()
    D = np.asarray(D, dtype=complex)
    if D.ndim == 1:
        D = D[:, None]
    A = as_operator(matrix, matrix_free=matrix_free)
    if A.shape[0] != D.shape[0]:
        raise ValidationError(
            message=f"Matrix has {A.shape[0]} rows, data {D.shape[0]}",
            field="data",
        )
    n_cols = A.shape[1]

    sigma = spectral_norm(A, config.power_iterations, config.seed)
    back = A.rmatmat(D) / sigma if sigma > 0 else np.zeros((n_cols, D.shape[1]), dtype=complex)
    d_scale = float(row_norms(back).max(initial=0.0))
    if sigma == 0.0 or d_scale == 0.0:
        logger.info("Zero data, returning X = 0")
        return SolveResult(
            X=np.zeros((n_cols, D.shape[1]), dtype=complex),
            iterations=1,
            residual_history=[float(np.linalg.norm(D))],
            j21_history=[0.0],
            converged=True,
            step=config.step,
            regularization=config.gamma,
            spectral_norm=sigma,
            stop_reason="zero_data",
        )

    mu = config.step
    gamma = config.gamma
    tol = config.residual_tolerance(noise_level)
    D_n = D / d_scale
    d_norm = float(np.linalg.norm(D_n))
    to_original = d_scale / sigma

    X = np.zeros((n_cols, D.shape[1]), dtype=complex)
    Z = np.zeros_like(D_n)
    residuals: list[float] = []
    j21s: list[float] = []
    converged = False
    stop_reason = "max_iters"
    feasible_iteration: Optional[int] = None
    iteration = 0

    for iteration in range(1, config.max_iters + 1):
        E = D_n - A.matmat(X) / sigma
        res = float(np.linalg.norm(E))
        residuals.append(res * d_scale)
        j21s.append(j21_norm(X) * to_original)

        if res <= tol * d_norm:
            if noise_level <= 0:
                converged = True
                stop_reason = "residual"
                break
            if feasible_iteration is None:
                feasible_iteration = iteration
                logger.debug("GeLMA feasible at iteration %d", iteration)
                converged = True

        window = config.divergence_window
        if iteration > window and residuals[-1] > config.divergence_factor * residuals[-1 - window]:
            raise SolverDivergenceError(
                message=f"Residual grew {config.divergence_factor:g}x within {window} iterations",
                iteration=iteration,
                residual=residuals[-1],
            )

        X_new = row_soft_threshold(X + mu * A.rmatmat(Z + E) / sigma, mu * gamma)
        Z = Z + gamma * E

        change = np.linalg.norm(X_new - X)
        scale = np.linalg.norm(X_new)
        X = X_new
        if scale > 0 and change <= config.tol_change * scale:
            converged = True
            stop_reason = "change"
            break

        if iteration % LOG_EVERY == 0:
            logger.debug("GeLMA iteration %d: residual %.3e", iteration, residuals[-1])

    logger.info(
        "GeLMA stopped after %d iterations (%s), relative residual %.3e",
        iteration,
        stop_reason,
        residuals[-1] / (d_norm * d_scale),
    )
    return SolveResult(
        X=X * to_original,
        iterations=iteration,
        residual_history=residuals,
        j21_history=j21s,
        converged=converged,
        step=mu,
        regularization=gamma,
        spectral_norm=sigma,
        stop_reason=stop_reason,
        feasible_iteration=feasible_iteration,
    )


def gelma_mmv(problem: MMVProblem, config: Optional[SolverConfig] = None, matrix_free: bool = False) -> SolveResult:
    """GeLMA on an assembled MMV problem."""
    return gelma(
        problem.matrix,
        problem.data,
        config=config,
        noise_level=problem.noise_level,
        matrix_free=matrix_free,
    )


# =============================================================================
# Oracle
# =============================================================================

def exhaustive_support_search(
    matrix: Operator,
    D: np.ndarray,
    max_support: int,
    tol: float = 1e-8,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Smallest row support that explains D, by enumeration.

    Tries every support of size 0, 1, ..., max_support and solves least
    squares on it; returns the first (support, X) whose relative residual
    is below ``tol``, or the best support of the largest size.
    """
    A = matrix.values if isinstance(matrix, ModelMatrix) else np.asarray(matrix)
    D = np.asarray(D, dtype=complex)
    if D.ndim == 1:
        D = D[:, None]
    n_cols = A.shape[1]
    d_norm = np.linalg.norm(D)
    if d_norm == 0:
        return np.zeros(0, dtype=int), np.zeros((n_cols, D.shape[1]), dtype=complex)

    best: tuple[float, tuple[int, ...], np.ndarray] = (math.inf, (), np.zeros((0, D.shape[1])))
    for size in range(1, max_support + 1):
        best = (math.inf, (), best[2])
        for support in itertools.combinations(range(n_cols), size):
            coeffs, *_ = scipy.linalg.lstsq(A[:, support], D)
            residual = np.linalg.norm(A[:, support] @ coeffs - D) / d_norm
            if residual < best[0]:
                best = (residual, support, coeffs)
        if best[0] <= tol:
            break

    X = np.zeros((n_cols, D.shape[1]), dtype=complex)
    X[list(best[1])] = best[2]
    return np.array(best[1], dtype=int), X
