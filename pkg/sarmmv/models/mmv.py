"""
MMV Models
==========

Model matrices, the MMV problem, reflectivity estimates and solver output.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from sarmmv.models.scene import ImageGrid
from sarmmv.models.segmentation import Segmentation


class MatrixKind(str, Enum):
    """Which reflectivity-to-data map a matrix represents."""
    EXACT = "exact"
    SUBSET = "subset"
    REFERENCE = "reference"
    SUBSET_DOPPLER = "subset_doppler"
    REFERENCE_DOPPLER = "reference_doppler"


# =============================================================================
# Model Matrix
# =============================================================================

class ModelMatrix:
    """
    Reflectivity-to-data matrix.

    Subset and reference kinds are stored as separable factors: the entry
    for row l*n_s + j and column q is
    ``amplitude * freq_factor[l, q] * slow_factor[j, q]``. The dense
    matrix is materialised on first access; ``as_linear_operator`` applies
    the factors without materialising.
    """

    def __init__(
        self,
        kind: MatrixKind,
        values: Optional[np.ndarray] = None,
        freq_factor: Optional[np.ndarray] = None,
        slow_factor: Optional[np.ndarray] = None,
        amplitude: float = 1.0,
    ):
        if values is None and (freq_factor is None or slow_factor is None):
            raise ValueError("need dense values or both separable factors")
        self.kind = MatrixKind(kind)
        self.freq_factor = freq_factor
        self.slow_factor = slow_factor
        self.amplitude = amplitude
        self._values = values

    @property
    def is_separable(self) -> bool:
        return self.freq_factor is not None

    @property
    def shape(self) -> tuple[int, int]:
        if self._values is not None:
            return self._values.shape
        n_omega, n_cols = self.freq_factor.shape
        return n_omega * self.slow_factor.shape[0], n_cols

    @property
    def n_blocks(self) -> int:
        """Frequency blocks of n_s rows (1 for dense exact matrices)."""
        return self.freq_factor.shape[0] if self.is_separable else 1

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            rows = self.freq_factor[:, None, :] * self.slow_factor[None, :, :]
            self._values = self.amplitude * rows.reshape(-1, rows.shape[-1])
        return self._values

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.values @ x

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        return self.values.conj().T @ y

    def as_linear_operator(self, matrix_free: bool = True) -> LinearOperator:
        """scipy operator; separable kinds can skip materialisation."""
        if not (matrix_free and self.is_separable):
            return aslinearoperator(self.values)
        return _SeparableOperator(self.freq_factor, self.slow_factor, self.amplitude)


class _SeparableOperator(LinearOperator):
    """Matrix-free apply/adjoint of a block-separable model matrix."""

    def __init__(self, freq_factor: np.ndarray, slow_factor: np.ndarray, amplitude: float):
        self.freq_factor = freq_factor
        self.slow_factor = slow_factor
        self.amplitude = amplitude
        n_rows = freq_factor.shape[0] * slow_factor.shape[0]
        super().__init__(dtype=np.complex128, shape=(n_rows, freq_factor.shape[1]))

    def _matmat(self, X):
        X = np.asarray(X).reshape(self.shape[1], -1)
        out = np.einsum("lq,jq,qk->ljk", self.freq_factor, self.slow_factor, X, optimize=True)
        return self.amplitude * out.reshape(self.shape[0], -1)

    def _matvec(self, x):
        return self._matmat(np.asarray(x).reshape(-1, 1)).ravel()

    def _rmatmat(self, Y):
        Y = np.asarray(Y).reshape(self.freq_factor.shape[0], self.slow_factor.shape[0], -1)
        out = np.einsum(
            "lq,jq,ljk->qk", self.freq_factor.conj(), self.slow_factor.conj(), Y, optimize=True
        )
        return np.conj(self.amplitude) * out

    def _rmatvec(self, y):
        return self._rmatmat(np.asarray(y).reshape(-1, 1)).ravel()


# =============================================================================
# Problem and Results
# =============================================================================

@dataclass(eq=False)
class MMVProblem:
    """A X = D with the reference matrix shared by every column."""

    matrix: ModelMatrix
    data: np.ndarray
    normalization: np.ndarray
    grid: ImageGrid
    segmentation: Segmentation
    doppler: bool = False
    noise_level: float = 0.0

    @property
    def n_columns(self) -> int:
        return self.data.shape[1]


@dataclass(eq=False)
class ReflectivityField:
    """Q x (N_alpha N_beta) reflectivity estimate."""

    values: np.ndarray
    grid: ImageGrid
    segmentation: Segmentation
    support: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))


@dataclass(eq=False)
class SolveResult:
    """GeLMA-MMV output."""

    X: np.ndarray
    iterations: int
    residual_history: list[float]
    j21_history: list[float]
    converged: bool
    step: float = 0.0
    regularization: float = 0.0
    spectral_norm: float = 0.0
    stop_reason: str = ""
    feasible_iteration: Optional[int] = None
