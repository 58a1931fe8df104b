"""
Data Models
===========

Down-ramped frequency-domain data over the full aperture and band.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np


class DataModelKind(str, Enum):
    """Physics used to generate a data cube."""
    START_STOP = "start_stop"
    DOPPLER = "doppler"


@dataclass(frozen=True, eq=False)
class DataCube:
    """
    Samples d(s_j, omega_l).

    ``values`` is N_s x N_omega; rows follow ``slow_times`` and columns
    follow ``frequencies``.
    """

    values: np.ndarray
    slow_times: np.ndarray
    frequencies: np.ndarray
    model_kind: Optional[DataModelKind] = None
    noise_level: float = 0.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def with_values(self, values: np.ndarray, noise_level: float) -> "DataCube":
        return replace(self, values=values, noise_level=noise_level)
