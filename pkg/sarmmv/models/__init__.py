"""
Numeric Models
==============

Immutable containers passed between the pipeline services.
"""

from sarmmv.models.data import DataCube, DataModelKind
from sarmmv.models.geometry import SubapertureFrame, Trajectory, TrajectoryKind
from sarmmv.models.mmv import (
    MatrixKind,
    MMVProblem,
    ModelMatrix,
    ReflectivityField,
    SolveResult,
)
from sarmmv.models.scene import (
    GroundTruth,
    ImageGrid,
    Profile,
    ProfileKind,
    Scatterer,
    Scene,
)
from sarmmv.models.segmentation import Segmentation
from sarmmv.models.waveform import FrequencySampling, Pulse

__all__ = [
    "DataCube",
    "DataModelKind",
    "FrequencySampling",
    "GroundTruth",
    "ImageGrid",
    "MatrixKind",
    "MMVProblem",
    "ModelMatrix",
    "Profile",
    "ProfileKind",
    "Pulse",
    "ReflectivityField",
    "Scatterer",
    "Scene",
    "Segmentation",
    "SolveResult",
    "SubapertureFrame",
    "Trajectory",
    "TrajectoryKind",
]
