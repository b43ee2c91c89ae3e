"""Domain types shared by the pipeline, the model, and the metrics.

All coordinates and skeletons are held in meters internally; conversion to
mm or cm happens only at the reporting edge.  Every type is immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import NonFiniteValue

POINT_FIELDS = ("x", "y", "z", "v", "I")


@dataclass(frozen=True)
class RadarPoint:
    """One radar return: 3D position, Doppler velocity, signal intensity."""

    x: float
    y: float
    z: float
    v: float
    I: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.v, self.I], dtype=np.float64)


@dataclass(frozen=True)
class RadarFrame:
    """One radar sweep.  Point order is preserved exactly as ingested."""

    frame_id: int
    sequence_id: int
    points: tuple[RadarPoint, ...]

    def __post_init__(self):
        if self.frame_id < 0 or self.sequence_id < 0:
            raise ValueError("frame_id and sequence_id must be non-negative")
        object.__setattr__(self, "points", tuple(self.points))

    def __len__(self) -> int:
        return len(self.points)

    def as_matrix(self) -> np.ndarray:
        """n x 5 matrix of (x, y, z, v, I) rows; (0, 5) when empty."""
        if not self.points:
            return np.zeros((0, 5), dtype=np.float64)
        return np.stack([p.as_array() for p in self.points])


@dataclass(frozen=True)
class Skeleton:
    """M keypoints in 3D (meters) with the mid-hip keypoint identified."""

    keypoints: np.ndarray
    mid_hip_index: int

    def __post_init__(self):
        kp = np.asarray(self.keypoints, dtype=np.float64)
        if kp.ndim != 2 or kp.shape[1] != 3:
            raise ValueError("keypoints must be an M x 3 matrix")
        if not np.all(np.isfinite(kp)):
            raise ValueError("keypoints must be finite")
        if not 0 <= self.mid_hip_index < kp.shape[0]:
            raise ValueError("mid_hip_index out of range")
        kp.setflags(write=False)
        object.__setattr__(self, "keypoints", kp)

    @property
    def num_keypoints(self) -> int:
        return self.keypoints.shape[0]


@dataclass(frozen=True)
class ActivityLabel:
    """Class index for activity recognition."""

    class_index: int
    num_classes: int

    def __post_init__(self):
        if not 0 <= self.class_index < self.num_classes:
            raise ValueError("class_index must lie in [0, num_classes)")


Label = Union[Skeleton, ActivityLabel]


@dataclass(frozen=True)
class PointGraph:
    """Directed KNN graph over one (fused, optionally downsampled) frame.

    node_features is n x 19 when node feature extraction is enabled, n x 5
    otherwise.  edge_features is E x 6 when enabled, E x 0 otherwise.
    frame_features has length 10 * 2 * D_node when enabled (380 for the 19D
    node features), length 0 otherwise.
    """

    sequence_id: int
    frame_id: int
    node_features: np.ndarray
    edges: np.ndarray  # E x 2 of (target_index, source_index)
    edge_features: np.ndarray
    frame_features: np.ndarray
    label: Optional[Label] = None

    def __post_init__(self):
        nf = np.asarray(self.node_features, dtype=np.float64)
        ed = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        ef = np.asarray(self.edge_features, dtype=np.float64)
        ff = np.asarray(self.frame_features, dtype=np.float64).reshape(-1)
        n = nf.shape[0]
        if ed.size and (ed.min() < 0 or ed.max() >= n):
            raise ValueError("edge index out of range")
        if np.any(ed[:, 0] == ed[:, 1]):
            raise ValueError("explicit self-edges are not stored")
        if ef.shape[0] != ed.shape[0]:
            raise ValueError("edge_features row count must match edge count")
        for a in (nf, ed, ef, ff):
            a.setflags(write=False)
        object.__setattr__(self, "node_features", nf)
        object.__setattr__(self, "edges", ed)
        object.__setattr__(self, "edge_features", ef)
        object.__setattr__(self, "frame_features", ff)

    @property
    def num_nodes(self) -> int:
        return self.node_features.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]


def validate_frame(frame: RadarFrame) -> RadarFrame:
    """Return the frame unchanged if every point is finite.

    Raises NonFiniteValue naming the first offending point index and field.
    Empty frames are valid; downstream stages define their own empty
    behavior.
    """
    for i, p in enumerate(frame.points):
        for name in POINT_FIELDS:
            if not math.isfinite(getattr(p, name)):
                raise NonFiniteValue(i, name)
    return frame


def frame_from_matrix(sequence_id: int, frame_id: int, mat: Sequence) -> RadarFrame:
    """Build a RadarFrame from an n x 5 array of (x, y, z, v, I) rows."""
    arr = np.asarray(mat, dtype=np.float64).reshape(-1, 5)
    pts = tuple(RadarPoint(*row) for row in arr)
    return RadarFrame(frame_id=frame_id, sequence_id=sequence_id, points=pts)
