import numpy as np
import pytest

from cloudgraph.types import RadarFrame, RadarPoint, frame_from_matrix


def random_frame(rng: np.random.Generator, n: int, sequence_id=0, frame_id=0,
                 scale=1.0) -> RadarFrame:
    """Random frame with continuous coordinates (distinct pairwise distances
    almost surely)."""
    mat = rng.normal(size=(n, 5)) * scale
    return frame_from_matrix(sequence_id, frame_id, mat)


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240817)
