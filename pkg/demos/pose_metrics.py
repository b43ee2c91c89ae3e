"""Pose metric behavior under translation, rotation, and scaling.

MPJPE pins the mid-hip before measuring, so rigid translation of a
prediction costs nothing.  PA-MPJPE additionally removes rotation and
scale through a closed-form similarity alignment, but it refuses to
mirror: a reflected skeleton keeps a large error.

Run: python3 demos/pose_metrics.py
"""

import numpy as np

from cloudgraph.metrics import PoseBatch, mpjpe, pa_mpjpe, pose_report
from cloudgraph.synthetic import MID_HIP_INDEX, SyntheticSpec, joint_positions
from cloudgraph.types import Skeleton

spec = SyntheticSpec(num_frames=1, points_per_frame=1)
gt = Skeleton(joint_positions(spec, 0.4), MID_HIP_INDEX)

rng = np.random.default_rng(3)
noisy = Skeleton(gt.keypoints + rng.normal(scale=0.01, size=gt.keypoints.shape),
                 MID_HIP_INDEX)

variants = {
    "noisy (1 cm sigma)": noisy,
    "noisy + 2 m shift": Skeleton(noisy.keypoints + [2.0, 0.0, 0.0], MID_HIP_INDEX),
    "noisy, 1.5x scaled": Skeleton(noisy.keypoints * 1.5, MID_HIP_INDEX),
    "mirrored": Skeleton(gt.keypoints * [-1.0, 1.0, 1.0], MID_HIP_INDEX),
}

print(f"{'prediction':22s} {'mpjpe_mm':>10s} {'pa_mpjpe_mm':>12s}")
for name, pred in variants.items():
    batch = PoseBatch([pred], [gt])
    print(f"{name:22s} {mpjpe(batch) * 1000:10.3f} {pa_mpjpe(batch) * 1000:12.3f}")

print()
print(pose_report(PoseBatch([noisy], [gt])))
