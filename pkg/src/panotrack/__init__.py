"""Two-stage 3D box tracking over panoptic LiDAR sequences.

Stage 1 tracks per-frame box detections with a constant-velocity Kalman
filter, two-pass similarity matching, and a candidate/active lifecycle.
Stage 2 projects the box identities back onto per-point panoptic labels.
The package also ships the segmentation-and-tracking quality evaluator
and a synthetic scenario generator for end-to-end validation.
"""

from .geometry import Box3D, diou3d, giou3d, iou3d, points_in_box
from .tracker import Tracker, TrackerConfig, run_sequence

__all__ = [
    "Box3D",
    "iou3d",
    "diou3d",
    "giou3d",
    "points_in_box",
    "Tracker",
    "TrackerConfig",
    "run_sequence",
]

__version__ = "0.1.0"
