"""Axis-aligned 3D boxes and the similarity metrics used for association.

All boxes are axis-aligned (yaw fixed at zero, which holds for boxes
derived from this dataset), so intersections reduce to per-axis interval
arithmetic. Similarity conventions:

* ``iou3d``   in [0, 1]
* ``diou3d``  in (-1, 1]: IoU minus the squared center distance normalized
  by the squared diagonal of the smallest enclosing axis-aligned box
* ``giou3d``  in (-1, 1]: IoU minus the enclosing-box dead-space ratio

All three are symmetric and equal 1 exactly for identical boxes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Box3D:
    """Axis-aligned box: center (cx, cy, cz), extent (l, w, h) along x/y/z."""

    cx: float
    cy: float
    cz: float
    l: float
    w: float
    h: float
    theta: float = 0.0
    score: float = 1.0
    class_id: int = 0

    def __post_init__(self):
        if not (self.l > 0 and self.w > 0 and self.h > 0):
            raise ValueError(
                f"box dimensions must be positive, got "
                f"l={self.l}, w={self.w}, h={self.h}"
            )
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")

    @property
    def center(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.cz], dtype=float)

    @property
    def dims(self) -> np.ndarray:
        return np.array([self.l, self.w, self.h], dtype=float)

    @property
    def volume(self) -> float:
        return self.l * self.w * self.h

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """(min corner, max corner)."""
        half = self.dims / 2.0
        return self.center - half, self.center + half


def _intersection_volume(a: Box3D, b: Box3D) -> float:
    amin, amax = a.bounds()
    bmin, bmax = b.bounds()
    extent = np.minimum(amax, bmax) - np.maximum(amin, bmin)
    if np.any(extent <= 0):
        return 0.0
    return float(np.prod(extent))


def _enclosing_extent(a: Box3D, b: Box3D) -> np.ndarray:
    amin, amax = a.bounds()
    bmin, bmax = b.bounds()
    return np.maximum(amax, bmax) - np.minimum(amin, bmin)


def iou3d(a: Box3D, b: Box3D) -> float:
    """Volume intersection over union of two axis-aligned boxes."""
    inter = _intersection_volume(a, b)
    union = a.volume + b.volume - inter
    return inter / union


def diou3d(a: Box3D, b: Box3D) -> float:
    """Distance-IoU: IoU minus the normalized squared center distance.

    The normalizer is the squared full diagonal of the smallest
    axis-aligned box enclosing both inputs, so the penalty approaches 1
    as the boxes separate and the value tends to -1.
    """
    rho2 = float(np.sum((a.center - b.center) ** 2))
    c2 = float(np.sum(_enclosing_extent(a, b) ** 2))
    return iou3d(a, b) - rho2 / c2


def giou3d(a: Box3D, b: Box3D) -> float:
    """Generalized IoU: IoU minus dead space of the enclosing box."""
    inter = _intersection_volume(a, b)
    union = a.volume + b.volume - inter
    enclosing = float(np.prod(_enclosing_extent(a, b)))
    return inter / union - (enclosing - union) / enclosing


def points_in_box(points: np.ndarray, box: Box3D) -> np.ndarray:
    """Indices of points inside the box, boundaries included.

    ``points`` is an (N, 3) array; the boundary is closed so a degenerate
    single-point object lies inside its own box.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] < 3:
        raise ValueError(f"expected (N, 3) points, got shape {points.shape}")
    half = box.dims / 2.0
    inside = np.all(np.abs(points[:, :3] - box.center) <= half, axis=1)
    return np.flatnonzero(inside)
