"""Detection-to-tracklet association.

Builds similarity matrices between detection boxes and predicted tracklet
boxes, solves the assignment problem by maximizing total similarity, and
runs the two-pass base block: high-score detections are offered to all
input tracklets first, low-score detections only to the leftover
tracklets, each pass with its own acceptance threshold. Unmatched
high-score detections bypass the second pass entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import Box3D, diou3d, giou3d

SIMILARITY_METRICS = {"diou": diou3d, "giou": giou3d}


@dataclass
class AssociationProblem:
    """One bipartite matching: M detections against N predicted boxes."""

    detections: list[Box3D]
    predictions: list[Box3D]
    affinity: np.ndarray  # (M, N) pairwise similarity
    threshold: float

    @classmethod
    def build(cls, detections: Sequence[Box3D], predictions: Sequence[Box3D],
              threshold: float, metric: Callable[[Box3D, Box3D], float] = diou3d,
              ) -> "AssociationProblem":
        affinity = np.array(
            [[metric(d, p) for p in predictions] for d in detections],
            dtype=float,
        ).reshape(len(detections), len(predictions))
        return cls(list(detections), list(predictions), affinity, threshold)


@dataclass
class AssociationResult:
    matches: list[tuple[int, int, float]]  # (detection idx, tracklet idx, sim)
    unmatched_detections: list[int]
    unmatched_tracklets: list[int]


def solve_assignment(similarity: np.ndarray) -> list[tuple[int, int]]:
    """Maximum-total-similarity matching over min(M, N) pairs.

    Solved as a min-cost assignment on the negated matrix; thresholding
    is the caller's concern.
    """
    similarity = np.asarray(similarity, dtype=float)
    if similarity.size == 0:
        return []
    rows, cols = linear_sum_assignment(-similarity)
    return list(zip(rows.tolist(), cols.tolist()))


def associate(problem: AssociationProblem) -> AssociationResult:
    """Assignment followed by threshold filtering.

    Pairs below the threshold are dropped and contribute their indices to
    both unmatched lists, so matches plus unmatched always partition each
    side exactly.
    """
    matches = []
    matched_dets: set[int] = set()
    matched_trks: set[int] = set()
    for i, j in solve_assignment(problem.affinity):
        sim = float(problem.affinity[i, j])
        if sim >= problem.threshold:
            matches.append((i, j, sim))
            matched_dets.add(i)
            matched_trks.add(j)
    return AssociationResult(
        matches=matches,
        unmatched_detections=[
            i for i in range(len(problem.detections)) if i not in matched_dets
        ],
        unmatched_tracklets=[
            j for j in range(len(problem.predictions)) if j not in matched_trks
        ],
    )


@dataclass
class BaseBlockResult:
    """The four output ports of one base block run."""

    matched: list = field(default_factory=list)       # updated tracklets
    unmatched_high: list[Box3D] = field(default_factory=list)
    unmatched_low: list[Box3D] = field(default_factory=list)
    unmatched_tracklets: list = field(default_factory=list)


def base_block(high_dets: Sequence[Box3D], low_dets: Sequence[Box3D],
               tracklets: Sequence, thresholds: tuple[float, float],
               metric: Callable[[Box3D, Box3D], float] = diou3d,
               update_fn: Callable | None = None) -> BaseBlockResult:
    """Two-pass association of one frame's detections against tracklets.

    Tracklets must already carry their predicted state for the frame and
    expose ``box()``. Pass 1 offers ``high_dets`` to every tracklet at
    ``thresholds[0]``; pass 2 offers ``low_dets`` to the pass-1 leftovers
    at ``thresholds[1]``. Each match invokes ``update_fn(tracklet, det)``
    (the Kalman correction plus bookkeeping) before the tracklet is
    emitted on the matched port.
    """
    high_thr, low_thr = thresholds
    result = BaseBlockResult()

    pool = list(tracklets)
    boxes = [t.box() for t in pool]
    pass1 = associate(AssociationProblem.build(high_dets, boxes, high_thr, metric))
    for i, j, _sim in pass1.matches:
        if update_fn is not None:
            update_fn(pool[j], high_dets[i])
        result.matched.append(pool[j])
    result.unmatched_high = [high_dets[i] for i in pass1.unmatched_detections]

    leftover = [pool[j] for j in pass1.unmatched_tracklets]
    boxes2 = [t.box() for t in leftover]
    pass2 = associate(AssociationProblem.build(low_dets, boxes2, low_thr, metric))
    for i, j, _sim in pass2.matches:
        if update_fn is not None:
            update_fn(leftover[j], low_dets[i])
        result.matched.append(leftover[j])
    result.unmatched_low = [low_dets[i] for i in pass2.unmatched_detections]
    result.unmatched_tracklets = [leftover[j] for j in pass2.unmatched_tracklets]

    return result
