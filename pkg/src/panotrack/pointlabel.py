"""Stage 2: project box-level track identities onto per-point labels.

Each tracked box claims the union of (a) the Things-class points inside
it and (b) all points of the network instance owning the Things point
nearest to the box center, found through a per-frame k-d tree. Claims of
different boxes may overlap; overlapping point sets are made disjoint by
handing the shared points to the box with the larger shared-to-total
ratio. Finally every point receives exactly one (semantic, instance)
pair: tracked points get the tracklet's majority class and a globally
unique instance id from ``IDMemory``; leftover network Things instances
keep their class and get a fresh id when large enough, or are zeroed out
below the ignore size; stuff points pass through with instance 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DataFormatError
from .geometry import Box3D, points_in_box
from .kittiio import FramePanoptic, MAX_ID
from .semclasses import THINGS_CLASSES

IGNORE_SIZE = 25  # Things blobs below this point count are zeroed out
OVERLAP_MIN_SHARED = 3  # box pairs sharing more than this many points overlap


@dataclass
class IDMemory:
    """Injective (class group, per-group track id) -> global instance id.

    Globally unique ids are also handed out for untracked instance blobs
    through ``fresh()``; both draw from one counter so ids never collide.
    Ids are capped at the 16-bit label capacity and never reused within a
    sequence.
    """

    mapping: dict[tuple[str, int], int] = field(default_factory=dict)
    next_free_id: int = 1

    def lookup(self, group: str, track_id: int) -> int:
        key = (group, track_id)
        if key not in self.mapping:
            self.mapping[key] = self._allocate()
        return self.mapping[key]

    def fresh(self) -> int:
        return self._allocate()

    def _allocate(self) -> int:
        if self.next_free_id > MAX_ID:
            raise DataFormatError(
                f"instance id space exhausted (> {MAX_ID}); the label "
                f"format stores ids in 16 bits"
            )
        out = self.next_free_id
        self.next_free_id += 1
        return out


def things_mask(frame: FramePanoptic) -> np.ndarray:
    return np.isin(frame.semantic, list(THINGS_CLASSES))


def build_things_index(frame: FramePanoptic) -> tuple[cKDTree | None, np.ndarray]:
    """K-d tree over the frame's Things points plus their frame indices."""
    idx = np.flatnonzero(things_mask(frame))
    if len(idx) == 0:
        return None, idx
    return cKDTree(frame.points[idx]), idx


def associate_box_points(box: Box3D, frame: FramePanoptic,
                         tree: cKDTree | None = None,
                         things_idx: np.ndarray | None = None) -> np.ndarray:
    """Frame indices of the points claimed by one tracked box.

    The claim is the union of the Things points inside the box and the
    points of the network instance owning the nearest Things point to the
    box center. A frame without Things points yields an empty claim. The
    k-d tree may be shared across boxes of the same frame.
    """
    if tree is None or things_idx is None:
        tree, things_idx = build_things_index(frame)
    if tree is None:
        return np.empty(0, dtype=np.int64)

    inner = points_in_box(frame.points[things_idx], box)
    claimed = set(things_idx[inner].tolist())

    _, nearest = tree.query(box.center)
    nearest_inst = int(frame.instance[things_idx[nearest]])
    if nearest_inst > 0:
        # Claims stay within the Things category even if the instance
        # leaks onto stuff-labeled points.
        members = things_idx[frame.instance[things_idx] == nearest_inst]
        claimed.update(members.tolist())
    return np.array(sorted(claimed), dtype=np.int64)


def resolve_overlaps(assignments: list[np.ndarray]) -> list[np.ndarray]:
    """Make per-box point sets pairwise disjoint.

    Box pairs are visited in ascending index order; the shared points of
    each pair go wholly to the box with the larger shared-to-total ratio
    (ties to the earlier box). Overlap is declared at more than
    ``OVERLAP_MIN_SHARED`` shared points, but smaller overlaps are
    resolved by the same rule since every point may carry only one id.
    """
    sets = [set(np.asarray(a).tolist()) for a in assignments]
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            shared = sets[i] & sets[j]
            if not shared:
                continue
            ratio_i = len(shared) / len(sets[i])
            ratio_j = len(shared) / len(sets[j])
            loser = j if ratio_i >= ratio_j else i
            sets[loser] -= shared
    return [np.array(sorted(s), dtype=np.int64) for s in sets]


def label_frame(frame: FramePanoptic,
                tracked: list[tuple[str, int, int, np.ndarray]],
                memory: IDMemory,
                ignore_size: int = IGNORE_SIZE,
                ) -> tuple[np.ndarray, np.ndarray]:
    """Per-point (semantic, instance) output for one frame.

    ``tracked`` holds (group, track_id, majority_class, point indices)
    per emitted box, point sets already disjoint. Remaining network
    Things instances keep their semantics and receive a fresh unique id
    when they still cover at least ``ignore_size`` points, otherwise both
    their class and instance are zeroed.
    """
    out_sem = frame.semantic.copy()
    out_inst = np.zeros(len(frame), dtype=np.int32)
    claimed = np.zeros(len(frame), dtype=bool)

    for group, track_id, majority_class, idxs in tracked:
        if len(idxs) == 0:
            continue
        gid = memory.lookup(group, track_id)
        out_sem[idxs] = majority_class
        out_inst[idxs] = gid
        claimed[idxs] = True

    things = things_mask(frame)
    ids = np.unique(frame.instance[things & (frame.instance > 0)])
    for inst_id in ids:
        rest = np.flatnonzero((frame.instance == inst_id) & things & ~claimed)
        if len(rest) == 0:
            continue
        if len(rest) >= ignore_size:
            out_inst[rest] = memory.fresh()
        else:
            out_sem[rest] = 0
            out_inst[rest] = 0

    # Unclaimed Things points without a network instance carry no identity.
    return out_sem, out_inst
