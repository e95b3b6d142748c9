"""Segmentation-and-tracking quality scoring over label streams.

The score is the geometric mean of two components accumulated over whole
sequences:

* classification: per-class point IoU over the full 4D volume (all
  frames pooled through one confusion matrix), averaged over the classes
  present in ground truth or prediction;
* association: instances aggregated into 4D tubes (one tube per instance
  id per sequence); for every ground-truth tube t the prediction tubes s
  overlapping it contribute |s & t| * IoU(s, t), the sum is normalized by
  |t|, and the result is averaged over all ground-truth tubes.

A minimum-point filter applies to the association component only:
ground-truth (and prediction) instances with fewer than ``min_points``
points in a frame are dropped from tube accounting for that frame.
``min_points=1`` therefore disables the filter. The classification
component is never filtered.

Points whose ground-truth class is 0 (void) are excluded from all
accounting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError
from .semclasses import CLASS_NAMES, THINGS_CLASSES

_N_CLASSES = max(CLASS_NAMES) + 1


@dataclass
class ClassScores:
    s_assoc: float | None
    s_cls: float | None
    lstq: float | None


@dataclass
class LstqReport:
    min_points: int
    per_class: dict[int, ClassScores]
    things: ClassScores

    @property
    def lstq(self) -> float | None:
        return self.things.lstq

    def to_kv_lines(self) -> list[str]:
        def fmt(v):
            return "nan" if v is None else f"{v:.12f}"

        lines = [f"min_points={self.min_points}"]
        for key, scores in (("things", self.things),):
            lines += [
                f"{key}.lstq={fmt(scores.lstq)}",
                f"{key}.s_assoc={fmt(scores.s_assoc)}",
                f"{key}.s_cls={fmt(scores.s_cls)}",
            ]
        for cls in sorted(self.per_class):
            scores = self.per_class[cls]
            name = CLASS_NAMES.get(cls, str(cls))
            for part in ("lstq", "s_assoc", "s_cls"):
                lines.append(f"class.{cls}.{name}.{part}="
                             f"{fmt(getattr(scores, part))}")
        return lines

    def to_text(self) -> str:
        def fmt(v):
            return "   --" if v is None else f"{v:5.3f}"

        header = (f"{'class':>14}  {'LSTQ':>5}  {'S_assoc':>7}  {'S_cls':>5}"
                  f"   (min_points={self.min_points})")
        rows = [header, "-" * len(header)]
        rows.append(f"{'Things':>14}  {fmt(self.things.lstq)}  "
                    f"{fmt(self.things.s_assoc):>7}  {fmt(self.things.s_cls)}")
        for cls in sorted(self.per_class):
            s = self.per_class[cls]
            rows.append(f"{CLASS_NAMES.get(cls, str(cls)):>14}  "
                        f"{fmt(s.lstq)}  {fmt(s.s_assoc):>7}  {fmt(s.s_cls)}")
        return "\n".join(rows) + "\n"


def _geo_mean(a: float | None, b: float | None) -> float | None:
    if a is None or b is None:
        return None
    return float(np.sqrt(a * b))


class LstqAccumulator:
    """Streaming evaluator; feed frames in order, then call ``report()``.

    Partial accumulators over disjoint sequence sets can be combined with
    ``merge()``, so sequences may be evaluated in parallel.
    """

    def __init__(self, min_points: int = 1):
        if min_points < 1:
            raise EvaluationError(f"min_points must be >= 1, got {min_points}")
        self.min_points = min_points
        self.confusion = np.zeros((_N_CLASSES, _N_CLASSES), dtype=np.int64)
        # per sequence: prediction tube sizes (shared across classes),
        # gt tube sizes and tube intersections per things class
        self._pred_sizes: dict[str, dict[int, int]] = {}
        self._gt_sizes: dict[str, dict[int, dict[int, int]]] = {}
        self._intersections: dict[str, dict[int, dict[tuple[int, int], int]]] = {}

    def add_frame(self, sequence: str, gt_sem: np.ndarray, gt_inst: np.ndarray,
                  pred_sem: np.ndarray, pred_inst: np.ndarray) -> None:
        arrays = [np.asarray(a).ravel()
                  for a in (gt_sem, gt_inst, pred_sem, pred_inst)]
        lengths = {len(a) for a in arrays}
        if len(lengths) != 1:
            raise EvaluationError(
                f"sequence {sequence}: label stream lengths differ: "
                f"{[len(a) for a in arrays]}"
            )
        gt_sem, gt_inst, pred_sem, pred_inst = arrays

        keep = gt_sem != 0
        gt_sem, gt_inst = gt_sem[keep], gt_inst[keep]
        pred_sem, pred_inst = pred_sem[keep], pred_inst[keep]

        # Classes outside the registry fold into void.
        gt_sem = np.where(gt_sem < _N_CLASSES, gt_sem, 0)
        pred_sem = np.where(pred_sem < _N_CLASSES, pred_sem, 0)
        np.add.at(self.confusion, (gt_sem, pred_sem), 1)

        if sequence not in self._pred_sizes:
            self._pred_sizes[sequence] = {}
            self._gt_sizes[sequence] = {c: {} for c in THINGS_CLASSES}
            self._intersections[sequence] = {c: {} for c in THINGS_CLASSES}

        for cl in THINGS_CLASSES:
            gt_in_cl = np.where(gt_sem == cl, gt_inst, 0)
            pred_in_cl = np.where(pred_sem == cl, pred_inst, 0)

            ids, counts = np.unique(pred_in_cl[pred_in_cl > 0],
                                    return_counts=True)
            for i, c in zip(ids[counts >= self.min_points],
                            counts[counts >= self.min_points]):
                sizes = self._pred_sizes[sequence]
                sizes[int(i)] = sizes.get(int(i), 0) + int(c)

            ids, counts = np.unique(gt_in_cl[gt_in_cl > 0], return_counts=True)
            kept_ids = ids[counts >= self.min_points]
            for i, c in zip(kept_ids, counts[counts >= self.min_points]):
                sizes = self._gt_sizes[sequence][cl]
                sizes[int(i)] = sizes.get(int(i), 0) + int(c)

            gt_kept = np.where(np.isin(gt_in_cl, kept_ids), gt_in_cl, 0)
            both = (pred_inst > 0) & (gt_kept > 0)
            if np.any(both):
                pairs = np.stack([pred_inst[both], gt_kept[both]], axis=1)
                uniq, counts = np.unique(pairs, axis=0, return_counts=True)
                inter = self._intersections[sequence][cl]
                for (pid, gid), c in zip(uniq, counts):
                    key = (int(pid), int(gid))
                    inter[key] = inter.get(key, 0) + int(c)

    def merge(self, other: "LstqAccumulator") -> None:
        if other.min_points != self.min_points:
            raise EvaluationError("cannot merge accumulators with "
                                  "different min_points")
        overlap = set(self._pred_sizes) & set(other._pred_sizes)
        if overlap:
            raise EvaluationError(
                f"cannot merge accumulators sharing sequences: {sorted(overlap)}"
            )
        self.confusion += other.confusion
        self._pred_sizes.update(other._pred_sizes)
        self._gt_sizes.update(other._gt_sizes)
        self._intersections.update(other._intersections)

    # -- classification -------------------------------------------------

    def class_iou(self) -> dict[int, float]:
        """Point IoU per class, for classes present in gt or prediction."""
        tp = np.diag(self.confusion).astype(float)
        gt_total = self.confusion.sum(axis=1).astype(float)
        pred_total = self.confusion.sum(axis=0).astype(float)
        out = {}
        for cls in range(1, _N_CLASSES):
            denom = gt_total[cls] + pred_total[cls] - tp[cls]
            if denom > 0:
                out[cls] = tp[cls] / denom
        return out

    def s_cls(self, classes: set[int] | None = None) -> float | None:
        per_class = self.class_iou()
        if classes is not None:
            per_class = {c: v for c, v in per_class.items() if c in classes}
        if not per_class:
            return None
        return float(np.mean(list(per_class.values())))

    # -- association ----------------------------------------------------

    def _assoc_sums(self) -> tuple[dict[int, float], dict[int, int]]:
        quality = {c: 0.0 for c in THINGS_CLASSES}
        tubes = {c: 0 for c in THINGS_CLASSES}
        for seq in self._gt_sizes:
            pred_sizes = self._pred_sizes[seq]
            for cl in THINGS_CLASSES:
                gt_sizes = self._gt_sizes[seq][cl]
                tubes[cl] += len(gt_sizes)
                by_gid: dict[int, list[tuple[int, int]]] = {}
                for (pid, gid), ovl in self._intersections[seq][cl].items():
                    by_gid.setdefault(gid, []).append((pid, ovl))
                for gid, gt_size in gt_sizes.items():
                    inner = 0.0
                    for pid, ovl in by_gid.get(gid, ()):
                        pred_size = pred_sizes.get(pid)
                        if pred_size is None:
                            continue
                        inner += ovl * (ovl / (gt_size + pred_size - ovl))
                    quality[cl] += inner / gt_size
        return quality, tubes

    def s_assoc(self) -> float | None:
        quality, tubes = self._assoc_sums()
        total = sum(tubes.values())
        if total == 0:
            return None
        return sum(quality.values()) / total

    # -- combined -------------------------------------------------------

    def report(self) -> LstqReport:
        quality, tubes = self._assoc_sums()
        iou = self.class_iou()

        per_class = {}
        for cls in sorted(set(iou) | {c for c in THINGS_CLASSES if tubes[c]}):
            sa = quality[cls] / tubes[cls] if tubes.get(cls) else None
            sc = iou.get(cls)
            per_class[cls] = ClassScores(sa, sc, _geo_mean(sa, sc))

        things_sa = self.s_assoc()
        things_sc = self.s_cls(classes=set(THINGS_CLASSES))
        things = ClassScores(things_sa, things_sc,
                             _geo_mean(things_sa, things_sc))
        return LstqReport(self.min_points, per_class, things)


def lstq(gt_frames, pred_frames, min_points: int = 1,
         sequence: str = "00") -> LstqReport:
    """Score one sequence given parallel lists of (semantic, instance)."""
    gt_frames, pred_frames = list(gt_frames), list(pred_frames)
    if len(gt_frames) != len(pred_frames):
        raise EvaluationError(
            f"frame count mismatch: {len(gt_frames)} gt vs "
            f"{len(pred_frames)} prediction"
        )
    acc = LstqAccumulator(min_points=min_points)
    for (gs, gi), (ps, pi) in zip(gt_frames, pred_frames):
        acc.add_frame(sequence, gs, gi, ps, pi)
    return acc.report()


# -- track continuity summary -------------------------------------------


def id_switch_counts(frames: list[tuple[np.ndarray, np.ndarray, np.ndarray]],
                     track_ids: set[int] | None = None) -> dict:
    """Identity continuity of predicted instances along gt tubes.

    ``frames`` holds (gt_semantic, gt_instance, pred_instance) per frame.
    For every ground-truth Things tube, the owning prediction id of a
    frame is the majority positive prediction id over the tube's points.
    A switch is counted whenever consecutive owned frames disagree;
    frames without an owner interrupt nothing but count as coverage gaps.

    When ``track_ids`` is given, only those prediction ids count as
    owners; ids of never-tracked filler blobs register as gaps instead of
    identities, so the summary reflects track continuity alone.
    """
    tube_class: dict[int, int] = {}
    owners: dict[int, list[int]] = {}
    present: dict[int, int] = {}
    for gt_sem, gt_inst, pred_inst in frames:
        things = np.isin(gt_sem, list(THINGS_CLASSES)) & (gt_inst > 0)
        for gid in np.unique(gt_inst[things]):
            mask = things & (gt_inst == gid)
            gid = int(gid)
            present[gid] = present.get(gid, 0) + 1
            classes, counts = np.unique(gt_sem[mask], return_counts=True)
            tube_class.setdefault(gid, int(classes[np.argmax(counts)]))
            owned = pred_inst[mask]
            owned = owned[owned > 0]
            if track_ids is not None and len(owned):
                owned = owned[np.isin(owned, list(track_ids))]
            if len(owned) == 0:
                continue
            ids, counts = np.unique(owned, return_counts=True)
            owners.setdefault(gid, []).append(int(ids[np.argmax(counts)]))

    per_tube = {}
    switches_per_class: dict[int, int] = {}
    for gid, cls in tube_class.items():
        seq = owners.get(gid, [])
        switches = sum(1 for a, b in zip(seq, seq[1:]) if a != b)
        per_tube[gid] = {
            "class": cls,
            "frames_present": present[gid],
            "frames_covered": len(seq),
            "distinct_ids": len(set(seq)),
            "id_switches": switches,
        }
        switches_per_class[cls] = switches_per_class.get(cls, 0) + switches
    return {
        "per_tube": per_tube,
        "id_switches_per_class": switches_per_class,
        "total_id_switches": sum(switches_per_class.values()),
    }
