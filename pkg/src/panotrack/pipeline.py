"""Per-sequence drivers: track (Stage 1 + Stage 2), relabel, evaluate.

A sequence directory must hold ``velodyne/`` and ``predictions/`` (the
per-frame panoptic input) plus optional ``confidences/``, ``poses.txt``
and ``calib.txt``. Tracking writes per-frame label files into the output
root under the same layout, together with a JSON track summary carrying
every emitted box, so Stage 2 can be rerun standalone and trajectories
can be plotted offline.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import kittiio, metrics, pointlabel
from .errors import DataFormatError, EvaluationError
from .geometry import Box3D
from .kittiio import FramePanoptic
from .tracker import Tracker, TrackerConfig, TrackOutput


def _load_world_frame(seq_dir: Path, name: str,
                      pose: np.ndarray | None) -> FramePanoptic:
    frame = kittiio.read_frame(
        seq_dir / "velodyne" / f"{name}.bin",
        seq_dir / "predictions" / f"{name}.label",
        seq_dir / "confidences" / f"{name}.conf",
    )
    if pose is not None:
        frame.points = kittiio.transform_points(pose, frame.points)
    return frame


def _sequence_poses(seq_dir: Path, n_frames: int,
                    frame_mode: str) -> list[np.ndarray | None]:
    poses_path = seq_dir / "poses.txt"
    if frame_mode == "world" and poses_path.exists():
        poses = kittiio.read_poses(poses_path, seq_dir / "calib.txt")
        if len(poses) < n_frames:
            raise DataFormatError(
                f"{poses_path}: {len(poses)} poses for {n_frames} frames"
            )
        return list(poses[:n_frames])
    return [None] * n_frames


def _stage2(frame: FramePanoptic, outputs: list[TrackOutput],
            memory: pointlabel.IDMemory) -> tuple[np.ndarray, np.ndarray]:
    tree, things_idx = pointlabel.build_things_index(frame)
    claims = [
        pointlabel.associate_box_points(o.box, frame, tree, things_idx)
        for o in outputs
    ]
    resolved = pointlabel.resolve_overlaps(claims)
    tracked = [
        (o.group, o.track_id, o.class_id, idxs)
        for o, idxs in zip(outputs, resolved)
    ]
    return pointlabel.label_frame(frame, tracked, memory)


def _emission_record(out: TrackOutput) -> dict:
    b = out.box
    return {
        "group": out.group,
        "track_id": out.track_id,
        "class_id": out.class_id,
        "score": b.score,
        "box": [b.cx, b.cy, b.cz, b.theta, b.l, b.w, b.h],
    }


def _output_from_record(rec: dict) -> TrackOutput:
    cx, cy, cz, theta, l, w, h = rec["box"]
    box = Box3D(cx=cx, cy=cy, cz=cz, l=l, w=w, h=h, theta=theta,
                score=rec["score"], class_id=rec["class_id"])
    return TrackOutput(rec["track_id"], rec["group"], rec["class_id"], box)


def track_sequence(data_root: Path | str, out_root: Path | str,
                   sequence: str, config: TrackerConfig | None = None,
                   frame_mode: str = "world") -> dict:
    """Run both stages over one sequence and write prediction labels."""
    config = config or TrackerConfig()
    seq_dir = kittiio.sequence_dir(data_root, sequence)
    out_dir = kittiio.sequence_dir(out_root, sequence)
    (out_dir / "predictions").mkdir(parents=True, exist_ok=True)

    names = kittiio.list_frames(seq_dir)
    if not names:
        raise DataFormatError(f"{seq_dir}: no velodyne frames found")
    poses = _sequence_poses(seq_dir, len(names), frame_mode)

    tracker = Tracker(config)
    memory = pointlabel.IDMemory()
    emissions = []
    switch_frames = []
    has_gt = (seq_dir / "labels").is_dir()

    for name, pose in zip(names, poses):
        frame = _load_world_frame(seq_dir, name, pose)
        detections = kittiio.extract_detections(frame)
        outputs = tracker.step(detections)
        sem, inst = _stage2(frame, outputs, memory)
        kittiio.write_label(out_dir / "predictions" / f"{name}.label",
                            sem, inst)
        emissions.append({
            "frame": name,
            "tracks": [_emission_record(o) for o in outputs],
        })
        if has_gt:
            gt_sem, gt_inst = kittiio.read_label(
                seq_dir / "labels" / f"{name}.label",
                expected_points=len(frame),
            )
            switch_frames.append((gt_sem, gt_inst, inst))

    track_ids = sorted({
        (t["group"], t["track_id"])
        for frame in emissions for t in frame["tracks"]
    })
    global_track_ids = set(memory.mapping.values())
    summary = {
        "sequence": sequence,
        "n_frames": len(names),
        "config": json.loads(config.to_json()),
        "frame_mode": frame_mode,
        "distinct_track_ids": len(track_ids),
        "track_ids": [list(t) for t in track_ids],
        "emissions": emissions,
        "id_switches": metrics.id_switch_counts(switch_frames,
                                                track_ids=global_track_ids)
        if switch_frames else None,
    }
    (out_dir / "track_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True))
    return summary


def label_sequence(data_root: Path | str, out_root: Path | str,
                   sequence: str, summary_path: Path | str | None = None,
                   frame_mode: str = "world") -> dict:
    """Stage 2 only: relabel points from a previous run's track summary."""
    seq_dir = kittiio.sequence_dir(data_root, sequence)
    out_dir = kittiio.sequence_dir(out_root, sequence)
    (out_dir / "predictions").mkdir(parents=True, exist_ok=True)
    if summary_path is None:
        summary_path = out_dir / "track_summary.json"
    summary = json.loads(Path(summary_path).read_text())

    names = kittiio.list_frames(seq_dir)
    poses = _sequence_poses(seq_dir, len(names), frame_mode)
    by_frame = {e["frame"]: e["tracks"] for e in summary["emissions"]}

    memory = pointlabel.IDMemory()
    for name, pose in zip(names, poses):
        frame = _load_world_frame(seq_dir, name, pose)
        outputs = [_output_from_record(r) for r in by_frame.get(name, [])]
        sem, inst = _stage2(frame, outputs, memory)
        kittiio.write_label(out_dir / "predictions" / f"{name}.label",
                            sem, inst)
    return {"sequence": sequence, "n_frames": len(names)}


def evaluate_sequences(gt_root: Path | str, pred_root: Path | str,
                       sequences: list[str],
                       min_points: int = 1) -> metrics.LstqReport:
    """Accumulate gt labels against predicted labels over sequences."""
    acc = metrics.LstqAccumulator(min_points=min_points)
    for sequence in sequences:
        gt_dir = kittiio.sequence_dir(gt_root, sequence)
        pred_dir = kittiio.sequence_dir(pred_root, sequence)
        names = kittiio.list_frames(gt_dir, "labels", ".label")
        pred_names = kittiio.list_frames(pred_dir, "predictions", ".label")
        if names != pred_names:
            raise EvaluationError(
                f"sequence {sequence}: gt has {len(names)} frames, "
                f"prediction has {len(pred_names)}"
            )
        for name in names:
            gt_sem, gt_inst = kittiio.read_label(
                gt_dir / "labels" / f"{name}.label")
            pred_sem, pred_inst = kittiio.read_label(
                pred_dir / "predictions" / f"{name}.label")
            if len(gt_sem) != len(pred_sem):
                raise EvaluationError(
                    f"sequence {sequence} frame {name}: "
                    f"{len(gt_sem)} gt points vs {len(pred_sem)} predicted"
                )
            acc.add_frame(sequence, gt_sem, gt_inst, pred_sem, pred_inst)
    return acc.report()
