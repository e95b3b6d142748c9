"""Synthetic mini-dataset generator for desk-scale end-to-end runs.

Emits a complete sequence tree in the standard layout: ground-truth
labels plus a prediction copy corrupted per the noise spec (occlusion
windows, random dropout, class flips, visibility jitter) and a
confidence sidecar. Objects are rendered as uniform random points inside
their true box, enough to exercise containment, nearest-instance lookup
and overlap handling without a sensor model.

Two independent RNG streams derive from the scenario seed: one for
geometry (shared by gt and prediction) and one for the corruption, so
ground-truth bytes never depend on the noise spec. Identical seeds give
byte-identical trees.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .kittiio import (frame_name, sequence_dir, write_conf, write_label,
                      MAX_ID)
from .semclasses import THINGS_CLASSES

_IDENTITY_3X4 = "1 0 0 0 0 1 0 0 0 0 1 0"


@dataclass
class ObjectSpec:
    """One moving object; alive on frames [birth, death)."""

    id: int
    class_id: int
    center: tuple[float, float, float]
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    dims: tuple[float, float, float] = (4.0, 2.0, 1.5)
    birth: int = 0
    death: int | None = None  # defaults to the scenario frame count
    points: int | tuple[int, int] = 100  # constant, or (first, last) ramp

    def count_at(self, frame: int, death: int) -> int:
        if isinstance(self.points, int):
            return self.points
        first, last = self.points
        span = max(death - 1 - self.birth, 1)
        frac = (frame - self.birth) / span
        return int(round(first + (last - first) * frac))


@dataclass
class NoiseSpec:
    dropout_prob: float = 0.0
    # (object id, start frame, end frame): the instance vanishes from the
    # prediction on frames [start, end)
    occlusions: list[tuple[int, int, int]] = field(default_factory=list)
    score_base: float = 0.9
    score_jitter: float = 0.0
    class_flip_prob: float = 0.0
    center_jitter: float = 0.0


@dataclass
class Scenario:
    n_frames: int
    objects: list[ObjectSpec]
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0
    background_points: int = 200
    background_extent: float = 40.0
    background_class: int = 9  # road

    def validate(self) -> None:
        if self.n_frames <= 0:
            raise ConfigError("n_frames must be positive")
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate object ids: {sorted(ids)}")
        for obj in self.objects:
            if not 1 <= obj.id <= MAX_ID:
                raise ConfigError(f"object id {obj.id} outside [1, {MAX_ID}]")
            if obj.class_id not in THINGS_CLASSES:
                raise ConfigError(
                    f"object {obj.id}: class {obj.class_id} is not a "
                    f"Things class"
                )
            death = self.n_frames if obj.death is None else obj.death
            if death <= obj.birth:
                raise ConfigError(f"object {obj.id}: death <= birth")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"scenario spec is not valid JSON: {exc}") from exc
        try:
            objects = [
                ObjectSpec(**{**o, "points": _points_field(o.get("points", 100))})
                for o in payload.pop("objects")
            ]
            noise = NoiseSpec(**{
                **payload.pop("noise", {}),
            })
            noise.occlusions = [tuple(o) for o in noise.occlusions]
            scenario = cls(objects=objects, noise=noise, **payload)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad scenario spec: {exc}") from exc
        scenario.validate()
        return scenario


def _points_field(value):
    if isinstance(value, list):
        return tuple(value)
    return value


def _object_points(rng: np.random.Generator, center: np.ndarray,
                   dims: np.ndarray, count: int) -> np.ndarray:
    half = dims / 2.0
    return rng.uniform(center - half, center + half, size=(count, 3))


def generate(scenario: Scenario, out_root: Path | str,
             sequence: str = "00") -> dict:
    """Write the scenario's dataset tree; returns a summary dict."""
    scenario.validate()
    seq = sequence_dir(out_root, sequence)
    for sub in ("velodyne", "labels", "predictions", "confidences"):
        (seq / sub).mkdir(parents=True, exist_ok=True)

    geom_seed, noise_seed = np.random.SeedSequence(scenario.seed).spawn(2)
    rng_geom = np.random.default_rng(geom_seed)
    rng_noise = np.random.default_rng(noise_seed)

    noise = scenario.noise
    occluded = {
        (obj_id, f)
        for obj_id, start, end in noise.occlusions
        for f in range(start, end)
    }
    things_list = sorted(THINGS_CLASSES)

    for k in range(scenario.n_frames):
        pts_parts, gt_sem_parts, gt_inst_parts = [], [], []
        pred_sem_parts, pred_inst_parts, conf_parts = [], [], []

        for obj in sorted(scenario.objects, key=lambda o: o.id):
            death = scenario.n_frames if obj.death is None else obj.death
            if not obj.birth <= k < death:
                continue
            count = obj.count_at(k, death)
            center = np.asarray(obj.center) + k * np.asarray(obj.velocity)
            dims = np.asarray(obj.dims, dtype=float)
            pts = _object_points(rng_geom, center, dims, count)

            gt_sem = np.full(count, obj.class_id, dtype=np.int32)
            gt_inst = np.full(count, obj.id, dtype=np.int32)

            # Corruption draws happen for every object-frame in a fixed
            # order so the stream layout is stable.
            score = float(np.clip(
                noise.score_base + rng_noise.normal() * noise.score_jitter,
                0.01, 1.0))
            drop = rng_noise.random() < noise.dropout_prob
            flip = rng_noise.random() < noise.class_flip_prob
            flip_to = things_list[int(rng_noise.integers(len(things_list)))]
            offset = rng_noise.normal(size=3) * noise.center_jitter

            pred_sem = gt_sem.copy()
            pred_inst = gt_inst.copy()
            if (obj.id, k) in occluded or drop:
                pred_sem[:] = 0
                pred_inst[:] = 0
            else:
                if flip and flip_to != obj.class_id:
                    pred_sem[:] = flip_to
                if noise.center_jitter > 0:
                    visible = np.all(
                        np.abs(pts - (center + offset)) <= dims / 2.0, axis=1
                    )
                    pred_sem[~visible] = 0
                    pred_inst[~visible] = 0

            pts_parts.append(pts)
            gt_sem_parts.append(gt_sem)
            gt_inst_parts.append(gt_inst)
            pred_sem_parts.append(pred_sem)
            pred_inst_parts.append(pred_inst)
            conf_parts.append(np.full(count, score, dtype=np.float64))

        if scenario.background_points > 0:
            n = scenario.background_points
            ext = scenario.background_extent
            ground = np.column_stack([
                rng_geom.uniform(-ext, ext, n),
                rng_geom.uniform(-ext, ext, n),
                rng_geom.uniform(-0.1, 0.1, n),
            ])
            pts_parts.append(ground)
            bg_sem = np.full(n, scenario.background_class, dtype=np.int32)
            bg_inst = np.zeros(n, dtype=np.int32)
            gt_sem_parts.append(bg_sem)
            gt_inst_parts.append(bg_inst)
            pred_sem_parts.append(bg_sem.copy())
            pred_inst_parts.append(bg_inst.copy())
            conf_parts.append(np.ones(n, dtype=np.float64))

        pts = np.concatenate(pts_parts) if pts_parts else np.zeros((0, 3))
        scan = np.zeros((len(pts), 4), dtype="<f4")
        scan[:, :3] = pts

        name = frame_name(k)
        (seq / "velodyne" / f"{name}.bin").write_bytes(scan.tobytes())
        write_label(seq / "labels" / f"{name}.label",
                    _cat(gt_sem_parts), _cat(gt_inst_parts))
        write_label(seq / "predictions" / f"{name}.label",
                    _cat(pred_sem_parts), _cat(pred_inst_parts))
        write_conf(seq / "confidences" / f"{name}.conf", _cat(conf_parts))

    (seq / "poses.txt").write_text(
        "\n".join([_IDENTITY_3X4] * scenario.n_frames) + "\n")
    (seq / "calib.txt").write_text(f"Tr: {_IDENTITY_3X4}\n")

    return {
        "sequence": sequence,
        "frames": scenario.n_frames,
        "objects": len(scenario.objects),
        "path": str(seq),
    }


def _cat(parts: list[np.ndarray]) -> np.ndarray:
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int32)
