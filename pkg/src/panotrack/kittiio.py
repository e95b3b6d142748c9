"""Binary I/O for the point-cloud dataset layout and detection ingestion.

On-disk layout per sequence directory ``sequences/NN/``:

* ``velodyne/FFFFFF.bin``  -- N x 4 little-endian float32 (x, y, z, remission)
* ``labels/FFFFFF.label``  -- N x uint32 LE; low 16 bits semantic class,
  high 16 bits instance id (ground truth)
* ``predictions/FFFFFF.label`` -- same word format (network or tracker output)
* ``confidences/FFFFFF.conf``  -- optional N x float32 LE per-point scores
* ``poses.txt``  -- one 3x4 row-major rigid transform per frame
* ``calib.txt``  -- optional; a ``Tr:`` line with the sensor-to-pose-frame
  3x4 transform, composed as pose @ Tr to map sensor points to world

All multi-byte values are little-endian regardless of platform, and label
round trips are bit-exact.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .geometry import Box3D
from .semclasses import is_things

MAX_ID = 0xFFFF
_POINT_RECORD = 16  # bytes: 4 float32
DET_DIM_FLOOR = 0.01  # meters; extent floor for degenerate instances


@dataclass
class FramePanoptic:
    """Decoded per-point panoptic data for one scan."""

    points: np.ndarray      # (N, 3) float64, sensor frame
    semantic: np.ndarray    # (N,) int32
    instance: np.ndarray    # (N,) int32; 0 for stuff and unassigned points
    confidence: np.ndarray  # (N,) float64, 1.0 when no sidecar exists

    def __len__(self) -> int:
        return len(self.semantic)


def read_points(path: Path | str) -> np.ndarray:
    """Read a velodyne .bin into an (N, 4) float32 array."""
    raw = Path(path).read_bytes()
    if len(raw) % _POINT_RECORD != 0:
        raise DataFormatError(
            f"{path}: size {len(raw)} bytes is not a multiple of "
            f"{_POINT_RECORD} (truncated at byte offset "
            f"{len(raw) - len(raw) % _POINT_RECORD})"
        )
    pts = np.frombuffer(raw, dtype="<f4").reshape(-1, 4)
    if not np.all(np.isfinite(pts[:, :3])):
        raise DataFormatError(f"{path}: non-finite coordinates")
    return pts


def decode_label_words(words: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    semantic = (words & MAX_ID).astype(np.int32)
    instance = (words >> 16).astype(np.int32)
    return semantic, instance


def encode_label_words(semantic: np.ndarray, instance: np.ndarray,
                       name: str = "<frame>") -> np.ndarray:
    semantic = np.asarray(semantic)
    instance = np.asarray(instance)
    if np.any((semantic < 0) | (semantic > MAX_ID)):
        raise DataFormatError(f"{name}: semantic class out of 16-bit range")
    if np.any((instance < 0) | (instance > MAX_ID)):
        raise DataFormatError(
            f"{name}: instance id exceeds 16-bit label capacity "
            f"(max {MAX_ID})"
        )
    return (instance.astype(np.uint32) << 16) | semantic.astype(np.uint32)


def read_label(path: Path | str,
               expected_points: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    raw = Path(path).read_bytes()
    if len(raw) % 4 != 0:
        raise DataFormatError(
            f"{path}: size {len(raw)} bytes is not a multiple of 4"
        )
    words = np.frombuffer(raw, dtype="<u4")
    if expected_points is not None and len(words) != expected_points:
        raise DataFormatError(
            f"{path}: {len(words)} labels ({len(raw)} bytes) but the paired "
            f"scan has {expected_points} points "
            f"({expected_points * _POINT_RECORD} bytes)"
        )
    return decode_label_words(words)


def write_label(path: Path | str, semantic: np.ndarray,
                instance: np.ndarray) -> None:
    words = encode_label_words(semantic, instance, name=str(path))
    Path(path).write_bytes(words.astype("<u4").tobytes())


def read_conf(path: Path | str, expected_points: int) -> np.ndarray:
    raw = Path(path).read_bytes()
    conf = np.frombuffer(raw, dtype="<f4")
    if len(conf) != expected_points:
        raise DataFormatError(
            f"{path}: {len(conf)} confidences but scan has "
            f"{expected_points} points"
        )
    return conf.astype(np.float64)


def write_conf(path: Path | str, confidence: np.ndarray) -> None:
    Path(path).write_bytes(
        np.asarray(confidence, dtype="<f4").tobytes()
    )


def read_frame(bin_path: Path | str, label_path: Path | str,
               conf_path: Path | str | None = None) -> FramePanoptic:
    """Decode one scan with its panoptic labels and optional confidences."""
    pts = read_points(bin_path)
    semantic, instance = read_label(label_path, expected_points=len(pts))
    if conf_path is not None and Path(conf_path).exists():
        confidence = read_conf(conf_path, expected_points=len(pts))
    else:
        confidence = np.ones(len(pts), dtype=np.float64)
    return FramePanoptic(
        points=pts[:, :3].astype(np.float64),
        semantic=semantic,
        instance=instance,
        confidence=confidence,
    )


def read_poses(poses_path: Path | str,
               calib_path: Path | str | None = None) -> list[np.ndarray]:
    """Per-frame 4x4 world-from-sensor transforms (pose composed with Tr)."""
    tr = np.eye(4)
    if calib_path is not None and Path(calib_path).exists():
        for line in Path(calib_path).read_text().splitlines():
            if line.startswith("Tr:") or line.startswith("Tr "):
                vals = [float(v) for v in re.split(r"\s+", line.split(":", 1)[1].strip())]
                tr[:3, :4] = np.array(vals).reshape(3, 4)
                break
    poses = []
    for i, line in enumerate(Path(poses_path).read_text().splitlines()):
        line = line.strip()
        if not line:
            continue
        vals = [float(v) for v in line.split()]
        if len(vals) != 12:
            raise DataFormatError(
                f"{poses_path}: line {i + 1} has {len(vals)} values, expected 12"
            )
        pose = np.eye(4)
        pose[:3, :4] = np.array(vals).reshape(3, 4)
        world_from_sensor = pose @ tr
        rot = world_from_sensor[:3, :3]
        if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-6):
            raise DataFormatError(
                f"{poses_path}: rotation block of frame {i} is not orthonormal"
            )
        poses.append(world_from_sensor)
    return poses


def transform_points(transform: np.ndarray, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    return points @ transform[:3, :3].T + transform[:3, 3]


def extract_detections(frame: FramePanoptic,
                       world_from_sensor: np.ndarray | None = None,
                       ) -> list[Box3D]:
    """One axis-aligned box per Things instance of the frame.

    The box is the min/max extent of the instance's points (in the world
    frame when a pose is given), its class the instance's majority
    semantic label, and its score the maximum point confidence. Instances
    whose majority class is a stuff class are skipped.
    """
    points = frame.points
    if world_from_sensor is not None:
        points = transform_points(world_from_sensor, points)

    detections = []
    ids = np.unique(frame.instance)
    for inst_id in ids[ids > 0]:
        mask = frame.instance == inst_id
        classes, counts = np.unique(frame.semantic[mask], return_counts=True)
        class_id = int(classes[np.argmax(counts)])
        if not is_things(class_id):
            continue
        pts = points[mask]
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        center = (lo + hi) / 2.0
        dims = np.maximum(hi - lo, DET_DIM_FLOOR)
        detections.append(Box3D(
            cx=float(center[0]), cy=float(center[1]), cz=float(center[2]),
            l=float(dims[0]), w=float(dims[1]), h=float(dims[2]),
            score=float(frame.confidence[mask].max()),
            class_id=class_id,
        ))
    return detections


def frame_name(index: int) -> str:
    return f"{index:06d}"


def sequence_dir(root: Path | str, sequence: str) -> Path:
    return Path(root) / "sequences" / sequence


def list_sequences(root: Path | str) -> list[str]:
    base = Path(root) / "sequences"
    if not base.is_dir():
        return []
    return sorted(p.name for p in base.iterdir() if p.is_dir())


def list_frames(seq_dir: Path, subdir: str = "velodyne",
                suffix: str = ".bin") -> list[str]:
    """Sorted frame stems present under a sequence subdirectory."""
    d = seq_dir / subdir
    if not d.is_dir():
        return []
    return sorted(p.stem for p in d.glob(f"*{suffix}"))
