"""Offline figures from run outputs; no interactive components."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .semclasses import CLASS_NAMES  # noqa: E402


def _save(fig, path: Path) -> Path:
    # SVG with a scrubbed date is byte-stable across runs.
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    return path


def trajectory_plot(summary_path: Path, out_dir: Path) -> Path:
    """Bird's-eye trajectory of every emitted track, one color per id."""
    summary = json.loads(Path(summary_path).read_text())
    tracks: dict[str, list[tuple[float, float]]] = {}
    for frame in summary["emissions"]:
        for t in frame["tracks"]:
            uid = f"{t['group']}:{t['track_id']}"
            tracks.setdefault(uid, []).append((t["box"][0], t["box"][1]))

    fig, ax = plt.subplots(figsize=(6, 6))
    if not tracks:
        print("warning: summary contains no emitted tracks", file=sys.stderr)
    for uid in sorted(tracks):
        xy = tracks[uid]
        ax.plot([p[0] for p in xy], [p[1] for p in xy],
                marker=".", markersize=3, linewidth=1, label=uid)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"sequence {summary.get('sequence', '?')} trajectories")
    ax.set_aspect("equal", adjustable="datalim")
    if tracks:
        ax.legend(fontsize=7)
    return _save(fig, out_dir / "trajectories.svg")


def _read_kv(path: Path) -> dict[str, float]:
    out = {}
    for line in path.read_text().splitlines():
        if "=" not in line:
            continue
        key, value = line.split("=", 1)
        try:
            out[key] = float(value)
        except ValueError:
            continue
    return out


def report_bars(report_paths: list[Path], out_dir: Path) -> Path:
    """Grouped bars of the per-class combined score, one group per report."""
    reports = [(p.stem, _read_kv(p)) for p in report_paths]
    class_keys: list[tuple[int, str]] = []
    for _name, kv in reports:
        for key in kv:
            if key.startswith("class.") and key.endswith(".lstq"):
                cls = int(key.split(".")[1])
                if (cls, key) not in class_keys:
                    class_keys.append((cls, key))
    class_keys = sorted(set(class_keys))

    fig, ax = plt.subplots(figsize=(8, 4))
    if not class_keys:
        print("warning: reports contain no per-class scores", file=sys.stderr)
    width = 0.8 / max(len(reports), 1)
    for i, (name, kv) in enumerate(reports):
        xs = [j + i * width for j in range(len(class_keys))]
        ys = [kv.get(key, 0.0) for _cls, key in class_keys]
        ax.bar(xs, ys, width=width, label=name)
    ax.set_xticks([j + 0.4 - width / 2 for j in range(len(class_keys))])
    ax.set_xticklabels(
        [CLASS_NAMES.get(cls, str(cls)) for cls, _ in class_keys],
        rotation=30, ha="right", fontsize=8,
    )
    ax.set_ylabel("combined score")
    ax.set_ylim(0, 1)
    if reports:
        ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, out_dir / "scores.svg")
