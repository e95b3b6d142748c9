"""Command-line driver.

Subcommands::

    panotrack synth --spec scenario.json --out DATA_ROOT
    panotrack track --data DATA_ROOT --out RUN_ROOT [--seqs 00,01] [flags]
    panotrack label --data DATA_ROOT --out RUN_ROOT [--summary FILE]
    panotrack eval  --gt DATA_ROOT --pred RUN_ROOT [--min-points 1,50]
    panotrack plot  --summary FILE --out DIR
    panotrack plot  --report FILE [FILE...] --out DIR

The dataset root may also come from the PANOTRACK_DATA environment
variable. Exit codes: 0 success, 2 configuration error, 3 I/O or data
format error, 4 evaluation error. Every run directory receives a
``manifest.json`` recording the resolved inputs and the exact tracker
configuration, so runs can be reproduced byte for byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import kittiio, pipeline, synth
from .errors import ConfigError, DataFormatError, EvaluationError
from .tracker import TrackerConfig

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_EVAL = 4


def _data_root(args) -> Path:
    root = getattr(args, "data", None) or os.environ.get("PANOTRACK_DATA")
    if not root:
        raise ConfigError("no dataset root: pass --data or set PANOTRACK_DATA")
    root = Path(root)
    if not root.exists():
        raise ConfigError(f"dataset root does not exist: {root}")
    return root


def _sequences(args, root: Path) -> list[str]:
    if args.seqs:
        return [s.strip() for s in args.seqs.split(",") if s.strip()]
    found = kittiio.list_sequences(root)
    if not found:
        raise ConfigError(f"no sequences under {root}")
    return found


def _tracker_config(args) -> TrackerConfig:
    if args.config:
        config = TrackerConfig.from_json(Path(args.config).read_text())
    else:
        config = TrackerConfig()
    if args.no_kalman:
        config.use_kalman = False
    if args.matching:
        config.matching_metric = args.matching
    if args.no_candidate_state:
        config.use_candidate_state = False
    if args.no_score_split:
        config.use_score_split = False
    config.validate()
    return config


def _write_manifest(out_root: Path, payload: dict) -> None:
    out_root.mkdir(parents=True, exist_ok=True)
    (out_root / "manifest.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True))


def cmd_synth(args) -> int:
    scenario = synth.Scenario.from_json(Path(args.spec).read_text())
    summary = synth.generate(scenario, args.out, sequence=args.seq)
    _write_manifest(Path(args.out), {
        "command": "synth",
        "spec": json.loads(scenario.to_json()),
        "out": str(args.out),
    })
    print(json.dumps(summary))
    return 0


def cmd_track(args) -> int:
    root = _data_root(args)
    sequences = _sequences(args, root)
    config = _tracker_config(args)
    out_root = Path(args.out)
    print("tracker configuration:", file=sys.stderr)
    print(config.to_json(), file=sys.stderr)

    _write_manifest(out_root, {
        "command": "track",
        "data": str(root),
        "sequences": sequences,
        "frame_mode": args.frame,
        "config": json.loads(config.to_json()),
    })

    def run(sequence: str) -> dict:
        return pipeline.track_sequence(root, out_root, sequence,
                                       config=config, frame_mode=args.frame)

    if args.jobs > 1 and len(sequences) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            summaries = list(pool.map(run, sequences))
    else:
        summaries = [run(s) for s in sequences]

    for summary in summaries:
        switches = summary["id_switches"]
        print(json.dumps({
            "sequence": summary["sequence"],
            "n_frames": summary["n_frames"],
            "distinct_track_ids": summary["distinct_track_ids"],
            "id_switches": switches["total_id_switches"] if switches else None,
        }))
    return 0


def cmd_label(args) -> int:
    root = _data_root(args)
    sequences = _sequences(args, root)
    out_root = Path(args.out)
    for sequence in sequences:
        summary_path = args.summary if args.summary else None
        result = pipeline.label_sequence(root, out_root, sequence,
                                         summary_path=summary_path,
                                         frame_mode=args.frame)
        print(json.dumps(result))
    return 0


def cmd_eval(args) -> int:
    gt_root = Path(args.gt)
    pred_root = Path(args.pred)
    if not gt_root.exists():
        raise ConfigError(f"gt root does not exist: {gt_root}")
    if not pred_root.exists():
        raise ConfigError(f"prediction root does not exist: {pred_root}")
    sequences = (args.seqs.split(",") if args.seqs
                 else kittiio.list_sequences(gt_root))
    if not sequences:
        raise ConfigError(f"no sequences under {gt_root}")
    min_points = [int(v) for v in args.min_points.split(",")]

    out_dir = Path(args.out) if args.out else pred_root
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_manifest(out_dir, {
        "command": "eval",
        "gt": str(gt_root),
        "pred": str(pred_root),
        "sequences": sequences,
        "min_points": min_points,
    })
    for mp in min_points:
        report = pipeline.evaluate_sequences(gt_root, pred_root, sequences,
                                             min_points=mp)
        text = report.to_text()
        (out_dir / f"lstq_min{mp}.txt").write_text(text)
        (out_dir / f"lstq_min{mp}.kv").write_text(
            "\n".join(report.to_kv_lines()) + "\n")
        print(text, end="")
    return 0


def cmd_plot(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    from . import plots

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    made = []
    if args.summary:
        made.append(plots.trajectory_plot(Path(args.summary), out_dir))
    if args.report:
        made.append(plots.report_bars([Path(p) for p in args.report], out_dir))
    if not made:
        raise ConfigError("plot needs --summary and/or --report")
    for path in made:
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="panotrack",
        description="3D box tracking over panoptic LiDAR sequences, "
                    "point relabeling, and quality scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--spec", required=True, help="scenario JSON file")
    p.add_argument("--out", required=True, help="dataset root to create")
    p.add_argument("--seq", default="00", help="sequence name (default 00)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("track", help="run both tracking stages")
    p.add_argument("--data", help="dataset root (or PANOTRACK_DATA)")
    p.add_argument("--out", required=True, help="run output root")
    p.add_argument("--seqs", help="comma-separated sequence names")
    p.add_argument("--config", help="tracker config JSON")
    p.add_argument("--frame", choices=("world", "ego"), default="world")
    p.add_argument("--jobs", type=int, default=1,
                   help="sequences processed in parallel")
    p.add_argument("--no-kalman", action="store_true",
                   help="hold the last box instead of filtering")
    p.add_argument("--matching", choices=("diou", "giou"))
    p.add_argument("--no-candidate-state", action="store_true",
                   help="new tracklets start active")
    p.add_argument("--no-score-split", action="store_true",
                   help="all detections take the first association pass")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("label", help="Stage 2 only, from a track summary")
    p.add_argument("--data", help="dataset root (or PANOTRACK_DATA)")
    p.add_argument("--out", required=True, help="run output root")
    p.add_argument("--seqs", help="comma-separated sequence names")
    p.add_argument("--summary", help="track summary JSON (default: in --out)")
    p.add_argument("--frame", choices=("world", "ego"), default="world")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--gt", required=True, help="ground-truth dataset root")
    p.add_argument("--pred", required=True, help="prediction run root")
    p.add_argument("--seqs", help="comma-separated sequence names")
    p.add_argument("--min-points", default="1,50",
                   help="comma-separated filter settings (default 1,50)")
    p.add_argument("--out", help="report directory (default: --pred)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="render trajectory / score figures")
    p.add_argument("--summary", help="track summary JSON")
    p.add_argument("--report", nargs="*", help="lstq .kv report files")
    p.add_argument("--out", required=True, help="figure directory")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except EvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
