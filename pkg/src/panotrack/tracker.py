"""Stage 1: per-frame 3D box tracking with lifecycle management.

Each class group (vehicles, bikes, pedestrian) runs an independent
tracker: its own Kalman parameters, thresholds, and track-id counter.
Per frame and group the pipeline is

1. split detections into high/low score groups,
2. Kalman-predict every tracklet,
3. two-pass base block over the *active* tracklets,
4. two-pass base block over the *candidate* tracklets, fed by the
   active block's unmatched detections,
5. birth a candidate from every still-unmatched high-score detection
   (unmatched low-score detections are discarded),
6. lifecycle transitions and deaths,
7. emit the boxes of active tracklets only; candidates stay hidden.

A tracklet is born as a candidate and promoted to active once it has a
streak of ``min_hits`` matched frames; an active tracklet unmatched for
more than ``max_age`` frames is demoted back to candidate, and any
candidate unmatched for more than ``death_age`` frames is terminated.
Emitted boxes carry the majority class over all detections ever matched
to the tracklet, not the latest detection's class.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, asdict
from typing import Iterable, Iterator, Sequence

from . import motion
from .association import SIMILARITY_METRICS, base_block
from .errors import ConfigError
from .geometry import Box3D
from .semclasses import GROUPS, group_of

CANDIDATE = "candidate"
ACTIVE = "active"


@dataclass
class GroupConfig:
    """Detection-split, matching, and lifecycle thresholds for one group."""

    det_split_threshold: float
    high_match_threshold: float
    low_match_threshold: float
    min_hits: int
    max_age: int
    death_age: int

    def validate(self, group: str) -> None:
        if not 0.0 <= self.det_split_threshold <= 1.0:
            raise ConfigError(
                f"{group}: det_split_threshold must be in [0, 1], "
                f"got {self.det_split_threshold}"
            )
        if self.death_age <= self.max_age:
            raise ConfigError(
                f"{group}: death_age ({self.death_age}) must exceed "
                f"max_age ({self.max_age})"
            )


# Tuned per-group defaults: (split, high match, low match, min hits,
# max age, death age).
_DEFAULT_GROUPS = {
    "vehicles": GroupConfig(0.7, -0.2, -0.5, 2, 7, 10),
    "bikes": GroupConfig(0.8, -0.4, -0.7, 3, 4, 7),
    "pedestrian": GroupConfig(0.3, -0.4, -0.7, 3, 4, 7),
}


@dataclass
class TrackerConfig:
    groups: dict[str, GroupConfig] = field(
        default_factory=lambda: {g: GroupConfig(**asdict(c))
                                 for g, c in _DEFAULT_GROUPS.items()}
    )
    use_kalman: bool = True
    matching_metric: str = "diou"
    use_candidate_state: bool = True
    use_score_split: bool = True

    def validate(self) -> None:
        if self.matching_metric not in SIMILARITY_METRICS:
            raise ConfigError(
                f"matching_metric must be one of "
                f"{sorted(SIMILARITY_METRICS)}, got {self.matching_metric!r}"
            )
        missing = set(GROUPS) - set(self.groups)
        if missing:
            raise ConfigError(f"missing group configs: {sorted(missing)}")
        for group, cfg in self.groups.items():
            cfg.validate(group)

    def to_json(self) -> str:
        payload = {
            "groups": {g: asdict(c) for g, c in self.groups.items()},
            "use_kalman": self.use_kalman,
            "matching_metric": self.matching_metric,
            "use_candidate_state": self.use_candidate_state,
            "use_score_split": self.use_score_split,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TrackerConfig":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        cfg = cls()
        for group, values in payload.get("groups", {}).items():
            if group not in cfg.groups:
                raise ConfigError(f"unknown class group in config: {group!r}")
            try:
                cfg.groups[group] = GroupConfig(**values)
            except TypeError as exc:
                raise ConfigError(f"bad group config for {group}: {exc}") from exc
        for key in ("use_kalman", "matching_metric", "use_candidate_state",
                    "use_score_split"):
            if key in payload:
                setattr(cfg, key, payload[key])
        cfg.validate()
        return cfg


def split_detections(dets: Sequence[Box3D],
                     threshold: float) -> tuple[list[Box3D], list[Box3D]]:
    """Score split, order-preserving; score >= threshold goes high."""
    high = [d for d in dets if d.score >= threshold]
    low = [d for d in dets if d.score < threshold]
    return high, low


class Tracklet:
    """One tracked object: filter state plus lifecycle counters."""

    def __init__(self, track_id: int, group: str, detection: Box3D,
                 params: motion.KalmanParams, use_kalman: bool = True):
        self.track_id = track_id
        self.group = group
        self.params = params
        self.use_kalman = use_kalman
        self.kstate = motion.init(detection, params)
        self.lifecycle_state = CANDIDATE
        self.hit_streak = 1
        self.time_since_update = 0
        self.age = 1
        self.class_votes: list[int] = [detection.class_id]
        self.last_score = detection.score

    def box(self) -> Box3D:
        return motion.box_from_state(
            self.kstate, score=self.last_score, class_id=self.majority_class()
        )

    def majority_class(self) -> int:
        """Mode of the matched detections' classes; ties go to the most
        recent vote."""
        counts = Counter(self.class_votes)
        best = max(counts.values())
        tied = {c for c, n in counts.items() if n == best}
        for cls in reversed(self.class_votes):
            if cls in tied:
                return cls
        raise AssertionError("class_votes is never empty")

    def predict(self) -> None:
        if self.use_kalman:
            self.kstate = motion.predict(self.kstate, self.params)
        self.age += 1

    def mark_matched(self, detection: Box3D) -> None:
        z = motion.measurement_from_box(detection)
        if self.use_kalman:
            self.kstate = motion.update(self.kstate, z, self.params)
        else:
            self.kstate.x[:7] = z
        self.time_since_update = 0
        self.hit_streak += 1
        self.class_votes.append(detection.class_id)
        self.last_score = detection.score

    def mark_missed(self) -> None:
        self.time_since_update += 1
        self.hit_streak = 0


@dataclass
class TrackOutput:
    """One emitted (active) track for one frame."""

    track_id: int
    group: str
    class_id: int
    box: Box3D


class _GroupTracker:
    """Tracker state for a single class group."""

    def __init__(self, group: str, config: TrackerConfig):
        self.group = group
        self.cfg = config
        self.gcfg = config.groups[group]
        self.params = motion.params_for_group(group)
        self.metric = SIMILARITY_METRICS[config.matching_metric]
        self.tracklets: list[Tracklet] = []
        self._next_id = 1

    def step(self, dets: Sequence[Box3D]) -> list[TrackOutput]:
        cfg, gcfg = self.cfg, self.gcfg
        if cfg.use_score_split:
            high, low = split_detections(dets, gcfg.det_split_threshold)
        else:
            high, low = list(dets), []

        for t in self.tracklets:
            t.predict()

        thresholds = (gcfg.high_match_threshold, gcfg.low_match_threshold)
        actives = [t for t in self.tracklets if t.lifecycle_state == ACTIVE]
        candidates = [t for t in self.tracklets
                      if t.lifecycle_state == CANDIDATE]

        active_out = base_block(high, low, actives, thresholds, self.metric,
                                Tracklet.mark_matched)
        cand_out = base_block(active_out.unmatched_high,
                              active_out.unmatched_low,
                              candidates, thresholds, self.metric,
                              Tracklet.mark_matched)

        for t in active_out.unmatched_tracklets:
            t.mark_missed()
        for t in cand_out.unmatched_tracklets:
            t.mark_missed()
        # Unmatched low-score detections are discarded; only unmatched
        # high-score detections seed new tracklets.
        for det in cand_out.unmatched_high:
            t = Tracklet(self._next_id, self.group, det, self.params,
                         cfg.use_kalman)
            if not cfg.use_candidate_state:
                t.lifecycle_state = ACTIVE
            self._next_id += 1
            self.tracklets.append(t)

        self._apply_transitions(cand_out.matched)
        return [
            TrackOutput(t.track_id, self.group, t.majority_class(), t.box())
            for t in self.tracklets
            if t.lifecycle_state == ACTIVE
        ]

    def _apply_transitions(self, matched_candidates: list[Tracklet]) -> None:
        cfg, gcfg = self.cfg, self.gcfg
        if cfg.use_candidate_state:
            for t in matched_candidates:
                if (t.lifecycle_state == CANDIDATE
                        and t.hit_streak >= gcfg.min_hits
                        and t.time_since_update < gcfg.max_age):
                    t.lifecycle_state = ACTIVE
            for t in self.tracklets:
                if (t.lifecycle_state == ACTIVE
                        and t.time_since_update > gcfg.max_age):
                    t.lifecycle_state = CANDIDATE
                    t.hit_streak = 0
            self.tracklets = [
                t for t in self.tracklets
                if not (t.lifecycle_state == CANDIDATE
                        and t.time_since_update > gcfg.death_age)
            ]
        else:
            self.tracklets = [
                t for t in self.tracklets
                if t.time_since_update <= gcfg.death_age
            ]


class Tracker:
    """Multi-group frame-by-frame tracker over one sequence.

    Detections are bias-corrected on ingestion and routed to the tracker
    of their class group; detections of stuff or void classes are
    ignored. Emitted boxes live in the corrected measurement space.
    """

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self.config.validate()
        self._groups = {g: _GroupTracker(g, self.config) for g in GROUPS}

    def step(self, detections: Sequence[Box3D]) -> list[TrackOutput]:
        by_group: dict[str, list[Box3D]] = {g: [] for g in GROUPS}
        for det in detections:
            group = group_of(det.class_id)
            if group is None:
                continue
            by_group[group].append(
                motion.correct_box(det, self._groups[group].params)
            )
        outputs: list[TrackOutput] = []
        for g in GROUPS:
            outputs.extend(self._groups[g].step(by_group[g]))
        outputs.sort(key=lambda o: (o.group, o.track_id))
        return outputs


def run_sequence(frames: Iterable[Sequence[Box3D]],
                 config: TrackerConfig | None = None,
                 ) -> Iterator[list[TrackOutput]]:
    """Drive a fresh tracker over per-frame detection lists, in order."""
    tracker = Tracker(config)
    for dets in frames:
        yield tracker.step(dets)
