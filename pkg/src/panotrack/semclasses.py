"""Semantic class registry for the 19-class LiDAR panoptic label space.

Class ids follow the common remapped scheme: 0 is void/unlabeled, 1-8 are
the movable (Things) classes carrying instance ids, 9-19 are background
(Stuff) classes. Tracking parameters are keyed by coarse class group.
"""

from __future__ import annotations

CLASS_NAMES = {
    0: "unlabeled",
    1: "car",
    2: "bicycle",
    3: "motorcycle",
    4: "truck",
    5: "other-vehicle",
    6: "person",
    7: "bicyclist",
    8: "motorcyclist",
    9: "road",
    10: "parking",
    11: "sidewalk",
    12: "other-ground",
    13: "building",
    14: "fence",
    15: "vegetation",
    16: "trunk",
    17: "terrain",
    18: "pole",
    19: "traffic-sign",
}

THINGS_CLASSES = frozenset(range(1, 9))
STUFF_CLASSES = frozenset(range(9, 20))

# Coarse groups used for per-group filter/tracker parameters. Riders are
# grouped with bikes since their boxes share bike geometry.
GROUPS = ("vehicles", "bikes", "pedestrian")

GROUP_CLASSES = {
    "vehicles": frozenset({1, 4, 5}),
    "bikes": frozenset({2, 3, 7, 8}),
    "pedestrian": frozenset({6}),
}

_CLASS_TO_GROUP = {
    cls: group for group, classes in GROUP_CLASSES.items() for cls in classes
}


def is_things(class_id: int) -> bool:
    return class_id in THINGS_CLASSES


def group_of(class_id: int) -> str | None:
    """Class group of a Things class, or None for stuff/void classes."""
    return _CLASS_TO_GROUP.get(class_id)
