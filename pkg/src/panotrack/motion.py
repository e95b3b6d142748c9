"""Constant-velocity discrete Kalman filter over 3D box states.

State vector (10): [cx, cy, cz, theta, l, w, h, vx, vy, vz], with
velocity in meters per frame. Measurement vector (7): [cx, cy, cz,
theta, l, w, h]. One predict step advances the position components by
the stored velocity; dimensions and orientation carry no dynamics.

Orientation is unobservable in this dataset, so every parameter group
deweights it with a huge measurement variance. Each class group also
carries additive offsets correcting the systematic bias of box-extent
measurements in (cz, h).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .geometry import Box3D

DIM_FLOOR = 0.01  # meters; posterior box extents never shrink below this

# Identity plus unit coupling of (cx,vx), (cy,vy), (cz,vz): one step per frame.
_F = np.eye(10)
_F[0, 7] = _F[1, 8] = _F[2, 9] = 1.0

# Observation selects the 7 box components of the state.
_H = np.zeros((7, 10))
_H[:7, :7] = np.eye(7)

_P0_DIAG = [10.0] * 7 + [1e4] * 3
_R_DIAG = [0.1, 0.1, 0.1, 1e4, 0.1, 0.1, 0.1]


@dataclass(frozen=True)
class KalmanParams:
    F: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    P0: np.ndarray
    z_offset: tuple[float, float]  # additive corrections to (cz, h)


_GROUP_PARAMS = {
    "vehicles": KalmanParams(
        F=_F,
        H=_H,
        Q=np.diag([0, 0, 0, 1, 1, 1, 0.3, 0.01, 0.01, 0.01]).astype(float),
        R=np.diag(_R_DIAG),
        P0=np.diag(_P0_DIAG),
        z_offset=(0.05, -0.1),
    ),
    "bikes": KalmanParams(
        F=_F,
        H=_H,
        Q=np.diag([0, 0, 0, 1, 1, 1, 0.3, 0.01, 0.01, 0.01]).astype(float),
        R=np.diag(_R_DIAG),
        P0=np.diag(_P0_DIAG),
        z_offset=(-0.025, 0.0625),
    ),
    "pedestrian": KalmanParams(
        F=_F,
        H=_H,
        Q=np.diag([0, 0, 0, 1, 0.4, 0.4, 0.4, 0.01, 0.01, 0.01]).astype(float),
        R=np.diag(_R_DIAG),
        P0=np.diag(_P0_DIAG),
        z_offset=(0.028125, -0.1),
    ),
}


def params_for_group(group: str) -> KalmanParams:
    """Filter parameter set for a class group (vehicles/bikes/pedestrian)."""
    try:
        return _GROUP_PARAMS[group]
    except KeyError:
        raise ConfigError(
            f"unknown class group {group!r}; expected one of "
            f"{sorted(_GROUP_PARAMS)}"
        ) from None


@dataclass
class KalmanState:
    """Filter state: 10-vector x and 10x10 covariance P."""

    x: np.ndarray
    P: np.ndarray

    def copy(self) -> "KalmanState":
        return KalmanState(self.x.copy(), self.P.copy())


def measurement_from_box(box: Box3D) -> np.ndarray:
    return np.array(
        [box.cx, box.cy, box.cz, box.theta, box.l, box.w, box.h], dtype=float
    )


def box_from_state(state: KalmanState, score: float = 1.0,
                   class_id: int = 0) -> Box3D:
    x = state.x
    return Box3D(
        cx=float(x[0]), cy=float(x[1]), cz=float(x[2]),
        l=float(x[4]), w=float(x[5]), h=float(x[6]),
        theta=float(x[3]), score=score, class_id=class_id,
    )


def apply_offsets(z: np.ndarray, params: KalmanParams) -> np.ndarray:
    """Bias-correct a raw measurement: shift cz and h by the group offsets."""
    z = np.asarray(z, dtype=float).copy()
    dz, dh = params.z_offset
    z[2] += dz
    z[6] += dh
    if z[6] <= 0:
        raise ValueError(f"offset-corrected height is non-positive: {z[6]}")
    return z


def correct_box(box: Box3D, params: KalmanParams,
                floor: float = DIM_FLOOR) -> Box3D:
    """Offset-correct a detection box, flooring h so tiny boxes survive."""
    dz, dh = params.z_offset
    return replace(box, cz=box.cz + dz, h=max(box.h + dh, floor))


def init(detection: Box3D, params: KalmanParams) -> KalmanState:
    """Initial state: the detection's box components with zero velocity."""
    x = np.zeros(10)
    x[:7] = measurement_from_box(detection)
    return KalmanState(x=x, P=params.P0.copy())


def predict(state: KalmanState, params: KalmanParams) -> KalmanState:
    """A-priori step: x = F x, P = F P F^T + Q."""
    F, Q = params.F, params.Q
    x = F @ state.x
    P = F @ state.P @ F.T + Q
    P = (P + P.T) / 2.0
    return KalmanState(x=x, P=P)


def update(state: KalmanState, z: np.ndarray,
           params: KalmanParams) -> KalmanState:
    """A-posteriori step from an offset-corrected 7-vector measurement.

    Uses the plain covariance form P = (I - K H) P; the posterior is
    re-symmetrized and box extents are clamped to ``DIM_FLOOR``.
    """
    H, R = params.H, params.R
    z = np.asarray(z, dtype=float)
    innovation = z - H @ state.x
    S = H @ state.P @ H.T + R
    try:
        # K = P H^T S^-1; solve on the symmetric S instead of inverting.
        K = np.linalg.solve(S, H @ state.P).T
    except np.linalg.LinAlgError as exc:
        raise FloatingPointError(
            f"singular innovation covariance: {exc}"
        ) from exc
    x = state.x + K @ innovation
    P = (np.eye(10) - K @ H) @ state.P
    P = (P + P.T) / 2.0
    x[4:7] = np.maximum(x[4:7], DIM_FLOOR)
    return KalmanState(x=x, P=P)
