"""Constant-velocity Kalman filter over bounding boxes.

State is ``(cx, cy, area, aspect, vcx, vcy, varea, vaspect)``. The aspect
velocity is carried for shape only: it is never propagated and has zero
variance, so the aspect ratio is treated as constant between measurements.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable

import numpy as np

from .geometry import Rect

MIN_AREA = 1.0


@dataclass
class KalmanConfig:
    q_pos: float = 1.0
    q_vel: float = 0.01
    r_pos: float = 1.0
    r_size: float = 10.0
    p0: float = 10.0
    p0_vel: float = 1000.0


@dataclass(frozen=True)
class KalmanState:
    mean: np.ndarray
    covariance: np.ndarray
    n_updates: int = 1

    @property
    def rect(self) -> Rect:
        return _to_rect(self.mean)

    @property
    def velocity(self) -> tuple[float, float]:
        return float(self.mean[4]), float(self.mean[5])


@dataclass(frozen=True)
class Prediction:
    track_id: Hashable
    rect: Rect
    valid: bool = True
    clamped: bool = False


def _transition() -> np.ndarray:
    F = np.eye(8)
    F[0, 4] = F[1, 5] = F[2, 6] = 1.0
    return F


_F = _transition()
_H = np.hstack([np.eye(4), np.zeros((4, 4))])


def _process_noise(cfg: KalmanConfig) -> np.ndarray:
    return np.diag([cfg.q_pos] * 4 + [cfg.q_vel] * 3 + [0.0])


def _measurement_noise(cfg: KalmanConfig) -> np.ndarray:
    return np.diag([cfg.r_pos, cfg.r_pos, cfg.r_size, cfg.r_size])


def initial_covariance(cfg: KalmanConfig) -> np.ndarray:
    return np.diag([cfg.p0] * 4 + [cfg.p0_vel] * 3 + [0.0])


def rect_to_z(r: Rect) -> np.ndarray:
    return np.array([r.cx, r.cy, r.w * r.h, r.w / r.h])


def _to_rect(mean: np.ndarray) -> Rect:
    area = max(float(mean[2]), MIN_AREA)
    aspect = float(mean[3])
    if aspect <= 0:
        aspect = 1e-3
    return Rect.from_center(float(mean[0]), float(mean[1]), area, aspect)


def kalman_init(rect: Rect, cfg: KalmanConfig) -> KalmanState:
    """Birth state: position/size from ``rect``, zero velocities."""
    mean = np.zeros(8)
    mean[:4] = rect_to_z(rect)
    return KalmanState(mean, initial_covariance(cfg), 1)


def kalman_predict(
    state: KalmanState, cfg: KalmanConfig, track_id: Hashable = None
) -> tuple[KalmanState, Prediction]:
    mean = _F @ state.mean
    cov = _F @ state.covariance @ _F.T + _process_noise(cfg)
    cov = (cov + cov.T) / 2.0
    clamped = False
    if mean[2] <= 0:
        # long coasting with shrinking area
        mean[2] = MIN_AREA
        mean[6] = 0.0
        clamped = True
    new = KalmanState(mean, cov, state.n_updates)
    pred = Prediction(track_id, _to_rect(mean), valid=state.n_updates > 0, clamped=clamped)
    return new, pred


def kalman_update(state: KalmanState, obs: Rect, cfg: KalmanConfig) -> KalmanState:
    z = rect_to_z(obs)
    if not np.all(np.isfinite(z)):
        raise ValueError(f"non-finite measurement {obs!r}")
    P = state.covariance
    R = _measurement_noise(cfg)
    S = _H @ P @ _H.T + R
    # pinv: zero-noise configs make S singular on the aspect component
    K = P @ _H.T @ np.linalg.pinv(S)
    mean = state.mean + K @ (z - _H @ state.mean)
    IKH = np.eye(8) - K @ _H
    cov = IKH @ P @ IKH.T + K @ R @ K.T
    cov = (cov + cov.T) / 2.0
    return KalmanState(mean, cov, state.n_updates + 1)


def extrapolate(state: KalmanState, steps: int) -> Rect:
    """Box after ``steps`` constant-velocity steps of the mean (no noise)."""
    m = state.mean
    area = float(m[2] + steps * m[6])
    if area <= 0 or not math.isfinite(area):
        area = MIN_AREA
    aspect = float(m[3]) if m[3] > 0 else 1e-3
    return Rect.from_center(float(m[0] + steps * m[4]), float(m[1] + steps * m[5]), area, aspect)

