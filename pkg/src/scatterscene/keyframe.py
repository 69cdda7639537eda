"""Keyframe scoring and selection from pose novelty and image sharpness.

Frames are scored by a weighted mix of Laplacian sharpness, displacement and
view-direction angle relative to the most recently kept keyframe; the three
raw terms live in incompatible units, so each is min-max normalised over the
current selection window before weighting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import correlate

from .colorspace import luma
from .errors import MissingPoseError, NonRigidPoseError, NonUnitQuaternionError

_ORTHO_TOL = 1e-5


@dataclass
class CameraPose:
    """Camera-to-world rigid transform: x_world = R x_cam + t."""

    rotation: np.ndarray  # 3x3, orthonormal, det +1
    translation: np.ndarray  # 3-vector, scene units

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64)
        self.translation = np.asarray(self.translation, dtype=np.float64)
        if self.rotation.shape != (3, 3) or self.translation.shape != (3,):
            raise ValueError("rotation must be 3x3 and translation a 3-vector")
        err = np.abs(self.rotation.T @ self.rotation - np.eye(3)).max()
        if err > _ORTHO_TOL:
            raise NonRigidPoseError(f"rotation not orthonormal (|R^T R - I| = {err:.2e})")
        det = np.linalg.det(self.rotation)
        if abs(det - 1.0) > _ORTHO_TOL:
            raise NonRigidPoseError(f"rotation determinant {det:.6f} != +1")

    @property
    def view_direction(self) -> np.ndarray:
        """Unit viewing direction in world coordinates (third rotation column)."""
        return self.rotation[:, 2]

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "CameraPose":
        m = np.asarray(m, dtype=np.float64)
        if m.shape != (4, 4):
            raise ValueError("pose matrix must be 4x4")
        return cls(m[:3, :3], m[:3, 3])


def quaternion_to_rotation(q) -> np.ndarray:
    """Unit quaternion (w, x, y, z) to a rotation matrix."""
    w, x, y, z = np.asarray(q, dtype=np.float64)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def pose_from_world_to_camera(q, t) -> CameraPose:
    """Invert a world-to-camera (quaternion, translation) pair.

    Structure-from-motion tools emit x_cam = R(q) x_world + t; the returned
    camera-to-world pose is (R^T, -R^T t).
    """
    q = np.asarray(q, dtype=np.float64)
    norm = float(np.linalg.norm(q))
    if abs(norm - 1.0) > 1e-3:
        raise NonUnitQuaternionError(f"quaternion norm {norm:.6f} deviates from 1")
    r_wc = quaternion_to_rotation(q / norm)
    t = np.asarray(t, dtype=np.float64)
    return CameraPose(r_wc.T, -r_wc.T @ t)


def angular_difference(a: CameraPose, b: CameraPose) -> float:
    """Angle between viewing directions, in [0, pi].

    Evaluates arccos(1 - 0.5 ||v_a - v_b||^2), which equals the exact angle
    between unit view directions; the argument is clamped against rounding.
    """
    diff = a.view_direction - b.view_direction
    arg = 1.0 - 0.5 * float(diff @ diff)
    return float(np.arccos(np.clip(arg, -1.0, 1.0)))


def displacement(a: CameraPose, b: CameraPose) -> float:
    """Euclidean distance between camera positions."""
    return float(np.linalg.norm(a.translation - b.translation))


_LAPLACIAN = np.array([[0.0, -1.0, 0.0], [-1.0, 4.0, -1.0], [0.0, -1.0, 0.0]])


def sharpness(img: np.ndarray) -> float:
    """Variance of the 4-neighbour Laplacian over the luminance plane.

    Borders are edge-replicated and excluded from the variance, so affine
    images (where the interior Laplacian vanishes) score exactly zero.
    """
    plane = luma(img) if img.ndim == 3 else np.asarray(img, dtype=np.float64)
    if plane.shape[0] < 3 or plane.shape[1] < 3:
        raise ValueError("sharpness needs at least a 3x3 image")
    resp = correlate(plane, _LAPLACIAN, mode="nearest")
    interior = resp[1:-1, 1:-1]
    return float(np.var(interior))


@dataclass
class SelectionConfig:
    w1: float = 0.4  # sharpness weight
    w2: float = 0.3  # displacement weight; angle gets 1 - w1 - w2
    window: int = 15
    keep_per_window: int = 2

    def __post_init__(self):
        if not (0.0 <= self.w1 <= 1.0 and 0.0 <= self.w2 <= 1.0):
            raise ValueError("w1 and w2 must lie in [0, 1]")
        if self.w1 + self.w2 > 1.0 + 1e-12:
            raise ValueError("w1 + w2 must not exceed 1")
        if self.window < 1 or self.keep_per_window < 1:
            raise ValueError("window and keep_per_window must be >= 1")


@dataclass
class FrameRecord:
    frame_id: int
    image_path: str | Path
    pose: CameraPose | None = None
    sharpness: float = 0.0
    importance: float | None = None


def _minmax(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi - lo <= 0.0:
        return np.full_like(values, 0.5)
    return (values - lo) / (hi - lo)


def importance(sharp, dis, theta, cfg: SelectionConfig) -> np.ndarray:
    """Per-frame scores for one window of raw terms.

    Each term is min-max normalised over the window (a constant term maps
    to 0.5), then combined as w1*s + w2*d + (1 - w1 - w2)*angle; the result
    lies in [0, 1].
    """
    sharp = np.atleast_1d(np.asarray(sharp, dtype=np.float64))
    dis = np.atleast_1d(np.asarray(dis, dtype=np.float64))
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    if not (np.all(np.isfinite(sharp)) and np.all(np.isfinite(dis)) and np.all(np.isfinite(theta))):
        raise ValueError("importance terms must be finite")
    w3 = 1.0 - cfg.w1 - cfg.w2
    return cfg.w1 * _minmax(sharp) + cfg.w2 * _minmax(dis) + w3 * _minmax(theta)


def select_keyframes(frames: list[FrameRecord], cfg: SelectionConfig) -> list[FrameRecord]:
    """Deterministic windowed selection.

    The first frame is always kept. The remaining frames are processed in
    consecutive windows; every frame in a window is scored against the most
    recently kept keyframe and the top keep_per_window scores survive (ties
    broken toward the lower frame_id). Output preserves temporal order.
    """
    if not frames:
        raise ValueError("no frames to select from")
    for f in frames:
        if f.pose is None:
            raise MissingPoseError(f"frame {f.frame_id} has no pose")

    selected = [frames[0]]
    rest = frames[1:]
    for start in range(0, len(rest), cfg.window):
        window = rest[start : start + cfg.window]
        ref = selected[-1]
        sharp = [f.sharpness for f in window]
        dis = [displacement(f.pose, ref.pose) for f in window]
        theta = [angular_difference(f.pose, ref.pose) for f in window]
        scores = importance(sharp, dis, theta, cfg)
        for f, s in zip(window, scores):
            f.importance = float(s)
        ranked = sorted(range(len(window)), key=lambda i: (-scores[i], window[i].frame_id))
        keep = sorted(ranked[: cfg.keep_per_window])
        selected.extend(window[i] for i in keep)
    return selected
