"""Pinhole ray generation and full-view rendering.

Camera convention: +z forward, +y down (pixel (u, v) maps to the camera-space
direction [(u - cx)/fx, (v - cy)/fy, 1] before rotation). Pose parsers convert
other conventions into this one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..keyframe import CameraPose
from .model import FieldParams, field_eval
from .render import composite, deltas_from_t, intersect_cube, sample_stratified


@dataclass
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if min(self.fx, self.fy) <= 0 or min(self.width, self.height) < 1:
            raise ValueError("invalid intrinsics")


@dataclass
class RenderConfig:
    samples_per_ray: int = 128
    sampling: str = "stratified"  # or "midpoint" (deterministic quadrature)
    seed: int = 0
    chunk_rays: int = 16384


def pixel_rays(pose: CameraPose, intr: Intrinsics) -> tuple[np.ndarray, np.ndarray]:
    """World-space origins and unit directions for every pixel, row-major."""
    u = np.arange(intr.width, dtype=np.float64)
    v = np.arange(intr.height, dtype=np.float64)
    uu, vv = np.meshgrid(u, v)
    cam = np.stack(
        [(uu - intr.cx) / intr.fx, (vv - intr.cy) / intr.fy, np.ones_like(uu)], axis=-1
    )
    dirs = cam.reshape(-1, 3) @ pose.rotation.T
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    origins = np.broadcast_to(pose.translation, dirs.shape).copy()
    return origins, dirs


def render_view(
    pose: CameraPose,
    intr: Intrinsics,
    field,
    bound: float | None = None,
    cfg: RenderConfig | None = None,
    occupancy=None,
) -> np.ndarray:
    """Render a full view to an H x W x 3 float image in [0, 1].

    `field` is either FieldParams or a callable (points, dirs) -> (rgb, sigma)
    (the analytic-scene quadrature path). Rays missing the scene cube stay
    black. Deterministic for a fixed seed and config.
    """
    cfg = cfg or RenderConfig()
    if isinstance(field, FieldParams):
        params = field
        if bound is None:
            bound = params.grid.scene_bound

        def eval_fn(p, d):
            return field_eval(p, d, params)
    else:
        eval_fn = field
        if bound is None:
            raise ValueError("bound is required for analytic fields")

    origins, dirs = pixel_rays(pose, intr)
    near, far, hit = intersect_cube(origins, dirs, bound)
    out = np.zeros((origins.shape[0], 3), dtype=np.float64)

    rng = None if cfg.sampling == "midpoint" else np.random.default_rng(cfg.seed)
    hit_idx = np.nonzero(hit)[0]
    n = cfg.samples_per_ray
    for lo in range(0, hit_idx.size, cfg.chunk_rays):
        sel = hit_idx[lo : lo + cfg.chunk_rays]
        t = sample_stratified(near[sel], far[sel], n, rng)
        deltas = deltas_from_t(t, far[sel])
        pts = origins[sel, None, :] + t[..., None] * dirs[sel, None, :]
        pts = np.clip(pts, -bound, bound).reshape(-1, 3)
        pdirs = np.repeat(dirs[sel], n, axis=0)

        if occupancy is not None:
            mask = occupancy.query(pts)
            rgb = np.zeros((pts.shape[0], 3), dtype=np.float64)
            sigma = np.zeros(pts.shape[0], dtype=np.float64)
            if mask.any():
                rgb_m, sigma_m = eval_fn(pts[mask], pdirs[mask])
                rgb[mask] = rgb_m
                sigma[mask] = sigma_m
        else:
            rgb, sigma = eval_fn(pts, pdirs)

        colors = np.asarray(rgb).reshape(len(sel), n, 3)
        dens = np.asarray(sigma).reshape(len(sel), n)
        chunk_out, _ = composite(dens, deltas.astype(dens.dtype), colors)
        out[sel] = chunk_out

    return np.clip(out.reshape(intr.height, intr.width, 3), 0.0, 1.0)
