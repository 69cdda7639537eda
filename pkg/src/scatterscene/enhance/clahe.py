"""Contrast-limited adaptive histogram equalization with tile blending.

The image is split into a tile grid; each tile gets a clipped, redistributed
histogram and a CDF mapping. Pixels are remapped by bilinearly blending the
mappings of the up-to-4 nearest tile centres, which removes tile-boundary
seams. Colour images are processed on the luma plane only, with the two
chroma differences re-attached afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..colorspace import luma, replace_luma


@dataclass
class ClaheConfig:
    tiles_x: int = 4
    tiles_y: int = 4
    clip_limit: float = 2.0  # per-bin cap as a multiple of tile_pixels / bins
    bins: int = 256

    def __post_init__(self):
        if self.tiles_x < 1 or self.tiles_y < 1:
            raise ValueError("tile counts must be >= 1")
        if self.clip_limit <= 0:
            raise ValueError("clip_limit must be positive")
        if self.clip_limit * self.bins < 1:
            raise ValueError("clip_limit * bins must be >= 1 so a count survives")


def _tile_bounds(n: int, tiles: int) -> np.ndarray:
    return np.array([(i * n) // tiles for i in range(tiles + 1)], dtype=np.int64)


def _tile_mappings(plane: np.ndarray, cfg: ClaheConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-tile CDF mappings plus the tile-centre coordinates."""
    h, w = plane.shape
    by = _tile_bounds(h, cfg.tiles_y)
    bx = _tile_bounds(w, cfg.tiles_x)
    bins = cfg.bins
    levels = np.clip((plane * bins).astype(np.int64), 0, bins - 1)

    maps = np.empty((cfg.tiles_y, cfg.tiles_x, bins), dtype=np.float64)
    for ty in range(cfg.tiles_y):
        for tx in range(cfg.tiles_x):
            tile = levels[by[ty] : by[ty + 1], bx[tx] : bx[tx + 1]]
            n_pix = tile.size
            hist = np.bincount(tile.ravel(), minlength=bins).astype(np.float64)
            tau = cfg.clip_limit * n_pix / bins
            clipped = np.minimum(hist, tau)
            # Single-pass redistribution: spread the excess uniformly.
            clipped += (n_pix - clipped.sum()) / bins
            maps[ty, tx] = np.cumsum(clipped) / n_pix

    centers_y = (by[:-1] + by[1:] - 1) / 2.0
    centers_x = (bx[:-1] + bx[1:] - 1) / 2.0
    return maps, centers_y, centers_x


def _axis_interp(coords: np.ndarray, centers: np.ndarray):
    """Bracketing tile indices and blend weight along one axis."""
    n = len(centers)
    if n == 1:
        zero = np.zeros(len(coords), dtype=np.int64)
        return zero, zero, np.zeros(len(coords))
    hi = np.clip(np.searchsorted(centers, coords, side="right"), 1, n - 1)
    lo = hi - 1
    wgt = np.clip((coords - centers[lo]) / (centers[hi] - centers[lo]), 0.0, 1.0)
    return lo, hi, wgt


def clahe_plane(plane: np.ndarray, cfg: ClaheConfig | None = None) -> np.ndarray:
    """CLAHE on a single plane in [0, 1]."""
    cfg = cfg or ClaheConfig()
    h, w = plane.shape
    if h < cfg.tiles_y or w < cfg.tiles_x:
        raise ValueError(f"plane {w}x{h} smaller than the {cfg.tiles_x}x{cfg.tiles_y} tiling")

    maps, centers_y, centers_x = _tile_mappings(plane, cfg)
    lo_y, hi_y, wy = _axis_interp(np.arange(h, dtype=np.float64), centers_y)
    lo_x, hi_x, wx = _axis_interp(np.arange(w, dtype=np.float64), centers_x)

    bins = cfg.bins
    levels = np.clip((plane * bins).astype(np.int64), 0, bins - 1)

    ly = lo_y[:, None]
    hy = hi_y[:, None]
    lx = lo_x[None, :]
    hx = hi_x[None, :]
    wy = wy[:, None]
    wx = wx[None, :]

    top = (1.0 - wx) * maps[ly, lx, levels] + wx * maps[ly, hx, levels]
    bot = (1.0 - wx) * maps[hy, lx, levels] + wx * maps[hy, hx, levels]
    out = (1.0 - wy) * top + wy * bot
    return np.clip(out, 0.0, 1.0)


def clahe(img: np.ndarray, cfg: ClaheConfig | None = None) -> np.ndarray:
    """CLAHE on the luma plane of an RGB image (chroma preserved)."""
    cfg = cfg or ClaheConfig()
    if img.ndim == 2:
        return clahe_plane(img, cfg)
    y = clahe_plane(luma(img), cfg)
    return replace_luma(img, y)
