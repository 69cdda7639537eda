"""Multi-resolution hash-grid position encoding and direction encoding.

Each level hashes the 8 lattice corners around a point into a fixed-size
feature table (XOR of coordinate-prime products, masked to the table size)
and blends their features trilinearly; levels are concatenated. The lookup
is linear in the table entries, so its backward pass just routes feature
gradients through the trilinear weights into the touched slots.

The gather/scatter loops are the training hot path; they run as numba
kernels when numba is importable and fall back to vectorised numpy
otherwise (identical results, single-threaded and deterministic either way).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


_PRIMES = (np.uint32(1), np.uint32(2654435761), np.uint32(805459861))

# corner offsets of a unit cell, bit-ordered (z fastest)
_CORNERS = np.array(
    [[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=np.int64
)


@dataclass
class HashGridConfig:
    levels: int = 8
    features_per_level: int = 2
    table_size_log2: int = 14
    base_resolution: int = 16
    growth_factor: float | None = None  # None: chosen so the finest level is 256
    scene_bound: float = 1.0  # half-extent of the scene cube
    finest_resolution: int = 256

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.table_size_log2 < 4:
            raise ValueError("table_size_log2 must be >= 4")
        if self.base_resolution < 2:
            raise ValueError("base_resolution must be >= 2")
        if self.scene_bound <= 0:
            raise ValueError("scene_bound must be positive")
        if self.growth_factor is None:
            if self.levels == 1:
                self.growth_factor = 1.0
            else:
                self.growth_factor = math.exp(
                    (math.log(self.finest_resolution) - math.log(self.base_resolution))
                    / (self.levels - 1)
                )
        if self.growth_factor < 1.0:
            raise ValueError("growth_factor must be >= 1")

    @property
    def table_size(self) -> int:
        return 1 << self.table_size_log2

    @property
    def feature_dim(self) -> int:
        return self.levels * self.features_per_level

    def resolutions(self) -> list[int]:
        return [
            int(math.floor(self.base_resolution * self.growth_factor**level))
            for level in range(self.levels)
        ]


def hash_corners(ijk: np.ndarray, table_size: int) -> np.ndarray:
    """XOR-of-primes spatial hash, masked to a power-of-two table."""
    v = ijk.astype(np.uint32)
    h = v[..., 0] * _PRIMES[0] ^ v[..., 1] * _PRIMES[1] ^ v[..., 2] * _PRIMES[2]
    return (h & np.uint32(table_size - 1)).astype(np.int64)


def init_tables(cfg: HashGridConfig, rng: np.random.Generator, scale: float = 1e-4,
                dtype=np.float32) -> np.ndarray:
    shape = (cfg.levels, cfg.table_size, cfg.features_per_level)
    return rng.uniform(-scale, scale, size=shape).astype(dtype)


@njit(cache=True, fastmath=True)
def _fwd_kernel(x01, resolutions, mask, tables, feats, idx, w):  # pragma: no cover
    n = x01.shape[0]
    levels = tables.shape[0]
    nf = tables.shape[2]
    p1 = np.uint32(2654435761)
    p2 = np.uint32(805459861)
    for lv in range(levels):
        res = resolutions[lv]
        tab = tables[lv]
        for i in range(n):
            px = x01[i, 0] * res
            py = x01[i, 1] * res
            pz = x01[i, 2] * res
            cx = np.int64(px)
            cy = np.int64(py)
            cz = np.int64(pz)
            fx = px - cx
            fy = py - cy
            fz = pz - cz
            gx = 1.0 - fx
            gy = 1.0 - fy
            gz = 1.0 - fz
            x0 = np.uint32(cx)
            x1 = np.uint32(cx + 1)
            y0 = np.uint32(cy) * p1
            y1 = np.uint32(cy + 1) * p1
            z0 = np.uint32(cz) * p2
            z1 = np.uint32(cz + 1) * p2
            k = 0
            for xi in range(2):
                xm = x0 if xi == 0 else x1
                wx = gx if xi == 0 else fx
                for yi in range(2):
                    ym = y0 if yi == 0 else y1
                    wxy = wx * (gy if yi == 0 else fy)
                    for zi in range(2):
                        zm = z0 if zi == 0 else z1
                        slot = np.int64((xm ^ ym ^ zm) & mask)
                        wc = wxy * (gz if zi == 0 else fz)
                        idx[lv, i, k] = slot
                        w[lv, i, k] = wc
                        for f in range(nf):
                            feats[i, lv, f] += wc * tab[slot, f]
                        k += 1


@njit(cache=True)
def _bwd_kernel(idx, w, g, grad):  # pragma: no cover
    levels, n, _ = idx.shape
    nf = g.shape[2]
    for lv in range(levels):
        for i in range(n):
            for k in range(8):
                slot = idx[lv, i, k]
                wc = w[lv, i, k]
                for f in range(nf):
                    grad[lv, slot, f] += wc * g[i, lv, f]


def _normalise(x: np.ndarray, bound: float) -> np.ndarray:
    return np.clip((np.asarray(x, dtype=np.float64) + bound) / (2.0 * bound), 0.0, 1.0)


def encode_points(
    x: np.ndarray, cfg: HashGridConfig, tables: np.ndarray
) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray]]:
    """Hash-encode points in the scene cube.

    Returns the (N, levels*F) feature matrix and a cache of corner slot
    indices and trilinear weights, shaped (levels, N, 8), for the backward
    pass.
    """
    x01 = _normalise(x, cfg.scene_bound)
    n = x01.shape[0]
    nf = cfg.features_per_level
    resolutions = np.asarray(cfg.resolutions(), dtype=np.float64)

    feats = np.zeros((n, cfg.levels, nf), dtype=tables.dtype)
    idx = np.empty((cfg.levels, n, 8), dtype=np.int64)
    w = np.empty((cfg.levels, n, 8), dtype=tables.dtype)

    if _HAVE_NUMBA:
        _fwd_kernel(x01, resolutions, np.uint32(cfg.table_size - 1), tables, feats, idx, w)
    else:
        _fwd_numpy(x01, resolutions, cfg.table_size, tables, feats, idx, w)
    return feats.reshape(n, -1), (idx, w)


def _fwd_numpy(x01, resolutions, table_size, tables, feats, idx, w):
    mask = np.uint32(table_size - 1)
    for lv, res in enumerate(resolutions):
        pos = x01 * res
        cell = np.floor(pos)
        frac = (pos - cell).astype(tables.dtype)
        cu = cell.astype(np.uint32)
        axes = []
        for d in range(3):
            m0 = cu[:, d] * _PRIMES[d]
            m1 = (cu[:, d] + np.uint32(1)) * _PRIMES[d]
            axes.append(((m0, 1.0 - frac[:, d]), (m1, frac[:, d])))
        k = 0
        for xm, wx in axes[0]:
            for ym, wy in axes[1]:
                wxy = wx * wy
                for zm, wz in axes[2]:
                    idx[lv, :, k] = ((xm ^ ym ^ zm) & mask).astype(np.int64)
                    w[lv, :, k] = wxy * wz
                    k += 1
        feats[:, lv, :] = np.einsum("nc,ncf->nf", w[lv], tables[lv][idx[lv]])


def encode_backward(
    cache: tuple[np.ndarray, np.ndarray],
    dfeats: np.ndarray,
    cfg: HashGridConfig,
    dtype=np.float32,
) -> np.ndarray:
    """Scatter feature gradients back into the hash tables.

    Slots no sampled point touched receive exactly zero.
    """
    idx, w = cache
    n = dfeats.shape[0]
    nf = cfg.features_per_level
    g = np.ascontiguousarray(dfeats.reshape(n, cfg.levels, nf), dtype=dtype)
    grad = np.zeros((cfg.levels, cfg.table_size, nf), dtype=dtype)
    if _HAVE_NUMBA:
        _bwd_kernel(idx, w.astype(dtype, copy=False), g, grad)
    else:
        offsets = np.arange(nf, dtype=np.int64)
        for lv in range(cfg.levels):
            contrib = w[lv][:, :, None] * g[:, lv, None, :]
            flat = (idx[lv][:, :, None] * nf + offsets).ravel()
            acc = np.bincount(flat, weights=contrib.ravel(), minlength=cfg.table_size * nf)
            grad[lv] = acc.reshape(cfg.table_size, nf).astype(dtype)
    return grad


def encode_direction(d: np.ndarray, order: int) -> np.ndarray:
    """Frequency encoding of unit directions: raw + sin/cos of 2^j scalings."""
    parts = [d]
    for j in range(order):
        scaled = (2.0**j) * d
        parts.append(np.sin(scaled))
        parts.append(np.cos(scaled))
    return np.concatenate(parts, axis=-1)


def direction_dim(order: int) -> int:
    return 3 + 6 * order
