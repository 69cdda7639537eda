"""Colour space helpers: BT.601 luma/chroma split and CIELab conversion."""

from __future__ import annotations

import numpy as np

# BT.601 luma weights; they sum to 1 so adding a luma delta to every channel
# shifts the luma by exactly that delta.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def luma(img: np.ndarray) -> np.ndarray:
    """Y = 0.299 R + 0.587 G + 0.114 B on the last axis."""
    return img @ LUMA_WEIGHTS.astype(img.dtype)


def replace_luma(img: np.ndarray, new_y: np.ndarray) -> np.ndarray:
    """Swap the luma plane, keeping the two chroma differences fixed.

    Equivalent to adding (new_y - Y) to every channel; output is clipped
    to [0, 1].
    """
    delta = new_y - luma(img)
    return np.clip(img + delta[..., None], 0.0, 1.0)


def _srgb_to_linear(c: np.ndarray) -> np.ndarray:
    c = np.clip(c, 0.0, 1.0)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


# sRGB -> XYZ (D65)
_RGB2XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
# Whitepoint taken as the matrix row sums (published digits round the true
# D65 values); keeps the gray axis at exactly zero chroma.
_D65 = _RGB2XYZ.sum(axis=1)


def rgb_to_lab(img: np.ndarray) -> np.ndarray:
    """sRGB in [0,1] -> CIELab (L in [0,100], a/b roughly [-110, 110])."""
    lin = _srgb_to_linear(np.asarray(img, dtype=np.float64))
    xyz = lin @ _RGB2XYZ.T
    ratio = xyz / _D65

    eps = 216.0 / 24389.0
    kappa = 24389.0 / 27.0
    f = np.where(ratio > eps, np.cbrt(ratio), (kappa * ratio + 16.0) / 116.0)

    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    lab = np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)
    return lab
