"""Image loading, saving and validation.

All internal math runs on H x W x 3 float arrays with samples in [0, 1];
8-bit PNG/JPEG conversion happens only here, at the I/O boundary.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import TooSmallError

MIN_SIDE = 8  # minimum for the 4x4 CLAHE tiling


def validate_image(img: np.ndarray, min_side: int = MIN_SIDE) -> np.ndarray:
    """Check an array is a valid float image; returns it unchanged."""
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected H x W x 3 image, got shape {arr.shape}")
    if arr.shape[0] < min_side or arr.shape[1] < min_side:
        raise TooSmallError(
            f"image {arr.shape[1]}x{arr.shape[0]} below minimum {min_side}x{min_side}"
        )
    if not np.issubdtype(arr.dtype, np.floating):
        raise ValueError(f"expected floating samples, got dtype {arr.dtype}")
    return arr


def load_image(path) -> np.ndarray:
    """Read an 8-bit PNG/JPEG into a float32 H x W x 3 array in [0, 1]."""
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        arr = np.asarray(rgb, dtype=np.float32) / 255.0
    return arr


def save_image(img: np.ndarray, path) -> None:
    """Write a float image in [0, 1] as an 8-bit file; format from the suffix."""
    arr = np.clip(np.asarray(img), 0.0, 1.0)
    data = np.rint(arr * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path)


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
