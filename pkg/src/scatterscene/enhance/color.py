"""Statistical colour-cast correction for scattering-medium frames."""

from __future__ import annotations

import warnings

import numpy as np

from ..errors import ZeroSpreadWarning
from ..imageio import validate_image

DEFAULT_MU = 2.5
_SPREAD_FLOOR = 1e-12


def color_correct(img: np.ndarray, mu: float = DEFAULT_MU) -> np.ndarray:
    """Re-centre each channel at mid-gray and stretch by its spread.

    Each sample maps to 0.5 * (1 + (s - mean) / (mu * std)), clamped to
    [0, 1]; mu regulates the saturation of the stretch. A perfectly flat
    channel has no spread to normalise by, so it returns constant 0.5 and
    emits a ZeroSpreadWarning.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    img = validate_image(img, min_side=1)  # no tiling, so no 8x8 floor
    out = np.empty_like(img, dtype=np.float64)
    for c in range(3):
        plane = img[..., c]
        mean = plane.mean()
        std = plane.std()
        if std <= _SPREAD_FLOOR:
            warnings.warn(
                f"channel {c} has zero spread; returning mid-gray", ZeroSpreadWarning
            )
            out[..., c] = 0.5
            continue
        out[..., c] = 0.5 * (1.0 + (plane - mean) / (mu * std))
    return np.clip(out, 0.0, 1.0).astype(img.dtype)
