"""Image quality measures: PSNR, SSIM, UCIQE and UIQM.

PSNR/SSIM are full-reference; UCIQE/UIQM are no-reference scores tuned for
scattering-medium footage. UCIQE runs in CIELab with L and chroma scaled by
1/100; UIQM runs on the 0..255 scale its published coefficients were
calibrated for. Both choices are recorded in `metric_metadata`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate, correlate1d

from .colorspace import luma, rgb_to_lab
from .errors import ShapeMismatchError, TooSmallError

PSNR_CAP_DB = 99.0

# UCIQE coefficients (chroma spread / luminance contrast / mean saturation).
UCIQE_C = (0.4680, 0.2745, 0.2576)
# UIQM coefficients (colourfulness / sharpness / contrast).
UIQM_C = (0.0282, 0.2953, 3.5753)
UIQM_TRIM = 0.1
UIQM_BLOCK = 8
_PLIP_GAMMA = 1026.0


def metric_metadata() -> dict:
    """Conventions a report needs to make scores comparable."""
    return {
        "uciqe_colorspace": "CIELab (sRGB, D65), L and chroma scaled by 1/100",
        "uciqe_contrast": "99th minus 1st luminance percentile",
        "uiqm_scale": "0..255",
        "uiqm_trim_fraction": UIQM_TRIM,
        "uiqm_block_size": UIQM_BLOCK,
        "ssim_window": "Gaussian 11x11, sigma 1.5, luminance plane",
    }


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """10*log10(1/MSE) for unit-range images, capped at 99 dB when MSE = 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(1.0 / mse), PSNR_CAP_DB)


@dataclass
class SsimConfig:
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0
    window: int = 11
    sigma: float = 1.5

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    w = np.exp(-0.5 * (x / sigma) ** 2)
    return w / w.sum()


def _local_mean(x: np.ndarray, w1d: np.ndarray) -> np.ndarray:
    # Constant padding then crop equals a 'valid' windowed mean.
    r = len(w1d) // 2
    f = correlate1d(x, w1d, axis=0, mode="constant")
    f = correlate1d(f, w1d, axis=1, mode="constant")
    return f[r : x.shape[0] - r, r : x.shape[1] - r]


def ssim(
    a: np.ndarray,
    b: np.ndarray,
    cfg: SsimConfig | None = None,
    global_stats: bool = False,
) -> float:
    """Mean local structural similarity on the luminance plane.

    `global_stats=True` evaluates the formula once with whole-image
    means/variances/covariance instead of Gaussian-window local ones.
    """
    cfg = cfg or SsimConfig()
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_pair(a, b)
    x = luma(a) if a.ndim == 3 else a
    y = luma(b) if b.ndim == 3 else b

    c1 = (cfg.k1 * cfg.dynamic_range) ** 2
    c2 = (cfg.k2 * cfg.dynamic_range) ** 2

    if global_stats:
        mx, my = x.mean(), y.mean()
        vx, vy = x.var(), y.var()
        cov = ((x - mx) * (y - my)).mean()
        return float(
            ((2 * mx * my + c1) * (2 * cov + c2))
            / ((mx * mx + my * my + c1) * (vx + vy + c2))
        )

    if min(x.shape) < cfg.window:
        raise TooSmallError(f"image {x.shape} smaller than SSIM window {cfg.window}")

    w1d = _gaussian_window(cfg.window, cfg.sigma)
    mx = _local_mean(x, w1d)
    my = _local_mean(y, w1d)
    vx = _local_mean(x * x, w1d) - mx * mx
    vy = _local_mean(y * y, w1d) - my * my
    cov = _local_mean(x * y, w1d) - mx * my

    ssim_map = ((2 * mx * my + c1) * (2 * cov + c2)) / (
        (mx * mx + my * my + c1) * (vx + vy + c2)
    )
    return float(ssim_map.mean())


def uciqe(img: np.ndarray) -> float:
    """Weighted sum of chroma spread, luminance contrast and mean saturation."""
    lab = rgb_to_lab(img)
    lum = lab[..., 0] / 100.0
    chroma = np.hypot(lab[..., 1], lab[..., 2]) / 100.0

    sigma_c = float(chroma.std())
    con_l = float(np.percentile(lum, 99) - np.percentile(lum, 1))
    sat = np.divide(chroma, lum, out=np.zeros_like(chroma), where=lum > 0)
    mean_sat = float(sat.mean())

    c1, c2, c3 = UCIQE_C
    return c1 * sigma_c + c2 * con_l + c3 * mean_sat


def _trimmed_mean_var(values: np.ndarray, trim: float) -> tuple[float, float]:
    v = np.sort(values, axis=None)
    t = int(trim * v.size)
    core = v[t : v.size - t]
    mean = float(core.mean())
    var = float(np.mean((core - mean) ** 2))
    return mean, var


def _uicm(r: np.ndarray, g: np.ndarray, b: np.ndarray) -> float:
    rg = r - g
    yb = (r + g) / 2.0 - b
    mu_rg, var_rg = _trimmed_mean_var(rg, UIQM_TRIM)
    mu_yb, var_yb = _trimmed_mean_var(yb, UIQM_TRIM)
    return -0.0268 * math.hypot(mu_rg, mu_yb) + 0.1586 * math.sqrt(var_rg + var_yb)


_SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])


def _sobel_magnitude(ch: np.ndarray) -> np.ndarray:
    gx = correlate(ch, _SOBEL_X, mode="reflect")
    gy = correlate(ch, _SOBEL_X.T, mode="reflect")
    return np.hypot(gx, gy)


def _blocks(img: np.ndarray, size: int):
    h, w = img.shape
    for i in range(math.ceil(h / size)):
        for j in range(math.ceil(w / size)):
            yield img[i * size : min((i + 1) * size, h), j * size : min((j + 1) * size, w)]


def _eme(ch: np.ndarray, block: int) -> float:
    # Block min/max floored at 1.0 (0..255 scale) so flat/black blocks score 0.
    total = 0.0
    count = 0
    for blk in _blocks(ch, block):
        mx = max(float(blk.max()), 1.0)
        mn = max(float(blk.min()), 1.0)
        total += math.log(mx / mn)
        count += 1
    return 2.0 / count * total


def _uism(r: np.ndarray, g: np.ndarray, b: np.ndarray) -> float:
    emes = [_eme(ch * _sobel_magnitude(ch), UIQM_BLOCK) for ch in (r, g, b)]
    return 0.299 * emes[0] + 0.587 * emes[1] + 0.114 * emes[2]


def _plip_sub(a: float, b: float) -> float:
    return _PLIP_GAMMA * (a - b) / (_PLIP_GAMMA - b)


def _plip_sum(a: float, b: float) -> float:
    return a + b - a * b / _PLIP_GAMMA


def _logamee(ch: np.ndarray, block: int) -> float:
    s = 0.0
    count = 0
    for blk in _blocks(ch, block):
        mx = float(blk.max())
        mn = float(blk.min())
        bottom = _plip_sum(mx, mn)
        m = _plip_sub(mx, mn) / bottom if bottom != 0.0 else 0.0
        if m > 0.0:
            s += m * math.log(m)
        count += 1
    w = 1.0 / count
    return _PLIP_GAMMA - _PLIP_GAMMA * (1.0 - s / _PLIP_GAMMA) ** w


def uiqm(img: np.ndarray) -> float:
    """c1*UICM + c2*UISM + c3*UIConM on the 0..255 scale."""
    x = np.asarray(img, dtype=np.float64) * 255.0
    r, g, b = x[..., 0], x[..., 1], x[..., 2]
    uicm = _uicm(r, g, b)
    uism = _uism(r, g, b)
    uiconm = _logamee(luma(x), UIQM_BLOCK)
    c1, c2, c3 = UIQM_C
    return c1 * uicm + c2 * uism + c3 * uiconm
