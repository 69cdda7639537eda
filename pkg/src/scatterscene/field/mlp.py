"""The tiny two-head MLP behind the radiance field, with explicit backward.

Density head: hash features -> hidden (ReLU) -> softplus density.
Colour head: [hidden, direction encoding] -> hidden (ReLU) -> sigmoid RGB.
Output layers start at zero (density softplus(0) ~ 0.693, colour 0.5), which
keeps the initial field non-degenerate while gradients still flow.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np
from scipy.special import expit

from ..errors import NonFiniteError


@dataclass
class MlpParams:
    w0: np.ndarray  # (in_dim, hidden)
    b0: np.ndarray  # (hidden,)
    wd: np.ndarray  # (hidden, 1)
    bd: np.ndarray  # (1,)
    wc1: np.ndarray  # (hidden + dir_dim, hidden)
    bc1: np.ndarray  # (hidden,)
    wc2: np.ndarray  # (hidden, 3)
    bc2: np.ndarray  # (3,)

    def arrays(self) -> list[np.ndarray]:
        return [getattr(self, f.name) for f in fields(self)]

    @property
    def hidden(self) -> int:
        return self.w0.shape[1]


def init_mlp(
    rng: np.random.Generator, in_dim: int, hidden: int, dir_dim: int, dtype=np.float32
) -> MlpParams:
    def he(n_in, n_out):
        return (rng.standard_normal((n_in, n_out)) * np.sqrt(2.0 / n_in)).astype(dtype)

    return MlpParams(
        w0=he(in_dim, hidden),
        b0=np.zeros(hidden, dtype=dtype),
        wd=np.zeros((hidden, 1), dtype=dtype),
        bd=np.zeros(1, dtype=dtype),
        wc1=he(hidden + dir_dim, hidden),
        bc1=np.zeros(hidden, dtype=dtype),
        wc2=np.zeros((hidden, 3), dtype=dtype),
        bc2=np.zeros(3, dtype=dtype),
    )


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(np.array(0.0, dtype=x.dtype), x)


@dataclass
class MlpCache:
    feats: np.ndarray
    direnc: np.ndarray
    h_pre: np.ndarray
    h: np.ndarray
    d_raw: np.ndarray
    c_pre: np.ndarray
    hc: np.ndarray
    rgb: np.ndarray


def mlp_forward(
    feats: np.ndarray, direnc: np.ndarray, p: MlpParams
) -> tuple[np.ndarray, np.ndarray, MlpCache]:
    """Returns (rgb in [0,1], density >= 0, cache)."""
    hidden = p.hidden
    h_pre = feats @ p.w0 + p.b0
    h = np.maximum(h_pre, 0.0)

    d_raw = (h @ p.wd + p.bd)[:, 0]
    density = softplus(d_raw)

    direnc = direnc.astype(h.dtype, copy=False)
    # wc1 rows split between the trunk features and the direction encoding
    c_pre = h @ p.wc1[:hidden] + direnc @ p.wc1[hidden:] + p.bc1
    hc = np.maximum(c_pre, 0.0)
    rgb = expit(hc @ p.wc2 + p.bc2)

    if not np.all(np.isfinite(density)) or not np.all(np.isfinite(rgb)):
        raise NonFiniteError("field evaluation produced non-finite outputs")
    return rgb, density, MlpCache(feats, direnc, h_pre, h, d_raw, c_pre, hc, rgb)


def mlp_backward(
    cache: MlpCache, p: MlpParams, ddensity: np.ndarray, drgb: np.ndarray
) -> tuple[MlpParams, np.ndarray]:
    """Gradients of the loss w.r.t. MLP weights and the input features."""
    hidden = p.hidden

    g_rgb_raw = drgb * cache.rgb * (1.0 - cache.rgb)
    gwc2 = cache.hc.T @ g_rgb_raw
    gbc2 = g_rgb_raw.sum(axis=0)
    g_cpre = (g_rgb_raw @ p.wc2.T) * (cache.c_pre > 0)
    gwc1 = np.concatenate([cache.h.T @ g_cpre, cache.direnc.T @ g_cpre], axis=0)
    gbc1 = g_cpre.sum(axis=0)
    g_h = g_cpre @ p.wc1[:hidden].T

    g_draw = (ddensity * expit(cache.d_raw))[:, None]
    gwd = cache.h.T @ g_draw
    gbd = g_draw.sum(axis=0)
    g_h = g_h + g_draw @ p.wd.T

    g_hpre = g_h * (cache.h_pre > 0)
    gw0 = cache.feats.T @ g_hpre
    gb0 = g_hpre.sum(axis=0)
    dfeats = g_hpre @ p.w0.T

    grads = MlpParams(gw0, gb0, gwd, gbd, gwc1, gbc1, gwc2, gbc2)
    return grads, dfeats
