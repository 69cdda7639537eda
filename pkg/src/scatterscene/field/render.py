"""Ray sampling, transmittance and emission-absorption compositing.

Rays are integrated by stratified sampling over [near, far]: one uniform
draw per equal sub-interval. The composite is the usual discrete estimate

    C = sum_i T_i (1 - exp(-sigma_i delta_i)) c_i,
    T_i = exp(-sum_{j<i} sigma_j delta_j),

whose weights telescope to 1 - T_{N+1}, so they never exceed a partition
of unity. The backward pass is derived in closed form (reversed running
sums) rather than by tape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Ray:
    origin: np.ndarray
    direction: np.ndarray  # unit
    near: float
    far: float

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64)
        self.direction = np.asarray(self.direction, dtype=np.float64)
        norm = float(np.linalg.norm(self.direction))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"ray direction norm {norm:.8f} is not 1")
        if not (np.isfinite(self.near) and np.isfinite(self.far) and self.near < self.far):
            raise ValueError("ray needs finite near < far")


@dataclass
class RaySamples:
    """Samples along one ray; colours may be filled after field evaluation."""

    t: np.ndarray  # (N,) strictly increasing in [near, far]
    deltas: np.ndarray  # (N,) spacings, last one closes the gap to far
    densities: np.ndarray  # (N,) >= 0
    colors: np.ndarray  # (N, 3) in [0, 1]


def intersect_cube(
    origins: np.ndarray, dirs: np.ndarray, bound: float, min_near: float = 0.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Slab test against the axis-aligned cube [-bound, bound]^3.

    Returns (near, far, hit). Rays that miss get near=far=0 and hit=False.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        t0 = (-bound - origins) * inv
        t1 = (bound - origins) * inv
    lo = np.where(np.isnan(t0), -np.inf, np.minimum(t0, t1))
    hi = np.where(np.isnan(t1), np.inf, np.maximum(t0, t1))
    # parallel rays outside a slab never hit it
    parallel = dirs == 0.0
    outside = parallel & ((origins < -bound) | (origins > bound))
    lo = np.where(outside, np.inf, lo)
    near = np.maximum(lo.max(axis=-1), min_near)
    far = hi.min(axis=-1)
    hit = near < far
    near = np.where(hit, near, 0.0)
    far = np.where(hit, far, 0.0)
    return near, far, hit


def sample_stratified(
    near: np.ndarray, far: np.ndarray, n: int, rng: np.random.Generator | None
) -> np.ndarray:
    """One t per equal sub-interval of [near, far]; rng=None takes midpoints."""
    if n < 1:
        raise ValueError("need at least one sample per ray")
    near = np.atleast_1d(np.asarray(near, dtype=np.float64))
    far = np.atleast_1d(np.asarray(far, dtype=np.float64))
    rays = near.shape[0]
    if rng is None:
        u = np.full((rays, n), 0.5)
    else:
        u = rng.random((rays, n))
    edges = np.arange(n, dtype=np.float64)[None, :]
    width = (far - near)[:, None] / n
    return near[:, None] + (edges + u) * width


def sample_ray(ray: Ray, n: int, rng: np.random.Generator | None) -> np.ndarray:
    """Stratified t values for a single ray (deterministic given the seed)."""
    return sample_stratified(
        np.array([ray.near]), np.array([ray.far]), n, rng
    )[0]


def deltas_from_t(t: np.ndarray, far: np.ndarray) -> np.ndarray:
    """Spacings between consecutive samples; the last closes the far gap."""
    t = np.atleast_2d(t)
    far = np.atleast_1d(far)
    d = np.empty_like(t)
    d[:, :-1] = t[:, 1:] - t[:, :-1]
    d[:, -1] = far - t[:, -1]
    return d


def transmittance(densities: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """T_i = exp(-sum_{j<i} sigma_j delta_j); T_1 = 1, non-increasing."""
    densities = np.asarray(densities)
    deltas = np.asarray(deltas)
    if densities.shape != deltas.shape:
        raise ValueError("densities and deltas must share a shape")
    tau = densities * deltas
    accum = np.cumsum(tau, axis=-1)
    excl = np.empty_like(accum)
    excl[..., 0] = 0.0
    excl[..., 1:] = accum[..., :-1]
    return np.exp(-excl)


def composite(
    densities: np.ndarray, deltas: np.ndarray, colors: np.ndarray
) -> tuple[np.ndarray, dict]:
    """Emission-absorption estimate per ray; returns colour and a cache."""
    trans = transmittance(densities, deltas)
    alpha = 1.0 - np.exp(-densities * deltas)
    weights = trans * alpha
    out = np.einsum("rn,rnc->rc", weights, colors)
    cache = {"trans": trans, "alpha": alpha, "weights": weights}
    return out, cache


def composite_backward(
    densities: np.ndarray,
    deltas: np.ndarray,
    colors: np.ndarray,
    cache: dict,
    dout: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form gradients of the composite w.r.t. densities and colours.

    d/dsigma_i = delta_i (T_i e^{-sigma_i delta_i} g.c_i - sum_{k>i} w_k g.c_k)
    d/dc_i = w_i g
    """
    weights = cache["weights"]
    trans = cache["trans"]
    gc = np.einsum("rnc,rc->rn", colors, dout)  # per-sample g . c
    wgc = weights * gc
    # exclusive suffix sum of w_k g.c_k
    suffix = np.cumsum(wgc[..., ::-1], axis=-1)[..., ::-1] - wgc
    surviving = trans - weights  # T_i e^{-sigma_i delta_i}
    dsigma = deltas * (surviving * gc - suffix)
    dcolors = weights[..., None] * dout[:, None, :]
    return dsigma, dcolors


def render_ray(samples: RaySamples) -> np.ndarray:
    """Composite one ray's samples to an RGB colour."""
    out, _ = composite(
        samples.densities[None, :], samples.deltas[None, :], samples.colors[None, :, :]
    )
    return out[0]
