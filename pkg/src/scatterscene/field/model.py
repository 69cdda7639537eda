"""The trainable radiance field: parameters, evaluation, loss and gradients."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import NonFiniteError, ShapeMismatchError
from .encoding import (
    HashGridConfig,
    direction_dim,
    encode_backward,
    encode_direction,
    encode_points,
    init_tables,
)
from .mlp import MlpParams, init_mlp, mlp_backward, mlp_forward
from .render import composite, composite_backward

PARAM_ORDER = ("tables", "w0", "b0", "wd", "bd", "wc1", "bc1", "wc2", "bc2")


@dataclass
class FieldParams:
    grid: HashGridConfig
    tables: np.ndarray  # (levels, table_size, features_per_level)
    mlp: MlpParams
    direction_order: int = 2

    def arrays(self) -> list[np.ndarray]:
        """Trainable arrays in declaration order (checkpoint layout)."""
        return [self.tables, *self.mlp.arrays()]

    def astype(self, dtype) -> "FieldParams":
        mlp = MlpParams(*[a.astype(dtype) for a in self.mlp.arrays()])
        return FieldParams(self.grid, self.tables.astype(dtype), mlp, self.direction_order)

    def n_params(self) -> int:
        return sum(a.size for a in self.arrays())


def init_field(
    cfg: HashGridConfig,
    rng: np.random.Generator,
    hidden: int = 64,
    direction_order: int = 2,
    dtype=np.float32,
) -> FieldParams:
    tables = init_tables(cfg, rng, dtype=dtype)
    mlp = init_mlp(rng, cfg.feature_dim, hidden, direction_dim(direction_order), dtype)
    return FieldParams(cfg, tables, mlp, direction_order)


def field_eval(
    x: np.ndarray, d: np.ndarray, params: FieldParams
) -> tuple[np.ndarray, np.ndarray]:
    """(colour, density) at positions x viewed along unit directions d."""
    x = np.atleast_2d(x)
    d = np.atleast_2d(d)
    feats, _ = encode_points(x, params.grid, params.tables)
    direnc = encode_direction(d, params.direction_order)
    rgb, density, _ = mlp_forward(feats, direnc, params.mlp)
    return rgb, density


@dataclass
class RayBatch:
    origins: np.ndarray  # (R, 3)
    dirs: np.ndarray  # (R, 3) unit
    t: np.ndarray  # (R, N) sample positions
    deltas: np.ndarray  # (R, N)
    ref: np.ndarray  # (R, 3) reference colours


def photometric_loss(predicted: np.ndarray, reference: np.ndarray) -> float:
    """Mean over rays of the squared L2 colour error (summed over channels)."""
    predicted = np.asarray(predicted)
    reference = np.asarray(reference)
    if predicted.shape != reference.shape:
        raise ShapeMismatchError(
            f"batch shapes differ: {predicted.shape} vs {reference.shape}"
        )
    diff = predicted.astype(np.float64) - reference.astype(np.float64)
    return float(np.mean(np.sum(diff * diff, axis=-1)))


def _field_points(batch: RayBatch, bound: float):
    pts = batch.origins[:, None, :] + batch.t[..., None] * batch.dirs[:, None, :]
    return np.clip(pts, -bound, bound)


def render_batch(
    params: FieldParams,
    batch: RayBatch,
    keep_cache: bool = False,
    active=None,
) -> tuple[np.ndarray, dict | None]:
    """Render a batch of rays; optionally keep every intermediate for backward.

    `active`, when given, maps points to a boolean mask; inactive points are
    treated as empty space (density 0) and skip field evaluation entirely.
    """
    rays, n = batch.t.shape
    dtype = params.tables.dtype
    pts = _field_points(batch, params.grid.scene_bound).reshape(-1, 3)
    # direction is constant along a ray: encode per ray, repeat per sample
    direnc = np.repeat(
        encode_direction(batch.dirs, params.direction_order).astype(dtype), n, axis=0
    )

    mask = None
    if active is not None:
        mask = np.asarray(active(pts), dtype=bool)
        pts = pts[mask]
        direnc = direnc[mask]

    feats, enc_cache = encode_points(pts, params.grid, params.tables)
    rgb, density, mlp_cache = mlp_forward(feats, direnc, params.mlp)

    if mask is not None:
        full_sigma = np.zeros(rays * n, dtype=dtype)
        full_rgb = np.zeros((rays * n, 3), dtype=dtype)
        full_sigma[mask] = density
        full_rgb[mask] = rgb
        density, rgb = full_sigma, full_rgb

    sigma = density.reshape(rays, n)
    colors = rgb.reshape(rays, n, 3)
    out, comp_cache = composite(sigma, batch.deltas.astype(sigma.dtype), colors)

    if not keep_cache:
        return out, None
    return out, {
        "enc": enc_cache,
        "mlp": mlp_cache,
        "comp": comp_cache,
        "sigma": sigma,
        "colors": colors,
        "mask": mask,
    }


def loss_and_grads(
    params: FieldParams, batch: RayBatch, active=None
) -> tuple[float, FieldParams]:
    """Photometric loss and its exact reverse-mode gradient.

    The gradient structure mirrors FieldParams; hash slots untouched by the
    batch carry exactly zero.
    """
    rays, n = batch.t.shape
    out, cache = render_batch(params, batch, keep_cache=True, active=active)
    loss = photometric_loss(out, batch.ref)
    if not np.isfinite(loss):
        raise NonFiniteError("non-finite loss")

    dtype = params.tables.dtype
    dout = (2.0 / rays) * (out - batch.ref.astype(out.dtype))

    dsigma, dcolors = composite_backward(
        cache["sigma"], batch.deltas.astype(dtype), cache["colors"], cache["comp"], dout
    )
    dsigma = dsigma.reshape(-1)
    dcolors = dcolors.reshape(-1, 3)
    if cache["mask"] is not None:
        dsigma = dsigma[cache["mask"]]
        dcolors = dcolors[cache["mask"]]
    mlp_grads, dfeats = mlp_backward(cache["mlp"], params.mlp, dsigma, dcolors)
    table_grads = encode_backward(cache["enc"], dfeats, params.grid, dtype=dtype)

    grads = FieldParams(params.grid, table_grads, mlp_grads, params.direction_order)
    return loss, grads


def backward(params: FieldParams, batch: RayBatch) -> FieldParams:
    """Gradient of the batch loss w.r.t. every trainable value."""
    return loss_and_grads(params, batch)[1]
