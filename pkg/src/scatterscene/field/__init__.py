"""Hash-encoded neural radiance field trained by volume rendering."""

from .camera import Intrinsics, RenderConfig, pixel_rays, render_view
from .checkpoint import load_checkpoint, save_checkpoint
from .encoding import (
    HashGridConfig,
    encode_direction,
    encode_points,
    hash_corners,
    init_tables,
)
from .model import (
    FieldParams,
    RayBatch,
    backward,
    field_eval,
    init_field,
    loss_and_grads,
    photometric_loss,
    render_batch,
)
from .render import (
    Ray,
    RaySamples,
    composite,
    deltas_from_t,
    intersect_cube,
    render_ray,
    sample_ray,
    sample_stratified,
    transmittance,
)
from .training import (
    Adam,
    OccupancyGrid,
    RayDataset,
    TrainConfig,
    Trainer,
    lr_at,
    sgd_step,
    train_step,
)

__all__ = [
    "Adam",
    "FieldParams",
    "HashGridConfig",
    "Intrinsics",
    "OccupancyGrid",
    "Ray",
    "RayBatch",
    "RayDataset",
    "RaySamples",
    "RenderConfig",
    "TrainConfig",
    "Trainer",
    "backward",
    "composite",
    "deltas_from_t",
    "encode_direction",
    "encode_points",
    "field_eval",
    "hash_corners",
    "init_field",
    "init_tables",
    "intersect_cube",
    "load_checkpoint",
    "loss_and_grads",
    "lr_at",
    "photometric_loss",
    "pixel_rays",
    "render_batch",
    "render_ray",
    "render_view",
    "sample_ray",
    "sample_stratified",
    "save_checkpoint",
    "sgd_step",
    "train_step",
    "transmittance",
]
