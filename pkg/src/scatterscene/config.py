"""Pipeline configuration: a flat dotted-key tree loaded from JSON.

Example config file:

    {
      "scene.synthetic": "sphere",
      "scene.views": 12,
      "scene.size": 64,
      "stages": ["keyframes", "train", "render", "metrics"],
      "enhance.mu": 2.5,
      "clahe.tiles": [4, 4],
      "clahe.clip_limit": 2.0,
      "retinex.iterations": 8,
      "keyframes.window": 15,
      "field.scene_bound": 1.0,
      "train.steps": 1500,
      "heldout.every": 8
    }

Unknown keys are rejected (exit code 2 from the CLI).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .enhance import DEFAULT_MU, DEFAULT_ORDER, ClaheConfig, RetinexConfig
from .errors import ConfigError
from .field import HashGridConfig, TrainConfig
from .keyframe import SelectionConfig
from .metrics import SsimConfig

ALL_STAGES = ("enhance", "keyframes", "train", "render", "metrics")


@dataclass
class PipelineConfig:
    stages: tuple[str, ...] = ALL_STAGES
    seed: int = 0
    deterministic: bool = False
    out_dir: str = "out"

    # scene source (exactly one of: synthetic, transforms, colmap pair)
    synthetic: str | None = None
    synthetic_views: int = 12
    synthetic_size: int = 64
    transforms: str | None = None
    colmap_cameras: str | None = None
    colmap_images: str | None = None
    image_root: str | None = None  # directory image paths are relative to

    mu: float = DEFAULT_MU
    enhance_order: tuple[str, ...] = DEFAULT_ORDER
    clahe: ClaheConfig = field(default_factory=ClaheConfig)
    retinex: RetinexConfig = field(default_factory=RetinexConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    grid: HashGridConfig = field(default_factory=HashGridConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    ssim: SsimConfig = field(default_factory=SsimConfig)
    hidden: int = 64
    direction_order: int = 2
    render_samples: int = 128
    heldout_every: int = 8
    checkpoint_in: str | None = None  # render without a train stage

    def __post_init__(self):
        for s in self.stages:
            if s not in ALL_STAGES:
                raise ConfigError(f"unknown stage {s!r}; valid: {ALL_STAGES}")
        if self.heldout_every < 2:
            raise ConfigError("heldout.every must be >= 2")


# flat key -> (target object name, attribute). "" targets PipelineConfig itself.
_KEYMAP = {
    "stages": ("", "stages"),
    "seed": ("", "seed"),
    "deterministic": ("", "deterministic"),
    "out": ("", "out_dir"),
    "scene.synthetic": ("", "synthetic"),
    "scene.views": ("", "synthetic_views"),
    "scene.size": ("", "synthetic_size"),
    "scene.transforms": ("", "transforms"),
    "scene.colmap_cameras": ("", "colmap_cameras"),
    "scene.colmap_images": ("", "colmap_images"),
    "scene.image_root": ("", "image_root"),
    "enhance.mu": ("", "mu"),
    "enhance.order": ("", "enhance_order"),
    "clahe.tiles": ("clahe", "tiles"),
    "clahe.clip_limit": ("clahe", "clip_limit"),
    "clahe.bins": ("clahe", "bins"),
    "retinex.smooth_grad_weight": ("retinex", "smooth_grad_weight"),
    "retinex.smooth_lap_weight": ("retinex", "smooth_lap_weight"),
    "retinex.reflect_grad_weight": ("retinex", "reflect_grad_weight"),
    "retinex.reflect_lap_weight": ("retinex", "reflect_lap_weight"),
    "retinex.iterations": ("retinex", "iterations"),
    "retinex.gamma": ("retinex", "gamma"),
    "retinex.white_level": ("retinex", "white_level"),
    "keyframes.w1": ("selection", "w1"),
    "keyframes.w2": ("selection", "w2"),
    "keyframes.window": ("selection", "window"),
    "keyframes.keep_per_window": ("selection", "keep_per_window"),
    "field.levels": ("grid", "levels"),
    "field.features_per_level": ("grid", "features_per_level"),
    "field.table_size_log2": ("grid", "table_size_log2"),
    "field.base_resolution": ("grid", "base_resolution"),
    "field.growth_factor": ("grid", "growth_factor"),
    "field.finest_resolution": ("grid", "finest_resolution"),
    "field.scene_bound": ("grid", "scene_bound"),
    "field.hidden": ("", "hidden"),
    "field.direction_order": ("", "direction_order"),
    "train.learning_rate": ("train", "learning_rate"),
    "train.rays_per_batch": ("train", "rays_per_batch"),
    "train.samples_per_ray": ("train", "samples_per_ray"),
    "train.steps": ("train", "steps"),
    "train.seed": ("train", "seed"),
    "train.optimizer": ("train", "optimizer"),
    "train.log_every": ("train", "log_every"),
    "ssim.k1": ("ssim", "k1"),
    "ssim.k2": ("ssim", "k2"),
    "ssim.window": ("ssim", "window"),
    "render.samples_per_ray": ("", "render_samples"),
    "heldout.every": ("", "heldout_every"),
    "checkpoint": ("", "checkpoint_in"),
}


def config_from_flat(flat: dict) -> PipelineConfig:
    """Build a PipelineConfig from a flat dotted-key dictionary."""
    cfg = PipelineConfig()
    for key, value in flat.items():
        if key not in _KEYMAP:
            raise ConfigError(f"unknown config key {key!r}")
        target, attr = _KEYMAP[key]
        if key == "clahe.tiles":
            try:
                tx, ty = value
            except (TypeError, ValueError):
                raise ConfigError("clahe.tiles must be a [tiles_x, tiles_y] pair")
            cfg.clahe.tiles_x = int(tx)
            cfg.clahe.tiles_y = int(ty)
            continue
        obj = cfg if target == "" else getattr(cfg, target)
        if not hasattr(obj, attr):
            raise ConfigError(f"internal keymap error for {key!r}")
        if key in ("stages", "enhance.order"):
            value = tuple(value)
        setattr(obj, attr, value)
    # re-validate composed dataclasses after mutation
    try:
        for sub in (cfg.clahe, cfg.retinex, cfg.selection, cfg.grid, cfg.train, cfg.ssim):
            sub.__post_init__()
        cfg.__post_init__()
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return cfg


def load_config(path) -> PipelineConfig:
    try:
        with open(path) as fh:
            flat = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    except OSError as e:
        raise ConfigError(f"{path}: {e}") from e
    if not isinstance(flat, dict):
        raise ConfigError(f"{path}: config root must be an object")
    return config_from_flat(flat)


def config_as_flat(cfg: PipelineConfig) -> dict:
    """Inverse of config_from_flat, for echoing into reports."""
    flat = {}
    for key, (target, attr) in _KEYMAP.items():
        if key == "clahe.tiles":
            flat[key] = [cfg.clahe.tiles_x, cfg.clahe.tiles_y]
            continue
        obj = cfg if target == "" else getattr(cfg, target)
        value = getattr(obj, attr)
        if isinstance(value, tuple):
            value = list(value)
        flat[key] = value
    return flat
