"""Command-line interface.

Subcommands: enhance, keyframes, train, render, metrics, synthesize,
pipeline. Global flags (--config, --seed, --deterministic, --out) may be
given on any subcommand. Exit codes: 0 success, 2 parse/config error,
3 numerical failure.

Note on colour correction: the channel spread in the statistical stretch is
the standard deviation (a literal-variance denominator would be
dimensionally inconsistent); mu scales that spread, default 2.5.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import metrics as metrics_mod
from .config import PipelineConfig, config_from_flat, load_config
from .enhance import enhance_frame
from .errors import ConfigError, NonFiniteError, ParseError, ScatterSceneError
from .field import (
    RayDataset,
    RenderConfig,
    Trainer,
    init_field,
    load_checkpoint,
    render_view,
    save_checkpoint,
)
from .imageio import load_image, save_image
from .keyframe import select_keyframes, sharpness
from .pipeline import run_pipeline
from .report import (
    aggregate_metrics,
    canonical_json,
    plot_metrics,
    write_metrics_csv,
)
from .scene import (
    BUILTIN_SCENES,
    generate_synthetic_scene,
    parse_colmap_text,
    parse_transforms,
    write_keyframe_manifest,
)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat dotted-key JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="global RNG seed")
    parser.add_argument("--deterministic", action="store_true",
                        help="single-threaded, reproducible mode (disables occupancy skipping)")
    parser.add_argument("--out", default=None, help="output directory")


def _load_pipeline_config(args, default_stages=None) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else config_from_flat({})
    if args.seed is not None:
        cfg.seed = args.seed
    if args.deterministic:
        cfg.deterministic = True
    if args.out is not None:
        cfg.out_dir = args.out
    if default_stages is not None and args.config is None:
        cfg.stages = default_stages
    return cfg


def _list_images(directory: Path) -> list[Path]:
    files = sorted(
        p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
    )
    if not files:
        raise ConfigError(f"{directory}: no images found")
    return files


def cmd_enhance(args) -> int:
    cfg = _load_pipeline_config(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for path in _list_images(Path(args.input)):
        img = load_image(path)
        enhanced = enhance_frame(
            img, mu=cfg.mu, clahe_cfg=cfg.clahe, retinex_cfg=cfg.retinex,
            order=cfg.enhance_order,
        )
        save_image(enhanced, out / path.name)
        print(f"enhanced {path.name}")
    print(f"wrote {out}")
    return EXIT_OK


def _manifest_from_args(args, cfg):
    if getattr(args, "transforms", None):
        return parse_transforms(args.transforms), Path(args.transforms).parent
    if getattr(args, "colmap_cameras", None):
        manifest = parse_colmap_text(
            args.colmap_cameras, args.colmap_images, scene_bound=cfg.grid.scene_bound
        )
        return manifest, Path(args.colmap_images).parent
    raise ConfigError("provide --transforms or --colmap-cameras/--colmap-images")


def cmd_keyframes(args) -> int:
    cfg = _load_pipeline_config(args)
    manifest, root = _manifest_from_args(args, cfg)
    image_root = Path(args.images) if args.images else root
    for f in manifest.frames:
        f.sharpness = sharpness(load_image(image_root / f.image_path))
    selected = select_keyframes(manifest.frames, cfg.selection)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "keyframes.json"
    write_keyframe_manifest(selected, target)
    print(f"selected {len(selected)}/{len(manifest.frames)} keyframes -> {target}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_pipeline_config(args)
    manifest, root = _manifest_from_args(args, cfg)
    image_root = Path(args.images) if args.images else root
    images = [load_image(image_root / f.image_path) for f in manifest.frames]
    dataset = RayDataset.from_views(
        images, manifest.poses(), manifest.intrinsics, cfg.grid.scene_bound
    )
    params = init_field(
        cfg.grid, np.random.default_rng(cfg.seed),
        hidden=cfg.hidden, direction_order=cfg.direction_order,
    )
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.train.seed = cfg.seed
    with open(out / "progress.jsonl", "w") as log:
        trainer = Trainer(params, dataset, cfg.train,
                          deterministic=cfg.deterministic, log_file=log)
        loss = trainer.run(cfg.train.steps)
    ckpt = out / "field.ssck"
    save_checkpoint(params, ckpt)
    print(f"trained {trainer.step_count} steps, final loss {loss:.6f} -> {ckpt}")
    return EXIT_OK


def cmd_render(args) -> int:
    cfg = _load_pipeline_config(args)
    manifest, _ = _manifest_from_args(args, cfg)
    params = load_checkpoint(args.checkpoint)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wanted = set(args.frames) if args.frames else None
    rcfg = RenderConfig(samples_per_ray=cfg.render_samples, seed=cfg.seed)
    count = 0
    for f in manifest.frames:
        if wanted is not None and f.frame_id not in wanted:
            continue
        img = render_view(f.pose, manifest.intrinsics, params, cfg=rcfg)
        save_image(img, out / f"r{f.frame_id:03d}.png")
        count += 1
    print(f"rendered {count} views -> {out}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    cfg = _load_pipeline_config(args)
    pred_files = _list_images(Path(args.pred))
    ref_files = _list_images(Path(args.ref)) if args.ref else None
    if ref_files is not None and len(ref_files) != len(pred_files):
        raise ConfigError(
            f"{len(pred_files)} predicted vs {len(ref_files)} reference images"
        )
    rows = []
    for k, path in enumerate(pred_files):
        pred = load_image(path)
        row = {
            "frame_id": k,
            "uciqe": metrics_mod.uciqe(pred),
            "uiqm": metrics_mod.uiqm(pred),
            "psnr": None,
            "ssim": None,
        }
        if ref_files is not None:
            ref = load_image(ref_files[k])
            row["psnr"] = metrics_mod.psnr(pred, ref)
            row["ssim"] = metrics_mod.ssim(
                pred, ref, cfg.ssim, global_stats=args.global_ssim
            )
        rows.append(row)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "per_frame": rows,
        "aggregates": aggregate_metrics(rows),
        "metadata": metrics_mod.metric_metadata(),
    }
    (out / "metrics.json").write_text(canonical_json(report))
    write_metrics_csv(rows, out / "metrics.csv")
    plot_metrics(rows, out / "metrics.png")
    print(f"wrote {out / 'metrics.json'}, metrics.csv, metrics.png")
    return EXIT_OK


def cmd_synthesize(args) -> int:
    cfg = _load_pipeline_config(args)
    manifest = generate_synthetic_scene(
        cfg.out_dir, scene=args.scene, views=args.views, size=args.size
    )
    print(f"wrote {len(manifest.frames)} views to {cfg.out_dir}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _load_pipeline_config(args)
    if args.synthetic:
        cfg.synthetic = args.synthetic
    if args.transforms:
        cfg.transforms = args.transforms
    report = run_pipeline(cfg)
    print(f"pipeline complete: stages {report['stages']} -> "
          f"{Path(cfg.out_dir) / 'report.json'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scatterscene",
        description="Scattering-medium 3-D reconstruction toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhance", help="enhance a directory of frames")
    p.add_argument("--input", required=True, help="directory of degraded frames")
    _common_flags(p)
    p.set_defaults(fn=cmd_enhance)

    p = sub.add_parser("keyframes", help="score and select keyframes")
    p.add_argument("--transforms", help="transforms.json pose file")
    p.add_argument("--colmap-cameras", help="COLMAP cameras.txt")
    p.add_argument("--colmap-images", help="COLMAP images.txt")
    p.add_argument("--images", help="image directory (defaults next to poses)")
    _common_flags(p)
    p.set_defaults(fn=cmd_keyframes)

    p = sub.add_parser("train", help="train the radiance field")
    p.add_argument("--transforms", help="transforms.json pose file")
    p.add_argument("--colmap-cameras")
    p.add_argument("--colmap-images")
    p.add_argument("--images")
    _common_flags(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("render", help="render views from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--transforms")
    p.add_argument("--colmap-cameras")
    p.add_argument("--colmap-images")
    p.add_argument("--frames", type=int, nargs="*", help="frame ids to render")
    _common_flags(p)
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("metrics", help="image quality report for an image set")
    p.add_argument("--pred", required=True, help="directory of images to score")
    p.add_argument("--ref", help="directory of reference images (enables PSNR/SSIM)")
    p.add_argument("--global-ssim", action="store_true",
                   help="whole-image SSIM statistics instead of local windows")
    _common_flags(p)
    p.set_defaults(fn=cmd_metrics)

    p = sub.add_parser("synthesize", help="generate a built-in synthetic scene")
    p.add_argument("--scene", default="sphere", choices=BUILTIN_SCENES)
    p.add_argument("--views", type=int, default=12)
    p.add_argument("--size", type=int, default=64)
    _common_flags(p)
    p.set_defaults(fn=cmd_synthesize)

    p = sub.add_parser("pipeline", help="run the full reconstruction pipeline")
    p.add_argument("--synthetic", choices=BUILTIN_SCENES,
                   help="use a built-in synthetic scene")
    p.add_argument("--transforms", help="transforms.json scene")
    _common_flags(p)
    p.set_defaults(fn=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NonFiniteError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ScatterSceneError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
