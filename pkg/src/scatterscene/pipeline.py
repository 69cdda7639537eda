"""Stage orchestration: enhance -> keyframes -> train -> render -> metrics.

Stages run in that fixed order; disabling one passes its input through
untouched. Reruns with the same config and seed produce byte-identical
reports in deterministic mode (timings excluded).
"""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from . import metrics as metrics_mod
from .config import PipelineConfig, config_as_flat
from .enhance import enhance_frame
from .errors import ConfigError
from .field import (
    Intrinsics,
    RayDataset,
    RenderConfig,
    Trainer,
    init_field,
    load_checkpoint,
    render_view,
    save_checkpoint,
)
from .imageio import load_image, save_image
from .keyframe import FrameRecord, select_keyframes, sharpness
from .report import (
    aggregate_metrics,
    plot_enhancement_pair,
    plot_metrics,
    plot_training_curve,
    write_metrics_csv,
    write_report,
)
from .scene import (
    SceneManifest,
    generate_synthetic_scene,
    parse_colmap_text,
    parse_transforms,
    write_keyframe_manifest,
)

REPORT_NAME = "report.json"


def _resolve_scene(cfg: PipelineConfig, out: Path) -> tuple[SceneManifest, Path]:
    """Returns the manifest and the directory image paths are relative to."""
    if cfg.synthetic is not None:
        scene_dir = out / "scene"
        manifest = generate_synthetic_scene(
            scene_dir, scene=cfg.synthetic, views=cfg.synthetic_views,
            size=cfg.synthetic_size,
        )
        return manifest, scene_dir
    if cfg.transforms is not None:
        manifest = parse_transforms(cfg.transforms)
        root = Path(cfg.image_root) if cfg.image_root else Path(cfg.transforms).parent
        return manifest, root
    if cfg.colmap_cameras is not None and cfg.colmap_images is not None:
        manifest = parse_colmap_text(
            cfg.colmap_cameras, cfg.colmap_images, scene_bound=cfg.grid.scene_bound
        )
        root = Path(cfg.image_root) if cfg.image_root else Path(cfg.colmap_images).parent
        return manifest, root
    raise ConfigError(
        "no scene source: set scene.synthetic, scene.transforms, "
        "or scene.colmap_cameras + scene.colmap_images"
    )


def _heldout_split(selected: list[FrameRecord], every: int):
    held = selected[::every]
    held_ids = {f.frame_id for f in held}
    train = [f for f in selected if f.frame_id not in held_ids]
    return train, held


def run_pipeline(cfg: PipelineConfig) -> dict:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    timings: dict[str, float] = {}
    # the output directory is excluded from the echoed config so reruns into
    # different directories stay byte-comparable
    config_echo = {k: v for k, v in config_as_flat(cfg).items() if k != "out"}
    report: dict = {
        "stages": list(cfg.stages),
        "seed": cfg.seed,
        "deterministic": cfg.deterministic,
        "config": config_echo,
        "figures": [],
        "timings": timings,
    }
    if not cfg.stages:
        write_report(report, out / REPORT_NAME)
        return report

    t0 = time.perf_counter()
    manifest, image_root = _resolve_scene(cfg, out)
    timings["scene"] = round(time.perf_counter() - t0, 3)
    frames = manifest.frames
    paths = {f.frame_id: Path(image_root) / f.image_path for f in frames}
    report["scene"] = {
        "source": manifest.source,
        "frames": len(frames),
        "scene_bound": manifest.scene_bound,
    }

    if "enhance" in cfg.stages:
        t0 = time.perf_counter()
        enh_dir = out / "enhanced"
        enh_dir.mkdir(exist_ok=True)
        first_pair = None
        for f in frames:
            img = load_image(paths[f.frame_id])
            enhanced = enhance_frame(
                img, mu=cfg.mu, clahe_cfg=cfg.clahe, retinex_cfg=cfg.retinex,
                order=cfg.enhance_order,
            )
            target = enh_dir / Path(f.image_path).name
            save_image(enhanced, target)
            if first_pair is None:
                first_pair = (img, enhanced)
            paths[f.frame_id] = target
        fig_path = out / "enhancement_example.png"
        plot_enhancement_pair(*first_pair, fig_path)
        report["figures"].append(fig_path.name)
        report["enhance"] = {"frames": len(frames), "output_dir": "enhanced"}
        timings["enhance"] = round(time.perf_counter() - t0, 3)

    if "keyframes" in cfg.stages:
        t0 = time.perf_counter()
        for f in frames:
            f.sharpness = sharpness(load_image(paths[f.frame_id]))
        selected = select_keyframes(frames, cfg.selection)
        write_keyframe_manifest(selected, out / "keyframes.json")
        report["keyframes"] = {
            "selected": [f.frame_id for f in selected],
            "manifest": "keyframes.json",
        }
        timings["keyframes"] = round(time.perf_counter() - t0, 3)
    else:
        selected = frames

    train_frames, held_frames = _heldout_split(selected, cfg.heldout_every)
    report["heldout"] = {"frame_ids": [f.frame_id for f in held_frames]}

    params = None
    if "train" in cfg.stages:
        t0 = time.perf_counter()
        if not train_frames:
            raise ConfigError("no training frames left after hold-out split")
        images = [load_image(paths[f.frame_id]) for f in train_frames]
        poses = [f.pose for f in train_frames]
        dataset = RayDataset.from_views(
            images, poses, manifest.intrinsics, cfg.grid.scene_bound
        )
        params = init_field(
            cfg.grid, np.random.default_rng(cfg.seed),
            hidden=cfg.hidden, direction_order=cfg.direction_order,
        )
        train_cfg = cfg.train
        train_cfg.seed = cfg.seed
        progress_path = out / "progress.jsonl"
        with open(progress_path, "w") as log:
            trainer = Trainer(
                params, dataset, train_cfg,
                deterministic=cfg.deterministic, log_file=log,
            )
            final_loss = trainer.run(train_cfg.steps)
        ckpt = out / "field.ssck"
        save_checkpoint(params, ckpt)
        if plot_training_curve(progress_path, out / "training_curve.png"):
            report["figures"].append("training_curve.png")
        report["train"] = {
            "steps": trainer.step_count,
            "final_loss": final_loss,
            "rays": len(dataset),
            "checkpoint": ckpt.name,
            "progress": progress_path.name,
        }
        timings["train"] = round(time.perf_counter() - t0, 3)
    elif cfg.checkpoint_in:
        params = load_checkpoint(cfg.checkpoint_in)

    renders: dict[int, Path] = {}
    if "render" in cfg.stages:
        t0 = time.perf_counter()
        if params is None:
            raise ConfigError("render stage needs a train stage or a checkpoint")
        render_dir = out / "renders"
        render_dir.mkdir(exist_ok=True)
        rcfg = RenderConfig(samples_per_ray=cfg.render_samples, seed=cfg.seed)
        for f in held_frames:
            img = render_view(f.pose, manifest.intrinsics, params, cfg=rcfg)
            target = render_dir / f"r{f.frame_id:03d}.png"
            save_image(img, target)
            renders[f.frame_id] = target
        report["render"] = {
            "views": [f"renders/{p.name}" for p in renders.values()],
            "samples_per_ray": cfg.render_samples,
        }
        timings["render"] = round(time.perf_counter() - t0, 3)

    if "metrics" in cfg.stages:
        t0 = time.perf_counter()
        rows = []
        if renders:
            for f in held_frames:
                pred = load_image(renders[f.frame_id])
                ref = load_image(paths[f.frame_id])
                rows.append(_metric_row(f.frame_id, pred, ref, cfg))
            compared = "rendered held-out views vs stage-input references"
        elif "enhance" in cfg.stages:
            for f in frames:
                pred = load_image(paths[f.frame_id])
                ref = load_image(Path(image_root) / f.image_path)
                rows.append(_metric_row(f.frame_id, pred, ref, cfg))
            compared = "enhanced frames vs original frames"
        else:
            for f in frames:
                pred = load_image(paths[f.frame_id])
                rows.append(_metric_row(f.frame_id, pred, None, cfg))
            compared = "no-reference metrics on input frames"
        write_metrics_csv(rows, out / "metrics.csv")
        plot_metrics(rows, out / "metrics.png")
        report["figures"].append("metrics.png")
        report["metrics"] = {
            "compared": compared,
            "per_frame": rows,
            "aggregates": aggregate_metrics(rows),
            "metadata": metrics_mod.metric_metadata(),
            "csv": "metrics.csv",
        }
        timings["metrics"] = round(time.perf_counter() - t0, 3)

    _check_report_files(report, out)
    write_report(report, out / REPORT_NAME)
    return report


def _metric_row(frame_id: int, pred, ref, cfg: PipelineConfig) -> dict:
    row = {
        "frame_id": frame_id,
        "uciqe": metrics_mod.uciqe(pred),
        "uiqm": metrics_mod.uiqm(pred),
    }
    if ref is not None:
        row["psnr"] = metrics_mod.psnr(pred, ref)
        row["ssim"] = metrics_mod.ssim(pred, ref, cfg.ssim)
    else:
        row["psnr"] = None
        row["ssim"] = None
    return row


def _check_report_files(report: dict, out: Path) -> None:
    """Every file the report references must exist when it is emitted."""
    referenced = list(report.get("figures", []))
    for key in ("train", "keyframes", "metrics"):
        section = report.get(key, {})
        for field in ("checkpoint", "progress", "manifest", "csv"):
            if field in section:
                referenced.append(section[field])
    referenced += report.get("render", {}).get("views", [])
    missing = [r for r in referenced if not (out / r).exists()]
    if missing:
        raise RuntimeError(f"report references missing files: {missing}")
