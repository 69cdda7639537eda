"""Report emission: canonical JSON, delimited metrics, matplotlib figures.

Reports must be byte-identical across reruns with the same seed, so floats
go through repr-faithful json, keys are sorted, paths are stored relative
to the output directory, and wall-clock timings live in one "timings"
subtree that comparisons strip.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

METRIC_FIELDS = ("frame_id", "psnr", "ssim", "uciqe", "uiqm")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_report(report: dict, path) -> None:
    Path(path).write_text(canonical_json(report))


def strip_timings(report: dict) -> dict:
    """Copy of a report without wall-clock fields, for determinism checks."""
    out = {k: v for k, v in report.items() if k != "timings"}
    return out


def write_metrics_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRIC_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k) for k in METRIC_FIELDS})


def aggregate_metrics(rows: list[dict]) -> dict:
    if not rows:
        return {}
    agg = {}
    for key in METRIC_FIELDS[1:]:
        values = [r[key] for r in rows if r.get(key) is not None]
        if values:
            agg[key] = {
                "mean": float(sum(values) / len(values)),
                "median": float(sorted(values)[len(values) // 2]),
            }
    return agg


def plot_metrics(rows: list[dict], path) -> None:
    """Per-frame metric panels rendered to one figure file."""
    if not rows:
        return
    frames = [r["frame_id"] for r in rows]
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    for ax, key in zip(axes.ravel(), METRIC_FIELDS[1:]):
        values = [r.get(key) for r in rows]
        ax.plot(frames, values, marker="o", lw=1.2)
        ax.set_title(key.upper())
        ax.grid(alpha=0.3)
    for ax in axes[-1]:
        ax.set_xlabel("frame id")
    fig.suptitle("Held-out view quality")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def plot_training_curve(progress_path, out_path) -> bool:
    """Loss / train-PSNR curves from a line-delimited JSON progress file."""
    steps, losses, psnrs = [], [], []
    try:
        with open(progress_path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                steps.append(rec["step"])
                losses.append(rec["loss"])
                psnrs.append(rec.get("psnr_train"))
    except (OSError, json.JSONDecodeError, KeyError):
        return False
    if not steps:
        return False
    fig, ax1 = plt.subplots(figsize=(8, 4.5))
    ax1.semilogy(steps, losses, color="tab:blue", lw=1.2, label="loss")
    ax1.set_xlabel("step")
    ax1.set_ylabel("photometric loss", color="tab:blue")
    ax1.grid(alpha=0.3)
    if any(p is not None for p in psnrs):
        ax2 = ax1.twinx()
        ax2.plot(steps, psnrs, color="tab:orange", lw=1.2, label="train PSNR")
        ax2.set_ylabel("train PSNR [dB]", color="tab:orange")
    fig.suptitle("Training progress")
    fig.tight_layout()
    fig.savefig(out_path, dpi=110)
    plt.close(fig)
    return True


def plot_enhancement_pair(before, after, path) -> None:
    """Side-by-side before/after panel for one enhanced frame."""
    fig, axes = plt.subplots(1, 2, figsize=(8, 4))
    for ax, img, title in zip(axes, (before, after), ("input", "enhanced")):
        ax.imshow(img)
        ax.set_title(title)
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
