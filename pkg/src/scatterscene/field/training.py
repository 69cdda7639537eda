"""Optimisers, ray dataset and the training loop for the radiance field."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteError
from .model import FieldParams, RayBatch, loss_and_grads
from .render import deltas_from_t, intersect_cube, sample_stratified


@dataclass
class TrainConfig:
    learning_rate: float = 1e-2
    rays_per_batch: int = 4096
    samples_per_ray: int = 128
    steps: int = 2000
    seed: int = 0
    optimizer: str = "adam"  # "sgd" gives the plain instantaneous update
    lr_decay_factor: float = 0.33  # applied at each third of training
    log_every: int = 50

    def __post_init__(self):
        if min(self.learning_rate, self.rays_per_batch, self.samples_per_ray, self.steps) <= 0:
            raise ValueError("learning_rate, rays_per_batch, samples_per_ray, steps must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


def lr_at(cfg: TrainConfig, step: int) -> float:
    third = max(1, cfg.steps // 3)
    return cfg.learning_rate * cfg.lr_decay_factor ** min(step // third, 2)


def sgd_step(arrays: list[np.ndarray], grads: list[np.ndarray], lr: float) -> None:
    """W_new = W_old - lr * grad, in place."""
    for a, g in zip(arrays, grads):
        a -= (lr * g).astype(a.dtype)


class Adam:
    """Adaptive-moment optimiser (the training default; hash grids diverge
    under plain SGD at useful rates)."""

    def __init__(self, arrays: list[np.ndarray], beta1=0.9, beta2=0.99, eps=1e-15):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]
        self.t = 0

    def step(self, arrays: list[np.ndarray], grads: list[np.ndarray], lr: float) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for a, g, m, v in zip(arrays, grads, self.m, self.v):
            g = g.astype(a.dtype, copy=False)
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * (g * g)
            a -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class RayDataset:
    """Flattened training rays (cube hits only) with reference colours."""

    origins: np.ndarray
    dirs: np.ndarray
    near: np.ndarray
    far: np.ndarray
    colors: np.ndarray

    def __len__(self) -> int:
        return self.origins.shape[0]

    @classmethod
    def from_views(cls, images, poses, intrinsics, bound: float) -> "RayDataset":
        from .camera import pixel_rays

        all_o, all_d, all_n, all_f, all_c = [], [], [], [], []
        for img, pose in zip(images, poses):
            origins, dirs = pixel_rays(pose, intrinsics)
            near, far, hit = intersect_cube(origins, dirs, bound)
            colors = np.asarray(img, dtype=np.float32).reshape(-1, 3)
            all_o.append(origins[hit])
            all_d.append(dirs[hit])
            all_n.append(near[hit])
            all_f.append(far[hit])
            all_c.append(colors[hit])
        return cls(
            np.concatenate(all_o),
            np.concatenate(all_d),
            np.concatenate(all_n),
            np.concatenate(all_f),
            np.concatenate(all_c),
        )


class OccupancyGrid:
    """Coarse binary grid marking cells whose density exceeds a threshold.

    Purely an acceleration: empty cells skip field evaluation. Disabled in
    deterministic test mode; correctness never relies on it.
    """

    def __init__(self, bound: float, resolution: int = 32, threshold: float = 0.01):
        self.bound = bound
        self.resolution = resolution
        self.threshold = threshold
        self.occupied = np.ones((resolution,) * 3, dtype=bool)

    def update(self, params: FieldParams) -> None:
        from .model import field_eval

        res = self.resolution
        centers = (np.arange(res) + 0.5) / res * 2.0 * self.bound - self.bound
        gx, gy, gz = np.meshgrid(centers, centers, centers, indexing="ij")
        pts = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
        dirs = np.tile(np.array([[0.0, 0.0, 1.0]]), (pts.shape[0], 1))
        occ = np.empty(pts.shape[0], dtype=bool)
        chunk = 65536
        for lo in range(0, pts.shape[0], chunk):
            _, dens = field_eval(pts[lo : lo + chunk], dirs[lo : lo + chunk], params)
            occ[lo : lo + chunk] = dens > self.threshold
        occ = occ.reshape((res,) * 3)
        # dilate one cell so thin structures near boundaries survive
        grown = occ.copy()
        for axis in range(3):
            for shift in (-1, 1):
                grown |= np.roll(occ, shift, axis=axis)
        self.occupied = grown

    def query(self, pts: np.ndarray) -> np.ndarray:
        cells = ((pts + self.bound) / (2.0 * self.bound) * self.resolution).astype(np.int64)
        cells = np.clip(cells, 0, self.resolution - 1)
        return self.occupied[cells[..., 0], cells[..., 1], cells[..., 2]]


def train_step(
    params: FieldParams,
    optimizer,
    batch: RayBatch,
    lr: float,
) -> float:
    """One gradient update; returns the pre-update loss."""
    loss, grads = loss_and_grads(params, batch)
    if not np.isfinite(loss):
        raise NonFiniteError(f"training loss became non-finite ({loss})")
    if isinstance(optimizer, Adam):
        optimizer.step(params.arrays(), grads.arrays(), lr)
    else:
        sgd_step(params.arrays(), grads.arrays(), lr)
    return loss


class Trainer:
    """Seeded, resumable training loop with line-delimited JSON progress."""

    def __init__(
        self,
        params: FieldParams,
        dataset: RayDataset,
        cfg: TrainConfig,
        deterministic: bool = True,
        log_file=None,
        occupancy_every: int = 256,
    ):
        if len(dataset) == 0:
            raise ValueError("dataset contains no rays inside the scene cube")
        self.params = params
        self.dataset = dataset
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.optimizer = (
            Adam(params.arrays()) if cfg.optimizer == "adam" else None
        )
        self.step_count = 0
        self.log_file = log_file
        self.deterministic = deterministic
        self.occupancy = None if deterministic else OccupancyGrid(params.grid.scene_bound)
        self.occupancy_every = occupancy_every
        self.last_loss = float("nan")
        self._start = time.perf_counter()

    def _next_batch(self) -> RayBatch:
        n = self.cfg.samples_per_ray
        pick = self.rng.integers(0, len(self.dataset), size=self.cfg.rays_per_batch)
        near = self.dataset.near[pick]
        far = self.dataset.far[pick]
        t = sample_stratified(near, far, n, self.rng)
        return RayBatch(
            origins=self.dataset.origins[pick],
            dirs=self.dataset.dirs[pick],
            t=t,
            deltas=deltas_from_t(t, far),
            ref=self.dataset.colors[pick],
        )

    def step(self) -> float:
        if self.occupancy is not None and self.step_count % self.occupancy_every == 0:
            self.occupancy.update(self.params)
        batch = self._next_batch()
        lr = lr_at(self.cfg, self.step_count)
        loss, grads = loss_and_grads(
            self.params, batch,
            active=self.occupancy.query if self.occupancy is not None else None,
        )
        if not np.isfinite(loss):
            raise NonFiniteError(f"training loss became non-finite at step {self.step_count}")
        if self.optimizer is not None:
            self.optimizer.step(self.params.arrays(), grads.arrays(), lr)
        else:
            sgd_step(self.params.arrays(), grads.arrays(), lr)
        self.last_loss = loss
        self.step_count += 1
        if self.log_file is not None and (
            self.step_count % self.cfg.log_every == 0 or self.step_count == 1
        ):
            self._log(loss)
        return loss

    def _log(self, loss: float) -> None:
        mse = loss / 3.0  # per-channel MSE from the summed-channel loss
        record = {
            "step": self.step_count,
            "loss": loss,
            "psnr_train": float(-10.0 * np.log10(mse)) if mse > 0 else 99.0,
            "elapsed_s": round(time.perf_counter() - self._start, 3),
        }
        self.log_file.write(json.dumps(record) + "\n")
        self.log_file.flush()

    def run(self, steps: int | None = None) -> float:
        for _ in range(steps if steps is not None else self.cfg.steps):
            loss = self.step()
        return self.last_loss
