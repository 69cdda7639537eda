"""Scene manifests: pose-file parsing, synthetic scene generation, emission.

The manifest is the hand-off between structure-from-motion output (or the
synthetic generator) and the keyframe/training stages. Internal camera
convention is +z forward, +y down (see field.camera); transforms files may
declare "opengl" (the NGP/Blender ecosystem default, assumed when absent)
and are converted on load.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NonRigidPoseError,
    ParseError,
    RadialDistortionWarning,
    UnsupportedCameraModelError,
)
from .field.camera import Intrinsics, RenderConfig, render_view
from .imageio import save_image
from .keyframe import CameraPose, FrameRecord, pose_from_world_to_camera

_ORTHO_REPAIR_TOL = 1e-3

# OpenGL cameras look along -z with +y up; flipping those two axes gives the
# +z-forward, +y-down convention used everywhere else in this package.
_GL_TO_CV = np.diag([1.0, -1.0, -1.0])


@dataclass
class SceneManifest:
    frames: list[FrameRecord]
    intrinsics: Intrinsics
    scene_bound: float = 1.0
    source: str = "transforms-json"

    def poses(self) -> list[CameraPose]:
        return [f.pose for f in self.frames]


def _repair_rotation(r: np.ndarray, frame_name: str) -> np.ndarray:
    err = np.abs(r.T @ r - np.eye(3)).max()
    if np.linalg.det(r) < 0:
        raise NonRigidPoseError(f"{frame_name}: rotation is a reflection (det < 0)")
    if err <= 1e-5:
        return r
    if err > _ORTHO_REPAIR_TOL:
        raise NonRigidPoseError(
            f"{frame_name}: rotation too far from orthonormal (|R^T R - I| = {err:.2e})"
        )
    u, _, vt = np.linalg.svd(r)
    fixed = u @ np.diag([1.0, 1.0, float(np.linalg.det(u @ vt))]) @ vt
    return fixed


def parse_transforms(path) -> SceneManifest:
    """Load a transforms.json-style camera file into a manifest."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    except OSError as e:
        raise ParseError(f"{path}: {e}") from e

    for key in ("fl_x", "fl_y", "cx", "cy", "w", "h", "frames"):
        if key not in data:
            raise ParseError(f"{path}: missing required field {key!r}")

    intr = Intrinsics(
        fx=float(data["fl_x"]),
        fy=float(data["fl_y"]),
        cx=float(data["cx"]),
        cy=float(data["cy"]),
        width=int(data["w"]),
        height=int(data["h"]),
    )
    if "scene_bound" in data:
        bound = float(data["scene_bound"])
    elif "aabb_scale" in data:
        bound = float(data["aabb_scale"]) / 2.0  # aabb_scale is the full box edge
    else:
        bound = 1.0
    convention = data.get("camera_convention", "opengl")
    if convention not in ("opengl", "opencv"):
        raise ParseError(f"{path}: unknown camera_convention {convention!r}")

    entries = sorted(data["frames"], key=lambda f: f.get("file_path", ""))
    frames = []
    for k, entry in enumerate(entries):
        name = entry.get("file_path")
        if name is None:
            raise ParseError(f"{path}: frame {k} missing file_path")
        m = np.asarray(entry.get("transform_matrix", []), dtype=np.float64)
        if m.shape != (4, 4):
            raise ParseError(f"{path}: frame {name!r} transform_matrix is not 4x4")
        if not np.allclose(m[3], [0, 0, 0, 1], atol=1e-6):
            raise ParseError(f"{path}: frame {name!r} bottom row is not (0,0,0,1)")
        rot = _repair_rotation(m[:3, :3], name)
        if convention == "opengl":
            rot = rot @ _GL_TO_CV
        pose = CameraPose(rot, m[:3, 3])
        frames.append(FrameRecord(frame_id=k, image_path=name, pose=pose))
    return SceneManifest(frames, intr, bound, source="transforms-json")


def write_transforms(manifest: SceneManifest, path) -> None:
    """Emit a manifest as a transforms file (opencv convention, re-parsable)."""
    intr = manifest.intrinsics
    data = {
        "fl_x": intr.fx,
        "fl_y": intr.fy,
        "cx": intr.cx,
        "cy": intr.cy,
        "w": intr.width,
        "h": intr.height,
        "scene_bound": manifest.scene_bound,
        "camera_convention": "opencv",
        "frames": [
            {
                "file_path": str(f.image_path),
                "transform_matrix": f.pose.matrix().tolist(),
            }
            for f in manifest.frames
        ],
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


_COLMAP_MODELS = {"PINHOLE", "SIMPLE_PINHOLE", "SIMPLE_RADIAL"}


def _parse_camera_line(tokens: list[str], path, line_no: int) -> Intrinsics:
    model = tokens[1]
    if model not in _COLMAP_MODELS:
        raise UnsupportedCameraModelError(
            f"{path}:{line_no}: camera model {model!r} not supported"
        )
    width, height = int(tokens[2]), int(tokens[3])
    params = [float(t) for t in tokens[4:]]
    if model == "PINHOLE":
        fx, fy, cx, cy = params[:4]
    elif model == "SIMPLE_PINHOLE":
        fx = fy = params[0]
        cx, cy = params[1], params[2]
    else:  # SIMPLE_RADIAL
        fx = fy = params[0]
        cx, cy = params[1], params[2]
        if len(params) > 3 and params[3] != 0.0:
            warnings.warn(
                f"{path}:{line_no}: radial distortion k={params[3]} recorded but ignored",
                RadialDistortionWarning,
            )
    return Intrinsics(fx=fx, fy=fy, cx=cx, cy=cy, width=width, height=height)


def parse_colmap_text(cameras_file, images_file, scene_bound: float = 1.0) -> SceneManifest:
    """Parse COLMAP sparse-reconstruction text output.

    Image poses arrive in world-to-camera convention (quaternion +
    translation) and are inverted into camera-to-world records.
    """
    intrinsics_by_id: dict[int, Intrinsics] = {}
    with open(cameras_file) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) < 5:
                raise ParseError(f"{cameras_file}:{line_no}: truncated camera line")
            try:
                intrinsics_by_id[int(tokens[0])] = _parse_camera_line(
                    tokens, cameras_file, line_no
                )
            except (ValueError, IndexError) as e:
                raise ParseError(f"{cameras_file}:{line_no}: {e}") from e
    if not intrinsics_by_id:
        raise ParseError(f"{cameras_file}: no cameras found")

    records: list[tuple[str, CameraPose, int]] = []
    with open(images_file) as fh:
        expecting_pose = True
        pending_line = None
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line and not expecting_pose:
                # empty 2-D point list is legal
                expecting_pose = True
                continue
            if not line or line.startswith("#"):
                continue
            if expecting_pose:
                tokens = line.split()
                if len(tokens) < 10:
                    raise ParseError(f"{images_file}:{line_no}: truncated image line")
                try:
                    q = [float(t) for t in tokens[1:5]]
                    t_vec = [float(t) for t in tokens[5:8]]
                    camera_id = int(tokens[8])
                    name = tokens[9]
                except ValueError as e:
                    raise ParseError(f"{images_file}:{line_no}: {e}") from e
                if camera_id not in intrinsics_by_id:
                    raise ParseError(
                        f"{images_file}:{line_no}: unknown camera id {camera_id}"
                    )
                records.append((name, pose_from_world_to_camera(q, t_vec), camera_id))
                pending_line = line_no
                expecting_pose = False
            else:
                expecting_pose = True
        if not expecting_pose:
            raise ParseError(
                f"{images_file}:{pending_line}: image entry missing its 2-D point line"
            )
    if not records:
        raise ParseError(f"{images_file}: no images found")

    records.sort(key=lambda r: r[0])
    frames = [
        FrameRecord(frame_id=k, image_path=name, pose=pose)
        for k, (name, pose, _) in enumerate(records)
    ]
    intr = intrinsics_by_id[records[0][2]]
    return SceneManifest(frames, intr, scene_bound, source="colmap-text")


@dataclass
class SphereScene:
    """A soft-edged striped sphere in vacuum: the built-in analytic scene.

    Density and colour depend only on (hypot(x, y), z), so the scene is
    symmetric under x -> -x and y -> -y; antipodal orbit views must agree
    up to a left-right flip.
    """

    radius: float = 0.55
    edge: float = 0.12
    sigma_max: float = 30.0
    color_inner: tuple = (0.85, 0.35, 0.15)
    color_outer: tuple = (0.15, 0.45, 0.85)
    stripe_freq: float = 9.0
    bound: float = 1.0

    def __call__(self, pts: np.ndarray, dirs: np.ndarray):
        pts = np.asarray(pts, dtype=np.float64)
        r = np.linalg.norm(pts, axis=-1)
        t = np.clip((self.radius - r) / self.edge, 0.0, 1.0)
        sigma = self.sigma_max * t * t * (3.0 - 2.0 * t)

        base = np.clip(r / self.radius, 0.0, 1.0)[..., None]
        inner = np.asarray(self.color_inner)
        outer = np.asarray(self.color_outer)
        rgb = inner * (1.0 - base) + outer * base
        stripe = 0.7 + 0.3 * np.cos(self.stripe_freq * pts[..., 2])
        return np.clip(rgb * stripe[..., None], 0.0, 1.0), sigma

    def to_json(self) -> dict:
        return {
            "kind": "soft_sphere",
            "radius": self.radius,
            "edge": self.edge,
            "sigma_max": self.sigma_max,
            "color_inner": list(self.color_inner),
            "color_outer": list(self.color_outer),
            "stripe_freq": self.stripe_freq,
            "bound": self.bound,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SphereScene":
        if data.get("kind") != "soft_sphere":
            raise ParseError(f"unknown analytic scene kind {data.get('kind')!r}")
        return cls(
            radius=data["radius"],
            edge=data["edge"],
            sigma_max=data["sigma_max"],
            color_inner=tuple(data["color_inner"]),
            color_outer=tuple(data["color_outer"]),
            stripe_freq=data["stripe_freq"],
            bound=data["bound"],
        )


def look_at_pose(eye, target=(0.0, 0.0, 0.0), up=(0.0, 0.0, 1.0)) -> CameraPose:
    """Camera-to-world pose with +z pointing from eye toward target."""
    eye = np.asarray(eye, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - eye
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, np.asarray(up, dtype=np.float64))
    norm = np.linalg.norm(right)
    if norm < 1e-9:
        raise ValueError("view direction parallel to the up vector")
    right /= norm
    down = np.cross(forward, right)
    return CameraPose(np.stack([right, down, forward], axis=1), eye)


def orbit_poses(n: int, radius: float = 2.4, height: float = 0.5) -> list[CameraPose]:
    poses = []
    for k in range(n):
        angle = 2.0 * math.pi * k / n
        eye = (radius * math.cos(angle), radius * math.sin(angle), height)
        poses.append(look_at_pose(eye))
    return poses


QUADRATURE_SAMPLES = 256  # midpoint rule, dense enough for reference images

BUILTIN_SCENES = ("sphere",)


def generate_synthetic_scene(
    out_dir,
    scene: str = "sphere",
    views: int = 12,
    size: int = 64,
    orbit_radius: float = 2.4,
) -> SceneManifest:
    """Render the analytic scene to reference images plus a transforms file.

    Writes images/f###.png, transforms.json and scene.json (the analytic
    field, so tests can re-render and compare).
    """
    from pathlib import Path

    if scene not in BUILTIN_SCENES:
        raise ValueError(f"unknown builtin scene {scene!r}; have {BUILTIN_SCENES}")
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)

    field_fn = SphereScene()
    fx = 1.2 * size
    intr = Intrinsics(fx=fx, fy=fx, cx=(size - 1) / 2.0, cy=(size - 1) / 2.0,
                      width=size, height=size)
    poses = orbit_poses(views, radius=orbit_radius)
    cfg = RenderConfig(samples_per_ray=QUADRATURE_SAMPLES, sampling="midpoint")

    frames = []
    for k, pose in enumerate(poses):
        img = render_view(pose, intr, field_fn, bound=field_fn.bound, cfg=cfg)
        rel = f"images/f{k:03d}.png"
        save_image(img, out / rel)
        frames.append(FrameRecord(frame_id=k, image_path=rel, pose=pose))

    manifest = SceneManifest(frames, intr, field_fn.bound, source="synthetic")
    write_transforms(manifest, out / "transforms.json")
    with open(out / "scene.json", "w") as fh:
        json.dump(field_fn.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def load_analytic_field(path) -> SphereScene:
    with open(path) as fh:
        return SphereScene.from_json(json.load(fh))


def write_keyframe_manifest(frames: list[FrameRecord], path) -> None:
    """Ordered frame ids + paths + scores, consumed by the field trainer."""
    data = {
        "frames": [
            {
                "frame_id": f.frame_id,
                "image_path": str(f.image_path),
                "sharpness": f.sharpness,
                "importance": f.importance,
            }
            for f in frames
        ]
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_keyframe_manifest(path) -> list[dict]:
    try:
        with open(path) as fh:
            data = json.load(fh)
        return data["frames"]
    except (json.JSONDecodeError, KeyError) as e:
        raise ParseError(f"{path}: invalid keyframe manifest: {e}") from e
