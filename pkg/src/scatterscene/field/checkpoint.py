"""Checkpoint serialisation.

Layout: magic "SSCK", u32 format version, u32 config length, config JSON,
then the flat single-precision parameter arrays in declaration order
(hash tables, then MLP weights). Everything little-endian; save/load
round-trips bitwise.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict

import numpy as np

from ..errors import ParseError
from .encoding import HashGridConfig
from .mlp import MlpParams
from .model import FieldParams

MAGIC = b"SSCK"
VERSION = 1


def save_checkpoint(params: FieldParams, path) -> None:
    config = {
        "grid": asdict(params.grid),
        "hidden": params.mlp.hidden,
        "direction_order": params.direction_order,
        "shapes": [list(a.shape) for a in params.arrays()],
    }
    blob = json.dumps(config, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for arr in params.arrays():
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path) -> FieldParams:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ParseError(f"{path}: bad checkpoint magic {magic!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != VERSION:
            raise ParseError(f"{path}: unsupported checkpoint version {version}")
        (blob_len,) = struct.unpack("<I", fh.read(4))
        config = json.loads(fh.read(blob_len).decode("utf-8"))

        grid = HashGridConfig(**config["grid"])
        arrays = []
        for shape in config["shapes"]:
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 4)
            if len(raw) != count * 4:
                raise ParseError(f"{path}: truncated checkpoint")
            arrays.append(np.frombuffer(raw, dtype="<f4").reshape(shape).copy())
        trailing = fh.read(1)
        if trailing:
            raise ParseError(f"{path}: trailing bytes after parameter arrays")

    tables, *mlp_arrays = arrays
    return FieldParams(grid, tables, MlpParams(*mlp_arrays), config["direction_order"])
