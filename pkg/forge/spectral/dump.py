"""
Field dump format: raw little-endian float64, component-major with x fastest,
plus a JSON sidecar {"N", "rank", "time", "name"}.
"""

import json
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from .field import FourierField, Rank
from .grid import TorusGrid


class FieldSidecar(BaseModel):
    N: int
    rank: Rank
    time: float
    name: str


def _to_disk_order(values: np.ndarray) -> np.ndarray:
    # [comp..., x, y, z] → [comp..., z, y, x] so x varies fastest in C order
    return np.ascontiguousarray(np.swapaxes(values, -3, -1)).astype("<f8")


def write_field(stem: Path, f: FourierField, name: str, time: float) -> tuple[Path, Path]:
    if f.batch_shape:
        raise ValueError("dump one time slice at a time")
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    raw = stem.with_suffix(".f64")
    side = stem.with_suffix(".json")
    raw.write_bytes(_to_disk_order(f.physical()).tobytes())
    sidecar = FieldSidecar(N=f.grid.n, rank=f.rank, time=float(time), name=name)
    side.write_text(json.dumps(sidecar.model_dump(mode="json"), sort_keys=True))
    return raw, side


def read_field(stem: Path) -> tuple[FourierField, FieldSidecar]:
    stem = Path(stem)
    sidecar = FieldSidecar.model_validate_json(stem.with_suffix(".json").read_text())
    n = sidecar.N
    shape = sidecar.rank.component_shape + (n, n, n)
    values = np.frombuffer(stem.with_suffix(".f64").read_bytes(), dtype="<f8")
    values = np.swapaxes(values.reshape(shape[:-3] + (n, n, n)), -3, -1)
    return FourierField.from_physical(TorusGrid(n=n), values, sidecar.rank), sidecar
