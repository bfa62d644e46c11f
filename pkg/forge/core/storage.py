"""
Artifact storage. Every command writes through one backend rooted at the run output directory.
"""

import csv
import json
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .config import get_settings

logger = logging.getLogger(__name__)


class StorageBackend(ABC):
    @abstractmethod
    def write_text(self, relpath: str, text: str) -> Path:
        """Write a text artifact. Returns the stored path."""
        ...

    @abstractmethod
    def path(self, relpath: str) -> Path:
        """Resolve an artifact path (parents created)."""
        ...

    def write_json(self, relpath: str, payload: Any) -> Path:
        # sorted keys and fixed float repr keep reruns byte-identical
        return self.write_text(relpath, json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")

    def write_csv(self, relpath: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        target = self.path(relpath)
        with target.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        logger.info("Wrote %s", target)
        return target


class LocalStorage(StorageBackend):
    def __init__(self, base_path: str | Path | None = None):
        self.base_path = Path(base_path or get_settings().out_dir)

    def path(self, relpath: str) -> Path:
        target = self.base_path / relpath
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    def write_text(self, relpath: str, text: str) -> Path:
        target = self.path(relpath)
        target.write_text(text)
        logger.info("Wrote %s", target)
        return target


def _fmt(v: Any) -> Any:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def get_storage(out_dir: str | Path | None = None) -> StorageBackend:
    return LocalStorage(out_dir)


def _json_default(v: Any) -> Any:
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, Path):
        return str(v)
    raise TypeError(f"not JSON serializable: {type(v).__name__}")
