"""Thread-count policy, configuration hashing and deterministic output files."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

from . import __version__

__all__ = ["thread_count", "config_hash", "write_output", "provenance"]


def thread_count() -> int:
    """Worker threads: ``CUBIC_LAB_THREADS`` if set, else the CPU count."""
    env = os.environ.get("CUBIC_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValueError(f"CUBIC_LAB_THREADS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def config_hash(config: dict) -> str:
    """Short SHA-256 of the canonical JSON form of ``config``."""
    text = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def provenance(config: dict) -> dict:
    """Version and configuration hash stamped into every output."""
    return {"version": __version__, "config_hash": config_hash(config), "config": config}


def write_output(directory, stem: str, config: dict, suffix: str, text: str) -> Path:
    """Write ``text`` to ``<directory>/<stem>-<hash><suffix>`` and return the path."""
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    target = path / f"{stem}-{config_hash(config)}{suffix}"
    target.write_text(text)
    return target
