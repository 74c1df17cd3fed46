"""Flat ``key = value`` run configuration files."""
from __future__ import annotations

import configparser
import hashlib
import json
from pathlib import Path
from typing import Any

KEYS = {
    "alpha": float,
    "beta": int,
    "kappa": int,
    "t_max": float,
    "sample_size": int,
    "period": float,
    "seed": int,
    "problem": str,
    "algorithm": str,
    "pop_size": int,
    # problem instance settings
    "dim": int,
    "noise_scale": float,
    "n_turbines": int,
    "n_points": int,
}


def parse_config(text: str) -> dict[str, Any]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.read_string("[run]\n" + text)
    out: dict[str, Any] = {}
    for key, raw in parser["run"].items():
        if key not in KEYS:
            raise ValueError(f"unknown config key {key!r}")
        conv = KEYS[key]
        out[key] = conv(float(raw)) if conv is int else conv(raw)
    return out


def load_config(path: str | Path) -> dict[str, Any]:
    return parse_config(Path(path).read_text())


def config_hash(config: dict[str, Any]) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
