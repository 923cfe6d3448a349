"""Small shared helpers for deterministic file output."""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np


def round_floats(obj):
    """Recursively round floats to 12 significant digits for stable output.

    Numpy scalars degrade to their python equivalents. Non-finite values
    become None: the JSON files are meant for strict parsers. Containers
    are rebuilt; other types pass through.
    """
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        if not math.isfinite(obj):
            return None
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [round_floats(v) for v in obj]
    return obj


def write_json(path, payload) -> Path:
    path = Path(path)
    text = json.dumps(round_floats(payload), indent=2, sort_keys=True,
                      allow_nan=False)
    path.write_text(text + "\n")
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
