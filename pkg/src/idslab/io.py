"""Deterministic text output: CSV schemas shared with the plotting tool."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

IDS_HEADER = ["E", "N_mean", "N_stderr", "box_L", "samples", "model", "seed"]
WEGNER_HEADER = ["model", "E", "eps", "box_L", "n_plus", "mean", "stderr", "samples", "seed"]
EXHAUSTION_HEADER = [
    "E",
    "box_L",
    "N_mean",
    "N_stderr",
    "bloch_ref",
    "abs_dev",
    "samples",
    "model",
    "seed",
]
SSF_SCAN_HEADER = ["L", "sample", "gamma", "norm_alpha", "lhs", "rhs"]


def fmt(value) -> str:
    """Shortest round-trip text for a cell; floats via repr, ints plain."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(cell) for cell in row))
    return "\n".join(lines) + "\n"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_csv(header, rows), encoding="utf-8", newline="\n")
    return path


def write_json(path: Path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n",
        encoding="utf-8",
        newline="\n",
    )
    return path


def offset_text(offset) -> str:
    """Compact CSV-safe rendering of a cell offset, e.g. '3' or '1;-2'."""
    return ";".join(str(int(c)) for c in offset)
