"""Published idslab CSV schemas and strict readers."""

from __future__ import annotations

from pathlib import Path

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

_FLOAT_COLUMNS = {
    "E",
    "N_mean",
    "N_stderr",
    "eps",
    "mean",
    "stderr",
    "bloch_ref",
    "abs_dev",
    "norm_alpha",
    "lhs",
    "rhs",
}
_INT_COLUMNS = {"box_L", "samples", "seed", "n_plus", "L", "sample"}


class SchemaError(ValueError):
    pass


def _read_lines(path: Path) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    return [line for line in text.splitlines() if line]


def read_csv(path: Path, expected_header: list[str]) -> list[dict]:
    """Parse a delimited file, demanding the exact published header."""
    lines = _read_lines(path)
    if not lines:
        raise SchemaError(f"{path}: file is empty")
    header = lines[0].split(",")
    if header != expected_header:
        missing = [c for c in expected_header if c not in header]
        extra = [c for c in header if c not in expected_header]
        raise SchemaError(
            f"{path}: header mismatch (missing {missing or 'none'}, unexpected {extra or 'none'})"
        )
    rows = []
    for number, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise SchemaError(f"{path}:{number}: expected {len(header)} cells")
        row = {}
        for name, cell in zip(header, cells):
            if name in _FLOAT_COLUMNS:
                row[name] = float(cell)
            elif name in _INT_COLUMNS:
                row[name] = int(cell)
            else:
                row[name] = cell
        rows.append(row)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def read_bands_csv(path: Path) -> tuple[list[str], list[list[float]]]:
    """Band files have a lattice-dependent header theta_1..theta_d,E_1..E_m."""
    lines = _read_lines(path)
    if not lines:
        raise SchemaError(f"{path}: file is empty")
    header = lines[0].split(",")
    thetas = [c for c in header if c.startswith("theta_")]
    bands = [c for c in header if c.startswith("E_")]
    if not thetas or not bands or thetas + bands != header:
        raise SchemaError(f"{path}: header is not theta_1..theta_d,E_1..E_m")
    rows = [[float(c) for c in line.split(",")] for line in lines[1:]]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return header, rows
