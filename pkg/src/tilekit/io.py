"""File formats shared by every command: plain CSV for matrices (row-major,
no header, '.' decimal point, LF endings) and JSON for tilings (1-based
row/column index lists). Writers emit shortest round-tripping decimals so
identical inputs always produce identical bytes."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import Tiling, as_data_matrix


class DataFormatError(ValueError):
    """Raised when an input file does not parse as the expected format."""


def write_matrix_csv(path, matrix) -> None:
    x = as_data_matrix(matrix)
    lines = [",".join(repr(float(v)) for v in row) for row in x]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_matrix_csv(path) -> np.ndarray:
    text = Path(path).read_text(encoding="utf-8")
    rows = []
    for ln, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{ln}: {exc}") from exc
    if not rows:
        raise DataFormatError(f"{path}: empty matrix file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DataFormatError(f"{path}: ragged rows")
    return np.asarray(rows, dtype=float)


def write_labels_csv(path, labels) -> None:
    arr = np.asarray(labels, dtype=int)
    lines = [",".join(str(int(v)) for v in row) for row in arr]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_labels_csv(path) -> np.ndarray:
    return read_matrix_csv(path).astype(int)


def tiling_to_dict(tiling: Tiling, **extra) -> dict:
    doc = {
        "tile_count": tiling.tile_count,
        "n_rows": tiling.n_rows,
        "n_cols": tiling.n_cols,
        "tiles": [
            {
                "rows": [int(i) + 1 for i in np.flatnonzero(tiling.row_members[t])],
                "cols": [int(j) + 1 for j in np.flatnonzero(tiling.col_members[t])],
            }
            for t in range(tiling.tile_count)
        ],
    }
    doc.update(extra)
    return doc


def write_tiling_json(path, tiling: Tiling, **extra) -> None:
    Path(path).write_text(
        json.dumps(tiling_to_dict(tiling, **extra), indent=2) + "\n", encoding="utf-8"
    )


def tiling_from_dict(doc: dict) -> Tiling:
    try:
        n = int(doc["n_rows"])
        m = int(doc["n_cols"])
        tiles = doc["tiles"]
        if int(doc["tile_count"]) != len(tiles):
            raise DataFormatError("tile_count does not match the tiles list")
        rows = np.zeros((len(tiles), n), dtype=np.uint8)
        cols = np.zeros((len(tiles), m), dtype=np.uint8)
        for t, tile in enumerate(tiles):
            rows[t, [int(i) - 1 for i in tile["rows"]]] = 1
            cols[t, [int(j) - 1 for j in tile["cols"]]] = 1
    except (KeyError, TypeError, IndexError) as exc:
        raise DataFormatError(f"malformed tiling document: {exc}") from exc
    return Tiling(rows, cols)


def read_tiling_json(path) -> Tiling:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
    return tiling_from_dict(doc)
