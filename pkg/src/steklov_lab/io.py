"""Text and CSV writers shared by the CLI. Files are written atomically."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

FLOAT_FMT = "%.12e"


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return FLOAT_FMT % value
    return str(value)


def csv_text(columns: Sequence[str], rows: Iterable[Sequence], config: dict) -> str:
    """CSV with a leading ``# config:`` comment row and a header row."""
    buf = io.StringIO()
    buf.write("# config: " + " ".join(f"{k}={config[k]}" for k in sorted(config)) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence], config: dict) -> None:
    atomic_write_text(path, csv_text(columns, rows, config))


def coo_text(matrix) -> str:
    """``i j value`` per stored nonzero of a sparse or dense matrix."""
    m = sp.coo_matrix(matrix)
    order = np.lexsort((m.col, m.row))
    return "".join(f"{m.row[k]} {m.col[k]} {FLOAT_FMT % m.data[k]}\n" for k in order)
