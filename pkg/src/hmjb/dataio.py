"""Reading samples from one-column text/CSV files."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import EmptyFile, ParseError


def load_csv(path: str | Path) -> np.ndarray:
    """Read one real number per line.

    A single non-numeric first line is taken as a header and skipped.  Blank
    lines are ignored.  Only the first comma-separated field of a line is
    read, so a trailing index or label column is tolerated.

    Raises
    ------
    ParseError
        On a non-numeric, NaN or infinite entry (1-based line number).
    EmptyFile
        If no numbers were found.
    """
    values: list[float] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            field = line.split(",", 1)[0].strip()
            if not field:
                continue
            try:
                v = float(field)
            except ValueError:
                if lineno == 1:
                    continue
                raise ParseError(lineno, f"not a number: {field!r}") from None
            if not math.isfinite(v):
                raise ParseError(lineno, f"non-finite value: {field!r}")
            values.append(v)
    if not values:
        raise EmptyFile(f"{path}: no numeric data")
    return np.asarray(values, dtype=float)
