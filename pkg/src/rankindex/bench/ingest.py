"""CSV ingestion: named numeric columns become coordinates."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from ..core import Dataset
from ..errors import DataError, UsageError

__all__ = ["LoadResult", "load_csv", "NORMALIZATIONS"]

NORMALIZATIONS = ("none", "minmax", "zscore")


@dataclass(frozen=True)
class LoadResult:
    dataset: Dataset
    dropped_rows: int


def load_csv(
    path: str | Path, columns: Sequence[str], normalization: str = "none"
) -> LoadResult:
    """Read the named columns; rows with a missing or non-numeric value in
    any selected column are dropped and counted.

    minmax maps each column to [0, 1] (a constant column maps to 0);
    zscore centers and scales by the standard deviation (constant -> 0).
    """
    if normalization not in NORMALIZATIONS:
        raise UsageError(
            f"unknown normalization '{normalization}'; expected one of {NORMALIZATIONS}"
        )
    if not columns:
        raise UsageError("at least one column must be selected")
    path = Path(path)
    if not path.exists():
        raise DataError(f"csv file not found: {path}")
    try:
        frame = pd.read_csv(path)
    except Exception as exc:
        raise DataError(f"could not parse csv {path}: {exc}") from exc
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise UsageError(f"unknown column(s) {missing}; file has {list(frame.columns)}")
    selected = frame[list(columns)].apply(pd.to_numeric, errors="coerce")
    keep = selected.notna().all(axis=1)
    dropped = int((~keep).sum())
    coords = selected[keep].to_numpy(dtype=np.float64)
    coords = coords[np.all(np.isfinite(coords), axis=1)]
    dropped += int(keep.sum()) - coords.shape[0]
    if coords.shape[0] == 0:
        raise UsageError(f"no numeric rows remain from {path} for columns {columns}")
    if normalization == "minmax":
        lo = coords.min(axis=0)
        span = coords.max(axis=0) - lo
        span[span == 0.0] = 1.0  # constant columns map to 0
        coords = (coords - lo) / span
    elif normalization == "zscore":
        mu = coords.mean(axis=0)
        sd = coords.std(axis=0)
        sd[sd == 0.0] = 1.0
        coords = (coords - mu) / sd
    return LoadResult(dataset=Dataset(coords), dropped_rows=dropped)
