"""Versioned little-endian binary persistence for datasets, samples, and
indexes.

Layout: magic ``RDX1``, kind byte, u16 version, then a fixed sequence of
array blocks per kind.  Each block is dtype code (0 = float64, 1 = int64),
ndim, the u64 shape, and raw little-endian data.  Samples store id lists
and are rebound to their dataset on load; the hierarchical index stores
layers, adjacency, and balls (layer-0 balls are the points themselves and
are reconstructed, and per-node area sizes are re-derived from adjacency).
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from ..core import Dataset
from ..epsample import EpsSample
from ..errors import DataError, UsageError
from ..hier import HierIndex
from ..kthlevel2d import LevelStructure2D
from ..srr import KdTreeIndex

__all__ = [
    "MAGIC",
    "save_dataset",
    "load_dataset",
    "save_sample",
    "load_sample",
    "save_kdtree",
    "load_kdtree",
    "save_hier",
    "load_hier",
    "save_levels",
    "load_levels",
    "serialized_size",
]

MAGIC = b"RDX1"
VERSION = 1

KIND_DATASET = 1
KIND_SAMPLE = 2
KIND_KDTREE = 3
KIND_HIER = 4
KIND_LEVELS = 5

_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<i8")}
_CODES = {np.dtype(np.float64): 0, np.dtype(np.int64): 1}


def _write_array(buf: io.BufferedIOBase, arr: np.ndarray) -> None:
    arr = np.ascontiguousarray(arr)
    code = _CODES[arr.dtype]
    buf.write(struct.pack("<BB", code, arr.ndim))
    buf.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
    buf.write(arr.astype(_DTYPES[code], copy=False).tobytes())


def _read_array(buf: io.BufferedIOBase) -> np.ndarray:
    head = buf.read(2)
    if len(head) != 2:
        raise DataError("truncated array header")
    code, ndim = struct.unpack("<BB", head)
    if code not in _DTYPES:
        raise DataError(f"unknown dtype code {code}")
    shape = struct.unpack(f"<{ndim}Q", buf.read(8 * ndim))
    count = int(np.prod(shape)) if ndim else 1
    data = buf.read(count * 8)
    if len(data) != count * 8:
        raise DataError("truncated array data")
    return np.frombuffer(data, dtype=_DTYPES[code]).reshape(shape).copy()


def _write_header(buf: io.BufferedIOBase, kind: int) -> None:
    buf.write(MAGIC)
    buf.write(struct.pack("<BH", kind, VERSION))


def _read_header(buf: io.BufferedIOBase, expected_kind: int) -> None:
    magic = buf.read(4)
    if magic != MAGIC:
        raise DataError(f"bad magic {magic!r}; not a RDX1 file")
    kind, version = struct.unpack("<BH", buf.read(3))
    if kind != expected_kind:
        raise DataError(f"wrong file kind {kind}; expected {expected_kind}")
    if version != VERSION:
        raise DataError(f"unsupported version {version}")


def _scalars(*values: int | float) -> np.ndarray:
    return np.asarray(values, dtype=np.float64)


# -- dataset ---------------------------------------------------------------


def save_dataset(D: Dataset, path: str | Path) -> None:
    with open(path, "wb") as fh:
        _write_header(fh, KIND_DATASET)
        _write_array(fh, D.coords)


def load_dataset(path: str | Path) -> Dataset:
    with open(path, "rb") as fh:
        _read_header(fh, KIND_DATASET)
        return Dataset(_read_array(fh))


# -- sample ----------------------------------------------------------------


def save_sample(sample: EpsSample, path: str | Path) -> None:
    with open(path, "wb") as fh:
        _write_header(fh, KIND_SAMPLE)
        _write_array(fh, _scalars(sample.epsilon, sample.phi))
        _write_array(fh, np.asarray([sample.source_n, sample.seed], dtype=np.int64))
        _write_array(fh, sample.ids)


def load_sample(path: str | Path, D: Dataset) -> EpsSample:
    with open(path, "rb") as fh:
        _read_header(fh, KIND_SAMPLE)
        eps, phi = _read_array(fh)
        source_n, seed = _read_array(fh)
        ids = _read_array(fh)
    if int(source_n) != D.n:
        raise UsageError("sample was built over a dataset of different size")
    return EpsSample(
        ids=ids,
        coords=np.ascontiguousarray(D.coords[ids]),
        epsilon=float(eps),
        phi=float(phi),
        source_n=int(source_n),
        seed=int(seed),
    )


# -- kd-tree ---------------------------------------------------------------


def save_kdtree(index: KdTreeIndex, path: str | Path) -> None:
    with open(path, "wb") as fh:
        _write_header(fh, KIND_KDTREE)
        _write_array(
            fh, np.asarray([index.dataset.n, index.leaf_capacity], dtype=np.int64)
        )
        _write_array(fh, index.idx)
        _write_array(fh, index.start)
        _write_array(fh, index.end)
        _write_array(fh, index.left)
        _write_array(fh, index.right)
        _write_array(fh, index.box_lo)
        _write_array(fh, index.box_hi)


def load_kdtree(path: str | Path, D: Dataset) -> KdTreeIndex:
    with open(path, "rb") as fh:
        _read_header(fh, KIND_KDTREE)
        n, leaf_capacity = _read_array(fh)
        if int(n) != D.n:
            raise UsageError("index was built over a dataset of different size")
        return KdTreeIndex(
            D,
            idx=_read_array(fh),
            start=_read_array(fh),
            end=_read_array(fh),
            left=_read_array(fh),
            right=_read_array(fh),
            box_lo=_read_array(fh),
            box_hi=_read_array(fh),
            leaf_capacity=int(leaf_capacity),
        )


# -- hierarchical index ------------------------------------------------------


def save_hier(index: HierIndex, path: str | Path) -> None:
    with open(path, "wb") as fh:
        _write_header(fh, KIND_HIER)
        _write_array(
            fh,
            np.asarray(
                [index.dataset.n, index.decay, index.seed, index.num_layers],
                dtype=np.int64,
            ),
        )
        for level in range(1, index.num_layers + 1):
            indptr, children = index.children[level]
            _write_array(fh, index.layers[level])
            _write_array(fh, indptr)
            _write_array(fh, children)
            _write_array(fh, index.centers[level])
            _write_array(fh, index.radii[level])


def load_hier(path: str | Path, D: Dataset) -> HierIndex:
    with open(path, "rb") as fh:
        _read_header(fh, KIND_HIER)
        n, decay, seed, num_layers = (int(v) for v in _read_array(fh))
        if n != D.n:
            raise UsageError("index was built over a dataset of different size")
        layers = [np.arange(D.n, dtype=np.int64)]
        children: list[tuple[np.ndarray, np.ndarray] | None] = [None]
        centers = [D.coords]
        radii = [np.zeros(D.n, dtype=np.float64)]
        for _ in range(num_layers):
            layers.append(_read_array(fh))
            indptr = _read_array(fh)
            kids = _read_array(fh)
            children.append((indptr, kids))
            centers.append(_read_array(fh))
            radii.append(_read_array(fh))
    return HierIndex(
        D,
        layers=layers,
        children=children,
        centers=centers,
        radii=radii,
        decay=decay,
        seed=seed,
    )


# -- 2-D level structure -----------------------------------------------------


def save_levels(structure: LevelStructure2D, path: str | Path) -> None:
    with open(path, "wb") as fh:
        _write_header(fh, KIND_LEVELS)
        _write_array(
            fh, np.asarray([structure.n, structure.num_events], dtype=np.int64)
        )
        _write_array(fh, structure.initial_ids)
        for k in range(structure.n):
            _write_array(fh, structure.angles[k])
            _write_array(fh, structure.ids[k])


def load_levels(path: str | Path, D: Dataset) -> LevelStructure2D:
    with open(path, "rb") as fh:
        _read_header(fh, KIND_LEVELS)
        n, num_events = (int(v) for v in _read_array(fh))
        if n != D.n:
            raise UsageError("structure was built over a dataset of different size")
        initial_ids = _read_array(fh)
        angles = []
        ids = []
        for _ in range(n):
            angles.append(_read_array(fh))
            ids.append(_read_array(fh))
    return LevelStructure2D(
        dataset=D,
        angles=angles,
        ids=ids,
        initial_ids=initial_ids,
        num_events=num_events,
    )


def serialized_size(obj, saver) -> int:
    """Byte size of an object's on-disk form, without touching disk."""
    import tempfile, os

    with tempfile.NamedTemporaryFile(delete=False) as tmp:
        name = tmp.name
    try:
        saver(obj, name)
        return os.path.getsize(name)
    finally:
        os.unlink(name)
