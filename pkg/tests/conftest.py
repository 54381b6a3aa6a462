"""Shared fixtures and sort-based oracles for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from rankindex import Dataset, ScoringVector, normalize


def sorted_ids_desc(D: Dataset, f: ScoringVector) -> list[int]:
    """Full-sort oracle for the global order: descending score, id ties."""
    scores = np.einsum("ij,j->i", np.ascontiguousarray(D.coords), f.weights)
    return sorted(range(D.n), key=lambda i: (-scores[i], i))


@pytest.fixture(scope="session")
def planar16() -> tuple[Dataset, ScoringVector]:
    """A 16-point planar instance with a first-quadrant scoring direction,
    standing in for the toy example used throughout the docs and tests."""
    rng = np.random.default_rng(1601)
    D = Dataset(rng.random((16, 2)) * 4.0)
    f = normalize([0.8, 0.6])
    return D, f
