"""Shared test helpers."""

import numpy as np
import pytest

from eulerlu import EliminationStar, random_eulerian


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_star(rng, support=6, low=0.1, high=2.0):
    """Random elimination star with matched in/out mass."""
    k = int(rng.integers(2, support + 1))
    li = rng.uniform(low, high, size=k)
    ro = rng.uniform(low, high, size=k)
    ro *= li.sum() / ro.sum()
    return EliminationStar.from_dicts(
        {i: float(w) for i, w in enumerate(li)},
        {i: float(w) for i, w in enumerate(ro)}, tol=1e-9)


def small_eulerian(n=16, m_per_vertex=5, seed=0):
    return random_eulerian(n, edge_target=m_per_vertex * n, seed=seed)
