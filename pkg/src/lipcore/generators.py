"""Seeded random instances for experiments and tests.

Metrics come from the shortest-path closure of random symmetric weights, so
the triangle inequality holds by construction; polytopes are sampled inside
a random affine subspace to control their dimension.
"""

from __future__ import annotations

import numpy as np

from .geometry import NormTag, Polytope
from .metric import WeightedTree
from .selection import SetValuedMap
from .metric import PseudometricSpace


def random_metric(n: int, rng: np.random.Generator,
                  low: float = 0.5, high: float = 2.0) -> np.ndarray:
    """Metric on n points: shortest-path closure of random edge weights."""
    w = rng.uniform(low, high, size=(n, n))
    w = 0.5 * (w + w.T)
    np.fill_diagonal(w, 0.0)
    for k in range(n):
        np.minimum(w, w[:, k, None] + w[None, k, :], out=w)
    np.fill_diagonal(w, 0.0)
    return w


def random_polytope(d: int, m: int, rng: np.random.Generator,
                    scale: float = 1.0) -> Polytope:
    """Generators inside an affine subspace of dimension at most min(m, d)."""
    k = int(rng.integers(0, min(m, d) + 1))
    base = rng.uniform(-scale, scale, size=d)
    if k == 0:
        return Polytope(base[None, :])
    dirs = rng.uniform(-scale, scale, size=(k, d))
    g = k + 1 + int(rng.integers(0, 2))
    coeffs = rng.uniform(-1.0, 1.0, size=(g, k))
    return Polytope(base + coeffs @ dirs)


def random_map(n: int, d: int, m: int, norm_kind: str,
               rng: np.random.Generator) -> SetValuedMap:
    space = PseudometricSpace(random_metric(n, rng))
    values = tuple(random_polytope(d, m, rng) for _ in range(n))
    return SetValuedMap(space, values, NormTag(norm_kind, d), m)


def random_interval_map(n: int, rng: np.random.Generator,
                        norm_kind: str = "linf") -> SetValuedMap:
    """Interval-valued map on the line (d = 1, m = 1)."""
    space = PseudometricSpace(random_metric(n, rng))
    values = []
    for _ in range(n):
        lo = rng.uniform(-2.0, 2.0)
        width = rng.uniform(0.0, 2.0)
        values.append(Polytope(np.array([[lo], [lo + width]])))
    return SetValuedMap(space, tuple(values), NormTag(norm_kind, 1), 1)


def random_weighted_tree(n: int, rng: np.random.Generator) -> WeightedTree:
    """Random recursive tree rooted at 0 with uniform edge lengths."""
    parent = [-1]
    length = [0.0]
    for i in range(1, n):
        parent.append(int(rng.integers(0, i)))
        length.append(float(rng.uniform(0.5, 2.0)))
    return WeightedTree(tuple(parent), tuple(length), 0)
