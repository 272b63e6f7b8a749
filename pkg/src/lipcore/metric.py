"""Finite pseudometric spaces, complete metric graphs and weighted trees.

Distances live in [0, +inf]; numpy's ``inf`` is the sentinel for unreachable
pairs and obeys the expected arithmetic (inf + x == inf).  All containers are
frozen after construction and every operation is a pure function, so values
can be shared freely across threads.

Comparisons in validation use a relative tolerance of 1e-9 (with floor 1.0),
matching user-supplied decimal input; exact rational arithmetic is out of
scope.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

VALIDATION_RTOL = 1e-9


def _tol(scale: float) -> float:
    return VALIDATION_RTOL * max(1.0, scale)


class AsymmetryError(ValueError):
    def __init__(self, i: int, j: int):
        super().__init__(f"dist[{i}][{j}] != dist[{j}][{i}]")
        self.i, self.j = i, j


class NegativeDistanceError(ValueError):
    def __init__(self, i: int, j: int):
        super().__init__(f"dist[{i}][{j}] is negative or not a number")
        self.i, self.j = i, j


class NonzeroDiagonalError(ValueError):
    def __init__(self, i: int):
        super().__init__(f"dist[{i}][{i}] != 0")
        self.i = i


class TriangleViolation(ValueError):
    def __init__(self, i: int, j: int, k: int):
        super().__init__(
            f"triangle inequality fails: dist[{i}][{j}] > "
            f"dist[{i}][{k}] + dist[{k}][{j}]")
        self.i, self.j, self.k = i, j, k


class NotATree(ValueError):
    pass


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PseudometricSpace:
    """n points with a symmetric distance matrix into [0, +inf].

    Zero off-diagonal distances and infinite distances are both allowed.
    Build instances through :func:`validate_pseudometric`; direct
    construction skips the axiom checks (used internally for submatrices
    and quotients, which inherit validity).
    """
    dist: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "dist", _freeze(self.dist))

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels else str(i)

    def finite_pairs(self):
        """Ordered (i, j), i < j, with finite distance."""
        n = self.n
        return [(i, j) for i in range(n) for j in range(i + 1, n)
                if np.isfinite(self.dist[i, j])]


def validate_pseudometric(matrix, labels=None) -> PseudometricSpace:
    """Check the pseudometric axioms and wrap the matrix.

    Raises NonzeroDiagonalError, NegativeDistanceError, AsymmetryError or
    TriangleViolation naming the offending indices.  Triangle checks skip
    triples whose right-hand side is infinite (the inequality is vacuous
    there).
    """
    d = np.array(matrix, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"distance matrix must be square, got {d.shape}")
    n = d.shape[0]
    for i in range(n):
        if not d[i, i] == 0.0:
            raise NonzeroDiagonalError(i)
    for i in range(n):
        for j in range(n):
            if np.isnan(d[i, j]) or d[i, j] < 0.0:
                raise NegativeDistanceError(i, j)
    for i in range(n):
        for j in range(i + 1, n):
            a, b = d[i, j], d[j, i]
            if a == b:          # covers inf == inf
                continue
            if abs(a - b) > _tol(max(abs(a), abs(b))):
                raise AsymmetryError(i, j)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            for k in range(n):
                if k == i or k == j:
                    continue
                rhs = d[i, k] + d[k, j]
                if not np.isfinite(rhs):
                    continue
                if d[i, j] > rhs + _tol(rhs):
                    raise TriangleViolation(i, j, k)
    if labels is not None:
        labels = tuple(str(x) for x in labels)
        if len(labels) != n:
            raise ValueError("label count does not match matrix size")
    return PseudometricSpace(_freeze(d), labels)


def quotient_zero_distances(space: PseudometricSpace):
    """Collapse zero-distance pairs into classes.

    Returns ``(quotient, projection)`` where ``projection[i]`` is the class
    index of point i.  Classes are numbered by their lowest member, so the
    projection is deterministic.  The triangle inequality makes the relation
    transitive and forces the quotient distance to be independent of the
    chosen representatives.
    """
    n = space.n
    d = space.dist
    proj = [-1] * n
    reps: list[int] = []
    for i in range(n):
        if proj[i] >= 0:
            continue
        c = len(reps)
        proj[i] = c
        reps.append(i)
        for j in range(i + 1, n):
            if proj[j] < 0 and d[i, j] == 0.0:
                proj[j] = c
    q = len(reps)
    qd = np.zeros((q, q))
    for a in range(q):
        for b in range(q):
            qd[a, b] = d[reps[a], reps[b]]
    qlabels = tuple(space.label(r) for r in reps) if space.labels else None
    return PseudometricSpace(_freeze(qd), qlabels), proj


@dataclass(frozen=True)
class MetricGraph:
    """Complete graph on the points of a metric space; edge {i,j} has length
    dist[i][j].  Requires every off-diagonal distance finite and positive
    (quotient zero distances away first)."""
    base: PseudometricSpace
    edges: tuple[tuple[int, int], ...] = field(init=False, default=())

    def __post_init__(self):
        d = self.base.dist
        n = self.base.n
        for i in range(n):
            for j in range(i + 1, n):
                if not np.isfinite(d[i, j]) or d[i, j] <= 0.0:
                    raise ValueError(
                        f"complete metric graph needs finite positive "
                        f"distances; dist[{i}][{j}] = {d[i, j]}")
        object.__setattr__(
            self, "edges",
            tuple((i, j) for i in range(n) for j in range(i + 1, n)))

    @property
    def n(self) -> int:
        return self.base.n

    def edge_length(self, i: int, j: int) -> float:
        return float(self.base.dist[i, j])


def path_metric(graph: MetricGraph) -> np.ndarray:
    """All-pairs shortest-path distances over the edge lengths.

    Because the lengths already satisfy the triangle inequality, the result
    equals the input matrix entrywise; the shortest-path closure is computed
    for real rather than assumed.
    """
    d = graph.base.dist.copy()
    n = graph.n
    for k in range(n):
        np.minimum(d, d[:, k, None] + d[None, k, :], out=d)
    return d


@dataclass(frozen=True)
class WeightedTree:
    """Rooted tree given by parent links with positive finite edge lengths.

    ``parent[root] == -1`` and ``length[root]`` is ignored.  Construction
    validates connectivity and acyclicity (NotATree otherwise).
    """
    parent: tuple[int, ...]
    length: tuple[float, ...]
    root: int

    def __post_init__(self):
        n = len(self.parent)
        if len(self.length) != n:
            raise NotATree("parent and length arrays differ in size")
        if not (0 <= self.root < n) or self.parent[self.root] != -1:
            raise NotATree("root must have parent -1")
        for i in range(n):
            if i != self.root:
                p = self.parent[i]
                if not (0 <= p < n):
                    raise NotATree(f"vertex {i} has invalid parent {p}")
                if not (np.isfinite(self.length[i]) and self.length[i] > 0):
                    raise NotATree(f"edge to vertex {i} has bad length")
        # Walk each vertex to the root; revisiting an in-progress vertex
        # means a cycle, and every walk must terminate at the root.
        state = [0] * n  # 0 unseen, 1 in progress, 2 done
        for i in range(n):
            chain = []
            v = i
            while state[v] == 0 and v != self.root:
                state[v] = 1
                chain.append(v)
                v = self.parent[v]
                if state[v] == 1:
                    raise NotATree(f"cycle through vertex {v}")
            for u in chain:
                state[u] = 2

    @property
    def n(self) -> int:
        return len(self.parent)


def tree_metric(tree: WeightedTree):
    """Pairwise path distances in the tree plus a four-point condition check.

    Returns ``(matrix, four_point_ok)``.  Distances are sums of edge lengths
    along the unique connecting path; the four-point condition
    d(a,b)+d(c,d) <= max(d(a,c)+d(b,d), d(a,d)+d(b,c)) is verified for all
    quadruples at tolerance 1e-12.
    """
    n = tree.n
    # Root paths as vertex lists; LCA = last common entry.
    paths = []
    for v in range(n):
        path = [v]
        while path[-1] != tree.root:
            path.append(tree.parent[path[-1]])
        paths.append(path[::-1])
    depth_len = np.zeros(n)
    for v in range(n):
        s = 0.0
        for u in paths[v][1:]:
            s += tree.length[u]
        depth_len[v] = s
    d = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            pa, pb = paths[a], paths[b]
            k = 0
            while k < len(pa) and k < len(pb) and pa[k] == pb[k]:
                k += 1
            lca = pa[k - 1]
            d[a, b] = d[b, a] = depth_len[a] + depth_len[b] \
                - 2.0 * depth_len[lca]
    return d, four_point_condition(d)


def four_point_condition(d: np.ndarray, tol: float = 1e-12) -> bool:
    """True iff d(a,b)+d(c,e) <= max(d(a,c)+d(b,e), d(a,e)+d(b,c)) + tol
    for every quadruple (a,b,c,e)."""
    n = d.shape[0]
    for a in range(n):  # chunk over the first index to bound memory at n^3
        ab = d[a][:, None, None] + d[None, :, :]       # d[a,b] + d[c,e]
        ac = d[a][None, :, None] + d[:, None, :]       # d[a,c] + d[b,e]
        ae = d[a][None, None, :] + d[:, :, None]       # d[a,e] + d[b,c]
        if not np.all(ab <= np.maximum(ac, ae) + tol):
            return False
    return True
