"""Truncated universal covers of complete metric graphs, pullbacks, and the
core construction.

Nodes of the cover are the non-backtracking walks from a basepoint
(consecutive vertices distinct, v_{k+1} != v_{k-1}), up to a depth cap; the
walk of length zero is the root.  Deck transformations are never
materialized: the fiber over a base vertex stands in for its orbit, which is
exactly what the minimum-over-fiber distance formula ranges over.

The tree metric between two walks is (length a) + (length b) minus twice the
length of their longest common prefix; shared prefixes accumulate in the
same float order, so the subtraction is exact.

Construction is single-threaded and the node order (depth, then
lexicographic walk) is deterministic, so all reports are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .geometry import Polytope, hausdorff_distance, point_distance
from .metric import MetricGraph, PseudometricSpace, quotient_zero_distances
from .selection import (Selection, SetValuedMap, _solve_lipschitz_lp,
                        _solve_lipschitz_pocs, measured_seminorm,
                        membership_excess, optimal_selection,
                        verify_selection)

NODE_CAP = 10 ** 5
DEFAULT_DEPTH = 4


class NodeBudgetExceeded(Exception):
    def __init__(self, count, cap):
        super().__init__(f"cover would have {count} nodes, cap is {cap}")
        self.count = count
        self.cap = cap


class InvalidBasepoint(ValueError):
    pass


class EmptyFiber(Exception):
    def __init__(self, vertex):
        super().__init__(f"no cover node projects to vertex {vertex} "
                         f"within the hull depth")
        self.vertex = vertex


class FiberDistance(NamedTuple):
    """``exact`` is False when the truncation is too shallow to certify the
    minimum (the value is then only an upper bound)."""
    value: float
    exact: bool


def expected_node_count(n: int, depth: int) -> int:
    """Non-backtracking walk count 1 + sum_{k=1..L} (n-1)(n-2)^{k-1}."""
    total = 1
    for k in range(1, depth + 1):
        total += (n - 1) * (n - 2) ** (k - 1)
    return total


@dataclass(frozen=True)
class CoveringTree:
    """Depth-truncated universal cover of a complete metric graph."""
    base: MetricGraph
    basepoint: int
    depth: int
    walks: tuple[tuple[int, ...], ...] = field(repr=False)
    parent: tuple[int, ...] = field(repr=False)
    edge_len: tuple[float, ...] = field(repr=False)
    root_len: tuple[float, ...] = field(repr=False)
    node_index: dict = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.walks)

    def project(self, node: int) -> int:
        return self.walks[node][-1]

    def node_depth(self, node: int) -> int:
        return len(self.walks[node]) - 1

    def d_gamma(self, a: int, b: int) -> float:
        """Tree path metric between two nodes."""
        wa, wb = self.walks[a], self.walks[b]
        k = 0
        limit = min(len(wa), len(wb))
        while k < limit and wa[k] == wb[k]:
            k += 1
        anc = self.node_index[wa[:k]]
        return self.root_len[a] + self.root_len[b] - 2.0 * self.root_len[anc]

    def node_space(self) -> PseudometricSpace:
        """All-pairs tree metric as a pseudometric space on the nodes."""
        m = self.n_nodes
        d = np.zeros((m, m))
        for a in range(m):
            for b in range(a + 1, m):
                d[a, b] = d[b, a] = self.d_gamma(a, b)
        return PseudometricSpace(d)

    def tree_edges(self):
        """(parent, child) pairs; every tree edge, each once."""
        return [(self.parent[i], i) for i in range(1, self.n_nodes)]

    def as_dict(self):
        return {
            "basepoint": self.basepoint,
            "depth": self.depth,
            "nodes": [
                {"walk": list(w), "parent": self.parent[i],
                 "edge_length": self.edge_len[i]}
                for i, w in enumerate(self.walks)
            ],
        }

    def to_dot(self) -> str:
        lines = ["graph cover {"]
        for i, w in enumerate(self.walks):
            label = "-".join(str(v) for v in w)
            lines.append(f'  n{i} [label="{label}"];')
        for i in range(1, self.n_nodes):
            lines.append(
                f'  n{self.parent[i]} -- n{i} '
                f'[label="{self.edge_len[i]:g}"];')
        lines.append("}")
        return "\n".join(lines)


def build_cover(graph: MetricGraph, basepoint: int = 0, depth: int = 1,
                node_cap: int = NODE_CAP) -> CoveringTree:
    """Enumerate non-backtracking walks from the basepoint up to the given
    depth, breadth-first, children in increasing vertex order."""
    n = graph.n
    if n < 2:
        raise ValueError("cover needs at least two base vertices")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if not (0 <= basepoint < n):
        raise InvalidBasepoint(f"basepoint {basepoint} not in 0..{n - 1}")
    predicted = expected_node_count(n, depth)
    if predicted > node_cap:
        raise NodeBudgetExceeded(predicted, node_cap)

    dist = graph.base.dist
    walks: list[tuple[int, ...]] = [(basepoint,)]
    parent = [-1]
    edge_len = [0.0]
    root_len = [0.0]
    level = [0]
    for _ in range(depth):
        nxt = []
        for node in level:
            w = walks[node]
            last = w[-1]
            prev = w[-2] if len(w) >= 2 else -1
            for v in range(n):
                if v == last or v == prev:
                    continue
                walks.append(w + (v,))
                parent.append(node)
                edge_len.append(float(dist[last, v]))
                root_len.append(root_len[node] + float(dist[last, v]))
                nxt.append(len(walks) - 1)
        level = nxt
    index = {w: i for i, w in enumerate(walks)}
    return CoveringTree(graph, basepoint, depth, tuple(walks), tuple(parent),
                        tuple(edge_len), tuple(root_len), index)


def deck_rank(graph: MetricGraph) -> int:
    """Rank of the free deck group of the cover: |E| - |V| + 1."""
    n = graph.n
    return n * (n - 1) // 2 - n + 1


def fiber(tree: CoveringTree, x: int, max_depth: int | None = None):
    """Nodes projecting to base vertex x with walk length <= max_depth,
    in (depth, lexicographic) order."""
    if max_depth is None:
        max_depth = tree.depth
    return [i for i in range(tree.n_nodes)
            if tree.walks[i][-1] == x and tree.node_depth(i) <= max_depth]


def fiber_min_distance(tree: CoveringTree, node: int, y: int) -> FiberDistance:
    """min over the fiber of y of the tree distance from the given node.

    Exact (equal to the base distance between the node's projection and y)
    whenever node depth + 1 <= truncation depth; otherwise flagged as an
    upper bound only.
    """
    best = min(tree.d_gamma(node, m) for m in fiber(tree, y))
    exact = tree.node_depth(node) + 1 <= tree.depth
    return FiberDistance(float(best), exact)


def pullback_map(F: SetValuedMap, tree: CoveringTree) -> SetValuedMap:
    """Compose F with the covering projection; the node space carries the
    tree metric."""
    if F.space.n != tree.base.n:
        raise ValueError("map is not defined on the base vertex set")
    values = tuple(F.values[tree.project(i)] for i in range(tree.n_nodes))
    return SetValuedMap(tree.node_space(), values, F.norm, F.m)


def pullback_selection(f: Selection, tree: CoveringTree,
                       node_space: PseudometricSpace | None = None) -> Selection:
    """Compose a base selection with the covering projection.

    The certified seminorm carries over unchanged because projection never
    increases distances (each tree edge projects to a base edge of equal
    length).
    """
    if f.points.shape[0] != tree.base.n:
        raise ValueError("selection is not defined on the base vertex set")
    pts = np.array([f.points[tree.project(i)] for i in range(tree.n_nodes)])
    space = node_space if node_space is not None else tree.node_space()
    return Selection(space, pts, f.seminorm)


@dataclass(frozen=True)
class CoreMap:
    """Hulls of a tree selection over each fiber, with the selection's
    certified seminorm."""
    space: PseudometricSpace
    polytopes: tuple[Polytope, ...]
    c: float
    hull_depth: int
    selection: Selection  # the tree-node selection the hulls came from


def build_core(tree: CoveringTree, f: Selection, hull_depth: int) -> CoreMap:
    """Hull the selected points over each fiber truncated at hull_depth.

    Requires hull_depth <= depth - 1 so that the one-edge-longer witness
    walks used by verify_core exist inside the truncation.
    """
    if not 0 <= hull_depth <= tree.depth - 1:
        raise ValueError("hull_depth must lie in [0, depth-1]")
    if f.points.shape[0] != tree.n_nodes:
        raise ValueError("selection is not defined on the tree nodes")
    polys = []
    for x in range(tree.base.n):
        nodes = fiber(tree, x, hull_depth)
        if not nodes:
            raise EmptyFiber(x)
        polys.append(Polytope(f.points[nodes]))
    return CoreMap(tree.base.base, tuple(polys), float(f.seminorm),
                   hull_depth, f)


@dataclass(frozen=True)
class CoreReport:
    """verify_core outcome; two-sided excesses are flagged, never failed,
    because the deeper side of a truncated hull can stick out."""
    ok: bool
    c: float
    hull_depth: int
    tol: float
    containment: tuple[dict, ...]
    one_sided: tuple[dict, ...]
    symmetric: tuple[dict, ...]

    def as_dict(self):
        return {
            "ok": self.ok,
            "c": self.c,
            "hull_depth": self.hull_depth,
            "tol": self.tol,
            "containment": list(self.containment),
            "one_sided": list(self.one_sided),
            "symmetric": list(self.symmetric),
        }


def verify_core(core: CoreMap, F: SetValuedMap, tree: CoveringTree,
                tol: float = 1e-9) -> CoreReport:
    """Certify the core contracts against the truncation.

    (a) every generator of G(x) lies in F(x);
    (b) one-sided, truncation-consistent: every generator of G(y) is within
        c*d(x,y) of the one-level-deeper hull over x (whose witness is the
        lift of the edge from the generator's walk toward x);
    (c) the symmetric Hausdorff distance against c*d(x,y), reported and
        flagged when exceeded, since truncation asymmetry can inflate it.
    """
    n = core.space.n
    if F.space.n != n:
        raise ValueError("map and core are on different point sets")
    f = core.selection
    hd = core.hull_depth
    norm = F.norm
    c = core.c

    deeper = []
    for x in range(n):
        nodes = fiber(tree, x, hd + 1)
        deeper.append(Polytope(f.points[nodes]))

    containment = []
    cont_ok = True
    for x in range(n):
        worst = 0.0
        for g in core.polytopes[x].vertices:
            worst = max(worst, membership_excess(g, F.values[x], norm, tol))
        ok = worst <= 0.0
        cont_ok &= ok
        containment.append({"x": x, "excess": worst, "ok": ok})

    one_sided = []
    one_ok = True
    dist = core.space.dist
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            bound = c * float(dist[x, y])
            worst = -np.inf
            for g in core.polytopes[y].vertices:
                excess = point_distance(g, deeper[x], norm) - bound
                worst = max(worst, excess)
            ok = worst <= tol
            one_ok &= ok
            one_sided.append({"x": x, "y": y, "bound": bound,
                              "excess": float(worst), "ok": ok})

    symmetric = []
    for x in range(n):
        for y in range(x + 1, n):
            bound = c * float(dist[x, y])
            dh = hausdorff_distance(core.polytopes[x], core.polytopes[y],
                                    norm)
            symmetric.append({"x": x, "y": y, "hausdorff": dh,
                              "bound": bound,
                              "flagged": dh > bound + tol})

    return CoreReport(bool(cont_ok and one_ok), c, hd, float(tol),
                      tuple(containment), tuple(one_sided), tuple(symmetric))


@dataclass(frozen=True)
class PipelineResult:
    quotient_projection: tuple[int, ...]
    tree: CoveringTree
    node_selection: Selection
    lambda_tree: float
    base_selection: Selection
    lambda_base: float
    pullback_check: object
    core: CoreMap
    report: CoreReport


def core_pipeline(F: SetValuedMap, depth: int = DEFAULT_DEPTH,
                  hull_depth: int | None = None, basepoint: int = 0,
                  node_cap: int = NODE_CAP, tol: float = 1e-9,
                  ) -> PipelineResult:
    """Quotient zero distances, build the truncated cover, solve for the
    optimal selection on the tree vertex set, hull the fibers into a core,
    and verify its contracts.

    Also solves the base problem and checks that its pullback stays a
    selection of the pullback map at the same seminorm (projection never
    increases distances).
    """
    if hull_depth is None:
        hull_depth = depth - 1
    if not 0 <= hull_depth <= depth - 1:
        raise ValueError("hull_depth must lie in [0, depth-1]")

    qF, proj = quotient_with_members(F)
    graph = MetricGraph(qF.space)
    tree = build_cover(graph, basepoint, depth, node_cap)

    # Optimal selection on the truncated tree's vertex set.  Constraining
    # only the tree edges is enough: the tree metric is additive along
    # paths, so edgewise bounds chain to every pair.
    node_sel, lam_tree = _tree_selection(F, proj, tree)

    base_sel, lam_base = optimal_selection(F)
    qbase = Selection(qF.space, _quotient_points(base_sel.points, proj),
                      base_sel.seminorm)
    pmap = pullback_map(qF, tree)
    psel = pullback_selection(qbase, tree, node_space=pmap.space)
    pcheck = verify_selection(psel, pmap, qbase.seminorm)

    core = build_core(tree, node_sel, hull_depth)
    report = verify_core(core, qF, tree, tol)
    return PipelineResult(tuple(proj), tree, node_sel, lam_tree,
                          base_sel, lam_base, pcheck, core, report)


def quotient_with_members(F: SetValuedMap):
    """Quotient the space; the quotient map carries each class
    representative's polytope.  (Solves keep full member lists so the
    selection lands in every member's set.)"""
    qspace, proj = quotient_zero_distances(F.space)
    reps = []
    seen = set()
    for i, cl in enumerate(proj):
        if cl not in seen:
            seen.add(cl)
            reps.append(i)
    values = tuple(F.values[r] for r in reps)
    return SetValuedMap(qspace, values, F.norm, F.m), proj


def _quotient_points(points: np.ndarray, proj) -> np.ndarray:
    q = max(proj) + 1
    out = np.empty((q, points.shape[1]))
    for i, cl in enumerate(proj):
        out[cl] = points[i]
    return out


def _tree_selection(F: SetValuedMap, proj, tree: CoveringTree):
    """Optimal selection on the tree nodes: each node must lie in every
    member polytope of its base class; constraints on tree edges only."""
    classes: list[list[int]] = [[] for _ in range(max(proj) + 1)]
    for i, cl in enumerate(proj):
        classes[cl].append(i)
    node_classes = [classes[tree.project(i)] for i in range(tree.n_nodes)]
    memberships = [[F.values[i] for i in cls] for cls in node_classes]
    pair_list = [(p, ch, float(tree.edge_len[ch]))
                 for (p, ch) in tree.tree_edges()]
    if F.norm.kind == "l2":
        pts, lam = _solve_lipschitz_pocs(memberships, pair_list, F.norm,
                                         classes=node_classes)
    else:
        pts, lam = _solve_lipschitz_lp(memberships, pair_list, F.norm,
                                       classes=node_classes)
    space = tree.node_space()
    cert = measured_seminorm(pts, space.dist, F.norm)
    return Selection(space, pts, cert), float(max(lam, 0.0))
