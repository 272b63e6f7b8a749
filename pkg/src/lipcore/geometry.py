"""Polytopes in a finite-dimensional normed space.

Polytopes are V-representations: a nonempty list of generator vertices whose
convex hull is the set.  Generators need not be extreme points; pruning
redundant ones is an optional optimization, never required for correctness.
Supported norms: sup norm and 1-norm (distance queries are exact linear
programs) and the Euclidean norm (iterative projection, tolerance 1e-8).

Everything here is a pure function over frozen values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simplex import OPTIMAL, solve_lp

L2_TOL = 1e-8
CONTAINMENT_TOL = 1e-9

_KINDS = ("linf", "l1", "l2")


class DimensionMismatch(ValueError):
    pass


class NegativeRadius(ValueError):
    pass


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class NormTag:
    """A norm on R^d: kind is one of 'linf', 'l1', 'l2'."""
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("norm dimension must be >= 1")

    def __call__(self, v) -> float:
        v = np.asarray(v, dtype=float)
        if self.kind == "linf":
            return float(np.max(np.abs(v)))
        if self.kind == "l1":
            return float(np.sum(np.abs(v)))
        return float(np.sqrt(np.sum(v * v)))


@dataclass(frozen=True)
class Polytope:
    """Convex hull of finitely many generator vertices in R^d."""
    vertices: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.array(self.vertices, dtype=float))
        if v.size == 0:
            raise EmptyInput("polytope needs at least one vertex")
        if v.ndim != 2:
            raise ValueError("vertices must be a list of equal-length vectors")
        if not np.all(np.isfinite(v)):
            raise ValueError("polytope vertices must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]


def affine_dimension(p: Polytope) -> int:
    """Rank of the difference vectors from the first vertex (0 for a
    singleton)."""
    if p.n_vertices == 1:
        return 0
    diffs = p.vertices[1:] - p.vertices[0]
    return int(np.linalg.matrix_rank(diffs))


def point_distance(x, p: Polytope, norm: NormTag) -> float:
    """min over convex combinations w of ||x - sum_k w_k v_k||.

    Exact (up to LP arithmetic) for 'linf' and 'l1'; for 'l2' an accelerated
    projected-gradient iteration with a duality-gap stop, accurate to
    ``L2_TOL``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (p.dim,):
        raise DimensionMismatch(
            f"point has shape {x.shape}, polytope dimension is {p.dim}")
    if norm.dim != p.dim:
        raise DimensionMismatch("norm dimension does not match polytope")
    V = p.vertices
    g, d = V.shape
    if g == 1:
        return norm(x - V[0])
    if norm.kind == "l2":
        w = _project_simplex_l2(V, x)
        return float(np.linalg.norm(w @ V - x))

    if norm.kind == "linf":
        # Variables [w_1..w_g, t]: min t s.t. sum w = 1, +-(Vw - x)_c <= t.
        nvar = g + 1
        c = np.zeros(nvar)
        c[-1] = 1.0
        A_eq = np.zeros((1, nvar))
        A_eq[0, :g] = 1.0
        b_eq = [1.0]
        A_ub = np.zeros((2 * d, nvar))
        b_ub = np.zeros(2 * d)
        A_ub[:d, :g] = V.T
        A_ub[:d, -1] = -1.0
        b_ub[:d] = x
        A_ub[d:, :g] = -V.T
        A_ub[d:, -1] = -1.0
        b_ub[d:] = -x
    else:
        # Variables [w_1..w_g, s_1..s_d]: min sum s, +-(Vw - x)_c <= s_c.
        nvar = g + d
        c = np.zeros(nvar)
        c[g:] = 1.0
        A_eq = np.zeros((1, nvar))
        A_eq[0, :g] = 1.0
        b_eq = [1.0]
        A_ub = np.zeros((2 * d, nvar))
        b_ub = np.zeros(2 * d)
        A_ub[:d, :g] = V.T
        A_ub[:d, g:] = -np.eye(d)
        b_ub[:d] = x
        A_ub[d:, :g] = -V.T
        A_ub[d:, g:] = -np.eye(d)
        b_ub[d:] = -x

    res = solve_lp(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq)
    if res.status != OPTIMAL:
        raise RuntimeError(f"point_distance LP ended with {res.status}")
    return max(0.0, res.fun)


def _project_simplex_l2(V: np.ndarray, x: np.ndarray,
                        tol: float = L2_TOL, max_iter: int = 100_000):
    """Minimize ||w @ V - x||_2 over the weight simplex (FISTA).

    Stops when the linear-minimization (Frank-Wolfe) gap certifies the
    distance to be within ``tol`` of optimal.
    """
    g = V.shape[0]
    lip = float(np.linalg.norm(V, 2)) ** 2
    if lip == 0.0:
        return np.full(g, 1.0 / g)
    w = np.full(g, 1.0 / g)
    y = w.copy()
    t = 1.0
    for _ in range(max_iter):
        resid = y @ V - x
        grad = V @ resid
        w_next = _simplex_euclidean_projection(y - grad / lip)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = w_next + ((t - 1.0) / t_next) * (w_next - w)
        w, t = w_next, t_next

        resid = w @ V - x
        grad = V @ resid
        gap = float(grad @ w - np.min(grad))
        dist = float(np.linalg.norm(resid))
        if gap <= 0.5 * tol * max(tol, dist):
            break
    return w


def _simplex_euclidean_projection(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w : w >= 0, sum w = 1} (sort-based)."""
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, y.size + 1)
    cond = u - css / ks > 0
    rho = int(np.nonzero(cond)[0][-1])
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


def hausdorff_distance(p: Polytope, q: Polytope, norm: NormTag) -> float:
    """Hausdorff distance between the two hulls.

    The farthest point of a polytope from a convex set is attained at a
    generator, so scanning generators is exact.
    """
    if p.dim != q.dim:
        raise DimensionMismatch("polytopes live in different dimensions")
    a = max(point_distance(v, p, norm) for v in q.vertices)
    b = max(point_distance(v, q, norm) for v in p.vertices)
    return max(a, b)


def contained_in_minkowski_ball(q: Polytope, p: Polytope, r: float,
                                norm: NormTag,
                                tol: float = CONTAINMENT_TOL) -> bool:
    """True iff every generator of q is within r + tol of p, certifying
    q subset-of p + (closed r-ball); p + ball is convex, so generators
    suffice."""
    if r < 0:
        raise NegativeRadius(f"radius must be >= 0, got {r}")
    if p.dim != q.dim:
        raise DimensionMismatch("polytopes live in different dimensions")
    return all(point_distance(v, p, norm) <= r + tol for v in q.vertices)


def hull_union(ps: list[Polytope], prune: bool = False) -> Polytope:
    """Polytope generated by all generators of the inputs (the convex hull
    of the union).

    With ``prune=True``, generators lying in the hull of the remaining ones
    are dropped (certified by an exact sup-norm distance LP); the generated
    set is unchanged.
    """
    if not ps:
        raise EmptyInput("hull_union of no polytopes")
    d = ps[0].dim
    for p in ps[1:]:
        if p.dim != d:
            raise DimensionMismatch("polytopes live in different dimensions")
    verts = np.vstack([p.vertices for p in ps])
    if prune:
        verts = _prune_generators(verts)
    return Polytope(verts)


def _prune_generators(verts: np.ndarray) -> np.ndarray:
    norm = NormTag("linf", verts.shape[1])
    keep = list(range(verts.shape[0]))
    i = 0
    while i < len(keep) and len(keep) > 1:
        others = [k for k in keep if k != keep[i]]
        dist = point_distance(verts[keep[i]], Polytope(verts[others]), norm)
        if dist <= CONTAINMENT_TOL:
            keep.pop(i)
        else:
            i += 1
    return verts[keep]
