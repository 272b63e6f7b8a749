"""Optimal Lipschitz selections and finiteness ratio experiments.

Given a polytope-valued map F on a finite pseudometric space, find points
f(x) in F(x) minimizing the Lipschitz seminorm: the least C such that
||f(x) - f(y)|| <= C rho(x,y) for all pairs.  For the sup and 1-norms this
is a single linear program; for the Euclidean norm, bisection over the
seminorm with a cyclic-projection feasibility oracle.

Zero-distance pairs are removed by quotienting before any solve (the
selection is constant on each zero-distance class and must lie in every
member's polytope); the solution is lifted back along the projection.
Infinite distances impose no constraint.

All operations are pure functions; subset evaluations in the finiteness
experiment are independent and reduced by max, so the result does not
depend on evaluation order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .geometry import (NormTag, Polytope, _project_simplex_l2,
                       affine_dimension, point_distance)
from .metric import PseudometricSpace, quotient_zero_distances
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, solve_lp

MEMBERSHIP_TOL = 1e-9
PAIR_TOL = 1e-9
SUBSET_CAP = 10 ** 6
POCS_SWEEPS = 10 ** 4
POCS_RESIDUAL = 1e-8
L2_BISECT_TOL = 1e-7


class Infeasible(Exception):
    """No selection exists: a zero-distance class forces a common point in
    polytopes with empty intersection."""

    def __init__(self, msg, witness_pair=None, witness_class=None):
        super().__init__(msg)
        self.witness_pair = witness_pair
        self.witness_class = witness_class


class SolverFailure(Exception):
    """The underlying solver gave up (iteration cap or numerical trouble);
    distinct from genuine infeasibility."""


class SubsetBudgetExceeded(Exception):
    def __init__(self, count, cap):
        super().__init__(f"{count} subsets exceed the cap of {cap}")
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class SetValuedMap:
    """One polytope per point of a pseudometric space, with a declared
    affine-dimension bound m."""
    space: PseudometricSpace
    values: tuple[Polytope, ...]
    norm: NormTag
    m: int

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) != self.space.n:
            raise ValueError("need exactly one polytope per point")
        d = self.norm.dim
        for i, p in enumerate(self.values):
            if p.dim != d:
                raise ValueError(f"polytope {i} has dimension {p.dim}, "
                                 f"norm has {d}")
            if affine_dimension(p) > self.m:
                raise ValueError(
                    f"polytope {i} has affine dimension > m = {self.m}")

    @property
    def dim(self) -> int:
        return self.norm.dim


@dataclass(frozen=True)
class Selection:
    """A point per space element together with a certified seminorm: the
    measured max of ||f(i) - f(j)|| / dist[i][j] over finite positive
    distances."""
    space: PseudometricSpace
    points: np.ndarray
    seminorm: float

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class FinitenessReport:
    N: int
    lambda_local: float
    lambda_global: float
    gamma_emp: float
    witness_subset: tuple[int, ...]
    per_subset: tuple[tuple[tuple[int, ...], float], ...]

    def as_dict(self):
        return {
            "N": self.N,
            "lambda_local": self.lambda_local,
            "lambda_global": self.lambda_global,
            "gamma_emp": self.gamma_emp,
            "witness_subset": list(self.witness_subset),
        }


def subset_count_bound(m: int, d: int) -> int:
    """Subset size 2^min(m+1, d) at which local solvability of the selection
    problem controls global solvability (finite-dimensional target)."""
    if m < 1 or d < 1:
        raise ValueError("m and d must be >= 1")
    return 2 ** min(m + 1, d)


def measured_seminorm(points: np.ndarray, dist: np.ndarray,
                      norm: NormTag) -> float:
    """Least C with ||p_i - p_j|| <= C dist[i][j] over finite positive
    distances (0.0 if there are none)."""
    n = dist.shape[0]
    best = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            d = dist[i, j]
            if d > 0.0 and np.isfinite(d):
                r = norm(points[i] - points[j]) / d
                if r > best:
                    best = r
    return best


def optimal_selection(F: SetValuedMap, pairs=None):
    """Minimize the Lipschitz seminorm of a selection of F.

    Returns ``(selection, lambda_star)``.  ``pairs``, when given, restricts
    the constrained pairs to the listed (i, j) index pairs; this is only
    sound when the metric is additive along them (tree metrics constrained
    on tree edges) and requires a space with no zero distances.

    Raises Infeasible when a zero-distance class forces a common point of
    disjoint polytopes, SolverFailure on solver breakdown.
    """
    n = F.space.n
    if n == 0:
        raise ValueError("empty space")
    if n == 1:
        pts = F.values[0].vertices[0][None, :].copy()
        return Selection(F.space, pts, 0.0), 0.0

    qspace, proj = quotient_zero_distances(F.space)
    q = qspace.n
    classes: list[list[int]] = [[] for _ in range(q)]
    for i, c in enumerate(proj):
        classes[c].append(i)
    memberships = [[F.values[i] for i in cls] for cls in classes]

    if pairs is not None:
        if q != n:
            raise ValueError("explicit pairs require a zero-free space")
        pair_list = []
        seen = set()
        for i, j in pairs:
            a, b = (i, j) if i < j else (j, i)
            if a == b or (a, b) in seen:
                continue
            seen.add((a, b))
            d = float(F.space.dist[a, b])
            if np.isfinite(d) and d > 0.0:
                pair_list.append((a, b, d))
    else:
        pair_list = [(a, b, float(qspace.dist[a, b]))
                     for a in range(q) for b in range(a + 1, q)
                     if np.isfinite(qspace.dist[a, b])]

    if F.norm.kind == "l2":
        cpoints, lam = _solve_lipschitz_pocs(memberships, pair_list, F.norm,
                                             classes=classes)
    else:
        cpoints, lam = _solve_lipschitz_lp(memberships, pair_list, F.norm,
                                           classes=classes)

    points = np.empty((n, F.dim))
    for i in range(n):
        points[i] = cpoints[proj[i]]
    cert = measured_seminorm(cpoints, qspace.dist, F.norm)
    return Selection(F.space, points, cert), float(max(lam, 0.0))


def _solve_lipschitz_lp(memberships, pair_list, norm, classes=None):
    """One LP: weight simplices per membership polytope, seminorm variable
    last; pair constraints per coordinate (sup norm) or via epigraph slacks
    (1-norm)."""
    npts = len(memberships)
    d = norm.dim
    blocks = []   # per point: list of (offset, Polytope)
    off = 0
    for mem in memberships:
        entry = []
        for poly in mem:
            entry.append((off, poly))
            off += poly.n_vertices
        blocks.append(entry)
    # epigraph slack blocks for the 1-norm pair constraints
    s_off = {}
    if norm.kind == "l1":
        for (a, b, dist) in pair_list:
            s_off[(a, b)] = off
            off += d
    lam_idx = off
    nvar = off + 1

    eq_rows, eq_rhs = [], []
    for entry in blocks:
        for (o, poly) in entry:
            row = np.zeros(nvar)
            row[o:o + poly.n_vertices] = 1.0
            eq_rows.append(row)
            eq_rhs.append(1.0)
    for entry in blocks:
        o0, p0 = entry[0]
        for (o, poly) in entry[1:]:
            for c in range(d):
                row = np.zeros(nvar)
                row[o:o + poly.n_vertices] = poly.vertices[:, c]
                row[o0:o0 + p0.n_vertices] -= p0.vertices[:, c]
                eq_rows.append(row)
                eq_rhs.append(0.0)

    ub_rows, ub_rhs = [], []
    for (a, b, dist) in pair_list:
        oa, pa = blocks[a][0]
        ob, pb = blocks[b][0]
        if norm.kind == "linf":
            for c in range(d):
                row = np.zeros(nvar)
                row[oa:oa + pa.n_vertices] = pa.vertices[:, c]
                row[ob:ob + pb.n_vertices] = -pb.vertices[:, c]
                row[lam_idx] = -dist
                ub_rows.append(row)
                ub_rhs.append(0.0)
                ub_rows.append(-row.copy())
                ub_rows[-1][lam_idx] = -dist
                ub_rhs.append(0.0)
        else:
            so = s_off[(a, b)]
            for c in range(d):
                row = np.zeros(nvar)
                row[oa:oa + pa.n_vertices] = pa.vertices[:, c]
                row[ob:ob + pb.n_vertices] = -pb.vertices[:, c]
                row[so + c] = -1.0
                ub_rows.append(row)
                ub_rhs.append(0.0)
                neg = -row.copy()
                neg[so + c] = -1.0
                ub_rows.append(neg)
                ub_rhs.append(0.0)
            row = np.zeros(nvar)
            row[so:so + d] = 1.0
            row[lam_idx] = -dist
            ub_rows.append(row)
            ub_rhs.append(0.0)

    c_obj = np.zeros(nvar)
    c_obj[lam_idx] = 1.0
    res = solve_lp(c_obj,
                   A_ub=np.array(ub_rows) if ub_rows else None,
                   b_ub=np.array(ub_rhs) if ub_rhs else None,
                   A_eq=np.array(eq_rows), b_eq=np.array(eq_rhs))
    if res.status == INFEASIBLE:
        raise _diagnose_infeasibility(memberships, classes)
    if res.status != OPTIMAL:
        raise SolverFailure(f"simplex ended with status {res.status}")

    points = np.empty((npts, d))
    for i, entry in enumerate(blocks):
        o, poly = entry[0]
        w = np.maximum(res.x[o:o + poly.n_vertices], 0.0)
        w /= w.sum()
        points[i] = w @ poly.vertices
    return points, float(res.fun)


def _diagnose_infeasibility(memberships, classes):
    """Locate a witness: a membership list with empty intersection, and if
    possible a disjoint pair inside it."""
    for ci, mem in enumerate(memberships):
        if len(mem) < 2:
            continue
        if not _polytopes_intersect(mem):
            for i, j in itertools.combinations(range(len(mem)), 2):
                if not _polytopes_intersect([mem[i], mem[j]]):
                    pair = (classes[ci][i], classes[ci][j]) if classes \
                        else (i, j)
                    return Infeasible(
                        f"points {pair[0]} and {pair[1]} are at distance 0 "
                        f"but their polytopes are disjoint",
                        witness_pair=pair)
            cls = tuple(classes[ci]) if classes else (ci,)
            return Infeasible(
                f"zero-distance class {cls} has empty joint intersection",
                witness_class=cls)
    return SolverFailure("LP reported infeasible but no empty membership "
                         "intersection was found")


def _polytopes_intersect(polys) -> bool:
    """Feasibility LP: a common point of all the polytopes."""
    d = polys[0].dim
    offs = []
    off = 0
    for p in polys:
        offs.append(off)
        off += p.n_vertices
    nvar = off
    eq_rows, eq_rhs = [], []
    for o, p in zip(offs, polys):
        row = np.zeros(nvar)
        row[o:o + p.n_vertices] = 1.0
        eq_rows.append(row)
        eq_rhs.append(1.0)
    o0, p0 = offs[0], polys[0]
    for o, p in list(zip(offs, polys))[1:]:
        for c in range(d):
            row = np.zeros(nvar)
            row[o:o + p.n_vertices] = p.vertices[:, c]
            row[o0:o0 + p0.n_vertices] -= p0.vertices[:, c]
            eq_rows.append(row)
            eq_rhs.append(0.0)
    res = solve_lp(np.zeros(nvar), A_eq=np.array(eq_rows),
                   b_eq=np.array(eq_rhs))
    return res.status == OPTIMAL


def _solve_lipschitz_pocs(memberships, pair_list, norm, classes=None,
                          sweeps=POCS_SWEEPS, residual=POCS_RESIDUAL,
                          bisect_tol=L2_BISECT_TOL):
    """Euclidean norm route: bisection on the seminorm with a cyclic
    projection (membership simplices x pairwise balls) feasibility oracle."""
    npts = len(memberships)
    d = norm.dim

    # A membership-feasible starting point per class (ignores pairs).
    base = np.empty((npts, d))
    for i, mem in enumerate(memberships):
        if len(mem) == 1:
            base[i] = mem[0].vertices[0]
        else:
            pt, ok = _common_point(mem, residual=1e-10, sweeps=sweeps)
            if not ok:
                raise _diagnose_infeasibility(memberships, classes)
            base[i] = pt

    hi = 0.0
    for (a, b, dist) in pair_list:
        hi = max(hi, float(np.linalg.norm(base[a] - base[b])) / dist)
    if hi == 0.0:
        return base, 0.0

    feas0, pts0 = _pocs_feasible(memberships, pair_list, 0.0, base,
                                 sweeps, residual)
    if feas0:
        best = _cleanup_membership(pts0, memberships)
        return best, 0.0

    lo, best = 0.0, base  # base is feasible at hi by construction
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        ok, pts = _pocs_feasible(memberships, pair_list, mid, best,
                                 sweeps, residual)
        if ok:
            hi, best = mid, pts
        else:
            lo = mid
    best = _cleanup_membership(best, memberships)
    lam = hi
    for (a, b, dist) in pair_list:
        lam = max(lam, float(np.linalg.norm(best[a] - best[b])) / dist)
    return best, lam


def _project_onto(poly: Polytope, x: np.ndarray) -> np.ndarray:
    w = _project_simplex_l2(poly.vertices, x, tol=1e-11)
    return w @ poly.vertices


def _common_point(polys, residual, sweeps):
    """Cyclic projections onto several polytopes; returns (point, ok)."""
    x = polys[0].vertices[0].copy()
    for _ in range(sweeps):
        moved = 0.0
        for p in polys:
            y = _project_onto(p, x)
            moved = max(moved, float(np.linalg.norm(y - x)))
            x = y
        err = max(float(np.linalg.norm(_project_onto(p, x) - x))
                  for p in polys)
        if err <= residual:
            return x, True
        if moved <= 1e-13:
            return x, False
    return x, False


def _pocs_feasible(memberships, pair_list, lam, start, sweeps, residual):
    """Cyclic projections in the product space; feasible iff the residual
    drops below the tolerance within the sweep budget."""
    pts = np.array(start, dtype=float)
    for _ in range(sweeps):
        moved = 0.0
        for i, mem in enumerate(memberships):
            for p in mem:
                y = _project_onto(p, pts[i])
                moved = max(moved, float(np.linalg.norm(y - pts[i])))
                pts[i] = y
        for (a, b, dist) in pair_list:
            r = lam * dist
            g = pts[a] - pts[b]
            gn = float(np.linalg.norm(g))
            if gn > r:
                shift = 0.5 * (gn - r) / gn
                delta = shift * g
                pts[a] -= delta
                pts[b] += delta
                moved = max(moved, float(np.linalg.norm(delta)))
        err = 0.0
        for i, mem in enumerate(memberships):
            for p in mem:
                err = max(err, float(
                    np.linalg.norm(_project_onto(p, pts[i]) - pts[i])))
        for (a, b, dist) in pair_list:
            err = max(err,
                      float(np.linalg.norm(pts[a] - pts[b])) - lam * dist)
        if err <= residual:
            return True, pts
        if moved <= 1e-13:
            return False, pts
    return False, pts


def _cleanup_membership(pts, memberships):
    """Final tight projection so selected points sit inside their polytopes
    to well below the membership tolerance."""
    out = np.array(pts, dtype=float)
    for i, mem in enumerate(memberships):
        if len(mem) == 1:
            out[i] = _project_onto(mem[0], out[i])
        else:
            x, _ = _common_point(mem, residual=1e-11, sweeps=2000)
            out[i] = x
    return out


def restrict(F: SetValuedMap, indices) -> SetValuedMap:
    """Restriction of F to a subset of points (order preserved)."""
    idx = list(indices)
    sub = F.space.dist[np.ix_(idx, idx)]
    labels = tuple(F.space.label(i) for i in idx) if F.space.labels else None
    space = PseudometricSpace(np.array(sub), labels)
    return SetValuedMap(space, tuple(F.values[i] for i in idx), F.norm, F.m)


def finiteness_experiment(F: SetValuedMap, N: int,
                          cap: int = SUBSET_CAP) -> FinitenessReport:
    """Compare the worst seminorm over small subsets with the global one.

    lambda_local is the max of optimal_selection over all subsets of at most
    N points; by restriction monotonicity it is attained at size
    min(N, n), so only those subsets are enumerated.  gamma_emp =
    lambda_global / lambda_local (1.0 when both vanish, inf when only
    lambda_local does).
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    n = F.space.n
    k = min(N, n)
    count = math.comb(n, k)
    if count > cap:
        raise SubsetBudgetExceeded(count, cap)

    _, lam_global = optimal_selection(F)
    lam_local = 0.0
    witness: tuple[int, ...] = tuple(range(k))
    rows = []
    for subset in itertools.combinations(range(n), k):
        _, lam = optimal_selection(restrict(F, subset))
        rows.append((subset, lam))
        if lam > lam_local:
            lam_local = lam
            witness = subset
    if lam_local > 0.0:
        gamma = lam_global / lam_local
    elif lam_global <= 0.0:
        gamma = 1.0
    else:
        gamma = math.inf
    return FinitenessReport(N, lam_local, lam_global, gamma, witness,
                            tuple(rows))


@dataclass(frozen=True)
class SelectionCheck:
    """Outcome of verify_selection: violations are data, not errors."""
    violations: tuple[tuple, ...]
    lam: float

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self):
        return {
            "lambda": self.lam,
            "ok": self.ok,
            "violations": [
                {"kind": v[0], "indices": list(v[1]), "excess": v[2]}
                for v in self.violations
            ],
        }


def membership_excess(x, poly: Polytope, norm: NormTag,
                      tol: float = MEMBERSHIP_TOL) -> float:
    """0.0 if x lies in the polytope within tol, else the distance in the
    given norm.

    Membership itself is norm-independent, so the decision uses the exact
    sup-norm LP; only the reported magnitude uses the requested norm.  (The
    Euclidean distance query is iterative and cannot certify 1e-9 on its
    own.)
    """
    linf = NormTag("linf", poly.dim)
    d_inf = point_distance(x, poly, linf)
    if norm.kind == "linf":
        return d_inf if d_inf > tol else 0.0
    if d_inf * _norm_ratio(norm, poly.dim) <= tol:
        return 0.0
    d = point_distance(x, poly, norm)
    return d if d > tol else 0.0


def _norm_ratio(norm: NormTag, d: int) -> float:
    # Upper bound for ||v|| / ||v||_inf.
    if norm.kind == "l1":
        return float(d)
    if norm.kind == "l2":
        return math.sqrt(d)
    return 1.0


def verify_selection(f: Selection, F: SetValuedMap, lam: float,
                     tol: float = PAIR_TOL) -> SelectionCheck:
    """Check membership and every pairwise seminorm constraint at the given
    lambda; returns the violations with their magnitudes."""
    n = F.space.n
    if f.points.shape != (n, F.dim):
        raise ValueError("selection and map shapes disagree")
    viol = []
    for i in range(n):
        excess = membership_excess(f.points[i], F.values[i], F.norm, tol)
        if excess > 0.0:
            viol.append(("membership", (i,), float(excess)))
    d = F.space.dist
    for i in range(n):
        for j in range(i + 1, n):
            if not np.isfinite(d[i, j]):
                continue
            gap = F.norm(f.points[i] - f.points[j]) - lam * d[i, j]
            if gap > tol:
                viol.append(("pair", (i, j), float(gap)))
    return SelectionCheck(tuple(viol), float(lam))
