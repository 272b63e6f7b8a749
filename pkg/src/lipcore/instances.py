"""Instance files: one JSON document shared by every front-end command.

Schema (all distances dimensionless):

    {
      "points":    ["a", "b", ...],            # optional labels
      "dist":      [[0, 1.5, "inf"], ...],     # row-major, "inf" = infinity
      "norm":      "linf" | "l1" | "l2",
      "m":         1,                          # affine-dimension bound
      "polytopes": [{"vertices": [[...], ...]}, ...],   # one per point
      "params":    {"N": 2, "L": 3, "hull_depth": 2,    # optional
                    "tol": 1e-9, "node_cap": 100000,
                    "subset_cap": 1000000, "seed": 0}
    }

Parse errors name the offending field and, for matrix entries, the row and
column.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import NormTag, Polytope
from .metric import validate_pseudometric
from .selection import SetValuedMap


class InstanceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Instance:
    map: SetValuedMap
    params: dict = field(default_factory=dict)
    digest: str = ""


def _entry_to_float(value, i: int, j: int) -> float:
    if isinstance(value, str):
        if value == "inf":
            return float("inf")
        raise InstanceFormatError(
            f'dist row {i} col {j}: expected a number or "inf", '
            f"got {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceFormatError(
            f"dist row {i} col {j}: expected a number, got {value!r}")
    return float(value)


def parse_instance(text: str, digest: str = "") -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(
            f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}"
        ) from e
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be a JSON object")

    if "dist" not in doc:
        raise InstanceFormatError('missing "dist" matrix')
    raw = doc["dist"]
    if not isinstance(raw, list) or not raw:
        raise InstanceFormatError('"dist" must be a nonempty matrix')
    n = len(raw)
    dist = np.zeros((n, n))
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != n:
            raise InstanceFormatError(
                f"dist row {i}: expected {n} entries, got "
                f"{len(row) if isinstance(row, list) else type(row).__name__}")
        for j, value in enumerate(row):
            dist[i, j] = _entry_to_float(value, i, j)

    labels = doc.get("points")
    if labels is not None:
        if not isinstance(labels, list) or len(labels) != n:
            raise InstanceFormatError(
                f'"points" must list {n} labels to match "dist"')
    space = validate_pseudometric(dist, labels)

    kind = doc.get("norm", "linf")
    if kind not in ("linf", "l1", "l2"):
        raise InstanceFormatError(f'unknown norm {kind!r}')

    if "polytopes" not in doc:
        raise InstanceFormatError('missing "polytopes" list')
    raw_polys = doc["polytopes"]
    if not isinstance(raw_polys, list) or len(raw_polys) != n:
        raise InstanceFormatError(
            f'"polytopes" must list exactly {n} entries')
    polys = []
    d = None
    for i, entry in enumerate(raw_polys):
        if not isinstance(entry, dict) or "vertices" not in entry:
            raise InstanceFormatError(
                f'polytope {i}: expected an object with "vertices"')
        verts = entry["vertices"]
        if not isinstance(verts, list) or not verts:
            raise InstanceFormatError(
                f"polytope {i}: vertices must be a nonempty list")
        arr = []
        for k, v in enumerate(verts):
            if not isinstance(v, list) or (d is not None and len(v) != d):
                raise InstanceFormatError(
                    f"polytope {i} vertex {k}: expected a length-{d} vector")
            if d is None:
                d = len(v)
            try:
                arr.append([float(x) for x in v])
            except (TypeError, ValueError):
                raise InstanceFormatError(
                    f"polytope {i} vertex {k}: non-numeric coordinate")
        polys.append(Polytope(np.array(arr)))

    m = doc.get("m", 1)
    if not isinstance(m, int) or m < 1:
        raise InstanceFormatError('"m" must be an integer >= 1')

    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise InstanceFormatError('"params" must be an object')

    try:
        svm = SetValuedMap(space, tuple(polys), NormTag(kind, d), m)
    except ValueError as e:
        raise InstanceFormatError(str(e)) from e
    return Instance(svm, dict(params), digest)


def load_instance(path) -> Instance:
    with open(path, "rb") as fh:
        data = fh.read()
    digest = hashlib.sha256(data).hexdigest()
    return parse_instance(data.decode("utf-8"), digest)


def instance_to_dict(F: SetValuedMap, params: dict | None = None) -> dict:
    """JSON-ready document for a map (inverse of parse_instance)."""
    n = F.space.n
    doc = {}
    if F.space.labels:
        doc["points"] = list(F.space.labels)
    doc["dist"] = [
        ["inf" if not np.isfinite(F.space.dist[i, j])
         else float(F.space.dist[i, j]) for j in range(n)]
        for i in range(n)
    ]
    doc["norm"] = F.norm.kind
    doc["m"] = F.m
    doc["polytopes"] = [
        {"vertices": [[float(x) for x in v] for v in p.vertices]}
        for p in F.values
    ]
    if params:
        doc["params"] = dict(params)
    return doc
