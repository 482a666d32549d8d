"""Degree-0/1 persistent homology of planar point clouds under the Chebyshev metric.

Rips complexes are built up to triangles; reduction is over the two-element
field with columns stored as Python integers used as bitsets.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

DEFAULT_POINT_CAP = 2000


class TopologyError(ValueError):
    """Raised for invalid point clouds or malformed filtrations."""


@dataclass(frozen=True)
class Point2:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise TopologyError(f"non-finite point ({self.a}, {self.b})")


@dataclass(frozen=True)
class Filtration:
    """Rips filtration on a planar point cloud.

    ``simplices`` holds ``(dimension, vertex_tuple, value)`` triples sorted by
    ``(value, dimension, vertex_tuple)``.
    """

    vertices: np.ndarray
    simplices: list
    max_radius: float

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def count(self, dim: int) -> int:
        return sum(1 for s in self.simplices if s[0] == dim)


@dataclass(frozen=True)
class PersistenceDiagram:
    degree: int
    pairs: tuple = ()
    truncated: tuple = field(default=())

    def __post_init__(self):
        pairs = tuple((float(b), float(d)) for b, d in self.pairs)
        for b, d in pairs:
            if not d > b:
                raise TopologyError(f"pair ({b}, {d}) has non-positive persistence")
            if b < 0:
                raise TopologyError(f"negative birth {b}")
        object.__setattr__(self, "pairs", pairs)
        flags = tuple(bool(f) for f in self.truncated) or (False,) * len(pairs)
        if len(flags) != len(pairs):
            raise TopologyError("truncated flags must match pairs")
        object.__setattr__(self, "truncated", flags)

    def __len__(self):
        return len(self.pairs)

    def as_array(self) -> np.ndarray:
        if not self.pairs:
            return np.empty((0, 2))
        return np.asarray(self.pairs, dtype=float)

    def sorted_pairs(self) -> list:
        return sorted(self.pairs)


def _as_points(points) -> np.ndarray:
    if len(points) and isinstance(points[0], Point2):
        arr = np.array([(p.a, p.b) for p in points], dtype=float)
    else:
        arr = np.asarray(points, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(arr)):
        raise TopologyError("point coordinates must be finite")
    return arr


def chebyshev_distance(p, q) -> float:
    """Return ``max(|p.a - q.a|, |p.b - q.b|)``."""
    pa, pb = (p.a, p.b) if isinstance(p, Point2) else p
    qa, qb = (q.a, q.b) if isinstance(q, Point2) else q
    return max(abs(pa - qa), abs(pb - qb))


def chebyshev_matrix(points) -> np.ndarray:
    pts = _as_points(points)
    diff = np.abs(pts[:, None, :] - pts[None, :, :])
    return diff.max(axis=2)


_DENSE_TRIPLES_MAX = 64


@lru_cache(maxsize=None)
def _triples(n: int):
    idx = np.array(list(combinations(range(n), 3)), dtype=np.intp).reshape(-1, 3)
    return idx[:, 0], idx[:, 1], idx[:, 2]


def _rips_arrays(pts: np.ndarray, max_radius: float):
    """Edges and triangles as index/value arrays, each sorted by (value, vertex tuple)."""
    n = len(pts)
    dist = chebyshev_matrix(pts)
    iu, ju = np.triu_indices(n, k=1)
    ev = dist[iu, ju]
    keep = ev <= max_radius
    edges = np.stack([iu[keep], ju[keep]], axis=1)
    ev = ev[keep]
    order = np.lexsort((edges[:, 1], edges[:, 0], ev))
    edges, ev = edges[order], ev[order]

    tris = np.empty((0, 3), dtype=np.intp)
    tv = np.empty(0)
    if 3 <= n <= _DENSE_TRIPLES_MAX and len(edges) >= 3:
        a, b, c = _triples(n)
        tv = np.maximum(np.maximum(dist[a, b], dist[a, c]), dist[b, c])
        keep = tv <= max_radius
        tris = np.stack([a[keep], b[keep], c[keep]], axis=1)
        tv = tv[keep]
        order = np.lexsort((tris[:, 2], tris[:, 1], tris[:, 0], tv))
        tris, tv = tris[order], tv[order]
    elif n >= 3 and len(edges) >= 3:
        adj = dist <= max_radius
        parts = []
        for i, j in edges:
            ks = np.flatnonzero(adj[i, j + 1:] & adj[j, j + 1:]) + j + 1
            if len(ks):
                block = np.empty((len(ks), 3), dtype=np.intp)
                block[:, 0], block[:, 1], block[:, 2] = i, j, ks
                parts.append(block)
        if parts:
            tris = np.concatenate(parts)
            a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
            tv = np.maximum(np.maximum(dist[a, b], dist[a, c]), dist[b, c])
            order = np.lexsort((c, b, a, tv))
            tris, tv = tris[order], tv[order]
    return dist, edges, ev, tris, tv


def build_rips(points, max_radius: float, *, point_cap: int = DEFAULT_POINT_CAP) -> Filtration:
    """Vietoris-Rips filtration up to dimension 2 with Chebyshev edge lengths.

    Parameters
    ----------
    points : sequence of Point2 or array-like of shape (n, 2)
    max_radius : float
        Edges longer than this (and triangles containing them) are omitted.
    point_cap : int
        Hard limit on the number of points; triangle enumeration is cubic.
    """
    pts = _check_cloud(points, max_radius, point_cap)
    n = len(pts)
    simplices = [(0, (i,), 0.0) for i in range(n)]
    if n >= 2:
        _, edges, ev, tris, tv = _rips_arrays(pts, max_radius)
        simplices.extend((1, (int(i), int(j)), float(v)) for (i, j), v in zip(edges, ev))
        simplices.extend(
            (2, (int(i), int(j), int(k)), float(v)) for (i, j, k), v in zip(tris, tv)
        )
    simplices.sort(key=lambda s: (s[2], s[0], s[1]))
    return Filtration(vertices=pts, simplices=simplices, max_radius=float(max_radius))


def _check_cloud(points, max_radius, point_cap) -> np.ndarray:
    pts = _as_points(points)
    if len(pts) < 1:
        raise TopologyError("need at least one point")
    if len(pts) > point_cap:
        raise TopologyError(f"{len(pts)} points exceeds the cap of {point_cap}")
    if not max_radius > 0:
        raise TopologyError("max_radius must be positive")
    return pts


def _validate(filtration: Filtration) -> None:
    seen = {}
    for dim, verts, value in filtration.simplices:
        if dim not in (0, 1, 2) or len(verts) != dim + 1:
            raise TopologyError(f"bad simplex {verts} of dimension {dim}")
        if dim:
            for drop in range(dim + 1):
                face = verts[:drop] + verts[drop + 1:]
                fv = seen.get(face)
                if fv is None or fv > value:
                    raise TopologyError(f"face {face} of {verts} missing or appears later")
        seen[verts] = value


def _find(parent: list, x: int) -> int:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _reduce(n, edges, edge_vals, tri_faces, tri_vals, r_max, degree):
    """Core reduction. ``tri_faces`` holds the three edge positions of each triangle."""
    parent = list(range(n))
    positive = []
    pd0 = []
    for pos, (u, v) in enumerate(edges):
        ru, rv = _find(parent, u), _find(parent, v)
        if ru == rv:
            positive.append(pos)
        else:
            # every vertex is born at 0, so the elder rule never matters
            parent[max(ru, rv)] = min(ru, rv)
            pd0.append((0.0, edge_vals[pos]))

    if degree == 0:
        n_components = len({_find(parent, v) for v in range(n)})
        pairs = [(b, d) for b, d in pd0 if d > b]
        flags = [False] * len(pairs) + [True] * n_components
        pairs += [(0.0, r_max)] * n_components
        return PersistenceDiagram(0, tuple(pairs), tuple(flags))

    remaining = len(positive)
    pivot_cols = {}
    pairs, flags = [], []
    for (p, q, s), value in zip(tri_faces, tri_vals):
        if remaining == 0:
            break
        col = (1 << p) | (1 << q) | (1 << s)
        while col:
            low = col.bit_length() - 1
            other = pivot_cols.get(low)
            if other is None:
                pivot_cols[low] = col
                remaining -= 1
                birth = edge_vals[low]
                if value > birth:
                    pairs.append((birth, value))
                    flags.append(False)
                break
            col ^= other

    for pos in positive:
        if pos not in pivot_cols and r_max > edge_vals[pos]:
            pairs.append((edge_vals[pos], r_max))
            flags.append(True)
    return PersistenceDiagram(1, tuple(pairs), tuple(flags))


def persistence(filtration: Filtration, degree: int, *, validate: bool = True) -> PersistenceDiagram:
    """Persistence diagram of the given degree (0 or 1) over the two-element field.

    Classes alive at ``max_radius`` are reported with death ``max_radius`` and
    flagged as truncated. Zero-persistence pairs are dropped.
    """
    if degree not in (0, 1):
        raise TopologyError("only degrees 0 and 1 are supported")
    if validate:
        _validate(filtration)
    edge_pos = {}
    edges, edge_vals, faces, tri_vals = [], [], [], []
    for dim, verts, value in filtration.simplices:
        if dim == 1:
            edge_pos[verts] = len(edges)
            edges.append(verts)
            edge_vals.append(value)
        elif dim == 2 and degree == 1:
            i, j, k = verts
            faces.append((edge_pos[(i, j)], edge_pos[(i, k)], edge_pos[(j, k)]))
            tri_vals.append(value)
    return _reduce(filtration.n_vertices, edges, edge_vals, faces, tri_vals,
                   filtration.max_radius, degree)


def diagram_h1(points, max_radius: float, *, point_cap: int = DEFAULT_POINT_CAP) -> PersistenceDiagram:
    """Degree-1 diagram of a point cloud without materialising a Filtration."""
    pts = _check_cloud(points, max_radius, point_cap)
    n = len(pts)
    if n < 3:
        return PersistenceDiagram(1)
    _, edges, ev, tris, tv = _rips_arrays(pts, max_radius)
    if len(tris) == 0 and len(edges) < 3:
        return PersistenceDiagram(1)
    pos = np.full((n, n), -1, dtype=np.intp)
    pos[edges[:, 0], edges[:, 1]] = np.arange(len(edges))
    if len(tris):
        a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
        faces = np.stack([pos[a, b], pos[a, c], pos[b, c]], axis=1).tolist()
    else:
        faces = []
    return _reduce(n, edges.tolist(), ev.tolist(), faces, tv.tolist(), float(max_radius), 1)


def total_persistence(pd: PersistenceDiagram) -> float:
    return float(sum(d - b for b, d in pd.pairs))


def betti1_at_scale(pd: PersistenceDiagram, r: float) -> int:
    return sum(1 for b, d in pd.pairs if b <= r < d)


def _diagram_array(pd) -> np.ndarray:
    if isinstance(pd, PersistenceDiagram):
        return pd.as_array()
    arr = np.asarray(pd, dtype=float)
    return arr.reshape(-1, 2)


def bottleneck_distance(pd_a, pd_b) -> float:
    """Exact bottleneck distance between two diagrams.

    Each side is augmented with the diagonal projections of the other side's
    points; the answer is the smallest candidate cost admitting a perfect
    matching.
    """
    if isinstance(pd_a, PersistenceDiagram) and isinstance(pd_b, PersistenceDiagram):
        if pd_a.degree != pd_b.degree:
            raise TopologyError("diagrams must have the same degree")
    a, b = _diagram_array(pd_a), _diagram_array(pd_b)
    na, nb = len(a), len(b)
    if na == 0 and nb == 0:
        return 0.0
    size = na + nb
    cost = np.full((size, size), np.inf)
    # rows: a points then diagonal slots for b; cols: b points then diagonal slots for a
    if na and nb:
        cost[:na, :nb] = np.maximum(
            np.abs(a[:, None, 0] - b[None, :, 0]), np.abs(a[:, None, 1] - b[None, :, 1])
        )
    if na:
        cost[np.arange(na), nb + np.arange(na)] = (a[:, 1] - a[:, 0]) / 2.0
    if nb:
        cost[na + np.arange(nb), np.arange(nb)] = (b[:, 1] - b[:, 0]) / 2.0
    cost[na:, nb:] = 0.0

    candidates = np.unique(cost[np.isfinite(cost)])
    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _perfect(cost <= candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])


def _perfect(adj: np.ndarray) -> bool:
    match = maximum_bipartite_matching(csr_matrix(adj.astype(np.int8)), perm_type="column")
    return bool(np.all(match >= 0))


def diagram_from_rows(rows: Iterable[Sequence[float]], degree: int) -> PersistenceDiagram:
    return PersistenceDiagram(degree, tuple((float(b), float(d)) for b, d in rows))
