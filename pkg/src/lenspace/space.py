"""Finite metric-measure spaces with a shortest-path metric.

A space is a finite point set carrying the geodesic metric of a weighted
graph and a probability measure.  All distances are realized by paths in
the generating graph, so the metric is a length metric up to the mesh
scale: between any two points there is an approximate midpoint whose
quality is measured by ``midpoint_defect``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path


@dataclass(eq=False)
class MeasuredSpace:
    """Immutable bundle of points, metric, and measure.

    dist[i, j] is the graph shortest-path distance, measure a probability
    vector, adjacency the generating graph as per-point sorted lists of
    (neighbor, edge length).  mesh_h is the largest distance from a point
    to its nearest distinct point.  midpoint_defect is

        max_{x,y} min_z | max(d(x,z), d(z,y)) - d(x,y)/2 |

    which vanishes in the continuum limit of a length space.
    """

    n: int
    dist: np.ndarray
    measure: np.ndarray
    adjacency: list
    mesh_h: float
    midpoint_defect: float
    space_id: str
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    coords: np.ndarray | None = None
    labels: list | None = None

    @cached_property
    def dist_sq(self) -> np.ndarray:
        d2 = self.dist ** 2
        d2.flags.writeable = False
        return d2

    @cached_property
    def edge_arrays(self):
        """Directed edge lists (src, dst, length) with both orientations.

        Lengths are metric distances between the endpoints, not raw edge
        weights; the two differ when an edge is longer than the shortest
        path between its endpoints.
        """
        src, dst = [], []
        for i, nbrs in enumerate(self.adjacency):
            for j, _ in nbrs:
                src.append(i)
                dst.append(j)
        src = np.asarray(src, dtype=np.intp)
        dst = np.asarray(dst, dtype=np.intp)
        return src, dst, self.dist[src, dst]

    @property
    def diameter(self) -> float:
        return float(self.dist.max())


@dataclass(frozen=True)
class ScalarField:
    """A real-valued function on the points of one specific space."""

    values: np.ndarray
    space_id: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("field values must be a 1-d array")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def make_field(space: MeasuredSpace, values) -> ScalarField:
    """Bind an array of values to a space, validating shape and finiteness."""
    v = np.array(values, dtype=float)
    if v.shape != (space.n,):
        raise ValueError(
            f"field has {v.shape} values, space has {space.n} points"
        )
    if not np.all(np.isfinite(v)):
        raise ValueError("field values must be finite")
    return ScalarField(values=v, space_id=space.space_id)


def check_binding(space: MeasuredSpace, f: ScalarField) -> np.ndarray:
    """Return f's values after verifying f belongs to this space."""
    if f.space_id != space.space_id:
        raise ValueError(
            f"field bound to space {f.space_id} used on space {space.space_id}"
        )
    if f.values.shape != (space.n,):
        raise ValueError("field length does not match space size")
    return f.values


def _max_midpoint_defect(dist: np.ndarray) -> float:
    n = dist.shape[0]
    if n < 2:
        return 0.0
    worst = 0.0
    for x in range(n):
        # per (z, y): |max(d(x,z), d(z,y)) - d(x,y)/2|, minimized over z
        gap = np.abs(np.maximum(dist[x][:, None], dist) - dist[x][None, :] / 2.0)
        worst = max(worst, float(gap.min(axis=0).max()))
    return worst


def build_from_graph(edges, measure, n: int, *, kind: str = "custom",
                     params: dict | None = None, coords=None,
                     labels=None) -> MeasuredSpace:
    """Construct a space from an undirected weighted graph.

    edges is an iterable of (i, j, length) with 0 <= i, j < n, i != j and
    length > 0; parallel edges collapse to the shortest.  measure is a
    nonnegative weight vector with positive total, normalized here.  The
    graph must connect all points.
    """
    if n < 1:
        raise ValueError(f"need at least one point, got n={n}")
    w = np.array(measure, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"measure has {w.size} entries, expected n={n}")
    if not np.all(np.isfinite(w)):
        raise ValueError("measure weights must be finite")
    if np.any(w < 0):
        bad = int(np.argmin(w))
        raise ValueError(f"measure weight at point {bad} is negative ({w[bad]})")
    total = w.sum()
    if total <= 0:
        raise ValueError("measure weights sum to zero")
    if abs(total - 1.0) > 1e-12:
        # skip the divide for already-normalized input so that saving and
        # reloading a space reproduces the measure bit for bit
        w = w / total

    shortest_edge = {}
    for i, j, length in edges:
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i}, {j}) references a point outside 0..{n - 1}")
        if i == j:
            raise ValueError(f"self-loop at point {i}")
        length = float(length)
        if not (length > 0) or not np.isfinite(length):
            raise ValueError(f"edge ({i}, {j}) has nonpositive length {length}")
        key = (min(i, j), max(i, j))
        if key not in shortest_edge or length < shortest_edge[key]:
            shortest_edge[key] = length

    if n == 1:
        dist = np.zeros((1, 1))
        adjacency = [[]]
    else:
        if not shortest_edge:
            raise ValueError("graph has no edges; points 0 and 1 are not connected")
        keys = sorted(shortest_edge)
        rows = np.array([k[0] for k in keys])
        cols = np.array([k[1] for k in keys])
        vals = np.array([shortest_edge[k] for k in keys])
        graph = csr_matrix((vals, (rows, cols)), shape=(n, n))
        dist = shortest_path(graph, method="D", directed=False)
        if np.isinf(dist).any():
            i, j = np.argwhere(np.isinf(dist))[0]
            raise ValueError(f"graph is disconnected: points {i} and {j} are not connected")
        # Dijkstra per source can round the two directions differently
        dist = np.minimum(dist, dist.T)
        np.fill_diagonal(dist, 0.0)
        adjacency = [[] for _ in range(n)]
        for (i, j), length in shortest_edge.items():
            adjacency[i].append((j, length))
            adjacency[j].append((i, length))
        for nbrs in adjacency:
            nbrs.sort()

    off = dist + np.where(np.eye(n, dtype=bool), np.inf, 0.0)
    mesh_h = float(off.min(axis=1).max()) if n > 1 else 0.0

    dist.flags.writeable = False
    w.flags.writeable = False
    if coords is not None:
        coords = np.atleast_2d(np.array(coords, dtype=float))
        if coords.shape[0] != n:
            coords = coords.T
        if coords.shape[0] != n:
            raise ValueError(f"coords have {coords.shape} entries, expected n={n}")
        coords.flags.writeable = False
    if labels is not None:
        labels = [str(s) for s in labels]
        if len(labels) != n:
            raise ValueError(f"{len(labels)} labels for {n} points")

    digest = hashlib.sha256()
    digest.update(np.int64(n).tobytes())
    digest.update(np.ascontiguousarray(dist).tobytes())
    digest.update(np.ascontiguousarray(w).tobytes())

    return MeasuredSpace(
        n=n,
        dist=dist,
        measure=w,
        adjacency=adjacency,
        mesh_h=mesh_h,
        midpoint_defect=_max_midpoint_defect(dist),
        space_id=digest.hexdigest()[:16],
        kind=kind,
        params=dict(params or {}),
        coords=coords,
        labels=labels,
    )


@dataclass(frozen=True)
class MetricReport:
    """Worst-case defects of the metric and measure axioms."""

    triangle_violation: float
    symmetry_defect: float
    measure_sum_defect: float
    tol: float
    passed: bool


def validate_metric(space: MeasuredSpace, tol: float = 1e-9) -> MetricReport:
    """Measure how far dist and measure are from a metric and a probability.

    triangle_violation is max over (x, y, z) of d(x,y) - d(x,z) - d(z,y);
    nonpositive values mean the triangle inequality holds.
    """
    d = space.dist
    viol = -np.inf
    for x in range(space.n):
        # min over z of d(x,z) + d(z,y), all y at once
        through = (d[x][:, None] + d).min(axis=0)
        viol = max(viol, float((d[x] - through).max()))
    sym = float(np.abs(d - d.T).max())
    msum = float(abs(space.measure.sum() - 1.0))
    passed = viol <= tol and sym <= tol and msum <= tol
    return MetricReport(
        triangle_violation=viol,
        symmetry_defect=sym,
        measure_sum_defect=msum,
        tol=tol,
        passed=passed,
    )


def ball(space: MeasuredSpace, center: int, radius: float) -> np.ndarray:
    """Indices of the closed ball around a point."""
    if not (0 <= center < space.n):
        raise ValueError(f"center {center} outside 0..{space.n - 1}")
    if radius < 0:
        raise ValueError(f"radius must be nonnegative, got {radius}")
    return np.flatnonzero(space.dist[center] <= radius)


def doubling_constant(space: MeasuredSpace, r_min: float, r_max: float,
                      r_steps: int = 16) -> float:
    """Empirical doubling constant over a radius sweep.

    Returns max over centers x and radii r in [r_min, r_max] of
    measure(B(x, 2r)) / measure(B(x, r)).  Every sampled ball must carry
    positive measure.
    """
    if not (0 < r_min <= r_max):
        raise ValueError(f"need 0 < r_min <= r_max, got {r_min}, {r_max}")
    if r_steps < 1:
        raise ValueError("r_steps must be at least 1")
    radii = np.linspace(r_min, r_max, r_steps)
    worst = 1.0
    for r in radii:
        inner = (space.dist <= r) @ space.measure
        if np.any(inner <= 0):
            x = int(np.argmin(inner))
            raise ValueError(f"ball of radius {r} around point {x} has zero measure")
        outer = (space.dist <= 2 * r) @ space.measure
        worst = max(worst, float((outer / inner).max()))
    return worst


def local_poincare_constant(space: MeasuredSpace, f: ScalarField,
                            radius: float, dilation: float = 2.0) -> float:
    """Smallest C with a (1,1) Poincare inequality at scale `radius` for f.

    For each center, the mean oscillation of f on B(x, r) is compared to
    r times the mean of |grad f| on the dilated ball B(x, dilation*r),
    both means weighted by the measure.  Returns the largest ratio over
    centers; 0/0 counts as 0 and a positive numerator over a zero
    gradient mass gives inf.
    """
    from .hopflax import grad_norm_field

    vals = check_binding(space, f)
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if dilation < 1:
        raise ValueError(f"dilation must be >= 1, got {dilation}")
    grad = grad_norm_field(space, f)
    worst = 0.0
    for x in range(space.n):
        near = space.dist[x] <= radius
        mass = space.measure[near].sum()
        if mass <= 0:
            raise ValueError(f"ball of radius {radius} around point {x} has zero measure")
        mean_f = (vals[near] * space.measure[near]).sum() / mass
        osc = (np.abs(vals[near] - mean_f) * space.measure[near]).sum() / mass
        wide = space.dist[x] <= dilation * radius
        wmass = space.measure[wide].sum()
        grad_mean = (grad[wide] * space.measure[wide]).sum() / wmass
        denom = radius * grad_mean
        if osc <= 0:
            continue
        worst = max(worst, osc / denom) if denom > 0 else np.inf
    return float(worst)
