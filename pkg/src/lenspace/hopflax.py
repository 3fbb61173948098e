"""Quadratic Hopf-Lax semigroup on a finite metric-measure space.

The evolution of a function f under the quadratic cost is

    (Q_t f)(x) = min_y [ f(y) + d(x, y)^2 / (2t) ],    Q_0 f = f.

On a length space Q_t Q_s = Q_{t+s}; on a finite approximation the
semigroup identity holds up to a defect that shrinks with the mesh, and
Q_t f solves the Hamilton-Jacobi equation  du/dt = -|grad^- u|^2 / 2  in
the same approximate sense.  This module computes the evolution, the
graph gradient and descending-slope norms, and the associated defects
and residuals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .space import MeasuredSpace, ScalarField, check_binding, make_field


def _check_time(t: float, *, positive: bool) -> float:
    t = float(t)
    if not np.isfinite(t) or t < 0 or (positive and t == 0):
        kind = "positive" if positive else "nonnegative"
        raise ValueError(f"time must be {kind}, got {t}")
    return t


def apply(space: MeasuredSpace, f: ScalarField, t: float) -> ScalarField:
    """Evolve f for time t >= 0 by exact minimization over all points."""
    vals = check_binding(space, f)
    t = _check_time(t, positive=False)
    if t == 0:
        return make_field(space, vals)
    inv2t = 1.0 / (2.0 * t)
    out = (vals[None, :] + space.dist_sq * inv2t).min(axis=1)
    return make_field(space, out)


def apply_pruned(space: MeasuredSpace, f: ScalarField, t: float) -> ScalarField:
    """Evolve f restricting each minimization to a ball around x.

    The minimizer of f(y) + d(x,y)^2/(2t) always lies within distance
    sqrt(C t) of x for C = 2 (max f - min f): any farther candidate has
    d^2/(2t) > C/2 alone, already beating the trivial bound f(x) <= max f.
    A small slack widens the ball so floating-point rounding can never
    change which candidates matter; the result equals apply() bitwise.
    """
    vals = check_binding(space, f)
    t = _check_time(t, positive=False)
    if t == 0:
        return make_field(space, vals)
    inv2t = 1.0 / (2.0 * t)
    spread = float(vals.max() - vals.min())
    slack = 1e-12 * (1.0 + float(np.abs(vals).max()))
    cutoff = 2.0 * spread * t + 2.0 * t * slack
    out = np.empty(space.n)
    for x in range(space.n):
        inside = space.dist_sq[x] <= cutoff
        out[x] = (vals[inside] + space.dist_sq[x][inside] * inv2t).min()
    return make_field(space, out)


def grad_norm(space: MeasuredSpace, f: ScalarField, x: int) -> float:
    """Local slope |grad f|(x): largest |f(y) - f(x)| / d(x, y) over graph neighbors."""
    vals = check_binding(space, f)
    if not (0 <= x < space.n):
        raise ValueError(f"point {x} outside 0..{space.n - 1}")
    nbrs = space.adjacency[x]
    if not nbrs:
        raise ValueError(f"point {x} has no neighbors")
    return max(abs(vals[j] - vals[x]) / space.dist[x, j] for j, _ in nbrs)


def subgrad_norm(space: MeasuredSpace, f: ScalarField, x: int) -> float:
    """Descending slope |grad^- f|(x): like grad_norm but only drops count.

    Uses the positive part of f(x) - f(y), so the value is zero at a local
    minimum and never exceeds grad_norm.
    """
    vals = check_binding(space, f)
    if not (0 <= x < space.n):
        raise ValueError(f"point {x} outside 0..{space.n - 1}")
    nbrs = space.adjacency[x]
    if not nbrs:
        raise ValueError(f"point {x} has no neighbors")
    return max(max(vals[x] - vals[j], 0.0) / space.dist[x, j] for j, _ in nbrs)


def grad_norm_field(space: MeasuredSpace, f: ScalarField) -> np.ndarray:
    """|grad f| at every point, as an array."""
    vals = check_binding(space, f)
    src, dst, length = space.edge_arrays
    out = np.zeros(space.n)
    np.maximum.at(out, src, np.abs(vals[dst] - vals[src]) / length)
    return out


def subgrad_norm_field(space: MeasuredSpace, f: ScalarField) -> np.ndarray:
    """|grad^- f| at every point, as an array."""
    vals = check_binding(space, f)
    src, dst, length = space.edge_arrays
    out = np.zeros(space.n)
    np.maximum.at(out, src, np.maximum(vals[src] - vals[dst], 0.0) / length)
    return out


def lipschitz_constant(space: MeasuredSpace, f: ScalarField) -> float:
    """Global Lipschitz constant max |f(x) - f(y)| / d(x, y) over distinct pairs."""
    vals = check_binding(space, f)
    if space.n < 2:
        return 0.0
    diff = np.abs(vals[:, None] - vals[None, :])
    off = ~np.eye(space.n, dtype=bool)
    return float((diff[off] / space.dist[off]).max())


def semigroup_defect(space: MeasuredSpace, f: ScalarField, t: float, s: float) -> float:
    """max_x (Q_t Q_s f - Q_{t+s} f)(x); the reverse inequality is exact.

    Q_t Q_s f >= Q_{t+s} f holds on any metric space by the triangle
    inequality, so the defect is nonnegative and measures how far the
    space is from having true midpoints at the relevant scale.
    """
    _check_time(t, positive=True)
    _check_time(s, positive=True)
    two_step = apply(space, apply(space, f, s), t)
    one_step = apply(space, f, t + s)
    return float((two_step.values - one_step.values).max())


def midpoint_identity_defect(space: MeasuredSpace, x: int, y: int,
                             t: float, s: float) -> float:
    """Defect in d(x,y)^2/(t+s) = min_z [d(x,z)^2/t + d(z,y)^2/s].

    Always >= 0; equality characterizes exact length spaces.  The optimal
    z in the continuum divides the geodesic in ratio t : s.
    """
    for p in (x, y):
        if not (0 <= p < space.n):
            raise ValueError(f"point {p} outside 0..{space.n - 1}")
    _check_time(t, positive=True)
    _check_time(s, positive=True)
    through = (space.dist_sq[x] / t + space.dist_sq[y] / s).min()
    return float(through - space.dist_sq[x, y] / (t + s))


def hj_forward_residual(space: MeasuredSpace, f: ScalarField, t: float,
                        s: float) -> ScalarField:
    """Residual of the Hamilton-Jacobi equation at time t with step s:

        r(x) = (Q_{t+s} f - Q_t f)(x) / s + |grad^- Q_t f|(x)^2 / 2.

    In the continuum both terms cancel in the limit s -> 0; on a mesh the
    residual is small once s dominates the mesh scale.
    """
    _check_time(t, positive=True)
    _check_time(s, positive=True)
    here = apply(space, f, t)
    there = apply(space, f, t + s)
    slope = subgrad_norm_field(space, here)
    r = (there.values - here.values) / s + 0.5 * slope ** 2
    return make_field(space, r)


@dataclass(frozen=True)
class SemigroupTrace:
    """Evolution of one field across a time grid, with diagnostics.

    fields[i] is Q_{times[i]} f.  residuals[i] is the forward residual at
    times[i] using the gap to the next grid time as the step (the last
    time reuses the preceding gap).  convergence_defect is
    max (f - Q_{t_min} f), bounded by t_min * Lip(f)^2 / 2.
    """

    source: ScalarField
    times: np.ndarray
    fields: list
    lipschitz: np.ndarray
    residuals: list
    steps: np.ndarray
    mean_abs_residual: np.ndarray
    max_abs_residual: np.ndarray
    convergence_defect: float
    convergence_bound: float

    def to_json_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "fields": [fld.values.tolist() for fld in self.fields],
            "lip_constants": self.lipschitz.tolist(),
            "residual_summaries": [
                {"step": float(s), "mean_abs": float(m), "max_abs": float(M)}
                for s, m, M in zip(self.steps, self.mean_abs_residual,
                                   self.max_abs_residual)
            ],
            "convergence_defect": self.convergence_defect,
            "convergence_bound": self.convergence_bound,
            "source": self.source.values.tolist(),
        }


def make_trace(space: MeasuredSpace, f: ScalarField, times) -> SemigroupTrace:
    """Evolve f across a strictly increasing grid of positive times."""
    vals = check_binding(space, f)
    times = np.array([_check_time(t, positive=True) for t in times])
    if times.size == 0:
        raise ValueError("time grid is empty")
    if times.size > 1 and not np.all(np.diff(times) > 0):
        raise ValueError("time grid must be strictly increasing")

    fields = [apply(space, f, t) for t in times]
    lips = np.array([lipschitz_constant(space, fld) for fld in fields])

    if times.size > 1:
        gaps = np.diff(times)
        steps = np.append(gaps, gaps[-1])
    else:
        steps = np.array([0.5 * times[0]])
    residuals = [
        hj_forward_residual(space, f, t, s) for t, s in zip(times, steps)
    ]
    mean_abs = np.array([
        float(np.abs(r.values) @ space.measure) for r in residuals
    ])
    max_abs = np.array([float(np.abs(r.values).max()) for r in residuals])

    lo, hi = vals.min(), vals.max()
    for fld in fields:
        if fld.values.min() < lo or fld.values.max() > hi:
            raise AssertionError("evolution left the [min f, max f] band")
    for a, b in zip(fields, fields[1:]):
        if (b.values - a.values).max() > 0:
            raise AssertionError("evolution is not monotone in t")

    lip_f = lipschitz_constant(space, f)
    defect = float((vals - fields[0].values).max())
    return SemigroupTrace(
        source=f,
        times=times,
        fields=fields,
        lipschitz=lips,
        residuals=residuals,
        steps=steps,
        mean_abs_residual=mean_abs,
        max_abs_residual=max_abs,
        convergence_defect=defect,
        convergence_bound=float(times[0] * lip_f ** 2 / 2.0),
    )
