"""Exact order-2 Wasserstein distance between measures on a finite space.

W2(mu0, mu1)^2 is the optimal value of the transportation linear program
with cost d(x, y)^2 over couplings of mu0 and mu1.  The LP route (w2) is
cross-checked by two independent oracles: the monotone-rearrangement cost
on path graphs, and exhaustive vertex enumeration of the coupling
polytope for n <= 4.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix

from .space import MeasuredSpace


def _check_marginal(space: MeasuredSpace, mu, name: str) -> np.ndarray:
    v = np.array(mu, dtype=float)
    if v.shape != (space.n,):
        raise ValueError(f"{name} has {v.size} entries, space has {space.n} points")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    if np.any(v < 0):
        bad = int(np.argmin(v))
        raise ValueError(f"{name} has a negative entry at point {bad} ({v[bad]})")
    total = v.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"{name} sums to {total!r}, off from 1 by {total - 1.0!r}")
    # tiny rescale so the two marginals have exactly equal LP supply
    return v / total


@dataclass(frozen=True)
class TransportPlan:
    """An optimal coupling between two measures, with its certificate."""

    coupling: np.ndarray
    source_marginal: np.ndarray
    target_marginal: np.ndarray
    cost: float
    duality_gap: float

    def check(self, space: MeasuredSpace, tol: float = 1e-9):
        """Assert the plan invariants; raises AssertionError on violation."""
        assert self.coupling.min() >= 0.0, "coupling has negative mass"
        row = np.abs(self.coupling.sum(axis=1) - self.source_marginal).max()
        col = np.abs(self.coupling.sum(axis=0) - self.target_marginal).max()
        assert row <= tol, f"row sums off by {row}"
        assert col <= tol, f"column sums off by {col}"
        recomputed = float((self.coupling * space.dist_sq).sum())
        assert abs(recomputed - self.cost) <= tol * (1.0 + abs(self.cost)), (
            f"stored cost {self.cost} vs recomputed {recomputed}"
        )
        assert self.duality_gap <= tol * (1.0 + self.cost), (
            f"duality gap {self.duality_gap} too large"
        )


@lru_cache(maxsize=8)
def _coupling_constraints(n: int) -> csr_matrix:
    # row i of the coupling sums to mu0[i], column j to mu1[j]
    k = np.arange(n * n)
    rows = np.concatenate([k // n, n + (k % n)])
    cols = np.concatenate([k, k])
    return csr_matrix((np.ones(2 * n * n), (rows, cols)), shape=(2 * n, n * n))


def w2(space: MeasuredSpace, mu0, mu1):
    """Wasserstein distance and optimal plan, via an exact LP solve.

    Returns (distance, TransportPlan).  Optimality is certified by the
    LP duality gap stored on the plan.
    """
    a = _check_marginal(space, mu0, "mu0")
    b = _check_marginal(space, mu1, "mu1")
    if np.array_equal(a, b):
        plan = TransportPlan(coupling=np.diag(a), source_marginal=a,
                             target_marginal=b, cost=0.0, duality_gap=0.0)
        return 0.0, plan
    n = space.n
    rhs = np.concatenate([a, b])
    # tight feasibility tolerances keep clamped marginal defects below 1e-9
    res = linprog(space.dist_sq.ravel(), A_eq=_coupling_constraints(n),
                  b_eq=rhs, bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    pi = res.x.reshape(n, n)
    if pi.min() < -1e-9:
        raise RuntimeError(f"LP returned mass {pi.min()} below zero")
    pi = np.maximum(pi, 0.0)
    cost = float((pi * space.dist_sq).sum())
    dual = float(res.eqlin.marginals @ rhs)
    plan = TransportPlan(coupling=pi, source_marginal=a, target_marginal=b,
                         cost=cost, duality_gap=abs(cost - dual))
    return float(np.sqrt(cost)), plan


def _path_order(space: MeasuredSpace) -> list:
    """Vertex order along a path graph, or raise if the graph is not a path."""
    if space.n == 1:
        return [0]
    deg = [len(nbrs) for nbrs in space.adjacency]
    ends = [i for i, d in enumerate(deg) if d == 1]
    if len(ends) != 2 or any(d > 2 for d in deg):
        raise ValueError("space is not a path graph")
    order = [min(ends)]
    prev = -1
    while len(order) < space.n:
        cur = order[-1]
        nxt = [j for j, _ in space.adjacency[cur] if j != prev]
        if len(nxt) != 1:
            raise ValueError("space is not a path graph")
        prev = cur
        order.append(nxt[0])
    return order


def w2_oracle_1d(space: MeasuredSpace, mu0, mu1) -> float:
    """Monotone-coupling W2 on a path graph, by merging the two CDFs.

    On a path the quadratic cost is minimized by the quantile coupling,
    so the optimal cost is computed directly without an LP.
    """
    a = _check_marginal(space, mu0, "mu0")
    b = _check_marginal(space, mu1, "mu1")
    order = _path_order(space)
    pos = np.zeros(space.n)
    for k in range(1, space.n):
        pos[k] = pos[k - 1] + space.dist[order[k - 1], order[k]]
    a = a[order]
    b = b[order]
    i = j = 0
    ra, rb = a[0], b[0]
    cost = 0.0
    while True:
        m = min(ra, rb)
        if m > 0:
            cost += m * (pos[i] - pos[j]) ** 2
        ra -= m
        rb -= m
        if ra == 0.0:
            i += 1
            if i == space.n:
                break
            ra = a[i]
        if rb == 0.0:
            j += 1
            if j == space.n:
                break
            rb = b[j]
    return float(np.sqrt(cost))


@lru_cache(maxsize=4)
def _coupling_vertices(n: int):
    """Spanning trees of the bipartite source/sink graph with flow solvers.

    Every vertex of the coupling polytope is the flow of some spanning
    tree of K_{n,n} (basic feasible solutions of the transportation LP),
    and tree flows are linear in the marginals.  Returns (cells, solve):
    cells[t] lists the 2n-1 coupling entries used by tree t, and
    solve[t] maps concat(mu0, mu1) to the flows on those entries.
    """
    nodes = 2 * n
    all_cells, all_solve = [], []
    for cells in combinations(range(n * n), nodes - 1):
        parent = list(range(nodes))

        def find(u):
            while parent[u] != u:
                parent[u] = parent[parent[u]]
                u = parent[u]
            return u

        merges = 0
        for cell in cells:
            ru, rv = find(cell // n), find(n + cell % n)
            if ru != rv:
                parent[ru] = rv
                merges += 1
        if merges != nodes - 1:
            continue
        incident = [[] for _ in range(nodes)]
        for pos, cell in enumerate(cells):
            incident[cell // n].append((pos, n + cell % n))
            incident[n + cell % n].append((pos, cell // n))
        remaining = np.eye(nodes)
        degree = [len(lst) for lst in incident]
        used = [False] * (nodes - 1)
        solve = np.zeros((nodes - 1, nodes))
        leaves = [u for u in range(nodes) if degree[u] == 1]
        while leaves:
            u = leaves.pop()
            if degree[u] != 1:
                continue
            pos, v = next(e for e in incident[u] if not used[e[0]])
            used[pos] = True
            solve[pos] = remaining[u]
            remaining[v] -= remaining[u]
            degree[u] = 0
            degree[v] -= 1
            if degree[v] == 1:
                leaves.append(v)
        all_cells.append(cells)
        all_solve.append(solve)
    return np.array(all_cells), np.stack(all_solve)


def brute_force_w2(space: MeasuredSpace, mu0, mu1) -> float:
    """W2 by exhaustive search over coupling-polytope vertices; n <= 4 only."""
    if space.n > 4:
        raise ValueError(f"exhaustive vertex search supports n <= 4, got n={space.n}")
    a = _check_marginal(space, mu0, "mu0")
    b = _check_marginal(space, mu1, "mu1")
    if space.n == 1:
        return 0.0
    cells, solve = _coupling_vertices(space.n)
    flows = solve @ np.concatenate([a, b])
    feasible = flows.min(axis=1) >= -1e-12
    costs = (flows * space.dist_sq.ravel()[cells]).sum(axis=1)
    best = float(costs[feasible].min())
    return float(np.sqrt(max(best, 0.0)))
