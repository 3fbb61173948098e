"""Log-Sobolev, Talagrand, and Poincare functionals with witness search.

Each inequality is evaluated as a ratio whose value is the largest
constant K the given witness function is compatible with:

    LSI:  2 * (integral of |grad^- f|^2) / entropy(f^2)     (f normalized)
    T:    2 * entropy(F^2) / W2(F^2 nu, nu)^2
    P:    (integral of |grad^- h|^2) / variance(h)

The best constant of the space is the infimum over all functions, so
the minimum over any family is an upper bound; estimates are reported
with their minimizing witness.  The implication chain LSI => T => P is
checked witness-wise, and the exponential trace functionals

    psi(t) = integral of exp(K t Q_t h) dnu   (h centered)
    phi(t) = log(integral of exp(K t Q_t g) dnu) / (K t)

monitor the two implications along the evolution: T(K) forces psi <= 1
and LSI(K) forces phi nonincreasing, with phi(t) -> mean of g as t -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.special import logsumexp

from .fields import random_smoothed_field, tilt_field
from .hopflax import apply, subgrad_norm_field
from .space import MeasuredSpace, ScalarField, check_binding, make_field
from .transport import w2


class DegenerateWitnessError(ValueError):
    """The witness carries no information for the requested ratio."""


_WHICH = {
    "lsi": "lsi",
    "t": "talagrand", "talagrand": "talagrand",
    "p": "poincare", "poincare": "poincare",
}


def _canon(which: str) -> str:
    key = str(which).lower()
    if key not in _WHICH:
        raise ValueError(f"unknown inequality {which!r}; use lsi, talagrand, or poincare")
    return _WHICH[key]


def entropy_functional(space: MeasuredSpace, F: ScalarField) -> float:
    """Entropy of F^2 dnu after normalizing the mass of F^2 to one.

    Returns the integral of p log p dnu for p = F^2 / (integral F^2 dnu),
    with 0 log 0 = 0.  Nonnegative by Jensen; zero iff |F| is constant
    nu-almost everywhere.
    """
    vals = check_binding(space, F)
    mass = float(vals ** 2 @ space.measure)
    if mass <= 0:
        raise DegenerateWitnessError("witness carries no information: F vanishes nu-a.e.")
    p = vals ** 2 / mass
    pos = p > 0
    return float((p[pos] * np.log(p[pos])) @ space.measure[pos])


def lsi_ratio(space: MeasuredSpace, f: ScalarField) -> float:
    """Largest K for which f satisfies the log-Sobolev inequality."""
    vals = check_binding(space, f)
    ent = entropy_functional(space, f)
    if ent <= 1e-12:
        raise DegenerateWitnessError(
            "witness carries no information: entropy of f^2 vanishes"
        )
    mass = float(vals ** 2 @ space.measure)
    slope = subgrad_norm_field(space, f)
    dirichlet = float(slope ** 2 @ space.measure) / mass
    return 2.0 * dirichlet / ent


def talagrand_ratio(space: MeasuredSpace, F: ScalarField) -> float:
    """Largest K for which F satisfies the Talagrand inequality."""
    vals = check_binding(space, F)
    mass = float(vals ** 2 @ space.measure)
    if mass <= 0:
        raise DegenerateWitnessError("witness carries no information: F vanishes nu-a.e.")
    target = vals ** 2 * space.measure / mass
    ent = entropy_functional(space, F)
    distance, _ = w2(space, target, space.measure)
    if distance <= 1e-12:
        raise DegenerateWitnessError(
            "witness carries no information: zero transport distance"
        )
    return 2.0 * ent / distance ** 2


def poincare_ratio(space: MeasuredSpace, h: ScalarField) -> float:
    """Largest K for which h satisfies the Poincare inequality."""
    vals = check_binding(space, h)
    centered = vals - float(vals @ space.measure)
    var = float(centered ** 2 @ space.measure)
    if var <= 1e-12:
        raise DegenerateWitnessError("witness carries no information: variance vanishes")
    slope = subgrad_norm_field(space, h)
    return float(slope ** 2 @ space.measure) / var


_RATIOS = {"lsi": lsi_ratio, "talagrand": talagrand_ratio, "poincare": poincare_ratio}


def laplacian_eigenfields(space: MeasuredSpace, k: int = 3) -> list:
    """Low nontrivial eigenfields of the measure-weighted graph Laplacian.

    Edge conductances (nu_i + nu_j) / (2 d_ij^2) make the quadratic form
    a symmetric surrogate for the subgradient Dirichlet energy, so the
    low generalized eigenvectors approximate Poincare extremals.
    """
    src, dst, length = space.edge_arrays
    weight = (space.measure[src] + space.measure[dst]) / (2.0 * length ** 2)
    lap = np.zeros((space.n, space.n))
    np.add.at(lap, (src, dst), -weight)
    diag = np.zeros(space.n)
    np.add.at(diag, src, weight)
    lap[np.diag_indices(space.n)] = diag
    floor = 1e-15 * space.measure.max()
    _, vecs = eigh(lap, np.diag(np.maximum(space.measure, floor)))
    out = []
    for col in range(1, min(k + 1, space.n)):
        v = vecs[:, col]
        peak = np.abs(v).max()
        out.append(make_field(space, v / peak if peak > 0 else v))
    return out


def default_witness_family(space: MeasuredSpace, seed: int = 0,
                           n_random: int = 6) -> list:
    """Labeled witness fields: tilts, eigenfields, random smoothed noise.

    Exponential tilts are only meaningful on non-periodic 1-d spaces
    (they realize the Gaussian extremals); eigenfields and random fields
    work everywhere.
    """
    family = []
    if (space.coords is not None and space.coords.shape[1] == 1
            and space.kind not in ("circle", "torus2d")):
        for alpha in (0.25, 0.5, 0.75, 1.0):
            family.append((f"tilt:{alpha}", tilt_field(space, alpha)))
    for i, f in enumerate(laplacian_eigenfields(space, k=3)):
        family.append((f"eigen:{i + 1}", f))
    for i in range(n_random):
        f = random_smoothed_field(space, np.random.default_rng([seed, 1000 + i]))
        family.append((f"random:{i}", f))
    return family


def default_witness_suites(space: MeasuredSpace, seed: int = 0,
                           n_random: int = 6) -> dict:
    """One family per chain stage; the same constructions serve all three."""
    family = default_witness_family(space, seed, n_random)
    return {"lsi": family, "talagrand": family, "poincare": family}


def _labeled(family) -> list:
    out = []
    for i, item in enumerate(family):
        if isinstance(item, ScalarField):
            out.append((f"witness:{i}", item))
        else:
            label, f = item
            out.append((str(label), f))
    return out


@dataclass(frozen=True)
class ConstantEstimate:
    """Family-restricted upper bound on a best constant, with its witness."""

    which: str
    value: float
    witness: ScalarField
    witness_label: str
    evaluations: tuple  # (label, ratio-or-None) per family member


def _refine_witness(space, ratio_fn, f, value, budget, rng):
    # single-coordinate random descent; keeps the value an upper bound
    vals = f.values.copy()
    scale = max(float(vals.max() - vals.min()), 1e-6)
    for k in range(budget):
        i = int(rng.integers(space.n))
        step = 0.2 * scale * (0.9 ** k) * float(rng.standard_normal())
        cand = vals.copy()
        cand[i] += step
        try:
            r = ratio_fn(space, make_field(space, cand))
        except DegenerateWitnessError:
            continue
        if r < value:
            value = r
            vals = cand
    return make_field(space, vals), value


# default refinement budgets; talagrand evaluations each solve a transport LP
DEFAULT_BUDGETS = {"lsi": 20, "talagrand": 6, "poincare": 20}


def estimate_constant(space: MeasuredSpace, which: str, family=None,
                      budget: int | None = None, seed: int = 0) -> ConstantEstimate:
    """Smallest ratio over a witness family, after local refinement.

    The result is an upper bound on the space's best constant (the true
    constant is an infimum over all functions).  Every witness gets its
    own refinement stream keyed by (seed, index), so extending the family
    never changes earlier evaluations and never increases the estimate.
    budget=None picks DEFAULT_BUDGETS[which].
    """
    which = _canon(which)
    ratio_fn = _RATIOS[which]
    if budget is None:
        budget = DEFAULT_BUDGETS[which]
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    members = _labeled(default_witness_family(space, seed) if family is None else family)
    if not members:
        raise ValueError("witness family is empty")
    best = None
    evaluations = []
    for idx, (label, f) in enumerate(members):
        try:
            r0 = ratio_fn(space, f)
        except DegenerateWitnessError:
            evaluations.append((label, None))
            continue
        f1, r1 = _refine_witness(space, ratio_fn, f, r0, budget,
                                 np.random.default_rng([seed, idx]))
        evaluations.append((label, r1))
        if best is None or r1 < best[2]:
            best = (label, f1, r1)
    if best is None:
        raise DegenerateWitnessError(
            f"every witness in the family is degenerate for {which} on this space"
        )
    return ConstantEstimate(which=which, value=best[2], witness=best[1],
                            witness_label=best[0], evaluations=tuple(evaluations))


def dual_talagrand_defect(space: MeasuredSpace, g: ScalarField, K: float) -> float:
    """log of integral exp(K Q_1 g) dnu, minus K times the mean of g.

    Nonpositive for every g exactly when the dual form of T(K) holds.
    """
    vals = check_binding(space, g)
    K = float(K)
    if K <= 0:
        raise ValueError(f"K must be positive, got {K}")
    q1 = apply(space, g, 1.0)
    lhs = float(logsumexp(K * q1.values, b=space.measure))
    return lhs - K * float(vals @ space.measure)


def _trace_grid(times) -> np.ndarray:
    t = np.array([float(x) for x in times])
    if t.size == 0:
        raise ValueError("time grid is empty")
    if not np.all(np.isfinite(t)) or np.any(t <= 0):
        raise ValueError("trace times must be positive and finite")
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise ValueError("trace times must be strictly increasing")
    return t


@dataclass(frozen=True)
class PsiTrace:
    """psi(t) = integral exp(K t Q_t h) dnu on a time grid, h centered."""

    K: float
    times: np.ndarray
    values: np.ndarray
    max_excess: float  # max psi - 1; nonpositive when T(K) holds


@dataclass(frozen=True)
class PhiTrace:
    """phi(t) = log(integral exp(K t Q_t g) dnu) / (K t) on a time grid."""

    K: float
    times: np.ndarray
    values: np.ndarray
    max_upward_step: float    # > 0 contradicts LSI(K) (phi nonincreasing)
    small_t_defect: float     # |phi(t_min) - mean g|; -> 0 as t_min -> 0
    mean_g: float
    endpoint_identity_gap: float  # |K (phi(1) - mean g) - dual defect|


def psi_trace(space: MeasuredSpace, h: ScalarField, K: float, times) -> PsiTrace:
    vals = check_binding(space, h)
    K = float(K)
    if K <= 0:
        raise ValueError(f"K must be positive, got {K}")
    grid = _trace_grid(times)
    centered = make_field(space, vals - float(vals @ space.measure))
    out = np.empty(grid.size)
    for i, t in enumerate(grid):
        evolved = apply(space, centered, t)
        with np.errstate(over="ignore"):  # psi saturates to inf for absurd K
            out[i] = float(np.exp(K * t * evolved.values) @ space.measure)
    return PsiTrace(K=K, times=grid, values=out,
                    max_excess=float(out.max() - 1.0))


def phi_trace(space: MeasuredSpace, g: ScalarField, K: float, times) -> PhiTrace:
    vals = check_binding(space, g)
    K = float(K)
    if K <= 0:
        raise ValueError(f"K must be positive, got {K}")
    grid = _trace_grid(times)
    mean_g = float(vals @ space.measure)

    def phi_at(t: float) -> float:
        evolved = apply(space, g, t)
        return float(logsumexp(K * t * evolved.values, b=space.measure)) / (K * t)

    out = np.array([phi_at(t) for t in grid])
    steps = np.diff(out)
    max_up = float(steps.max()) if steps.size else 0.0
    gap = abs(K * (phi_at(1.0) - mean_g) - dual_talagrand_defect(space, g, K))
    return PhiTrace(K=K, times=grid, values=out,
                    max_upward_step=max(max_up, 0.0),
                    small_t_defect=abs(float(out[0]) - mean_g),
                    mean_g=mean_g, endpoint_identity_gap=float(gap))


@dataclass(frozen=True)
class ChainCheck:
    stage: str          # lsi | talagrand | poincare
    witness_label: str
    ratio: float | None  # None when the witness is degenerate for the stage
    threshold: float
    passed: bool


@dataclass(frozen=True)
class ChainReport:
    """Witness-wise verdict on the implication chain at constant K.

    The LSI stage tests the hypothesis itself: failures there refute
    LSI(K) on this space and leave the implications untested.  Failures
    at the Talagrand or Poincare stage contradict an implication (at the
    stated tolerance) and are flagged as counterexamples, pointing at
    mesh error.
    """

    K: float
    tau: float
    checks: tuple
    hypothesis_refuted: bool
    counterexample: ChainCheck | None
    consistent: bool
    verdict: str


def verify_chain(space: MeasuredSpace, K: float, witness_suites: dict,
                 tau: float) -> ChainReport:
    """Check LSI => T => P witness-wise with (1 - tau) slack per stage."""
    K = float(K)
    tau = float(tau)
    if K <= 0:
        raise ValueError(f"K must be positive, got {K}")
    if not (0 < tau < 1):
        raise ValueError(f"tau must be in (0, 1), got {tau}")
    suites = {}
    for stage in ("lsi", "talagrand", "poincare"):
        if stage not in witness_suites or not witness_suites[stage]:
            raise ValueError(f"witness suite for stage {stage!r} is empty")
        suites[stage] = _labeled(witness_suites[stage])

    checks = []

    def run_stage(stage: str, threshold: float) -> bool:
        ratio_fn = _RATIOS[stage]
        clean = True
        for label, f in suites[stage]:
            try:
                r = ratio_fn(space, f)
            except DegenerateWitnessError:
                checks.append(ChainCheck(stage, label, None, threshold, True))
                continue
            ok = r >= threshold
            checks.append(ChainCheck(stage, label, float(r), threshold, ok))
            clean = clean and ok
        return clean

    hypothesis_ok = run_stage("lsi", K * (1 - tau))
    counterexample = None
    if hypothesis_ok:
        if run_stage("talagrand", K * (1 - tau) ** 2):
            run_stage("poincare", K * (1 - tau) ** 3)
    failures = [c for c in checks if not c.passed and c.stage != "lsi"]
    if failures:
        counterexample = failures[0]
    consistent = counterexample is None
    if not hypothesis_ok:
        verdict = f"hypothesis LSI({K:g}) fails on this space; implications untested"
    elif consistent:
        verdict = f"chain consistent at (K={K:g}, tau={tau:g})"
    else:
        verdict = (f"counterexample at stage {counterexample.stage}: witness "
                   f"{counterexample.witness_label} has ratio {counterexample.ratio:.6g} "
                   f"below {counterexample.threshold:.6g}; rerun on a finer mesh")
    return ChainReport(K=K, tau=tau, checks=tuple(checks),
                       hypothesis_refuted=not hypothesis_ok,
                       counterexample=counterexample,
                       consistent=consistent, verdict=verdict)


@dataclass(frozen=True)
class InequalityReport:
    """Constant estimates for one space plus a witness-wise chain check."""

    space_id: str
    K_lsi_upper: float
    K_talagrand_upper: float
    K_poincare_upper: float
    estimates: dict          # which -> ConstantEstimate
    chain: ChainReport
    tolerances: dict


def build_report(space: MeasuredSpace, seed: int = 0, budget: int | None = None,
                 K: float | None = None, tau: float = 0.05,
                 n_random: int = 6) -> InequalityReport:
    """Estimate all three constants and check the chain at K (default: the
    estimated LSI constant)."""
    family = default_witness_family(space, seed, n_random)
    estimates = {
        which: estimate_constant(space, which, family=family, budget=budget,
                                 seed=seed)
        for which in ("lsi", "talagrand", "poincare")
    }
    K_chain = float(estimates["lsi"].value if K is None else K)
    chain = verify_chain(space, K_chain, {s: family for s in estimates}, tau)
    return InequalityReport(
        space_id=space.space_id,
        K_lsi_upper=estimates["lsi"].value,
        K_talagrand_upper=estimates["talagrand"].value,
        K_poincare_upper=estimates["poincare"].value,
        estimates=estimates,
        chain=chain,
        tolerances={"tau": tau, "ratio_reproducibility": 1e-9},
    )
