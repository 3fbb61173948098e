"""Command-line front end: space generation, semigroup diagnostics,
constant estimation, chain verification, transport, and plot-data export.

Every run writes its artifacts plus a run.json manifest (config echo,
version, seed, wall time) into the output directory.  Artifacts are
byte-deterministic given the same config and seed; the manifest is not
(it records wall time).  Exit codes: 0 all checks pass, 1 a mathematical
check failed (invariant violation, chain counterexample, refuted
hypothesis, trace above tolerance), 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .fields import load_field_csv, random_smoothed_field, resolve_field, \
    save_field_csv, tilt_field
from .generators import SpaceSpec, generate, parse_space_spec, refine, save_space
from .hopflax import hj_forward_residual, make_trace, semigroup_defect
from .inequalities import build_report, default_witness_suites, estimate_constant, \
    phi_trace, psi_trace, verify_chain
from .space import doubling_constant, local_poincare_constant, validate_metric
from .transport import w2


@dataclass(frozen=True)
class RunConfig:
    """One CLI invocation: command, space source, and tuning knobs."""

    command: str
    space: str | None = None
    k: float | None = None
    times: str | None = None
    seed: int = 0
    tau: float = 0.05
    out_dir: str = "."
    options: dict = field(default_factory=dict)


def _jsonable(obj):
    if isinstance(obj, (bool, np.bool_)):  # before int: bool is an int subclass
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    return obj


def _write_json(doc: dict, path: str):
    with open(path, "w") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: str, header: str, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(
                f"{x:.17g}" if isinstance(x, (float, np.floating)) else str(x)
                for x in row) + "\n")


def _parse_times(text: str) -> np.ndarray:
    head = text.split(":")[0]
    if head in ("geo", "lin"):
        parts = text.split(":")
        if len(parts) != 4:
            raise ValueError(f"bad time grid {text!r}; use geo:MIN:MAX:COUNT")
        lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
        if count < 1 or lo <= 0 or hi < lo or (count > 1 and hi == lo):
            raise ValueError(f"bad time grid {text!r}")
        if count == 1:
            return np.array([lo])
        fn = np.geomspace if head == "geo" else np.linspace
        return fn(lo, hi, count)
    try:
        return np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise ValueError(f"bad time grid {text!r}") from None


def _load_space(text: str):
    spec = parse_space_spec(text)
    return spec, generate(spec)


def _space_summary(space) -> dict:
    return {
        "id": space.space_id,
        "kind": space.kind,
        "n": space.n,
        "mesh_h": space.mesh_h,
        "midpoint_defect": space.midpoint_defect,
        "diameter": space.diameter,
    }


def _resolve_marginal(space, text: str, seed: int) -> np.ndarray:
    if text == "nu":
        return space.measure.copy()
    if text == "uniform":
        return np.full(space.n, 1.0 / space.n)
    if text.startswith("point:"):
        i = int(text[6:])
        if not (0 <= i < space.n):
            raise ValueError(f"point index {i} outside 0..{space.n - 1}")
        v = np.zeros(space.n)
        v[i] = 1.0
        return v
    if text.startswith("tilt:"):
        dens = tilt_field(space, float(text[5:])).values ** 2 * space.measure
        return dens / dens.sum()
    if text.endswith(".csv"):
        w = load_field_csv(space, text).values
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError(f"marginal weights in {text} must be nonnegative with positive sum")
        return w / w.sum()
    raise ValueError(
        f"unknown marginal spec {text!r}; use nu, uniform, point:I, tilt:A, or a .csv path"
    )


def _out_path(cfg: RunConfig, name: str) -> str:
    return name if os.path.isabs(name) else os.path.join(cfg.out_dir, name)


def _cmd_gen(cfg: RunConfig):
    opt = cfg.options
    if cfg.space:
        spec = parse_space_spec(cfg.space)
    else:
        spec = SpaceSpec(kind=opt["kind"], n=opt["n"], m=opt["m"],
                         length=opt["length"], sigma=opt["sigma"], width=opt["width"],
                         side_x=opt["side_x"], side_y=opt["side_y"],
                         path=opt.get("path", ""))
    space = generate(spec)
    out = _out_path(cfg, opt["out"])
    save_space(space, out)
    report = validate_metric(space)
    doc = {"space": _space_summary(space), "metric_check": asdict(report),
           "spec": spec.describe()}
    return (0 if report.passed else 1), doc, [out]


def _cmd_semigroup(cfg: RunConfig):
    opt = cfg.options
    spec, space = _load_space(cfg.space)
    f = resolve_field(space, opt["field"], cfg.seed)
    times = _parse_times(cfg.times or "geo:0.01:1:8")
    trace = make_trace(space, f, times)

    failed = []
    bound = space.diameter
    for t, lip in zip(trace.times, trace.lipschitz):
        if lip > bound / t + 1e-12 * (1.0 + bound / t):
            failed.append(f"Lip(Q_t f) = {lip} above diam/t = {bound / t} at t = {t}")

    study = opt.get("residual_study")
    if study:
        parts = study.split(":")
        t0, s_max, levels = float(parts[0]), float(parts[1]), int(parts[2])
    else:
        mid = len(times) // 2
        t0 = float(times[mid])
        s_max = min(t0 / 2.0, float(trace.steps[mid]))
        levels = 3
    rows = []
    for j in range(levels):
        s = s_max / 2 ** j
        r = hj_forward_residual(space, f, t0, s)
        rows.append((s, float(np.abs(r.values) @ space.measure)))

    defect_rows = None
    if opt.get("refinements", 0) > 0:
        if spec.kind == "custom_file":
            raise ValueError("defect study needs a generator space spec, not a file")
        if opt["field"].endswith(".csv"):
            raise ValueError("defect study needs a named field spec, not a CSV file")
        dt, ds = opt["defect_t"], opt["defect_s"]
        defect_rows = []
        level_spec = spec
        for _ in range(opt["refinements"] + 1):
            level_space = generate(level_spec)
            level_field = resolve_field(level_space, opt["field"], cfg.seed)
            defect = semigroup_defect(level_space, level_field, dt, ds)
            defect_rows.append((level_space.mesh_h, defect))
            level_spec = refine(level_spec)

    out = _out_path(cfg, opt["out"])
    field_csv = os.path.splitext(out)[0] + "_source.csv"
    save_field_csv(f, field_csv)
    doc = {
        "space": _space_summary(space),
        "field": opt["field"],
        "trace": trace.to_json_dict(),
        "residual_vs_s": [list(r) for r in rows],
        "defect_vs_mesh": [list(r) for r in defect_rows] if defect_rows else None,
        "checks": {"lipschitz_bound_failures": failed},
    }
    _write_json(doc, out)
    return (1 if failed else 0), doc, [out, field_csv]


def _cmd_constants(cfg: RunConfig):
    opt = cfg.options
    _, space = _load_space(cfg.space)
    which = opt["which"]
    names = ("lsi", "talagrand", "poincare") if which == "all" else \
        tuple(w.strip() for w in which.split(","))
    report = build_report(space, seed=cfg.seed, budget=opt["budget"],
                          K=cfg.k, tau=cfg.tau)
    from .inequalities import _RATIOS  # reproducibility check uses the same ratios

    artifacts = []
    witnesses = []
    failures = []
    for name in names:
        est = report.estimates[name]
        ref = _out_path(cfg, f"witness_{name}.csv")
        save_field_csv(est.witness, ref)
        artifacts.append(ref)
        again = _RATIOS[name](space, est.witness)
        if abs(again - est.value) > 1e-9 * (1.0 + abs(est.value)):
            failures.append(f"{name} witness ratio {est.value} not reproducible ({again})")
        witnesses.append({"which": name, "label": est.witness_label,
                          "ratio": est.value, "field_ref": os.path.basename(ref),
                          "evaluations": [[lab, r] for lab, r in est.evaluations]})
    doc = {
        "space": _space_summary(space),
        "K_estimates": {"lsi": report.K_lsi_upper,
                        "talagrand": report.K_talagrand_upper,
                        "poincare": report.K_poincare_upper},
        "witnesses": witnesses,
        "chain": [asdict(c) for c in report.chain.checks],
        "chain_verdict": report.chain.verdict,
        "tolerances": report.tolerances,
        "checks": {"reproducibility_failures": failures},
    }
    out = _out_path(cfg, opt["out"])
    _write_json(doc, out)
    return (1 if failures else 0), doc, [out] + artifacts


def _cmd_chain(cfg: RunConfig):
    opt = cfg.options
    _, space = _load_space(cfg.space)
    if cfg.k is None:
        raise ValueError("chain needs --K")
    suites = default_witness_suites(space, cfg.seed, opt["n_random"])
    report = verify_chain(space, cfg.k, suites, cfg.tau)

    psi_grid = _parse_times(opt["psi_times"])
    phi_grid = _parse_times(opt["phi_times"])
    psi_rows, phi_rows = [], []
    psi_excess, phi_step, endpoint_gap = -np.inf, 0.0, 0.0
    for i in range(opt["trace_fields"]):
        h = random_smoothed_field(space, np.random.default_rng([cfg.seed, 2000 + i]))
        ps = psi_trace(space, h, cfg.k, psi_grid)
        ph = phi_trace(space, h, cfg.k, phi_grid)
        psi_excess = max(psi_excess, ps.max_excess)
        phi_step = max(phi_step, ph.max_upward_step)
        endpoint_gap = max(endpoint_gap, ph.endpoint_identity_gap)
        psi_rows.extend((float(t), float(v), i) for t, v in zip(ps.times, ps.values))
        phi_rows.extend((float(t), float(v), i) for t, v in zip(ph.times, ph.values))

    dual_ok = psi_excess <= opt["psi_tol"] and phi_step <= opt["phi_tol"]
    code = 0 if (report.consistent and not report.hypothesis_refuted and dual_ok) else 1
    doc = {
        "space": _space_summary(space),
        "K": cfg.k,
        "tau": cfg.tau,
        "chain": [asdict(c) for c in report.checks],
        "verdict": report.verdict,
        "hypothesis_refuted": report.hypothesis_refuted,
        "consistent": report.consistent,
        "traces": {
            "psi": {"rows": [list(r) for r in psi_rows], "max_excess": psi_excess,
                    "tolerance": opt["psi_tol"]},
            "phi": {"rows": [list(r) for r in phi_rows], "max_upward_step": phi_step,
                    "endpoint_identity_gap": endpoint_gap,
                    "tolerance": opt["phi_tol"]},
        },
    }
    out = _out_path(cfg, opt["out"])
    _write_json(doc, out)
    return code, doc, [out]


def _cmd_transport(cfg: RunConfig):
    opt = cfg.options
    _, space = _load_space(cfg.space)
    mu0 = _resolve_marginal(space, opt["mu0"], cfg.seed)
    mu1 = _resolve_marginal(space, opt["mu1"], cfg.seed)
    distance, plan = w2(space, mu0, mu1)
    plan.check(space)
    triplets = [[int(i), int(j), float(plan.coupling[i, j])]
                for i, j in np.argwhere(plan.coupling > 1e-15)]
    doc = {
        "space": _space_summary(space),
        "distance": distance,
        "cost": plan.cost,
        "duality_gap": plan.duality_gap,
        "coupling": triplets,
        "mu0": opt["mu0"],
        "mu1": opt["mu1"],
    }
    out = _out_path(cfg, opt["out"])
    _write_json(doc, out)
    return 0, doc, [out]


def _cmd_doubling(cfg: RunConfig):
    opt = cfg.options
    _, space = _load_space(cfg.space)
    value = doubling_constant(space, opt["r_min"], opt["r_max"], opt["r_steps"])
    metric = validate_metric(space)
    local = None
    if opt.get("field"):
        f = resolve_field(space, opt["field"], cfg.seed)
        local = local_poincare_constant(space, f, opt["radius"], opt["dilation"])
    doc = {
        "space": _space_summary(space),
        "doubling_constant": value,
        "r_min": opt["r_min"], "r_max": opt["r_max"], "r_steps": opt["r_steps"],
        "metric_check": asdict(metric),
        "local_poincare": local,
    }
    out = _out_path(cfg, opt["out"])
    _write_json(doc, out)
    return (0 if metric.passed else 1), doc, [out]


def _cmd_plot_data(cfg: RunConfig):
    opt = cfg.options
    try:
        with open(opt["report"]) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read report {opt['report']}: {exc}") from None
    kind = opt["kind"]
    if kind in ("psi", "phi"):
        trace = (doc.get("traces") or {}).get(kind)
        if not trace:
            raise ValueError(f"report has no {kind} trace")
        header, rows = f"t,{kind},series", trace["rows"]
    elif kind == "residual_vs_s":
        rows = doc.get("residual_vs_s")
        if not rows:
            raise ValueError("report has no residual_vs_s data")
        header = "s,mean_abs_residual"
    elif kind == "defect_vs_mesh":
        rows = doc.get("defect_vs_mesh")
        if not rows:
            raise ValueError("report has no defect_vs_mesh data")
        header = "mesh_h,defect"
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    out = _out_path(cfg, opt["out"])
    _write_csv(out, header, rows)
    return 0, {"kind": kind, "rows": len(rows)}, [out]


_COMMANDS = {
    "gen": _cmd_gen,
    "semigroup": _cmd_semigroup,
    "constants": _cmd_constants,
    "chain": _cmd_chain,
    "transport": _cmd_transport,
    "doubling": _cmd_doubling,
    "plot-data": _cmd_plot_data,
}


def run(config: RunConfig) -> int:
    """Execute one command and write its artifacts plus the run manifest."""
    if config.command not in _COMMANDS:
        raise ValueError(f"unknown command {config.command!r}")
    os.makedirs(config.out_dir, exist_ok=True)
    start = time.monotonic()
    code, _, artifacts = _COMMANDS[config.command](config)
    manifest = {
        "command": config.command,
        "config": {k: v for k, v in asdict(config).items()},
        "version": __version__,
        "seed": config.seed,
        "exit_code": code,
        "wall_time_s": time.monotonic() - start,
        "artifacts": [os.path.basename(a) for a in artifacts],
    }
    _write_json(manifest, os.path.join(config.out_dir, "run.json"))
    return code


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lenspace",
        description="Hopf-Lax semigroup and functional-inequality toolkit "
                    "on finite metric-measure spaces",
    )
    parser.add_argument("--out-dir", default=os.environ.get("LENSPACE_OUT", "."),
                        help="output directory (env LENSPACE_OUT)")
    sub = parser.add_subparsers(dest="command", required=True)
    # SUPPRESS keeps a subcommand-level --out-dir from clobbering the global one
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=argparse.SUPPRESS,
                        help="output directory (overrides the global flag)")

    p = sub.add_parser("gen", parents=[common],
                       help="generate a space and save it as JSON")
    p.add_argument("--spec", help="compact space spec, e.g. circle:256:6.2832")
    p.add_argument("--kind", choices=["circle", "gaussian_interval", "torus2d",
                                      "path", "complete"])
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--length", type=float, default=2 * np.pi)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--width", type=float, default=3.0)
    p.add_argument("--side-x", type=float, default=2 * np.pi)
    p.add_argument("--side-y", type=float, default=2 * np.pi)
    p.add_argument("--out", default="space.json")

    p = sub.add_parser("semigroup", parents=[common], help="evolve a field and check the semigroup laws")
    p.add_argument("--space", required=True)
    p.add_argument("--field", default="cos")
    p.add_argument("--times", default="geo:0.01:1:8")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--residual-study", help="T:S_MAX:LEVELS residual sweep")
    p.add_argument("--refinements", type=int, default=0,
                   help="defect-vs-mesh study depth (generator spaces only)")
    p.add_argument("--defect-t", type=float, default=0.5)
    p.add_argument("--defect-s", type=float, default=0.5)
    p.add_argument("--out", default="semigroup.json")

    p = sub.add_parser("constants", parents=[common], help="estimate LSI/Talagrand/Poincare constants")
    p.add_argument("--space", required=True)
    p.add_argument("--which", default="all")
    p.add_argument("--budget", type=int, default=None,
                   help="refinement proposals per witness (default: per-inequality)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--K", type=float, default=None,
                   help="chain-check constant (default: estimated LSI)")
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--out", default="constants.json")

    p = sub.add_parser("chain", parents=[common], help="verify the LSI => T => P chain witness-wise")
    p.add_argument("--space", required=True)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-random", type=int, default=6)
    p.add_argument("--trace-fields", type=int, default=20)
    p.add_argument("--psi-times", default="geo:0.01:2:12")
    p.add_argument("--phi-times", default="geo:0.01:1:12")
    p.add_argument("--psi-tol", type=float, default=0.02)
    p.add_argument("--phi-tol", type=float, default=0.01)
    p.add_argument("--out", default="chain.json")

    p = sub.add_parser("transport", parents=[common], help="optimal transport between two marginals")
    p.add_argument("--space", required=True)
    p.add_argument("--mu0", required=True)
    p.add_argument("--mu1", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="transport.json")

    p = sub.add_parser("doubling", parents=[common], help="doubling constant and regularity report")
    p.add_argument("--space", required=True)
    p.add_argument("--r-min", type=float, required=True)
    p.add_argument("--r-max", type=float, required=True)
    p.add_argument("--r-steps", type=int, default=16)
    p.add_argument("--field", help="also certify a local Poincare inequality for this field")
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--dilation", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="doubling.json")

    p = sub.add_parser("plot-data", parents=[common], help="extract a two/three-column CSV from a report")
    p.add_argument("--report", required=True)
    p.add_argument("--kind", required=True,
                   choices=["psi", "phi", "residual_vs_s", "defect_vs_mesh"])
    p.add_argument("--out", default="plot.csv")

    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    opts = vars(args).copy()
    command = opts.pop("command")
    out_dir = opts.pop("out_dir")
    config = RunConfig(
        command=command,
        space=opts.pop("space", None) or opts.get("spec"),
        k=opts.pop("K", None),
        times=opts.pop("times", None),
        seed=opts.pop("seed", 0),
        tau=opts.pop("tau", 0.05),
        out_dir=out_dir,
        options=opts,
    )
    try:
        return run(config)
    except AssertionError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
