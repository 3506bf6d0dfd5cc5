"""Command-line front end.

Every subcommand accepts ``--config FILE`` (JSON keyed by flag names, with
dashes or underscores); explicit flags override the file. Runs that write an
output directory also write ``config.json`` holding the fully resolved
configuration, and re-running with ``--config`` on that file reproduces the
outputs byte for byte.

Exit codes: 0 success, 2 domain error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import dynamics, equilibria, manifolds, sessile
from .errors import DomainError, NumericalError, SteinerError
from .io import write_array_csv, write_json
from .model import Params, State

EXIT_DOMAIN = 2
EXIT_NUMERICAL = 3

# distance from the critical angle inside which the two equilibria are reported as nearly coincident
NEAR_CRITICAL = 5e-3

RECIPES = {
    "bouncing": {"alpha0": math.pi / 4, "ic": [0.0, 0.0, 0.45, 0.0], "t_end": 50.0},
    "rocking": {"alpha0": math.pi / 4, "radius": 0.05, "t_end": 50.0},
    "escape": {"alpha0": math.pi / 4, "ic": [0.0, 0.0, 0.05, 0.0], "t_end": 60.0},
    "torus": {"alpha0": math.pi / 4, "radius": 0.05, "phi": math.pi / 4, "t_end": 800.0},
}


def _angle(args, value):
    return math.radians(value) if getattr(args, "degrees", False) else value


def _snapshot(args, out: Path) -> None:
    cfg = {k: v for k, v in vars(args).items() if k not in ("config", "func", "list_presets", "_subcommands")}
    write_json(out / "config.json", cfg)


def _outdir(args) -> Path | None:
    if not args.out:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _snapshot(args, out)
    return out


# ---------------------------------------------------------------------------
# equilibria


def _eq_record(eq, eig) -> dict:
    return {
        "branch": eq.branch.value,
        "y": eq.y_eq,
        "contact_angle": eq.contact_angle,
        "stability": eq.stability.value,
        "fx": eig.fx,
        "hy": eig.hy,
        "eigenvalues": [[v.real, v.imag] for v in eig.all],
    }


def cmd_equilibria(args) -> int:
    alpha0 = _angle(args, args.alpha0)
    params = Params(alpha0)
    a_star = equilibria.critical_alpha_star()
    records = []
    try:
        x0, x1 = equilibria.classify(params)
        pairs = [x0, x1]
    except NumericalError as exc:
        print(f"warning: secondary equilibrium unavailable ({exc})", file=sys.stderr)
        pairs = [equilibria.primary_equilibrium(params)]
        pairs[0] = equilibria.Equilibrium(pairs[0].y_eq, pairs[0].contact_angle, pairs[0].branch, equilibria.Stability.DEGENERATE)
    if abs(alpha0 - a_star) < NEAR_CRITICAL:
        print(
            f"warning: alpha0={alpha0:.6g} is within {abs(alpha0 - a_star):.2g} of the critical angle {a_star:.10g}; "
            "the equilibria nearly coincide and stability is degenerate there",
            file=sys.stderr,
        )
    print("branch,y,contact_angle,stability,lambda12,lambda34")
    for eq in pairs:
        eig = equilibria.eigenvalues(eq.y_eq)
        records.append(_eq_record(eq, eig))
        print(f"{eq.branch.value},{eq.y_eq:.10g},{eq.contact_angle:.10g},{eq.stability.value},{eig.lambda12[0]:.6g},{eig.lambda34[0]:.6g}")
    out = _outdir(args)
    if out:
        write_json(out / "equilibria.json", {"alpha0": alpha0, "q": params.q, "alpha_star": a_star, "equilibria": records})
    return 0


# ---------------------------------------------------------------------------
# bifurcation


def cmd_bifurcation(args) -> int:
    if args.out is None:
        raise DomainError("bifurcation needs --out")
    lo, hi = _angle(args, args.alpha_min), _angle(args, args.alpha_max)
    grid = np.linspace(lo, hi, args.n)
    rows = equilibria.bifurcation_scan(grid)
    out = _outdir(args)
    equilibria.write_bifurcation_csv(rows, out / "bifurcation.csv")
    flips = sum(1 for a, b in zip(rows, rows[1:]) if a.stab0 != b.stab0)
    print(f"{len(rows)} rows, {flips} stability change(s) on the primary branch")
    return 0


# ---------------------------------------------------------------------------
# manifold


def cmd_manifold(args) -> int:
    alpha0 = _angle(args, args.alpha0)
    params = Params(alpha0)
    singular = {"order2": manifolds.singular_alphas(2), "order4": manifolds.singular_alphas(4)}
    nearest = min(singular["order4"], key=lambda a: abs(a - alpha0))
    report = {"singular_alphas": singular, "nearest_singular": nearest, "distance": abs(alpha0 - nearest)}
    series = manifolds.rocking_series(params, order=args.order, branch=args.branch)
    for (i, j), v in sorted(series.coeffs.items(), key=lambda t: (t[0][0] + t[0][1], -t[0][0])):
        print(f"x^{i} w^{j}: {v:.10g}")
    print(f"y_center: {series.y_center:.10g}")
    payload = series.to_dict()
    payload["singularity_report"] = report
    out = _outdir(args)
    if out:
        write_json(out / "manifold.json", payload)
    return 0


# ---------------------------------------------------------------------------
# simulate


def _resolve_recipe(args) -> None:
    if args.recipe == "custom":
        return
    for key, value in RECIPES[args.recipe].items():
        if getattr(args, key) is None:
            if key in ("alpha0", "phi") and args.degrees:
                value = math.degrees(value)
            setattr(args, key, value)


def cmd_simulate(args) -> int:
    if args.out is None:
        raise DomainError("simulate needs --out")
    _resolve_recipe(args)
    if args.alpha0 is None:
        raise DomainError("alpha0 is required for a custom simulation")
    alpha0 = _angle(args, args.alpha0)
    params = Params(alpha0)
    args.t_end = 100.0 if args.t_end is None else args.t_end
    summary: dict = {"recipe": args.recipe, "alpha0": alpha0}
    series = None
    if args.ic is not None:
        seed = State(*args.ic)
    else:
        if args.radius is None:
            raise DomainError("give --ic or --radius/--phi")
        if args.recipe == "rocking" and args.phi is None:
            series = manifolds.rocking_series(params)
            phi = dynamics.rocking_phi(params, args.radius, series)
        else:
            phi = _angle(args, 0.0 if args.phi is None else args.phi)
        summary["phi"] = phi
        seed = dynamics.initial_condition(params, args.radius, phi)
    traj = dynamics.integrate(seed, params, dt=args.dt, t_end=args.t_end, scheme=args.scheme, stride=args.stride)
    summary["classification"] = dynamics.escape_detect(traj, params)
    summary["events"] = [{"time": e.time, "kind": e.kind, "detail": e.detail} for e in traj.events]
    summary["initial_state"] = list(seed.as_array())
    summary["final_time"] = float(traj.times[-1])

    if summary["classification"] == "bounded" and seed.x == 0.0 and seed.w == 0.0:
        ham = manifolds.reduced_potential(params)
        H = ham.H(traj.states[:, 2], traj.states[:, 3])
        summary["energy_drift"] = float(np.max(np.abs(H - H[0])))
        summary["max_abs_x"] = float(np.max(np.abs(traj.states[:, 0])))
    if args.recipe == "rocking":
        series = series or manifolds.rocking_series(params)
        summary["max_manifold_dev"] = float(manifolds.manifold_deviation(series, traj.states).max())

    out = _outdir(args)
    write_array_csv(out / "trajectory.csv", ["t", "x", "w", "y", "z"], traj.as_rows())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sec = dynamics.poincare(traj, params)
    write_array_csv(out / "section.csv", ["t", "w", "y", "z"], np.column_stack([sec.times, sec.crossings]) if len(sec.times) else [])
    summary["section_count"] = len(sec)
    if len(sec) >= 2:
        summary["section_gap"] = dynamics.section_gap(sec)
    if summary["classification"] == "bounded":
        emb = dynamics.torus_embed(traj, args.embedding)
        write_array_csv(out / f"embedding-{args.embedding}.csv", ["e1", "e2", "e3"], emb)
    write_json(out / "summary.json", summary)
    print(json.dumps({k: summary[k] for k in ("classification", "section_count")}, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# sweep


def cmd_sweep(args) -> int:
    if args.list_presets:
        for name in sorted(dynamics.PRESETS):
            p = dynamics.PRESETS[name]
            a = p["alpha0"] if isinstance(p["alpha0"], str) else f"{p['alpha0']:.10g}"
            print(f"{name}: alpha0={a} phis={','.join(f'{v:.6g}' for v in p['phis'])}")
        return 0
    if args.out is None:
        raise DomainError("sweep needs --out")
    if args.preset:
        alpha0 = dynamics.preset_alpha0(args.preset)
        phis = args.phis if args.phis is not None else dynamics.PRESETS[args.preset]["phis"]
    else:
        if args.alpha0 is None or args.phis is None:
            raise DomainError("give --preset or both --alpha0 and --phis")
        alpha0 = _angle(args, args.alpha0)
        phis = [_angle(args, p) for p in args.phis]
    params = Params(alpha0)
    result = dynamics.sweep(
        params, radius=args.radius, phi_list=phis, dt=args.dt, t_end=args.t_end,
        stride=args.stride, scheme=args.scheme, workers=args.workers,
    )
    out = _outdir(args)
    dynamics.write_sweep_summary(result, out / "summary.csv")
    for k, e in enumerate(result.entries):
        if e.trajectory is None:
            continue
        stem = f"seed{k:02d}-{e.label}"
        write_array_csv(out / f"{stem}-trajectory.csv", ["t", "x", "w", "y", "z"], e.trajectory.as_rows())
        if e.classification == "bounded":
            emb = dynamics.torus_embed(e.trajectory, args.embedding)
            write_array_csv(out / f"{stem}-embedding-{args.embedding}.csv", ["e1", "e2", "e3"], emb)
    meta = dict(result.meta)
    meta["entries"] = [
        {"phi": e.phi, "label": e.label, "classification": e.classification,
         "max_manifold_dev": e.max_manifold_dev, "section_count": e.section_count, "note": e.note}
        for e in result.entries
    ]
    write_json(out / "sweep.json", meta)
    with open(out / "summary.csv", encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    return 0


# ---------------------------------------------------------------------------
# sessile


def cmd_sessile(args) -> int:
    if args.out is None:
        raise DomainError("sessile needs --out")
    alpha = _angle(args, args.alpha)
    if args.xi_csv:
        xi = sessile.read_profile_csv(args.xi_csv)
    else:
        xi = sessile.builtin_profile(args.profile, alpha)
    mode = sessile.CapMode(alpha, args.l, args.epsilon, xi, Omega=args.Omega, k=args.k)
    t = np.linspace(0.0, args.t_end, args.n_t)
    trace = sessile.com_trace(mode, t)
    oracle = sessile.com_oracle_3d(mode, 0.0)
    reduced = [float(v) for v in sessile.com_moments(mode, 0.0)]
    summary = {
        "classification": trace.classification.value,
        "volume_first_order": sessile.volume_first_order(mode),
        "oracle_t0": {"M": oracle[0], "Mx": oracle[1], "My": oracle[2], "Mz": oracle[3]},
        "reduced_t0": {"M": reduced[0], "Mx": reduced[1], "My": reduced[2], "Mz": reduced[3]},
    }
    out = _outdir(args)
    sessile.write_trace_csv(trace, out / "com_trace.csv")
    write_json(out / "sessile.json", summary)
    print(f"class={trace.classification.value}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="steiner-drop", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file of flag values; explicit flags override it")
        p.add_argument("--degrees", action="store_true", help="read angle inputs in degrees")
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("equilibria", help="both equilibria, eigenvalues and stability")
    common(p)
    p.add_argument("--alpha0", type=float, required=False)
    p.set_defaults(func=cmd_equilibria)

    p = sub.add_parser("bifurcation", help="equilibrium heights and stability over a grid of alpha0")
    common(p)
    p.add_argument("--alpha-min", type=float, default=0.05)
    p.add_argument("--alpha-max", type=float, default=1.55)
    p.add_argument("--n", type=int, default=200)
    p.set_defaults(func=cmd_bifurcation)

    p = sub.add_parser("manifold", help="power series of the rocking manifold")
    common(p)
    p.add_argument("--alpha0", type=float)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--branch", choices=["stable", "primary", "secondary"], default="stable")
    p.set_defaults(func=cmd_manifold)

    p = sub.add_parser("simulate", help="integrate one trajectory")
    common(p)
    p.add_argument("--recipe", choices=sorted(RECIPES) + ["custom"], default="custom")
    p.add_argument("--alpha0", type=float)
    p.add_argument("--ic", type=float, nargs=4, metavar=("X", "W", "Y", "Z"))
    p.add_argument("--radius", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-end", type=float)
    p.add_argument("--stride", type=int, default=10)
    p.add_argument("--scheme", choices=dynamics.SCHEMES, default="symmetric")
    p.add_argument("--embedding", choices=["verbatim", "corrected"], default="verbatim")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="integrate seeds around the stable equilibrium")
    common(p)
    p.add_argument("--preset", choices=sorted(dynamics.PRESETS))
    p.add_argument("--list-presets", action="store_true")
    p.add_argument("--alpha0", type=float)
    p.add_argument("--phis", type=float, nargs="+")
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-end", type=float, default=500.0)
    p.add_argument("--stride", type=int, default=10)
    p.add_argument("--scheme", choices=dynamics.SCHEMES, default="symmetric")
    p.add_argument("--embedding", choices=["verbatim", "corrected"], default="verbatim")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sessile", help="centre-of-mass trace of a spherical-cap mode")
    common(p)
    p.add_argument("--alpha", type=float, default=4 * math.pi / 9)
    p.add_argument("--l", type=int, default=0)
    p.add_argument("--k", type=int)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--Omega", type=float, default=1.0)
    p.add_argument("--profile", choices=sessile.BUILTIN_PROFILES, default="cosine")
    p.add_argument("--xi-csv", help="mode shape samples with columns s,xi")
    p.add_argument("--t-end", type=float, default=2 * math.pi)
    p.add_argument("--n-t", type=int, default=201)
    p.set_defaults(func=cmd_sessile)
    parser.set_defaults(_subcommands=sub.choices)
    return parser


def _load_config(path: str, parser: argparse.ArgumentParser, command: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"cannot read config {path!r}: {exc}") from exc
    if not isinstance(raw, dict):
        raise DomainError("config must be a JSON object")
    sub = parser.get_default("_subcommands")[command]
    dests = {a.dest for a in sub._actions}
    cfg = {}
    for key, value in raw.items():
        dest = key.replace("-", "_")
        if dest == "command":
            if value != command:
                raise DomainError(f"config is for {value!r}, not {command!r}")
            continue
        if dest not in dests:
            raise DomainError(f"unknown config key {key!r} for {command}")
        cfg[dest] = value
    return cfg


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = _load_config(args.config, parser, args.command)
        sub = parser.get_default("_subcommands")[args.command]
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        if args.command in ("equilibria", "manifold") and args.alpha0 is None:
            raise DomainError("--alpha0 is required")
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (NumericalError, SteinerError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
