"""Command-line front end: ``diskturing {eigen,curves,classify,mesh,simulate}``.

Every subcommand accepts ``--out DIR``, ``--config FILE`` (JSON whose keys
mirror the long flag names, with dashes as underscores) and ``--seed INT``.
Flags given on the command line override the config file. Each run writes
``manifest.json`` with the fully resolved configuration.

Exit codes: 0 success, 1 numeric or runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from diskturing import __version__
from diskturing.diskmesh import TriMesh, distmesh_disk, mesh_quality
from diskturing.eigenmodes import (
    DEFAULT_TRUNCATION,
    HalfIntegerOrderError,
    ModeIndex,
    build_grid,
    eigenfunction_field,
    eigenvalue,
)
from diskturing.femsolver import (
    SCHEMES,
    SimConfig,
    SimulationError,
    oscillation_metrics,
    simulate,
    write_diagnostics,
    write_snapshot,
    write_summary,
)
from diskturing.paramspace import SweepConfig, classify_region_map, sweep_curves, table1_relations
from diskturing.stability import RadiusRegime, ReactionParams, classify_point, radius_bound, radius_regime

log = logging.getLogger("diskturing")

# mesh size that gives about 3257 nodes / 6327 triangles on the unit disk
CALIBRATED_H0 = 0.0334


class UsageError(Exception):
    """Invalid arguments; mapped to exit code 2."""


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--config", help="JSON file with default values for any flag")
    p.add_argument("--seed", type=int, default=0)


def _mode_flags(p: argparse.ArgumentParser, n: float = 1.7, k: int = 1, rho: float = 1.0) -> None:
    p.add_argument("--n", type=float, default=n, help="Bessel order")
    p.add_argument("--k", type=int, default=k, help="cancelling pair index")
    p.add_argument("--rho", type=float, default=rho, help="disk radius")


def _kinetic_flags(p: argparse.ArgumentParser, gamma: float = 1.0, d: float = 1.0) -> None:
    p.add_argument("--gamma", type=float, default=gamma)
    p.add_argument("--d", type=float, default=d, help="diffusion ratio")


def _window_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha-max", type=float, default=3.0)
    p.add_argument("--beta-max", type=float, default=3.0)
    p.add_argument("--n-sweep", type=int, default=600, help="grid points per axis")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diskturing", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eigen", help="eigenvalue and eigenfunction field of one mode")
    _common(p)
    _mode_flags(p)
    p.add_argument("--N", type=int, default=95, help="Chebyshev points over the diameter (odd)")
    p.add_argument("--M", type=int, default=90, help="Fourier points (even)")
    p.add_argument("--J", type=int, default=DEFAULT_TRUNCATION, help="series truncation")

    p = sub.add_parser("curves", help="partitioning curves in the (alpha, beta) plane")
    _common(p)
    _mode_flags(p, rho=35.0)
    _kinetic_flags(p, d=2.0)
    _window_flags(p)

    p = sub.add_parser("classify", help="classify a point, a region map or a d-ladder")
    _common(p)
    _mode_flags(p, rho=35.0)
    _kinetic_flags(p, d=2.0)
    _window_flags(p)
    p.add_argument("--alpha", type=float, help="single point: alpha")
    p.add_argument("--beta", type=float, help="single point: beta")
    p.add_argument("--ladder", type=float, nargs="+", help="diffusion ratios for a region-map ladder")

    p = sub.add_parser("mesh", help="triangulate the disk")
    _common(p)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--h0", type=float, default=CALIBRATED_H0)
    p.add_argument("--max-iters", type=int, default=2000)

    p = sub.add_parser("simulate", help="finite-element time stepping on the disk")
    _common(p)
    _mode_flags(p, n=2.7)
    _kinetic_flags(p, gamma=210.0, d=10.0)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--mesh", help="mesh file written by the mesh command")
    p.add_argument("--h0", type=float, default=CALIBRATED_H0, help="mesh size when --mesh is not given")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-end", type=float, default=6.0)
    p.add_argument("--threshold", type=float, default=5e-4)
    p.add_argument("--snapshot-times", type=float, nargs="*", default=[])
    p.add_argument("--scheme", choices=SCHEMES, default="semi")
    p.add_argument("--lumped", action="store_true", help="lumped mass matrix")
    p.add_argument("--no-early-stop", action="store_true", help="run to t_end regardless of the threshold")
    p.add_argument("--check-conditions", action="store_true",
                   help="print the radius regime for (d, gamma, rho, n, k)")
    return parser


def _resolve(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Parse ``argv``; values from ``--config`` replace defaults but not explicit flags."""
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(cfg) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    args.out = str(Path(args.out).resolve())
    if getattr(args, "mesh", None):
        args.mesh = str(Path(args.mesh).resolve())
    return args


def _write_manifest(out: Path, args: argparse.Namespace, extra: dict | None = None) -> None:
    data = {"version": __version__, "args": {k: v for k, v in vars(args).items() if k != "func"}}
    if extra:
        data.update(extra)
    (out / "manifest.json").write_text(json.dumps(data, indent=2, sort_keys=True))


def _mode(args) -> ModeIndex:
    try:
        return ModeIndex(args.n, args.k, args.rho)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _sweep(args, d: float | None = None) -> SweepConfig:
    try:
        return SweepConfig(gamma=args.gamma, d=args.d if d is None else d, mode=_mode(args),
                           alpha_max=args.alpha_max, beta_max=args.beta_max, n_sweep=args.n_sweep)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_eigen(args, out: Path) -> int:
    mode = _mode(args)
    try:
        grid = build_grid(args.N, args.M)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if mode.k == 0:
        print("note: k=0 selects the cancelling pair (j=0, j=1)")
    eta2 = eigenvalue(mode)
    print(f"eta^2 = {eta2:.17g}")
    fld = eigenfunction_field(mode, grid, args.J)
    fld.to_csv(out / "field.csv")
    fld.sign_to_csv(out / "sign.csv")
    _write_manifest(out, args, {"eta2": eta2})
    return 0


def cmd_curves(args, out: Path) -> int:
    cfg = _sweep(args)
    curves = sweep_curves(cfg)
    curves.to_csv(out / "curves.csv")
    counts = {"psi": len(curves.psi_points), "phi": len(curves.phi_points),
              "beta_intercepts": len(curves.beta_intercepts)}
    print(f"psi points: {counts['psi']}")
    print(f"phi points: {counts['phi']}")
    print(f"beta-axis intercepts: {counts['beta_intercepts']}")
    res = [float(r.max()) for r in (curves.psi_residuals, curves.phi_residuals) if len(r)]
    print(f"max residual: {max(res) if res else 0.0:.3e}")
    _write_manifest(out, args, {"sweep": cfg.as_dict(), "counts": counts})
    return 0


def cmd_classify(args, out: Path) -> int:
    if (args.alpha is None) != (args.beta is None):
        raise UsageError("--alpha and --beta must be given together")
    if args.alpha is not None:
        try:
            p = ReactionParams(args.alpha, args.beta, args.gamma, args.d)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        rep = classify_point(p, _mode(args))
        print(f"class: {rep.stability_class.value}")
        (out / "point.json").write_text(rep.to_json(indent=2))
        _write_manifest(out, args)
        return 0
    if args.ladder:
        if len(args.ladder) < 2 or any(not d > 0 for d in args.ladder):
            raise UsageError("--ladder needs at least two positive diffusion ratios")
        if any(b <= a for a, b in zip(args.ladder, args.ladder[1:])):
            raise UsageError("--ladder values must be strictly increasing")
        maps = []
        for d in args.ladder:
            rmap = classify_region_map(_sweep(args, d))
            maps.append(rmap)
            print(f"d={d:g}: " + ", ".join(f"{k}={v}" for k, v in rmap.counts().items()))
        report = table1_relations(maps)
        report.to_json(out / "ladder.json")
        _write_manifest(out, args)
        return 0
    rmap = classify_region_map(_sweep(args))
    rmap.to_csv(out / "region.csv")
    (out / "counts.json").write_text(json.dumps(rmap.summary(), indent=2))
    for k, v in rmap.counts().items():
        print(f"{k}: {v}")
    _write_manifest(out, args)
    return 0


def cmd_mesh(args, out: Path) -> int:
    if not 0 < args.h0 < args.rho:
        raise UsageError("need 0 < h0 < rho")
    mesh = distmesh_disk(args.rho, args.h0, max_iters=args.max_iters, seed=args.seed)
    mesh.save(out / "mesh.txt")
    qmin, qmean = mesh_quality(mesh)
    print(f"nodes: {mesh.n_nodes}")
    print(f"triangles: {mesh.n_triangles}")
    print(f"boundary nodes: {mesh.n_boundary}")
    print(f"Euler check: {'OK' if mesh.euler_ok() else 'FAILED'}")
    print(f"quality min {qmin:.4f} mean {qmean:.4f}")
    _write_manifest(out, args, {"nodes": mesh.n_nodes, "triangles": mesh.n_triangles,
                                "boundary": mesh.n_boundary, "converged": mesh.converged})
    if not mesh.converged:
        print("warning: mesh iteration did not converge", file=sys.stderr)
        return 1
    return 0


def cmd_simulate(args, out: Path) -> int:
    try:
        params = ReactionParams(args.alpha, args.beta, args.gamma, args.d)
        cfg = SimConfig(params, t_end=args.t_end, dt=args.dt, threshold=args.threshold,
                        snapshot_times=tuple(args.snapshot_times), lumped=args.lumped,
                        stop_on_threshold=not args.no_early_stop, scheme=args.scheme)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    extra = {}
    if args.check_conditions:
        mode = _mode(args)
        bound = radius_bound(args.d, args.gamma, mode.n, mode.k)
        regime = radius_regime(args.d, args.gamma, mode.rho, mode.n, mode.k)
        label = "condtur" if regime is RadiusRegime.TURING_ONLY else "comp4"
        print(f"radius bound {bound:.6g}, rho {mode.rho:g}: {regime.value} ({label} holds)")
        extra["radius_bound"] = bound
        extra["radius_regime"] = regime.value
    if args.mesh:
        try:
            mesh = TriMesh.load(args.mesh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read mesh {args.mesh}: {exc}") from exc
    else:
        if not 0 < args.h0 < 1.0:
            raise UsageError("need 0 < h0 < 1 for the unit-disk mesh")
        mesh = distmesh_disk(1.0, args.h0, seed=args.seed)
    _write_manifest(out, args, extra)
    status = 0
    try:
        result = simulate(mesh, cfg)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        state = exc.state
        write_diagnostics(out / "diagnostics.csv", state)
        write_snapshot(out / "final.csv", mesh, state.u, state.v)
        (out / "summary.json").write_text(json.dumps(
            {"termination": "failed", "error": str(exc), "t_final": state.t}, indent=2))
        return 1
    state = result.state
    write_diagnostics(out / "diagnostics.csv", state)
    for t, (u, v) in result.snapshots.items():
        write_snapshot(out / f"snapshot_t{t:g}.csv", mesh, u, v)
    write_snapshot(out / "final.csv", mesh, state.u, state.v)
    ser = state.series()
    peaks = oscillation_metrics(ser[:, 0], ser[:, 1]).to_dict() if len(ser) >= 3 else None
    n_peaks = len(peaks["peak_times"]) if peaks else 0
    extra.update({"n_nodes": mesh.n_nodes, "n_triangles": mesh.n_triangles,
                  "n_peaks": n_peaks, "peaks": peaks})
    write_summary(out / "summary.json", result, extra)
    print(f"termination: {result.reason} at t={state.t:.6g} after {state.steps} steps")
    print(f"u mean {state.u.mean():.6g} std {state.u.std():.3e}; v mean {state.v.mean():.6g} std {state.v.std():.3e}")
    print(f"diagnostic peaks: {n_peaks}")
    return status


COMMANDS = {"eigen": cmd_eigen, "curves": cmd_curves, "classify": cmd_classify,
            "mesh": cmd_mesh, "simulate": cmd_simulate}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _resolve(parser, argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HalfIntegerOrderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
