"""Command line interface: ``csflab run | verify | sweep``.

Exit codes: 0 success, 1 acceptance failure, 2 configuration or IO error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import functionals, io, reaction_ode, singularity
from .errors import BlowUp, ConfigError, CSFLabError, UndefinedForZeroTau
from .events import EventDetector
from .flow import StopReason, run
from .functionals import IDENTITIES, check_identity, equally_spaced_triples, refinement_study
from .scenarios import is_twisted, preset as build_preset
from .geometry import frenet

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _config(args) -> io.RunConfig:
    overrides = {
        "preset": args.preset,
        "n": args.n,
        "t_end": args.t_end,
        "out": args.out,
        "seed": args.seed,
        "lambda_entropy": True if args.lambda_entropy else None,
        "identities": args.identities,
    }
    for name in ("kappa0", "tau0", "dt", "workers"):
        overrides[name] = getattr(args, name, None)
    if getattr(args, "no_plots", False):
        overrides["plots"] = False
    return io.load_config(args.config, overrides)


def _out_dir(cfg: io.RunConfig) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    return out


def cmd_run(cfg: io.RunConfig) -> int:
    """Run the flow and write series, events, snapshots, verdict and figures."""
    out = _out_dir(cfg)
    pre = build_preset(cfg.preset, cfg.preset_params())
    curve = pre.sample(cfg.n)
    series = []
    detector = EventDetector(cfg.inflection_margin, pre.sphere_radius, cfg.sphere_tol)

    def observe(state):
        series.append(functionals.sample(state, cfg.lambda_entropy))

    observers = [observe, detector]
    result = run(curve, cfg.flow_config(), observers)
    if result.stop_reason is StopReason.SINGULARITY:
        detector.stop(result.final)

    verdict = singularity.diagnose(result.snapshots, cfg.rho)
    mono = functionals.track_monotonicity(series)
    io.write_series(out / "series.csv", series)
    io.write_jsonl(out / "events.jsonl", (e.to_json() for e in detector.events))
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    for k, state in enumerate(result.snapshots):
        io.write_snapshot(snap_dir / f"snapshot_{k:04d}.csv", state)
    report = verdict.to_json()
    report.update({
        "preset": cfg.preset,
        "params": pre.params,
        "n": cfg.n,
        "stop_reason": result.stop_reason.value,
        "error": None if result.error is None else str(result.error),
        "final_t": result.final.t,
        "steps": result.steps,
        "monotonicity": {
            "total_curvature_nonincreasing": mono.total_curvature_nonincreasing,
            "total_torsion_nondecreasing": mono.total_torsion_nondecreasing,
            "ct_entropy_nondecreasing": mono.ct_entropy_nondecreasing,
        },
    })
    io.write_json(out / "verdict.json", report)
    if cfg.plots:
        from .plotting import render_run

        render_run(series, result.snapshots, verdict, out / "figures")
    print(f"run: {cfg.preset} stopped at t = {result.final.t:.6g} ({result.stop_reason.value}); "
          f"classification {verdict.classification}")
    return EXIT_OK


IDENTITY_HEADER = ["identity_id", "resolution", "t_mid", "lhs", "rhs", "residual", "scale",
                   "measured_order"]


def _verify_identities(cfg: io.RunConfig, twisted: bool) -> list[str]:
    if cfg.identities is not None:
        needs = [i for i in cfg.identities if IDENTITIES[i].needs_log_tau]
        if needs and not twisted:
            raise ConfigError(f"identities {needs} need a twisted preset")
        return cfg.identities
    return [i for i, ident in IDENTITIES.items() if twisted or not ident.needs_log_tau]


def cmd_verify(cfg: io.RunConfig) -> int:
    """Identity suite with a refinement study; writes identities.csv."""
    out = _out_dir(cfg)
    params = cfg.preset_params()
    c0 = build_preset(cfg.preset, params).sample(cfg.n0)
    twisted = is_twisted(c0, frenet(c0, cfg.scheme)).twisted
    ids = _verify_identities(cfg, twisted)
    study = refinement_study(lambda n: build_preset(cfg.preset, params).sample(n), ids, n0=cfg.n0,
                             t_span=cfg.t_span, delta0=cfg.delta0, levels=cfg.levels,
                             sigma_cfl=cfg.sigma_cfl, resample_every=cfg.resample_every,
                             scheme=cfg.scheme)
    rows = []
    for level, rep in study.interior:
        rows.append([rep.identity_id, f"interior:{level}", rep.t_mid, rep.lhs, rep.rhs, rep.residual,
                     rep.scale, None])
    for r in study.rows:
        rep = r.report
        rows.append([rep.identity_id, r.resolution, rep.t_mid, rep.lhs, rep.rhs, rep.residual,
                     rep.scale, r.measured_order])
    io.write_rows(out / "identities.csv", IDENTITY_HEADER, rows)
    for ident, why in study.unavailable.items():
        print(f"verify: FAIL {ident} unavailable: {why}", file=sys.stderr)
    failures = study.failures()
    if failures:
        r = failures[0]
        rep = r.report
        print("verify: FAIL " + ",".join(io.format_value(v) for v in
                                         [rep.identity_id, r.resolution, rep.t_mid, rep.lhs, rep.rhs,
                                          rep.residual, rep.scale, r.measured_order]),
              file=sys.stderr)
    if study.passed:
        print(f"verify: {len(ids)} identities passed")
        return EXIT_OK
    return EXIT_FAIL


PHASE_HEADER = ["kappa0", "tau0", "C", "tau_limit", "C_drift_max", "error"]


def _phase_row(job):
    kappa0, tau0, dt, t_end = job
    start = reaction_ode.ReactionState(kappa0, tau0)
    try:
        c = reaction_ode.conserved(start)
    except UndefinedForZeroTau:
        c = None
    try:
        traj = reaction_ode.integrate(start, t_end, dt=dt, record_every=100)
    except BlowUp:
        return [kappa0, tau0, c, None, None, "BlowUp"]
    drift = reaction_ode.drift(traj) if c is not None else None
    return [kappa0, tau0, c, traj.final.tau, drift, None]


def cmd_sweep(cfg: io.RunConfig) -> int:
    """Integrate the reaction ODE over the grid kappa0 x tau0; writes phase.csv."""
    out = _out_dir(cfg)
    jobs = [(k, t, cfg.dt, cfg.sweep_t_end) for k in cfg.kappa0 for t in cfg.tau0]
    if not jobs:
        raise ConfigError("empty sweep grid")
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_phase_row, jobs))  # map keeps grid order
    else:
        rows = [_phase_row(j) for j in jobs]
    io.write_rows(out / "phase.csv", PHASE_HEADER, rows)
    print(f"sweep: {len(rows)} grid points")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csflab", description="Curve shortening flow laboratory.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [("run", "evolve a preset curve"),
                        ("verify", "check evolution identities with grid refinement"),
                        ("sweep", "integrate the curvature/torsion reaction ODE over a grid")]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="TOML config file")
        p.add_argument("--preset")
        p.add_argument("--n", type=int)
        p.add_argument("--t-end", type=float)
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--lambda-entropy", action="store_true", help="also compute the Gaussian entropy")
        p.add_argument("--identities", help="comma separated identity ids")
        if name == "run":
            p.add_argument("--no-plots", action="store_true", help="skip PNG figures")
        if name == "sweep":
            p.add_argument("--kappa0", type=float, nargs="+")
            p.add_argument("--tau0", type=float, nargs="+")
            p.add_argument("--dt", type=float)
            p.add_argument("--workers", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, CSFLabError, OSError) as exc:
        print(f"csflab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
