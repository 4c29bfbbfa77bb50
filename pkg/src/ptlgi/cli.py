"""Command line front end: ``ptlgi <command> [options]``.

Every command writes its files into the ``--out`` directory together with a
``manifest.json`` (version, resolved configuration, seed, wall time and
sha256 digests of the outputs). Options may also come from an INI file given
with ``--config``; each section is named after a command and its keys are the
long option names (``t-end`` or ``t_end``). Command line flags win.

Exit codes: 0 ok, 1 verification failure, 2 configuration error,
3 numerical failure, 4 check/equivalence failure.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, acceptance, export, lgi, lindblad3, nhq, optimize, soe
from .errors import DomainError, EquivalenceError, NumericalError

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3, 4
#: angle defaults in radians; applied after any --degrees conversion
ANGLE_DEFAULTS = {"theta": math.pi / 2, "phi": 1.5 * math.pi,
                  "theta_m": math.pi / 2, "phi_m": math.pi / 2}
CHECK_TOL = {"e15": 1e-7, "parametric": 1e-6, "equivalence": 1e-5}


class ConfigError(Exception):
    pass


class CheckFailed(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _jobs_default():
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ptlgi", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="INI file with one section per command")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--degrees", action="store_true",
                        help="read angle options in degrees")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("evolve", parents=[common], help="Bloch trajectory with speeds")
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--theta", type=float, help="default pi / 2 rad")
    p.add_argument("--phi", type=float, help="default 1.5 * pi rad")
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--dt-out", type=float, default=0.05)
    p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("soe-scan", parents=[common], help="speed extremes versus gamma")
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--gamma-min", type=float, default=0.0)
    p.add_argument("--gamma-max", type=float, default=4.0)
    p.add_argument("--gamma-steps", type=int, default=81)
    p.add_argument("--n-samples", type=int, default=10000)

    p = sub.add_parser("k3", parents=[common], help="K3 with the full audit record")
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--theta", type=float, help="default pi / 2 rad")
    p.add_argument("--phi", type=float, help="default 1.5 * pi rad")
    p.add_argument("--theta-m", type=float, help="default pi / 2 rad")
    p.add_argument("--phi-m", type=float, help="default pi / 2 rad")
    p.add_argument("--t2", type=float, default=math.pi / 6)
    p.add_argument("--t3", type=float, default=math.pi / 3)

    p = sub.add_parser("k3-scan", parents=[common], help="maximized K3 versus gamma")
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--gammas", help="comma separated list (overrides the range options)")
    p.add_argument("--gamma-min", type=float, default=0.25)
    p.add_argument("--gamma-max", type=float, default=3.0)
    p.add_argument("--gamma-steps", type=int, default=12)
    p.add_argument("--seed", type=int, help="required")
    p.add_argument("--n-starts", type=int, default=64)
    p.add_argument("--broken-starts", type=int, default=128)
    p.add_argument("--max-evals", type=int, default=20000)
    p.add_argument("--T-max", type=float, default=lgi.T_MAX_DEFAULT)
    p.add_argument("--jobs", type=int, default=_jobs_default())

    p = sub.add_parser("fixed-scan", parents=[common],
                       help="time-optimized K3 heatmap for a fixed measurement axis")
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.99)
    p.add_argument("--theta-m", type=float, help="default pi / 2 rad")
    p.add_argument("--phi-m", type=float, help="default pi / 2 rad")
    p.add_argument("--n-theta", type=int, default=64)
    p.add_argument("--n-phi", type=int, default=64)
    p.add_argument("--T-max", type=float, default=lgi.T_MAX_DEFAULT)
    p.add_argument("--seed", type=int, help="required (recorded; the grid scan is deterministic)")
    p.add_argument("--jobs", type=int, default=_jobs_default())

    p = sub.add_parser("lindblad", parents=[common], help="three-level master equation")
    p.add_argument("--gamma1", type=float, default=4.0)
    p.add_argument("--eps-g", type=float, default=1.0)
    p.add_argument("--theta", type=float, help="default pi / 2 rad")
    p.add_argument("--phi", type=float, help="default 1.5 * pi rad")
    p.add_argument("--t-end", type=float, default=5.0)
    p.add_argument("--dt-out", type=float, default=0.05)
    p.add_argument("--check", choices=("e15", "parametric", "equivalence"),
                   help="e15: closed form for the coalesced start; parametric: "
                        "(r3, theta3, phi3) closed form; equivalence: post-selection sweep")

    p = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    p.add_argument("--json", action="store_true", help="print per-criterion results as JSON")
    p.add_argument("--criteria", help="comma separated subset, e.g. 1,2,9")
    return parser


def _apply_config(parser, argv):
    """Install config-file values as parser defaults for the selected command."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cp = configparser.ConfigParser()
    try:
        with open(known.config, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for section in cp.sections():
        if section not in subparsers.choices:
            raise ConfigError(f"unknown config section [{section}]")
        sp = subparsers.choices[section]
        actions = {a.dest: a for a in sp._actions if a.option_strings}
        values = {}
        for key, raw in cp.items(section):
            dest = key.replace("-", "_")
            # configparser lower-cases keys; match options case-insensitively
            match = [d for d in actions if d.lower() == dest]
            if not match or match[0] in ("config", "help"):
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            act = actions[match[0]]
            try:
                if isinstance(act, argparse._StoreTrueAction):
                    values[act.dest] = cp.getboolean(section, key)
                else:
                    val = act.type(raw) if act.type else raw
                    if act.choices and val not in act.choices:
                        raise ValueError(f"must be one of {list(act.choices)}")
                    values[act.dest] = val
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r} in [{section}]: {exc}") from exc
        sp.set_defaults(**values)


def parse_args(argv=None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _apply_config(parser, argv)
    args = parser.parse_args(argv)
    if args.degrees:
        for name in ANGLE_DEFAULTS:
            if getattr(args, name, None) is not None:
                setattr(args, name, math.radians(getattr(args, name)))
    for name, default in ANGLE_DEFAULTS.items():
        if hasattr(args, name) and getattr(args, name) is None:
            setattr(args, name, default)
    if args.command in ("k3-scan", "fixed-scan") and args.seed is None:
        raise ConfigError("--seed is required for scans")
    return args


# -- commands ------------------------------------------------------------------

def cmd_evolve(args, out: Path) -> dict:
    p = nhq.PTParams(args.J, args.gamma)
    if not args.dt_out > 0 or args.t_end < 0:
        raise DomainError("need dt-out > 0 and t-end >= 0")
    S0 = nhq.bloch_from_angles(args.theta, args.phi)
    traj = nhq.evolve_bloch_numeric(S0, args.t_end, p, tol=args.tol, dt_out=args.dt_out)
    speeds = soe.speed_along_trajectory(traj, p)
    header = nhq.TRAJECTORY_COLUMNS + soe.SPEED_COLUMNS[1:]
    rows = [tuple(r) + s.row()[1:] for r, s in zip(traj.rows(), speeds)]
    export.write_csv(out / "trajectory.csv", header, rows)
    return {"rows": len(rows)}


def cmd_soe_scan(args, out: Path) -> dict:
    if args.gamma_steps < 1:
        raise DomainError("gamma-steps must be at least 1")
    gammas = np.linspace(args.gamma_min, args.gamma_max, args.gamma_steps)
    rows = soe.order_parameter_scan(gammas, nhq.PTParams(args.J, 0.0), args.n_samples)
    export.write_csv(out / "soe_scan.csv", soe.SCAN_COLUMNS, rows)
    return {"rows": len(rows)}


def cmd_k3(args, out: Path) -> dict:
    cfg = lgi.LGIConfig(args.theta, args.phi, args.theta_m, args.phi_m, args.t2, args.t3)
    res = lgi.k3(cfg, nhq.PTParams(args.J, args.gamma))
    export.write_json(out / "k3_audit.json", res.audit())
    return {"k3": res.k3}


def _scan_gammas(args):
    if args.gammas:
        try:
            return [float(g) for g in args.gammas.split(",") if g.strip()]
        except ValueError as exc:
            raise DomainError(f"bad --gammas list: {exc}") from exc
    return list(np.linspace(args.gamma_min, args.gamma_max, args.gamma_steps))


def cmd_k3_scan(args, out: Path) -> dict:
    settings = optimize.OptimizerSettings(n_starts=args.n_starts, seed=args.seed,
                                          max_evals=args.max_evals,
                                          broken_starts=args.broken_starts, jobs=args.jobs)
    rows = optimize.gamma_scan(_scan_gammas(args), optimize.SearchSpace(args.T_max),
                               settings, J=args.J)
    export.write_csv(out / "k3_scan.csv", optimize.SCAN_COLUMNS, [r.row() for r in rows])
    return {"k3_max": {str(r.gamma): r.k3_max for r in rows}}


def cmd_fixed_scan(args, out: Path) -> dict:
    res = optimize.fixed_measurement_scan(nhq.PTParams(args.J, args.gamma), args.theta_m,
                                          args.phi_m, args.n_theta, args.n_phi, args.T_max,
                                          jobs=args.jobs)
    export.write_csv(out / "heatmap.csv", optimize.HEATMAP_COLUMNS, res.rows)
    return {"k3_max": res.k3_max, "theta": res.theta_star, "phi": res.phi_star,
            "t2": res.t2_star, "t3": res.t3_star}


def cmd_lindblad(args, out: Path) -> dict:
    p = lindblad3.LindbladParams(1.0, args.gamma1, args.eps_g)
    if not args.dt_out > 0 or args.t_end < 0:
        raise DomainError("need dt-out > 0 and t-end >= 0")
    n = int(math.floor(args.t_end / args.dt_out + 1e-9))
    times = args.dt_out * np.arange(n + 1)
    if args.check == "parametric":
        rho0 = lindblad3.parametric_embed(args.theta, args.phi)
    else:
        rho0 = lindblad3.embed(args.theta, args.phi)
    if args.check == "e15" and np.max(np.abs(rho0 - lindblad3.initial_state_ep())) > 1e-12:
        raise DomainError("--check e15 needs the default initial state (theta=pi/2, phi=3pi/2)")
    rel = args.check in ("e15", "parametric")
    traj = lindblad3.integrate_trajectory(rho0, times, p, tol=1e-12 if rel else 1e-10,
                                          atol=1e-20 if rel else None)
    export.write_csv(out / "lindblad_trajectory.csv", lindblad3.TRAJECTORY_COLUMNS,
                     traj.rows())
    summary = {"rho_gg_final": float(np.real(traj.rho[-1][2, 2]))}
    if args.check is None:
        return summary
    if args.check == "e15":
        dev = max(float(np.max(np.abs(r - lindblad3.analytic_ep_state(t, args.gamma1))))
                  for t, r in zip(times, traj.rho))
        report = {"check": "e15", "max_deviation": dev}
    elif args.check == "parametric":
        dev = max(float(np.max(np.abs(r - lindblad3.analytic_parametric(
            t, 0.5 * args.gamma1, args.theta, args.phi).matrix())))
            for t, r in zip(times, traj.rho))
        report = {"check": "parametric", "max_deviation": dev}
    else:
        rep = lindblad3.equivalence_sweep((args.gamma1,), times=np.linspace(0, args.t_end, 10))
        report = {"check": "equivalence", **rep.to_dict()}
        dev = rep.max_deviation
    report["tol"] = CHECK_TOL[args.check]
    report["passed"] = dev <= CHECK_TOL[args.check]
    export.write_json(out / "check_report.json", report)
    summary.update(max_deviation=dev)
    if not report["passed"]:
        raise CheckFailed(f"{args.check} check failed: deviation {dev:.3g}")
    return summary


def cmd_verify(args, out: Path) -> dict:
    selected = None
    if args.criteria:
        try:
            selected = {int(c) for c in args.criteria.split(",") if c.strip()}
        except ValueError as exc:
            raise ConfigError(f"bad --criteria list: {exc}") from exc
    echo = None if args.json else print
    results = acceptance.run_all(selected, echo=echo)
    payload = [r.to_dict() for r in results]
    export.write_json(out / "verify.json", payload)
    if args.json:
        sys.stdout.write(export.json_text(payload))
    return {"passed": all(r.passed for r in results),
            "failed": [r.number for r in results if not r.passed]}


COMMANDS = {
    "evolve": cmd_evolve,
    "soe-scan": cmd_soe_scan,
    "k3": cmd_k3,
    "k3-scan": cmd_k3_scan,
    "fixed-scan": cmd_fixed_scan,
    "lindblad": cmd_lindblad,
    "verify": cmd_verify,
}


def _manifest(args, out: Path, summary: dict, wall: float, status: str) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("out",)}
    outputs = {f.name: export.file_digest(f) for f in sorted(out.iterdir())
               if f.is_file() and f.name != "manifest.json"}
    return {"tool": "ptlgi", "version": __version__, "command": args.command,
            "config": config, "seed": getattr(args, "seed", None), "status": status,
            "wall_time_s": wall, "summary": summary, "outputs": outputs}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except ConfigError as exc:
        print(f"ptlgi: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"ptlgi: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    t0 = time.perf_counter()
    summary, status, code = {}, "ok", EXIT_OK
    try:
        summary = COMMANDS[args.command](args, out)
        if args.command == "verify" and not summary["passed"]:
            status, code = "verify-failed", EXIT_VERIFY
    except (ConfigError, DomainError) as exc:
        status, code = "config-error", EXIT_CONFIG
        print(f"ptlgi: {exc}", file=sys.stderr)
    except (CheckFailed, EquivalenceError) as exc:
        status, code = "check-failed", EXIT_CHECK
        print(f"ptlgi: {exc}", file=sys.stderr)
    except NumericalError as exc:
        status, code = "numerical-error", EXIT_NUMERIC
        print(f"ptlgi: numerical failure: {exc}", file=sys.stderr)
    wall = time.perf_counter() - t0
    export.write_json(out / "manifest.json", _manifest(args, out, summary, wall, status))
    if code == EXIT_OK and args.command != "verify":
        print(f"{args.command}: ok ({wall:.2f}s) -> {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
