"""shrinklab CLI - run, verify, sweep and sphere-ode.

Usage:
    shrinklab run [--config FILE] [--initial SPEC] [--mode MODE] [--t-end T] ...
    shrinklab verify [--config FILE] [--identity NAME ...] [--list]
    shrinklab sweep [--config FILE] --k 2 --k 3 --amplitude 0.05 [--grid 2:0.05,3:0.1]
    shrinklab sphere-ode --n 1 --r0 1.9 --t-end 10 --dt 1e-3 [--output-dir DIR]

Exit codes: 0 ok, 1 numerical failure (or a failed check with --strict),
2 usage error.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys
from typing import Any, Sequence

from dotenv import load_dotenv

from .config import DEFAULT_TOLERANCES, TOLERANCE_PREFIX, resolve_config
from .errors import InvalidArgument, ShrinklabError
from .runlog import RunDirectoryExporter, RunLogHandler

load_dotenv()

LOG_LEVEL_ENV = "SHRINKLAB_LOG_LEVEL"
_installed: list[logging.Handler] = []


def _configure_logging(level_name: str) -> None:
    level = logging.getLevelName(level_name.upper())
    if not isinstance(level, int):
        raise InvalidArgument(f"log-level: unknown level {level_name!r}")
    root = logging.getLogger("shrinklab")
    for handler in _installed:
        root.removeHandler(handler)
    _installed.clear()

    console = logging.StreamHandler(sys.stderr)
    console.setLevel(level)
    console.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    narrative = RunLogHandler(RunDirectoryExporter())
    for handler in (console, narrative):
        root.addHandler(handler)
        _installed.append(handler)
    root.setLevel(logging.DEBUG)


# ---------------------------------------------------------------------------
# Config plumbing
# ---------------------------------------------------------------------------
_OVERRIDE_FIELDS = (
    "initial",
    "mode",
    "n_points",
    "dt",
    "t_end",
    "resample_every",
    "burn_in",
    "output_dir",
    "fit_window",
    "cfl",
    "derivative",
    "normalize",
    "simplicity_every",
    "workers",
)


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    out = {name: getattr(args, name, None) for name in _OVERRIDE_FIELDS}
    for token in getattr(args, "tol", None) or []:
        name, eq, value = token.partition("=")
        if not eq:
            raise InvalidArgument(f"tol: expected NAME=VALUE, got {token!r}")
        out[TOLERANCE_PREFIX + name.strip()] = value
    return {k: v for k, v in out.items() if v is not None}


def _config(args: argparse.Namespace):
    return resolve_config(_overrides(args), config_file=args.config)


def _print_json(payload: Any) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------
def _cmd_run(args: argparse.Namespace) -> int:
    from .pipeline import run_scenario

    result = run_scenario(_config(args))
    failed = result.failed_checks()
    _print_json({"output_dir": str(result.output_dir), "fits": result.summary["fits"], "failed_checks": failed})
    return 1 if args.strict and failed else 0


def _cmd_verify(args: argparse.Namespace) -> int:
    from .diagnostics import list_identities
    from .pipeline import verify

    if args.list:
        for spec in list_identities():
            variants = ", ".join(spec.variants)
            print(f"{spec.name:36s} {spec.kind:8s} [{variants}]  {spec.statement}")
        return 0
    reports = verify(_config(args), names=args.identity)
    _print_json([report.to_dict() for report in reports])
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    from .pipeline import sweep

    grid = _parse_grid(args.grid) if args.grid else []
    grid += list(itertools.product(args.k or [], args.amplitude or []))
    frame = sweep(_config(args), grid)
    print(frame.to_string(index=False))
    if args.strict and (frame["status"].ne("ok").any() or not frame["passed"].all()):
        return 1
    return 0


def _cmd_sphere_ode(args: argparse.Namespace) -> int:
    from .pipeline import sphere_ode

    _print_json(sphere_ode(args.n, args.r0, args.t_end, args.dt, output_dir=args.output_dir))
    return 0


def _parse_grid(text: str) -> list[tuple[int, float]]:
    points = []
    for token in text.split(","):
        k, sep, amp = token.strip().partition(":")
        try:
            if not sep:
                raise ValueError
            points.append((int(k), float(amp)))
        except ValueError:
            raise InvalidArgument(f"grid: expected k:amplitude, got {token!r}") from None
    return points


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------
def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Flat key=value config file")
    parser.add_argument("--initial", help="circle:r | ellipse:a,b | fourier:k:amp[,k:amp] | file:path")
    parser.add_argument("--mode", help="mcf | rescaled | normal")
    parser.add_argument("--n-points", dest="n_points", help="Vertices of the discrete curve")
    parser.add_argument("--dt", help="Sampling interval of the series")
    parser.add_argument("--t-end", dest="t_end", help="Final clock value")
    parser.add_argument("--resample-every", dest="resample_every", help="Resample after every k-th step")
    parser.add_argument("--burn-in", dest="burn_in", help="Start T0 of the energy-bound windows")
    parser.add_argument("--output-dir", dest="output_dir", help="Directory the run writes into")
    parser.add_argument("--fit-window", dest="fit_window", help="start,end of the rate fit")
    parser.add_argument("--cfl", help="Step-bound constant")
    parser.add_argument("--derivative", help="spectral | central")
    parser.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=None,
                        help="Rescale the initial curve to singular time 1")
    parser.add_argument("--simplicity-every", dest="simplicity_every", help="Check embeddedness every k samples")
    parser.add_argument("--workers", help="Worker threads for sweeps")
    parser.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help=f"Override a tolerance ({', '.join(DEFAULT_TOLERANCES)})")
    parser.add_argument("--strict", action="store_true", help="Exit 1 when a check fails")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shrinklab")
    parser.add_argument(
        "--log-level",
        default=os.environ.get(LOG_LEVEL_ENV, "WARNING"),
        help=f"Console log level (default from {LOG_LEVEL_ENV}, else WARNING)",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # shrinklab run
    run_parser = subparsers.add_parser("run", help="Evolve one curve and check the diagnostics")
    _add_config_flags(run_parser)
    run_parser.set_defaults(handler=_cmd_run)

    # shrinklab verify
    verify_parser = subparsers.add_parser("verify", help="Identity residuals at two resolutions")
    _add_config_flags(verify_parser)
    verify_parser.add_argument("--identity", action="append", help="Restrict to this identity (repeatable)")
    verify_parser.add_argument("--list", action="store_true", help="List the identity registry and exit")
    verify_parser.set_defaults(handler=_cmd_verify)

    # shrinklab sweep
    sweep_parser = subparsers.add_parser("sweep", help="Runs over a grid of radial perturbations")
    _add_config_flags(sweep_parser)
    sweep_parser.add_argument("--k", type=int, action="append", help="Radial mode (repeatable)")
    sweep_parser.add_argument("--amplitude", type=float, action="append", help="Mode amplitude (repeatable)")
    sweep_parser.add_argument("--grid", help="Explicit points k:amp[,k:amp...]")
    sweep_parser.set_defaults(handler=_cmd_sweep)

    # shrinklab sphere-ode
    sphere_parser = subparsers.add_parser("sphere-ode", help="Radius ODE of the rescaled round sphere")
    sphere_parser.add_argument("--n", type=int, required=True, help="Sphere dimension")
    sphere_parser.add_argument("--r0", type=float, required=True, help="Initial radius")
    sphere_parser.add_argument("--t-end", dest="t_end", type=float, required=True, help="Final time")
    sphere_parser.add_argument("--dt", type=float, default=1e-3, help="RK4 step")
    sphere_parser.add_argument("--output-dir", dest="output_dir", help="Write sphere.csv here")
    sphere_parser.set_defaults(handler=_cmd_sphere_ode)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _configure_logging(args.log_level)
        return args.handler(args)
    except InvalidArgument as exc:
        print(f"shrinklab: error: {exc}", file=sys.stderr)
        return 2
    except ShrinklabError as exc:
        print(f"shrinklab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
