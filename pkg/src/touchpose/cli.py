"""Command-line interface.

Subcommands:

* ``run``             one seeded run of the configured criterion
* ``sweep``           repeated runs across all configured criteria
* ``validate-config`` parse and validate a config file
* ``export-fixtures`` write the bundled example meshes

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, ExperimentConfig, load_config
from .fixtures import write_fixtures
from .geometry import MeshLoadError
from .harness import run_experiment, run_sweep, summarize

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_RUNTIME = 3


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument(
        "--criterion",
        choices=["kl", "renyi", "fisher", "bhattacharyya", "wasserstein"],
        default=None,
        help="override config criterion",
    )
    parser.add_argument("--alpha", type=float, default=None, help="override renyi alpha")
    parser.add_argument("--out", default=None, help="override output directory")
    parser.add_argument(
        "--no-figures", action="store_true", help="skip figure rendering for this invocation"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="touchpose",
        description="Simulated active tactile pose estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a single run")
    _add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="execute repeated runs per criterion")
    _add_common(p_sweep)
    p_sweep.add_argument("--runs", type=int, default=None, help="override config runs")

    p_val = sub.add_parser("validate-config", help="validate a config file")
    p_val.add_argument("--config", required=True)

    p_fix = sub.add_parser("export-fixtures", help="write bundled example meshes")
    p_fix.add_argument("--out", default="fixtures", help="output directory")

    return parser


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.criterion is not None:
        changes["criterion"] = (args.criterion,)
    if args.alpha is not None:
        changes["alpha"] = args.alpha
    if args.out is not None:
        changes["out_dir"] = args.out
    if getattr(args, "runs", None) is not None:
        changes["runs"] = args.runs
    if args.no_figures:
        changes["make_figures"] = False
    return config.replace(**changes) if changes else config


def _cmd_run(args) -> int:
    from .reporting import write_outputs

    config = _apply_overrides(load_config(args.config), args)
    records = run_experiment(config, run_seed=config.seed)
    summary = summarize(records, config)
    out = write_outputs(records, summary, config.out_dir, config.make_figures)
    final = records[-1]
    print(
        f"run complete: {final.touch} touches, final ADI {final.adi_m:.6f} m, "
        f"position error {final.pos_err_m:.6f} m, rotation error {final.rot_err_geodesic_deg:.4f} deg"
    )
    print(f"wrote {out['csv']}, {out['json']}" + (f", {', '.join(out['figures'])}" if out["figures"] else ""))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    from .reporting import write_outputs

    config = _apply_overrides(load_config(args.config), args)
    records, summary, failures = run_sweep(config)
    out = write_outputs(records, summary, config.out_dir, config.make_figures)
    print(
        f"sweep complete: {len(config.criterion)} criteria x {config.runs} runs, "
        f"{len(records)} touch records, {len(failures)} failed runs"
    )
    print(f"wrote {out['csv']}, {out['json']}" + (f", {', '.join(out['figures'])}" if out["figures"] else ""))
    return EXIT_OK


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    print(f"config OK: {args.config} (criteria: {', '.join(config.criterion)})")
    return EXIT_OK


def _cmd_fixtures(args) -> int:
    paths = write_fixtures(args.out)
    print("wrote " + ", ".join(paths))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "validate-config": _cmd_validate,
        "export-fixtures": _cmd_fixtures,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, MeshLoadError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
