"""Command-line front end for the study runners and ad-hoc solves.

Exit codes follow the usual triage: 0 when every check passes, 1 when the
study ran but a check failed, 2 for usage or configuration problems. No
check failure ever exits 0.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from .characteristics import solve_classical
from .fields import save_snapshot
from .studies import (
    OUTPUT_ROOT_ENV,
    RUNNERS,
    StudiesError,
    StudyConfig,
    build_case,
    config_text,
    parse_study_config,
    resolve_out_dir,
)

_STUDIES = ("conservation", "mollify", "renorm", "stability")

_COMMAND_HELP = {
    "conservation": "classical solve plus the norm-history gate for every p",
    "mollify": "remainder decay sweep and the consistency identity",
    "renorm": "weak and renormalized residuals over the phi and beta banks",
    "stability": "perturbation family sweep with renormalized convergence",
    "solve": "bare classical solve; dumps the final layer as CSV + JSON",
    "validate-config": "parse and echo a configuration without running anything",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "config_pos", nargs="?", metavar="CONFIG", help="configuration file"
    )
    common.add_argument(
        "--config", metavar="PATH", help="configuration file (alternative to the positional)"
    )
    common.add_argument(
        "--out", metavar="DIR", help=f"output directory (overrides the config and ${OUTPUT_ROOT_ENV})"
    )
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one configuration field (repeatable)",
    )
    common.add_argument("--quiet", action="store_true", help="suppress per-check output")

    parser = argparse.ArgumentParser(
        prog="transportlab",
        description="Transport-equation studies: solve, verify, and report.",
        epilog=(
            "every subcommand accepts --config PATH, --out DIR, "
            "--set SECTION.KEY=VALUE (repeatable), and --quiet; "
            f"${OUTPUT_ROOT_ENV} sets the default output root"
        ),
    )
    sub = parser.add_subparsers(dest="command")
    for name in (*_STUDIES, "solve", "validate-config"):
        sub.add_parser(name, parents=[common], help=_COMMAND_HELP[name])
    return parser


def _load_config(ns: argparse.Namespace) -> StudyConfig:
    if ns.config_pos and ns.config:
        raise StudiesError(
            "pass the configuration either positionally or with --config, not both"
        )
    path = ns.config_pos or ns.config
    cfg = parse_study_config(path, ns.overrides)
    if ns.command in _STUDIES:
        cfg = replace(cfg, study=ns.command)
    if ns.out:
        cfg = replace(cfg, out_dir=ns.out)
    return cfg


def _solve_out_dir(cfg: StudyConfig) -> Path:
    if cfg.out_dir:
        return Path(cfg.out_dir)
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "runs")) / "solve"


def _run_solve(cfg: StudyConfig, quiet: bool) -> int:
    _, times, u, rho0 = build_case(cfg)
    sol = solve_classical(rho0, u, times)
    out = _solve_out_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = save_snapshot(sol, sol.n_layers - 1, out / "solution_final")
    (out / "config.cfg").write_text(config_text(cfg))
    if not quiet:
        print(f"solved {cfg.nx}x{cfg.ny} over {cfg.nt} steps to t = {cfg.horizon:g}")
        print(f"wrote {csv_path} and {json_path}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if ns.command is None:
        parser.print_usage(sys.stderr)
        print("transportlab: a subcommand is required", file=sys.stderr)
        return 2

    try:
        cfg = _load_config(ns)
    except StudiesError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if ns.command == "validate-config":
        if not ns.quiet:
            print(config_text(cfg), end="")
        return 0
    if ns.command == "solve":
        return _run_solve(cfg, ns.quiet)

    outcome = RUNNERS[ns.command](cfg)
    if not ns.quiet:
        for line in outcome.lines():
            print(line)
        print(f"outputs in {resolve_out_dir(cfg)}")
    return 0 if outcome.passed else 1


def entry() -> None:
    raise SystemExit(main())
