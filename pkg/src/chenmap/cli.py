"""Command line entry point.

Exit codes: 0 every check holds, 1 an inequality is violated, 2 the scenario
or arguments are invalid, 3 an engine or numerical error occurred.
"""

from __future__ import annotations

import argparse
import sys

from chenmap import __version__
from chenmap.catalog import FACTORIES, builtin
from chenmap.delta_invariants import EXHAUSTIVE, MULTISTART
from chenmap.errors import ConfigurationError, EngineError
from chenmap.scenario_cli import (
    DELTA_CHECKS,
    ScenarioFile,
    emit_report,
    exit_code,
    load_scenario,
    run_checks,
)
from chenmap.space_forms import GCSF

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_ENGINE = 3

_MODES = {"exhaustive": EXHAUSTIVE, "multistart": MULTISTART}


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chenmap", description="Verify Chen-type inequalities for Riemannian maps.")
    p.add_argument("--version", action="version", version=f"chenmap {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the checks of a scenario file")
    v.add_argument("--scenario", required=True)
    v.add_argument("--format", choices=("json", "csv"), default="json")
    v.add_argument("--out", help="write the report here instead of stdout")
    v.add_argument("--seed", type=_u64)
    v.add_argument("--tolerance-scale", type=_positive)
    v.add_argument("--timing", action="store_true", help="record wall time in the report (breaks byte equality)")

    sub.add_parser("catalog", help="list built-in scenarios")

    d = sub.add_parser("delta", help="run the delta-invariant bounds of a scenario")
    d.add_argument("--scenario", required=True)
    d.add_argument("--mode", choices=tuple(_MODES), default="exhaustive")
    d.add_argument("--budget", type=int, help="grid resolution (multiple of 4) or number of starts")
    d.add_argument("--format", choices=("json", "csv"), default="json")
    d.add_argument("--out")
    d.add_argument("--seed", type=_u64)
    d.add_argument("--tolerance-scale", type=_positive)
    d.add_argument("--timing", action="store_true")

    s = sub.add_parser("selftest", help="run the built-in property checks")
    s.add_argument("--full", action="store_true", help="use the 200-triple soundness sweep")
    return p


def _delta_only(sf: ScenarioFile) -> ScenarioFile:
    checks = tuple(c for c in sf.checks if c in DELTA_CHECKS)
    if not checks:
        if sf.model is None:
            raise ConfigurationError("delta needs a scenario with a model block")
        checks = ("delta_gcsf",) if sf.model.model.kind == GCSF else ("delta_gssf",)
    return ScenarioFile(sf.schema_version, sf.name, sf.scenario, sf.model, sf.points, sf.planes, checks,
                        sf.tolerances, sf.seed, sf.spec)


def _report(args, sf: ScenarioFile, mode=None, budget=None) -> int:
    report = run_checks(sf, mode=mode, budget=budget, timing=args.timing)
    text = emit_report(report, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return exit_code(report)


def _catalog() -> int:
    for name in FACTORIES:
        b = builtin(name)
        print(f"{name:24s} rank>={b.rank_min}  {b.description}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "catalog":
            return _catalog()
        if args.command == "selftest":
            from chenmap.selftest import run_selftest

            return EXIT_OK if run_selftest(full=args.full) else EXIT_VIOLATION
        sf = load_scenario(args.scenario, seed=args.seed, tolerance_scale=args.tolerance_scale)
        if args.command == "verify":
            return _report(args, sf)
        if args.budget is not None and args.budget < 1:
            raise ConfigurationError("--budget must be positive")
        if args.mode == "exhaustive" and args.budget is not None and args.budget % 4:
            raise ConfigurationError("--budget for the exhaustive grid must be a multiple of 4")
        return _report(args, _delta_only(sf), _MODES[args.mode], args.budget)
    except ConfigurationError as exc:
        print(f"chenmap: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EngineError as exc:
        print(f"chenmap: engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
