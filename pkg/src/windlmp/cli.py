"""Command-line entry point: ``windlmp clear|sweep-uncertainty|sweep-penetration|congestion``."""

import argparse
import json
import logging
import sys

from .experiments import (ConfigError, ExperimentConfig, certificate_failures, run_study,
                          write_results)
from .grid import NetworkError, NetworkFormatError
from .scenarios import ScenarioError

EXIT_OK, EXIT_INFEASIBLE, EXIT_CONFIG, EXIT_LIMIT = 0, 2, 3, 4

COMMANDS = {"clear": "clear", "sweep-uncertainty": "uncertainty",
            "sweep-penetration": "penetration", "congestion": "congestion"}


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _line(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected FROM:TO:LIMIT, got {text!r}")
    try:
        return (int(parts[0]), int(parts[1]), float(parts[2]))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected FROM:TO:LIMIT, got {text!r}")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad input, which here means "infeasible"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    ap = _Parser(prog="windlmp", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--network", default="rts24", help="network file or bundled name")
        p.add_argument("--scenarios", default="rts24_wind", help="scenario file or bundled name")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--mip-gap", type=float, default=1e-6)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--per-scenario-lmp", action="store_true")
        p.add_argument("--export-mps", action="store_true")
        p.add_argument("--line", type=_line, action="append", default=[],
                       metavar="FROM:TO:LIMIT", help="override a line flow limit (MW)")
        if name == "sweep-uncertainty":
            p.add_argument("--x", type=_floats, default=(40.0, 50.0, 60.0),
                           help="uncertainty levels in percent, comma separated")
            p.add_argument("--forecast", type=_floats, default=None)
            p.add_argument("--probs", type=_floats, default=None)
        if name == "sweep-penetration":
            p.add_argument("--factors", type=_floats, default=(),
                           help="wind capacity scale factors")
            p.add_argument("--penetration", type=_floats, default=(),
                           help="target penetration coefficients in percent")
            p.add_argument("--basis", choices=("system-peak", "bus-peak"), default="system-peak",
                           help="denominator of the penetration coefficient")
    return ap


def config_from_args(args):
    study = COMMANDS[args.command]
    cfg = ExperimentConfig(study=study, network=args.network, scenarios=args.scenarios,
                           out=args.out, mip_gap=args.mip_gap, jobs=args.jobs,
                           per_scenario_lmp=args.per_scenario_lmp, export_mps=args.export_mps,
                           lines=tuple(args.line))
    if study == "uncertainty":
        cfg.x_values = args.x
        if args.forecast:
            cfg.forecast = args.forecast
        if args.probs:
            cfg.probs = args.probs
    if study == "penetration":
        cfg.factors = args.factors
        cfg.penetration = args.penetration
        cfg.penetration_basis = args.basis
    return cfg.validate()


def exit_code(results):
    statuses = {r.status for r in results}
    if statuses <= {"optimal"}:
        return EXIT_OK
    if "infeasible" in statuses:
        return EXIT_INFEASIBLE
    return EXIT_LIMIT


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        results = run_study(cfg)
    except (ConfigError, NetworkError, NetworkFormatError, ScenarioError,
            FileNotFoundError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for r in results:
        bad = certificate_failures(r.certificate) if r.optimal else []
        if bad:
            # an objective without a valid duality certificate is not reported as optimal
            r.status = "uncertified"
            r.diagnosis = [f"certificate check failed: {', '.join(bad)}"]
    if cfg.out:
        write_results(cfg, results)
    summary = [{"label": r.label, "status": r.status, "objective": r.objective,
                "diagnosis": r.diagnosis} for r in results]
    print(json.dumps(summary, indent=1))
    return exit_code(results)


if __name__ == "__main__":
    sys.exit(main())
