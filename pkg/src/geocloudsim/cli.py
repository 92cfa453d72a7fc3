"""Command line front end.

Subcommands: ``simulate`` (one scenario), ``compare`` (several controllers
on the same workload), ``gen-traces`` (synthetic trace CSVs per location)
and ``fit`` (least-squares power surface fit from samples).

Exit codes: 0 success, 2 configuration/input error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import config as config_mod
from .geotemporal import GeotemporalError, synth_trace, write_trace
from .power import PowerModelError, fit_power_surface, load_fit_samples
from .pricing import PricingError
from .simulator import CONTROLLERS, ConfigError, compare, run
from .report import comparison_table, write_comparison, write_report
from .workload import WorkloadError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML config file (defaults are built in)")
    parser.add_argument("--seed", type=int, help="override the scenario seed")
    parser.add_argument("--out", help="output directory (also via $GEOCLOUDSIM_OUT)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geocloudsim",
        description="geo-distributed cloud simulator with frequency scaling",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one scenario and write its report")
    _add_common(p_sim)
    p_sim.add_argument("--controller", choices=CONTROLLERS, help="override the controller")
    p_sim.add_argument(
        "--no-prune", action="store_true",
        help="disable the frequency stage's search-space pruning heuristic",
    )
    p_sim.add_argument(
        "--no-figures", action="store_true", help="skip figure rendering"
    )

    p_cmp = sub.add_parser("compare", help="run several controllers on one workload")
    _add_common(p_cmp)
    p_cmp.add_argument(
        "--controllers", default="bfd,bcf,bcffs",
        help="comma-separated controller list (default: bfd,bcf,bcffs)",
    )
    p_cmp.add_argument("--no-prune", action="store_true",
                       help="disable the frequency stage's pruning heuristic")
    p_cmp.add_argument("--no-figures", action="store_true",
                       help="skip figure rendering")

    p_gen = sub.add_parser("gen-traces", help="write synthetic trace CSVs per location")
    _add_common(p_gen)
    p_gen.add_argument("--mode", choices=("fixed", "rtep"), help="trace mode")
    p_gen.add_argument("--hours", type=int, help="trace length in hours")

    p_fit = sub.add_parser("fit", help="fit the power surface to q,c,power_w samples")
    p_fit.add_argument("--input", required=True, help="CSV file with header q,c,power_w")
    p_fit.add_argument("--out", help="optional JSON file for the fitted coefficients")
    return parser


def cmd_simulate(args) -> int:
    cfg = config_mod.load_config(args.config)
    overrides = {"controller": args.controller, "seed": args.seed}
    if args.no_prune:
        overrides["prune"] = False
    scenario = config_mod.build_scenario(cfg, **overrides)
    report = run(scenario)
    outdir = config_mod.output_dir(cfg, args.out)
    paths = write_report(report, outdir, figures=not args.no_figures)
    agg = report.aggregates
    print(
        f"{scenario.controller}: total cost ${agg['total_cost']:.2f}, "
        f"service revenue ${agg['service_revenue']:.2f}, "
        f"{agg['migrations']} migrations"
    )
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = config_mod.load_config(args.config)
    controllers = tuple(c.strip() for c in args.controllers.split(",") if c.strip())
    overrides = {"seed": args.seed}
    if args.no_prune:
        overrides["prune"] = False
    scenario = config_mod.build_scenario(cfg, **overrides)
    cmp = compare(scenario, controllers)
    outdir = config_mod.output_dir(cfg, args.out)
    paths = write_comparison(cmp, outdir, figures=not args.no_figures)
    print(comparison_table(cmp))
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_gen_traces(args) -> int:
    cfg = config_mod.load_config(args.config)
    locations, _ = config_mod.build_locations(cfg)
    mode = args.mode or cfg["scenario"]["trace_mode"]
    hours = args.hours or cfg["scenario"]["horizon_steps"]
    seed = args.seed if args.seed is not None else cfg["scenario"]["seed"]
    from .geotemporal import TraceParams

    params = TraceParams(**cfg["traces"])
    outdir = config_mod.output_dir(cfg, args.out)
    os.makedirs(outdir, exist_ok=True)
    for loc in locations:
        trace = synth_trace(loc, hours, mode, seed, params)
        path = os.path.join(outdir, f"trace_{loc.id}.csv")
        write_trace(trace, path)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_fit(args) -> int:
    samples = load_fit_samples(args.input)
    result = fit_power_surface(samples)
    c = result.coeffs
    for name in ("p00", "p10", "p01", "p20", "p11", "p30", "p21"):
        print(f"{name} = {getattr(c, name):.6g}")
    print(f"max relative deviation:  {100.0 * result.max_rel_dev:.2f}%")
    print(f"mean relative deviation: {100.0 * result.mean_rel_dev:.2f}%")
    if args.out:
        payload = {
            "coefficients": {k: getattr(c, k) for k in
                             ("p00", "p10", "p01", "p20", "p11", "p30", "p21")},
            "max_rel_dev": result.max_rel_dev,
            "mean_rel_dev": result.mean_rel_dev,
        }
        with open(args.out, "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
        print(f"wrote {args.out}")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "gen-traces": cmd_gen_traces,
    "fit": cmd_fit,
}

_CONFIG_ERRORS = (
    ConfigError,
    PowerModelError,
    PricingError,
    WorkloadError,
    GeotemporalError,
    FileNotFoundError,
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
