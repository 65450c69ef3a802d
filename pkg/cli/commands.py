# cli/commands.py
import json
import logging
import os
import sys
import traceback
from typing import Callable, Dict, List, Optional

import numpy as np

from config import OUTPUT_DIR
from core.exceptions import ConfigError, IndependenceError, KwiseError, StatisticalRejection
from core.experiment import ExperimentConfig, build_margin, describe_error, run_experiment
from core.graph_families import generate, graph_summary
from core.limit_laws import LimitLaw, law_from_spec, parse_grid, tabulate_law
from core.margins import margin_from_config
from core.sampler import simulate_to_frame
from core.stats_tests import battery_rejections, exact_kwise_check, moment_suite, run_battery, test_kwise_sampled
from core.utils import config_hash, load_frame, load_results, read_frame_hash, save_frame, save_results
from cli.arguments import build_parser
from cli import results_view
from presets.experiment_presets import get_preset

logger = logging.getLogger(__name__)


def cmd_graphgen(args) -> int:
    g = generate(args.family, args.param)
    if args.out:
        save_results(g.to_dict(), args.out)
        print(f"Wrote {g.family_tag.value}(param={args.param}): "
              f"{g.vertex_count} vertices, {g.edge_count} edges to {args.out}")
    else:
        print(g.to_json())
    if args.summary:
        print(results_view.format_graph_summary(graph_summary(g)), file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    if args.margin and args.margin_config:
        raise ConfigError("Use either --margin or --margin-config, not both")
    if args.margin_config:
        spec = margin_from_config({"ell": args.ell, **load_results(args.margin_config)})
    else:
        spec = build_margin(args.margin, args.ell)
    frame = simulate_to_frame((args.family, args.param), spec, args.reps, args.seed,
                              args.fast, args.ell, args.threads)
    hash_hex = config_hash({
        "command": "simulate", "family": args.family.replace("-", "_"), "param": args.param,
        "ell": args.ell, "margin": args.margin, "margin_config": args.margin_config,
        "reps": args.reps, "seed": args.seed, "fast": args.fast,
    })
    save_frame(frame, args.out, hash_hex)
    print(results_view.format_simulation_summary(frame))
    print(f"Wrote {len(frame)} replications to {args.out} (config hash {hash_hex[:12]})")
    return 0


def law_from_args(args) -> LimitLaw:
    """Map limit options onto the same law strings gof and run accept"""
    if args.law == "vg":
        return law_from_spec(f"vg:n={args.n!r},s={args.s!r}")
    if args.law == "vg-standardized":
        return law_from_spec(f"vg-standardized:ell={args.ell}")
    if args.law == "s-limit":
        if args.r is None:
            raise ConfigError("--law s-limit requires --r")
        return law_from_spec(f"s-limit:ell={args.ell},r={args.r!r}")
    if args.law == "two-hub-mixture":
        return law_from_spec(f"two-hub-mixture:r={1.0 if args.r is None else args.r!r}")
    return law_from_spec(args.law)


def cmd_limit(args) -> int:
    law = law_from_args(args)
    table = tabulate_law(law, parse_grid(args.grid), via_cf=args.via_cf)
    hash_hex = config_hash({"command": "limit", "law": law.to_dict(), "grid": args.grid, "via_cf": args.via_cf})
    save_frame(table.to_frame(), args.out, hash_hex)
    print(f"Tabulated {law.label} on {len(table.x)} points (mass on grid {table.total_mass():.6f}) to {args.out}")
    return 0


def cmd_independence(args) -> int:
    g = generate(args.family, args.param)
    if args.sampled:
        if args.seed is None:
            raise IndependenceError("--sampled requires --seed")
        report = test_kwise_sampled(g, args.ell, args.k, args.tuples, args.reps, args.seed, args.alpha).to_dict()
    else:
        report = exact_kwise_check(g, args.ell, args.k).to_dict()
    if args.out:
        save_results(report, args.out)
    print(results_view.format_independence(report))
    return 0


def cmd_gof(args) -> int:
    frame = load_frame(args.input, args.config_hash)
    if args.column not in frame.columns:
        raise ConfigError(f"{args.input} has no column '{args.column}'")
    values = frame[args.column].dropna().to_numpy()
    if values.size == 0:
        raise ConfigError(f"Column '{args.column}' of {args.input} is empty")
    law = law_from_spec(args.law)
    tests: List[str] = [t.strip() for t in args.tests.split(",") if t.strip()]
    battery = [t for t in tests if t != "moments"]
    atom_rng = np.random.default_rng(args.seed)
    reports = run_battery(values, law, battery, args.bins, rng=atom_rng) if battery else []
    rejected = battery_rejections(reports, args.alpha, args.ks_max)
    payload = {
        "input": os.path.basename(args.input),
        "input_config_hash": read_frame_hash(args.input),
        "column": args.column,
        "reference_law": law.to_dict(),
        "reports": [r.to_dict() for r in reports],
    }
    print(results_view.format_gof_reports(reports))
    if "moments" in tests:
        moments = moment_suite(values, law)
        payload["moments"] = moments.to_dict()
        print(results_view.format_moment_report(moments))
        if not moments.passed:
            rejected.append("moments")
    payload["rejections"] = rejected
    save_results(payload, args.out)
    if args.assert_mode and rejected:
        raise StatisticalRejection(f"Rejected at alpha={args.alpha}: {', '.join(rejected)}")
    return 0


def cmd_run(args) -> int:
    if args.preset:
        config = get_preset(args.preset, seed=args.seed)
    else:
        payload = load_results(args.config)
        if args.seed is not None:
            payload["seed"] = args.seed
        config = ExperimentConfig.from_dict(payload)
    config.output_dir = args.out_dir or os.path.join(OUTPUT_DIR, config.name)
    config.assert_mode = config.assert_mode or args.assert_mode
    result = run_experiment(config, args.threads)
    print(results_view.format_artifacts(result.artifacts, config.output_dir, result.config_hash))
    if result.exit_code == 3:
        raise StatisticalRejection(f"Experiment '{config.name}' rejected: {', '.join(result.rejections)}")
    return result.exit_code


COMMANDS: Dict[str, Callable] = {
    "graphgen": cmd_graphgen,
    "simulate": cmd_simulate,
    "limit": cmd_limit,
    "independence": cmd_independence,
    "gof": cmd_gof,
    "run": cmd_run,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Parse argv, dispatch, and map failures to exit codes with a JSON error object"""
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except KwiseError as e:
        logger.error(f"{args.command} failed: {str(e)}")
        logger.debug(traceback.format_exc())
        print(json.dumps(e.to_dict()))
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected failure in {args.command}")
        print(json.dumps(describe_error(e)))
        return 1
