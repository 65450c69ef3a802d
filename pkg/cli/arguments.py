# cli/arguments.py
import argparse
import json
import re
import sys

from config import DEFAULT_ALPHAS, DEFAULT_GRID
from presets.experiment_presets import PRESETS

FAMILIES = ["bipartite", "two_hub", "two-hub", "hypercube", "fan", "cage"]
MARGINS = ["bernoulli", "uniform01", "normal"]
LAWS = ["gaussian", "vg", "vg-standardized", "s-limit", "two-hub-mixture"]


class KwiseArgumentParser(argparse.ArgumentParser):
    """Usage errors are validation failures: JSON error object and exit code 1"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # grids such as -6:6:0.01 are values, not options
        self._negative_number_matcher = re.compile(r"^-\.?\d[\d.:eE+-]*$")

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": message, "type": "UsageError", "exit_code": 1}))
        sys.exit(1)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _add_graph(parser: argparse.ArgumentParser):
    parser.add_argument("--family", required=True, choices=FAMILIES, help="graph family")
    parser.add_argument("--param", required=True, type=_positive_int,
                        help="family parameter: m, or the prime order q for cage")


def _add_threads(parser: argparse.ArgumentParser):
    parser.add_argument("--threads", type=_positive_int, default=None,
                        help="worker threads (default: KWISE_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = KwiseArgumentParser(
        prog="kwise",
        description="Simulate K-tuplewise independent sequences built on graphs and "
                    "check them against their limit laws.")
    sub = parser.add_subparsers(dest="command", required=True)

    graphgen = sub.add_parser("graphgen", help="generate a family graph as JSON")
    _add_graph(graphgen)
    graphgen.add_argument("--out", help="output JSON path (default: stdout)")
    graphgen.add_argument("--summary", action="store_true",
                          help="print girth, regularity and connectivity ratio")

    simulate = sub.add_parser("simulate", help="simulate xi_n and S_n replications to CSV")
    _add_graph(simulate)
    simulate.add_argument("--ell", type=int, default=2, help="number of vertex labels (>= 2)")
    simulate.add_argument("--margin", choices=MARGINS, help="margin of X; omit to simulate xi only")
    simulate.add_argument("--margin-config", help="JSON margin file with a quantile_table")
    simulate.add_argument("--reps", required=True, type=_positive_int, help="replications")
    simulate.add_argument("--seed", required=True, type=_seed, help="master seed (mandatory)")
    simulate.add_argument("--fast", action="store_true",
                          help="use the closed-form representation (bipartite; two_hub and fan at ell=2)")
    simulate.add_argument("--out", required=True, help="output CSV path")
    _add_threads(simulate)

    limit = sub.add_parser("limit", help="tabulate a limit law's pdf and cdf")
    limit.add_argument("--law", required=True, choices=LAWS)
    limit.add_argument("--ell", type=int, default=2, help="ell for vg-standardized and s-limit")
    limit.add_argument("--r", type=float, default=None, help="mixing coefficient in [-1, 1]")
    limit.add_argument("--n", type=float, default=1.0, help="vg shape: number of summed normal products")
    limit.add_argument("--s", type=float, default=1.0,
                       help="vg scale s, as in vg:n=..,s=..; the law of s times a sum of n products of N(0, 1) pairs")
    limit.add_argument("--grid", default=DEFAULT_GRID, help="lo:hi:step (default %(default)s)")
    limit.add_argument("--via-cf", action="store_true", help="tabulate by characteristic-function inversion")
    limit.add_argument("--out", required=True, help="output CSV path (columns x, pdf, cdf)")

    independence = sub.add_parser("independence", help="check K-tuplewise independence of the indicators")
    _add_graph(independence)
    independence.add_argument("--ell", type=int, default=2)
    independence.add_argument("--k", type=_positive_int, required=True, help="tuple size K")
    independence.add_argument("--sampled", action="store_true",
                              help="chi-square spot check instead of exhaustive enumeration")
    independence.add_argument("--tuples", type=_positive_int, default=200, help="sampled tuples")
    independence.add_argument("--reps", type=_positive_int, default=100000, help="replications per tuple")
    independence.add_argument("--seed", type=_seed, default=None, help="seed (required with --sampled)")
    independence.add_argument("--alpha", type=float, default=0.01, help="family-wise level")
    independence.add_argument("--out", help="output JSON path")

    gof = sub.add_parser("gof", help="goodness-of-fit battery on a samples CSV")
    gof.add_argument("--input", required=True, help="CSV produced by simulate or run")
    gof.add_argument("--column", default="s_n", choices=["s_n", "xi_std"])
    gof.add_argument("--law", required=True,
                     help="law spec, e.g. gaussian, s-limit:ell=2,r=0.99, two-hub-mixture:r=1")
    gof.add_argument("--tests", default="ks,ad,chi2", help="comma list of ks, ad, chi2, moments")
    gof.add_argument("--bins", type=int, default=None, help="chi-square cells (default ceil(2 n^0.4))")
    gof.add_argument("--config-hash", help="reject the input unless it carries this config hash")
    gof.add_argument("--alpha", type=float, default=DEFAULT_ALPHAS[0], help="level used by --assert")
    gof.add_argument("--ks-max", type=float, default=None,
                     help="reject KS on distance above this bound instead of on its p-value")
    gof.add_argument("--seed", type=_seed, default=0, help="seed of the randomized transform at atoms")
    gof.add_argument("--assert", dest="assert_mode", action="store_true",
                     help="exit with code 3 if any test rejects at --alpha")
    gof.add_argument("--out", required=True, help="output JSON path")

    run = sub.add_parser("run", help="run a preset or a JSON experiment config")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", choices=sorted(PRESETS))
    source.add_argument("--config", help="ExperimentConfig JSON file")
    run.add_argument("--out-dir", help="artifact directory (default: KWISE_OUTPUT_DIR/<name>)")
    run.add_argument("--seed", type=_seed, default=None, help="override the preset seed")
    run.add_argument("--assert", dest="assert_mode", action="store_true",
                     help="exit with code 3 on statistical rejection")
    _add_threads(run)

    return parser
