"""
main.py - Command-line entry point
Run this file with: python main.py <command> [options]

Commands: grid, sample, city, estimate, dim, figures, presets
"""

import sys
import logging
import argparse
from typing import List, Optional, Sequence

import pandas as pd

from city import build_city, city_mass_report, district_dimension_report, sample_city
from config import (
    DEFAULT_N_JOBS, DEFAULT_SKIP_HEAD, DEFAULT_WIDTH_PX,
    get_available_presets, load_city_config, setup_logging,
)
from errors import HyperfractalError
from estimator import estimate_dimension, network_to_streets, rank_curve, subdivide
from exporters import (
    export_geojson, export_points_csv, export_streets_csv, import_streets_csv,
)
from figures import generate_figures
from manhattan import TruncationMode, build_network, sample_points, segment_table
from measure import (
    UniformSelfSimilarSpec, contraction_system, ifs_dimension, is_hyperfractal,
    manhattan_dimension, uniform_ss_dimension,
)
from plots import plot_rank_curve
from render import render_svg
from styles import THEMES

logger = logging.getLogger("hyperfractal")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


# =============================================================================
# Argument parsing
# =============================================================================

def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def _pair(text: str) -> List[float]:
    values = _float_list(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return values


def _add_grid_args(parser: argparse.ArgumentParser, depth_default: int) -> None:
    parser.add_argument("--depth", type=int, default=depth_default, help="max depth K")
    parser.add_argument("--mode", choices=[m.value for m in TruncationMode],
                        default=TruncationMode.RENORMALIZED.value, help="truncation mode")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperfractal", description="Hyperfractal city generator and analyzer")
    parser.add_argument("--log-level", default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="stderr log level")
    sub = parser.add_subparsers(dest="command", required=True)

    grid = sub.add_parser("grid", help="build a Manhattan grid and print its segment table")
    grid.add_argument("--p", type=float, required=True)
    _add_grid_args(grid, depth_default=4)
    grid.add_argument("--out-geojson")
    grid.add_argument("--out-svg")
    grid.add_argument("--out-streets", help="street CSV of the grid lines")
    grid.add_argument("--width", type=int, default=DEFAULT_WIDTH_PX)
    grid.add_argument("--theme", choices=sorted(THEMES), default="paper")

    sample = sub.add_parser("sample", help="sample points from a grid or a city")
    source = sample.add_mutually_exclusive_group(required=True)
    source.add_argument("--p", type=float)
    source.add_argument("--config", help="city config file or preset name")
    _add_grid_args(sample, depth_default=10)
    sample.add_argument("--n", type=int, default=1000)
    sample.add_argument("--seed", type=int, default=None,
                        help="sampling seed; a city defaults to its config seed, a grid to 0")
    sample.add_argument("--jobs", type=int, default=DEFAULT_N_JOBS)
    sample.add_argument("--out-csv")
    sample.add_argument("--out-svg")
    sample.add_argument("--width", type=int, default=DEFAULT_WIDTH_PX)
    sample.add_argument("--theme", choices=sorted(THEMES), default="paper")

    city = sub.add_parser("city", help="build a fractal city and print its mass report")
    city.add_argument("--config", required=True, help="city config file or preset name")
    city.add_argument("--out-geojson")
    city.add_argument("--out-svg")
    city.add_argument("--width", type=int, default=DEFAULT_WIDTH_PX)
    city.add_argument("--theme", choices=sorted(THEMES), default="paper")
    city.add_argument("--dimensions", action="store_true", help="also estimate each district's dimension")
    city.add_argument("--factor", type=float, default=1.000001, help="variation bound A for --dimensions")

    est = sub.add_parser("estimate", help="estimate a dimension from a street CSV")
    est.add_argument("--input", required=True)
    est.add_argument("--factor", type=float, required=True, help="variation bound A > 1")
    est.add_argument("--skip-head", type=int, default=DEFAULT_SKIP_HEAD,
                     help="leading rank points left out of the fit")
    est.add_argument("--out-html", help="log-log rank curve plot")

    dim = sub.add_parser("dim", help="closed-form dimension")
    which = dim.add_mutually_exclusive_group(required=True)
    which.add_argument("--p", type=float, help="Manhattan parameter")
    which.add_argument("--ifs", nargs=2, type=_float_list, metavar=("PROBS", "RATIOS"),
                       help="comma-separated probabilities and contraction ratios")
    which.add_argument("--ss", type=_pair, metavar="R,S", help="mass and length scaling")

    figs = sub.add_parser("figures", help="regenerate the figure set")
    figs.add_argument("--outdir", required=True)
    figs.add_argument("--seed", type=int, default=None,
                      help="override the grid sample seed (0) and every preset's config seed")

    sub.add_parser("presets", help="list city presets")
    return parser


# =============================================================================
# Commands
# =============================================================================

def _print_frame(df: pd.DataFrame) -> None:
    print(df.to_string(index=False))


def cmd_grid(args) -> int:
    network = build_network(args.p, args.depth, TruncationMode(args.mode))
    _print_frame(segment_table(network))
    if args.out_geojson:
        export_geojson(network, args.out_geojson)
    if args.out_svg:
        render_svg(network, path=args.out_svg, width_px=args.width, theme=THEMES[args.theme])
    if args.out_streets:
        export_streets_csv(network_to_streets(network), args.out_streets)
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.config:
        obj = build_city(load_city_config(args.config))
        points = sample_city(obj, args.n, args.seed, n_jobs=args.jobs)
        counts = pd.Series([p.origin for p in points], dtype=object).value_counts().sort_index()
    else:
        obj = build_network(args.p, args.depth, TruncationMode(args.mode))
        points = sample_points(obj, args.n, 0 if args.seed is None else args.seed, n_jobs=args.jobs)
        counts = pd.Series([p.depth for p in points], dtype=int).value_counts().sort_index()
    if args.out_csv:
        export_points_csv(points, args.out_csv)
    if args.out_svg:
        render_svg(obj, points, path=args.out_svg, width_px=args.width, theme=THEMES[args.theme])
    _print_frame(counts.rename_axis("group").reset_index(name="points"))
    return EXIT_OK


def cmd_city(args) -> int:
    city = build_city(load_city_config(args.config))
    _print_frame(city_mass_report(city))
    if args.dimensions:
        _print_frame(district_dimension_report(city, args.factor))
    if args.out_geojson:
        export_geojson(city, args.out_geojson)
    if args.out_svg:
        render_svg(city, path=args.out_svg, width_px=args.width, theme=THEMES[args.theme])
    return EXIT_OK


def cmd_estimate(args) -> int:
    streets = import_streets_csv(args.input)
    estimate = estimate_dimension(streets, args.factor, skip_head=args.skip_head)
    print(f"dimension: {estimate.value:.6f}")
    print(f"exponent: {estimate.exponent:.6f}")
    print(f"r_squared: {estimate.r_squared:.6f}")
    print(f"points: {estimate.fit.n_points}")
    if args.out_html:
        curve = rank_curve(subdivide(streets, args.factor))
        plot_rank_curve(curve, estimate.fit, args.out_html)
    return EXIT_OK


def cmd_dim(args) -> int:
    if args.p is not None:
        value = manhattan_dimension(args.p)
    elif args.ifs is not None:
        probs, ratios = args.ifs
        value = ifs_dimension(contraction_system(ratios, probs))
    else:
        r, s = args.ss
        value = uniform_ss_dimension(UniformSelfSimilarSpec(s=s, r=r))
    logger.info("hyperfractal: %s", "yes" if is_hyperfractal(value) else "no")
    print(round(value, 12))
    return EXIT_OK


def cmd_figures(args) -> int:
    for path in generate_figures(args.outdir, seed=args.seed):
        print(path)
    return EXIT_OK


def cmd_presets(args) -> int:
    for name in get_available_presets():
        print(name)
    return EXIT_OK


COMMANDS = {
    "grid": cmd_grid,
    "sample": cmd_sample,
    "city": cmd_city,
    "estimate": cmd_estimate,
    "dim": cmd_dim,
    "figures": cmd_figures,
    "presets": cmd_presets,
}


def cli_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, run one command, return the exit code (0 ok, 1 runtime error, 2 usage)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 0 for --help and 2 for usage errors
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    setup_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except (HyperfractalError, OSError) as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(cli_dispatch(sys.argv[1:]))
