# cli.py
"""
Command-line front end.

    python cli.py build --series oblong --k 5 --out oblong5.txt --svg oblong5.svg
    python cli.py pack --n 22 --seeds 50 --out n22.txt
    python cli.py tighten --series square-minus-3 --k 6 --seeds 5
    python cli.py series --id square --k 2..8 --csv square.csv
    python cli.py series --id oblong --crossover
    python cli.py analyze n22.txt --svg n22.svg
    python cli.py table --n 11..20 --seeds 20

Exit codes: 0 success, 1 other packing errors, 2 pattern does not exist,
3 no simulation converged.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from config import (
    BEST_KNOWN_TABLE,
    EVENT_WINDOW,
    GROWTH_RATE,
    INITIAL_SPEED_SCALE,
    JAM_FREE_PATH_TOL,
    JAM_REL_GROWTH_TOL,
    LOG_LEVEL,
    MAX_EVENTS,
    TIGHTEN_START_SLACK,
)
from services.analysis_service import (
    ChallengerSource,
    analysis_report,
    oblong_crossover,
    series_threshold,
)
from services.billiards_service import SimParams, best_of
from services.contacts_service import contact_graph
from services.errors import NoConvergence, PackingError, PatternNotRepresentable
from services.geometry_service import Configuration, PatternVariant, SeriesId
from services.pattern_service import build_config_C, build_pattern, schematic_config
from services.render_service import RenderOptions, render_svg
from services.storage_service import (
    BestKnownTable,
    export_crossover_csv,
    export_series_csv,
    fmt14,
    load_packing,
    save_packing,
    write_atomic,
)

logger = logging.getLogger("squarepack")


def parse_range(text: str) -> list[int]:
    """'2..8' (inclusive), '5' or '4,6,9'"""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid range '{text}'")


def parse_series(text: str) -> SeriesId:
    try:
        return SeriesId.parse(text)
    except ValueError:
        choices = ", ".join(s.value for s in SeriesId)
        raise argparse.ArgumentTypeError(f"unknown series '{text}' (choose from {choices})")


def seeds_from(args) -> list[int]:
    if args.seed_list:
        return parse_range(args.seed_list)
    return list(range(args.seed, args.seed + args.seeds))


def params_from(args) -> SimParams:
    return SimParams(
        growth_rate=args.growth_rate,
        initial_speed_scale=args.speed,
        jam_rel_growth_tol=args.jam_tol,
        jam_free_path_tol=args.free_path_tol,
        event_window=args.event_window,
        max_events=args.max_events,
        neighbor_mode=args.neighbor_mode,
        start_slack=args.start_slack,
    )


def _emit(text: str, path: str | None) -> None:
    if path:
        write_atomic(path, text)
        logger.info("wrote %s", path)
    else:
        sys.stdout.write(text)


def _write_svg(packing, path: str | None, labels: bool) -> None:
    if path:
        svg = render_svg(packing, contact_graph(packing), RenderOptions(labels=labels))
        write_atomic(path, svg)
        logger.info("wrote %s", path)


def cmd_build(args) -> int:
    variant = PatternVariant.parse(args.variant)
    packing = build_pattern(args.series, args.k, variant)
    _emit(save_packing(packing, with_contacts=args.contacts), args.out)
    _write_svg(packing, args.svg, not args.no_labels)
    return 0


def _report_runs(result, seeds: list[int]) -> None:
    stats = result.stats
    lines = [
        f"# seeds {','.join(str(s) for s in seeds)}",
        f"# best seed {result.best.seed} m {fmt14(result.best.m)}",
        f"# refined {'yes' if result.best.refined else 'no (m not full precision)'}",
        f"# runs {len(stats.values)} failures {len(result.failures)} "
        f"min {fmt14(stats.min)} max {fmt14(stats.max)} spread {stats.spread:.3e} "
        f"distinct {stats.distinct}",
    ]
    for seed in sorted(stats.values):
        lines.append(f"# seed {seed} m {fmt14(stats.values[seed])}")
    sys.stderr.write("\n".join(lines) + "\n")


def cmd_pack(args) -> int:
    seeds = seeds_from(args)
    params = params_from(args)
    result = best_of(args.n, params, seeds, workers=args.workers)
    _report_runs(result, seeds)
    _emit(save_packing(result.best.packing, with_contacts=args.contacts), args.out)
    _write_svg(result.best.packing, args.svg, not args.no_labels)
    if args.update_table:
        table = BestKnownTable.load(args.challenger_table)
        source = f"simulated seeds={seeds[0]}..{seeds[-1]} params={params.digest()}"
        if table.merge(args.n, result.best.m, source):
            table.save()
    return 0


def _start_config(args) -> Configuration:
    if args.start:
        with open(args.start, encoding="utf-8") as handle:
            packing = load_packing(handle.read(), source=args.start)
        return Configuration(packing.n, packing.m * args.slack, packing.centers, label=args.start)
    if args.series is SeriesId.SQUARE_MINUS_3:
        return build_config_C(args.k)
    return schematic_config(args.series, args.k, PatternVariant.parse(args.variant), args.slack)


def cmd_tighten(args) -> int:
    if not args.start and (args.series is None or args.k is None):
        raise PackingError("tighten needs --series and --k, or --start FILE")
    start = _start_config(args)
    seeds = seeds_from(args)
    result = best_of(start.n, params_from(args), seeds, start=start, workers=args.workers)
    _report_runs(result, seeds)
    _emit(save_packing(result.best.packing, with_contacts=args.contacts), args.out)
    _write_svg(result.best.packing, args.svg, not args.no_labels)
    return 0


def cmd_series(args) -> int:
    if args.crossover:
        k_range = args.k or list(range(4, 13))
        rows = oblong_crossover(k_range)
        for row in rows:
            logger.info("k=%d n=%d winner=%s", row.k, row.n, row.winner)
        _emit(export_crossover_csv(rows), args.csv)
        return 0

    k_range = args.k or list(range(2, 9))
    table = BestKnownTable.load(args.challenger_table)
    challenger = ChallengerSource(table=table)
    if args.sim_seeds:
        challenger.params = params_from(args)
        challenger.seeds = list(range(args.seed, args.seed + args.sim_seeds))
        challenger.workers = args.workers
    report = series_threshold(args.series, k_range, challenger, missing_ok=args.allow_missing)
    sys.stderr.write(f"# {report.series.value} n0={report.n0} n1={report.n1}\n")
    _emit(export_series_csv(report), args.csv)
    return 0


def cmd_analyze(args) -> int:
    with open(args.file, encoding="utf-8") as handle:
        packing = load_packing(handle.read(), source=args.file)
    sim = params_from(args) if args.match_sim else None
    report = analysis_report(packing, sim)
    for miss in report["near_misses"]:
        logger.warning(
            "near-miss between %s and %s: gap %.3e m", miss["i"], miss["j"], miss["gap"]
        )
    _emit(json.dumps(report, indent=2, default=str) + "\n", args.out)
    _write_svg(packing, args.svg, not args.no_labels)
    return 0


def cmd_table(args) -> int:
    table = BestKnownTable.load(args.challenger_table)
    params = params_from(args)
    seeds = seeds_from(args)
    changed = False
    for n in args.n:
        try:
            result = best_of(n, params, seeds, workers=args.workers)
        except NoConvergence as exc:
            logger.error("n=%d: %s", n, exc)
            continue
        source = f"simulated seeds={seeds[0]}..{seeds[-1]} params={params.digest()}"
        changed = table.merge(n, result.best.m, source) or changed
    if changed:
        table.save()
    sys.stdout.write(table.to_csv())
    return 0


def _add_sim_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("simulation")
    group.add_argument("--growth-rate", type=float, default=GROWTH_RATE)
    group.add_argument("--speed", type=float, default=INITIAL_SPEED_SCALE,
                       help="mean disk speed held by the thermostat")
    group.add_argument("--jam-tol", type=float, default=JAM_REL_GROWTH_TOL,
                       help="relative m growth per event window that counts as jammed")
    group.add_argument("--free-path-tol", type=float, default=JAM_FREE_PATH_TOL,
                       help="mean free path, in diameters, that counts as jammed")
    group.add_argument("--event-window", type=int, default=EVENT_WINDOW)
    group.add_argument("--max-events", type=int, default=MAX_EVENTS)
    group.add_argument("--neighbor-mode", choices=("cells", "brute"), default="cells")
    group.add_argument("--start-slack", type=float, default=TIGHTEN_START_SLACK,
                       help="fraction the start diameter of a tightening run is shrunk by")
    group.add_argument("--workers", type=int, default=1, help="parallel seed runs")


def _add_seed_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="first seed")
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--seeds", type=int, default=1, help="number of seeds from --seed on")
    group.add_argument("--seed-list", help="explicit seeds, e.g. 3,7,11 or 0..9")


def _add_output_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="packing file (default: standard output)")
    parser.add_argument("--svg", help="SVG diagram path")
    parser.add_argument("--contacts", action="store_true", help="include the bond section")
    parser.add_argument("--no-labels", action="store_true", help="omit disk labels in SVG")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="squarepack",
        description="Dense packings of equal disks in a square: patterns, billiards and thresholds",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="construct a pattern packing")
    build.add_argument("--series", type=parse_series, required=True)
    build.add_argument("--k", type=int, required=True)
    build.add_argument("--variant", help="shifted row,column, e.g. 2,3 or 2,4;3,5")
    _add_output_flags(build)
    build.set_defaults(handler=cmd_build)

    pack = sub.add_parser("pack", help="best of random-start billiards runs")
    pack.add_argument("--n", type=int, required=True)
    _add_seed_flags(pack)
    _add_sim_flags(pack)
    _add_output_flags(pack)
    pack.add_argument("--update-table", action="store_true",
                      help="merge the best m into the best-known table")
    pack.add_argument("--challenger-table", default=BEST_KNOWN_TABLE)
    pack.set_defaults(handler=cmd_pack)

    tight = sub.add_parser("tighten", help="billiards from a prescribed start")
    tight.add_argument("--series", type=parse_series)
    tight.add_argument("--k", type=int)
    tight.add_argument("--variant")
    tight.add_argument("--start", help="packing file to start from")
    tight.add_argument("--slack", type=float, default=0.9,
                       help="diameter shrink factor applied to pattern starts")
    _add_seed_flags(tight)
    _add_sim_flags(tight)
    _add_output_flags(tight)
    tight.set_defaults(handler=cmd_tighten)

    series = sub.add_parser("series", help="pattern vs challenger thresholds")
    series.add_argument("--id", "--series", dest="series", type=parse_series, required=True)
    series.add_argument("--k", type=parse_range, help="k range, e.g. 2..8")
    series.add_argument("--crossover", action="store_true",
                        help="compare the oblong pattern with its zig-zag alternative")
    series.add_argument("--challenger-table", default=BEST_KNOWN_TABLE)
    series.add_argument("--sim-seeds", type=int, default=0,
                        help="simulate challengers missing from the table with this many seeds")
    series.add_argument("--seed", type=int, default=0)
    series.add_argument("--allow-missing", action="store_true",
                        help="leave members without a challenger blank instead of failing")
    series.add_argument("--csv", help="CSV output path (default: standard output)")
    _add_sim_flags(series)
    series.set_defaults(handler=cmd_series)

    analyze = sub.add_parser("analyze", help="validate and classify a packing file")
    analyze.add_argument("file")
    analyze.add_argument("--out", help="JSON report path (default: standard output)")
    analyze.add_argument("--svg")
    analyze.add_argument("--no-labels", action="store_true")
    analyze.add_argument("--match-sim", action="store_true",
                         help="also try square-minus-3 by tightening configuration C")
    _add_sim_flags(analyze)
    analyze.set_defaults(handler=cmd_analyze)

    table = sub.add_parser("table", help="regenerate best-known rows by simulation")
    table.add_argument("--n", type=parse_range, required=True)
    table.add_argument("--challenger-table", default=BEST_KNOWN_TABLE)
    _add_seed_flags(table)
    _add_sim_flags(table)
    table.set_defaults(handler=cmd_table)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else LOG_LEVEL,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except PatternNotRepresentable as exc:
        sys.stderr.write(f"error: {exc} ({exc.reason})\n")
        return 2
    except NoConvergence as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3
    except (PackingError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
