"""Command-line front end: ``fuzzyrtt run|sweep|transient|size-flows``."""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .runner import run_scenario, run_transient, summary_csv, write_outputs
from .scenario import AQMS, LOSS_TARGETS, ConfigError, load_scenario, parse_rate, size_flow_count

CONFIG_SUFFIX = ".conf"


def _outputs(args) -> tuple[bool, bool]:
    # neither flag given means both files
    if not args.csv and not args.series:
        return True, True
    return args.csv, args.series


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    p.add_argument("--csv", action="store_true", help="write the summary CSV")
    p.add_argument("--series", action="store_true", help="write the time-series CSV")


def _run_one(path: Path, seed: int | None):
    return run_scenario(load_scenario(path, seed=seed))


def cmd_run(args) -> int:
    scenario = load_scenario(args.config, seed=args.seed)
    result = run_scenario(scenario)
    summary, series = _outputs(args)
    for p in write_outputs(result, args.out, summary, series):
        print(f"wrote {p}", file=sys.stderr)
    sys.stdout.write(summary_csv([result]))
    return 0


def cmd_sweep(args) -> int:
    configs = sorted(args.config_dir.glob(f"*{CONFIG_SUFFIX}"))
    if not configs:
        print(f"error: no *{CONFIG_SUFFIX} files in {args.config_dir}", file=sys.stderr)
        return 2
    # parse everything first so a bad file fails before any simulation runs
    scenarios = [load_scenario(c, seed=args.seed) for c in configs]
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        print("error: scenario names in a sweep must be unique", file=sys.stderr)
        return 2
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_run_one, configs, [args.seed] * len(configs)))
    else:
        results = [run_scenario(s) for s in scenarios]
    results.sort(key=lambda r: r.scenario.name)
    summary, series = _outputs(args)
    for r in results:
        write_outputs(r, args.out, summary, series)
    merged = summary_csv(results)
    (args.out / "sweep.summary.csv").write_text(merged)
    sys.stdout.write(merged)
    return 0


def cmd_transient(args) -> int:
    result = run_transient(seed=1 if args.seed is None else args.seed, aqm=args.aqm)
    summary, series = _outputs(args)
    for p in write_outputs(result, args.out, summary, series):
        print(f"wrote {p}", file=sys.stderr)
    sys.stdout.write(summary_csv([result]))
    return 0


def cmd_size_flows(args) -> int:
    n = size_flow_count(args.level, args.bandwidth, args.rtts, args.mss)
    print(n)
    return 0


def _rtt_list(text: str) -> list[float]:
    values = [float(x) for x in text.split(",") if x.strip()]
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("need positive RTTs in ms, comma separated")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fuzzyrtt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario file")
    p.add_argument("config", type=Path)
    _add_output_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help=f"simulate every *{CONFIG_SUFFIX} file in a directory")
    p.add_argument("config_dir", type=Path)
    p.add_argument("--jobs", "-j", type=int, default=1, help="parallel worker processes")
    _add_output_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("transient", help="run the scripted 50 Mbps load-change scenario")
    p.add_argument("--aqm", choices=AQMS, default="fuzzyrtt")
    _add_output_flags(p)
    p.set_defaults(func=cmd_transient)

    p = sub.add_parser("size-flows", help="flow count for a congestion level")
    p.add_argument("--level", choices=sorted(LOSS_TARGETS), required=True)
    p.add_argument("--bandwidth", type=parse_rate, required=True, help="e.g. 10M")
    p.add_argument("--rtts", type=_rtt_list, required=True, help="RTTs in ms, e.g. 40,80,160")
    p.add_argument("--mss", type=int, default=536)
    p.set_defaults(func=cmd_size_flows)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
