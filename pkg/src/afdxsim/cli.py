"""Command-line front end.

Exit codes: 0 success, 1 domain violation found, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import os
import secrets
import sys
from fractions import Fraction
from pathlib import Path

from .analysis import build_ecdf, ecdf_csv, series_stats
from .core import format_decimal, ms_to_ns, us_to_ns, validate_vl
from .engine import DURATION_PRESETS, Engine, ModelLevel, Scenario
from .generators import (
    FMS_CSV,
    FMS_NAMES,
    CsvFormatError,
    RandomGenSpec,
    csv_from_topology,
    emit_csv,
    fms_channels,
    fms_topology,
    generate_random,
    parse_csv,
    replicate,
    to_topology,
)
from .monitors import monitor_report
from .network import OccupancyError, TopologyError, dump_topology, load_topology
from .policing import BucketParams, check_equivalence, random_equivalence_check
from .trace import TraceFormatError, TraceLog

DEFAULT_SEED = 0
SEED_ENV = "AFDX_SIM_SEED"


class UsageError(Exception):
    pass


def resolve_seed(value: str | None) -> int:
    if value is None:
        value = os.environ.get(SEED_ENV)
    if value is None:
        return DEFAULT_SEED
    if value == "random":
        return secrets.randbits(63)
    try:
        seed = int(value)
    except ValueError:
        raise UsageError(f"seed must be an integer or 'random', got {value!r}") from None
    if seed < 0:
        raise UsageError("seed must be non-negative")
    return seed


def read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def load_any_topology(spec: str):
    """A topology from a JSON/CSV file, or the built-in ``fms`` network."""
    if spec == "fms":
        return fms_topology()
    text = read_text(spec)
    if text.lstrip().startswith("{"):
        try:
            return load_topology(text)
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"{spec}: bad topology document: {exc}") from None
    try:
        return to_topology(parse_csv(text))
    except CsvFormatError as exc:
        raise UsageError(f"{spec}: {exc}") from None


# -- commands ----------------------------------------------------------------------


def cmd_validate(args) -> int:
    if args.topology == "fms":
        text = FMS_CSV
    else:
        text = read_text(args.topology)
    problems = []
    if text.lstrip().startswith("{"):
        try:
            topo = load_topology(text)
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"{args.topology}: bad topology document: {exc}") from None
        problems = [f"VL {vl}: {msg}" for vl, msg in topo.validate()]
        count = len(topo.vls)
    else:
        try:
            table = parse_csv(text, strict=False)
        except CsvFormatError as exc:
            raise UsageError(f"{args.topology}: {exc}") from None
        for row, line in zip(table.rows, table.lines):
            problems += [f"row {line}: VL {row.vlid}: {v}" for v in validate_vl(row.to_vl()).violations]
        count = len(table.rows)
    for p in problems:
        print(p)
    print(f"{count} VLs checked, {len(problems)} violation(s)")
    return 1 if problems else 0


def cmd_generate(args) -> int:
    seed = resolve_seed(args.seed)
    if args.random is not None:
        if args.random < 1:
            raise UsageError("--random needs at least 1 VL")
        topo = generate_random(RandomGenSpec(args.random, seed))
        kind = "json"
    else:
        if args.copies < 1:
            raise UsageError("--copies must be at least 1")
        try:
            if args.template == "fms":
                topo = replicate(parse_csv(FMS_CSV), args.copies, fms_channels(), FMS_NAMES)
            else:
                topo = replicate(parse_csv(read_text(args.template)), args.copies)
        except CsvFormatError as exc:
            raise UsageError(f"{args.template}: {exc}") from None
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        kind = "csv"
    if args.out and args.out.endswith(".json"):
        kind = "json"
    elif args.out and args.out.endswith(".csv"):
        kind = "csv"
    if kind == "csv":
        text = emit_csv(csv_from_topology(topo))
    else:
        text = dump_topology(topo)
    print(f"seed: {seed}", file=sys.stderr)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {len(topo.vls)} VLs to {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0


def parse_duration(text: str) -> Fraction:
    if text in DURATION_PRESETS:
        return Fraction(DURATION_PRESETS[text])
    try:
        value = Fraction(text)
    except ValueError:
        raise UsageError(f"bad duration {text!r}") from None
    if value <= 0:
        raise UsageError("duration must be positive")
    return value


def parse_speed(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except ValueError:
        raise UsageError(f"bad speed {text!r}") from None
    if value <= 0:
        raise UsageError("speed must be positive")
    return value


def cmd_simulate(args) -> int:
    topo = load_any_topology(args.topology)
    seed = resolve_seed(args.seed)
    scenario = Scenario(
        topo, ModelLevel.parse(args.model), parse_duration(args.duration), parse_speed(args.speed),
        seed, args.pacing, redundant=args.redundant,
    )
    print(f"seed: {seed}")
    try:
        engine = Engine(scenario)
    except TopologyError as exc:
        raise UsageError(str(exc)) from None
    try:
        if args.pacing == "realtime":
            trace, pacing = engine.run_paced()
            print(f"pacing: mean drift {pacing.mean_drift_ns / 1000:.1f} us, max {pacing.max_drift_ns / 1000:.1f} us, "
                  f"{pacing.mean_drift_fraction:.4%} of elapsed")
        else:
            trace = engine.run()
    except OccupancyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.trace:
        trace.write(args.trace)
    report = monitor_report(trace, engine.topo, scenario.speed)
    sys.stdout.write(report.to_text())
    if args.report:
        Path(args.report).write_text(report.to_json(), encoding="utf-8")
    return 0


def cmd_analyze(args) -> int:
    text = read_text(args.trace)
    if not text.strip():
        print(f"error: {args.trace}: empty trace file", file=sys.stderr)
        return 1
    try:
        trace = TraceLog.from_csv(text)
    except TraceFormatError as exc:
        for line, msg in exc.problems:
            print(f"{args.trace}: line {line}: {msg}", file=sys.stderr)
        return 1
    if not trace.events:
        print(f"error: {args.trace}: trace holds no events", file=sys.stderr)
        return 1
    topo = load_any_topology(args.topology) if args.topology else None
    duration_ns = int(parse_duration(args.duration) * 1_000_000_000) if args.duration else None
    report = monitor_report(trace, topo, parse_speed(args.speed), args.trim, duration_ns)
    sys.stdout.write(report.to_text())
    print()
    print("latency per path (us): n, min, p50, p95, p99, max, mean, outliers")
    for p in report.paths:
        if not p.latencies:
            continue
        s = series_stats(p.latencies)
        print(f"  VL{p.vl_id} ES{p.src}->ES{p.dst}: {s.n}, {s.min / 1000:.3f}, {s.p50 / 1000:.3f}, "
              f"{s.p95 / 1000:.3f}, {s.p99 / 1000:.3f}, {s.max / 1000:.3f}, {s.mean / 1000:.3f}, {s.outliers}")
    print(f"above WCTT: {report.above_wctt}")
    if args.cdf:
        out = Path(args.cdf)
        out.mkdir(parents=True, exist_ok=True)
        for p in report.paths:
            if p.latencies:
                (out / f"vl{p.vl_id}_es{p.src}_es{p.dst}.csv").write_text(ecdf_csv(build_ecdf(p.latencies)))
    if args.json:
        Path(args.json).write_text(report.to_json(), encoding="utf-8")
    if args.flagged:
        Path(args.flagged).write_text(report.flagged_csv(), encoding="utf-8")
    return 0


def parse_arrivals(text: str) -> list[int]:
    if os.path.exists(text):
        text = read_text(text)
    parts = [p for p in text.replace("\n", ",").split(",") if p.strip()]
    try:
        return [ms_to_ns(Fraction(p.strip())) for p in parts]
    except ValueError as exc:
        raise UsageError(f"bad arrival list: {exc}") from None


def cmd_policing_check(args) -> int:
    fixed = [args.bag, args.jmax, args.smax]
    if any(v is not None for v in fixed) and not all(v is not None for v in fixed):
        raise UsageError("--bag, --jmax and --smax go together")
    params = None
    if args.bag is not None:
        try:
            params = BucketParams(Fraction(args.smax), ms_to_ns(Fraction(args.bag)), us_to_ns(Fraction(args.jmax)))
        except ValueError as exc:
            raise UsageError(f"unsound policer parameters: {exc}") from None
        print(f"params: bag {args.bag} ms, j_max {args.jmax} us, s_max {format_decimal(params.s_max)} B")
        print(f"  delta1 {format_decimal(Fraction(params.delta1, 1000))} us, delta2 {format_decimal(Fraction(params.delta2, 1000))} us")
        print(f"  rate {format_decimal(params.rate_bps)} B/s, ac_max {format_decimal(params.ac_max)} B")
        print(f"  export {params.export()}")
    if args.arrivals is not None:
        if params is None:
            raise UsageError("--arrivals needs --bag, --jmax and --smax")
        arrivals = parse_arrivals(args.arrivals)
        try:
            result = check_equivalence(params, arrivals)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        print("decisions: " + ",".join(str(d) for d in result.decisions))
        if result.match:
            print("match")
            return 0
        print(f"MISMATCH at arrival {result.divergence}: oracle {result.oracle_decision}, "
              f"automaton {result.automaton_decision}")
        return 1
    seed = resolve_seed(args.seed)
    print(f"seed: {seed}")
    n, failures = random_equivalence_check(args.random, seed, params)
    if failures:
        p, arrivals, result = failures[0]
        print(f"{len(failures)} mismatches in {n} sequences; first: {p} arrivals {arrivals} -> {result}")
        return 1
    print(f"match: {n} sequences, 0 mismatches")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="afdxsim", description="AFDX network simulation and analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check every VL of a topology")
    p.add_argument("--topology", required=True, help="CSV, JSON, or 'fms'")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", help="build a benchmark topology")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--random", type=int, metavar="N")
    src.add_argument("--template", metavar="FILE", help="CSV template or 'fms'")
    p.add_argument("--copies", type=int, default=1)
    p.add_argument("--seed")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="run a scenario and write its trace")
    p.add_argument("--topology", required=True, help="CSV, JSON, or 'fms'")
    p.add_argument("--model", default="tc", choices=["tc", "dvl", "svl", *[m.value for m in ModelLevel]])
    p.add_argument("--duration", default="medium", help="seconds or short/medium/long")
    p.add_argument("--speed", default="1")
    p.add_argument("--seed")
    p.add_argument("--pacing", default="fast", choices=["fast", "realtime"])
    p.add_argument("--redundant", action="store_true", help="duplicate frames over networks A and B")
    p.add_argument("--trace", help="TraceLog CSV output")
    p.add_argument("--report", help="monitor report JSON output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="monitor report and CDFs from a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--topology", help="CSV, JSON, or 'fms'; enables bound and jitter checks")
    p.add_argument("--speed", default="1")
    p.add_argument("--trim", type=float, default=0, help="percent dropped at each end")
    p.add_argument("--duration", help="run length used for trimming (default: last event time)")
    p.add_argument("--cdf", metavar="DIR", help="write one CDF CSV per VL path")
    p.add_argument("--json")
    p.add_argument("--flagged", help="CSV of frames above WCTT")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("policing-check", help="compare automaton and account policers")
    p.add_argument("--bag", help="ms")
    p.add_argument("--jmax", help="us")
    p.add_argument("--smax", help="bytes")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--arrivals", help="comma-separated arrival times in ms, or a file of them")
    src.add_argument("--random", type=int, metavar="N")
    p.add_argument("--seed")
    p.set_defaults(func=cmd_policing_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
