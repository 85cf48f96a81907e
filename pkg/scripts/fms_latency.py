"""Latency and jitter of the FMS network under each model level.

Runs the FMS scenario once per model, trims the head and tail of the run,
and prints per-path latency statistics. With --cdf, writes one ECDF CSV
per (model, path) for plotting.

    python3 scripts/fms_latency.py --duration 60 --cdf out/cdf
"""

import argparse
import time
from fractions import Fraction
from pathlib import Path

from afdxsim import Scenario, fms_topology, monitor_report
from afdxsim.analysis import build_ecdf, ecdf_csv, series_stats
from afdxsim.engine import Engine


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=Fraction, default=Fraction(60))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trim", type=Fraction, default=Fraction(10))
    ap.add_argument("--models", default="tc,dvl,svl")
    ap.add_argument("--cdf", type=Path)
    args = ap.parse_args()

    topo = fms_topology()
    horizon = int(args.duration * 10**9)
    for model in args.models.split(","):
        t0 = time.perf_counter()
        eng = Engine(Scenario(topo, model, args.duration, seed=args.seed))
        trace = eng.run()
        wall = time.perf_counter() - t0
        rep = monitor_report(trace, eng.topo, trim=args.trim, duration_ns=horizon)
        print(f"\n== {model}: {len(trace)} events in {wall:.2f} s, above WCTT {rep.above_wctt}")
        print(f"{'path':>14} {'chan':>5} {'n':>6} {'min':>8} {'p50':>8} {'p99':>8} {'max':>8}  bounds (us)")
        for p in rep.paths:
            s = series_stats(p.latencies)
            ch = topo.channel(p.vl_id, p.dst)
            print(f"{f'VL{p.vl_id} ES{p.src}->ES{p.dst}':>14} {p.channel:>5} {s.n:>6} "
                  + " ".join(f"{x / 1000:8.2f}" for x in (s.min, s.p50, s.p99, s.max))
                  + f"  [{ch.bctt_ns / 1000:g}, {ch.wctt_ns / 1000:g}]")
            if args.cdf:
                args.cdf.mkdir(parents=True, exist_ok=True)
                name = f"{model}_vl{p.vl_id}_es{p.dst}.csv"
                (args.cdf / name).write_text(ecdf_csv(build_ecdf(p.latencies)))


if __name__ == "__main__":
    main()
