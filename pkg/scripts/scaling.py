"""Simulation cost as the FMS template is replicated.

    python3 scripts/scaling.py --copies 1,2,4,8,16 --duration 10 --model svl
"""

import argparse
import time
from fractions import Fraction

from afdxsim import Scenario, fms_topology, run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--copies", default="1,2,4,8")
    ap.add_argument("--duration", type=Fraction, default=Fraction(10))
    ap.add_argument("--model", default="tc")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'copies':>6} {'VLs':>6} {'events':>9} {'wall s':>8} {'events/s':>10} {'sim/wall':>9}")
    for k in (int(c) for c in args.copies.split(",")):
        topo = fms_topology(copies=k)
        t0 = time.perf_counter()
        trace = run(Scenario(topo, args.model, args.duration, seed=args.seed))
        wall = time.perf_counter() - t0
        print(f"{k:>6} {len(topo.vls):>6} {len(trace):>9} {wall:>8.2f} {len(trace) / wall:>10.0f} "
              f"{float(args.duration) / wall:>9.1f}")


if __name__ == "__main__":
    main()
