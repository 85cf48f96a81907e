"""Automaton vs account-oracle policing over random arrival sequences.

Also prints the worked example (bag 8 ms, j_max 2 ms, s_max 100 B) with
both policers' internal state after every arrival.

    python3 scripts/policing_equivalence.py --n 100000 --seed 1
"""

import argparse
import time
from fractions import Fraction

from afdxsim.policing import (
    BucketParams,
    automaton_initial,
    automaton_on_frame,
    oracle_initial,
    oracle_on_frame,
    random_equivalence_check,
)

MS = 1_000_000


def worked_example():
    p = BucketParams(Fraction(100), 8 * MS, 2 * MS)
    print(f"rate {p.rate} B/ms, ac_max {p.ac_max} B, delta1 {p.delta1 / MS:g} ms, delta2 {p.delta2 / MS:g} ms")
    o, a = oracle_initial(p), automaton_initial()
    for t_ms in (0, 3, 7, 14):
        t = t_ms * MS
        d1, o = oracle_on_frame(o, p, t)
        d2, a = automaton_on_frame(a, p, t)
        deadline = "-" if a.phase_deadline is None else f"{a.phase_deadline / MS:g}"
        print(f"  t={t_ms:>2} ms  oracle {d1} (account {float(o.account(p)):6.2f})"
              f"  automaton {d2} ({a.place.name}, deadline {deadline})")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--max-len", type=int, default=24)
    args = ap.parse_args()

    worked_example()
    t0 = time.perf_counter()
    n, failures = random_equivalence_check(args.n, args.seed, max_len=args.max_len)
    dt = time.perf_counter() - t0
    print(f"\n{n} sequences, {len(failures)} mismatches, {dt:.2f} s ({n / dt:.0f} sequences/s)")
    for p, arrivals, result in failures[:5]:
        print(f"  {p} {arrivals} -> diverges at {result.divergence}")


if __name__ == "__main__":
    main()
