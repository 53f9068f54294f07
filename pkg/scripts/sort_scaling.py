#!/usr/bin/env python3
"""Measure how depth-sort time scales with splat count.

Times the counting sort over a ladder of sizes and fits a log-log slope;
a near-linear sort should stay close to 1.0.

Example:
    python3 scripts/sort_scaling.py --sizes 10000 100000 1000000 2000000
"""

import argparse
import sys

from splatstream.bench import sort_scaling_slope


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[10_000, 100_000, 1_000_000, 2_000_000])
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--key-bits", type=int, choices=(16, 32), default=16)
    args = parser.parse_args(argv)

    slope, times = sort_scaling_slope(sizes=tuple(args.sizes), seed=args.seed,
                                      repeats=args.repeats,
                                      key_bits=args.key_bits)
    for n, t in times.items():
        print(f"{n:>10d} splats: {t * 1000:8.3f} ms")
    print(f"log-log slope: {slope:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
