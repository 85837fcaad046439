#!/usr/bin/env python3
"""Run every named bound check over a range of seeds and print a summary table."""

import argparse
import json
import sys

from foms.harness.verify import BOUNDS, verify_bound


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=3, help="seeds 0..N-1")
    ap.add_argument("--bound", action="append", choices=sorted(BOUNDS), help="restrict to these checks")
    ap.add_argument("--json", action="store_true", help="emit one JSON object per run")
    args = ap.parse_args()
    failed = 0
    for name in args.bound or sorted(BOUNDS):
        for seed in range(args.seeds):
            res = verify_bound(name, seed)
            failed += not res.ok
            if args.json:
                print(json.dumps(res.to_dict()))
            else:
                print(f"{name:18s} seed={seed:<3d} violations={res.violations:<4d} slope={res.slope:8.3f}")
    return 2 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
