"""Verify every shipped scenario file and print the table plus timings.

    python3 scripts/run_suite.py [--jobs N] [--out results.json]
"""

import argparse
import sys
import time
from pathlib import Path

from kstab.scenario import verify_all

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--dir", default=str(ROOT / "scenarios"))
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()
    start = time.perf_counter()
    report = verify_all(args.dir, args.jobs)
    elapsed = time.perf_counter() - start
    sys.stdout.write(report.render_table())
    if args.out:
        Path(args.out).write_text(report.to_json())
    print(f"elapsed {elapsed:.2f}s with {args.jobs} job(s)")
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
