"""Run figure/table presets and write one CSV per preset.

    python3 scripts/reproduce_figures.py                 # every preset into results/
    python3 scripts/reproduce_figures.py fig3 table3 --drops 5 --out /tmp/res
"""
import argparse
import csv
import time
from pathlib import Path

from ntniot.presets import PRESETS, run_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("presets", nargs="*", default=sorted(PRESETS), choices=sorted(PRESETS))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--drops", type=int, default=None, help="override the preset drop count")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    for name in args.presets:
        t0 = time.perf_counter()
        rows = run_preset(name, seed=args.seed, drops=args.drops, workers=args.workers)
        path = args.out / f"{name}.csv"
        with path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
        print(f"{name}: {len(rows)} rows -> {path} ({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
