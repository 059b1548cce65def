#!/usr/bin/env python3
"""Rerun every benchmark table and write comparison CSVs plus forecast diagram data.

    python scripts/reproduce_tables.py [--out results] [--seeds 10] [--svm-protocol one-step]
"""

import argparse
from pathlib import Path

from tsforecast import experiments
from tsforecast.datasets import DATASET_NAMES


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--seeds", type=int, default=len(experiments.NEURAL_SEEDS))
    ap.add_argument("--svm-protocol", choices=("recursive", "one-step"), default="recursive")
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    out = Path(args.out)
    (out / "diagrams").mkdir(parents=True, exist_ok=True)
    for name in DATASET_NAMES:
        comp = experiments.reproduce(name, check=False, seeds=tuple(range(args.seeds)),
                                     svm_protocol=args.svm_protocol, workers=args.workers)
        comp.to_csv(out / f"{name}.csv")
        for rep in comp.reports:
            label = "".join(c if c.isalnum() else "_" for c in rep.config.label)
            experiments.emit_diagram_data(rep, out / "diagrams" / f"{name}_{label}.csv")
        print(f"{name:8s} {len(comp.reports)} rows  {comp.wall_clock:6.1f}s")
        for r in comp.rows:
            if r.measure == "mape":
                verdict = "" if r.passed is None else ("  pass" if r.passed else "  FAIL")
                print(f"    {r.row:28s} mape {r.reproduced:9.4f}  published {r.paper:9.4f}{verdict}")


if __name__ == "__main__":
    main()
