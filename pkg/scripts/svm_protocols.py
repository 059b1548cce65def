#!/usr/bin/env python3
"""Compare the two SVM test-span protocols on every table.

recursive: predictions are fed back into the input window.
one-step:  the true value enters the window once it is observed.
"""

from tsforecast import experiments
from tsforecast.datasets import DATASET_NAMES


def main():
    print(f"{'table':8s} {'recursive':>10s} {'one-step':>10s} {'published':>10s}   (MAPE, %)")
    for name in DATASET_NAMES:
        out = {}
        for proto in ("recursive", "one-step"):
            row = next(r for r in experiments.table_rows(name, (0,), proto)
                       if isinstance(r.config.model, experiments.SvmSpec))
            out[proto] = experiments.run_experiment(row.config).evaluation.mape
        print(f"{name:8s} {out['recursive']:10.4f} {out['one-step']:10.4f} {row.reference['mape']:10.4f}")


if __name__ == "__main__":
    main()
