#!/usr/bin/env python3
"""ACF/PACF correlograms and a Dickey-Fuller verdict for each dataset, raw and transformed.

Writes <out>/<dataset>_<variant>_{acf,pacf}.csv and prints a stationarity summary.
"""

import argparse
from pathlib import Path

from tsforecast import diagnostics
from tsforecast.datasets import DATASET_NAMES, load_dataset
from tsforecast.series import Difference, Log10, NaturalLog, TransformPipeline

VARIANTS = {
    "lynx": {"log10": [Log10()]},
    "sunspot": {},
    "airline": {"log_d1_d12": [NaturalLog(), Difference(1), Difference(12)]},
    "qsales": {"log_d1_d4": [NaturalLog(), Difference(1), Difference(4)]},
    "beer": {"d1_d4": [Difference(1), Difference(4)]},
    "deaths": {"d1_d12": [Difference(1), Difference(12)]},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/correlograms")
    ap.add_argument("--max-lag", type=int, default=None)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    for name in DATASET_NAMES:
        ts = load_dataset(name)
        x = ts.values
        for variant, steps in {"raw": [], **VARIANTS[name]}.items():
            z = TransformPipeline(steps).apply(x)
            diagnostics.acf(z, args.max_lag).to_csv(out / f"{name}_{variant}_acf.csv")
            diagnostics.pacf(z, args.max_lag).to_csv(out / f"{name}_{variant}_pacf.csv")
            v = diagnostics.dickey_fuller(z)
            print(f"{name:8s} {variant:12s} DF t = {v.test_statistic:7.3f}  "
                  f"{'stationary' if v.stationary else 'non-stationary'}")


if __name__ == "__main__":
    main()
