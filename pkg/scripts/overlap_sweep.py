"""Detection rate as a function of the required overlap, for one or more prediction files.

    python scripts/overlap_sweep.py annotations.txt voting=run1/predictions.txt fsm=run2/predictions.txt

Prints a small text table (one column per prediction file) and optionally
writes the same numbers as CSV with --csv.
"""
import argparse
from pathlib import Path

import numpy as np

from gesturespot.evaluate import overlap_sweep, sweep_csv
from gesturespot.skeleton import parse_annotation_file, parse_prediction_file


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("annotations")
    ap.add_argument("predictions", nargs="+", help="NAME=PATH or PATH")
    ap.add_argument("--step", type=float, default=0.05)
    ap.add_argument("--csv")
    args = ap.parse_args()

    gt = parse_annotation_file(Path(args.annotations).read_text())
    thresholds = [round(t, 10) for t in np.arange(0.0, 1.0 + args.step / 2, args.step)]
    curves = {}
    for item in args.predictions:
        name, _, path = item.rpartition("=")
        curves[name or Path(path).stem] = overlap_sweep(gt, parse_prediction_file(Path(path).read_text()),
                                                        thresholds)
    names = list(curves)
    print("overlap  " + "  ".join(f"{n:>10}" for n in names))
    for i, t in enumerate(thresholds):
        print(f"{t:7.2f}  " + "  ".join(f"{curves[n][i][1]:10.3f}" for n in names))
    if args.csv:
        Path(args.csv).write_text(sweep_csv(curves))


if __name__ == "__main__":
    main()
