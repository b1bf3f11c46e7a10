"""Train and evaluate one detection strategy on a synthetic train/test split.

    python scripts/run_synthetic_benchmark.py --strategy voting --sequences 128 --epochs 30

Prints the per-class report and writes report.csv, predictions.txt and the
trained models under --out.
"""
import argparse
import logging
import time
from pathlib import Path

from gesturespot.evaluate import evaluate
from gesturespot.pipeline import STRATEGIES, DetectConfig, detect_all, save_models, train_strategy
from gesturespot.skeleton import write_prediction_file
from gesturespot.synth import GenConfig, block_ids, generate_dataset
from gesturespot.tcn import TrainConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--strategy", choices=STRATEGIES, default="voting")
    ap.add_argument("--sequences", type=int, default=128)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--folds", type=int, default=2)
    ap.add_argument("--lr", type=float, default=1e-2)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="benchmark_out")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    gen = GenConfig(n_sequences=args.sequences, seed=args.seed)
    sequences, annotations = generate_dataset(gen)
    by_id = {s.id: s for s in sequences}
    train_ids, test_ids = block_ids(gen)
    train = [by_id[i] for i in train_ids]
    test = [by_id[i] for i in test_ids]

    t0 = time.perf_counter()
    tcfg = TrainConfig(epochs=args.epochs, folds=args.folds, learning_rate=args.lr)
    dcfg = DetectConfig(strategy=args.strategy)
    models = train_strategy(train, annotations, tcfg, dcfg, jobs=args.jobs)
    t1 = time.perf_counter()
    preds = detect_all(test, models, dcfg)
    t2 = time.perf_counter()

    report = evaluate({i: annotations[i] for i in test_ids}, preds)
    print(report.table())
    print(f"train {t1 - t0:.1f} s, detect {t2 - t1:.1f} s")
    out = Path(args.out)
    save_models(models, out / "models")
    (out / "report.csv").write_text(report.to_csv())
    (out / "predictions.txt").write_text(write_prediction_file(preds))


if __name__ == "__main__":
    main()
