"""Command-line entry point: gen, train, detect, eval, sweep, features.

Hyperparameters come from a flat ``key = value`` file (``--config``) and
from flags of the same name; flags win.  Every command writes the
effective configuration to ``config.txt`` in its output directory.
Exit codes: 0 success, 1 I/O or validation failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import MISSING, fields
from pathlib import Path

import numpy as np

from .evaluate import evaluate, overlap_sweep, sweep_csv
from .features import GROUP3_VARIANTS, PositionNormalizer, angle_stream, feature_header, group3_features, sliding_energy
from .pipeline import DetectConfig, detect_sequence, load_models, save_models, strategy_of, time_steps, train_strategy
from .skeleton import (
    FormatError,
    parse_annotation_file,
    parse_prediction_file,
    parse_sequence_file,
    write_annotation_file,
    write_prediction_file,
    write_sequence_file,
)
from .synth import GenConfig, block_ids, plan_dataset, generate_sequence
from .tcn import TrainConfig

log = logging.getLogger("gesturespot")

CONFIG_FILE = "config.txt"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


def _exposed(cls):
    """Dataclass fields settable from the command line (scalars and int tuples)."""
    out = []
    for f in fields(cls):
        default = f.default if f.default is not MISSING else (
            f.default_factory() if f.default_factory is not MISSING else None)
        if isinstance(default, dict):
            continue
        out.append((f.name, default))
    return out


def _convert(name: str, default, text: str):
    text = text.strip()
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {text!r}")
    if isinstance(default, tuple):
        return tuple(int(v) for v in text.replace(";", ",").split(",") if v.strip())
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if default is None:
        return None if text.lower() in ("", "none") else int(text)
    return text


def _format(value) -> str:
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_config_file(path) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def build(cls, args, file_values: dict, prefix: str = ""):
    """Instantiate ``cls`` from file values overridden by explicit flags."""
    kwargs = {}
    for name, default in _exposed(cls):
        key = prefix + name
        flag = getattr(args, key, None)
        if flag is not None:
            kwargs[name] = _convert(name, default, flag)
        elif key in file_values:
            kwargs[name] = _convert(name, default, file_values[key])
    return cls(**kwargs)


def config_text(command: str, *sections) -> str:
    """``key = value`` lines for dataclass instances or plain dicts."""
    lines = [f"# effective configuration of `{command}`"]
    for obj in sections:
        if isinstance(obj, dict):
            items = obj.items()
        else:
            items = ((name, getattr(obj, name)) for name, _ in _exposed(type(obj)))
        lines += [f"{name} = {_format(value)}" for name, value in items]
    return "\n".join(lines) + "\n"


def _add_fields(parser, cls, prefix: str = ""):
    group = parser.add_argument_group(cls.__name__)
    for name, default in _exposed(cls):
        group.add_argument(f"--{(prefix + name).replace('_', '-')}", dest=prefix + name, default=None,
                           metavar=type(default).__name__.upper() if default is not None else "INT",
                           help=f"default {_format(default)}")


def _check_keys(values: dict, allowed: set, path):
    unknown = sorted(set(values) - allowed)
    if unknown:
        raise UsageError(f"{path}: unknown configuration keys: {', '.join(unknown)}")


def _allowed(*pairs) -> set:
    return {prefix + name for cls, prefix in pairs for name, _ in _exposed(cls)}


def _load_file(args, allowed: set) -> dict:
    if not getattr(args, "config", None):
        return {}
    values = read_config_file(args.config)
    _check_keys(values, allowed, args.config)
    return values


# ---------------------------------------------------------------------------
# data directories


def load_split(directory):
    """Sequences (sorted by id) and annotations of a split directory."""
    directory = Path(directory)
    seq_dir = directory / "sequences"
    if not seq_dir.is_dir():
        raise FileNotFoundError(f"{seq_dir} does not exist")
    sequences = []
    for p in sorted(seq_dir.glob("*.txt")):
        try:
            sequences.append(parse_sequence_file(p.read_text(), p.stem))
        except FormatError as err:
            raise FormatError(f"{p}: {err}") from None
    if not sequences:
        raise FileNotFoundError(f"no sequence files in {seq_dir}")
    ann_path = directory / "annotations.txt"
    annotations = parse_annotation_file(ann_path.read_text()) if ann_path.exists() else {}
    return sequences, annotations


def write_split(directory, items, config: GenConfig, seeds: dict):
    directory = Path(directory)
    (directory / "sequences").mkdir(parents=True, exist_ok=True)
    annotations = {}
    manifest = ["seq_id;seed;frames;labels"]
    for seq, gts in items:
        (directory / "sequences" / f"{seq.id}.txt").write_text(write_sequence_file(seq))
        annotations[seq.id] = gts
        manifest.append(f"{seq.id};{seeds[seq.id]};{len(seq)};{','.join(g.label.name for g in gts)}")
    (directory / "annotations.txt").write_text(write_annotation_file(annotations))
    (directory / "manifest.txt").write_text("\n".join(manifest) + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    values = _load_file(args, _allowed((GenConfig, "")))
    config = build(GenConfig, args, values)
    out = Path(args.out)
    plan = plan_dataset(config)
    seeds = {sid: seed for sid, seed, _ in plan}
    generated = {}
    for sid, seed, labels in plan:
        generated[sid] = generate_sequence(sid, labels, seed, config)
    names = ["train", "test"] if config.blocks == 2 else [f"block{b}" for b in range(config.blocks)]
    for name, ids in zip(names, block_ids(config)):
        write_split(out / name, [generated[i] for i in ids], config, seeds)
    (out / CONFIG_FILE).write_text(config_text("gen", config))
    log.info("wrote %d sequences to %s", len(plan), out)
    return 0


def cmd_train(args) -> int:
    values = _load_file(args, _allowed((TrainConfig, ""), (DetectConfig, "")) | {"jobs"})
    tcfg = build(TrainConfig, args, values)
    dcfg = build(DetectConfig, args, values)
    jobs = args.jobs if args.jobs is not None else int(values.get("jobs", 1))
    sequences, annotations = load_split(args.data)
    t0 = time.perf_counter()
    models = train_strategy(sequences, annotations, tcfg, dcfg, jobs)
    log.info("trained %s in %.1f s", dcfg.strategy, time.perf_counter() - t0)
    out = Path(args.out)
    save_models(models, out)
    (out / CONFIG_FILE).write_text(config_text("train", tcfg, dcfg, {"jobs": jobs}))
    return 0


def cmd_detect(args) -> int:
    values = _load_file(args, _allowed((DetectConfig, "")))
    models = load_models(args.models)
    if "strategy" not in values and args.strategy is None:
        values["strategy"] = strategy_of(models)
    dcfg = build(DetectConfig, args, values)
    if dcfg.strategy != strategy_of(models):
        raise ValueError(f"models in {args.models} are for {strategy_of(models)}, not {dcfg.strategy}")
    sequences, _ = load_split(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    preds, per_frame = {}, []
    for seq in sequences:
        t0 = time.perf_counter()
        preds[seq.id] = detect_sequence(seq, models, dcfg)
        per_frame.append((time.perf_counter() - t0) / len(seq))
    (out / "predictions.txt").write_text(write_prediction_file(preds))
    timing = [f"sequences = {len(sequences)}",
              f"offline_ms_per_frame = {1000 * float(np.mean(per_frame)):.4f}"]
    if dcfg.strategy == "voting":
        steps = time_steps(models["voting"], sequences[0].joints, args.timing_steps)
        timing += [f"online_steps = {len(steps)}",
                   f"online_step_ms_mean = {1000 * steps.mean():.4f}",
                   f"online_step_ms_p95 = {1000 * np.percentile(steps, 95):.4f}"]
    (out / "timing.txt").write_text("\n".join(timing) + "\n")
    (out / CONFIG_FILE).write_text(config_text("detect", dcfg))
    return 0


def cmd_eval(args) -> int:
    gt = parse_annotation_file(Path(args.gt).read_text())
    preds = parse_prediction_file(Path(args.pred).read_text())
    unknown = sorted(set(preds) - set(gt))
    if unknown:
        raise ValueError(f"predictions for sequences without ground truth: {', '.join(unknown[:5])}")
    report = evaluate(gt, preds, args.min_overlap)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report.to_csv())
    (out / CONFIG_FILE).write_text(config_text("eval", {"gt": args.gt, "pred": args.pred,
                                                          "min_overlap": args.min_overlap}))
    print(report.table())
    return 0


def _thresholds(spec: str):
    lo, hi, step = (float(v) for v in spec.split(":"))
    count = int(round((hi - lo) / step)) + 1
    return [round(lo + i * step, 10) for i in range(count)]


def cmd_sweep(args) -> int:
    gt = parse_annotation_file(Path(args.gt).read_text())
    thresholds = _thresholds(args.thresholds)
    curves = {}
    for item in args.pred:
        name, _, path = item.rpartition("=")
        name = name or Path(path).parent.name or Path(path).stem
        curves[name] = overlap_sweep(gt, parse_prediction_file(Path(path).read_text()), thresholds)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(sweep_csv(curves))
    (out.parent / CONFIG_FILE).write_text(config_text("sweep", {
        "gt": args.gt, "pred": " ".join(args.pred), "thresholds": args.thresholds}))
    return 0


def cmd_features(args) -> int:
    sequences, _ = load_split(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "group3":
        blocks = GROUP3_VARIANTS[args.variant]
        norm = PositionNormalizer.fit([s.joints for s in sequences])
    for seq in sequences:
        if args.kind == "angles":
            header, rows = feature_header("angles"), angle_stream(seq.joints)
        elif args.kind == "group3":
            header, rows = feature_header("group3", blocks), group3_features(seq.joints, norm, blocks)
        else:
            energy = sliding_energy(seq.joints, args.l)
            header, rows = feature_header("energy"), energy[:, None]
        lines = [";".join(["frame"] + header)]
        lines += [";".join([str(i)] + [repr(float(v)) for v in r]) for i, r in enumerate(rows)]
        (out / f"{seq.id}.csv").write_text("\n".join(lines) + "\n")
    (out / CONFIG_FILE).write_text(config_text("features", {
        "data": args.data, "kind": args.kind, "variant": args.variant, "l": args.l}))
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gesturespot", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic annotated dataset")
    g.add_argument("--out", required=True)
    g.add_argument("--config")
    _add_fields(g, GenConfig)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train the models of one strategy")
    t.add_argument("--data", required=True, help="split directory with sequences/ and annotations.txt")
    t.add_argument("--out", required=True)
    t.add_argument("--config")
    t.add_argument("--jobs", type=int)
    _add_fields(t, TrainConfig)
    _add_fields(t, DetectConfig)
    t.set_defaults(func=cmd_train)

    d = sub.add_parser("detect", help="run a trained strategy over a split")
    d.add_argument("--data", required=True)
    d.add_argument("--models", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--config")
    d.add_argument("--jobs", type=int, help="accepted for symmetry; detection runs sequentially")
    d.add_argument("--timing-steps", type=int, default=1000)
    _add_fields(d, DetectConfig)
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("eval", help="score predictions against ground truth")
    e.add_argument("--gt", required=True)
    e.add_argument("--pred", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--min-overlap", type=float, default=0.5)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="detection rate against the minimum overlap ratio")
    s.add_argument("--gt", required=True)
    s.add_argument("--pred", required=True, nargs="+", help="prediction files, optionally NAME=PATH")
    s.add_argument("--out", required=True, help="output CSV path")
    s.add_argument("--thresholds", default="0:1:0.05", help="START:STOP:STEP")
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("features", help="dump per-frame features of a split")
    f.add_argument("--data", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--kind", choices=("angles", "group3", "energy"), default="angles")
    f.add_argument("--variant", choices=sorted(GROUP3_VARIANTS), default="full")
    f.add_argument("--l", type=int, default=10)
    f.set_defaults(func=cmd_features)
    return p


def run(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(f"gesturespot: error: {err}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as err:
        print(f"gesturespot: error: {err}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
