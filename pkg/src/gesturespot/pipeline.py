"""Training and detection for the four online strategies.

``voting``    angle-feature TCN ensemble, stride-1 voting and chunk cleanup
``fsm``       joint-feature TCN labelling the window ending at each frame, FSM segmentation
``proposal``  energy proposals, tiny TCN verdicts fused with a large TCN + regression head
``baseline``  variable-size windows over resampled baseline features, thresholded
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .detect.baseline import WINDOW_SIZES, BaselineClassifier, calibrate_thresholds, variable_window_detect
from .detect.fsm import FsmConfig, run_fsm, window_end_labels
from .detect.proposal import detect_proposals, regression_targets
from .detect.voting import VoteAccumulator, chunks_to_predictions, postprocess_chunks, vote_stream
from .features import (
    BASELINE_STEPS,
    GROUP3_VARIANTS,
    PositionNormalizer,
    angle_stream,
    baseline_features,
    group3_features,
    segment_angles,
)
from .skeleton import BACKGROUND, GESTURES, GestureInterval, GestureSequence
from .tcn import (
    DenseWindowSet,
    FeatureScaler,
    TcnEnsemble,
    TrainConfig,
    WindowSet,
    activations,
    concat_features,
    config_dict,
    load_ensemble,
    save_ensemble,
    train_folds,
    train_on_streams,
)

log = logging.getLogger(__name__)

STRATEGIES = ("voting", "fsm", "proposal", "baseline")
BG = int(BACKGROUND)


@dataclass
class DetectConfig:
    strategy: str = "voting"
    min_chunk: int = 9  # voting: shorter isolated chunks become background
    w_i: int = 5
    w_e: int = 10
    fsm_window: int = 10
    group3_variant: str = "full"
    proposal_l: int = 10
    proposal_L: int = 80
    tiny_window: int = 11
    windows_per_gesture: int = 8
    ridge: float = 1.0
    threshold_mode: str = "per_class"
    scan_stride: int = 1
    segment_steps: int = BASELINE_STEPS
    augment: int = 4

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {', '.join(STRATEGIES)}")
        if self.group3_variant not in GROUP3_VARIANTS:
            raise ValueError(f"unknown group3 variant {self.group3_variant!r}")
        if self.threshold_mode not in ("per_class", "pooled"):
            raise ValueError("threshold_mode must be per_class or pooled")
        for name in ("min_chunk", "w_i", "w_e", "fsm_window", "proposal_l", "proposal_L",
                     "tiny_window", "windows_per_gesture", "scan_stride", "segment_steps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def _gts(sequences, annotations):
    return [list(annotations.get(s.id, [])) for s in sequences]


# ---------------------------------------------------------------------------
# per-strategy feature streams


def fsm_stream(joints: np.ndarray, ensemble: TcnEnsemble) -> np.ndarray:
    norm = PositionNormalizer(ensemble.extras["position_mean"], ensemble.extras["position_std"])
    return group3_features(joints, norm, tuple(ensemble.features["blocks"]))


# ---------------------------------------------------------------------------
# training


def train_voting(sequences, annotations, config: TrainConfig, dcfg: DetectConfig, jobs: int = 1):
    streams = [angle_stream(s.joints) for s in sequences]
    ens = train_on_streams(streams, _gts(sequences, annotations), config, {"kind": "angles"}, jobs)
    return {"voting": ens}


def train_fsm(sequences, annotations, config: TrainConfig, dcfg: DetectConfig, jobs: int = 1):
    blocks = GROUP3_VARIANTS[dcfg.group3_variant]
    norm = PositionNormalizer.fit([s.joints for s in sequences])
    streams = [group3_features(s.joints, norm, blocks) for s in sequences]
    cfg = replace(config, window=dcfg.fsm_window)
    ens = train_on_streams(streams, _gts(sequences, annotations), cfg,
                           {"kind": "group3", "blocks": list(blocks)}, jobs)
    ens.extras.update(position_mean=norm.mean, position_std=norm.std)
    return {"fsm": ens}


def large_window_samples(lengths, annotations, L: int, per_gesture: int, keep: float,
                         rng: np.random.Generator, tail: int = 20):
    """Window starts (may be negative: front padding), labels, occurrence ids and regression targets.

    A window is a gesture window for g when it starts in
    ``[g.end - L + 1, floor(mid(g))]``: the gesture's centre is inside and
    it is no longer than the window.  Up to ``per_gesture`` evenly spaced
    starts are kept per occurrence.  Windows whose last ``tail`` frames
    touch no gesture and that are no gesture window are background, kept
    with probability ``keep``.
    """
    seq_i, starts, labels, occ, targets = [], [], [], [], []
    occurrences = []
    for si, (length, gts) in enumerate(zip(lengths, annotations)):
        gts = sorted(gts)
        base = len(occurrences)
        occurrences.extend((si, g) for g in gts)
        claimed = set()
        for k, g in enumerate(gts):
            lo, hi = g.end - L + 1, (g.start + g.end) // 2
            if g.end - g.start > L:
                log.warning("gesture %s longer than the large window, skipped", g)
                continue
            cand = np.arange(lo, hi + 1)
            claimed.update(cand.tolist())
            pick = cand[np.unique(np.linspace(0, len(cand) - 1, per_gesture).round().astype(int))]
            for ws in pick:
                seq_i.append(si)
                starts.append(int(ws))
                labels.append(int(g.label))
                occ.append(base + k)
                targets.append(regression_targets(g, int(ws), L))
        draws = rng.random(length)
        for end in range(length):
            ws = end - L + 1
            if ws in claimed or draws[end] >= keep:
                continue
            if any(g.start <= end and g.end >= end - tail + 1 for g in gts):
                continue
            seq_i.append(si)
            starts.append(ws)
            labels.append(BG)
            occ.append(-1)
            targets.append((np.nan, np.nan))
    return (np.array(seq_i, dtype=np.int64), np.array(starts, dtype=np.int64), np.array(labels, dtype=np.int64),
            np.array(occ, dtype=np.int64), np.array(targets, dtype=np.float64).reshape(-1, 2), occurrences)


def fit_ridge(a: np.ndarray, y: np.ndarray, ridge: float) -> np.ndarray:
    """Least squares with an L2 penalty on the weights (not the bias); returns (D + 1, k)."""
    mu_a, mu_y = a.mean(axis=0), y.mean(axis=0)
    ac = a - mu_a
    w = np.linalg.solve(ac.T @ ac + ridge * np.eye(a.shape[1]), ac.T @ (y - mu_y))
    return np.vstack([w, mu_y - mu_a @ w])


def train_proposal(sequences, annotations, config: TrainConfig, dcfg: DetectConfig, jobs: int = 1):
    gts = _gts(sequences, annotations)
    streams = [angle_stream(s.joints) for s in sequences]
    tiny_cfg = replace(config, window=dcfg.tiny_window)
    tiny = train_on_streams(streams, gts, tiny_cfg, {"kind": "angles"}, jobs)

    L = dcfg.proposal_L
    cfg = replace(config, window=L)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 2]))
    seq_i, starts, labels, occ, targets, occurrences = large_window_samples(
        [len(s) for s in streams], gts, L, dcfg.windows_per_gesture, config.background_keep, rng)
    padded = [np.concatenate([np.repeat(s[:1], L - 1, axis=0), s]) for s in streams]
    frames, offsets = concat_features(padded)
    scaler = FeatureScaler.fit(np.concatenate(streams))
    data = WindowSet(scaler.apply(frames), offsets[seq_i] + starts + L - 1, labels, occ, L)
    occ_labels = [int(g.label) for _, g in occurrences]
    models, histories = train_folds(data, occ_labels, cfg, jobs=jobs)
    large = TcnEnsemble(models, scaler, {"kind": "angles"}, config_dict(cfg), {}, histories)
    gesture = labels != BG
    x = data.take(np.flatnonzero(gesture))
    for i, m in enumerate(models):
        a = activations(m, x).reshape(len(x), -1)
        large.extras[f"reg{i}"] = fit_ridge(a, targets[gesture], dcfg.ridge)
    large.extras["proposal_l"] = np.array([float(dcfg.proposal_l)])
    return {"tiny": tiny, "large": large}


def _segment_samples(sequences, gts, dcfg: DetectConfig, rng: np.random.Generator, keep: float):
    """Resampled segments: each gesture plus jittered copies, and random background spans."""
    feats, labels, occ, occurrences = [], [], [], []
    lo, hi = min(WINDOW_SIZES), max(WINDOW_SIZES)
    for si, (seq, gs) in enumerate(zip(sequences, gts)):
        length = len(seq)
        base = len(occurrences)
        occurrences.extend((si, g) for g in gs)
        for k, g in enumerate(gs):
            spans = [(g.start, g.end)]
            for _ in range(dcfg.augment):
                d = max(1, g.length // 6)
                s = int(np.clip(g.start + rng.integers(-d, d + 1), 0, g.end))
                e = int(np.clip(g.end + rng.integers(-d, d + 1), s, length - 1))
                spans.append((s, e))
            for s, e in spans:
                feats.append(baseline_features(seq.joints[s:e + 1], dcfg.segment_steps).stacked())
                labels.append(int(g.label))
                occ.append(base + k)
        n_bg = max(1, int(round(keep * length / 4)))
        for _ in range(n_bg * 4):
            if n_bg == 0:
                break
            w = int(rng.integers(lo, hi + 1))
            if w > length:
                continue
            s = int(rng.integers(0, length - w + 1))
            e = s + w - 1
            # background spans may touch a gesture by less than half of either
            if any(g.overlap(GestureInterval(s, e, g.label)) * 2 >= min(w, g.length) for g in gs):
                continue
            feats.append(baseline_features(seq.joints[s:e + 1], dcfg.segment_steps).stacked())
            labels.append(BG)
            occ.append(-1)
            n_bg -= 1
    return (np.stack(feats), np.array(labels, dtype=np.int64), np.array(occ, dtype=np.int64), occurrences)


def train_baseline(sequences, annotations, config: TrainConfig, dcfg: DetectConfig, jobs: int = 1):
    gts = _gts(sequences, annotations)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 3]))
    x, labels, occ, occurrences = _segment_samples(sequences, gts, dcfg, rng, config.background_keep)
    scaler = FeatureScaler.fit(x.reshape(-1, x.shape[-1]))
    data = DenseWindowSet(scaler.apply(x), labels, occ)
    cfg = replace(config, window=dcfg.segment_steps)
    models, histories, splits = train_folds(data, [int(g.label) for _, g in occurrences], cfg,
                                            jobs=jobs, return_splits=True)
    ens = TcnEnsemble(models, scaler, {"kind": "baseline", "steps": dcfg.segment_steps},
                      config_dict(cfg), {}, histories)
    # out-of-fold probabilities of every member on its own validation windows
    probs, truth = [], []
    raw = x
    for m, (_, va) in zip(models, splits):
        idx = np.flatnonzero(va)
        if len(idx) == 0:
            continue
        single = TcnEnsemble([m], scaler)
        probs.append(single.probabilities(raw[idx]))
        truth.append(labels[idx])
    if probs:
        thr = calibrate_thresholds(np.concatenate(probs), np.concatenate(truth), dcfg.threshold_mode)
    else:
        thr = np.zeros(len(GESTURES) + 1)
    ens.extras["thresholds"] = thr
    return {"baseline": ens}


TRAINERS = {"voting": train_voting, "fsm": train_fsm, "proposal": train_proposal, "baseline": train_baseline}


def train_strategy(sequences: Sequence[GestureSequence], annotations: Mapping[str, Sequence[GestureInterval]],
                   config: TrainConfig, dcfg: DetectConfig, jobs: int = 1) -> dict[str, TcnEnsemble]:
    return TRAINERS[dcfg.strategy](sequences, annotations, config, dcfg, jobs)


def save_models(models: Mapping[str, TcnEnsemble], directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, ens in sorted(models.items()):
        save_ensemble(ens, directory / f"{name}.model")


def load_models(directory) -> dict[str, TcnEnsemble]:
    directory = Path(directory)
    models = {p.stem: load_ensemble(p) for p in sorted(directory.glob("*.model"))}
    if not models:
        raise FileNotFoundError(f"no *.model files in {directory}")
    return models


def strategy_of(models: Mapping[str, TcnEnsemble]) -> str:
    if "tiny" in models and "large" in models:
        return "proposal"
    for name in ("voting", "fsm", "baseline"):
        if name in models:
            return name
    raise ValueError(f"unrecognised model set {sorted(models)}")


# ---------------------------------------------------------------------------
# detection


def detect_sequence(seq: GestureSequence, models: Mapping[str, TcnEnsemble], dcfg: DetectConfig) -> list[GestureInterval]:
    strategy = strategy_of(models)
    if strategy == "voting":
        ens = models["voting"]
        labels, used = vote_stream(angle_stream(seq.joints), ens)
        labels = postprocess_chunks(labels, ens.window, dcfg.min_chunk)
        return chunks_to_predictions(labels, used)
    if strategy == "fsm":
        ens = models["fsm"]
        labels = window_end_labels(fsm_stream(seq.joints, ens), ens)
        out = run_fsm(labels, FsmConfig(dcfg.w_i, dcfg.w_e))
        return [g for g in out if g.end < len(seq)]
    if strategy == "proposal":
        return detect_proposals(seq.joints, angle_stream(seq.joints), models["tiny"], models["large"], dcfg.proposal_l)
    ens = models["baseline"]
    clf = BaselineClassifier(ens, int(ens.features.get("steps", BASELINE_STEPS)))
    return variable_window_detect(seq.joints, clf, ens.extras["thresholds"], stride=dcfg.scan_stride)


def detect_all(sequences, models, dcfg: DetectConfig) -> dict[str, list[GestureInterval]]:
    return {s.id: detect_sequence(s, models, dcfg) for s in sequences}


class OnlineVotingDetector:
    """Frame-by-frame voting detector; each :meth:`step` is one classification step.

    Keeps a ring of the last ``n`` angle-feature rows; once ``n`` frames are
    in, every new frame classifies one window and finalises one frame label.
    """

    def __init__(self, ensemble: TcnEnsemble):
        self.ensemble = ensemble
        self.n = ensemble.window
        self.ring = np.zeros((self.n, ensemble.n_in))
        self.count = 0
        self.votes = VoteAccumulator(self.n)

    def step(self, frame: np.ndarray):
        """Feed one (26, 3) frame; returns ``(frame index, label, last_frame_used)`` or None."""
        row = segment_angles(np.asarray(frame, dtype=np.float64)[None])[0]
        self.ring = np.roll(self.ring, -1, axis=0)
        self.ring[-1] = row
        self.count += 1
        if self.count < self.n:
            return None
        verdict = int(self.ensemble.predict(self.ring[None])[0])
        return self.votes.push(verdict)


def time_steps(ensemble: TcnEnsemble, joints: np.ndarray, steps: int = 1000) -> np.ndarray:
    """Wall time (seconds) of ``steps`` online classification steps, cycling through ``joints``."""
    det = OnlineVotingDetector(ensemble)
    for t in range(det.n - 1):
        det.step(joints[t % len(joints)])
    out = np.empty(steps)
    for i in range(steps):
        frame = joints[(det.n - 1 + i) % len(joints)]
        t0 = time.perf_counter()
        det.step(frame)
        out[i] = time.perf_counter() - t0
    return out
