"""Variable-size window scan with per-class probability thresholds.

Every end frame is examined with windows of several sizes; each window is
resampled to a fixed number of steps and classified.  A window is accepted
when its winning gesture class clears that class's threshold.  Overlapping
acceptances of one class merge, contested frames go to the most confident
class and each resulting chunk becomes one prediction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..features import BASELINE_STEPS, baseline_features
from ..skeleton import BACKGROUND, N_CLASSES, GestureClass, GestureInterval

BG = int(BACKGROUND)
WINDOW_SIZES = tuple(range(5, 61, 5))


def _top_two(probs: np.ndarray):
    s = np.sort(probs, axis=-1)
    return s[..., -1], s[..., -2]


def calibrate_thresholds(probs: np.ndarray, labels: Sequence[int], mode: str = "per_class") -> np.ndarray:
    """Thresholds from validation detections.

    ``probs`` (N, 17) are classifier outputs and ``labels`` the true
    classes.  For every correct gesture detection the statistic is the mean
    of its top and runner-up probabilities; class c's threshold averages
    that statistic over its correct detections.  Classes without any
    correct detection, and every class in ``"pooled"`` mode, use the mean
    over all correct detections.  The background entry is 0.
    """
    probs = np.asarray(probs, dtype=np.float64).reshape(-1, N_CLASSES)
    labels = np.asarray(labels, dtype=np.int64)
    pred = np.argmax(probs, axis=1)
    ok = (pred == labels) & (labels != BG)
    top, second = _top_two(probs)
    stat = (top + second) / 2
    overall = float(stat[ok].mean()) if ok.any() else 0.0
    out = np.zeros(N_CLASSES)
    for c in range(N_CLASSES):
        if c == BG:
            continue
        sel = ok & (labels == c)
        out[c] = float(stat[sel].mean()) if sel.any() and mode == "per_class" else overall
    if mode not in ("per_class", "pooled"):
        raise ValueError(f"unknown calibration mode {mode!r}")
    return out


def apply_thresholds(probs: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Winning class per row, or background where it is background or below threshold."""
    probs = np.asarray(probs, dtype=np.float64).reshape(-1, N_CLASSES)
    pred = np.argmax(probs, axis=1)
    conf = probs[np.arange(len(probs)), pred]
    keep = (pred != BG) & (conf >= np.asarray(thresholds)[pred])
    return np.where(keep, pred, BG)


@dataclass(frozen=True)
class Acceptance:
    start: int
    end: int
    label: int
    prob: float


def scan_spans(length: int, sizes=WINDOW_SIZES, stride: int = 1):
    """(start, end) for every end frame (every ``stride``-th) and every size that fits."""
    spans = []
    for f in range(0, length, stride):
        for w in sizes:
            if w <= f + 1:
                spans.append((f - w + 1, f))
    return spans


def variable_window_detect(joints: np.ndarray, classify: Callable, thresholds: np.ndarray,
                           sizes=WINDOW_SIZES, stride: int = 1) -> list[GestureInterval]:
    """Scan one stream.

    ``classify(joints, spans)`` returns (len(spans), 17) probabilities for
    inclusive ``(start, end)`` spans.
    """
    length = len(joints)
    spans = scan_spans(length, sizes, stride)
    if not spans:
        return []
    probs = np.asarray(classify(joints, spans))
    labels = apply_thresholds(probs, thresholds)
    acc = [Acceptance(s, e, int(c), float(probs[i, c]))
           for i, ((s, e), c) in enumerate(zip(spans, labels)) if c != BG]
    return merge_acceptances(acc, length)


def merge_acceptances(acc: Sequence[Acceptance], length: int) -> list[GestureInterval]:
    """Assign frames to the most confident covering acceptance and cut chunks.

    A chunk's last frame used is the earliest end among the acceptances of
    its class that intersect it, i.e. the first moment the detection could
    be reported.
    """
    best = np.full(length, -1.0)
    label = np.full(length, BG, dtype=np.int64)
    # ties on probability keep the lower class index
    for a in sorted(acc, key=lambda a: (-a.prob, a.label, a.start, a.end)):
        seg = slice(a.start, a.end + 1)
        free = best[seg] < 0
        label[seg][free] = a.label
        best[seg][free] = a.prob
    out = []
    f = 0
    while f < length:
        if label[f] == BG:
            f += 1
            continue
        g = f
        while g + 1 < length and label[g + 1] == label[f]:
            g += 1
        c = int(label[f])
        lfu = min(a.end for a in acc if a.label == c and a.start <= g and a.end >= f)
        out.append(GestureInterval(f, g, GestureClass(c), lfu))
        f = g + 1
    return out


class BaselineClassifier:
    """Adapter turning a TcnEnsemble over resampled baseline features into ``classify``."""

    def __init__(self, ensemble, steps: int = BASELINE_STEPS, chunk: int = 256):
        self.ensemble = ensemble
        self.steps = steps
        self.chunk = chunk

    def features(self, joints: np.ndarray, spans) -> np.ndarray:
        return np.stack([baseline_features(joints[s:e + 1], self.steps).stacked() for s, e in spans])

    def __call__(self, joints: np.ndarray, spans) -> np.ndarray:
        out = []
        for i in range(0, len(spans), self.chunk):
            out.append(self.ensemble.probabilities(self.features(joints, spans[i:i + self.chunk])))
        return np.concatenate(out) if out else np.zeros((0, N_CLASSES))
