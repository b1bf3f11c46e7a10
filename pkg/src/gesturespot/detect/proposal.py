"""Energy-driven proposals checked by a tiny classifier and fused with a large
window classifier that also regresses the gesture's centre and length.

Pipeline per stream:

1. stride-1 windows of ``l + 1`` frames whose energy beats the running mean
   of all earlier window energies become proposals;
2. a tiny classifier labels each proposal;
3. a large classifier looks at the ``L`` frames ending at the proposal's
   last frame and predicts a class plus ``(center, length)`` targets, which
   decode to an interval;
4. the two agree when classes match and the spans intersect.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..features import sliding_energy
from ..skeleton import BACKGROUND, GestureClass, GestureInterval, interval_iou

log = logging.getLogger(__name__)

BG = int(BACKGROUND)


@dataclass(frozen=True)
class ProposalWindow:
    start: int
    end: int  # inclusive; end - start == l
    energy: float
    label: int = BG
    confidence: float = 0.0


def proposal_indices(energies: Sequence[float]) -> list[int]:
    """Indices i with ``E[i] > mean(E[0..i-1])``; index 0 has no history.

    The comparison ``i * E[i] > sum(E[:i])`` is done in exact rational
    arithmetic so ties (e.g. constant energy) are never broken by rounding.
    """
    out = []
    total = Fraction(0)
    for i, e in enumerate(energies):
        e = Fraction(float(e))
        if i > 0 and e * i > total:
            out.append(i)
        total += e
    return out


def energy_proposals(joints: np.ndarray, l: int = 10) -> list[ProposalWindow]:
    joints = np.asarray(joints)
    if len(joints) <= l:
        return []
    energy = sliding_energy(joints, l)
    return [ProposalWindow(i, i + l, float(energy[i])) for i in proposal_indices(energy)]


def regression_targets(gesture: GestureInterval, window_start: int, L: int = 80) -> tuple[float, float]:
    """``((mid - window_start) / L, (end - start) / L)``, both required in [0, 1]."""
    mid = (gesture.start + gesture.end) / 2
    center = (mid - window_start) / L
    length = (gesture.end - gesture.start) / L
    if not (0 <= center <= 1 and 0 <= length <= 1):
        raise ValueError(f"gesture {gesture} does not fit a window starting at {window_start} (L={L})")
    return center, length


def decode_targets(center: float, length: float, window_start: int, L: int = 80) -> tuple[int, int]:
    """Inverse of :func:`regression_targets`, rounded to frames."""
    mid = window_start + center * L
    half = max(length, 0.0) * L / 2
    start = int(np.floor(mid - half + 0.5))
    end = int(np.floor(mid + half + 0.5))
    return start, max(start, end)


def match_and_fuse(tiny: ProposalWindow, large_label: int, large_span: tuple[int, int]) -> GestureInterval | None:
    """Accept when both models name the same gesture and their spans intersect.

    The accepted interval is the large model's decoded span labelled with
    the tiny model's class; its last frame used is the proposal's end.
    """
    if tiny.label == BG or tiny.label != large_label:
        return None
    s, e = large_span
    if e < s or interval_iou(tiny.start, tiny.end, s, e) <= 0:
        return None
    return GestureInterval(max(s, 0), e, GestureClass(tiny.label), tiny.end)


def suppress_duplicates(accepted: Sequence[GestureInterval]) -> list[GestureInterval]:
    """Drop an accepted interval that overlaps an earlier one of the same class."""
    out: list[GestureInterval] = []
    for a in accepted:
        if any(b.label is a.label and b.overlap(a) for b in out):
            continue
        out.append(a)
    return out


def padded_windows(features: np.ndarray, ends: Sequence[int], n: int) -> np.ndarray:
    """Windows of ``n`` frames ending at each of ``ends``; missing history repeats frame 0."""
    idx = np.asarray(ends)[:, None] - np.arange(n - 1, -1, -1)[None, :]
    return features[np.maximum(idx, 0)]


def regress(ensemble, windows: np.ndarray) -> np.ndarray:
    """Member-averaged (center, length) predictions of the large ensemble, (B, 2)."""
    from ..tcn import activations

    x = ensemble.scaler.apply(windows)
    outs = []
    for i, m in enumerate(ensemble.members):
        a = activations(m, x).reshape(len(x), -1)
        w = ensemble.extras[f"reg{i}"]
        outs.append(a @ w[:-1] + w[-1])
    return np.mean(outs, axis=0)


def detect_proposals(joints: np.ndarray, features: np.ndarray, tiny, large, l: int = 10) -> list[GestureInterval]:
    """Run the full proposal pipeline over one stream."""
    length = len(joints)
    props = energy_proposals(joints, l)
    if not props:
        return []
    n_t = tiny.window
    ends = np.array([p.end for p in props])
    tw = padded_windows(features, ends, n_t)
    probs = tiny.probabilities(tw)
    tiny_labels = tiny.predict(tw)
    keep = [i for i, c in enumerate(tiny_labels) if c != BG]
    if not keep:
        return []
    L = large.window
    lw = padded_windows(features, ends[keep], L)
    large_labels = large.predict(lw)
    targets = regress(large, lw)
    accepted = []
    for j, i in enumerate(keep):
        p = props[i]
        verdict = ProposalWindow(p.start, p.end, p.energy, int(tiny_labels[i]), float(probs[i, tiny_labels[i]]))
        s, e = decode_targets(*targets[j], int(ends[i]) - L + 1, L)
        s, e = max(s, 0), min(e, length - 1)
        if e < s:
            continue
        a = match_and_fuse(verdict, int(large_labels[j]), (s, e))
        if a is not None:
            accepted.append(a)
    return suppress_duplicates(accepted)
