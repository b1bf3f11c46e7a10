"""Four-state gesture segmenter over a stream of per-frame labels.

States: IDLE -> CONFIRM_START -> IN_GESTURE -> CONFIRM_END -> (emit) IDLE.
The machine looks at a buffer of the last ``buffer`` labels and only runs
once the buffer is full.  A start is confirmed when at least ``w_i``
gesture-labelled frames fall inside the last ``buffer`` consecutive windows
(i.e. the last ``2 * buffer - 1`` frames); an end when ``w_e`` consecutive
non-gesture frames follow the last gesture frame.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from ..skeleton import BACKGROUND, N_CLASSES, GestureClass, GestureInterval

BG = int(BACKGROUND)


class Phase(enum.Enum):
    IDLE = 0
    CONFIRM_START = 1
    IN_GESTURE = 2
    CONFIRM_END = 3


@dataclass(frozen=True)
class FsmConfig:
    w_i: int = 5
    w_e: int = 10
    buffer: int = 10


@dataclass(frozen=True)
class FsmState:
    phase: Phase = Phase.IDLE
    frame: int = -1  # index of the newest frame seen
    buffer: tuple = ()
    recent: tuple = ()  # (frame, label) of gesture frames in the confirmation horizon
    start: int = -1
    last_gesture: int = -1
    counts: tuple = (0,) * N_CLASSES


def _modal(counts) -> GestureClass:
    return GestureClass(int(np.argmax(counts)))


def _bump(counts, label):
    c = list(counts)
    c[label] += 1
    return tuple(c)


def fsm_step(state: FsmState, label: int, config: FsmConfig = FsmConfig()):
    """Advance by one frame label; returns ``(new_state, emitted interval or None)``."""
    label = int(label)
    f = state.frame + 1
    buf = (state.buffer + (label,))[-config.buffer:]
    horizon = 2 * config.buffer - 1
    recent = tuple(r for r in state.recent if r[0] > f - horizon)
    if label != BG:
        recent = recent + ((f, label),)
    s = replace(state, frame=f, buffer=buf, recent=recent)
    if len(buf) < config.buffer:
        return s, None
    all_bg = all(x == BG for x in buf)
    phase = s.phase

    if phase is Phase.IDLE:
        if all_bg:
            return replace(s, recent=()), None
        phase = Phase.CONFIRM_START

    if phase is Phase.CONFIRM_START:
        if len(s.recent) >= config.w_i:
            counts = (0,) * N_CLASSES
            for _, lab in s.recent:
                counts = _bump(counts, lab)
            return replace(s, phase=Phase.IN_GESTURE, start=s.recent[0][0],
                           last_gesture=s.recent[-1][0], counts=counts, recent=()), None
        if all_bg:
            return replace(s, phase=Phase.IDLE, recent=()), None
        return replace(s, phase=Phase.CONFIRM_START), None

    if label != BG:
        return replace(s, phase=Phase.IN_GESTURE, last_gesture=f,
                       counts=_bump(s.counts, label), recent=()), None

    if phase is Phase.IN_GESTURE and not all_bg:
        return replace(s, recent=()), None

    # CONFIRM_END (entered on an all-background window)
    if f - s.last_gesture >= config.w_e:
        out = GestureInterval(s.start, s.last_gesture, _modal(s.counts), f)
        return FsmState(frame=f, buffer=buf), out
    return replace(s, phase=Phase.CONFIRM_END, recent=()), None


def run_fsm(labels, config: FsmConfig = FsmConfig()) -> list[GestureInterval]:
    """Replay a whole label stream through the FSM."""
    state, out = FsmState(), []
    for lab in labels:
        state, emitted = fsm_step(state, lab, config)
        if emitted is not None:
            out.append(emitted)
    return out


def window_end_labels(features: np.ndarray, ensemble) -> np.ndarray:
    """Per-frame labels from the causal window ending at each frame.

    Frames before the first full window are labelled background.
    """
    n = ensemble.window
    labels = np.full(len(features), BG, dtype=np.int64)
    if len(features) < n:
        return labels
    windows = np.lib.stride_tricks.sliding_window_view(features, n, axis=0).transpose(0, 2, 1)
    pred = np.concatenate([ensemble.predict(windows[i:i + 512]) for i in range(0, len(windows), 512)])
    labels[n - 1:] = pred
    return labels
