"""Window voting, chunk post-processing and conversion to predictions."""
from __future__ import annotations

import logging
from collections import deque

import numpy as np

from ..skeleton import BACKGROUND, N_CLASSES, GestureClass, GestureInterval

log = logging.getLogger(__name__)

BG = int(BACKGROUND)


def vote_labels(window_labels: np.ndarray, length: int, n: int):
    """Per-frame majority of the stride-1 window verdicts covering each frame.

    ``window_labels[s]`` is the verdict of window ``[s, s + n - 1]``.  Returns
    ``(labels, last_frame_used)``; frame f is final once window f has
    reported, so ``last_frame_used[f] = min(f + n - 1, length - 1)``.
    Ties go to the lowest class index.
    """
    window_labels = np.asarray(window_labels, dtype=np.int64)
    if length < n or len(window_labels) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    if len(window_labels) != length - n + 1:
        raise ValueError("need one verdict per stride-1 window")
    diff = np.zeros((length + 1, N_CLASSES), dtype=np.int64)
    s = np.arange(len(window_labels))
    np.add.at(diff, (s, window_labels), 1)
    np.add.at(diff, (s + n, window_labels), -1)
    votes = np.cumsum(diff[:-1], axis=0)
    labels = np.argmax(votes, axis=1)
    used = np.minimum(np.arange(length) + n - 1, length - 1)
    return labels, used


class VoteAccumulator:
    """Streaming form of :func:`vote_labels`.

    Feed window verdicts in order with :meth:`push`; each push finalises the
    oldest frame whose covering windows have all reported.
    """

    def __init__(self, n: int):
        self.n = n
        self.pending: deque = deque()
        self.windows = 0

    def push(self, label: int):
        """Add the verdict of the next window; returns ``(frame, label, last_frame_used)``."""
        s = self.windows
        self.windows += 1
        while len(self.pending) < self.n:
            self.pending.append(np.zeros(N_CLASSES, dtype=np.int64))
        for counts in self.pending:
            counts[label] += 1
        counts = self.pending.popleft()
        return s, int(np.argmax(counts)), s + self.n - 1

    def flush(self):
        """Finalise the frames after the last full window."""
        out = []
        s = self.windows
        last = self.windows + self.n - 2
        # only the frames actually covered by a window exist
        for k in range(self.n - 1):
            counts = self.pending[k] if k < len(self.pending) else None
            if counts is None or counts.sum() == 0:
                break
            out.append((s + k, int(np.argmax(counts)), last))
        self.pending.clear()
        return out


def vote_stream(features: np.ndarray, ensemble):
    """Per-frame labels and last-frame-used for one stream of frame features."""
    n = ensemble.window
    length = len(features)
    if length < n:
        log.warning("stream of %d frames is shorter than the window (%d)", length, n)
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    windows = np.lib.stride_tricks.sliding_window_view(features, n, axis=0).transpose(0, 2, 1)
    verdicts = np.concatenate(
        [ensemble.predict(windows[i:i + 512]) for i in range(0, len(windows), 512)]
    )
    return vote_labels(verdicts, length, n)


def _runs(labels):
    runs = []
    for i, lab in enumerate(labels):
        if runs and runs[-1][0] == lab:
            runs[-1][2] += 1
        else:
            runs.append([int(lab), i, 1])
    return runs


def postprocess_chunks(labels, n: int = 20, min_length: int = 9, background: int = BG) -> np.ndarray:
    """Clean fuzzy chunk boundaries.

    For two touching non-background chunks C0, C1: if |C0| > |C1| and
    |C0| < n then C1 becomes background, else if |C0| < n then C0 does.
    Afterwards chunks shorter than ``min_length`` with background (or the
    stream edge) on both sides become background.
    """
    labels = np.array(labels, dtype=np.int64)
    runs = _runs(labels)
    for c0, c1 in zip(runs, runs[1:]):
        if c0[0] == background or c1[0] == background:
            continue
        if c0[2] > c1[2] and c0[2] < n:
            c1[0] = background
        elif c0[2] < n:
            c0[0] = background
    for lab, start, size in runs:
        labels[start:start + size] = lab
    runs = _runs(labels)
    for i, (lab, start, size) in enumerate(runs):
        if lab == background or size >= min_length:
            continue
        left = i == 0 or runs[i - 1][0] == background
        right = i == len(runs) - 1 or runs[i + 1][0] == background
        if left and right:
            labels[start:start + size] = background
    return labels


def chunks_to_predictions(labels, last_frame_used, background: int = BG) -> list[GestureInterval]:
    """One interval per maximal non-background chunk."""
    out = []
    for lab, start, size in _runs(labels):
        if lab == background:
            continue
        out.append(GestureInterval(start, start + size - 1, GestureClass(lab), int(last_frame_used[start])))
    return out
