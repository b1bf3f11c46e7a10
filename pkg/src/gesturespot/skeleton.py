"""Hand-skeleton data model, text file formats and uniform resampling.

Frames carry 26 joints in the Hololens 2 hand-joint order::

    0 palm, 1 wrist,
    2-5   thumb (metacarpal, proximal, distal, tip),
    6-10  index (metacarpal, proximal, intermediate, distal, tip),
    11-15 middle, 16-20 ring, 21-25 pinky (same layout as index).

Intervals are inclusive on both ends: ``[start, end]`` covers
``end - start + 1`` frames.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

N_JOINTS = 26

PALM, WRIST = 0, 1
THUMB = (2, 3, 4, 5)
INDEX = (6, 7, 8, 9, 10)
MIDDLE = (11, 12, 13, 14, 15)
RING = (16, 17, 18, 19, 20)
PINKY = (21, 22, 23, 24, 25)
FINGERTIPS = (5, 10, 15, 20, 25)


def _default_parents() -> tuple[int, ...]:
    parents = [WRIST, -1]
    parents += [WRIST, 2, 3, 4]
    for base in (6, 11, 16, 21):
        parents += [WRIST, base, base + 1, base + 2, base + 3]
    return tuple(parents)


# wrist-rooted tree, one entry per joint; 25 edges
DEFAULT_PARENTS = _default_parents()


def segments(parents: tuple[int, ...] = DEFAULT_PARENTS) -> list[tuple[int, int]]:
    """(parent, child) joint pairs, in child order."""
    return [(p, j) for j, p in enumerate(parents) if p >= 0]


class Category(str, enum.Enum):
    STATIC = "static"
    COARSE = "coarse"
    FINE = "fine"
    PERIODIC = "periodic"
    BACKGROUND = "background"


class GestureClass(enum.IntEnum):
    ONE = 0
    TWO = 1
    THREE = 2
    FOUR = 3
    OK = 4
    MENU = 5
    LEFT = 6
    RIGHT = 7
    CIRCLE = 8
    V = 9
    CROSS = 10
    GRAB = 11
    PINCH = 12
    DENY = 13
    WAVE = 14
    KNOB = 15
    NON_GESTURE = 16

    @property
    def category(self) -> Category:
        return _CATEGORY[self]

    @property
    def is_gesture(self) -> bool:
        return self is not GestureClass.NON_GESTURE

    @classmethod
    def parse(cls, name: str) -> "GestureClass":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown gesture label {name!r}") from None


_CATEGORY = {
    **{c: Category.STATIC for c in range(0, 6)},
    **{c: Category.COARSE for c in range(6, 11)},
    **{c: Category.FINE for c in range(11, 13)},
    **{c: Category.PERIODIC for c in range(13, 16)},
    16: Category.BACKGROUND,
}
_CATEGORY = {GestureClass(k): v for k, v in _CATEGORY.items()}

GESTURES = tuple(c for c in GestureClass if c.is_gesture)
N_CLASSES = len(GestureClass)
BACKGROUND = GestureClass.NON_GESTURE


class FormatError(ValueError):
    """Raised on malformed sequence, annotation or prediction text."""


@dataclass(frozen=True)
class SkeletonFrame:
    timestamp: int
    joints: np.ndarray  # (26, 3), meters


@dataclass(frozen=True, eq=False)
class GestureSequence:
    id: str
    timestamps: np.ndarray  # (T,) int64 milliseconds
    joints: np.ndarray  # (T, 26, 3) float64

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        js = np.asarray(self.joints, dtype=np.float64)
        if js.ndim != 3 or js.shape[1:] != (N_JOINTS, 3):
            raise ValueError(f"joints must be (T, {N_JOINTS}, 3), got {js.shape}")
        if len(ts) != len(js) or len(ts) == 0:
            raise ValueError("sequence needs at least one frame and one timestamp per frame")
        if np.any(ts < 0) or np.any(np.diff(ts) <= 0):
            raise ValueError("timestamps must be non-negative and strictly increasing")
        if not np.all(np.isfinite(js)):
            raise ValueError("non-finite joint coordinates")
        ts.flags.writeable = False
        js.flags.writeable = False
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "joints", js)

    def __len__(self) -> int:
        return len(self.timestamps)

    def frame(self, i: int) -> SkeletonFrame:
        return SkeletonFrame(int(self.timestamps[i]), self.joints[i])

    def __eq__(self, other):
        if not isinstance(other, GestureSequence):
            return NotImplemented
        return (
            self.id == other.id
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.joints, other.joints)
        )

    __hash__ = None


@dataclass(frozen=True, order=True)
class GestureInterval:
    start: int
    end: int
    label: GestureClass
    last_frame_used: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "label", GestureClass(self.label))
        if self.label is BACKGROUND:
            raise ValueError("an interval can not carry the non-gesture label")
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"invalid interval [{self.start}, {self.end}]")

    @property
    def length(self) -> int:
        return interval_length(self.start, self.end)

    def overlap(self, other: "GestureInterval") -> int:
        return interval_overlap(self.start, self.end, other.start, other.end)


def interval_length(start: int, end: int) -> int:
    return end - start + 1


def interval_overlap(s0: int, e0: int, s1: int, e1: int) -> int:
    """Number of frames shared by two inclusive intervals."""
    return max(0, min(e0, e1) - max(s0, s1) + 1)


def interval_iou(s0: int, e0: int, s1: int, e1: int) -> float:
    inter = interval_overlap(s0, e0, s1, e1)
    union = interval_length(s0, e0) + interval_length(s1, e1) - inter
    return inter / union


# ---------------------------------------------------------------------------
# text formats

_SPLIT = re.compile(r"[;,]")


def _fields(line: str) -> list[str]:
    return [f.strip() for f in _SPLIT.split(line.strip())]


def _fmt(x: float) -> str:
    return repr(float(x))


def parse_sequence_file(text: str, seq_id: str = "") -> GestureSequence:
    """Parse ``idx;t_ms;x0;y0;z0;...;x25;y25;z25`` rows (comma also accepted)."""
    stamps, rows = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        fields = _fields(line)
        if len(fields) != 2 + 3 * N_JOINTS:
            raise FormatError(
                f"line {lineno}: expected {2 + 3 * N_JOINTS} fields, got {len(fields)}"
            )
        try:
            int(fields[0])
            stamps.append(int(fields[1]))
            rows.append([float(v) for v in fields[2:]])
        except ValueError as err:
            raise FormatError(f"line {lineno}: {err}") from None
    if not rows:
        raise FormatError("empty sequence file")
    ts = np.array(stamps, dtype=np.int64)
    if np.any(np.diff(ts) <= 0):
        bad = int(np.argmax(np.diff(ts) <= 0)) + 2
        raise FormatError(f"timestamps not strictly increasing at frame {bad}")
    joints = np.array(rows, dtype=np.float64).reshape(-1, N_JOINTS, 3)
    try:
        return GestureSequence(seq_id, ts, joints)
    except ValueError as err:
        raise FormatError(str(err)) from None


def write_sequence_file(seq: GestureSequence) -> str:
    lines = []
    for i in range(len(seq)):
        coords = ";".join(_fmt(v) for v in seq.joints[i].ravel())
        lines.append(f"{i};{int(seq.timestamps[i])};{coords}")
    return "\n".join(lines) + "\n"


def _check_no_overlap(seq_id: str, intervals: list[GestureInterval]) -> None:
    for a, b in zip(intervals, intervals[1:]):
        if b.start <= a.end:
            raise FormatError(
                f"{seq_id}: overlapping ground-truth intervals "
                f"[{a.start}, {a.end}] and [{b.start}, {b.end}]"
            )


def parse_annotation_file(text: str) -> dict[str, list[GestureInterval]]:
    """Parse ``seq_id;LABEL;start;end[;LABEL;start;end...]`` lines."""
    out: dict[str, list[GestureInterval]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        fields = _fields(line)
        fields = [f for f in fields if f != ""]
        seq_id, rest = fields[0], fields[1:]
        if len(rest) % 3:
            raise FormatError(f"line {lineno}: fields after the id must come in triplets")
        intervals = []
        for k in range(0, len(rest), 3):
            try:
                label = GestureClass.parse(rest[k])
                start, end = int(rest[k + 1]), int(rest[k + 2])
            except ValueError as err:
                raise FormatError(f"line {lineno}: {err}") from None
            if label is BACKGROUND:
                raise FormatError(f"line {lineno}: non-gesture label in annotation")
            if end < start or start < 0:
                raise FormatError(f"line {lineno}: inverted interval [{start}, {end}]")
            intervals.append(GestureInterval(start, end, label))
        intervals.sort()
        _check_no_overlap(seq_id, intervals)
        out.setdefault(seq_id, [])
        out[seq_id].extend(intervals)
        out[seq_id].sort()
        _check_no_overlap(seq_id, out[seq_id])
    return out


def write_annotation_file(annotations: Mapping[str, Iterable[GestureInterval]]) -> str:
    lines = []
    for seq_id, intervals in annotations.items():
        parts = [seq_id]
        for g in sorted(intervals):
            parts += [g.label.name, str(g.start), str(g.end)]
        lines.append(";".join(parts))
    return "\n".join(lines) + "\n"


def parse_prediction_file(text: str) -> dict[str, list[GestureInterval]]:
    """Parse ``seq_id;LABEL;start;end;last_frame_used`` lines, file order kept."""
    out: dict[str, list[GestureInterval]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        fields = _fields(line)
        if len(fields) != 5:
            raise FormatError(f"line {lineno}: expected 5 fields, got {len(fields)}")
        try:
            label = GestureClass.parse(fields[1])
            start, end, used = (int(v) for v in fields[2:])
            pred = GestureInterval(start, end, label, used)
        except ValueError as err:
            raise FormatError(f"line {lineno}: {err}") from None
        out.setdefault(fields[0], []).append(pred)
    return out


def write_prediction_file(predictions: Mapping[str, Iterable[GestureInterval]]) -> str:
    lines = []
    for seq_id, preds in predictions.items():
        for p in preds:
            if p.last_frame_used is None:
                raise ValueError(f"{seq_id}: prediction {p} lacks last_frame_used")
            lines.append(f"{seq_id};{p.label.name};{p.start};{p.end};{p.last_frame_used}")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------

def resample_uniform(poses: np.ndarray, target: int) -> np.ndarray:
    """Linearly resample a (T, ...) pose slice to ``target`` samples.

    Endpoints are kept exactly; interior samples sit at uniform parameter
    positions ``i * (T - 1) / (target - 1)``.
    """
    poses = np.asarray(poses, dtype=np.float64)
    if len(poses) == 0:
        raise ValueError("cannot resample an empty slice")
    if target < 2:
        raise ValueError("target sample count must be at least 2")
    n = len(poses)
    if n == 1:
        return np.repeat(poses, target, axis=0)
    pos = np.arange(target) * (n - 1) / (target - 1)
    lo = np.minimum(np.floor(pos).astype(int), n - 2)
    frac = (pos - lo).reshape((-1,) + (1,) * (poses.ndim - 1))
    # a + f * (b - a) reproduces constant stretches exactly
    out = poses[lo] + frac * (poses[lo + 1] - poses[lo])
    out[0], out[-1] = poses[0], poses[-1]
    return out


def resample_slice(seq: GestureSequence, start: int, end: int, target: int = 30) -> np.ndarray:
    """Resample inclusive frame range ``[start, end]`` of a sequence."""
    if end < start or start < 0 or end >= len(seq):
        raise ValueError(f"empty or out-of-range slice [{start}, {end}]")
    return resample_uniform(seq.joints[start:end + 1], target)
