"""Contest metrics: matching, detection rate, false positives, Jaccard index, delays."""
from __future__ import annotations

import csv
import enum
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .skeleton import GESTURES, Category, GestureClass, GestureInterval

log = logging.getLogger(__name__)


class Outcome(enum.Enum):
    CORRECT = "correct"
    FALSE_POSITIVE = "false_positive"
    DISCARDED = "discarded"


@dataclass
class MatchResult:
    gt: list[GestureInterval]
    preds: list[GestureInterval]
    gt_match: list  # index into preds or None (missed)
    outcome: list[Outcome]
    duplicates: int = 0  # discarded predictions that also qualified for an already matched gt

    def correct(self, cls: GestureClass) -> int:
        return sum(1 for g, m in zip(self.gt, self.gt_match) if m is not None and g.label is cls)

    def false_positives(self, cls: GestureClass) -> int:
        return sum(1 for p, o in zip(self.preds, self.outcome) if o is Outcome.FALSE_POSITIVE and p.label is cls)

    def gt_count(self, cls: GestureClass) -> int:
        return sum(1 for g in self.gt if g.label is cls)


def _qualifies(p: GestureInterval, g: GestureInterval, min_overlap: float) -> bool:
    return p.label is g.label and p.overlap(g) > min_overlap * g.length


def match_detections(gt: Sequence[GestureInterval], preds: Sequence[GestureInterval],
                     min_overlap: float = 0.5) -> MatchResult:
    """Match predictions of one sequence to its ground truth.

    A prediction qualifies for a gt interval when the labels agree and the
    frame intersection is strictly larger than ``min_overlap * |g|``.  Each
    gt takes at most one prediction; the assignment is a maximum matching
    found by augmenting paths with gt in time order and candidates tried
    earliest first, so without contention every gt gets its earliest
    qualifying prediction.  Unmatched predictions that intersect some gt
    are DISCARDED, the rest are FALSE_POSITIVE.
    """
    gt = sorted(gt)
    preds = list(preds)
    for a, b in zip(gt, gt[1:]):
        if a.overlap(b):
            raise ValueError(f"overlapping ground truth intervals {a} and {b}")
    order = sorted(range(len(preds)), key=lambda i: (preds[i].start, preds[i].end, i))
    cand = [[i for i in order if _qualifies(preds[i], g, min_overlap)] for g in gt]
    owner: dict[int, int] = {}

    def augment(gi, seen):
        for pi in cand[gi]:
            if pi in seen:
                continue
            seen.add(pi)
            if pi not in owner or augment(owner[pi], seen):
                owner[pi] = gi
                return True
        return False

    for gi in range(len(gt)):
        augment(gi, set())
    gt_match = [None] * len(gt)
    for pi, gi in owner.items():
        gt_match[gi] = pi
    outcome, dup = [], 0
    for pi, p in enumerate(preds):
        if pi in owner:
            outcome.append(Outcome.CORRECT)
        elif any(p.overlap(g) for g in gt):
            outcome.append(Outcome.DISCARDED)
            dup += any(pi in c for c in cand)
        else:
            outcome.append(Outcome.FALSE_POSITIVE)
    return MatchResult(gt, preds, gt_match, outcome, dup)


def detection_rate(matches: Sequence[MatchResult], cls: GestureClass) -> float:
    """Correct detections over gt count; NaN when the class is absent."""
    n = sum(m.gt_count(cls) for m in matches)
    return sum(m.correct(cls) for m in matches) / n if n else math.nan


def fp_score(matches: Sequence[MatchResult], cls: GestureClass) -> float:
    n = sum(m.gt_count(cls) for m in matches)
    return sum(m.false_positives(cls) for m in matches) / n if n else math.nan


def _merge(intervals):
    """Union of inclusive intervals as sorted disjoint (start, end) pairs."""
    out = []
    for s, e in sorted(intervals):
        if out and s <= out[-1][1] + 1:
            out[-1][1] = max(out[-1][1], e)
        else:
            out.append([s, e])
    return out


def _measure(merged) -> int:
    return sum(e - s + 1 for s, e in merged)


def _intersection(a, b) -> int:
    i = j = total = 0
    while i < len(a) and j < len(b):
        lo, hi = max(a[i][0], b[j][0]), min(a[i][1], b[j][1])
        if hi >= lo:
            total += hi - lo + 1
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return total


def sequence_jaccard(gt: Sequence[GestureInterval], preds: Sequence[GestureInterval], cls: GestureClass):
    """Frame-set Jaccard for one class in one sequence; None when both sets are empty."""
    a = _merge([(g.start, g.end) for g in gt if g.label is cls])
    b = _merge([(p.start, p.end) for p in preds if p.label is cls])
    inter = _intersection(a, b)
    union = _measure(a) + _measure(b) - inter
    return inter / union if union else None


def jaccard_index(gt: Mapping[str, Sequence[GestureInterval]], preds: Mapping[str, Sequence[GestureInterval]],
                  cls: GestureClass) -> float:
    """Mean per-sequence Jaccard over sequences where the class appears in gt or predictions."""
    vals = []
    for sid in sorted(set(gt) | set(preds)):
        v = sequence_jaccard(gt.get(sid, ()), preds.get(sid, ()), cls)
        if v is not None:
            vals.append(v)
    return sum(vals) / len(vals) if vals else math.nan


def delay_stats(matches: Sequence[MatchResult], cls: GestureClass | None = None):
    """Mean (from_start, from_end) over correct matches, in frames."""
    ds, de = [], []
    for m in matches:
        for g, pi in zip(m.gt, m.gt_match):
            if pi is None or (cls is not None and g.label is not cls):
                continue
            lfu = m.preds[pi].last_frame_used
            if lfu is None:
                log.warning("prediction %s has no last_frame_used, excluded from delays", m.preds[pi])
                continue
            ds.append(lfu - g.start)
            de.append(lfu - g.end)
    if not ds:
        return math.nan, math.nan
    return sum(ds) / len(ds), sum(de) / len(de)


def match_all(gt: Mapping[str, Sequence[GestureInterval]], preds: Mapping[str, Sequence[GestureInterval]],
              min_overlap: float = 0.5) -> list[MatchResult]:
    """Per-sequence matching in sorted sequence-id order."""
    return [match_detections(gt.get(s, ()), preds.get(s, ()), min_overlap)
            for s in sorted(set(gt) | set(preds))]


def _nanmean(xs):
    xs = [x for x in xs if not math.isnan(x)]
    return sum(xs) / len(xs) if xs else math.nan


@dataclass
class MetricRow:
    name: str
    detection_rate: float
    fp_score: float
    jaccard: float
    delay_from_start: float
    delay_from_end: float
    count: int = 0


@dataclass
class EvalReport:
    classes: list[MetricRow]
    categories: list[MetricRow]
    aggregate: MetricRow
    duplicates: int = 0
    extra: dict = field(default_factory=dict)

    def rows(self) -> list[MetricRow]:
        return self.classes + self.categories + [self.aggregate]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "count", "detection_rate", "fp_score", "jaccard", "delay_from_start", "delay_from_end"])
        for r in self.rows():
            w.writerow([r.name, r.count] + [_fmt(v) for v in (r.detection_rate, r.fp_score, r.jaccard,
                                                                 r.delay_from_start, r.delay_from_end)])
        return buf.getvalue()

    def table(self) -> str:
        head = f"{'name':<10} {'n':>4} {'DR':>6} {'FP':>6} {'JI':>6} {'d_start':>8} {'d_end':>8}"
        lines = [head, "-" * len(head)]
        for r in self.rows():
            if r is self.aggregate or r is self.categories[0]:
                lines.append("-" * len(head))
            lines.append(f"{r.name:<10} {r.count:>4} {r.detection_rate:>6.3f} {r.fp_score:>6.3f} "
                         f"{r.jaccard:>6.3f} {r.delay_from_start:>8.2f} {r.delay_from_end:>8.2f}")
        lines.append(f"duplicate detections: {self.duplicates}")
        return "\n".join(lines)


def _fmt(v: float) -> str:
    return "nan" if math.isnan(v) else f"{v:.6f}"


def evaluate(gt: Mapping[str, Sequence[GestureInterval]], preds: Mapping[str, Sequence[GestureInterval]],
             min_overlap: float = 0.5) -> EvalReport:
    """Full report: per class, per category and the unweighted class mean."""
    matches = match_all(gt, preds, min_overlap)
    rows = {}
    for c in GESTURES:
        count = sum(m.gt_count(c) for m in matches)
        ds, de = delay_stats(matches, c)
        rows[c] = MetricRow(c.name, detection_rate(matches, c), fp_score(matches, c),
                            jaccard_index(gt, preds, c), ds, de, count)

    def rollup(name, members):
        present = [rows[c] for c in members if rows[c].count]
        return MetricRow(name, *(_nanmean([getattr(r, a) for r in present]) for a in
                                 ("detection_rate", "fp_score", "jaccard", "delay_from_start", "delay_from_end")),
                         sum(r.count for r in present))

    cats = [rollup(cat.value, [c for c in GESTURES if c.category is cat]) for cat in Category]
    agg = rollup("aggregate", GESTURES)
    return EvalReport([rows[c] for c in GESTURES], cats, agg, sum(m.duplicates for m in matches))


def overlap_sweep(gt: Mapping[str, Sequence[GestureInterval]], preds: Mapping[str, Sequence[GestureInterval]],
                  thresholds: Sequence[float]) -> list[tuple[float, float]]:
    """Aggregate detection rate at each minimum-overlap threshold."""
    if list(thresholds) != sorted(thresholds) or any(not 0 <= t <= 1 for t in thresholds):
        raise ValueError("thresholds must be ascending within [0, 1]")
    out = []
    for t in thresholds:
        matches = match_all(gt, preds, t)
        out.append((float(t), _nanmean([detection_rate(matches, c) for c in GESTURES])))
    return out


def sweep_csv(curves: Mapping[str, Sequence[tuple[float, float]]]) -> str:
    """One row per threshold, one column per method."""
    names = list(curves)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["threshold"] + names)
    for i, (t, _) in enumerate(curves[names[0]]):
        w.writerow([f"{t:.4f}"] + [_fmt(curves[n][i][1]) for n in names])
    return buf.getvalue()
