import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gesturespot.evaluate import (
    Outcome,
    delay_stats,
    detection_rate,
    evaluate,
    fp_score,
    jaccard_index,
    match_all,
    match_detections,
    overlap_sweep,
    sequence_jaccard,
    sweep_csv,
)
from gesturespot.skeleton import GESTURES, GestureClass, GestureInterval

from oracles import brute_false_positives, brute_jaccard, brute_max_matching

G = GestureClass


def random_instance(rng, length=120, labels=(G.ONE, G.TWO, G.LEFT)):
    gt, cursor = [], int(rng.integers(0, 10))
    while True:
        n = int(rng.integers(5, 30))
        if cursor + n >= length:
            break
        gt.append(GestureInterval(cursor, cursor + n - 1, labels[rng.integers(len(labels))]))
        cursor += n + int(rng.integers(0, 15))
    preds = []
    for _ in range(rng.integers(0, 7)):
        s = int(rng.integers(0, length - 1))
        e = int(rng.integers(s, min(length, s + 40)))
        preds.append(GestureInterval(s, e, labels[rng.integers(len(labels))], e))
    return gt, preds


def test_match_examples():
    g = [GestureInterval(100, 140, G.ONE)]
    assert match_detections(g, [GestureInterval(95, 121, G.ONE, 121)]).outcome == [Outcome.CORRECT]
    assert match_detections(g, [GestureInterval(95, 118, G.ONE, 118)]).outcome == [Outcome.DISCARDED]
    assert match_detections(g, [GestureInterval(0, 20, G.ONE, 20)]).outcome == [Outcome.FALSE_POSITIVE]
    # wrong label with full overlap is discarded, not a false positive
    assert match_detections(g, [GestureInterval(100, 140, G.TWO, 140)]).outcome == [Outcome.DISCARDED]


def test_earliest_prediction_wins_and_duplicates_counted():
    g = [GestureInterval(100, 140, G.ONE)]
    late, early = GestureInterval(105, 140, G.ONE, 140), GestureInterval(100, 130, G.ONE, 130)
    m = match_detections(g, [late, early])
    assert m.gt_match == [1]
    assert m.outcome == [Outcome.DISCARDED, Outcome.CORRECT]
    assert m.duplicates == 1


def test_overlapping_ground_truth_is_rejected():
    with pytest.raises(ValueError):
        match_detections([GestureInterval(0, 10, G.ONE), GestureInterval(10, 20, G.TWO)], [])


def test_rates_by_hand():
    gt = {f"s{i}": [GestureInterval(10, 30, G.WAVE)] for i in range(36)}
    preds = {f"s{i}": [GestureInterval(10, 30, G.WAVE, 29)] for i in range(27)}
    for i in range(9):
        preds.setdefault(f"s{i}", []).append(GestureInterval(50, 60, G.WAVE, 60))
    m = match_all(gt, preds)
    assert detection_rate(m, G.WAVE) == 0.75
    assert fp_score(m, G.WAVE) == 0.25
    assert math.isnan(detection_rate(m, G.ONE))
    empty = match_all(gt, {})
    assert detection_rate(empty, G.WAVE) == 0.0 and fp_score(empty, G.WAVE) == 0.0


def test_jaccard_by_hand():
    assert sequence_jaccard([GestureInterval(10, 20, G.ONE)], [GestureInterval(15, 25, G.ONE)], G.ONE) == 6 / 16
    exact = [GestureInterval(3, 9, G.ONE)]
    assert sequence_jaccard(exact, exact, G.ONE) == 1.0
    assert sequence_jaccard([], [], G.ONE) is None


def test_delays_by_hand():
    gt = [GestureInterval(50, 90, G.ONE)]
    for lfu, start, end in [(69, 19, -21), (45, -5, -45)]:
        m = match_detections(gt, [GestureInterval(50, 90, G.ONE, lfu)])
        assert delay_stats([m]) == (start, end)


def test_missing_last_frame_is_skipped(caplog):
    m = match_detections([GestureInterval(50, 90, G.ONE)], [GestureInterval(50, 90, G.ONE)])
    ds, de = delay_stats([m])
    assert math.isnan(ds) and "last_frame_used" in caplog.text


def test_metrics_match_frame_set_oracle():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        gt, preds = random_instance(rng)
        m = match_detections(gt, preds)
        assert len(m.outcome) == len(preds)
        for c in (G.ONE, G.TWO, G.LEFT):
            assert m.correct(c) == brute_max_matching([g for g in gt if g.label is c],
                                                      [p for p in preds if p.label is c])
            assert m.false_positives(c) == brute_false_positives(gt, preds, c)
            assert sequence_jaccard(gt, preds, c) == brute_jaccard(gt, preds, c)


@given(st.integers(0, 2**32 - 1))
def test_partition_and_bounds(seed):
    gt, preds = random_instance(np.random.default_rng(seed))
    m = match_detections(gt, preds)
    matched = [p for p in m.gt_match if p is not None]
    assert len(matched) == len(set(matched))
    assert sum(o is Outcome.CORRECT for o in m.outcome) == len(matched)
    for c in GESTURES:
        assert m.correct(c) <= m.gt_count(c)


def test_sweep_is_non_increasing():
    rng = np.random.default_rng(11)
    thresholds = [round(0.05 * i, 2) for i in range(21)]
    for k in range(100):
        gt, preds = {}, {}
        for s in range(3):
            gt[f"s{s}"], preds[f"s{s}"] = random_instance(rng)
        curve = [dr for _, dr in overlap_sweep(gt, preds, thresholds)]
        finite = [d for d in curve if not math.isnan(d)]
        assert all(a >= b for a, b in zip(finite, finite[1:]))


def test_sweep_oracle_is_flat():
    rng = np.random.default_rng(3)
    gt = {f"s{i}": random_instance(rng)[0] for i in range(5)}
    preds = {k: [GestureInterval(g.start, g.end, g.label, g.end) for g in v] for k, v in gt.items()}
    thresholds = [0.0, 0.25, 0.5, 0.75, 0.95, 1.0]
    curve = overlap_sweep(gt, preds, thresholds)
    # at 1.0 even an exact copy fails the strict inequality
    assert [dr for _, dr in curve[:-1]] == [1.0] * 5
    assert curve[-1][1] == 0.0
    with pytest.raises(ValueError):
        overlap_sweep(gt, preds, [0.5, 0.2])


def test_report_is_pure_and_complete():
    rng = np.random.default_rng(5)
    gt, preds = {}, {}
    for s in range(4):
        gt[f"s{s}"], preds[f"s{s}"] = random_instance(rng)
    a, b = evaluate(gt, preds), evaluate(gt, preds)
    assert a.to_csv() == b.to_csv()
    lines = a.to_csv().splitlines()
    assert len(lines) == 1 + 16 + 5 + 1
    assert lines[-1].startswith("aggregate")
    assert "DR" in a.table()


def test_oracle_report():
    rng = np.random.default_rng(9)
    gt = {f"s{i}": random_instance(rng, labels=tuple(GESTURES))[0] for i in range(6)}
    preds = {k: [GestureInterval(g.start, g.end, g.label, g.end) for g in v] for k, v in gt.items()}
    r = evaluate(gt, preds)
    assert (r.aggregate.detection_rate, r.aggregate.fp_score, r.aggregate.jaccard) == (1.0, 0.0, 1.0)
    assert jaccard_index(gt, preds, gt["s0"][0].label) == 1.0
    assert "threshold" in sweep_csv({"oracle": overlap_sweep(gt, preds, [0.0, 0.5])})
