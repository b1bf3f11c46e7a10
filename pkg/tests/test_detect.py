import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gesturespot.detect import (
    FsmState,
    Phase,
    ProposalWindow,
    VoteAccumulator,
    apply_thresholds,
    calibrate_thresholds,
    chunks_to_predictions,
    decode_targets,
    energy_proposals,
    fsm_step,
    match_and_fuse,
    postprocess_chunks,
    regression_targets,
    run_fsm,
    variable_window_detect,
    vote_labels,
)
from gesturespot.detect.proposal import proposal_indices, suppress_duplicates
from gesturespot.skeleton import N_CLASSES, N_JOINTS, GestureClass, GestureInterval
from gesturespot.synth import generate_label_stream as stream

G = GestureClass
BG = int(G.NON_GESTURE)

label_runs = st.lists(st.tuples(st.sampled_from([BG, BG, 0, 1, 6, 14]), st.integers(1, 30)), max_size=12)


# ---------------------------------------------------------------- voting

def test_unanimous_windows_label_every_frame():
    labels, used = vote_labels(np.full(81, 3), 100, 20)
    assert (labels == 3).all()
    assert (used == np.minimum(np.arange(100) + 19, 99)).all()


def test_vote_majority_and_tie():
    # frame 1 of a length-3 stream with n=2 sees windows 0 and 1
    labels, _ = vote_labels([5, 2], 3, 2)
    assert labels.tolist() == [5, 2, 2]


@given(st.lists(st.integers(0, 16), min_size=1, max_size=60), st.integers(1, 20))
def test_accumulator_matches_batch_voting(verdicts, n):
    length = len(verdicts) + n - 1
    labels, used = vote_labels(verdicts, length, n)
    acc = VoteAccumulator(n)
    out = [acc.push(v) for v in verdicts] + acc.flush()
    assert [f for f, _, _ in out] == list(range(length))
    assert [lab for _, lab, _ in out] == labels.tolist()
    assert [u for _, _, u in out] == used.tolist()
    # every frame is final n - 1 frames after it, except where the stream ends first
    assert all(u - f == n - 1 for f, _, u in out[:len(verdicts)])


def test_postprocess_rule_a():
    s = stream([(G.ONE, 12), (G.TWO, 5), (BG, 4)])
    assert postprocess_chunks(s).tolist() == [0] * 12 + [BG] * 9


def test_postprocess_rule_b():
    # |C0| = 5 < |C1| = 12 and 5 < n: C0 goes
    s = stream([(BG, 3), (G.ONE, 5), (G.TWO, 12), (BG, 3)])
    assert postprocess_chunks(s).tolist() == [BG] * 8 + [1] * 12 + [BG] * 3


def test_postprocess_short_chunk_merge():
    assert (postprocess_chunks(stream([(BG, 3), (G.ONE, 8), (BG, 3)])) == BG).all()
    kept = postprocess_chunks(stream([(BG, 3), (G.ONE, 9), (BG, 3)]))
    assert (kept == 0).sum() == 9


def test_postprocess_long_chunks_survive():
    s = stream([(G.ONE, 25), (G.TWO, 25)])
    assert np.array_equal(postprocess_chunks(s), s)


@given(label_runs)
def test_postprocess_is_idempotent(runs):
    s = stream(runs)
    once = postprocess_chunks(s)
    assert np.array_equal(postprocess_chunks(once), once)


def test_chunks_to_predictions():
    labels = stream([(BG, 40), (G.WAVE, 41), (BG, 10)])
    used = np.minimum(np.arange(91) + 19, 90)
    assert chunks_to_predictions(labels, used) == [GestureInterval(40, 80, G.WAVE, 59)]
    assert chunks_to_predictions(np.zeros(0, int), np.zeros(0, int)) == []
    two = stream([(G.ONE, 10), (BG, 1), (G.ONE, 10)])
    assert len(chunks_to_predictions(two, np.arange(21))) == 2


# ---------------------------------------------------------------- fsm

def test_fsm_emits_after_tenth_background_frame():
    s = stream([(G.WAVE, 30), (BG, 15)])
    state, emitted = FsmState(), []
    for f, lab in enumerate(s):
        state, out = fsm_step(state, lab)
        if out is not None:
            emitted.append((f, out))
    assert emitted == [(39, GestureInterval(0, 29, G.WAVE, 39))]


def test_fsm_ignores_isolated_frames():
    s = stream([(BG, 12), (G.ONE, 1), (BG, 6), (G.ONE, 1), (BG, 6), (G.ONE, 1), (BG, 30)])
    assert run_fsm(s) == []


def test_fsm_stays_idle_on_background():
    state = FsmState()
    for _ in range(200):
        state, out = fsm_step(state, BG)
        assert out is None and state.phase is Phase.IDLE
    assert len(state.buffer) == 10


def test_fsm_modal_class_and_reentry():
    s = stream([(BG, 10), (G.WAVE, 20), (G.DENY, 5), (BG, 4), (G.WAVE, 6), (BG, 20)])
    out = run_fsm(s)
    assert out == [GestureInterval(10, 44, G.WAVE, 54)]


@given(label_runs)
def test_fsm_is_deterministic_and_valid(runs):
    s = stream(runs)
    a, b = run_fsm(s), run_fsm(s)
    assert a == b
    for g in a:
        assert 0 <= g.start <= g.end < len(s)
        assert g.last_frame_used is not None and g.last_frame_used < len(s)


# ---------------------------------------------------------------- proposals

def test_proposal_running_mean():
    assert proposal_indices([1, 1, 1, 5, 1]) == [3]
    assert proposal_indices([0.1] * 40) == []
    assert proposal_indices([]) == []


def test_stationary_sequence_has_no_proposals():
    joints = np.repeat(np.full((1, N_JOINTS, 3), 0.4), 50, axis=0)
    assert energy_proposals(joints) == []


def test_proposals_are_l_plus_one_frames(small_sequence):
    seq, _ = small_sequence
    props = energy_proposals(seq.joints)
    assert props and all(p.end - p.start == 10 for p in props)
    assert props[0].start > 0


def test_regression_targets():
    assert regression_targets(GestureInterval(100, 140, G.ONE), 80) == (0.5, 0.5)
    assert regression_targets(GestureInterval(80, 160, G.ONE), 80) == (0.5, 1.0)
    with pytest.raises(ValueError):
        regression_targets(GestureInterval(300, 310, G.ONE), 80)


@given(st.integers(0, 79), st.integers(0, 79), st.integers(0, 500))
def test_targets_round_trip(a, b, ws):
    s, e = ws + min(a, b), ws + max(a, b)
    g = GestureInterval(s, e, G.LEFT)
    assert decode_targets(*regression_targets(g, ws), ws) == (s, e)


def test_match_and_fuse():
    tiny = ProposalWindow(50, 60, 1.0, int(G.LEFT), 0.9)
    assert match_and_fuse(tiny, int(G.LEFT), (40, 90)) == GestureInterval(40, 90, G.LEFT, 60)
    assert match_and_fuse(tiny, int(G.RIGHT), (40, 90)) is None
    assert match_and_fuse(tiny, int(G.LEFT), (61, 90)) is None
    assert match_and_fuse(ProposalWindow(50, 60, 1.0, BG), BG, (40, 90)) is None


def test_duplicate_suppression():
    a = GestureInterval(10, 30, G.ONE, 20)
    assert suppress_duplicates([a, GestureInterval(25, 40, G.ONE, 30), GestureInterval(25, 40, G.TWO, 30)]) \
        == [a, GestureInterval(25, 40, G.TWO, 30)]


# ---------------------------------------------------------------- baseline

def probs_with(top_class, top, second_class, second):
    p = np.zeros(N_CLASSES)
    p[top_class], p[second_class] = top, second
    return p


def test_threshold_of_single_detection():
    thr = calibrate_thresholds([probs_with(3, 0.9, 4, 0.2)], [3])
    assert thr[3] == pytest.approx(0.55)
    # classes without a correct detection take the global mean
    assert thr[7] == pytest.approx(0.55)
    assert thr[BG] == 0.0


def test_pooled_thresholds():
    probs = [probs_with(3, 0.9, 4, 0.1), probs_with(5, 0.7, 4, 0.1)]
    assert np.allclose(calibrate_thresholds(probs, [3, 5], "pooled")[:BG], 0.45)
    per = calibrate_thresholds(probs, [3, 5])
    assert per[3] == pytest.approx(0.5) and per[5] == pytest.approx(0.4)


def test_zero_thresholds_pass_everything():
    probs = np.random.default_rng(0).dirichlet(np.ones(N_CLASSES), size=50)
    out = apply_thresholds(probs, np.zeros(N_CLASSES))
    assert np.array_equal(out, probs.argmax(axis=1))


@given(st.integers(0, 2**32 - 1), st.integers(0, 15), st.floats(0, 1), st.floats(0, 1))
def test_raising_a_threshold_never_adds_detections(seed, cls, lo, hi):
    lo, hi = sorted((lo, hi))
    probs = np.random.default_rng(seed).dirichlet(np.ones(N_CLASSES) * 0.3, size=40)
    t_lo, t_hi = np.zeros(N_CLASSES), np.zeros(N_CLASSES)
    t_lo[cls], t_hi[cls] = lo, hi
    assert (apply_thresholds(probs, t_hi) == cls).sum() <= (apply_thresholds(probs, t_lo) == cls).sum()


def oracle_classifier(gestures):
    """Confident in a gesture's class when the span is mostly inside it."""
    def classify(joints, spans):
        out = np.zeros((len(spans), N_CLASSES))
        for i, (s, e) in enumerate(spans):
            out[i, BG] = 1.0
            for g in gestures:
                ov = g.overlap(GestureInterval(s, e, g.label))
                if ov * 2 > e - s + 1:
                    out[i] = 0.0
                    out[i, int(g.label)] = 1.0
        return out
    return classify


def test_variable_window_scan_with_oracle():
    joints = np.zeros((120, N_JOINTS, 3))
    g = GestureInterval(30, 69, G.GRAB)
    preds = variable_window_detect(joints, oracle_classifier([g]), np.full(N_CLASSES, 0.5))
    assert len(preds) == 1
    p = preds[0]
    assert p.label is G.GRAB and p.start <= 30 and p.end >= 69
    assert p.last_frame_used is not None


def test_variable_window_scan_two_gestures_and_none():
    joints = np.zeros((200, N_JOINTS, 3))
    gs = [GestureInterval(20, 50, G.GRAB), GestureInterval(120, 160, G.WAVE)]
    preds = variable_window_detect(joints, oracle_classifier(gs), np.full(N_CLASSES, 0.5))
    assert [p.label for p in preds] == [G.GRAB, G.WAVE]
    assert preds[0].end < preds[1].start
    assert variable_window_detect(joints, oracle_classifier(gs), np.full(N_CLASSES, 1.1)) == []
