import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gesturespot.features import frame_energies
from gesturespot.skeleton import GestureClass, write_annotation_file, write_sequence_file
from gesturespot.synth import (
    TABLE1_LENGTHS,
    GenConfig,
    block_ids,
    generate_dataset,
    generate_label_stream,
    generate_sequence,
    plan_dataset,
)

G = GestureClass


@pytest.fixture(scope="module")
def corpus():
    return generate_dataset(GenConfig(n_sequences=32, seed=5))


def test_lengths_within_table_bounds(corpus):
    _, ann = corpus
    for gts in ann.values():
        assert 3 <= len(gts) <= 5
        for g in gts:
            lo, hi = TABLE1_LENGTHS[g.label]
            assert lo <= g.length <= hi
        for a, b in zip(gts, gts[1:]):
            assert a.end < b.start


def test_knob_length_bounds():
    cfg = GenConfig()
    for seed in range(40):
        _, gts = generate_sequence("k", [G.KNOB], seed, cfg)
        assert 37 <= gts[0].length <= 79


def test_same_seed_same_bytes():
    cfg = GenConfig(n_sequences=4, seed=9)
    a, b = generate_dataset(cfg), generate_dataset(cfg)
    assert [write_sequence_file(s) for s in a[0]] == [write_sequence_file(s) for s in b[0]]
    assert write_annotation_file(a[1]) == write_annotation_file(b[1])


def test_sequences_do_not_depend_on_plan_order():
    cfg = GenConfig(n_sequences=4, seed=9)
    sid, seed, labels = plan_dataset(cfg)[2]
    seq, _ = generate_sequence(sid, labels, seed, cfg)
    assert seq == generate_dataset(cfg)[0][2]


def test_blocks_are_class_balanced():
    cfg = GenConfig(n_sequences=64, seed=1)
    plan = dict((sid, labels) for sid, _, labels in plan_dataset(cfg))
    for ids in block_ids(cfg):
        counts = np.bincount([int(c) for sid in ids for c in plan[sid]], minlength=16)
        assert counts.min() == counts.max()


def test_background_always_moves(corpus):
    seqs, ann = corpus
    cfg = GenConfig()
    for seq in seqs[:8]:
        step = np.linalg.norm(np.diff(seq.joints[:, 1], axis=0), axis=1)
        inside = np.zeros(len(seq), bool)
        for g in ann[seq.id]:
            inside[g.start:g.end + 1] = True
        bg = ~inside[1:] & ~inside[:-1]
        assert np.quantile(step[bg], 0.01) > 0.5 * cfg.min_speed


def test_static_holds_are_low_energy(corpus):
    seqs, ann = corpus
    for seq in seqs:
        energy = frame_energies(seq.joints)
        inside = np.zeros(len(seq), bool)
        for g in ann[seq.id]:
            inside[g.start:g.end + 1] = True
        p10 = np.quantile(energy[1:][~inside[1:]], 0.10)
        for g in ann[seq.id]:
            if g.label.category.value == "static":
                # skip the short ramp into the pose
                assert energy[g.start + 4:g.end + 1].mean() < p10


def test_hand_distance_from_origin(corpus):
    seqs, _ = corpus
    d = np.linalg.norm(np.concatenate([s.joints for s in seqs]), axis=-1)
    assert 0.3 < d.mean() < 0.6
    assert d.min() > 0.1


def test_timestamps_near_20_fps(corpus):
    seqs, _ = corpus
    dt = np.concatenate([np.diff(s.timestamps) for s in seqs])
    assert 40 <= dt.min() and dt.max() <= 60 and abs(dt.mean() - 50) < 1


def test_infeasible_config():
    with pytest.raises(ValueError):
        generate_sequence("x", [G.KNOB] * 5, 0, GenConfig(max_frames=100))
    with pytest.raises(ValueError):
        GenConfig(gestures_min=4, gestures_max=3)


def test_label_stream():
    bg = G.NON_GESTURE
    s = generate_label_stream([(bg, 10), (G.WAVE, 30), (bg, 15)])
    assert len(s) == 55 and (s[10:40] == int(G.WAVE)).all()
    assert len(generate_label_stream([])) == 0


@given(st.lists(st.tuples(st.sampled_from(list(GestureClass)), st.integers(0, 50)), max_size=20))
def test_label_stream_length(pattern):
    assert len(generate_label_stream(pattern)) == sum(n for _, n in pattern)
