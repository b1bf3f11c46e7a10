import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gesturespot.skeleton import (
    DEFAULT_PARENTS,
    N_JOINTS,
    FormatError,
    GestureClass,
    GestureInterval,
    GestureSequence,
    interval_iou,
    interval_overlap,
    parse_annotation_file,
    parse_prediction_file,
    parse_sequence_file,
    resample_uniform,
    segments,
    write_annotation_file,
    write_prediction_file,
    write_sequence_file,
)

G = GestureClass


def test_tree_has_25_segments_rooted_at_wrist():
    segs = segments()
    assert len(segs) == 25
    assert DEFAULT_PARENTS[1] == -1
    # every joint but the wrist appears exactly once as a child
    assert sorted(c for _, c in segs) == [j for j in range(N_JOINTS) if j != 1]


def test_interval_arithmetic():
    g = GestureInterval(100, 140, G.ONE)
    assert g.length == 41
    assert interval_overlap(95, 121, 100, 140) == 22
    assert interval_overlap(0, 5, 6, 9) == 0
    assert interval_iou(50, 60, 40, 90) == pytest.approx(11 / 51)


def test_interval_rejects_background_and_inversion():
    with pytest.raises(ValueError):
        GestureInterval(0, 3, G.NON_GESTURE)
    with pytest.raises(ValueError):
        GestureInterval(5, 3, G.ONE)


def test_category_of_each_class():
    assert G.ONE.category.value == "static"
    assert G.CROSS.category.value == "coarse"
    assert G.PINCH.category.value == "fine"
    assert G.KNOB.category.value == "periodic"


def _seq(rng, n=4):
    return GestureSequence("s", np.arange(n) * 50, rng.normal(size=(n, N_JOINTS, 3)))


def test_sequence_round_trip(rng):
    seq = _seq(rng)
    assert parse_sequence_file(write_sequence_file(seq), "s") == seq


def test_sequence_accepts_commas(rng):
    text = write_sequence_file(_seq(rng)).replace(";", ",")
    assert len(parse_sequence_file(text)) == 4


@pytest.mark.parametrize("mutate, msg", [
    (lambda rows: rows[:1] + [rows[1].rsplit(";", 1)[0]] + rows[2:], "fields"),
    (lambda rows: rows[:1] + [rows[1].replace(";", ";x", 3)] + rows[2:], "line 2"),
    (lambda rows: [rows[1], rows[0]] + rows[2:], "increasing"),
    (lambda rows: [], "empty"),
])
def test_sequence_errors(rng, mutate, msg):
    rows = write_sequence_file(_seq(rng)).splitlines()
    with pytest.raises(FormatError, match=msg):
        parse_sequence_file("\n".join(mutate(rows)))


def test_annotation_round_trip_and_sorting():
    text = "a;WAVE;40;80;ONE;5;20\nb;knob;1;2\n"
    ann = parse_annotation_file(text)
    assert [g.label for g in ann["a"]] == [G.ONE, G.WAVE]
    assert parse_annotation_file(write_annotation_file(ann)) == ann


@pytest.mark.parametrize("text", ["a;JUMP;1;2", "a;ONE;5;2", "a;ONE;1;10;TWO;10;12", "a;ONE;1"])
def test_annotation_errors(text):
    with pytest.raises(FormatError):
        parse_annotation_file(text)


def test_prediction_format():
    preds = {"s": [GestureInterval(40, 80, G.WAVE, 59)]}
    text = write_prediction_file(preds)
    assert text == "s;WAVE;40;80;59\n"
    assert parse_prediction_file(text) == preds
    with pytest.raises(ValueError):
        write_prediction_file({"s": [GestureInterval(1, 2, G.ONE)]})
    with pytest.raises(FormatError):
        parse_prediction_file("s;WAVE;40;80")


@given(st.integers(1, 40), st.integers(2, 40))
def test_resample_keeps_endpoints(n, target):
    poses = np.arange(n * 3, dtype=float).reshape(n, 3) ** 1.5
    out = resample_uniform(poses, target)
    assert out.shape == (target, 3)
    assert np.array_equal(out[0], poses[0]) and np.array_equal(out[-1], poses[-1])


def test_resample_linear_is_exact():
    line = np.linspace(0, 1, 7)[:, None] * np.array([1.0, 2.0, 3.0])
    assert np.allclose(resample_uniform(line, 30), np.linspace(0, 1, 30)[:, None] * [1, 2, 3])
    with pytest.raises(ValueError):
        resample_uniform(line[:0], 30)
