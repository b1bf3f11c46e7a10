import numpy as np
import pytest

from gesturespot.detect import vote_stream
from gesturespot.features import angle_stream
from gesturespot.pipeline import (
    STRATEGIES,
    DetectConfig,
    OnlineVotingDetector,
    detect_all,
    fit_ridge,
    load_models,
    save_models,
    strategy_of,
    time_steps,
    train_strategy,
)
from gesturespot.synth import GenConfig, generate_dataset
from gesturespot.tcn import TrainConfig

TINY = TrainConfig(epochs=1, folds=2, channels=(6, 4), kernel=3, eval_every=50)


@pytest.fixture(scope="module")
def corpus():
    seqs, ann = generate_dataset(GenConfig(n_sequences=16, seed=21))
    return seqs[:12], seqs[12:], ann


@pytest.fixture(scope="module")
def trained(corpus):
    train, _, ann = corpus
    dcfg = {s: DetectConfig(strategy=s, proposal_L=40, segment_steps=10, augment=1) for s in STRATEGIES}
    return {s: (train_strategy(train, ann, TINY, dcfg[s]), dcfg[s]) for s in STRATEGIES}


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_every_strategy_trains_and_detects(trained, corpus, strategy):
    _, test, _ = corpus
    models, dcfg = trained[strategy]
    assert strategy_of(models) == strategy
    preds = detect_all(test, models, dcfg)
    assert sorted(preds) == sorted(s.id for s in test)
    for seq in test:
        for p in preds[seq.id]:
            assert 0 <= p.start <= p.end < len(seq)
            assert p.last_frame_used is not None and p.last_frame_used < len(seq)


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_saved_models_detect_identically(trained, corpus, strategy, tmp_path):
    _, test, _ = corpus
    models, dcfg = trained[strategy]
    save_models(models, tmp_path)
    back = load_models(tmp_path)
    assert detect_all(test[:2], back, dcfg) == detect_all(test[:2], models, dcfg)


def test_baseline_thresholds_are_stored(trained):
    thr = trained["baseline"][0]["baseline"].extras["thresholds"]
    assert thr.shape == (17,) and thr[-1] == 0.0 and (thr >= 0).all()


def test_online_detector_matches_batch_voting(trained, corpus):
    _, test, _ = corpus
    ens = trained["voting"][0]["voting"]
    joints = test[0].joints[:60]
    labels, used = vote_stream(angle_stream(joints), ens)
    det = OnlineVotingDetector(ens)
    out = [r for r in (det.step(f) for f in joints) if r is not None] + det.votes.flush()
    assert [lab for _, lab, _ in out] == labels.tolist()
    assert [u for _, _, u in out] == used.tolist()


def test_time_steps_shape(trained, corpus):
    ens = trained["voting"][0]["voting"]
    t = time_steps(ens, corpus[1][0].joints, steps=25)
    assert t.shape == (25,) and (t > 0).all()


def test_ridge_recovers_linear_map(rng):
    a = rng.normal(size=(200, 5))
    w = rng.normal(size=(5, 2))
    y = a @ w + np.array([0.3, -0.1])
    coef = fit_ridge(a, y, 1e-9)
    assert np.allclose(coef[:-1], w, atol=1e-6) and np.allclose(coef[-1], [0.3, -0.1], atol=1e-6)


def test_detect_config_validation():
    with pytest.raises(ValueError):
        DetectConfig(strategy="nope")
    with pytest.raises(ValueError):
        DetectConfig(w_i=0)
    with pytest.raises(ValueError):
        DetectConfig(group3_variant="xyz")
