import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gesturespot.synth import GenConfig, generate_sequence
from gesturespot.skeleton import GestureClass

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_sequence():
    cfg = GenConfig(n_sequences=1, seed=3)
    seq, gts = generate_sequence("seq0000", [GestureClass.WAVE, GestureClass.LEFT, GestureClass.ONE], 11, cfg)
    return seq, gts


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
