import logging

import numpy as np
import pytest

from spoofloc.data.types import SAMPLE_RATE, AudioClip, Label, SegmentAnnotation
from spoofloc.logs import ROOT_LOGGER
from spoofloc.settings import (
    BackboneConfig,
    MelConfig,
    MFDConfig,
    ModelConfig,
    RunConfig,
    Toggles,
    TrainConfig,
)


def _tone(freq: float = 220.0, duration_s: float = 1.0, amplitude: float = 0.5) -> np.ndarray:
    t = np.arange(int(round(duration_s * SAMPLE_RATE))) / SAMPLE_RATE
    return amplitude * np.sin(2 * np.pi * freq * t)


@pytest.fixture
def tone():
    return _tone


@pytest.fixture
def make_clip():
    def factory(clip_id: str = "clip", duration_s: float = 1.0, freq: float = 220.0) -> AudioClip:
        return AudioClip(id=clip_id, samples=_tone(freq, duration_s))

    return factory


@pytest.fixture
def all_real():
    def factory(duration_s: float):
        return [SegmentAnnotation(start_s=0.0, end_s=duration_s, label=Label.REAL)]

    return factory


@pytest.fixture
def tiny_model_config() -> ModelConfig:
    return ModelConfig(
        input_dim=8,
        backbone=BackboneConfig(n_res_blocks=2, conv_channels=8, blstm_units_total=8),
        mfd=MFDConfig(channels=4),
    )


@pytest.fixture
def tiny_run_config() -> RunConfig:
    return RunConfig(
        mel=MelConfig(n_mels=16),
        model=ModelConfig(
            input_dim=16,
            backbone=BackboneConfig(n_res_blocks=1, conv_channels=8, blstm_units_total=8),
            mfd=MFDConfig(channels=4),
        ),
        train=TrainConfig(
            epochs=1,
            batch_size=4,
            learning_rate=1e-3,
            dev_fraction=0.25,
            toggles=Toggles(use_mfd=False, use_ifp=False, use_befaug=False, use_inaug=False),
        ),
    )


@pytest.fixture
def labeled_corpus(make_clip):
    """Eight half-second clips; odd ones carry a fake middle region."""
    corpus = []
    for i in range(8):
        clip = make_clip(f"c{i}", duration_s=0.5, freq=150.0 + 40.0 * i)
        if i % 2:
            annotations = [
                SegmentAnnotation(start_s=0.0, end_s=0.2, label=Label.REAL),
                SegmentAnnotation(start_s=0.2, end_s=0.35, label=Label.FAKE),
                SegmentAnnotation(start_s=0.35, end_s=0.5, label=Label.REAL),
            ]
        else:
            annotations = [SegmentAnnotation(start_s=0.0, end_s=0.5, label=Label.REAL)]
        corpus.append((clip, annotations))
    return corpus


@pytest.fixture(autouse=True)
def _reset_package_logger():
    """CLI runs install handlers and stop propagation; undo that for caplog."""
    yield
    logger = logging.getLogger(ROOT_LOGGER)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    logger.propagate = True
    logger.setLevel(logging.NOTSET)
