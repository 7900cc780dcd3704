"""Log-mel frame features on the fixed hop grid (no center padding)."""

from typing import TYPE_CHECKING, Optional

import numpy as np
import librosa
from pydantic import BaseModel, ConfigDict, field_validator

from spoofloc.data.types import AudioClip
from spoofloc.errors import InputValidationError
from spoofloc.settings import MelConfig

if TYPE_CHECKING:
    from spoofloc.features.cache import FeatureCache


class MelFrames(BaseModel):
    """``values`` has shape (n_frames, n_mels): natural log of floor-clamped mel power."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    clip_id: str
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _as_matrix(cls, value) -> np.ndarray:
        array = np.array(value, dtype=np.float64, copy=True)
        if array.ndim != 2:
            raise ValueError(f"mel values must be 2-D (frames, bins), got shape {array.shape}")
        if not np.isfinite(array).all():
            raise ValueError("mel values must be finite")
        array.setflags(write=False)
        return array

    @property
    def n_frames(self) -> int:
        return int(self.values.shape[0])


def frame_count(n_samples: int, cfg: MelConfig) -> int:
    """Frames fully inside the signal: ``1 + (n_samples - fft_window) // hop``."""
    if n_samples < cfg.fft_window:
        return 0
    return 1 + (n_samples - cfg.fft_window) // cfg.hop


def extract_mel(clip: AudioClip, cfg: MelConfig) -> MelFrames:
    samples = clip.samples
    if samples.size < cfg.fft_window:
        raise InputValidationError(
            f"clip {clip.id!r} has {samples.size} samples, fewer than one window ({cfg.fft_window}); "
            f"pad it or drop it from the corpus"
        )
    power = librosa.feature.melspectrogram(
        y=np.ascontiguousarray(samples, dtype=np.float64),
        sr=cfg.sample_rate,
        n_fft=cfg.fft_window,
        hop_length=cfg.hop,
        win_length=cfg.fft_window,
        window="hann",
        center=False,
        power=2.0,
        n_mels=cfg.n_mels,
        fmin=cfg.fmin,
        fmax=cfg.fmax,
    )
    values = np.log(np.maximum(power, cfg.log_floor)).T
    return MelFrames(clip_id=clip.id, values=values)


def normalize_features(values: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Per-utterance mean-variance normalization along time, bin by bin."""
    mean = values.mean(axis=0, keepdims=True)
    std = values.std(axis=0, keepdims=True)
    return (values - mean) / (std + eps)


def model_input(clip: AudioClip, cfg: MelConfig, cache: Optional["FeatureCache"] = None) -> np.ndarray:
    """Features exactly as the tagger consumes them (float32)."""
    frames = cache.get_or_compute(clip) if cache is not None else extract_mel(clip, cfg)
    values = frames.values
    if cfg.normalize:
        values = normalize_features(values)
    return values.astype(np.float32)
