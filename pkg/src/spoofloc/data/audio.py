"""WAV ingestion and emission (mono, 16-bit PCM, resampled to 16 kHz)."""

import logging
from pathlib import Path
from typing import Optional, Union

import librosa
import numpy as np
import soundfile as sf

from spoofloc.data.types import MIN_CLIP_SAMPLES, SAMPLE_RATE, AudioClip
from spoofloc.errors import InputValidationError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def load_audio(path: PathLike, clip_id: Optional[str] = None, target_sr: int = SAMPLE_RATE) -> AudioClip:
    path = Path(path)
    if not path.is_file():
        raise InputValidationError(f"audio file not found: {path}")
    samples, sample_rate = sf.read(str(path), dtype="float64", always_2d=True)
    if samples.shape[1] != 1:
        raise InputValidationError(f"{path}: expected mono audio, found {samples.shape[1]} channels")
    samples = samples[:, 0]
    if sample_rate != target_sr:
        logger.debug("resampling %s from %d Hz to %d Hz", path, sample_rate, target_sr)
        samples = librosa.resample(samples, orig_sr=sample_rate, target_sr=target_sr)
    if samples.size < MIN_CLIP_SAMPLES:
        raise InputValidationError(
            f"{path}: {samples.size} samples is shorter than one analysis window ({MIN_CLIP_SAMPLES}); pad or drop it"
        )
    return AudioClip(id=clip_id or path.stem, samples=samples, sample_rate=target_sr)


def save_audio(path: PathLike, clip: AudioClip) -> Path:
    """Write ``clip`` as 16-bit PCM; amplitudes beyond [-1, 1] are clipped."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sf.write(str(path), np.clip(clip.samples, -1.0, 1.0), clip.sample_rate, subtype="PCM_16", format="WAV")
    return path
