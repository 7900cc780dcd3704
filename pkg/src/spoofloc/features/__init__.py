"""Mel-spectrogram frame features.

- mel: extract_mel, frame_count, normalize_features, model_input
- cache: FeatureCache (bit-identical on-disk cache)
"""

from spoofloc.features.cache import FeatureCache
from spoofloc.features.mel import MelFrames, extract_mel, frame_count, model_input, normalize_features

__all__ = [
    "FeatureCache",
    "MelFrames",
    "extract_mel",
    "frame_count",
    "model_input",
    "normalize_features",
]
