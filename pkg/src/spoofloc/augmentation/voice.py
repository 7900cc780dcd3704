"""
Pluggable segment transformers standing in for voice conversion.

Any object with a ``name`` and a length-preserving ``transform(samples, sample_rate)``
can be used; ``SpectralWarpTransformer`` is the deterministic built-in.
"""

from typing import Protocol, runtime_checkable

import librosa
import numpy as np


@runtime_checkable
class SegmentTransformer(Protocol):
    name: str

    def transform(self, samples: np.ndarray, sample_rate: int) -> np.ndarray:
        ...


def fit_fft_size(n_samples: int, preferred: int = 512, smallest: int = 16) -> int:
    """Largest power of two not above ``preferred`` that fits inside the segment."""
    size = preferred
    while size > smallest and size > n_samples:
        size //= 2
    return size


class IdentityTransformer:
    name = "identity"

    def transform(self, samples: np.ndarray, sample_rate: int) -> np.ndarray:
        return np.array(samples, dtype=np.float64, copy=True)


class SpectralWarpTransformer:
    """Stretch the magnitude spectrum along frequency by ``factor`` and resynthesize.

    Factors above 1 move spectral content (formants, harmonics) up, below 1 down.
    Phase is kept from the input frame so the output stays time-aligned.
    """

    name = "spectral_warp"

    def __init__(self, factor: float = 1.05, n_fft: int = 512):
        if factor <= 0:
            raise ValueError("warp factor must be positive")
        self.factor = float(factor)
        self.n_fft = n_fft

    def transform(self, samples: np.ndarray, sample_rate: int) -> np.ndarray:
        samples = np.asarray(samples, dtype=np.float64)
        n_fft = fit_fft_size(samples.size, self.n_fft)
        hop = n_fft // 4
        spectrum = librosa.stft(samples, n_fft=n_fft, hop_length=hop, window="hann")
        magnitude = np.abs(spectrum)
        phase = np.angle(spectrum)

        n_bins = magnitude.shape[0]
        source = np.arange(n_bins, dtype=np.float64) / self.factor
        lower = np.floor(source).astype(np.int64)
        fraction = (source - lower)[:, None]
        inside = (lower + 1 < n_bins)[:, None]
        lower = np.minimum(lower, n_bins - 1)
        upper = np.minimum(lower + 1, n_bins - 1)
        warped = np.where(inside, magnitude[lower] * (1.0 - fraction) + magnitude[upper] * fraction, 0.0)

        return librosa.istft(warped * np.exp(1j * phase), hop_length=hop, n_fft=n_fft, window="hann", length=samples.size)
