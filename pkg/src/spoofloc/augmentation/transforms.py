"""
Waveform transforms that keep annotations consistent.

Each transform takes a clip plus its tiling annotations and returns the transformed
clip together with updated annotations. Manipulated regions are relabeled FAKE;
everything outside the region is left bit-identical.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import librosa
import numpy as np

from spoofloc.augmentation.voice import SegmentTransformer, fit_fft_size
from spoofloc.data.labels import merge_adjacent, relabel_region, shift_annotations, slice_annotations
from spoofloc.data.types import TIME_TOLERANCE_S, AudioClip, Label, SegmentAnnotation, check_tiling
from spoofloc.errors import InputValidationError, PolicyError

logger = logging.getLogger(__name__)

Region = Tuple[float, float]
Annotations = List[SegmentAnnotation]


# =======================
# HELPERS
# =======================

def _region_indices(clip: AudioClip, region: Region) -> Tuple[int, int]:
    start_s, end_s = float(region[0]), float(region[1])
    if not 0.0 <= start_s < end_s <= clip.duration_s + TIME_TOLERANCE_S:
        raise InputValidationError(
            f"region [{start_s}, {end_s}) is not inside clip {clip.id!r} of duration {clip.duration_s}s"
        )
    first = int(round(start_s * clip.sample_rate))
    last = min(int(round(end_s * clip.sample_rate)), clip.samples.size)
    if last <= first:
        raise InputValidationError(f"region [{start_s}, {end_s}) covers no samples")
    return first, last


def _mark_fake(clip: AudioClip, annotations: Sequence[SegmentAnnotation], first: int, last: int) -> Annotations:
    rate = clip.sample_rate
    return relabel_region(annotations, first / rate, last / rate, Label.FAKE)


def _power(samples: np.ndarray) -> float:
    return float(np.mean(np.square(samples)))


def _scaled_noise(signal_power: float, noise: np.ndarray, snr_db: float) -> np.ndarray:
    noise_power = _power(noise)
    if noise_power == 0.0:
        raise InputValidationError("noise has zero power")
    scale = np.sqrt(signal_power / (noise_power * 10.0 ** (snr_db / 10.0)))
    return noise * scale


def measure_snr_db(clean: np.ndarray, noisy: np.ndarray) -> float:
    return float(10.0 * np.log10(_power(clean) / _power(noisy - clean)))


# =======================
# BEFORE-TRAINING TRANSFORMS
# =======================

def aug_segment_replace(
    clip: AudioClip,
    annotations: Sequence[SegmentAnnotation],
    transformer: SegmentTransformer,
    region: Region,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[AudioClip, Annotations]:
    """Replace ``region`` by the transformer's output and label it FAKE."""
    check_tiling(annotations)
    first, last = _region_indices(clip, region)
    segment = clip.samples[first:last]
    converted = np.asarray(transformer.transform(segment.copy(), clip.sample_rate), dtype=np.float64)
    if converted.shape != segment.shape:
        raise PolicyError(
            f"transformer {transformer.name!r} changed segment length from {segment.size} to {converted.size}"
        )
    if not np.isfinite(converted).all():
        raise PolicyError(f"transformer {transformer.name!r} produced non-finite samples")
    samples = clip.samples.copy()
    samples[first:last] = converted
    return clip.with_samples(samples), _mark_fake(clip, annotations, first, last)


def aug_add_corpus_noise(
    clip: AudioClip,
    noise_bank: Sequence[np.ndarray],
    snr_db: float,
    rng: np.random.Generator,
) -> AudioClip:
    """Add a randomly chosen noise recording over the whole clip at ``snr_db``; labels are unaffected."""
    if not noise_bank:
        raise InputValidationError("noise bank is empty")
    if not np.isfinite(snr_db):
        raise InputValidationError(f"snr_db must be finite, got {snr_db}")
    signal_power = _power(clip.samples)
    if signal_power == 0.0:
        raise InputValidationError(f"clip {clip.id!r} is silent; SNR is undefined")

    noise = np.asarray(noise_bank[int(rng.integers(len(noise_bank)))], dtype=np.float64)
    n = clip.samples.size
    if noise.size < n:
        noise = np.resize(noise, n)
    else:
        offset = int(rng.integers(0, noise.size - n + 1))
        noise = noise[offset:offset + n]
    return clip.with_samples(clip.samples + _scaled_noise(signal_power, noise, snr_db))


def aug_insert_real(
    clip: AudioClip,
    annotations: Sequence[SegmentAnnotation],
    donor: AudioClip,
    donor_region: Region,
    insert_at: float,
    rng: Optional[np.random.Generator] = None,
    donor_annotations: Optional[Sequence[SegmentAnnotation]] = None,
    mark_boundaries: bool = False,
    boundary_s: float = 0.02,
) -> Tuple[AudioClip, Annotations]:
    """Insert ``donor[donor_region]`` at ``insert_at`` seconds.

    The inserted span keeps the donor's labels (REAL when ``donor_annotations`` is not
    given). With ``mark_boundaries`` the frames around both insertion seams are FAKE.
    """
    check_tiling(annotations)
    start_s, end_s = float(donor_region[0]), float(donor_region[1])
    if not 0.0 <= start_s <= end_s <= donor.duration_s + TIME_TOLERANCE_S:
        raise InputValidationError(
            f"donor region [{start_s}, {end_s}) is not inside donor {donor.id!r} of duration {donor.duration_s}s"
        )
    if not 0.0 <= insert_at <= clip.duration_s + TIME_TOLERANCE_S:
        raise InputValidationError(f"insert point {insert_at}s is beyond clip {clip.id!r} ({clip.duration_s}s)")

    rate = clip.sample_rate
    first = int(round(start_s * rate))
    last = min(int(round(end_s * rate)), donor.samples.size)
    if last <= first:
        return clip, list(annotations)

    at = min(int(round(insert_at * rate)), clip.samples.size)
    samples = np.concatenate([clip.samples[:at], donor.samples[first:last], clip.samples[at:]])

    at_s = at / rate
    inserted_s = (last - first) / rate
    total_s = annotations[-1].end_s
    if donor_annotations is not None:
        middle = slice_annotations(donor_annotations, first / rate, last / rate)
    else:
        middle = [SegmentAnnotation(start_s=0.0, end_s=inserted_s, label=Label.REAL)]

    pieces = []
    if at_s > TIME_TOLERANCE_S:
        pieces.extend(slice_annotations(annotations, 0.0, at_s))
    pieces.extend(shift_annotations(middle, at_s))
    if total_s - at_s > TIME_TOLERANCE_S:
        pieces.extend(shift_annotations(slice_annotations(annotations, at_s, total_s), at_s + inserted_s))
    updated = merge_adjacent(pieces)

    if mark_boundaries:
        new_total = updated[-1].end_s
        for seam in (at_s, at_s + inserted_s):
            lo = max(0.0, seam - boundary_s / 2)
            hi = min(new_total, seam + boundary_s / 2)
            if hi - lo > TIME_TOLERANCE_S:
                updated = relabel_region(updated, lo, hi, Label.FAKE)

    return clip.with_samples(samples), updated


# =======================
# IN-TRAINING TRANSFORMS
# =======================

def aug_pitch_shift_segment(
    clip: AudioClip,
    annotations: Sequence[SegmentAnnotation],
    region: Region,
    semitones: float,
    rng: Optional[np.random.Generator] = None,
    min_semitones: float = 0.5,
) -> Tuple[AudioClip, Annotations]:
    """Pitch-shift ``region`` (phase-vocoder stretch + resampling, same length) and label it FAKE."""
    if not np.isfinite(semitones) or abs(semitones) < min_semitones:
        raise PolicyError(
            f"pitch shift of {semitones} semitones is below the audible minimum of {min_semitones}"
        )
    check_tiling(annotations)
    first, last = _region_indices(clip, region)
    segment = clip.samples[first:last]
    n_fft = fit_fft_size(segment.size)
    shifted = librosa.effects.pitch_shift(
        segment.copy(),
        sr=clip.sample_rate,
        n_steps=float(semitones),
        n_fft=n_fft,
        hop_length=n_fft // 4,
    )
    samples = clip.samples.copy()
    samples[first:last] = shifted[: segment.size]
    return clip.with_samples(samples), _mark_fake(clip, annotations, first, last)


def aug_gaussian_segment(
    clip: AudioClip,
    annotations: Sequence[SegmentAnnotation],
    region: Region,
    snr_db: float,
    rng: np.random.Generator,
    max_snr_db: float = 15.0,
) -> Tuple[AudioClip, Annotations]:
    """Add white Gaussian noise at segment-local ``snr_db`` inside ``region`` and label it FAKE."""
    if not np.isfinite(snr_db):
        raise InputValidationError(f"snr_db must be finite, got {snr_db}")
    if snr_db > max_snr_db:
        raise PolicyError(f"segment SNR {snr_db} dB exceeds the policy maximum of {max_snr_db} dB")
    check_tiling(annotations)
    first, last = _region_indices(clip, region)
    segment = clip.samples[first:last]
    signal_power = _power(segment)
    if signal_power == 0.0:
        raise InputValidationError(f"region [{region[0]}, {region[1]}) of clip {clip.id!r} is silent; SNR is undefined")
    noise = _scaled_noise(signal_power, rng.standard_normal(segment.size), snr_db)
    samples = clip.samples.copy()
    samples[first:last] = segment + noise
    return clip.with_samples(samples), _mark_fake(clip, annotations, first, last)
