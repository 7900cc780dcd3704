"""In-training augmentation: at most one random segment transform per example per step."""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from spoofloc.augmentation.transforms import aug_gaussian_segment, aug_pitch_shift_segment
from spoofloc.data.types import DEFAULT_HOP_S, AudioClip, SegmentAnnotation
from spoofloc.errors import InputValidationError
from spoofloc.settings import AugmentationPolicy

logger = logging.getLogger(__name__)

PITCH_SHIFT = "pitch_shift"
GAUSSIAN_SEGMENT = "gaussian_segment"
IN_TRAINING_TRANSFORMS = (PITCH_SHIFT, GAUSSIAN_SEGMENT)

Example = Tuple[AudioClip, List[SegmentAnnotation]]


# =======================
# RANDOM PARAMETERS
# =======================

def plan_in_training(n_examples: int, policy: AugmentationPolicy, rng: np.random.Generator) -> List[Optional[str]]:
    """Decide, per example, whether and how it is transformed (``None`` = untouched)."""
    plan: List[Optional[str]] = []
    for _ in range(n_examples):
        if rng.random() < policy.in_training_rate:
            plan.append(IN_TRAINING_TRANSFORMS[int(rng.integers(len(IN_TRAINING_TRANSFORMS)))])
        else:
            plan.append(None)
    return plan


def random_region(
    duration_s: float,
    policy: AugmentationPolicy,
    rng: np.random.Generator,
    hop_s: float = DEFAULT_HOP_S,
) -> Tuple[float, float]:
    """Random region snapped to the hop grid, between ``region_min_s`` and ``region_max_fraction``."""
    n_hops = int(np.floor(duration_s / hop_s + 1e-9))
    shortest = max(1, min(n_hops, int(round(policy.region_min_s / hop_s))))
    longest = max(shortest, int(np.floor(policy.region_max_fraction * n_hops)))
    length = int(rng.integers(shortest, longest + 1))
    start = int(rng.integers(0, n_hops - length + 1))
    return round(start * hop_s, 9), round((start + length) * hop_s, 9)


def random_semitones(policy: AugmentationPolicy, rng: np.random.Generator) -> float:
    low, high = policy.pitch_shift_range_semitones
    while True:
        semitones = float(rng.uniform(low, high))
        if abs(semitones) >= policy.min_pitch_shift_semitones:
            return semitones


def random_snr_db(max_snr_db: float, rng: np.random.Generator) -> float:
    """Uniform on (0, max_snr_db]."""
    return float(max_snr_db * (1.0 - rng.random()))


# =======================
# BATCH AUGMENTATION
# =======================

def apply_in_training_transform(
    name: str,
    example: Example,
    policy: AugmentationPolicy,
    rng: np.random.Generator,
    hop_s: float = DEFAULT_HOP_S,
) -> Example:
    clip, annotations = example
    region = random_region(clip.duration_s, policy, rng, hop_s)
    if name == PITCH_SHIFT:
        return aug_pitch_shift_segment(
            clip, annotations, region, random_semitones(policy, rng), rng,
            min_semitones=policy.min_pitch_shift_semitones,
        )
    if name == GAUSSIAN_SEGMENT:
        return aug_gaussian_segment(
            clip, annotations, region, random_snr_db(policy.gaussian_snr_max_db, rng), rng,
            max_snr_db=policy.gaussian_snr_max_db,
        )
    raise ValueError(f"unknown in-training transform {name!r}")


def in_training_augment(
    batch: Sequence[Example],
    policy: AugmentationPolicy,
    rng: np.random.Generator,
    hop_s: float = DEFAULT_HOP_S,
) -> List[Example]:
    """Transform each example with probability ``policy.in_training_rate``.

    Untouched examples are returned as the very same objects.
    """
    plan = plan_in_training(len(batch), policy, rng)
    augmented: List[Example] = []
    for name, example in zip(plan, batch):
        if name is None:
            augmented.append(example)
            continue
        try:
            augmented.append(apply_in_training_transform(name, example, policy, rng, hop_s))
        except InputValidationError as exc:
            # silent regions have no defined SNR; keep the example as is
            logger.debug("skipped %s on %s: %s", name, example[0].id, exc)
            augmented.append(example)
    return augmented
