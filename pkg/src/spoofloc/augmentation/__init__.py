"""Two-stage data augmentation.

- voice: SegmentTransformer protocol, IdentityTransformer, SpectralWarpTransformer
- transforms: segment replace, corpus noise, insertion, pitch shift, Gaussian segment noise
- online: in-training augmentation (per example, per step)
- offline: before-training corpus expansion with an augmentation log
"""

from spoofloc.augmentation.offline import (
    AugmentationRecord,
    augment_corpus,
    load_noise_bank,
    prepare_corpus,
)
from spoofloc.augmentation.online import in_training_augment, plan_in_training
from spoofloc.augmentation.transforms import (
    aug_add_corpus_noise,
    aug_gaussian_segment,
    aug_insert_real,
    aug_pitch_shift_segment,
    aug_segment_replace,
    measure_snr_db,
)
from spoofloc.augmentation.voice import IdentityTransformer, SegmentTransformer, SpectralWarpTransformer

__all__ = [
    "AugmentationRecord",
    "IdentityTransformer",
    "SegmentTransformer",
    "SpectralWarpTransformer",
    "aug_add_corpus_noise",
    "aug_gaussian_segment",
    "aug_insert_real",
    "aug_pitch_shift_segment",
    "aug_segment_replace",
    "augment_corpus",
    "in_training_augment",
    "load_noise_bank",
    "measure_snr_db",
    "plan_in_training",
    "prepare_corpus",
]
