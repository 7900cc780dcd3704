"""
Corpus loading, per-example feature/label preparation and padded batching.

In-training augmentation is applied inside ``__getitem__`` with a generator seeded
from ``(seed, epoch, index)``, so a given epoch sees the same transforms whatever
the number of loader workers.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from torch.utils.data import Dataset

from spoofloc.augmentation.online import in_training_augment
from spoofloc.data.audio import load_audio
from spoofloc.data.labels import annotations_to_frame_labels
from spoofloc.data.manifest import resolve_audio_path
from spoofloc.data.types import AudioClip, DatasetManifest, SegmentAnnotation
from spoofloc.features.cache import FeatureCache
from spoofloc.features.mel import frame_count, model_input
from spoofloc.settings import AugmentationPolicy, MelConfig

logger = logging.getLogger(__name__)

LabeledClip = Tuple[AudioClip, List[SegmentAnnotation]]


def load_corpus(manifest: DatasetManifest, root: Optional[Union[str, Path]] = None) -> List[LabeledClip]:
    """Read every clip of ``manifest`` (paths relative to ``root``)."""
    return [
        (load_audio(resolve_audio_path(entry, root), clip_id=entry.clip_id), list(entry.annotations))
        for entry in manifest.entries
    ]


@dataclass
class FrameExample:
    clip_id: str
    features: np.ndarray
    labels: np.ndarray


@dataclass
class Batch:
    features: torch.Tensor
    labels: torch.Tensor
    mask: torch.Tensor
    lengths: torch.Tensor
    clip_ids: List[str]

    def to(self, device: Union[str, torch.device]) -> "Batch":
        return Batch(
            features=self.features.to(device),
            labels=self.labels.to(device),
            mask=self.mask.to(device),
            lengths=self.lengths,
            clip_ids=self.clip_ids,
        )


def prepare_example(
    clip: AudioClip,
    annotations: Sequence[SegmentAnnotation],
    mel: MelConfig,
    cache: Optional[FeatureCache] = None,
) -> FrameExample:
    features = model_input(clip, mel, cache)
    labels = annotations_to_frame_labels(annotations, features.shape[0], mel.hop_s)
    return FrameExample(clip_id=clip.id, features=features, labels=labels)


class FrameDataset(Dataset):
    def __init__(
        self,
        corpus: Sequence[LabeledClip],
        mel: MelConfig,
        policy: Optional[AugmentationPolicy] = None,
        seed: int = 0,
        augment: bool = False,
        cache: Optional[FeatureCache] = None,
        n_cached: Optional[int] = None,
    ):
        self.corpus = list(corpus)
        self.cache = cache
        # only the first n_cached items are source clips with stable ids
        self.n_cached = len(self.corpus) if n_cached is None else n_cached
        self.mel = mel
        self.policy = policy or AugmentationPolicy()
        self.seed = seed
        self.augment = augment
        self.epoch = 0
        self._clean: Dict[int, FrameExample] = {}

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    def __len__(self) -> int:
        return len(self.corpus)

    def __getitem__(self, index: int) -> FrameExample:
        example = self.corpus[index]
        if self.augment:
            rng = np.random.default_rng([self.seed, self.epoch, index])
            augmented = in_training_augment([example], self.policy, rng, self.mel.hop_s)[0]
            if augmented is not example:
                return prepare_example(*augmented, self.mel)
        if index not in self._clean:
            cache = self.cache if index < self.n_cached else None
            self._clean[index] = prepare_example(*example, self.mel, cache)
        return self._clean[index]


def collate_frames(examples: Sequence[FrameExample]) -> Batch:
    """Zero-pad to the longest example; ``mask`` marks real frames."""
    lengths = torch.tensor([example.labels.size for example in examples], dtype=torch.long)
    n_frames = int(lengths.max())
    n_bins = examples[0].features.shape[1]
    features = torch.zeros(len(examples), n_frames, n_bins, dtype=torch.float32)
    labels = torch.zeros(len(examples), n_frames, dtype=torch.long)
    for row, example in enumerate(examples):
        size = example.labels.size
        features[row, :size] = torch.from_numpy(np.ascontiguousarray(example.features, dtype=np.float32))
        labels[row, :size] = torch.from_numpy(example.labels.astype(np.int64))
    mask = torch.arange(n_frames).unsqueeze(0) < lengths.unsqueeze(1)
    return Batch(
        features=features,
        labels=labels,
        mask=mask,
        lengths=lengths,
        clip_ids=[example.clip_id for example in examples],
    )


def too_short(corpus: Sequence[LabeledClip], mel: MelConfig, min_frames: int) -> List[str]:
    """Ids of clips yielding fewer than ``min_frames`` feature frames."""
    return [clip.id for clip, _ in corpus if frame_count(clip.samples.size, mel) < min_frames]
