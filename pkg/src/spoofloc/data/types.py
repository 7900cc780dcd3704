"""
Canonical data model.

Every type here is immutable after construction (frozen pydantic models, numpy
buffers marked read-only) so instances can be shared between worker processes.
"""

from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from spoofloc.errors import InputValidationError


SAMPLE_RATE = 16000
MIN_CLIP_SAMPLES = 800
DEFAULT_HOP_S = 0.010

# Times closer than this are considered equal when checking tiling.
TIME_TOLERANCE_S = 1e-9


# =======================
# LABELS
# =======================

class Label(str, Enum):
    REAL = "real"
    FAKE = "fake"

    @property
    def frame_value(self) -> int:
        return 1 if self is Label.FAKE else 0

    @classmethod
    def from_frame_value(cls, value: int) -> "Label":
        return cls.FAKE if int(value) == 1 else cls.REAL


class UtteranceLabel(str, Enum):
    GENUINE = "genuine"
    FAKE = "fake"


def _frozen_array(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


# =======================
# AUDIO
# =======================

class AudioClip(BaseModel):
    """Mono waveform at 16 kHz, amplitudes roughly in [-1, 1]."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    id: str
    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    @field_validator("samples", mode="before")
    @classmethod
    def _as_float_array(cls, value) -> np.ndarray:
        array = np.asarray(value, dtype=np.float64)
        if array.ndim != 1:
            raise ValueError(f"samples must be one-dimensional, got shape {array.shape}")
        if array.size < MIN_CLIP_SAMPLES:
            raise ValueError(
                f"clip has {array.size} samples; at least {MIN_CLIP_SAMPLES} (one analysis window) are required"
            )
        return _frozen_array(array, np.float64)

    @field_validator("sample_rate")
    @classmethod
    def _check_rate(cls, value: int) -> int:
        if value != SAMPLE_RATE:
            raise ValueError(f"sample_rate must be {SAMPLE_RATE} Hz after ingestion, got {value}")
        return value

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate

    def with_samples(self, samples: np.ndarray, clip_id: Optional[str] = None) -> "AudioClip":
        return AudioClip(id=clip_id or self.id, samples=samples, sample_rate=self.sample_rate)


# =======================
# ANNOTATIONS
# =======================

class SegmentAnnotation(BaseModel):
    """Half-open labeled interval [start_s, end_s)."""

    model_config = ConfigDict(frozen=True)

    start_s: float = Field(..., ge=0.0, description="Segment start in seconds (inclusive)")
    end_s: float = Field(..., description="Segment end in seconds (exclusive)")
    label: Label

    @model_validator(mode="after")
    def _check_order(self) -> "SegmentAnnotation":
        if not self.end_s > self.start_s:
            raise ValueError(f"segment end {self.end_s} must be greater than start {self.start_s}")
        return self

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    def as_triple(self) -> list:
        return [self.start_s, self.end_s, self.label.value]

    @classmethod
    def from_triple(cls, triple: Sequence) -> "SegmentAnnotation":
        if len(triple) != 3:
            raise ValueError(f"expected [start_s, end_s, label], got {list(triple)!r}")
        start_s, end_s, label = triple
        return cls(start_s=float(start_s), end_s=float(end_s), label=Label(str(label).lower()))


def check_tiling(
    annotations: Sequence[SegmentAnnotation],
    duration_s: Optional[float] = None,
    tolerance_s: float = TIME_TOLERANCE_S,
) -> None:
    """Raise unless ``annotations`` are sorted, gap-free, non-overlapping and start at 0.

    When ``duration_s`` is given the last segment must end there as well.
    """
    if not annotations:
        raise InputValidationError("annotation list is empty; every instant needs a label")
    first = annotations[0]
    if abs(first.start_s) > tolerance_s:
        raise InputValidationError(
            f"annotations must start at 0.0; first interval is [{first.start_s}, {first.end_s})"
        )
    for previous, current in zip(annotations, annotations[1:]):
        if current.start_s < previous.end_s - tolerance_s:
            raise InputValidationError(
                f"interval [{current.start_s}, {current.end_s}) overlaps [{previous.start_s}, {previous.end_s})"
            )
        if current.start_s > previous.end_s + tolerance_s:
            raise InputValidationError(
                f"gap before interval [{current.start_s}, {current.end_s}); previous ends at {previous.end_s}"
            )
    if duration_s is not None and abs(annotations[-1].end_s - duration_s) > tolerance_s:
        last = annotations[-1]
        raise InputValidationError(
            f"last interval [{last.start_s}, {last.end_s}) does not end at clip duration {duration_s}"
        )


def has_fake(annotations: Sequence[SegmentAnnotation]) -> bool:
    return any(a.label is Label.FAKE for a in annotations)


# =======================
# FRAMES AND HYPOTHESES
# =======================

class FrameSequence(BaseModel):
    """Per-frame labels (0=REAL, 1=FAKE) and optional fake-class probabilities on the hop grid."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    clip_id: str
    hop_s: float = DEFAULT_HOP_S
    labels: np.ndarray
    probabilities: Optional[np.ndarray] = None

    @field_validator("labels", mode="before")
    @classmethod
    def _as_labels(cls, value) -> np.ndarray:
        array = np.asarray(value)
        if array.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if array.size and not np.isin(array, (0, 1)).all():
            raise ValueError("labels must be 0 (REAL) or 1 (FAKE)")
        return _frozen_array(array, np.int64)

    @field_validator("probabilities", mode="before")
    @classmethod
    def _as_probabilities(cls, value) -> Optional[np.ndarray]:
        if value is None:
            return None
        array = np.asarray(value, dtype=np.float64)
        if array.size and (array.min() < 0.0 or array.max() > 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        return _frozen_array(array, np.float64)

    @model_validator(mode="after")
    def _check_lengths(self) -> "FrameSequence":
        if self.probabilities is not None and self.probabilities.shape != self.labels.shape:
            raise ValueError(
                f"labels ({self.labels.size}) and probabilities ({self.probabilities.size}) differ in length"
            )
        return self

    @property
    def n_frames(self) -> int:
        return int(self.labels.size)


class ManipulationHypothesis(BaseModel):
    """Decoded segments for one clip plus the utterance-level verdict."""

    model_config = ConfigDict(frozen=True)

    clip_id: str
    segments: List[SegmentAnnotation]
    utterance_label: UtteranceLabel

    @model_validator(mode="after")
    def _check_consistency(self) -> "ManipulationHypothesis":
        try:
            check_tiling(self.segments)
        except InputValidationError as exc:
            raise ValueError(str(exc)) from exc
        expected = UtteranceLabel.FAKE if has_fake(self.segments) else UtteranceLabel.GENUINE
        if self.utterance_label is not expected:
            raise ValueError(
                f"utterance_label {self.utterance_label.value} contradicts segments (expected {expected.value})"
            )
        return self

    @classmethod
    def from_segments(cls, clip_id: str, segments: Sequence[SegmentAnnotation]) -> "ManipulationHypothesis":
        verdict = UtteranceLabel.FAKE if has_fake(segments) else UtteranceLabel.GENUINE
        return cls(clip_id=clip_id, segments=list(segments), utterance_label=verdict)

    @property
    def duration_s(self) -> float:
        return self.segments[-1].end_s


# =======================
# MANIFEST
# =======================

class ManifestEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    clip_id: str = Field(..., min_length=1)
    audio_path: str = Field(..., min_length=1)
    annotations: List[SegmentAnnotation]

    @model_validator(mode="after")
    def _check_annotations(self) -> "ManifestEntry":
        try:
            check_tiling(self.annotations)
        except InputValidationError as exc:
            raise ValueError(str(exc)) from exc
        return self

    @property
    def is_fake(self) -> bool:
        return has_fake(self.annotations)

    @property
    def duration_s(self) -> float:
        return self.annotations[-1].end_s


class DatasetManifest(BaseModel):
    model_config = ConfigDict(frozen=True)

    entries: List[ManifestEntry] = []

    @model_validator(mode="after")
    def _check_unique_ids(self) -> "DatasetManifest":
        seen = set()
        duplicates = []
        for entry in self.entries:
            if entry.clip_id in seen:
                duplicates.append(entry.clip_id)
            seen.add(entry.clip_id)
        if duplicates:
            raise ValueError(f"duplicate clip_ids: {sorted(set(duplicates))}")
        return self

    def __len__(self) -> int:
        return len(self.entries)
