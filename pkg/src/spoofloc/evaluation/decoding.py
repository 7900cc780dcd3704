"""Frame probabilities -> timestamped hypotheses."""

from typing import Sequence

import numpy as np

from spoofloc.data.labels import frame_labels_to_segments, merge_adjacent
from spoofloc.data.types import DEFAULT_HOP_S, FrameSequence, ManipulationHypothesis, SegmentAnnotation
from spoofloc.errors import InputValidationError


def frame_decisions(probs: Sequence[float], threshold: float = 0.5) -> np.ndarray:
    """FAKE (1) iff ``prob > threshold``; a tie stays REAL."""
    array = np.asarray(probs, dtype=np.float64)
    if array.ndim != 1 or array.size == 0:
        raise InputValidationError("cannot decode an empty probability sequence")
    if not np.isfinite(array).all() or array.min() < 0.0 or array.max() > 1.0:
        raise InputValidationError("probabilities must lie in [0, 1]")
    return (array > threshold).astype(np.int64)


def decode(
    probs: Sequence[float],
    threshold: float = 0.5,
    hop_s: float = DEFAULT_HOP_S,
    clip_id: str = "",
) -> ManipulationHypothesis:
    segments = frame_labels_to_segments(frame_decisions(probs, threshold), hop_s)
    return ManipulationHypothesis.from_segments(clip_id, segments)


def decode_sequence(frames: FrameSequence, threshold: float = 0.5) -> ManipulationHypothesis:
    if frames.probabilities is None:
        segments = frame_labels_to_segments(frames.labels, frames.hop_s)
        return ManipulationHypothesis.from_segments(frames.clip_id, segments)
    return decode(frames.probabilities, threshold, frames.hop_s, frames.clip_id)


def reference_hypothesis(clip_id: str, annotations: Sequence[SegmentAnnotation]) -> ManipulationHypothesis:
    """Ground-truth annotations in hypothesis form (adjacent same-label pieces merged)."""
    return ManipulationHypothesis.from_segments(clip_id, merge_adjacent(annotations))
