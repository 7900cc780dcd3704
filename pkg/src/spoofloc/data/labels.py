"""Conversion between interval annotations and frame labels on the hop grid."""

from typing import List, Sequence

import numpy as np

from spoofloc.data.types import (
    TIME_TOLERANCE_S,
    Label,
    SegmentAnnotation,
    check_tiling,
)
from spoofloc.errors import InputValidationError


# Segment boundaries are multiples of the hop; rounding removes float drift (3 * 0.01 etc).
_BOUNDARY_DECIMALS = 9


def _grid_time(index: int, hop_s: float) -> float:
    return round(index * hop_s, _BOUNDARY_DECIMALS)


def annotations_to_frame_labels(
    annotations: Sequence[SegmentAnnotation],
    n_frames: int,
    hop_s: float,
) -> np.ndarray:
    """Label frame ``i`` with the annotation covering its center time ``(i + 0.5) * hop_s``.

    Annotations may extend past ``n_frames * hop_s`` (the extra is ignored) and may fall
    short of it by at most one hop (the last label is carried forward).
    """
    if n_frames < 0:
        raise InputValidationError(f"n_frames must be non-negative, got {n_frames}")
    if hop_s <= 0:
        raise InputValidationError(f"hop_s must be positive, got {hop_s}")
    check_tiling(annotations)

    covered_until = annotations[-1].end_s
    grid_end = n_frames * hop_s
    if covered_until < grid_end - hop_s - TIME_TOLERANCE_S:
        raise InputValidationError(
            f"annotations end at {covered_until}s but {n_frames} frames span {grid_end}s "
            f"(more than one hop uncovered)"
        )
    if n_frames == 0:
        return np.zeros(0, dtype=np.int64)

    ends = np.array([a.end_s for a in annotations], dtype=np.float64)
    values = np.array([a.label.frame_value for a in annotations], dtype=np.int64)
    centers = (np.arange(n_frames, dtype=np.float64) + 0.5) * hop_s
    index = np.searchsorted(ends, centers, side="right")
    return values[np.minimum(index, len(annotations) - 1)]


def frame_labels_to_segments(labels: Sequence[int], hop_s: float) -> List[SegmentAnnotation]:
    """Merge maximal runs of identical labels into half-open segments on the hop grid."""
    array = np.asarray(labels, dtype=np.int64)
    if array.ndim != 1 or array.size == 0:
        raise InputValidationError("frame label sequence must be a non-empty 1-D sequence")
    if hop_s <= 0:
        raise InputValidationError(f"hop_s must be positive, got {hop_s}")

    change = np.flatnonzero(np.diff(array)) + 1
    starts = np.concatenate(([0], change))
    stops = np.concatenate((change, [array.size]))
    return [
        SegmentAnnotation(
            start_s=_grid_time(int(start), hop_s),
            end_s=_grid_time(int(stop), hop_s),
            label=Label.from_frame_value(array[start]),
        )
        for start, stop in zip(starts, stops)
    ]


def merge_adjacent(annotations: Sequence[SegmentAnnotation]) -> List[SegmentAnnotation]:
    """Join neighbouring segments that carry the same label."""
    merged: List[SegmentAnnotation] = []
    for annotation in annotations:
        if merged and merged[-1].label is annotation.label:
            previous = merged.pop()
            annotation = SegmentAnnotation(
                start_s=previous.start_s, end_s=annotation.end_s, label=annotation.label
            )
        merged.append(annotation)
    return merged


def relabel_region(
    annotations: Sequence[SegmentAnnotation],
    start_s: float,
    end_s: float,
    label: Label,
) -> List[SegmentAnnotation]:
    """Overwrite ``[start_s, end_s)`` with ``label`` keeping the tiling intact."""
    check_tiling(annotations)
    if not 0.0 <= start_s < end_s <= annotations[-1].end_s + TIME_TOLERANCE_S:
        raise InputValidationError(
            f"region [{start_s}, {end_s}) lies outside annotated span [0, {annotations[-1].end_s})"
        )
    pieces: List[SegmentAnnotation] = []
    for annotation in annotations:
        if annotation.start_s < start_s - TIME_TOLERANCE_S:
            pieces.append(
                SegmentAnnotation(
                    start_s=annotation.start_s,
                    end_s=min(annotation.end_s, start_s),
                    label=annotation.label,
                )
            )
        if annotation.end_s > end_s + TIME_TOLERANCE_S:
            pieces.append(
                SegmentAnnotation(
                    start_s=max(annotation.start_s, end_s),
                    end_s=annotation.end_s,
                    label=annotation.label,
                )
            )
    pieces.append(SegmentAnnotation(start_s=start_s, end_s=min(end_s, annotations[-1].end_s), label=label))
    pieces.sort(key=lambda a: a.start_s)
    return merge_adjacent(pieces)


def shift_annotations(annotations: Sequence[SegmentAnnotation], offset_s: float) -> List[SegmentAnnotation]:
    return [
        SegmentAnnotation(start_s=a.start_s + offset_s, end_s=a.end_s + offset_s, label=a.label)
        for a in annotations
    ]


def slice_annotations(
    annotations: Sequence[SegmentAnnotation], start_s: float, end_s: float
) -> List[SegmentAnnotation]:
    """Cut ``[start_s, end_s)`` out of a tiling and re-base it at 0."""
    pieces = []
    for annotation in annotations:
        lo = max(annotation.start_s, start_s)
        hi = min(annotation.end_s, end_s)
        if hi - lo > TIME_TOLERANCE_S:
            pieces.append(SegmentAnnotation(start_s=lo - start_s, end_s=hi - start_s, label=annotation.label))
    return pieces


def fake_fraction(annotations: Sequence[SegmentAnnotation]) -> float:
    total = annotations[-1].end_s - annotations[0].start_s
    fake = sum(a.duration_s for a in annotations if a.label is Label.FAKE)
    return fake / total if total > 0 else 0.0
