"""Core data model.

- types: AudioClip, SegmentAnnotation, FrameSequence, ManipulationHypothesis, DatasetManifest
- labels: annotation <-> frame-label conversion on the hop grid
- manifest: line-delimited manifest and hypothesis files
- audio: WAV ingestion / emission
"""

from spoofloc.data.audio import load_audio, save_audio
from spoofloc.data.labels import (
    annotations_to_frame_labels,
    fake_fraction,
    frame_labels_to_segments,
    merge_adjacent,
    relabel_region,
)
from spoofloc.data.manifest import (
    load_hypotheses,
    load_manifest,
    resolve_audio_path,
    save_hypotheses,
    save_manifest,
)
from spoofloc.data.types import (
    DEFAULT_HOP_S,
    SAMPLE_RATE,
    AudioClip,
    DatasetManifest,
    FrameSequence,
    Label,
    ManifestEntry,
    ManipulationHypothesis,
    SegmentAnnotation,
    UtteranceLabel,
    check_tiling,
)

__all__ = [
    "DEFAULT_HOP_S",
    "SAMPLE_RATE",
    "AudioClip",
    "DatasetManifest",
    "FrameSequence",
    "Label",
    "ManifestEntry",
    "ManipulationHypothesis",
    "SegmentAnnotation",
    "UtteranceLabel",
    "annotations_to_frame_labels",
    "check_tiling",
    "fake_fraction",
    "frame_labels_to_segments",
    "load_audio",
    "load_hypotheses",
    "load_manifest",
    "merge_adjacent",
    "relabel_region",
    "resolve_audio_path",
    "save_audio",
    "save_hypotheses",
    "save_manifest",
]
