"""RCNN-BLSTM tagger with the multi-frame detection head."""

from spoofloc.model.framing import (
    batch_window_targets,
    mfd_window_targets,
    window_count,
    window_ranges,
)
from spoofloc.model.tagger import (
    FAKE_CLASS,
    ModelOutput,
    MultiFrameDetector,
    ResidualBlock,
    SpoofLocTagger,
    count_parameters,
)

__all__ = [
    "FAKE_CLASS",
    "ModelOutput",
    "MultiFrameDetector",
    "ResidualBlock",
    "SpoofLocTagger",
    "batch_window_targets",
    "count_parameters",
    "mfd_window_targets",
    "window_count",
    "window_ranges",
]
