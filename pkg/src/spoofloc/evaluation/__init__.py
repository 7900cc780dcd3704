"""Decoding and evaluation.

- decoding: thresholding + run-length merge into ManipulationHypothesis
- metrics: a_sentence, f1_segment, score, iso_rate, EvalReport files
"""

from spoofloc.evaluation.decoding import decode, decode_sequence, frame_decisions, reference_hypothesis
from spoofloc.evaluation.metrics import (
    METRIC_VERSION,
    EvalReport,
    FileRecord,
    a_sentence,
    evaluate,
    f1_segment,
    frame_grids,
    iso_rate,
    load_report,
    save_report,
    score,
)

__all__ = [
    "METRIC_VERSION",
    "EvalReport",
    "FileRecord",
    "a_sentence",
    "decode",
    "decode_sequence",
    "evaluate",
    "f1_segment",
    "frame_decisions",
    "frame_grids",
    "iso_rate",
    "load_report",
    "reference_hypothesis",
    "save_report",
    "score",
]
