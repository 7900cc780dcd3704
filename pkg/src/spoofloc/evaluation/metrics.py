"""
Evaluation metrics.

- a_sentence: utterance-level GENUINE/FAKE accuracy
- f1_segment: FAKE-class F1 over frames, pooled across clips whose reference holds a fake region
- score:      0.3 * a_sentence + 0.7 * f1_segment
- iso_rate:   segments (either label) shorter than ``min_frames``, per audio

Hypotheses are compared on the hypothesis frame grid; references are resampled onto
it with the frame-center rule.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field
from sklearn.metrics import f1_score

from spoofloc.data.labels import annotations_to_frame_labels
from spoofloc.data.types import DEFAULT_HOP_S, ManipulationHypothesis, UtteranceLabel
from spoofloc.errors import InputValidationError
from spoofloc.logs import log_event

logger = logging.getLogger(__name__)

METRIC_VERSION = "frame-pooled-f1/v1"
SENTENCE_WEIGHT = 0.3
SEGMENT_WEIGHT = 0.7
# a reference built from audio duration may run past the analysis grid by up to one window
MAX_GRID_SLACK_FRAMES = 5


class FileRecord(BaseModel):
    clip_id: str
    reference: UtteranceLabel
    hypothesis: UtteranceLabel
    correct: bool
    n_frames: int
    ref_fake_frames: int
    hyp_fake_frames: int
    overlap_frames: int
    n_segments: int
    n_isolated: int


class EvalReport(BaseModel):
    a_sentence: float = Field(ge=0.0, le=1.0)
    f1_segment: float = Field(ge=0.0, le=1.0)
    score: float = Field(ge=0.0, le=1.0)
    iso_rate: float = Field(ge=0.0)
    n_isolated: int = Field(ge=0)
    n_audios: int = Field(ge=1)
    metric_version: str = METRIC_VERSION
    per_file: List[FileRecord] = Field(default_factory=list)


# =======================
# ALIGNMENT
# =======================

def _by_id(hypotheses: Sequence[ManipulationHypothesis], what: str) -> Dict[str, ManipulationHypothesis]:
    table: Dict[str, ManipulationHypothesis] = {}
    for hypothesis in hypotheses:
        if hypothesis.clip_id in table:
            raise InputValidationError(f"duplicate clip id {hypothesis.clip_id!r} in {what}")
        table[hypothesis.clip_id] = hypothesis
    return table


def _aligned(
    refs: Sequence[ManipulationHypothesis], hyps: Sequence[ManipulationHypothesis]
) -> List[Tuple[ManipulationHypothesis, ManipulationHypothesis]]:
    ref_table = _by_id(refs, "references")
    hyp_table = _by_id(hyps, "hypotheses")
    missing = sorted(ref_table.keys() - hyp_table.keys())
    extra = sorted(hyp_table.keys() - ref_table.keys())
    if missing or extra:
        raise InputValidationError(f"clip ids differ: missing hypotheses {missing}, unknown hypotheses {extra}")
    return [(ref_table[clip_id], hyp_table[clip_id]) for clip_id in ref_table]


def _grid_frames(hypothesis: ManipulationHypothesis, hop_s: float) -> int:
    return int(round(hypothesis.duration_s / hop_s))


def frame_grids(
    ref: ManipulationHypothesis, hyp: ManipulationHypothesis, hop_s: float = DEFAULT_HOP_S
) -> Tuple[np.ndarray, np.ndarray]:
    """Reference and hypothesis frame labels on the hypothesis grid."""
    n_frames = _grid_frames(hyp, hop_s)
    if _grid_frames(ref, hop_s) - n_frames > MAX_GRID_SLACK_FRAMES:
        raise InputValidationError(
            f"clip {ref.clip_id!r}: reference spans {ref.duration_s}s but hypothesis only {hyp.duration_s}s"
        )
    return (
        annotations_to_frame_labels(ref.segments, n_frames, hop_s),
        annotations_to_frame_labels(hyp.segments, n_frames, hop_s),
    )


def _segment_frames(hypothesis: ManipulationHypothesis, hop_s: float) -> List[int]:
    return [int(round(segment.duration_s / hop_s)) for segment in hypothesis.segments]


# =======================
# METRICS
# =======================

def a_sentence(refs: Sequence[ManipulationHypothesis], hyps: Sequence[ManipulationHypothesis]) -> float:
    pairs = _aligned(refs, hyps)
    if not pairs:
        raise InputValidationError("no clips to score")
    return sum(ref.utterance_label is hyp.utterance_label for ref, hyp in pairs) / len(pairs)


def f1_segment(
    refs: Sequence[ManipulationHypothesis],
    hyps: Sequence[ManipulationHypothesis],
    hop_s: float = DEFAULT_HOP_S,
) -> float:
    """Pooled frame-level F1 of the FAKE class over reference-fake clips (1.0 if there are none)."""
    truth, predicted = [], []
    for ref, hyp in _aligned(refs, hyps):
        if ref.utterance_label is not UtteranceLabel.FAKE:
            continue
        ref_frames, hyp_frames = frame_grids(ref, hyp, hop_s)
        truth.append(ref_frames)
        predicted.append(hyp_frames)
    if not truth:
        return 1.0
    return float(f1_score(np.concatenate(truth), np.concatenate(predicted), pos_label=1, zero_division=0))


def iso_rate(
    hyps: Sequence[ManipulationHypothesis], min_frames: int = 6, hop_s: float = DEFAULT_HOP_S
) -> Tuple[float, int]:
    if not hyps:
        raise InputValidationError("iso-rate needs at least one audio")
    n_isolated = sum(
        sum(1 for frames in _segment_frames(hyp, hop_s) if frames < min_frames) for hyp in hyps
    )
    return n_isolated / len(hyps), n_isolated


def score(a: float, f1: float) -> float:
    for name, value in (("a_sentence", a), ("f1_segment", f1)):
        if not 0.0 <= value <= 1.0:
            raise InputValidationError(f"{name} must lie in [0, 1], got {value}")
    return SENTENCE_WEIGHT * a + SEGMENT_WEIGHT * f1


def evaluate(
    refs: Sequence[ManipulationHypothesis],
    hyps: Sequence[ManipulationHypothesis],
    hop_s: float = DEFAULT_HOP_S,
    iso_min_frames: int = 6,
) -> EvalReport:
    pairs = _aligned(refs, hyps)
    if not pairs:
        raise InputValidationError("no clips to evaluate")

    per_file = []
    for ref, hyp in pairs:
        ref_frames, hyp_frames = frame_grids(ref, hyp, hop_s)
        per_file.append(
            FileRecord(
                clip_id=ref.clip_id,
                reference=ref.utterance_label,
                hypothesis=hyp.utterance_label,
                correct=ref.utterance_label is hyp.utterance_label,
                n_frames=int(hyp_frames.size),
                ref_fake_frames=int(ref_frames.sum()),
                hyp_fake_frames=int(hyp_frames.sum()),
                overlap_frames=int((ref_frames & hyp_frames).sum()),
                n_segments=len(hyp.segments),
                n_isolated=sum(1 for frames in _segment_frames(hyp, hop_s) if frames < iso_min_frames),
            )
        )

    hyps_in_order = [hyp for _, hyp in pairs]
    accuracy = a_sentence(refs, hyps)
    f1 = f1_segment(refs, hyps, hop_s)
    rate, n_isolated = iso_rate(hyps_in_order, iso_min_frames, hop_s)
    report = EvalReport(
        a_sentence=accuracy,
        f1_segment=f1,
        score=score(accuracy, f1),
        iso_rate=rate,
        n_isolated=n_isolated,
        n_audios=len(pairs),
        per_file=per_file,
    )
    log_event(
        logger,
        "evaluated",
        n_audios=report.n_audios,
        a_sentence=report.a_sentence,
        f1_segment=report.f1_segment,
        score=report.score,
        iso_rate=report.iso_rate,
    )
    return report


# =======================
# REPORT FILES
# =======================

def save_report(report: EvalReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8")
    return path


def load_report(path: Union[str, Path]) -> EvalReport:
    return EvalReport.model_validate_json(Path(path).read_text(encoding="utf-8"))
