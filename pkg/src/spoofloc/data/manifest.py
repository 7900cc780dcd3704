"""
Line-delimited manifest and hypothesis files.

Manifest record::

    {"clip_id": "clip_0001", "audio_path": "wavs/clip_0001.wav",
     "annotations": [[0.0, 0.42, "real"], [0.42, 1.0, "fake"]]}

Hypothesis record::

    {"clip_id": "clip_0001", "utterance_label": "fake",
     "segments": [[0.0, 0.4, "real"], [0.4, 0.96, "fake"]]}

Audio paths are resolved relative to the manifest's directory.
"""

import json
import logging
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Tuple, Union

from pydantic import ValidationError

from spoofloc.data.types import (
    DatasetManifest,
    ManifestEntry,
    ManipulationHypothesis,
    SegmentAnnotation,
    UtteranceLabel,
)
from spoofloc.errors import InputValidationError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


# =======================
# HELPERS
# =======================

def _records(path: Path) -> Iterator[Tuple[int, dict]]:
    if not path.is_file():
        raise InputValidationError(f"file not found: {path}")
    with path.open("r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputValidationError(f"{path}:{line_number}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise InputValidationError(f"{path}:{line_number}: expected a JSON object per line")
            yield line_number, record


def _parse_segments(raw, path: Path, line_number: int, field: str) -> List[SegmentAnnotation]:
    if not isinstance(raw, list):
        raise InputValidationError(f"{path}:{line_number}: '{field}' must be a list of [start_s, end_s, label]")
    try:
        return [SegmentAnnotation.from_triple(triple) for triple in raw]
    except (ValidationError, ValueError, TypeError) as exc:
        raise InputValidationError(f"{path}:{line_number}: invalid segment in '{field}': {exc}") from exc


def _write_lines(path: Path, records: Iterable[dict]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
    return path


def resolve_audio_path(entry: ManifestEntry, root: Optional[PathLike]) -> Path:
    audio = Path(entry.audio_path)
    if audio.is_absolute() or root is None:
        return audio
    return Path(root) / audio


# =======================
# MANIFESTS
# =======================

def load_manifest(path: PathLike, check_audio: bool = True) -> DatasetManifest:
    path = Path(path)
    entries = []
    for line_number, record in _records(path):
        missing = {"clip_id", "audio_path", "annotations"} - record.keys()
        if missing:
            raise InputValidationError(f"{path}:{line_number}: missing fields {sorted(missing)}")
        annotations = _parse_segments(record["annotations"], path, line_number, "annotations")
        try:
            entries.append(
                ManifestEntry(
                    clip_id=str(record["clip_id"]),
                    audio_path=str(record["audio_path"]),
                    annotations=annotations,
                )
            )
        except ValidationError as exc:
            raise InputValidationError(f"{path}:{line_number}: {exc}") from exc

    try:
        manifest = DatasetManifest(entries=entries)
    except ValidationError as exc:
        raise InputValidationError(f"{path}: {exc}") from exc

    if check_audio:
        missing_audio = [
            str(resolve_audio_path(entry, path.parent))
            for entry in manifest.entries
            if not resolve_audio_path(entry, path.parent).is_file()
        ]
        if missing_audio:
            raise InputValidationError(f"{path}: audio files not found: {missing_audio}")

    logger.info("loaded manifest %s with %d entries", path, len(manifest))
    return manifest


def save_manifest(manifest: DatasetManifest, path: PathLike) -> Path:
    return _write_lines(
        Path(path),
        (
            {
                "clip_id": entry.clip_id,
                "audio_path": entry.audio_path,
                "annotations": [a.as_triple() for a in entry.annotations],
            }
            for entry in manifest.entries
        ),
    )


# =======================
# HYPOTHESES
# =======================

def save_hypotheses(hypotheses: Iterable[ManipulationHypothesis], path: PathLike) -> Path:
    return _write_lines(
        Path(path),
        (
            {
                "clip_id": hypothesis.clip_id,
                "utterance_label": hypothesis.utterance_label.value,
                "segments": [s.as_triple() for s in hypothesis.segments],
            }
            for hypothesis in hypotheses
        ),
    )


def load_hypotheses(path: PathLike) -> List[ManipulationHypothesis]:
    path = Path(path)
    hypotheses = []
    seen = set()
    for line_number, record in _records(path):
        missing = {"clip_id", "utterance_label", "segments"} - record.keys()
        if missing:
            raise InputValidationError(f"{path}:{line_number}: missing fields {sorted(missing)}")
        segments = _parse_segments(record["segments"], path, line_number, "segments")
        try:
            hypothesis = ManipulationHypothesis(
                clip_id=str(record["clip_id"]),
                segments=segments,
                utterance_label=UtteranceLabel(str(record["utterance_label"]).lower()),
            )
        except (ValidationError, ValueError) as exc:
            raise InputValidationError(f"{path}:{line_number}: {exc}") from exc
        if hypothesis.clip_id in seen:
            raise InputValidationError(f"{path}:{line_number}: duplicate clip_id {hypothesis.clip_id!r}")
        seen.add(hypothesis.clip_id)
        hypotheses.append(hypothesis)
    return hypotheses
