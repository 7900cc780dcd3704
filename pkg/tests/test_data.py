import json

import numpy as np
import pytest
import soundfile as sf
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from spoofloc.data import (
    AudioClip,
    DatasetManifest,
    FrameSequence,
    Label,
    ManifestEntry,
    ManipulationHypothesis,
    SegmentAnnotation,
    UtteranceLabel,
    annotations_to_frame_labels,
    check_tiling,
    frame_labels_to_segments,
    load_audio,
    load_hypotheses,
    load_manifest,
    merge_adjacent,
    relabel_region,
    save_audio,
    save_hypotheses,
    save_manifest,
)
from spoofloc.errors import InputValidationError


def seg(start, end, label):
    return SegmentAnnotation(start_s=start, end_s=end, label=Label(label))


# =======================
# TYPES
# =======================

def test_clip_requires_one_window():
    with pytest.raises(ValidationError):
        AudioClip(id="short", samples=np.zeros(799))
    assert AudioClip(id="ok", samples=np.zeros(800)).duration_s == pytest.approx(0.05)


def test_clip_rejects_other_rates():
    with pytest.raises(ValidationError):
        AudioClip(id="x", samples=np.zeros(1600), sample_rate=8000)


def test_clip_samples_are_read_only(make_clip):
    clip = make_clip()
    with pytest.raises(ValueError):
        clip.samples[0] = 1.0


def test_segment_end_must_follow_start():
    with pytest.raises(ValidationError):
        seg(0.5, 0.4, "real")
    with pytest.raises(ValidationError):
        seg(0.5, 0.5, "fake")


def test_frame_sequence_lengths_must_match():
    with pytest.raises(ValidationError):
        FrameSequence(clip_id="x", labels=[0, 1, 1], probabilities=[0.1, 0.9])
    frames = FrameSequence(clip_id="x", labels=[0, 1], probabilities=[0.1, 0.9])
    assert frames.n_frames == 2
    assert frames.hop_s == 0.010


def test_hypothesis_verdict_must_match_segments():
    with pytest.raises(ValidationError):
        ManipulationHypothesis(
            clip_id="x", segments=[seg(0.0, 1.0, "fake")], utterance_label=UtteranceLabel.GENUINE
        )
    hypothesis = ManipulationHypothesis.from_segments("x", [seg(0.0, 0.4, "real"), seg(0.4, 1.0, "fake")])
    assert hypothesis.utterance_label is UtteranceLabel.FAKE


def test_manifest_rejects_duplicate_ids():
    entry = ManifestEntry(clip_id="a", audio_path="a.wav", annotations=[seg(0.0, 1.0, "real")])
    with pytest.raises(ValidationError):
        DatasetManifest(entries=[entry, entry])


def test_check_tiling_names_offending_interval():
    with pytest.raises(InputValidationError, match=r"\[0.25, 1.0\) overlaps"):
        check_tiling([seg(0.0, 0.3, "real"), seg(0.25, 1.0, "fake")])
    with pytest.raises(InputValidationError, match="gap before interval"):
        check_tiling([seg(0.0, 0.3, "real"), seg(0.35, 1.0, "fake")])
    with pytest.raises(InputValidationError, match="start at 0.0"):
        check_tiling([seg(0.1, 1.0, "real")])
    with pytest.raises(InputValidationError, match="clip duration"):
        check_tiling([seg(0.0, 1.0, "real")], duration_s=2.0)


# =======================
# LABEL CONVERSION
# =======================

def test_frame_center_rule():
    labels = annotations_to_frame_labels([seg(0.0, 0.03, "real"), seg(0.03, 0.06, "fake")], 6, 0.01)
    assert labels.tolist() == [0, 0, 0, 1, 1, 1]


def test_uniform_annotations():
    assert not annotations_to_frame_labels([seg(0.0, 1.0, "real")], 100, 0.01).any()
    assert annotations_to_frame_labels([seg(0.0, 0.5, "fake"), seg(0.5, 1.0, "fake")], 100, 0.01).all()


def test_one_hop_of_slack_at_the_end():
    labels = annotations_to_frame_labels([seg(0.0, 0.5, "real"), seg(0.5, 0.995, "fake")], 100, 0.01)
    assert labels[-1] == 1
    with pytest.raises(InputValidationError, match="uncovered"):
        annotations_to_frame_labels([seg(0.0, 0.95, "real")], 100, 0.01)


def test_gapped_annotations_are_rejected():
    with pytest.raises(InputValidationError):
        annotations_to_frame_labels([seg(0.0, 0.3, "real"), seg(0.4, 1.0, "fake")], 100, 0.01)


def test_run_length_segments():
    segments = frame_labels_to_segments([0, 0, 1, 1, 1, 0], 0.01)
    assert [s.as_triple() for s in segments] == [
        [0.0, 0.02, "real"],
        [0.02, 0.05, "fake"],
        [0.05, 0.06, "real"],
    ]
    assert [s.as_triple() for s in frame_labels_to_segments([0] * 10, 0.01)] == [[0.0, 0.1, "real"]]
    assert [s.as_triple() for s in frame_labels_to_segments([1], 0.01)] == [[0.0, 0.01, "fake"]]


def test_empty_labels_are_rejected():
    with pytest.raises(InputValidationError):
        frame_labels_to_segments([], 0.01)


@settings(max_examples=1000, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=1), min_size=1, max_size=300))
def test_round_trip_and_tiling(labels):
    segments = frame_labels_to_segments(labels, 0.01)
    check_tiling(segments)
    assert abs(sum(s.duration_s for s in segments) - len(labels) * 0.01) <= 1e-9
    back = annotations_to_frame_labels(segments, len(labels), 0.01)
    assert back.tolist() == list(labels)


def test_relabel_region_keeps_tiling():
    annotations = relabel_region([seg(0.0, 1.0, "real")], 0.2, 0.4, Label.FAKE)
    assert [a.as_triple() for a in annotations] == [
        [0.0, 0.2, "real"],
        [0.2, 0.4, "fake"],
        [0.4, 1.0, "real"],
    ]
    assert [a.as_triple() for a in relabel_region(annotations, 0.0, 1.0, Label.FAKE)] == [[0.0, 1.0, "fake"]]


def test_merge_adjacent_joins_equal_labels():
    merged = merge_adjacent([seg(0.0, 0.5, "fake"), seg(0.5, 0.7, "fake"), seg(0.7, 1.0, "real")])
    assert [a.as_triple() for a in merged] == [[0.0, 0.7, "fake"], [0.7, 1.0, "real"]]


# =======================
# FILES
# =======================

def _write_manifest(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path


def test_empty_manifest(tmp_path):
    path = tmp_path / "manifest.jsonl"
    path.write_text("", encoding="utf-8")
    assert len(load_manifest(path)) == 0


def test_one_record_manifest(tmp_path, make_clip):
    save_audio(tmp_path / "wavs" / "a.wav", make_clip("a"))
    path = _write_manifest(
        tmp_path / "manifest.jsonl",
        [{"clip_id": "a", "audio_path": "wavs/a.wav", "annotations": [[0.0, 1.0, "real"]]}],
    )
    manifest = load_manifest(path)
    assert len(manifest) == 1
    assert manifest.entries[0].clip_id == "a"


def test_malformed_record_reports_line(tmp_path):
    path = tmp_path / "manifest.jsonl"
    path.write_text(
        json.dumps({"clip_id": "a", "audio_path": "a.wav", "annotations": [[0.0, 1.0, "real"]]})
        + "\n"
        + json.dumps({"clip_id": "b", "audio_path": "b.wav", "annotations": [[0.6, 0.4, "fake"]]})
        + "\n",
        encoding="utf-8",
    )
    with pytest.raises(InputValidationError, match=":2:"):
        load_manifest(path, check_audio=False)


def test_invalid_json_reports_line(tmp_path):
    path = tmp_path / "manifest.jsonl"
    path.write_text("{not json\n", encoding="utf-8")
    with pytest.raises(InputValidationError, match=":1:"):
        load_manifest(path, check_audio=False)


def test_missing_audio_is_listed(tmp_path):
    path = _write_manifest(
        tmp_path / "manifest.jsonl",
        [
            {"clip_id": "a", "audio_path": "nowhere/a.wav", "annotations": [[0.0, 1.0, "real"]]},
            {"clip_id": "b", "audio_path": "nowhere/b.wav", "annotations": [[0.0, 1.0, "real"]]},
        ],
    )
    with pytest.raises(InputValidationError, match=r"a\.wav.*b\.wav"):
        load_manifest(path)


def test_missing_manifest_file(tmp_path):
    with pytest.raises(InputValidationError, match="not found"):
        load_manifest(tmp_path / "absent.jsonl")


def test_manifest_round_trip_is_byte_stable(tmp_path):
    manifest = DatasetManifest(
        entries=[
            ManifestEntry(
                clip_id="a",
                audio_path="wavs/a.wav",
                annotations=[seg(0.0, 0.42, "real"), seg(0.42, 1.0, "fake")],
            )
        ]
    )
    first = save_manifest(manifest, tmp_path / "one.jsonl")
    loaded = load_manifest(first, check_audio=False)
    assert loaded == manifest
    second = save_manifest(loaded, tmp_path / "two.jsonl")
    assert first.read_bytes() == second.read_bytes()


def test_hypothesis_round_trip_is_byte_stable(tmp_path):
    rng = np.random.default_rng(3)
    hypotheses = [
        ManipulationHypothesis.from_segments(f"h{i}", frame_labels_to_segments(rng.integers(0, 2, 57), 0.01))
        for i in range(20)
    ]
    first = save_hypotheses(hypotheses, tmp_path / "one.jsonl")
    loaded = load_hypotheses(first)
    assert loaded == hypotheses
    second = save_hypotheses(loaded, tmp_path / "two.jsonl")
    assert first.read_bytes() == second.read_bytes()


def test_duplicate_hypotheses_are_rejected(tmp_path):
    hypothesis = ManipulationHypothesis.from_segments("a", [seg(0.0, 1.0, "real")])
    path = save_hypotheses([hypothesis, hypothesis], tmp_path / "dup.jsonl")
    with pytest.raises(InputValidationError, match="duplicate"):
        load_hypotheses(path)


# =======================
# AUDIO
# =======================

def test_audio_round_trip(tmp_path, make_clip):
    clip = make_clip("tone")
    loaded = load_audio(save_audio(tmp_path / "tone.wav", clip))
    assert loaded.id == "tone"
    assert loaded.samples.size == clip.samples.size
    assert np.max(np.abs(loaded.samples - clip.samples)) <= 1.0 / 32768 + 1e-9


def test_audio_is_resampled(tmp_path, tone):
    path = tmp_path / "slow.wav"
    sf.write(str(path), tone(220.0, 1.0)[::2], 8000, subtype="PCM_16")
    clip = load_audio(path)
    assert clip.sample_rate == 16000
    assert abs(clip.samples.size - 16000) <= 1


def test_stereo_is_rejected(tmp_path, tone):
    path = tmp_path / "stereo.wav"
    signal = tone(220.0, 0.5)
    sf.write(str(path), np.stack([signal, signal], axis=1), 16000, subtype="PCM_16")
    with pytest.raises(InputValidationError, match="mono"):
        load_audio(path)


def test_short_audio_is_rejected(tmp_path):
    path = tmp_path / "short.wav"
    sf.write(str(path), np.zeros(400), 16000, subtype="PCM_16")
    with pytest.raises(InputValidationError, match="analysis window"):
        load_audio(path)
