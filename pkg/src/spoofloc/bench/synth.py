"""
Synthetic partially-fake corpora.

Each clip is a base signal (harmonic tone mixture, band-shaped noise, or an excerpt of
a user WAV) in which zero or more hop-aligned regions are manipulated with the
augmentation transforms (pitch shift, segment Gaussian noise, spectral warp). The
annotations come from the transforms themselves, so they are exact.

Clip ``i`` with ``i % 10 == 0`` is fully REAL and ``i % 10 == 1`` fully FAKE (when the
fake-fraction range allows it); all other clips are partial with a fake fraction drawn
from the range.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy import signal
from tqdm import tqdm

from spoofloc.augmentation.transforms import aug_gaussian_segment, aug_pitch_shift_segment, aug_segment_replace
from spoofloc.augmentation.voice import SpectralWarpTransformer
from spoofloc.data.audio import load_audio, save_audio
from spoofloc.data.labels import fake_fraction
from spoofloc.data.manifest import save_manifest
from spoofloc.data.types import (
    DEFAULT_HOP_S,
    SAMPLE_RATE,
    AudioClip,
    DatasetManifest,
    Label,
    ManifestEntry,
    SegmentAnnotation,
)
from spoofloc.errors import InputValidationError
from spoofloc.logs import log_event

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
PITCH = "pitch_shift"
GAUSSIAN = "gaussian_segment"
WARP = "spectral_warp"
MANIPULATIONS = (PITCH, GAUSSIAN, WARP)
NOISE_SEED_OFFSET = 1_000_000


class SignalSource(str, Enum):
    TONE_MIXTURE = "tone_mixture"
    NOISE_SHAPED = "noise_shaped"
    USER_WAVS = "user_wavs"


class SynthSpec(BaseModel):
    n_clips: int = Field(100, ge=1)
    clip_duration_s: float = Field(2.0, ge=0.2, description="Length of every clip")
    fake_fraction_range: Tuple[float, float] = Field((0.2, 0.4), description="Fake share of partial clips")
    source: SignalSource = SignalSource.TONE_MIXTURE
    seed: int = 0
    user_wav_dir: Optional[Path] = Field(None, description="Base recordings for USER_WAVS")
    n_noise_files: int = Field(4, ge=0, description="Shaped-noise WAVs written to noise/ for corpus-noise augmentation")
    max_regions: int = Field(2, ge=1)
    hop_s: float = DEFAULT_HOP_S

    @model_validator(mode="after")
    def _check(self) -> "SynthSpec":
        low, high = self.fake_fraction_range
        if not 0.0 <= low <= high <= 1.0:
            raise ValueError(f"fake_fraction_range must satisfy 0 <= low <= high <= 1, got {self.fake_fraction_range}")
        if self.source is SignalSource.USER_WAVS and self.user_wav_dir is None:
            raise ValueError("USER_WAVS needs user_wav_dir")
        return self


class CorpusStats(BaseModel):
    n_clips: int
    n_fully_real: int
    n_fully_fake: int
    n_partial: int
    mean_fake_fraction: float
    fake_duration_share: float
    total_duration_s: float


# =======================
# BASE SIGNALS
# =======================

def _envelope(n: int, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(n) / SAMPLE_RATE
    rate = rng.uniform(2.0, 6.0)
    phase = rng.uniform(0.0, 2 * np.pi)
    return 0.35 + 0.65 * np.abs(np.sin(np.pi * rate * t + phase))


def tone_mixture(n: int, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(n) / SAMPLE_RATE
    f0 = rng.uniform(100.0, 300.0)
    vibrato = 1.0 + 0.01 * np.sin(2 * np.pi * rng.uniform(3.0, 7.0) * t)
    phase = 2 * np.pi * f0 * np.cumsum(vibrato) / SAMPLE_RATE
    weights = rng.uniform(0.2, 1.0, size=4)
    wave = sum(w * np.sin((k + 1) * phase) for k, w in enumerate(weights)) / weights.sum()
    floor = 1e-3 * rng.standard_normal(n)
    return 0.3 * wave * _envelope(n, rng) + floor


def shaped_noise(n: int, rng: np.random.Generator) -> np.ndarray:
    low = rng.uniform(200.0, 1500.0)
    high = min(low * rng.uniform(2.0, 4.0), 7000.0)
    sos = signal.butter(4, [low, high], btype="bandpass", fs=SAMPLE_RATE, output="sos")
    noise = signal.sosfilt(sos, rng.standard_normal(n))
    noise /= np.max(np.abs(noise)) + 1e-12
    return 0.3 * noise * _envelope(n, rng)


def _user_excerpt(n: int, rng: np.random.Generator, directory: Path) -> np.ndarray:
    paths = sorted(directory.rglob("*.wav"))
    if not paths:
        raise InputValidationError(f"no WAV files under {directory}")
    samples = load_audio(paths[int(rng.integers(len(paths)))]).samples
    if samples.size < n:
        return np.resize(samples, n)
    offset = int(rng.integers(0, samples.size - n + 1))
    return samples[offset:offset + n].copy()


def base_signal(spec: SynthSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    if spec.source is SignalSource.TONE_MIXTURE:
        return tone_mixture(n, rng)
    if spec.source is SignalSource.NOISE_SHAPED:
        return shaped_noise(n, rng)
    return _user_excerpt(n, rng, spec.user_wav_dir)


# =======================
# MANIPULATED REGIONS
# =======================

def clip_kind(index: int, spec: SynthSpec) -> str:
    low, high = spec.fake_fraction_range
    if high == 0.0:
        return "real"
    if low == 1.0:
        return "fake"
    if index % 10 == 0:
        return "real"
    if index % 10 == 1:
        return "fake"
    return "partial"


def plan_regions(n_hops: int, fraction: float, max_regions: int, rng: np.random.Generator) -> List[Tuple[int, int]]:
    """Up to ``max_regions`` disjoint hop ranges covering ``round(fraction * n_hops)`` hops in total."""
    fake_hops = int(round(fraction * n_hops))
    if fake_hops == 0:
        return []
    if fake_hops >= n_hops:
        return [(0, n_hops)]
    k = int(rng.integers(1, max_regions + 1)) if fake_hops >= 20 else 1
    cuts = np.sort(rng.choice(np.arange(1, fake_hops), size=k - 1, replace=False)) if k > 1 else np.array([], int)
    lengths = np.diff(np.concatenate([[0], cuts, [fake_hops]])).astype(int)
    gaps = rng.multinomial(n_hops - fake_hops, np.full(k + 1, 1.0 / (k + 1)))
    regions = []
    position = int(gaps[0])
    for length, gap in zip(lengths, gaps[1:]):
        regions.append((position, position + int(length)))
        position += int(length) + int(gap)
    return regions


def _manipulate(
    clip: AudioClip,
    annotations: List[SegmentAnnotation],
    region: Tuple[float, float],
    rng: np.random.Generator,
) -> Tuple[AudioClip, List[SegmentAnnotation], str]:
    name = MANIPULATIONS[int(rng.integers(len(MANIPULATIONS)))]
    if name == PITCH:
        semitones = float(rng.uniform(1.0, 4.0)) * (1 if rng.random() < 0.5 else -1)
        clip, annotations = aug_pitch_shift_segment(clip, annotations, region, semitones, rng)
    elif name == GAUSSIAN:
        clip, annotations = aug_gaussian_segment(clip, annotations, region, float(rng.uniform(0.0, 10.0)) + 1e-3, rng)
    else:
        factor = float(rng.choice([rng.uniform(0.8, 0.92), rng.uniform(1.08, 1.2)]))
        clip, annotations = aug_segment_replace(clip, annotations, SpectralWarpTransformer(factor), region, rng)
    return clip, annotations, name


def synth_clip(spec: SynthSpec, index: int) -> Tuple[AudioClip, List[SegmentAnnotation]]:
    rng = np.random.default_rng([spec.seed, index])
    n_samples = int(round(spec.clip_duration_s * SAMPLE_RATE))
    clip = AudioClip(id=f"synth_{index:05d}", samples=base_signal(spec, n_samples, rng))
    duration_s = clip.duration_s
    annotations = [SegmentAnnotation(start_s=0.0, end_s=duration_s, label=Label.REAL)]

    kind = clip_kind(index, spec)
    n_hops = int(np.floor(duration_s / spec.hop_s + 1e-9))
    if kind == "partial":
        fraction = float(rng.uniform(*spec.fake_fraction_range))
        regions = plan_regions(n_hops, fraction, spec.max_regions, rng)
    else:
        regions = []

    if kind == "fake":
        clip, annotations, _ = _manipulate(clip, annotations, (0.0, duration_s), rng)
    for start, stop in regions:
        region = (round(start * spec.hop_s, 9), round(stop * spec.hop_s, 9))
        clip, annotations, _ = _manipulate(clip, annotations, region, rng)
    return clip, annotations


# =======================
# CORPUS
# =======================

def _write_clip(spec: SynthSpec, index: int, out_dir: Path) -> ManifestEntry:
    clip, annotations = synth_clip(spec, index)
    relative = Path("wavs") / f"{clip.id}.wav"
    save_audio(out_dir / relative, clip)
    return ManifestEntry(clip_id=clip.id, audio_path=relative.as_posix(), annotations=annotations)


def write_noise_bank(spec: SynthSpec, out_dir: Path) -> List[Path]:
    paths = []
    for j in range(spec.n_noise_files):
        rng = np.random.default_rng([spec.seed, NOISE_SEED_OFFSET + j])
        samples = shaped_noise(SAMPLE_RATE, rng)
        path = out_dir / "noise" / f"noise_{j:02d}.wav"
        save_audio(path, AudioClip(id=path.stem, samples=samples))
        paths.append(path)
    return paths


def generate(spec: SynthSpec, out_dir: PathLike, workers: int = 1, quiet: bool = True) -> DatasetManifest:
    """Write ``wavs/``, ``noise/`` and ``manifest.jsonl`` under ``out_dir``; output is independent of ``workers``."""
    out_dir = Path(out_dir)
    (out_dir / "wavs").mkdir(parents=True, exist_ok=True)

    indices = range(spec.n_clips)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_write_clip, [spec] * spec.n_clips, indices, [out_dir] * spec.n_clips))
    else:
        entries = [_write_clip(spec, i, out_dir) for i in tqdm(indices, desc="synth", disable=quiet)]

    write_noise_bank(spec, out_dir)
    manifest = DatasetManifest(entries=entries)
    save_manifest(manifest, out_dir / "manifest.jsonl")
    stats = corpus_stats(manifest)
    log_event(logger, "corpus_generated", out_dir=str(out_dir), **stats.model_dump())
    return manifest


def corpus_stats(manifest: DatasetManifest) -> CorpusStats:
    fractions = [fake_fraction(entry.annotations) for entry in manifest.entries]
    durations = [entry.duration_s for entry in manifest.entries]
    total = float(sum(durations))
    fake_total = float(sum(f * d for f, d in zip(fractions, durations)))
    return CorpusStats(
        n_clips=len(fractions),
        n_fully_real=sum(1 for f in fractions if f == 0.0),
        n_fully_fake=sum(1 for f in fractions if f == 1.0),
        n_partial=sum(1 for f in fractions if 0.0 < f < 1.0),
        mean_fake_fraction=float(np.mean(fractions)) if fractions else 0.0,
        fake_duration_share=fake_total / total if total > 0 else 0.0,
        total_duration_s=total,
    )


def format_stats(stats: CorpusStats) -> str:
    return "\n".join(f"{name:<20} {value}" for name, value in stats.model_dump().items())
