"""
Before-training corpus expansion.

Every source clip gets ``policy.offline_variants_per_clip`` augmented copies, each
produced by one of:

1. voice_conversion - a segment replaced by a SegmentTransformer and labeled FAKE
2. corpus_noise     - recorded noise over the whole clip (labels unchanged)
3. insertion        - a genuine excerpt from another clip (or the clip itself) inserted

Randomness is derived per source clip from ``(seed, clip_index)`` so the output does
not depend on the number of workers.
"""

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel
from tqdm import tqdm

from spoofloc.augmentation.online import random_region
from spoofloc.augmentation.transforms import aug_add_corpus_noise, aug_insert_real, aug_segment_replace
from spoofloc.augmentation.voice import SegmentTransformer, SpectralWarpTransformer
from spoofloc.data.audio import load_audio, save_audio
from spoofloc.data.manifest import resolve_audio_path, save_manifest
from spoofloc.data.types import DEFAULT_HOP_S, AudioClip, DatasetManifest, ManifestEntry, SegmentAnnotation
from spoofloc.logs import log_event
from spoofloc.settings import AugmentationPolicy

logger = logging.getLogger(__name__)

VOICE_CONVERSION = "voice_conversion"
CORPUS_NOISE = "corpus_noise"
INSERTION = "insertion"

LabeledClip = Tuple[AudioClip, List[SegmentAnnotation]]
TransformerFactory = Callable[[float], SegmentTransformer]
PathLike = Union[str, Path]


class AugmentationRecord(BaseModel):
    source_clip: str
    output_clip: str
    transform: str
    parameters: dict
    seed: List[int]


# =======================
# NOISE BANK
# =======================

def load_noise_bank(directory: PathLike) -> List[np.ndarray]:
    """Every WAV under ``directory`` (any rate, resampled to 16 kHz)."""
    paths = sorted(Path(directory).rglob("*.wav"))
    bank = [load_audio(path).samples for path in paths]
    logger.info("loaded %d noise recordings from %s", len(bank), directory)
    return bank


# =======================
# EXPANSION
# =======================

def _augment_one(
    index: int,
    corpus: Sequence[LabeledClip],
    policy: AugmentationPolicy,
    noise_bank: Sequence[np.ndarray],
    seed: int,
    transformer_factory: Optional[TransformerFactory],
    hop_s: float,
) -> List[Tuple[LabeledClip, AugmentationRecord]]:
    clip, annotations = corpus[index]
    rng = np.random.default_rng([seed, index])
    choices = [VOICE_CONVERSION, INSERTION] + ([CORPUS_NOISE] if noise_bank else [])
    outputs = []

    for variant in range(policy.offline_variants_per_clip):
        name = choices[int(rng.integers(len(choices)))]
        output_id = f"{clip.id}__aug{variant}_{name}"

        if name == VOICE_CONVERSION:
            factor = float(rng.uniform(*policy.warp_factor_range))
            transformer = (transformer_factory or SpectralWarpTransformer)(factor)
            region = random_region(clip.duration_s, policy, rng, hop_s)
            new_clip, new_annotations = aug_segment_replace(clip, annotations, transformer, region, rng)
            parameters = {"transformer": transformer.name, "factor": factor, "region": list(region)}
        elif name == CORPUS_NOISE:
            snr_db = float(rng.uniform(*policy.corpus_noise_snr_range_db))
            new_clip = aug_add_corpus_noise(clip, noise_bank, snr_db, rng)
            new_annotations = list(annotations)
            parameters = {"snr_db": snr_db}
        else:
            donor_index = index if rng.random() < 0.5 else int(rng.integers(len(corpus)))
            donor, donor_annotations = corpus[donor_index]
            longest = min(policy.insertion_max_s, donor.duration_s)
            length = float(rng.uniform(min(policy.region_min_s, longest), longest))
            donor_start = float(rng.uniform(0.0, donor.duration_s - length))
            insert_at = round(float(rng.uniform(0.0, clip.duration_s)) / hop_s) * hop_s
            insert_at = min(insert_at, clip.duration_s)
            new_clip, new_annotations = aug_insert_real(
                clip,
                annotations,
                donor,
                (donor_start, donor_start + length),
                insert_at,
                rng,
                donor_annotations=donor_annotations,
                mark_boundaries=policy.mark_insertion_boundaries,
                boundary_s=policy.insertion_boundary_s,
            )
            parameters = {
                "donor": donor.id,
                "donor_region": [donor_start, donor_start + length],
                "insert_at": insert_at,
            }

        record = AugmentationRecord(
            source_clip=clip.id, output_clip=output_id, transform=name, parameters=parameters, seed=[seed, index]
        )
        outputs.append(((new_clip.with_samples(new_clip.samples, clip_id=output_id), new_annotations), record))
    return outputs


def augment_corpus(
    corpus: Sequence[LabeledClip],
    policy: AugmentationPolicy,
    noise_bank: Sequence[np.ndarray] = (),
    seed: int = 0,
    transformer_factory: Optional[TransformerFactory] = None,
    hop_s: float = DEFAULT_HOP_S,
    workers: int = 1,
    quiet: bool = True,
) -> List[Tuple[LabeledClip, AugmentationRecord]]:
    """Augmented copies of ``corpus`` (sources not included), in source order."""
    corpus = list(corpus)
    indices = range(len(corpus))
    args = (corpus, policy, list(noise_bank), seed, transformer_factory, hop_s)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_clip = list(pool.map(_augment_one, indices, *[[arg] * len(corpus) for arg in args]))
    else:
        per_clip = [_augment_one(i, *args) for i in tqdm(indices, desc="augment", disable=quiet)]

    results = [item for items in per_clip for item in items]
    log_event(logger, "corpus_augmented", sources=len(corpus), outputs=len(results))
    return results


def prepare_corpus(
    manifest: DatasetManifest,
    manifest_root: Optional[PathLike],
    out_dir: PathLike,
    policy: AugmentationPolicy,
    noise_bank: Sequence[np.ndarray] = (),
    seed: int = 0,
    workers: int = 1,
    include_sources: bool = True,
) -> DatasetManifest:
    """Write an expanded corpus (WAVs, ``manifest.jsonl``, ``augmentation_log.jsonl``) to ``out_dir``."""
    out_dir = Path(out_dir)
    wav_dir = out_dir / "wavs"
    corpus = [
        (load_audio(resolve_audio_path(entry, manifest_root), clip_id=entry.clip_id), list(entry.annotations))
        for entry in manifest.entries
    ]
    augmented = augment_corpus(corpus, policy, noise_bank, seed=seed, workers=workers, quiet=False)

    entries = []
    labeled = (corpus if include_sources else []) + [pair for pair, _ in augmented]
    for clip, annotations in labeled:
        relative = Path("wavs") / f"{clip.id}.wav"
        save_audio(out_dir / relative, clip)
        entries.append(ManifestEntry(clip_id=clip.id, audio_path=relative.as_posix(), annotations=annotations))

    expanded = DatasetManifest(entries=entries)
    save_manifest(expanded, out_dir / "manifest.jsonl")
    with (out_dir / "augmentation_log.jsonl").open("w", encoding="utf-8") as handle:
        for _, record in augmented:
            handle.write(json.dumps(record.model_dump(mode="json")) + "\n")

    log_event(logger, "corpus_prepared", out_dir=str(out_dir), clips=len(entries), wav_dir=str(wav_dir))
    return expanded
