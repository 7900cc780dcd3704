"""
Training loop.

    corpus -> [dev split] -> [before-training expansion] -> FrameDataset (+ in-training aug)
           -> padded batches -> tagger -> L = L_SF + L_MFD + alpha * R -> Adam
           -> per-epoch dev evaluation -> best checkpoint by dev score
"""

import copy
import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from torch.utils.data import DataLoader
from tqdm import tqdm

from spoofloc.augmentation.offline import augment_corpus
from spoofloc.data.types import AudioClip, FrameSequence
from spoofloc.errors import InputValidationError, TrainingError
from spoofloc.evaluation.decoding import decode_sequence, reference_hypothesis
from spoofloc.evaluation.metrics import EvalReport, evaluate
from spoofloc.features.cache import FeatureCache
from spoofloc.features.mel import model_input
from spoofloc.logs import log_event
from spoofloc.losses import total_loss
from spoofloc.model.framing import batch_window_targets
from spoofloc.model.tagger import SpoofLocTagger
from spoofloc.settings import MelConfig, RunConfig, dump_config
from spoofloc.training.checkpoint import save_checkpoint
from spoofloc.training.dataset import Batch, FrameDataset, FrameExample, LabeledClip, collate_frames, too_short

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
BEST_CHECKPOINT = "best.pt"
HISTORY_FILE = "history.jsonl"


@dataclass
class TrainResult:
    model: SpoofLocTagger
    history: List[Dict[str, Optional[float]]]
    best_epoch: int
    best_dev_score: Optional[float]
    checkpoint_path: Optional[Path] = None
    extras: Dict[str, int] = field(default_factory=dict)


def set_seed(seed: int, deterministic: bool = True) -> None:
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)
    if deterministic:
        torch.use_deterministic_algorithms(True, warn_only=True)
        torch.backends.cudnn.deterministic = True
        torch.backends.cudnn.benchmark = False


def split_dev(corpus: Sequence[LabeledClip], fraction: float, seed: int) -> Tuple[List[LabeledClip], List[LabeledClip]]:
    """Hold out ``fraction`` of the corpus (at least one clip, never all of it)."""
    corpus = list(corpus)
    if fraction <= 0.0 or len(corpus) < 2:
        return corpus, []
    order = np.random.default_rng([seed, 1]).permutation(len(corpus))
    n_dev = min(len(corpus) - 1, max(1, int(round(fraction * len(corpus)))))
    held_out = set(order[:n_dev].tolist())
    train_part = [item for i, item in enumerate(corpus) if i not in held_out]
    dev_part = [item for i, item in enumerate(corpus) if i in held_out]
    return train_part, dev_part


# =======================
# INFERENCE
# =======================

def predict(
    model: SpoofLocTagger,
    clips: Sequence[AudioClip],
    mel: MelConfig,
    batch_size: int = 16,
    threshold: float = 0.5,
    device: Union[str, torch.device] = "cpu",
) -> List[FrameSequence]:
    """Fake-class probabilities per frame for each clip."""
    model.eval()
    results: List[FrameSequence] = []
    with torch.no_grad():
        for start in range(0, len(clips), batch_size):
            chunk = clips[start:start + batch_size]
            examples = []
            for clip in chunk:
                features = model_input(clip, mel)
                examples.append(FrameExample(clip.id, features, np.zeros(features.shape[0], dtype=np.int64)))
            batch = collate_frames(examples).to(device)
            output = model(batch.features, batch.lengths)
            probs = output.frame_probs.detach().cpu().double().numpy()
            for row, example in enumerate(examples):
                row_probs = np.clip(probs[row, :example.labels.size], 0.0, 1.0)
                results.append(
                    FrameSequence(
                        clip_id=example.clip_id,
                        hop_s=mel.hop_s,
                        labels=(row_probs > threshold).astype(np.int64),
                        probabilities=row_probs,
                    )
                )
    return results


def evaluate_model(
    model: SpoofLocTagger,
    corpus: Sequence[LabeledClip],
    mel: MelConfig,
    threshold: float = 0.5,
    iso_min_frames: int = 6,
    batch_size: int = 16,
    device: Union[str, torch.device] = "cpu",
) -> EvalReport:
    frames = predict(model, [clip for clip, _ in corpus], mel, batch_size, threshold, device)
    hyps = [decode_sequence(sequence, threshold) for sequence in frames]
    refs = [reference_hypothesis(clip.id, annotations) for clip, annotations in corpus]
    return evaluate(refs, hyps, mel.hop_s, iso_min_frames)


# =======================
# TRAINING
# =======================

def _step_loss(model: SpoofLocTagger, batch: Batch, config: RunConfig):
    output = model(batch.features, batch.lengths)
    targets = window_mask = None
    if output.mfd_logits is not None:
        targets, window_mask = batch_window_targets(batch.labels.float(), batch.mask, output.window_factor)
    return total_loss(
        output.frame_logits,
        batch.labels,
        output.mfd_logits,
        targets,
        config.loss,
        mask=batch.mask,
        window_mask=window_mask,
        use_ifp=config.train.toggles.use_ifp,
    )


def train(
    train_corpus: Sequence[LabeledClip],
    config: RunConfig,
    dev_corpus: Optional[Sequence[LabeledClip]] = None,
    out_dir: Optional[PathLike] = None,
    noise_bank: Sequence[np.ndarray] = (),
    transformer_factory: Optional[Callable] = None,
    device: Union[str, torch.device] = "cpu",
    quiet: bool = True,
    cache_dir: Optional[PathLike] = None,
) -> TrainResult:
    """Train a tagger on ``train_corpus``.

    Without ``dev_corpus`` a ``train.dev_fraction`` share is held out. When no dev set
    remains the last epoch is kept. With ``out_dir`` the resolved config, the history
    (one JSON line per epoch) and the best checkpoint are written there. Source-clip features are
    kept under ``cache_dir`` when given.
    """
    tc = config.train
    toggles = tc.toggles
    set_seed(tc.seed, tc.deterministic)

    if not train_corpus:
        raise InputValidationError("training corpus is empty")
    model = SpoofLocTagger(config.model, use_mfd=toggles.use_mfd).to(device)
    short = too_short(list(train_corpus) + list(dev_corpus or []), config.mel, model.min_frames)
    if short:
        raise InputValidationError(f"clips shorter than {model.min_frames} frames: {short}")

    if dev_corpus is None:
        train_part, dev_part = split_dev(train_corpus, tc.dev_fraction, tc.seed)
    else:
        train_part, dev_part = list(train_corpus), list(dev_corpus)

    n_sources = len(train_part)
    if toggles.use_befaug:
        expanded = augment_corpus(
            train_part,
            config.augmentation,
            noise_bank,
            seed=tc.seed,
            transformer_factory=transformer_factory,
            hop_s=config.mel.hop_s,
            quiet=quiet,
        )
        train_part = train_part + [pair for pair, _ in expanded]

    cache = FeatureCache(cache_dir, config.mel) if cache_dir is not None else None
    dataset = FrameDataset(
        train_part,
        config.mel,
        config.augmentation,
        seed=tc.seed,
        augment=toggles.use_inaug,
        cache=cache,
        n_cached=n_sources,
    )
    loader = DataLoader(
        dataset,
        batch_size=tc.batch_size,
        shuffle=True,
        num_workers=tc.num_workers,
        collate_fn=collate_frames,
        generator=torch.Generator().manual_seed(tc.seed),
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=tc.learning_rate, weight_decay=tc.weight_decay)

    out_path = Path(out_dir) if out_dir is not None else None
    history_path = None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        (out_path / "config.yaml").write_text(dump_config(config), encoding="utf-8")
        history_path = out_path / HISTORY_FILE
        history_path.write_text("", encoding="utf-8")

    log_event(
        logger,
        "train_start",
        sources=n_sources,
        examples=len(dataset),
        dev=len(dev_part),
        epochs=tc.epochs,
        **toggles.model_dump(),
    )

    history: List[Dict[str, Optional[float]]] = []
    best_state = None
    best_epoch = -1
    best_score: Optional[float] = None
    checkpoint_path = None
    global_step = 0

    for epoch in tqdm(range(tc.epochs), desc="epochs", disable=quiet):
        model.train()
        dataset.set_epoch(epoch)
        sums = {"L": 0.0, "L_SF": 0.0, "L_MFD": 0.0, "R": 0.0}
        n_steps = 0

        for batch in loader:
            batch = batch.to(device)
            loss, components = _step_loss(model, batch, config)
            if not torch.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, step {global_step}; batch clips: {batch.clip_ids}"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()

            values = components.as_floats()
            for key, value in values.items():
                sums[key] += value
            n_steps += 1
            global_step += 1
            log_event(logger, "train_step", logging.DEBUG, epoch=epoch, step=global_step, **values)

        row: Dict[str, Optional[float]] = {"epoch": epoch}
        row.update({key: value / max(n_steps, 1) for key, value in sums.items()})
        dev_score = None
        if dev_part:
            report = evaluate_model(model, dev_part, config.mel, tc.threshold, tc.iso_min_frames, device=device)
            dev_score = report.score
            row.update(dev_score=report.score, dev_iso_rate=report.iso_rate, dev_a_sentence=report.a_sentence,
                       dev_f1_segment=report.f1_segment)
        history.append(row)
        log_event(logger, "epoch_end", **row)
        if history_path is not None:
            with history_path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(row) + "\n")

        improved = dev_score is None or best_score is None or dev_score > best_score
        if improved:
            best_state = copy.deepcopy(model.state_dict())
            best_epoch = epoch
            best_score = dev_score
            if out_path is not None:
                checkpoint_path = save_checkpoint(out_path / BEST_CHECKPOINT, model, config.mel, epoch, row)

    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    log_event(logger, "train_end", best_epoch=best_epoch, best_dev_score=best_score)
    return TrainResult(
        model=model,
        history=history,
        best_epoch=best_epoch,
        best_dev_score=best_score,
        checkpoint_path=checkpoint_path,
        extras={"sources": n_sources, "examples": len(dataset), "dev": len(dev_part)},
    )
