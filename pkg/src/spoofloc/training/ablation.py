"""
Ablation harness.

Each row trains the tagger with one toggle set for every seed and reports the mean of
dev-score, iso-rate, aug-dev-score, aug-iso-rate and (with a test corpus) test-score.
The default grid removes components one after another:

    full system
      -IFP
        -MFD
          -InAug
            -BefAug      (plain RCNN + BLSTM baseline)
"""

import json
import logging
from pathlib import Path
from statistics import mean
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel

from spoofloc.augmentation.offline import augment_corpus
from spoofloc.errors import InputValidationError
from spoofloc.logs import log_event
from spoofloc.settings import RunConfig, Toggles
from spoofloc.training.dataset import LabeledClip
from spoofloc.training.trainer import evaluate_model, split_dev, train

logger = logging.getLogger(__name__)

GridRow = Tuple[str, Toggles]

ABLATION_GRID: List[GridRow] = [
    ("full", Toggles()),
    ("-IFP", Toggles(use_ifp=False)),
    ("-IFP -MFD", Toggles(use_ifp=False, use_mfd=False)),
    ("-IFP -MFD -InAug", Toggles(use_ifp=False, use_mfd=False, use_inaug=False)),
    ("-IFP -MFD -InAug -BefAug", Toggles(use_ifp=False, use_mfd=False, use_inaug=False, use_befaug=False)),
]


class AblationRow(BaseModel):
    name: str
    toggles: Toggles
    seeds: List[int]
    dev_score: float
    iso_rate: float
    aug_dev_score: Optional[float] = None
    aug_iso_rate: Optional[float] = None
    test_score: Optional[float] = None


class AblationReport(BaseModel):
    rows: List[AblationRow] = []


def _toggle_key(toggles: Toggles) -> Tuple[bool, ...]:
    return (toggles.use_mfd, toggles.use_ifp, toggles.use_befaug, toggles.use_inaug)


def dedupe_grid(grid: Sequence[GridRow]) -> List[GridRow]:
    seen = {}
    unique: List[GridRow] = []
    for name, toggles in grid:
        key = _toggle_key(toggles)
        if key in seen:
            logger.warning("ablation row %r repeats the toggles of %r; dropped", name, seen[key])
            continue
        seen[key] = name
        unique.append((name, toggles))
    return unique


def _with_run(config: RunConfig, toggles: Toggles, seed: int) -> RunConfig:
    return config.model_copy(update={"train": config.train.model_copy(update={"toggles": toggles, "seed": seed})})


def _mean(values: List[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return mean(present) if present else None


def ablation_run(
    train_corpus: Sequence[LabeledClip],
    config: RunConfig,
    grid: Sequence[GridRow] = ABLATION_GRID,
    dev_corpus: Optional[Sequence[LabeledClip]] = None,
    test_corpus: Optional[Sequence[LabeledClip]] = None,
    seeds: Sequence[int] = (0,),
    noise_bank: Sequence[np.ndarray] = (),
    augmented_dev: bool = True,
    device: str = "cpu",
    quiet: bool = True,
) -> AblationReport:
    rows = dedupe_grid(grid)
    if not rows:
        return AblationReport(rows=[])
    if not seeds:
        raise InputValidationError("ablation needs at least one seed")

    if dev_corpus is None:
        train_corpus, dev_corpus = split_dev(train_corpus, config.train.dev_fraction, config.train.seed)
    dev_corpus = list(dev_corpus)
    if not dev_corpus:
        raise InputValidationError("ablation needs a dev set (pass one or set train.dev_fraction > 0)")

    aug_dev = None
    if augmented_dev:
        aug_dev = [
            pair
            for pair, _ in augment_corpus(
                dev_corpus, config.augmentation, noise_bank, seed=config.train.seed, hop_s=config.mel.hop_s
            )
        ]

    tc = config.train
    report_rows = []
    for name, toggles in rows:
        per_seed = {"dev": [], "iso": [], "aug_dev": [], "aug_iso": [], "test": []}
        for seed in seeds:
            run = _with_run(config, toggles, seed)
            result = train(train_corpus, run, dev_corpus=dev_corpus, noise_bank=noise_bank, device=device, quiet=quiet)
            dev = evaluate_model(result.model, dev_corpus, run.mel, tc.threshold, tc.iso_min_frames, device=device)
            per_seed["dev"].append(dev.score)
            per_seed["iso"].append(dev.iso_rate)
            if aug_dev:
                report = evaluate_model(result.model, aug_dev, run.mel, tc.threshold, tc.iso_min_frames, device=device)
                per_seed["aug_dev"].append(report.score)
                per_seed["aug_iso"].append(report.iso_rate)
            if test_corpus:
                report = evaluate_model(
                    result.model, test_corpus, run.mel, tc.threshold, tc.iso_min_frames, device=device
                )
                per_seed["test"].append(report.score)

        row = AblationRow(
            name=name,
            toggles=toggles,
            seeds=list(seeds),
            dev_score=mean(per_seed["dev"]),
            iso_rate=mean(per_seed["iso"]),
            aug_dev_score=_mean(per_seed["aug_dev"]),
            aug_iso_rate=_mean(per_seed["aug_iso"]),
            test_score=_mean(per_seed["test"]),
        )
        log_event(logger, "ablation_row", **row.model_dump(exclude={"toggles", "seeds"}))
        report_rows.append(row)
    return AblationReport(rows=report_rows)


def _cell(value: Optional[float], percent: bool = False) -> str:
    if value is None:
        return "-"
    return f"{value * 100:.4f}" if percent else f"{value:.4f}"


def format_ablation_table(report: AblationReport) -> str:
    """Plain-text table; iso-rates shown in percent."""
    header = ("Model", "dev-score", "iso-rate(%)", "aug-dev-score", "aug-iso-rate(%)", "test-score")
    lines = [header]
    for depth, row in enumerate(report.rows):
        lines.append(
            (
                "  " * depth + row.name,
                _cell(row.dev_score),
                _cell(row.iso_rate, percent=True),
                _cell(row.aug_dev_score),
                _cell(row.aug_iso_rate, percent=True),
                _cell(row.test_score),
            )
        )
    widths = [max(len(line[i]) for line in lines) for i in range(len(header))]
    return "\n".join(
        "  ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip() for line in lines
    )


def save_ablation_report(report: AblationReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8")
    return path
