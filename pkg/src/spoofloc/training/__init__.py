"""Training orchestration.

- dataset: corpus loading, FrameDataset (in-training augmentation), padded batches
- trainer: train / predict / evaluate_model
- checkpoint: atomic save, config-checked load
- ablation: toggle grid runs and report table
"""

from spoofloc.training.ablation import (
    ABLATION_GRID,
    AblationReport,
    AblationRow,
    ablation_run,
    dedupe_grid,
    format_ablation_table,
    save_ablation_report,
)
from spoofloc.training.checkpoint import LoadedCheckpoint, load_checkpoint, save_checkpoint
from spoofloc.training.dataset import Batch, FrameDataset, FrameExample, collate_frames, load_corpus
from spoofloc.training.trainer import TrainResult, evaluate_model, predict, set_seed, split_dev, train

__all__ = [
    "ABLATION_GRID",
    "AblationReport",
    "AblationRow",
    "Batch",
    "FrameDataset",
    "FrameExample",
    "LoadedCheckpoint",
    "TrainResult",
    "ablation_run",
    "collate_frames",
    "dedupe_grid",
    "evaluate_model",
    "format_ablation_table",
    "load_checkpoint",
    "load_corpus",
    "predict",
    "save_ablation_report",
    "save_checkpoint",
    "set_seed",
    "split_dev",
    "train",
]
