"""Model checkpoints: state dict, torch RNG state and the configuration needed to rebuild the model."""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import torch
from pydantic import ValidationError

from spoofloc.errors import CheckpointError
from spoofloc.model.tagger import SpoofLocTagger
from spoofloc.settings import MelConfig, ModelConfig, config_hash

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 1
PathLike = Union[str, Path]


@dataclass
class LoadedCheckpoint:
    model: SpoofLocTagger
    mel: MelConfig
    epoch: int
    metrics: Dict[str, Any] = field(default_factory=dict)
    rng_state: Optional[torch.Tensor] = None


def save_checkpoint(
    path: PathLike,
    model: SpoofLocTagger,
    mel: MelConfig,
    epoch: int = 0,
    metrics: Optional[Dict[str, Any]] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": CHECKPOINT_FORMAT,
        "model_config": model.cfg.model_dump(mode="json"),
        "mel_config": mel.model_dump(mode="json"),
        "use_mfd": model.use_mfd,
        "config_hash": config_hash(model.cfg, mel),
        "epoch": epoch,
        "metrics": dict(metrics or {}),
        "rng_state": torch.get_rng_state(),
        "state_dict": {name: tensor.detach().cpu() for name, tensor in model.state_dict().items()},
    }
    tmp = path.with_name(path.name + ".tmp")
    torch.save(payload, tmp)
    os.replace(tmp, path)
    logger.info("saved checkpoint %s (epoch %d)", path, epoch)
    return path


def load_checkpoint(
    path: PathLike,
    expected_model: Optional[ModelConfig] = None,
    expected_mel: Optional[MelConfig] = None,
    map_location: Union[str, torch.device] = "cpu",
) -> LoadedCheckpoint:
    """Rebuild the tagger; with ``expected_*`` given, refuse a checkpoint built for other configs."""
    path = Path(path)
    try:
        payload = torch.load(path, map_location=map_location, weights_only=True)
    except FileNotFoundError as exc:
        raise CheckpointError(f"checkpoint not found: {path}") from exc
    except Exception as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc

    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a spoofloc checkpoint (format {CHECKPOINT_FORMAT})")
    try:
        model_cfg = ModelConfig.model_validate(payload["model_config"])
        mel = MelConfig.model_validate(payload["mel_config"])
    except (KeyError, ValidationError) as exc:
        raise CheckpointError(f"{path}: invalid stored configuration: {exc}") from exc

    if expected_model is not None or expected_mel is not None:
        wanted = config_hash(expected_model or model_cfg, expected_mel or mel)
        if wanted != payload.get("config_hash"):
            raise CheckpointError(
                f"{path} was trained with config {payload.get('config_hash')}, current config is {wanted}"
            )

    model = SpoofLocTagger(model_cfg, use_mfd=bool(payload["use_mfd"]))
    try:
        model.load_state_dict(payload["state_dict"])
    except RuntimeError as exc:
        raise CheckpointError(f"{path}: weights do not fit the stored architecture: {exc}") from exc
    model.eval()
    return LoadedCheckpoint(
        model=model,
        mel=mel,
        epoch=int(payload.get("epoch", 0)),
        metrics=dict(payload.get("metrics", {})),
        rng_state=payload.get("rng_state"),
    )
