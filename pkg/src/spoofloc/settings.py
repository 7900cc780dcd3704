"""
Run configuration.

All hyperparameters live in pydantic models grouped by pipeline stage and merged into
a single ``RunConfig``. Values come from three layers, later layers win:

    defaults  ->  YAML config file  ->  command-line flags

and every leaf field remembers which layer it came from (``RunConfig.provenance``).
"""

import hashlib
import json
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Mapping, Optional, Tuple, Type, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError, field_validator, model_validator

from spoofloc.errors import ConfigError

DEFAULTS_PATH = Path(__file__).parent / "config" / "defaults.yaml"

SOURCE_DEFAULT = "default"
SOURCE_FILE = "file"
SOURCE_FLAG = "flag"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# =======================
# FEATURES
# =======================

class MelConfig(_Section):
    fft_window: int = Field(800, description="FFT / analysis window length in samples")
    hop: int = Field(160, description="Hop size in samples")
    n_mels: int = Field(80, description="Number of mel bins")
    sample_rate: int = Field(16000, description="Sample rate in Hz")
    fmin: float = Field(0.0, description="Lowest mel filter edge in Hz")
    fmax: float = Field(8000.0, description="Highest mel filter edge in Hz")
    log_floor: float = Field(1e-10, description="Power floor applied before the natural log")
    normalize: bool = Field(True, description="Per-utterance mean-variance normalization before the model")

    @model_validator(mode="after")
    def _check(self) -> "MelConfig":
        if not 0 < self.hop < self.fft_window:
            raise ValueError("hop must be positive and smaller than fft_window")
        if self.n_mels < 1:
            raise ValueError("n_mels must be at least 1")
        if not 0 <= self.fmin < self.fmax <= self.sample_rate / 2:
            raise ValueError("require 0 <= fmin < fmax <= sample_rate / 2")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")
        return self

    @property
    def hop_s(self) -> float:
        return self.hop / self.sample_rate


# =======================
# AUGMENTATION
# =======================

class AugmentationPolicy(_Section):
    in_training_rate: float = Field(0.2, ge=0.0, le=1.0, description="Probability an example is transformed")
    gaussian_snr_max_db: float = Field(15.0, gt=0.0, description="Upper bound of segment Gaussian-noise SNR")
    pitch_shift_range_semitones: Tuple[float, float] = Field((-4.0, 4.0))
    min_pitch_shift_semitones: float = Field(0.5, gt=0.0, description="Smallest audible shift")
    rng_seed: int = 0
    region_min_s: float = Field(0.1, gt=0.0, description="Shortest manipulated region")
    region_max_fraction: float = Field(0.5, gt=0.0, le=1.0, description="Longest region as a clip fraction")
    warp_factor_range: Tuple[float, float] = Field((0.9, 1.1), description="Voice-conversion stand-in warp")
    corpus_noise_snr_range_db: Tuple[float, float] = Field((5.0, 20.0))
    insertion_max_s: float = Field(1.0, gt=0.0, description="Longest inserted real clip")
    mark_insertion_boundaries: bool = Field(False, description="Label insertion boundary frames FAKE")
    insertion_boundary_s: float = Field(0.02, gt=0.0)
    offline_variants_per_clip: int = Field(1, ge=0, description="Augmented copies emitted per source clip")

    @model_validator(mode="after")
    def _check(self) -> "AugmentationPolicy":
        low, high = self.pitch_shift_range_semitones
        if not low < high or max(abs(low), abs(high)) < self.min_pitch_shift_semitones:
            raise ValueError("pitch_shift_range_semitones must allow shifts of at least min_pitch_shift_semitones")
        for name in ("warp_factor_range", "corpus_noise_snr_range_db"):
            low, high = getattr(self, name)
            if low > high:
                raise ValueError(f"{name} must be an increasing interval")
        if self.warp_factor_range[0] <= 0:
            raise ValueError("warp factors must be positive")
        return self


# =======================
# MODEL AND LOSS
# =======================

class BackboneConfig(_Section):
    n_res_blocks: int = Field(7, ge=1)
    conv_channels: int = Field(256, ge=1)
    conv_kernel: int = Field(3, ge=1)
    blstm_units_total: int = Field(256, ge=2, description="BLSTM width, split evenly between directions")
    n_classes: int = Field(2, ge=2)

    @model_validator(mode="after")
    def _check(self) -> "BackboneConfig":
        if self.blstm_units_total % 2:
            raise ValueError("blstm_units_total must be even")
        if self.conv_kernel % 2 == 0:
            raise ValueError("conv_kernel must be odd")
        return self


class MFDConfig(_Section):
    channels: int = Field(128, ge=1)
    strides: Tuple[int, int] = (5, 2)
    kernels: Tuple[int, int] = (7, 3)
    downsample_factor: int = 10

    @model_validator(mode="after")
    def _check(self) -> "MFDConfig":
        if self.downsample_factor != self.strides[0] * self.strides[1]:
            raise ValueError("downsample_factor must equal the product of strides")
        if min(self.strides) < 1 or min(self.kernels) < 1:
            raise ValueError("strides and kernels must be positive")
        return self


class ModelConfig(_Section):
    input_dim: int = Field(80, ge=1, description="Feature bins per frame")
    backbone: BackboneConfig = BackboneConfig()
    mfd: MFDConfig = MFDConfig()


class LossConfig(_Section):
    alpha: float = Field(0.1, ge=0.0, description="Isolated-frame penalty weight")
    ifp_max_span: int = Field(3, ge=1, description="Neighbourhood spans s = 1..ifp_max_span")
    class_weights: Optional[Tuple[float, float]] = None


# =======================
# TRAINING
# =======================

class Toggles(_Section):
    use_mfd: bool = True
    use_ifp: bool = True
    use_befaug: bool = True
    use_inaug: bool = True


class TrainConfig(_Section):
    batch_size: int = Field(64, gt=0)
    epochs: int = Field(100, gt=0)
    learning_rate: float = Field(1e-4, gt=0.0)
    weight_decay: float = Field(1e-5, ge=0.0)
    optimizer: Literal["adam"] = "adam"
    seed: int = 0
    toggles: Toggles = Toggles()
    deterministic: bool = Field(True, description="Fixed seeds and deterministic kernels")
    num_workers: int = Field(0, ge=0)
    dev_fraction: float = Field(0.1, ge=0.0, lt=1.0, description="Held-out share when no dev manifest is given")
    threshold: float = Field(0.5, ge=0.0, le=1.0)
    iso_min_frames: int = Field(6, ge=1)


class RunConfig(_Section):
    mel: MelConfig = MelConfig()
    augmentation: AugmentationPolicy = AugmentationPolicy()
    model: ModelConfig = ModelConfig()
    loss: LossConfig = LossConfig()
    train: TrainConfig = TrainConfig()

    _provenance: Dict[str, str] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _check_dims(self) -> "RunConfig":
        if self.model.input_dim != self.mel.n_mels:
            raise ValueError(f"model.input_dim ({self.model.input_dim}) must equal mel.n_mels ({self.mel.n_mels})")
        return self

    @property
    def provenance(self) -> Dict[str, str]:
        if not self._provenance:
            return {path: SOURCE_DEFAULT for path in field_paths(RunConfig)}
        return dict(self._provenance)


# =======================
# RESOLUTION
# =======================

def _is_section(annotation: Any) -> bool:
    return isinstance(annotation, type) and issubclass(annotation, BaseModel)


def field_paths(model: Type[BaseModel], prefix: str = "") -> List[str]:
    """Dotted paths of every leaf field, e.g. ``loss.alpha``."""
    paths = []
    for name, info in model.model_fields.items():
        path = f"{prefix}{name}"
        if _is_section(info.annotation):
            paths.extend(field_paths(info.annotation, prefix=f"{path}."))
        else:
            paths.append(path)
    return paths


def _section_paths(model: Type[BaseModel], prefix: str = "") -> List[str]:
    paths = []
    for name, info in model.model_fields.items():
        if _is_section(info.annotation):
            path = f"{prefix}{name}"
            paths.append(path)
            paths.extend(_section_paths(info.annotation, prefix=f"{path}."))
    return paths


_LEAVES = field_paths(RunConfig)
_SECTIONS = set(_section_paths(RunConfig))


def _resolve_key(key: str) -> str:
    if key in _LEAVES:
        return key
    if "." not in key:
        candidates = [path for path in _LEAVES if path.rsplit(".", 1)[-1] == key]
        if len(candidates) == 1:
            return candidates[0]
        if len(candidates) > 1:
            raise ConfigError(f"ambiguous config key '{key}': use one of {candidates}")
    raise ConfigError(f"unknown config key '{key}'")


def _flatten(mapping: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in mapping.items():
        key = str(key)
        dotted = f"{prefix}{key}"
        if dotted in _SECTIONS:
            if not isinstance(value, Mapping):
                raise ConfigError(f"config section '{dotted}' must be a mapping")
            flat.update(_flatten(value, prefix=f"{dotted}."))
            continue
        path = _resolve_key(dotted if prefix else key)
        if path in flat:
            raise ConfigError(f"config key '{path}' given twice")
        flat[path] = value
    return flat


def _nest(flat: Mapping[str, Any]) -> Dict[str, Any]:
    nested: Dict[str, Any] = {}
    for path, value in flat.items():
        node = nested
        *parents, leaf = path.split(".")
        for parent in parents:
            node = node.setdefault(parent, {})
        node[leaf] = value
    return nested


def parse_override(text: str) -> Tuple[str, Any]:
    """Split ``key=value``; the value is parsed as a YAML scalar."""
    if "=" not in text:
        raise ConfigError(f"override '{text}' must look like key=value")
    key, raw = text.split("=", 1)
    try:
        value = yaml.safe_load(raw) if raw.strip() else raw
    except yaml.YAMLError as exc:
        raise ConfigError(f"override '{text}': cannot parse value ({exc})") from exc
    return key.strip(), value


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    if data is None:
        return {}
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path}: top level must be a mapping of keys to values")
    return _flatten(data)


def _format_errors(exc: ValidationError) -> str:
    messages = []
    for error in exc.errors():
        location = ".".join(str(part) for part in error["loc"])
        messages.append(f"{location or '<root>'}: {error['msg']} (got {error.get('input')!r})")
    return "; ".join(messages)


@lru_cache(maxsize=None)
def _packaged_defaults(path: Path) -> Dict[str, Any]:
    return load_config_file(path)


def resolve_config(
    config_file: Optional[Union[str, Path]] = None,
    overrides: Optional[Iterable[Tuple[str, Any]]] = None,
) -> RunConfig:
    """Merge defaults, an optional YAML file and flag overrides into a validated ``RunConfig``."""
    provenance = {path: SOURCE_DEFAULT for path in _LEAVES}
    values: Dict[str, Any] = dict(_packaged_defaults(DEFAULTS_PATH))

    if config_file is not None:
        for path, value in load_config_file(config_file).items():
            values[path] = value
            provenance[path] = SOURCE_FILE

    for key, value in overrides or ():
        path = _resolve_key(key)
        values[path] = value
        provenance[path] = SOURCE_FLAG

    try:
        config = RunConfig.model_validate(_nest(values))
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {_format_errors(exc)}") from exc
    config._provenance = provenance
    return config


def dump_config(config: RunConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)


def config_hash(*parts: BaseModel) -> str:
    """Short stable digest of one or more config sections."""
    payload = json.dumps([part.model_dump(mode="json") for part in parts], sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]
