"""On-disk feature cache: one ``.npy`` per clip keyed by clip id and config hash."""

import logging
import os
from pathlib import Path
from typing import Union

import numpy as np

from spoofloc.data.types import AudioClip
from spoofloc.features.mel import MelFrames, extract_mel
from spoofloc.settings import MelConfig, config_hash

logger = logging.getLogger(__name__)


class FeatureCache:
    def __init__(self, root: Union[str, Path], cfg: MelConfig):
        self.root = Path(root)
        self.cfg = cfg
        self.key = config_hash(cfg)
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, clip_id: str) -> Path:
        safe_id = clip_id.replace(os.sep, "_")
        return self.root / f"{safe_id}.{self.key}.npy"

    def get_or_compute(self, clip: AudioClip) -> MelFrames:
        path = self.path_for(clip.id)
        if path.is_file():
            return MelFrames(clip_id=clip.id, values=np.load(path, allow_pickle=False))
        frames = extract_mel(clip, self.cfg)
        tmp = path.with_name(path.name + ".tmp")
        with tmp.open("wb") as handle:
            np.save(handle, frames.values, allow_pickle=False)
        os.replace(tmp, path)
        logger.debug("cached features for %s at %s", clip.id, path)
        return frames
