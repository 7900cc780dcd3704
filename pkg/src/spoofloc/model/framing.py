"""Window framing of the multi-frame detection head.

The downsampler strides in ceil mode, so window ``m`` owns frames
``[m * factor, min((m + 1) * factor, N))`` and every frame belongs to exactly one window.
"""

from typing import List, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F

from spoofloc.errors import InputValidationError


def window_count(n_frames: int, factor: int) -> int:
    return -(-n_frames // factor)


def window_ranges(n_frames: int, factor: int) -> List[Tuple[int, int]]:
    return [(start, min(start + factor, n_frames)) for start in range(0, n_frames, factor)]


def mfd_window_targets(frame_labels: Sequence[int], window_map: Sequence[Tuple[int, int]]) -> np.ndarray:
    """Soft target per window: the mean frame label inside it."""
    labels = np.asarray(frame_labels, dtype=np.float64)
    covered = np.zeros(labels.size, dtype=bool)
    targets = np.empty(len(window_map), dtype=np.float64)
    for m, (start, stop) in enumerate(window_map):
        if stop <= start:
            raise InputValidationError(f"window {m} covers no frames ({start}, {stop})")
        targets[m] = labels[start:stop].mean()
        covered[start:stop] = True
    if not covered.all():
        raise InputValidationError("window map leaves frames uncovered")
    return targets


def batch_window_targets(
    labels: torch.Tensor, mask: torch.Tensor, factor: int
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Mean label per window over valid frames; returns ``(targets, window_mask)`` of shape (B, M)."""
    batch, n_frames = labels.shape
    n_windows = window_count(n_frames, factor)
    pad = n_windows * factor - n_frames
    valid = F.pad(mask.to(labels.dtype if labels.is_floating_point() else torch.float32), (0, pad))
    values = F.pad(labels.to(valid.dtype), (0, pad)) * valid
    sums = values.view(batch, n_windows, factor).sum(dim=-1)
    counts = valid.view(batch, n_windows, factor).sum(dim=-1)
    return sums / counts.clamp(min=1.0), counts > 0


def ceil_mode_pad(x: torch.Tensor, kernel: int, stride: int) -> torch.Tensor:
    """End-pad ``x`` (B, C, L) so a strided conv yields ``ceil(L / stride)`` outputs."""
    length = x.shape[-1]
    out = window_count(length, stride)
    total = max(0, (out - 1) * stride + kernel - length)
    left = min(max(0, (kernel - stride) // 2), total)
    return F.pad(x, (left, total - left))
