"""
Training objective.

    L = L_SF + L_MFD + alpha * R

- L_SF:  frame cross-entropy, pooled over every valid frame of the batch
- L_MFD: window cross-entropy against soft mean-label targets, pooled over valid windows
- R:     isolated-frame penalty on fake-class probabilities, summed over frames and
         spans then divided by the number of spans, averaged over utterances

Every function accepts an unbatched (N, ...) input or a batched (B, N, ...) input with an
optional boolean mask; masked positions contribute nothing, including as IFP neighbours.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import torch
import torch.nn.functional as F

from spoofloc.errors import InputValidationError
from spoofloc.model.tagger import FAKE_CLASS
from spoofloc.settings import LossConfig


@dataclass
class LossComponents:
    total: torch.Tensor
    single_frame: torch.Tensor
    mfd: torch.Tensor
    ifp: torch.Tensor

    def as_floats(self) -> Dict[str, float]:
        return {
            "L": float(self.total.detach()),
            "L_SF": float(self.single_frame.detach()),
            "L_MFD": float(self.mfd.detach()),
            "R": float(self.ifp.detach()),
        }


def _valid(mask: Optional[torch.Tensor], shape: torch.Size, device: torch.device) -> torch.Tensor:
    if mask is None:
        return torch.ones(shape, dtype=torch.bool, device=device)
    if mask.shape != shape:
        raise InputValidationError(f"mask shape {tuple(mask.shape)} does not match {tuple(shape)}")
    return mask.to(device=device, dtype=torch.bool)


def _pooled_mean(values: torch.Tensor, valid: torch.Tensor) -> torch.Tensor:
    weights = valid.to(values.dtype)
    return (values * weights).sum() / weights.sum().clamp(min=1.0)


# =======================
# CROSS-ENTROPY TERMS
# =======================

def loss_single_frame(
    frame_logits: torch.Tensor,
    frame_labels: torch.Tensor,
    mask: Optional[torch.Tensor] = None,
    class_weights: Optional[Tuple[float, float]] = None,
) -> torch.Tensor:
    """Mean per-frame cross-entropy over valid frames."""
    if frame_logits.shape[:-1] != frame_labels.shape:
        raise InputValidationError(
            f"logits {tuple(frame_logits.shape)} and labels {tuple(frame_labels.shape)} disagree on frame count"
        )
    valid = _valid(mask, frame_labels.shape, frame_logits.device)
    n_classes = frame_logits.shape[-1]
    per_frame = F.cross_entropy(
        frame_logits.reshape(-1, n_classes), frame_labels.reshape(-1).long(), reduction="none"
    ).view(frame_labels.shape)
    if class_weights is None:
        return _pooled_mean(per_frame, valid)
    weights = torch.as_tensor(class_weights, dtype=per_frame.dtype, device=per_frame.device)
    frame_weights = weights[frame_labels.long()] * valid.to(per_frame.dtype)
    return (per_frame * frame_weights).sum() / frame_weights.sum().clamp(min=torch.finfo(per_frame.dtype).tiny)


def loss_mfd(
    mfd_logits: torch.Tensor,
    soft_targets: torch.Tensor,
    window_mask: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Mean over windows of ``-[t ln p_fake + (1 - t) ln p_real]``."""
    if mfd_logits.shape[:-1] != soft_targets.shape:
        raise InputValidationError(
            f"MFD logits {tuple(mfd_logits.shape)} and targets {tuple(soft_targets.shape)} disagree on window count"
        )
    if ((soft_targets < 0) | (soft_targets > 1)).any() or not torch.isfinite(soft_targets).all():
        raise InputValidationError("MFD targets must lie in [0, 1]")
    valid = _valid(window_mask, soft_targets.shape, mfd_logits.device)
    log_probs = F.log_softmax(mfd_logits, dim=-1)
    targets = soft_targets.to(log_probs.dtype)
    per_window = -(targets * log_probs[..., FAKE_CLASS] + (1.0 - targets) * log_probs[..., 1 - FAKE_CLASS])
    return _pooled_mean(per_window, valid)


# =======================
# ISOLATED-FRAME PENALTY
# =======================

def ifp_term(probs: torch.Tensor, s: int, mask: Optional[torch.Tensor] = None) -> torch.Tensor:
    """Per-frame ``r_i = |y_i - mean(y_{i-s..i-1}, y_{i+1..i+s})|``.

    Near the edges (and next to masked frames) only the available neighbours enter
    the mean. A frame with no neighbours at all has ``r = 0``; masked frames are 0.
    """
    if probs.numel() == 0 or probs.shape[-1] == 0:
        raise InputValidationError("IFP needs at least one frame")
    if s < 1:
        raise InputValidationError(f"span must be >= 1, got {s}")
    valid = _valid(mask, probs.shape, probs.device).to(probs.dtype)
    values = probs * valid
    n_frames = probs.shape[-1]

    total = torch.zeros_like(probs)
    count = torch.zeros_like(probs)
    for k in range(1, s + 1):
        # neighbour i - k
        total = total + F.pad(values, (k, 0))[..., :n_frames]
        count = count + F.pad(valid, (k, 0))[..., :n_frames]
        # neighbour i + k
        total = total + F.pad(values, (0, k))[..., k:]
        count = count + F.pad(valid, (0, k))[..., k:]

    has_neighbours = count > 0
    mean = total / count.clamp(min=1.0)
    r = torch.where(has_neighbours, (probs - mean).abs(), torch.zeros_like(probs))
    return r * valid


def ifp_regularizer(
    probs: torch.Tensor, max_span: int = 3, mask: Optional[torch.Tensor] = None
) -> torch.Tensor:
    """``R = sum_i sum_{s=1..max_span} r_i^(s) / max_span``; batched input averages R over utterances."""
    per_utterance = sum(ifp_term(probs, s, mask).sum(dim=-1) for s in range(1, max_span + 1)) / max_span
    return per_utterance.mean() if per_utterance.dim() > 0 else per_utterance


# =======================
# TOTAL
# =======================

def total_loss(
    frame_logits: torch.Tensor,
    frame_labels: torch.Tensor,
    mfd_logits: Optional[torch.Tensor],
    mfd_targets: Optional[torch.Tensor],
    cfg: LossConfig,
    mask: Optional[torch.Tensor] = None,
    window_mask: Optional[torch.Tensor] = None,
    use_ifp: bool = True,
) -> Tuple[torch.Tensor, LossComponents]:
    """Combined objective and its components.

    ``R`` is always computed for logging; it enters ``L`` only when ``use_ifp`` is set.
    Without an MFD head ``L_MFD`` is zero.
    """
    single_frame = loss_single_frame(frame_logits, frame_labels, mask, cfg.class_weights)
    if mfd_logits is not None:
        if mfd_targets is None:
            raise InputValidationError("MFD logits given without MFD targets")
        mfd = loss_mfd(mfd_logits, mfd_targets, window_mask)
    else:
        mfd = torch.zeros((), dtype=single_frame.dtype, device=single_frame.device)

    fake_probs = torch.softmax(frame_logits, dim=-1)[..., FAKE_CLASS]
    ifp = ifp_regularizer(fake_probs, cfg.ifp_max_span, mask)

    total = single_frame + mfd
    if use_ifp:
        total = total + cfg.alpha * ifp
    return total, LossComponents(total=total, single_frame=single_frame, mfd=mfd, ifp=ifp)
