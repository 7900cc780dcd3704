"""
RCNN-BLSTM frame tagger with the multi-frame detection (MFD) head.

    features (B, N, F)
      -> residual conv blocks (conv k3 -> batch norm -> ReLU, additive skip)
      -> BLSTM ---------------------------------------------+
      -> MFD: two strided convs -> per-window hidden          |
              -> dense classifier (MFD logits)                |
              -> projection, replicated over each window ---> + -> linear -> frame logits
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from spoofloc.errors import InputValidationError
from spoofloc.model.framing import ceil_mode_pad, window_count, window_ranges
from spoofloc.settings import MFDConfig, ModelConfig

FAKE_CLASS = 1


@dataclass
class ModelOutput:
    frame_logits: torch.Tensor
    frame_probs: torch.Tensor
    mfd_logits: Optional[torch.Tensor]
    mask: torch.Tensor
    lengths: torch.Tensor
    window_factor: int

    @property
    def mfd_window_map(self) -> List[Tuple[int, int]]:
        return window_ranges(self.frame_logits.shape[1], self.window_factor)

    @property
    def n_windows(self) -> int:
        return window_count(self.frame_logits.shape[1], self.window_factor)


# =======================
# LAYERS
# =======================

class ResidualBlock(nn.Module):
    def __init__(self, in_channels: int, out_channels: int, kernel: int):
        super().__init__()
        self.conv = nn.Conv1d(in_channels, out_channels, kernel, padding=kernel // 2, bias=False)
        self.norm = nn.BatchNorm1d(out_channels)
        if in_channels == out_channels:
            self.skip = nn.Identity()
        else:
            self.skip = nn.Conv1d(in_channels, out_channels, 1, bias=False)

    def forward(self, x: torch.Tensor, mask: Optional[torch.Tensor] = None) -> torch.Tensor:
        """``x`` is (B, C, N). With a (B, N) ``mask`` the batch statistics use valid frames only."""
        y = self.conv(x)
        if mask is None:
            y = self.norm(y)
        else:
            frames = y.transpose(1, 2)
            normed = frames.new_zeros(frames.shape)
            normed[mask] = self.norm(frames[mask])
            y = normed.transpose(1, 2)
        return F.relu(y) + self.skip(x)


class MultiFrameDetector(nn.Module):
    def __init__(self, in_channels: int, cfg: MFDConfig, n_classes: int, fused_dim: int):
        super().__init__()
        self.cfg = cfg
        self.down1 = nn.Conv1d(in_channels, cfg.channels, cfg.kernels[0], stride=cfg.strides[0])
        self.down2 = nn.Conv1d(cfg.channels, cfg.channels, cfg.kernels[1], stride=cfg.strides[1])
        self.classifier = nn.Linear(cfg.channels, n_classes)
        self.projection = nn.Linear(cfg.channels, fused_dim)

    def forward(self, x: torch.Tensor, lengths: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """``x`` is (B, C, N); returns MFD logits and projected hidden vectors, both (B, M, *).

        Downsampled positions past an utterance's own ceil-mode length are zeroed, so a
        padded batch sees exactly what each utterance sees on its own.
        """
        n_windows = window_count(x.shape[-1], self.cfg.downsample_factor)
        (k1, k2), (s1, s2) = self.cfg.kernels, self.cfg.strides
        lengths = lengths.to(x.device)
        h = F.relu(self.down1(ceil_mode_pad(x, k1, s1)))
        lengths = -(-lengths // s1)
        h = h * _length_mask(lengths, h.shape[-1], h.dtype)
        h = F.relu(self.down2(ceil_mode_pad(h, k2, s2)))
        lengths = -(-lengths // s2)
        h = (h * _length_mask(lengths, h.shape[-1], h.dtype))[..., :n_windows].transpose(1, 2)
        return self.classifier(h), self.projection(h)


def _length_mask(lengths: torch.Tensor, size: int, dtype: torch.dtype) -> torch.Tensor:
    return (torch.arange(size, device=lengths.device).unsqueeze(0) < lengths.unsqueeze(1)).unsqueeze(1).to(dtype)


# =======================
# TAGGER
# =======================

class SpoofLocTagger(nn.Module):
    def __init__(self, cfg: ModelConfig, use_mfd: bool = True):
        super().__init__()
        self.cfg = cfg
        self.use_mfd = use_mfd
        backbone = cfg.backbone
        channels = [cfg.input_dim] + [backbone.conv_channels] * backbone.n_res_blocks
        self.blocks = nn.ModuleList(
            ResidualBlock(channels[i], channels[i + 1], backbone.conv_kernel) for i in range(backbone.n_res_blocks)
        )
        self.blstm = nn.LSTM(
            backbone.conv_channels,
            backbone.blstm_units_total // 2,
            batch_first=True,
            bidirectional=True,
        )
        self.mfd = (
            MultiFrameDetector(backbone.conv_channels, cfg.mfd, backbone.n_classes, backbone.blstm_units_total)
            if use_mfd
            else None
        )
        self.output = nn.Linear(backbone.blstm_units_total, backbone.n_classes)

    @property
    def min_frames(self) -> int:
        return self.cfg.mfd.kernels[0]

    def forward(self, features: torch.Tensor, lengths: Optional[torch.Tensor] = None) -> ModelOutput:
        if features.dim() == 2:
            features = features.unsqueeze(0)
        if features.dim() != 3 or features.shape[-1] != self.cfg.input_dim:
            raise InputValidationError(
                f"expected features of shape (B, N, {self.cfg.input_dim}), got {tuple(features.shape)}"
            )
        batch, n_frames, _ = features.shape
        if lengths is None:
            lengths = torch.full((batch,), n_frames, dtype=torch.long)
        lengths = lengths.to("cpu", torch.long)
        if int(lengths.min()) < self.min_frames:
            raise InputValidationError(
                f"sequences need at least {self.min_frames} frames, got {int(lengths.min())}; pad the input"
            )
        mask = torch.arange(n_frames).unsqueeze(0) < lengths.unsqueeze(1)
        mask = mask.to(features.device)
        channel_mask = mask.unsqueeze(1).to(features.dtype)

        x = features.transpose(1, 2) * channel_mask
        for block in self.blocks:
            x = block(x, mask) * channel_mask

        sequence = x.transpose(1, 2)
        if int(lengths.min()) < n_frames:
            packed = pack_padded_sequence(sequence, lengths, batch_first=True, enforce_sorted=False)
            hidden, _ = self.blstm(packed)
            hidden, _ = pad_packed_sequence(hidden, batch_first=True, total_length=n_frames)
        else:
            hidden, _ = self.blstm(sequence)

        mfd_logits = None
        if self.mfd is not None:
            mfd_logits, fused = self.mfd(x, lengths)
            factor = self.cfg.mfd.downsample_factor
            hidden = hidden + fused.repeat_interleave(factor, dim=1)[:, :n_frames]

        frame_logits = self.output(hidden)
        frame_probs = torch.softmax(frame_logits, dim=-1)[..., FAKE_CLASS]
        return ModelOutput(
            frame_logits=frame_logits,
            frame_probs=frame_probs,
            mfd_logits=mfd_logits,
            mask=mask,
            lengths=lengths,
            window_factor=self.cfg.mfd.downsample_factor,
        )


def count_parameters(cfg: ModelConfig, use_mfd: bool = True) -> int:
    model = SpoofLocTagger(cfg, use_mfd=use_mfd)
    return sum(p.numel() for p in model.parameters() if p.requires_grad)
