import math
from typing import Optional

import numpy as np
import pytest
import torch

from spoofloc.errors import InputValidationError
from spoofloc.losses import ifp_regularizer, ifp_term, loss_mfd, loss_single_frame, total_loss
from spoofloc.model import SpoofLocTagger, batch_window_targets
from spoofloc.settings import LossConfig


def brute_force_r(values, max_span=3):
    """Scalar loop: one-sided neighbour means at the edges, r = 0 without neighbours."""
    n = len(values)
    total = 0.0
    for s in range(1, max_span + 1):
        for i in range(n):
            neighbours = [values[j] for j in range(i - s, i + s + 1) if j != i and 0 <= j < n]
            if neighbours:
                total += abs(values[i] - sum(neighbours) / len(neighbours))
    return total / max_span


def logits_for(probs):
    """Two-class logits whose softmax fake probability is ``probs``."""
    probs = torch.as_tensor(probs, dtype=torch.float64)
    return torch.stack([torch.log1p(-probs), torch.log(probs)], dim=-1)


# =======================
# SINGLE FRAME
# =======================

def test_saturated_logits_give_zero_loss():
    labels = torch.tensor([0, 1, 1, 0])
    logits = torch.tensor([[20.0, -20.0], [-20.0, 20.0], [-20.0, 20.0], [20.0, -20.0]])
    assert float(loss_single_frame(logits, labels)) == pytest.approx(0.0, abs=1e-4)


def test_uniform_logits_give_ln2():
    loss = loss_single_frame(torch.zeros(5, 2), torch.tensor([0, 1, 0, 1, 1]))
    assert float(loss) == pytest.approx(math.log(2.0), rel=1e-6)


def test_single_fake_frame():
    loss = loss_single_frame(logits_for([0.75]), torch.tensor([1]))
    assert float(loss) == pytest.approx(-math.log(0.75), rel=1e-9)


def test_single_frame_length_mismatch():
    with pytest.raises(InputValidationError, match="frame count"):
        loss_single_frame(torch.zeros(5, 2), torch.zeros(4, dtype=torch.long))


def test_class_weights_shift_the_mean():
    logits = logits_for([0.9, 0.9])
    labels = torch.tensor([0, 1])
    weighted = loss_single_frame(logits, labels, class_weights=(1.0, 3.0))
    expected = (-math.log(0.1) + 3.0 * -math.log(0.9)) / 4.0
    assert float(weighted) == pytest.approx(expected, rel=1e-9)


# =======================
# MFD
# =======================

def test_mfd_confident_and_correct():
    loss = loss_mfd(torch.tensor([[-20.0, 20.0]]), torch.tensor([1.0]))
    assert float(loss) == pytest.approx(0.0, abs=1e-6)


def test_mfd_half_target_lower_bound():
    assert float(loss_mfd(torch.zeros(3, 2), torch.full((3,), 0.5))) == pytest.approx(math.log(2.0), rel=1e-9)
    for p in np.linspace(0.01, 0.99, 99):
        loss = float(loss_mfd(logits_for([p]), torch.tensor([0.5], dtype=torch.float64)))
        if abs(p - 0.5) < 1e-12:
            assert loss == pytest.approx(math.log(2.0), rel=1e-12)
        else:
            assert loss > math.log(2.0)


def test_mfd_targets_must_be_probabilities():
    with pytest.raises(InputValidationError, match=r"\[0, 1\]"):
        loss_mfd(torch.zeros(2, 2), torch.tensor([0.5, 1.5]))
    with pytest.raises(InputValidationError, match="window count"):
        loss_mfd(torch.zeros(2, 2), torch.tensor([0.5]))


# =======================
# ISOLATED-FRAME PENALTY
# =======================

def test_constant_sequence_has_no_penalty():
    probs = torch.full((50,), 0.3, dtype=torch.float64)
    for s in (1, 2, 3):
        assert torch.all(ifp_term(probs, s) == 0)
    assert float(ifp_regularizer(probs)) == 0.0


def test_isolated_spike_terms():
    assert float(ifp_term(torch.tensor([0.0, 1.0, 0.0]), 1)[1]) == 1.0
    assert float(ifp_term(torch.tensor([0.0, 0.0, 1.0, 0.0, 0.0]), 2)[2]) == 1.0


def test_edges_use_available_neighbours():
    r = ifp_term(torch.tensor([1.0, 0.0, 0.0, 0.0]), 2)
    assert float(r[0]) == 1.0
    assert float(r[1]) == pytest.approx(abs(0.0 - (1.0 + 0.0 + 0.0) / 3.0))
    assert float(ifp_term(torch.tensor([0.7]), 3)[0]) == 0.0


def test_spike_matches_oracle():
    values = [0.0] * 101
    values[50] = 1.0
    assert float(ifp_regularizer(torch.tensor(values, dtype=torch.float64))) == brute_force_r(values)


def test_step_is_cheaper_than_spike_train():
    step = [0.0] * 50 + [1.0] * 50
    train = [float(i % 2) for i in range(100)]
    r_step = float(ifp_regularizer(torch.tensor(step, dtype=torch.float64)))
    r_train = float(ifp_regularizer(torch.tensor(train, dtype=torch.float64)))
    assert r_step == pytest.approx(brute_force_r(step), abs=1e-12)
    assert r_train == pytest.approx(brute_force_r(train), abs=1e-12)
    assert r_step < r_train


def test_random_sequences_match_oracle():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        values = rng.random(int(rng.integers(7, 201)))
        computed = float(ifp_regularizer(torch.tensor(values, dtype=torch.float64)))
        assert abs(computed - brute_force_r(values.tolist())) <= 1e-9


def test_complement_invariance():
    rng = np.random.default_rng(1)
    probs = torch.tensor(rng.random(64), dtype=torch.float64)
    assert float(ifp_regularizer(1.0 - probs)) == pytest.approx(float(ifp_regularizer(probs)), abs=1e-12)


def test_smoothing_an_isolated_flip_never_increases_penalty():
    for n in range(3, 13):
        codes = torch.arange(1 << n)
        sequences = ((codes.unsqueeze(1) >> torch.arange(n)) & 1).to(torch.float64)
        r = sum(ifp_term(sequences, s).sum(dim=-1) for s in (1, 2, 3)) / 3
        for i in range(1, n - 1):
            left = sequences[:, i - 1]
            isolated = (left == sequences[:, i + 1]) & (left != sequences[:, i])
            flipped = codes[isolated] ^ (1 << i)
            assert torch.all(r[flipped] <= r[codes[isolated]] + 1e-12), (n, i)


def test_masked_frames_are_not_neighbours():
    probs = torch.tensor([[0.0, 0.0, 0.0, 1.0, 1.0]], dtype=torch.float64)
    mask = torch.tensor([[True, True, True, False, False]])
    assert torch.all(ifp_term(probs, 2, mask) == 0)
    assert float(ifp_regularizer(probs, mask=mask)) == 0.0


def test_ifp_errors():
    with pytest.raises(InputValidationError):
        ifp_term(torch.zeros(0), 1)
    with pytest.raises(InputValidationError):
        ifp_term(torch.zeros(5), 0)


# =======================
# TOTAL
# =======================

def _padded_batch(seed: int = 0):
    generator = torch.Generator().manual_seed(seed)
    lengths = torch.tensor([30, 17, 24])
    logits = torch.randn(3, 30, 2, generator=generator, dtype=torch.float64)
    labels = (torch.rand(3, 30, generator=generator) > 0.6).long()
    mask = torch.arange(30).unsqueeze(0) < lengths.unsqueeze(1)
    mfd_logits = torch.randn(3, 3, 2, generator=generator, dtype=torch.float64)
    targets, window_mask = batch_window_targets(labels.double(), mask, 10)
    return lengths, logits, labels, mask, mfd_logits, targets, window_mask


def test_padding_contributes_nothing():
    lengths, logits, labels, mask, mfd_logits, targets, window_mask = _padded_batch()
    cfg = LossConfig()
    _, batched = total_loss(logits, labels, mfd_logits, targets, cfg, mask, window_mask)

    sf_sum, mfd_sum, ifp_sum, windows = 0.0, 0.0, 0.0, 0
    for i, n in enumerate(lengths.tolist()):
        m = -(-n // 10)
        _, single = total_loss(logits[i, :n], labels[i, :n], mfd_logits[i, :m], targets[i, :m], cfg)
        sf_sum += float(single.single_frame) * n
        mfd_sum += float(single.mfd) * m
        ifp_sum += float(single.ifp)
        windows += m
    assert float(batched.single_frame) == pytest.approx(sf_sum / int(lengths.sum()), rel=1e-12)
    assert float(batched.mfd) == pytest.approx(mfd_sum / windows, rel=1e-12)
    assert float(batched.ifp) == pytest.approx(ifp_sum / len(lengths), rel=1e-12)


def test_padded_logits_do_not_matter():
    lengths, logits, labels, mask, mfd_logits, targets, window_mask = _padded_batch()
    cfg = LossConfig()
    reference, _ = total_loss(logits, labels, mfd_logits, targets, cfg, mask, window_mask)
    noisy = logits.clone()
    noisy[~mask] = 123.0
    changed, _ = total_loss(noisy, labels, mfd_logits, targets, cfg, mask, window_mask)
    assert torch.equal(reference, changed)


def test_alpha_zero_and_toggle_off_agree():
    _, logits, labels, mask, mfd_logits, targets, window_mask = _padded_batch(1)
    zero_alpha, parts = total_loss(logits, labels, mfd_logits, targets, LossConfig(alpha=0.0), mask, window_mask)
    toggled, _ = total_loss(logits, labels, mfd_logits, targets, LossConfig(), mask, window_mask, use_ifp=False)
    assert torch.equal(zero_alpha, parts.single_frame + parts.mfd)
    assert torch.equal(zero_alpha, toggled)
    assert float(parts.ifp) > 0.0


def test_total_is_deterministic_and_reports_components():
    _, logits, labels, mask, mfd_logits, targets, window_mask = _padded_batch(2)
    cfg = LossConfig(alpha=0.1)
    first, parts = total_loss(logits, labels, mfd_logits, targets, cfg, mask, window_mask)
    second, _ = total_loss(logits, labels, mfd_logits, targets, cfg, mask, window_mask)
    assert torch.equal(first, second)
    floats = parts.as_floats()
    assert set(floats) == {"L", "L_SF", "L_MFD", "R"}
    assert floats["L"] == pytest.approx(floats["L_SF"] + floats["L_MFD"] + 0.1 * floats["R"], rel=1e-12)


def test_missing_mfd_targets():
    _, logits, labels, mask, mfd_logits, _, _ = _padded_batch()
    with pytest.raises(InputValidationError, match="without MFD targets"):
        total_loss(logits, labels, mfd_logits, None, LossConfig(), mask)


def test_without_mfd_head_the_term_is_zero():
    _, logits, labels, mask, _, _, _ = _padded_batch()
    _, parts = total_loss(logits, labels, None, None, LossConfig(), mask)
    assert float(parts.mfd) == 0.0


# =======================
# GRADIENTS
# =======================

def residual_signs(probs, max_span=3):
    """Signs of ``y_i - mean(neighbours)`` for every frame and span, as in ``brute_force_r``."""
    signs = []
    for row in probs:
        n = len(row)
        for s in range(1, max_span + 1):
            for i in range(n):
                neighbours = [row[j] for j in range(i - s, i + s + 1) if j != i and 0 <= j < n]
                signs.append(row[i] > sum(neighbours) / len(neighbours))
    return signs


def test_backprop_matches_central_differences(tiny_model_config, monkeypatch):
    torch.manual_seed(5)
    model = SpoofLocTagger(tiny_model_config).double().eval()
    features = torch.randn(2, 24, 8, dtype=torch.float64)
    labels = torch.zeros(2, 24, dtype=torch.long)
    labels[0, 6:13] = 1
    labels[1, 17:] = 1
    cfg = LossConfig(alpha=0.1)

    relu = torch.nn.functional.relu
    active = []

    def recording_relu(x, *args, **kwargs):
        active.append(x.detach() > 0)
        return relu(x, *args, **kwargs)

    monkeypatch.setattr(torch.nn.functional, "relu", recording_relu)

    def objective():
        """Loss plus every piecewise-linear branch taken on the way."""
        active.clear()
        out = model(features)
        targets, window_mask = batch_window_targets(labels.double(), out.mask, out.window_factor)
        loss, _ = total_loss(out.frame_logits, labels, out.mfd_logits, targets, cfg, out.mask, window_mask)
        branches = [mask.clone() for mask in active]
        branches.append(torch.tensor(residual_signs(out.frame_probs.detach().tolist())))
        return loss, branches

    model.zero_grad()
    loss, base = objective()
    loss.backward()
    assert len(base) == len(model.blocks) + 3

    def same_branches(branches) -> bool:
        return all(torch.equal(a, b) for a, b in zip(base, branches))

    def check(parameter: torch.nn.Parameter, index: int, step: float = 1e-3) -> Optional[bool]:
        """None when a kink lies within one step of the sampled point."""
        flat = parameter.data.view(-1)
        original = flat[index].item()
        with torch.no_grad():
            flat[index] = original + step
            plus, plus_branches = objective()
            flat[index] = original - step
            minus, minus_branches = objective()
            flat[index] = original
        if not (same_branches(plus_branches) and same_branches(minus_branches)):
            return None
        numeric = (plus.item() - minus.item()) / (2 * step)
        analytic = parameter.grad.view(-1)[index].item()
        return abs(numeric - analytic) <= 1e-4 * max(abs(numeric), abs(analytic)) + 1e-6

    rng = np.random.default_rng(0)
    named = dict(model.named_parameters())
    kinked = sorted(name for name in named if name.startswith(("blocks.", "mfd.down")))
    smooth = sorted(name for name in named if name not in kinked)
    for group in (smooth, kinked):
        checked = 0
        for _ in range(400):
            name = group[int(rng.integers(len(group)))]
            index = int(rng.integers(named[name].numel()))
            result = check(named[name], index)
            if result is None:
                continue
            assert result, (name, index)
            checked += 1
            if checked == 25:
                break
        assert checked == 25, group
