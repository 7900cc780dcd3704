import librosa
import numpy as np
import pytest
from pydantic import ValidationError
from scipy.signal import get_window

from spoofloc.data.types import AudioClip
from spoofloc.errors import InputValidationError
from spoofloc.features import FeatureCache, extract_mel, frame_count, model_input, normalize_features
from spoofloc.settings import MelConfig


@pytest.fixture
def noise_clip():
    rng = np.random.default_rng(7)
    return AudioClip(id="noise", samples=0.1 * rng.standard_normal(16000))


def _oracle_power(samples: np.ndarray, cfg: MelConfig) -> np.ndarray:
    window = get_window("hann", cfg.fft_window, fftbins=True)
    basis = librosa.filters.mel(sr=cfg.sample_rate, n_fft=cfg.fft_window, n_mels=cfg.n_mels, fmin=cfg.fmin, fmax=cfg.fmax)
    n = frame_count(samples.size, cfg)
    frames = np.stack([samples[i * cfg.hop : i * cfg.hop + cfg.fft_window] for i in range(n)])
    spectrum = np.abs(np.fft.rfft(frames * window, axis=1)) ** 2
    return spectrum @ basis.T


def test_frame_count_formula():
    cfg = MelConfig()
    assert frame_count(16000, cfg) == 96
    assert frame_count(800, cfg) == 1
    assert frame_count(959, cfg) == 1
    assert frame_count(960, cfg) == 2
    assert frame_count(799, cfg) == 0


def test_one_second_clip_shape(make_clip):
    frames = extract_mel(make_clip(duration_s=1.0), MelConfig())
    assert frames.values.shape == (96, 80)
    assert frames.n_frames == 96
    assert np.isfinite(frames.values).all()


def test_silence_hits_the_floor():
    frames = extract_mel(AudioClip(id="silence", samples=np.zeros(16000)), MelConfig())
    assert np.all(frames.values == np.log(1e-10))


def test_tone_matches_direct_filterbank(make_clip):
    cfg = MelConfig()
    clip = make_clip(duration_s=1.0, freq=440.0)
    values = extract_mel(clip, cfg).values
    oracle = _oracle_power(clip.samples, cfg)

    peaks = values.argmax(axis=1)
    assert np.all(peaks == peaks[0])
    assert np.array_equal(peaks, oracle.argmax(axis=1))
    assert np.allclose(np.exp(values), np.maximum(oracle, cfg.log_floor), rtol=1e-6, atol=1e-9 * oracle.max())


def test_scaling_never_decreases_energy(noise_clip):
    cfg = MelConfig()
    base = extract_mel(noise_clip, cfg).values
    louder = extract_mel(noise_clip.with_samples(noise_clip.samples * 2.0), cfg).values
    assert np.all(louder >= base)


def test_one_hop_shift_moves_rows():
    cfg = MelConfig()
    rng = np.random.default_rng(11)
    signal = 0.1 * rng.standard_normal(16000 + cfg.hop)
    first = extract_mel(AudioClip(id="a", samples=signal[:16000]), cfg).values
    shifted = extract_mel(AudioClip(id="b", samples=signal[cfg.hop :]), cfg).values
    assert np.allclose(shifted[:-1], first[1:], rtol=1e-6, atol=1e-6)


def test_clip_shorter_than_window():
    clip = AudioClip(id="short", samples=np.zeros(900))
    with pytest.raises(InputValidationError, match="pad it or drop it"):
        extract_mel(clip, MelConfig(fft_window=1024, hop=256))


def test_normalization_per_bin(noise_clip):
    values = normalize_features(extract_mel(noise_clip, MelConfig()).values)
    assert np.allclose(values.mean(axis=0), 0.0, atol=1e-8)
    assert np.allclose(values.std(axis=0), 1.0, atol=1e-3)


def test_model_input_is_float32(noise_clip):
    features = model_input(noise_clip, MelConfig(n_mels=40))
    assert features.dtype == np.float32
    assert features.shape == (96, 40)


def test_mel_config_rejects_bad_framing():
    with pytest.raises(ValidationError):
        MelConfig(hop=800)
    with pytest.raises(ValidationError):
        MelConfig(fmax=9000.0)
    with pytest.raises(ValidationError):
        MelConfig(n_mels=0)


def test_extraction_is_deterministic(noise_clip):
    cfg = MelConfig()
    assert extract_mel(noise_clip, cfg).values.tobytes() == extract_mel(noise_clip, cfg).values.tobytes()


def test_cache_hit_is_bit_identical(tmp_path, noise_clip):
    cache = FeatureCache(tmp_path, MelConfig())
    computed = cache.get_or_compute(noise_clip)
    assert cache.path_for("noise").is_file()
    cached = cache.get_or_compute(noise_clip)
    assert cached.values.tobytes() == computed.values.tobytes()
    assert cached.values.tobytes() == extract_mel(noise_clip, MelConfig()).values.tobytes()


def test_cache_key_follows_config(tmp_path):
    assert FeatureCache(tmp_path, MelConfig()).path_for("a") != FeatureCache(tmp_path, MelConfig(n_mels=40)).path_for("a")
