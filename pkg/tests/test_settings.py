import pytest
import yaml

import spoofloc.settings as settings
from spoofloc.errors import ConfigError
from spoofloc.settings import (
    DEFAULTS_PATH,
    SOURCE_DEFAULT,
    SOURCE_FILE,
    SOURCE_FLAG,
    RunConfig,
    config_hash,
    dump_config,
    field_paths,
    load_config_file,
    parse_override,
    resolve_config,
)


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


def test_defaults_are_the_published_hyperparameters():
    config = resolve_config()
    assert config.train.batch_size == 64
    assert config.train.epochs == 100
    assert config.train.learning_rate == 1e-4
    assert config.train.weight_decay == 1e-5
    assert config.loss.alpha == 0.1
    assert config.loss.ifp_max_span == 3
    assert (config.mel.fft_window, config.mel.hop, config.mel.n_mels) == (800, 160, 80)
    assert config.augmentation.in_training_rate == 0.2
    assert config.augmentation.gaussian_snr_max_db == 15.0
    assert config.model.backbone.n_res_blocks == 7
    assert config.model.mfd.strides == (5, 2)
    assert config.mel.hop_s == 0.01


def test_defaults_file_mirrors_models():
    assert RunConfig.model_validate(yaml.safe_load(DEFAULTS_PATH.read_text(encoding="utf-8"))) == RunConfig()


def test_defaults_are_read_from_the_packaged_file(tmp_path, monkeypatch):
    defaults = tmp_path / "defaults.yaml"
    write_yaml(defaults, {"loss": {"alpha": 0.05}, "epochs": 7})
    monkeypatch.setattr(settings, "DEFAULTS_PATH", defaults)
    config = resolve_config()
    assert config.loss.alpha == 0.05
    assert config.train.epochs == 7
    assert config.train.batch_size == RunConfig().train.batch_size
    assert config.provenance["loss.alpha"] == SOURCE_DEFAULT
    assert resolve_config(overrides=[("alpha", 0.2)]).provenance["loss.alpha"] == SOURCE_FLAG


def test_every_field_starts_from_default():
    provenance = resolve_config().provenance
    assert set(provenance) == set(field_paths(RunConfig))
    assert set(provenance.values()) == {SOURCE_DEFAULT}


def test_flag_beats_file(tmp_path):
    path = write_yaml(tmp_path / "run.yaml", {"loss": {"alpha": 0.2}, "train": {"epochs": 3}})
    config = resolve_config(path, [("alpha", 0.3)])
    assert config.loss.alpha == 0.3
    assert config.provenance["loss.alpha"] == SOURCE_FLAG
    assert config.train.epochs == 3
    assert config.provenance["train.epochs"] == SOURCE_FILE
    assert config.provenance["train.batch_size"] == SOURCE_DEFAULT


def test_flat_and_dotted_keys(tmp_path):
    path = write_yaml(tmp_path / "run.yaml", {"alpha": 0.05, "train.batch_size": 8})
    config = resolve_config(path)
    assert config.loss.alpha == 0.05
    assert config.train.batch_size == 8


def test_misspelled_key_is_named(tmp_path):
    path = write_yaml(tmp_path / "run.yaml", {"loss": {"alpah": 0.2}})
    with pytest.raises(ConfigError, match="alpah"):
        resolve_config(path)
    with pytest.raises(ConfigError, match="unknown config key 'bogus'"):
        resolve_config(overrides=[("bogus", 1)])


def test_short_key_resolves_to_its_section():
    config = resolve_config(overrides=[("seed", 4)])
    assert config.train.seed == 4
    assert config.provenance["train.seed"] == SOURCE_FLAG


def test_type_mismatch_mentions_expectation():
    with pytest.raises(ConfigError, match="train.batch_size"):
        resolve_config(overrides=[("train.batch_size", "lots")])
    with pytest.raises(ConfigError, match="integer"):
        resolve_config(overrides=[("train.batch_size", "lots")])


def test_mel_and_model_widths_must_agree():
    with pytest.raises(ConfigError, match="input_dim"):
        resolve_config(overrides=[("mel.n_mels", 40)])


def test_parse_override():
    assert parse_override("alpha=0.3") == ("alpha", 0.3)
    assert parse_override("train.toggles.use_ifp=false") == ("train.toggles.use_ifp", False)
    assert parse_override("mfd.strides=[5, 2]") == ("mfd.strides", [5, 2])
    with pytest.raises(ConfigError, match="key=value"):
        parse_override("alpha")


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config_file(tmp_path / "missing.yaml")
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="mapping"):
        load_config_file(listing)
    empty = tmp_path / "empty.yaml"
    empty.write_text("", encoding="utf-8")
    assert load_config_file(empty) == {}


def test_printed_config_reparses_identically(tmp_path):
    config = resolve_config(overrides=[("alpha", 0.25), ("epochs", 7), ("use_mfd", False)])
    path = tmp_path / "resolved.yaml"
    path.write_text(dump_config(config), encoding="utf-8")
    assert resolve_config(path).model_dump() == config.model_dump()


def test_config_hash_tracks_content():
    assert config_hash(RunConfig().mel) == config_hash(RunConfig().mel)
    assert config_hash(RunConfig().mel) != config_hash(RunConfig().model)
    assert len(config_hash(RunConfig().model, RunConfig().mel)) == 16
