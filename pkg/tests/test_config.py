import pytest

from skymimic.config import (ConfigError, ExperimentConfig, parse_overrides)


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.window == 8
    assert cfg.stride == 4
    assert cfg.attn_penalty_fg == 0.01
    assert cfg.attn_penalty_bg == 0.01
    assert cfg.loss_mix == 0.7
    assert cfg.seg_threshold == 0.6
    assert cfg.seg_min_len == 2.0
    assert cfg.style_lr == 0.001
    assert cfg.max_speed == 10.0


def test_save_load_roundtrip(tmp_path):
    cfg = ExperimentConfig(seed=99, loss_mix=0.5, seg_mode="absolute")
    path = tmp_path / "run.cfg"
    cfg.save(path)
    assert ExperimentConfig.load(path) == cfg


def test_load_with_comments_and_blanks(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# a comment\n\nseed = 5  # trailing\nstyle_epochs=2\n")
    cfg = ExperimentConfig.load(path)
    assert cfg.seed == 5
    assert cfg.style_epochs == 2
    assert cfg.loss_mix == 0.7  # untouched default


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("warp_factor = 9\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(path)


def test_bad_type_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig().updated({"seed": "many"})


def test_malformed_line_rejected(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("just some words\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(path)


def test_parse_overrides():
    assert parse_overrides(["a=1", "b = x=y"]) == {"a": "1", "b": "x=y"}
    with pytest.raises(ConfigError):
        parse_overrides(["no-equals"])
