"""Config parsing, defaults and override precedence."""

import pytest

from hoirecon.config import (ConfigError, RunConfig, load_config,
                             parse_config_text, with_updates)


def test_defaults():
    cfg = RunConfig()
    assert cfg.crop_size == 224
    assert cfg.feat_channels == 1024
    assert cfg.model_dim == 512
    assert cfg.num_heads == 8
    assert cfg.ffn_dim == 2048
    assert cfg.tiat_layers == 12
    assert cfg.window == 64
    assert cfg.pad == 1.2
    assert cfg.fps == 30.0


def test_parse_key_values_with_comments():
    text = """
    # toy setup
    model_dim = 64   # small
    num_heads=4

    window = 8
    pad = 1.5
    """
    vals = parse_config_text(text)
    assert vals == {"model_dim": 64, "num_heads": 4, "window": 8, "pad": 1.5}
    assert isinstance(vals["model_dim"], int)
    assert isinstance(vals["pad"], float)


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ConfigError, match="my.cfg:2"):
        parse_config_text("model_dim = 64\nnot a pair\n", where="my.cfg")
    with pytest.raises(ConfigError, match="unknown key 'modeldim'"):
        parse_config_text("modeldim = 64\n")
    with pytest.raises(ConfigError, match="bad value for model_dim"):
        parse_config_text("model_dim = big\n")


def test_load_config_precedence(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("model_dim = 64\nnum_heads = 4\nwindow = 16\n")
    cfg = load_config(p, overrides={"window": 8, "seed": 3, "fps": None})
    assert cfg.model_dim == 64      # from file
    assert cfg.window == 8          # override beats file
    assert cfg.seed == 3            # override beats default
    assert cfg.fps == 30.0          # None override skipped
    assert cfg.ffn_dim == 2048      # untouched default


def test_load_config_rejects_unknown_override():
    with pytest.raises(ConfigError, match="unknown config override"):
        load_config(None, overrides={"wat": 1})


def test_with_updates_skips_none():
    cfg = RunConfig(model_dim=64, num_heads=4, ffn_dim=128, tiat_layers=2)
    cfg2 = with_updates(cfg, window=8, seed=None)
    assert cfg2.window == 8
    assert cfg2.seed == cfg.seed
    assert cfg.window == 64  # original untouched


def test_invalid_dimensions_raise_config_error():
    with pytest.raises(ConfigError):
        RunConfig(crop_size=0)
    with pytest.raises(ConfigError):
        RunConfig(pad=-1.0)
    with pytest.raises(ConfigError):
        RunConfig(fps=0.0)
    with pytest.raises(ConfigError, match="divisible"):
        RunConfig(model_dim=100, num_heads=7)
    with pytest.raises(ConfigError, match="window"):
        RunConfig(window=0)


def test_derived_configs_share_dims():
    cfg = RunConfig(model_dim=64, num_heads=4, ffn_dim=128, tiat_layers=2,
                    window=8, rope_base=500.0)
    att = cfg.attention()
    assert (att.model_dim, att.num_heads, att.ffn_dim) == (64, 4, 128)
    tc = cfg.tiat()
    assert tc.num_layers == 2 and tc.window == 8 and tc.rope_base == 500.0
