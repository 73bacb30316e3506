import pytest

from conceptrealm.config import ConfigError, RunConfig, load_config, make_config


def test_flags_override_file(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('seed = 3\nk_max = 5\ninput = ["data.jsonl"]\noutput = "out"\n')
    cfg = make_config(load_config(path), {"k_max": 7, "beta": None})
    assert (cfg.seed, cfg.k_max, cfg.beta) == (3, 7, 0.01)
    assert cfg.input == [str(tmp_path / "data.jsonl")]
    assert cfg.output == str(tmp_path / "out")


def test_unknown_keys_and_bad_toml(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("seed = 1\nnumber_of_topics = 4\n")
    with pytest.raises(ConfigError, match="number_of_topics"):
        load_config(path)
    path.write_text("seed = \n")
    with pytest.raises(ConfigError):
        load_config(path)


@pytest.mark.parametrize("bad", [
    {},
    {"seed": 1, "keeper_threshold": 0.0},
    {"seed": 1, "leaver_threshold": 1.5},
    {"seed": 1, "k_min": 4, "k_max": 3},
    {"seed": 1, "no_above": 0.0},
    {"seed": 1, "windowing": "monthly"},
    {"seed": 1, "coherence": "umass"},
    {"seed": 1, "jobs": 0},
    {"seed": 1, "alpha": -1.0},
])
def test_validation(bad):
    with pytest.raises(ConfigError):
        make_config(bad)


def test_defaults():
    cfg = make_config({"seed": 0})
    assert (cfg.keeper_threshold, cfg.leaver_threshold, cfg.split_margin) == (0.5, 0.10, 0.01)
    assert (cfg.no_below, cfg.no_above, cfg.top_n) == (15, 0.5, 1)
    assert isinstance(cfg, RunConfig)
