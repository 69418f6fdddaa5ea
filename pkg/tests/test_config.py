import glob
import os

import pytest

from maxsurf.config import ConfigError, parse_config, serialize

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def test_minimal_config_defaults():
    cfg = parse_config("scenario = grim_reaper\n")
    assert cfg.nodes == 101
    assert cfg.t0 == -1.0
    assert cfg.t_end == -0.3
    assert cfg.profile == "trumpet"
    assert cfg.initial == ("translator", ())
    assert cfg.cfl == 0.4
    assert cfg.out_dir == "runs/grim_reaper"


def test_round_trip_identity():
    texts = [
        "scenario = cylinder_disk\ninitial = bump(0.1)\nnodes = 65\n",
        "scenario = sine_tube\ninitial = plane_bump(thinnest, 0.05)\nt_end = 40\n",
        "scenario = grim_reaper\ncfl = 0.45\nh_stop = 1e-7\n",
        "scenario = pseudosphere_leaf\ninitial = leaf(1.5)\n",
        "scenario = cylinder_disk\nt_end = none\nmax_steps = 500\n",
    ]
    for text in texts:
        cfg = parse_config(text)
        assert parse_config(serialize(cfg)) == cfg


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("scenario = grim_reaper\nfrobnicate = 1\n")


def test_missing_scenario_rejected():
    with pytest.raises(ConfigError, match="scenario"):
        parse_config("nodes = 51\n")


def test_out_of_range_values():
    with pytest.raises(ConfigError, match="cfl"):
        parse_config("scenario = grim_reaper\ncfl = 0.9\n")
    with pytest.raises(ConfigError, match="nodes"):
        parse_config("scenario = grim_reaper\nnodes = 3\n")
    with pytest.raises(ConfigError, match="eps_guard"):
        parse_config("scenario = grim_reaper\neps_guard = 2\n")
    with pytest.raises(ConfigError, match="true/false|bad value"):
        parse_config("scenario = grim_reaper\ncertificate = maybe\n")


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("scenario = grim_reaper\nnodes = 51\nnodes = 101\n")


def test_comments_and_blanks_ignored():
    cfg = parse_config("# header\n\nscenario = grim_reaper  # inline\n\n# end\n")
    assert cfg.scenario == "grim_reaper"


def test_figure1_experiment_config():
    cfg = parse_config("scenario = grim_reaper\nt0 = -1.0\nnodes = 401\n")
    assert cfg.nodes == 401
    assert cfg.t0 == -1.0


def test_shipped_configs_parse():
    paths = sorted(glob.glob(os.path.join(CONFIG_DIR, "*.cfg")))
    assert len(paths) >= 10
    for path in paths:
        with open(path) as f:
            cfg = parse_config(f.read())
        assert parse_config(serialize(cfg)) == cfg
