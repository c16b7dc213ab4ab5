import json

import pytest

from tweezer_exchange.config import ConfigError, load_config, paper_defaults


def test_defaults_load():
    cfg = load_config()
    assert cfg.trap.depth_hz == 91e3
    assert cfg.shots == 300
    assert cfg.j_ex_hz == pytest.approx(176.75, abs=0.01)
    assert cfg.ramp.u_eg_hz == pytest.approx(cfg.j_ex_hz / 2)
    assert len(cfg.exchange_times()) == 25 and len(cfg.t_g_grid()) == 25
    assert cfg.parity_error_model.pair_coherence == pytest.approx(0.49 / (4 * 0.5 * 0.913 * 0.81 * 0.69), rel=1e-9)


def test_defaults_document_their_sources():
    d = paper_defaults()
    for section in ("trap", "ramp", "error_model", "parity_error_model", "certification"):
        assert "_source" in d[section]


def test_file_overrides_and_keywords(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"shots": 50, "exchange": {"j_ex_hz": 100.0}, "gradient": {"delta_hz": 50.0}}))
    cfg = load_config(path, seed=9)
    assert cfg.shots == 50 and cfg.seed == 9
    assert cfg.j_ex_hz == 100.0
    assert cfg.ramp.u_eg_hz == 50.0
    assert cfg.t_g_grid()[-1] == pytest.approx(2 / 50.0)


@pytest.mark.parametrize(
    "raw",
    [
        {"shots": 0},
        {"bogus": 1},
        {"trap": {"depth_hz": -5}},
        {"trap": 3},
        {"gradient": {"delta_hz": 0}},
        {"exchange": {"times_s": []}},
        {"parity_error_model": {"target_contrast": 1.99}},
    ],
)
def test_invalid_configs_raise(tmp_path, raw):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(raw))
    with pytest.raises(ConfigError):
        load_config(path)


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    (tmp_path / "broken.json").write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "broken.json")
