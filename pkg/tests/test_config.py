import math
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qutrit_transfer.config import (
    ConfigError,
    RunConfig,
    load_config,
    parse_config,
    render_default_config,
)

DEFAULT_FILE = Path(__file__).resolve().parents[1] / "configs" / "default.conf"


def test_empty_document_gives_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert (cfg.nu_eg_GHz, cfg.nu_fg_GHz) == (3.5, 8.8)
    assert (cfg.nu_a_GHz, cfg.nu_b_GHz) == pytest.approx((2.5, 8.0))
    assert (cfg.delta_GHz, cfg.Delta_GHz, cfg.Omega_MHz) == (1.0, 0.8, 100.0)
    assert (cfg.T_phi_us, cfg.T_relax_us, cfg.kappa_inv_us) == (2.0, 5.0, 0.1)
    assert cfg.crosstalk_ratio == 0.1


def test_single_override():
    cfg = parse_config("kappa_inv_us = 10  # longer-lived resonators")
    assert cfg.kappa_inv_us == 10.0
    assert cfg.D == RunConfig().D


@pytest.mark.parametrize("text, key", [
    ("delta_GHz = -1", "delta_GHz"),
    ("kappa_inv_us = -0.1", "kappa_inv_us"),
    ("bogus = 1", "bogus"),
    ("D = ten", "D"),
    ("n_photons = 1", "n_photons"),
    ("crosstalk = maybe", "crosstalk"),
    ("constraint_mode = other", "constraint_mode"),
    ("D = 4\nD = 5", "D"),
    ("D_min = 12\nD_max = 6", "D_min"),
    ("delta_GHz = 4.0", "delta_GHz"),
    ("alpha = 1\nbeta = 1", "alpha"),
    ("dt_list_ps = 1,-1", "dt_list_ps"),
    ("timing = late", "timing"),
    ("D = nan", "D"),
])
def test_rejections_name_the_key(text, key):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == key
    assert key in str(info.value)


def test_malformed_line():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("D = 10\njust words")


def test_infinite_lifetime_and_complex_amplitudes():
    cfg = parse_config("T_phi_us = inf\nalpha = 0\nbeta = 0.6j\ngamma = 0.8")
    assert math.isinf(cfg.T_phi_us)
    assert cfg.estimator_params()["T_phi_us"] is None
    assert cfg.beta == 0.6j


def test_overrides_win():
    cfg = parse_config("D = 8", {"D": "12"})
    assert cfg.D == 12.0


def test_estimator_params_units():
    cfg = parse_config("dt_ps = 0.5")
    assert cfg.estimator_params()["dt_ns"] == pytest.approx(5e-4)
    assert cfg.estimator().D == 10.0


def test_sweep_spec_grids():
    cfg = parse_config("D_min = 4\nD_max = 20\nD_points = 17")
    spec = cfg.sweep_spec("detuning")
    assert spec.D_values == tuple(float(d) for d in range(4, 21))
    assert spec.kappa_inv_us == (0.1, 1.0, 10.0)
    assert "kappa_inv_us" not in spec.base
    cspec = cfg.sweep_spec("coupling_inhomogeneity")
    assert len(cspec.c_values) == 11 and "c" not in cspec.base


def test_shipped_default_file_matches_defaults():
    text = DEFAULT_FILE.read_text(encoding="utf-8")
    assert text == render_default_config()
    assert load_config(DEFAULT_FILE) == RunConfig()


def test_render_roundtrip_after_changes():
    cfg = parse_config("D = 7.5\nkappa_inv_list_us = 0.1,inf\ncrosstalk = false")
    text = "\n".join(f"{k} = {v}" for k, v in cfg.as_items())
    assert parse_config(text) == cfg


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/run.conf")


@settings(max_examples=200)
@given(st.lists(st.tuples(st.sampled_from(["D", "kappa_inv_us", "n_photons", "crosstalk",
                                           "alpha", "method", "bogus", "c_points"]),
                          st.text(max_size=8)), max_size=4))
def test_parsing_is_total(pairs):
    text = "\n".join(f"{k} = {v}" for k, v in pairs)
    try:
        cfg = parse_config(text)
    except ConfigError:
        return
    assert isinstance(cfg, RunConfig)
