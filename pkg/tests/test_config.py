import math

import pytest

from csqfc.config import (
    load_config,
    parse_comb_center,
    parse_config,
    parse_frequency,
    parse_time,
)
from csqfc.errors import ConfigError
from csqfc.fixtures import PUMP_00, SPEED_OF_LIGHT, paper_cavity, paper_plan, paper_signal

TWO_PI = 2 * math.pi


@pytest.mark.parametrize("text,expected", [
    ("40 MHz", TWO_PI * 40e6),
    ("2pi*40 MHz", TWO_PI * 40e6),
    ("2pi * 3.3 GHz", TWO_PI * 3.3e9),
    ("2.5e8 rad/s", 2.5e8),
    ("189.542 THz", TWO_PI * 189.542e12),
    ({"value": 1, "unit": "kHz"}, TWO_PI * 1e3),
    ({"value": 40, "unit": "2pi*MHz"}, TWO_PI * 40e6),
])
def test_parse_frequency(text, expected):
    assert parse_frequency(text) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("bad", [40e6, 40, True, "40", "40 furlongs", "2pi*1 rad/s",
                                 {"value": 1}, None])
def test_parse_frequency_rejects(bad):
    with pytest.raises(ConfigError):
        parse_frequency(bad)


def test_parse_time():
    assert parse_time("125 ns") == pytest.approx(125e-9)
    assert parse_time("1.5 us") == pytest.approx(1.5e-6)
    with pytest.raises(ConfigError):
        parse_time(125e-9)
    with pytest.raises(ConfigError):
        parse_time("125 MHz")


def test_parse_comb_center_wavelength():
    assert parse_comb_center("1540 nm") == pytest.approx(TWO_PI * SPEED_OF_LIGHT / 1540e-9)
    assert parse_comb_center("1.54 um") == pytest.approx(parse_comb_center("1540 nm"))
    assert parse_comb_center("2pi*194 THz") == pytest.approx(TWO_PI * 194e12)


def test_bundled_config_matches_reference_device():
    cfg = load_config()
    cav, ref = cfg.cavity, paper_cavity()
    assert cav.gamma_all == pytest.approx(ref.gamma_all, rel=1e-15)
    assert cav.gamma_r_tilde == pytest.approx(0.17, rel=1e-15)
    assert cav.fsr == pytest.approx(ref.fsr, rel=1e-15)
    assert cav.alpha == ref.alpha
    plan, rplan = cfg.plan, paper_plan()
    assert plan.indices == rplan.indices
    assert plan.comb_center == pytest.approx(rplan.comb_center, rel=1e-15)
    assert plan.resonance_anchor == pytest.approx(rplan.resonance_anchor, rel=1e-12)
    assert cfg.pump_00 == pytest.approx(PUMP_00, rel=1e-15)
    assert cfg.signal == paper_signal()
    assert cfg.pump_power == 180.0
    assert cfg.zeta is None
    assert cfg.convention == "hz"
    assert cfg.scenario["zeta"] == 62.5


def _base():
    return {
        "cavity": {"gamma_all": "2pi*40 MHz", "gamma_r_tilde": 0.17, "fsr": "2pi*3.3 GHz",
                   "alpha": 7.3e-3, "length": 19.67},
        "plan": {"comb_center": "1540 nm", "comb_spacing": "2pi*1 GHz", "tooth_count": 3,
                 "pump_00": "2pi*189.542 THz"},
        "signal": {"n_in": 0.1, "g2_in": 0.01, "linewidth_ratio": 5, "window": "125 ns"},
    }


def test_minimal_config_defaults():
    cfg = parse_config(_base())
    assert cfg.pump_power == pytest.approx(1 / 7.3e-3)
    assert cfg.plan.bin_width == pytest.approx(2 * cfg.cavity.gamma_all)
    assert cfg.rounds == 40 and cfg.seed == 0
    assert math.isinf(cfg.cavity.acceptance_band)


def test_gamma_r_form():
    data = _base()
    data["cavity"] = {"gamma_r": "2pi*6.8 MHz", "gamma_int": "2pi*33.2 MHz",
                      "fsr": "2pi*3.3 GHz", "alpha": 7.3e-3, "length": 19.67}
    cav = parse_config(data).cavity
    assert cav.gamma_all == pytest.approx(TWO_PI * 40e6, rel=1e-12)
    assert cav.gamma_r_tilde == pytest.approx(0.17, rel=1e-12)


def test_resonance_anchor_form():
    data = _base()
    del data["plan"]["pump_00"]
    center = parse_comb_center("1540 nm")
    data["plan"]["resonance_anchor"] = f"{center + PUMP_00!r} rad/s"
    assert parse_config(data).pump_00 == pytest.approx(PUMP_00, rel=1e-12)


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("signal"),
    lambda d: d["cavity"].update(gamma_all=2.5e8),
    lambda d: d["cavity"].update(alpha="7.3e-3"),
    lambda d: d["cavity"].update(gamma_r_tilde=1.5),
    lambda d: d["plan"].pop("pump_00"),
    lambda d: d["signal"].update(window=125e-9),
    lambda d: d["signal"].update(linewidth_ratio=0),
])
def test_invalid_configs(mutate):
    data = _base()
    mutate(data)
    with pytest.raises(ConfigError):
        parse_config(data)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[cavity\n")
    with pytest.raises(ConfigError):
        load_config(bad)
