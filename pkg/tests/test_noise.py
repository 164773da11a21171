import csv
import io
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from csqfc.errors import ParameterError
from csqfc.fixtures import PAPER_ZETA, paper_cavity, paper_signal
from csqfc.noise import (
    CSV_HEADER,
    NOISE_CONVENTION,
    SignalModel,
    budget_table,
    budgets_to_csv,
    g2_out,
    multi_round_g2,
    noise_photons,
    operating_point,
    rounds_within_threshold,
    s780_numeric_oracle,
    signal_photons,
    snr,
)


@pytest.fixture
def cav():
    return paper_cavity()


# -- noise and signal photon numbers ------------------------------------------


def test_noise_photons_reference(cav):
    n = noise_photons(cav, cav.p_max, 125e-9)
    assert NOISE_CONVENTION == "hz"
    assert n == pytest.approx(1.8e-4, rel=0.01)
    # At P = 1/alpha: pi * gamma_r~ * n_ref * L * T_w * gamma_all[GHz] * P_max.
    closed = math.pi * 0.17 * 25 * 19.67 * 125e-9 * 0.040 * cav.p_max
    assert n == pytest.approx(closed, rel=1e-12)


def test_noise_photons_angular_convention(cav):
    hz = noise_photons(cav, cav.p_max, 125e-9)
    ang = noise_photons(cav, cav.p_max, 125e-9, convention="angular")
    assert ang / hz == pytest.approx(2 * math.pi)
    with pytest.raises(ParameterError):
        noise_photons(cav, cav.p_max, 125e-9, convention="furlong")


def test_noise_photons_scaling(cav):
    assert noise_photons(cav, 0.0, 125e-9) == 0
    base = noise_photons(cav, 100.0, 125e-9)
    assert noise_photons(cav, 100.0, 250e-9) == pytest.approx(2 * base)
    from dataclasses import replace
    longer = replace(cav, length=2 * cav.length)
    assert noise_photons(longer, 100.0, 125e-9) == pytest.approx(2 * base)


def test_signal_photons_reference(cav):
    s = signal_photons(cav, paper_signal())
    assert s == pytest.approx(0.01417, abs=1e-5)
    expected = 0.17 * 0.1 * 5 / 6 * (1 - math.exp(-2 * 125e-9 * cav.gamma_all / 6))
    assert s == pytest.approx(expected, rel=1e-15)


def test_signal_photons_limits(cav):
    assert signal_photons(cav, SignalModel(0.1, 0.01, 5, 1e-18)) == pytest.approx(0, abs=1e-10)
    big = signal_photons(cav, SignalModel(0.1, 0.01, 1e7, 1.0))
    assert big == pytest.approx(0.017, rel=1e-6)


def test_signal_model_validation():
    with pytest.raises(ParameterError):
        SignalModel(-1, 0.01, 5, 1e-7)
    with pytest.raises(ParameterError):
        SignalModel(0.1, 0.01, 0, 1e-7)


def test_snr_examples():
    assert snr(2.0, 2.0) == 1.0
    assert snr(0.01417, 1.84e-4) == pytest.approx(77.0, abs=0.05)
    with pytest.raises(ZeroDivisionError):
        snr(1.0, 0.0)


def test_operating_point_in_reproduction_band(cav):
    op = operating_point(cav, paper_signal())
    assert 55 <= op.zeta <= 80
    assert op.zeta == pytest.approx(78.7526, rel=1e-5)
    assert PAPER_ZETA == 62.5


# -- g2 ------------------------------------------------------------------------


def test_g2_examples():
    assert g2_out(0.01, 62.5) == pytest.approx(0.0409, abs=1e-4)
    assert g2_out(0.01, 0.0) == 1.0
    assert g2_out(0.01, math.inf) == 0.01
    assert g2_out(0.01, 1e12) == pytest.approx(0.01, rel=1e-9)


def test_multi_round_examples():
    assert multi_round_g2(0.01, 62.5, 23) == pytest.approx(0.471, abs=1e-3)
    assert multi_round_g2(0.01, 62.5, 40) == pytest.approx(0.632, abs=1e-3)
    assert multi_round_g2(0.01, 625.0, 40) == pytest.approx(0.126, abs=1e-3)
    assert multi_round_g2(0.01, 62.5, 1) == g2_out(0.01, 62.5)
    with pytest.raises(ParameterError):
        multi_round_g2(0.01, 62.5, 0)


def _brute_force_rounds(g2_in, zeta, threshold, limit=10_000):
    last = 0
    for m in range(1, limit):
        if multi_round_g2(g2_in, zeta, m) <= threshold:
            last = m
        else:
            break
    return last


def test_rounds_within_threshold_scan():
    # Brute force: round 25 gives 0.4949, round 26 gives 0.5062.
    assert multi_round_g2(0.01, 62.5, 25) == pytest.approx(0.49490, abs=1e-5)
    assert multi_round_g2(0.01, 62.5, 26) == pytest.approx(0.50625, abs=1e-5)
    assert rounds_within_threshold(0.01, 62.5, 0.5) == 25
    assert rounds_within_threshold(0.01, 62.5, 0.5) == _brute_force_rounds(0.01, 62.5, 0.5)


def test_rounds_within_threshold_edges():
    assert rounds_within_threshold(0.01, 62.5, 1.0) == math.inf
    assert rounds_within_threshold(0.01, 62.5, g2_out(0.01, 62.5)) == 1
    assert rounds_within_threshold(0.01, 62.5, 0.02) == 0


@given(g2=st.floats(0.0, 0.9), zeta=st.floats(0.5, 5000.0), thr=st.floats(0.05, 0.95))
def test_rounds_within_threshold_matches_scan(g2, zeta, thr):
    got = rounds_within_threshold(g2, zeta, thr)
    if got == 0:
        assert multi_round_g2(g2, zeta, 1) > thr
    else:
        assert multi_round_g2(g2, zeta, got) <= thr < multi_round_g2(g2, zeta, got + 1)


@given(g2=st.floats(0.0, 0.999), z1=st.floats(0.0, 1e4), z2=st.floats(0.0, 1e4))
def test_g2_monotone_in_zeta(g2, z1, z2):
    lo, hi = sorted((z1, z2))
    assert g2_out(g2, hi) <= g2_out(g2, lo) + 1e-15


@given(g2=st.floats(0.0, 5.0), zeta=st.floats(0.0, 1e6))
def test_g2_bounds(g2, zeta):
    v = g2_out(g2, zeta)
    assert min(g2, 1.0) - 1e-12 <= v <= max(g2, 1.0) + 1e-12


@given(zeta=st.floats(0.0, 1e6))
def test_g2_fixed_point(zeta):
    assert g2_out(1.0, zeta) == pytest.approx(1.0, rel=1e-12)


@given(g2=st.floats(0.0, 0.999), zeta=st.floats(0.1, 1e4), m=st.integers(1, 500))
def test_multi_round_monotone(g2, zeta, m):
    assert multi_round_g2(g2, zeta, m) <= multi_round_g2(g2, zeta, m + 1) + 1e-15


@given(n_in=st.floats(1e-3, 10.0), k=st.floats(0.1, 10.0))
def test_zeta_linear_in_n_in(n_in, k):
    cav = paper_cavity()
    a = operating_point(cav, SignalModel(n_in, 0.01, 5, 125e-9))
    b = operating_point(cav, SignalModel(n_in * k, 0.01, 5, 125e-9))
    assert b.zeta / a.zeta == pytest.approx(k, rel=1e-12)
    assert b.n_780 == a.n_780


# -- tables --------------------------------------------------------------------


def test_budget_table_and_csv():
    table = budget_table(0.01, 62.5, 40, 0.0141663, 0.0141663 / 62.5)
    assert [b.round_index for b in table] == list(range(1, 41))
    assert table[22].g2_out == pytest.approx(0.471, abs=1e-3)
    assert table[-1].zeta == pytest.approx(62.5 / 40)
    rows = list(csv.reader(io.StringIO(budgets_to_csv(table))))
    assert tuple(rows[0]) == CSV_HEADER
    assert len(rows) == 41


def test_single_round_table():
    (b,) = budget_table(0.01, 62.5, 1)
    assert b.g2_out == g2_out(0.01, 62.5)


# -- quadrature oracle ---------------------------------------------------------

# Oracle values computed once by FFT Fourier inversion and window placement
# (independent of the closed form); frozen here.
ORACLE_GRID = {
    (1, 0.1): 0.000808881786460906,
    (1, 1): 0.005373024684895607,
    (1, 10): 0.008499614100587164,
    (1, 100): 0.008499999999998188,
    (2, 0.1): 0.0007309207258638372,
    (2, 1): 0.005514605923683521,
    (2, 10): 0.011318910150100335,
    (2, 100): 0.011333333333332434,
    (5, 0.1): 0.0004644385194129357,
    (5, 1): 0.00401580639124362,
    (5, 10): 0.013661285092141207,
    (5, 100): 0.014166666666666262,
    (10, 0.1): 0.00027845264511722537,
    (10, 1): 0.0025692730574489405,
    (10, 10): 0.012945954185599424,
    (10, 100): 0.015454545258302841,
}


@pytest.mark.parametrize("n,tg", sorted(ORACLE_GRID))
def test_closed_form_matches_frozen_oracle(n, tg):
    cav = paper_cavity()
    sig = SignalModel(0.1, 0.01, n, tg / cav.gamma_all)
    assert signal_photons(cav, sig) == pytest.approx(ORACLE_GRID[n, tg], rel=1e-4)


@pytest.mark.parametrize("n,tg", [(1, 1), (5, 10.5), (10, 0.1)])
def test_live_oracle(n, tg):
    cav = paper_cavity()
    sig = SignalModel(0.1, 0.01, n, tg / cav.gamma_all)
    assert s780_numeric_oracle(cav, sig) == pytest.approx(signal_photons(cav, sig), rel=1e-4)


def test_oracle_at_operating_point(cav):
    sig = paper_signal()
    val = s780_numeric_oracle(cav, sig)
    assert val == pytest.approx(0.01417, abs=1e-4)
    assert val == pytest.approx(signal_photons(cav, sig), rel=1e-4)


def test_oracle_equal_linewidths(cav):
    sig = SignalModel(0.1, 0.01, 1, 2 / cav.gamma_all)
    expected = 0.17 * 0.1 * 0.5 * (1 - math.exp(-2))
    assert s780_numeric_oracle(cav, sig) == pytest.approx(expected, rel=1e-4)
