import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csqfc.channel_plan import pump_for
from csqfc.core import PumpSetting, conversion_bandwidth
from csqfc.errors import FitError, ParameterError
from csqfc.fixtures import (
    COMB_SPACING,
    FSR,
    OSA_CONVERTED_RESOLUTION,
    OSA_SIGNAL_RESOLUTION,
    PUMP_00,
    paper_cavity,
    paper_plan,
)
from csqfc.spectra import (
    BANDWIDTH,
    EFFICIENCY,
    PowerSweep,
    Spectrum,
    convolve_instrument,
    fit_bandwidth_sweep,
    fit_efficiency_sweep,
    fit_power_sweeps,
    read_spectrum,
    simulate_conversion,
    simulate_resonant_comb,
    simulate_transmission,
    synthetic_sweep,
    write_spectrum,
)

TWO_PI = 2 * math.pi
POWER = 180.0


@pytest.fixture
def cav():
    return paper_cavity()


@pytest.fixture
def plan():
    return paper_plan()


def by_tooth(spec):
    return dict(zip(spec.meta["tooth_indices"], spec.powers))


# -- Spectrum container and I/O -----------------------------------------------


def test_spectrum_invariants():
    with pytest.raises(ParameterError):
        Spectrum(np.array([1.0, 1.0]), np.array([1.0, 1.0]))
    with pytest.raises(ParameterError):
        Spectrum(np.array([1.0, 2.0]), np.array([1.0, -1.0]))


def test_csv_round_trip(tmp_path, plan, cav):
    spec = simulate_transmission(plan, cav, PumpSetting(POWER, PUMP_00))
    csv_path, meta_path = write_spectrum(spec, tmp_path / "t.csv")
    assert csv_path.read_text().splitlines()[0] == "omega_rad_per_s,power"
    back = read_spectrum(csv_path)
    np.testing.assert_array_equal(back.frequencies, spec.frequencies)
    np.testing.assert_array_equal(back.powers, spec.powers)
    assert back.band_label == spec.band_label
    assert back.meta["target_index"] == spec.meta["target_index"]


def test_read_rejects_bad_header(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ParameterError):
        read_spectrum(p)


# -- transmission / conversion -------------------------------------------------


def test_reference_depletion(plan, cav):
    spec = simulate_transmission(plan, cav, PumpSetting(POWER, PUMP_00))
    t = by_tooth(spec)
    c = cav.alpha * POWER
    assert c == pytest.approx(1.314)
    assert t[0] == pytest.approx(((1 - c) / 2 / ((1 + c) / 2)) ** 2, rel=1e-12)
    assert t[0] == pytest.approx(0.0184, abs=1e-4)
    assert 1 - t[1] < 5e-3 and 1 - t[-1] < 5e-3
    assert all(1 - t[i] < 5e-3 for i in (-2, -1, 1, 2))
    # Three teeth away the comb is only 0.3 GHz from the neighbouring resonance.
    d = 0.3e9 / 40e6
    expected = ((1 - c) ** 2 / 4 + d * d) / ((1 + c) ** 2 / 4 + d * d)
    assert t[3] == pytest.approx(expected, rel=1e-9)
    assert t[-3] == pytest.approx(expected, rel=1e-9)
    assert 1 - t[3] == pytest.approx(0.0228, abs=1e-4)


def test_pump_off_is_identity(plan, cav):
    weights = np.linspace(0.5, 1.5, plan.tooth_count)
    spec = simulate_transmission(plan, cav, PumpSetting(0.0, PUMP_00), weights)
    np.testing.assert_array_equal(spec.powers, weights)
    assert spec.meta["target_index"] is None
    conv = simulate_conversion(plan, cav, PumpSetting(0.0, PUMP_00))
    assert conv.total_power() == 0


@pytest.mark.parametrize("n", [0, 1, 2])
def test_selection_moves_with_pump(plan, cav, n):
    spec = simulate_transmission(plan, cav, PumpSetting(POWER, PUMP_00 - n * COMB_SPACING))
    t = by_tooth(spec)
    assert spec.meta["target_index"] == n
    assert t[n] < 0.02
    assert all(1 - t[i] < 5e-3 for i in plan.indices if 0 < abs(i - n) <= 2)


def test_converted_center_fixed_across_tooth_selection(plan, cav):
    centers = [simulate_conversion(plan, cav, PumpSetting(POWER, PUMP_00 - n * COMB_SPACING))
               .meta["converted_center"] for n in (0, 1, 2)]
    assert max(centers) - min(centers) < TWO_PI * 1e3


@pytest.mark.parametrize("m", [-10, 10])
def test_output_routing(plan, cav, m):
    ref = simulate_conversion(plan, cav, PumpSetting(POWER, PUMP_00))
    moved = simulate_conversion(plan, cav, PumpSetting(POWER, PUMP_00 + m * FSR))
    shift = moved.meta["converted_center"] - ref.meta["converted_center"]
    assert shift == pytest.approx(m * TWO_PI * 3.3e9, rel=1e-9)
    assert moved.meta["target_index"] == ref.meta["target_index"] == 0
    assert moved.meta["output_index"] == m


def test_single_tooth_at_operating_point(cav):
    plan = paper_plan(tooth_count=1, first_index=0)
    conv = simulate_conversion(plan, cav, PumpSetting(cav.p_max, PUMP_00))
    assert conv.total_power() == pytest.approx(0.17, rel=1e-12)


def test_plan_cavity_mismatch(plan, cav):
    with pytest.raises(ParameterError):
        simulate_transmission(plan.with_fsr(1.01 * FSR), cav, PumpSetting(POWER, PUMP_00))


def test_out_of_band_teeth_pass_unchanged(cav):
    plan = paper_plan()
    far = pump_for(plan, 0, 0).pump_frequency + 200 * FSR
    spec = simulate_transmission(plan, cav, PumpSetting(POWER, far))
    np.testing.assert_array_equal(spec.powers, np.ones(plan.tooth_count))


@settings(max_examples=30, deadline=None)
@given(n=st.integers(-3, 3), p=st.floats(30.0, 250.0))
def test_selectivity_ratio(n, p):
    plan, cav = paper_plan(), paper_cavity()
    t = by_tooth(simulate_transmission(plan, cav, PumpSetting(p, PUMP_00 - n * COMB_SPACING)))
    target = 1 - t[n]
    for k in (-2, -1, 1, 2):
        if n + k in t:
            assert target / (1 - t[n + k]) > 100


@settings(max_examples=30, deadline=None)
@given(offset=st.floats(-2e10, 2e10), p=st.floats(0.0, 300.0),
       w=st.lists(st.floats(0.0, 10.0), min_size=11, max_size=11))
def test_lossless_flux_conservation(offset, p, w):
    plan, cav = paper_plan(), paper_cavity(gamma_int_zero=True)
    pump = PumpSetting(p, PUMP_00 + offset)
    t = simulate_transmission(plan, cav, pump, w)
    c = simulate_conversion(plan, cav, pump, w)
    # Conversion lines are ordered by frequency just like the teeth.
    np.testing.assert_allclose(t.powers + c.powers, w, rtol=1e-9, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(offset=st.floats(-2e10, 2e10), p=st.floats(1.0, 300.0))
def test_lossy_conversion_bounded_by_depletion(offset, p):
    plan, cav = paper_plan(), paper_cavity()
    pump = PumpSetting(p, PUMP_00 + offset)
    t = simulate_transmission(plan, cav, pump)
    c = simulate_conversion(plan, cav, pump)
    assert np.all(c.powers <= 1 - t.powers + 1e-12)


# -- instrument convolution ----------------------------------------------------


def _fwhm(spec):
    half = spec.powers.max() / 2
    above = spec.frequencies[spec.powers >= half]
    return above[-1] - above[0]


def test_impulse_response():
    res = OSA_SIGNAL_RESOLUTION
    spec = Spectrum(np.array([1.2e15]), np.array([2.0]))
    out = convolve_instrument(spec, res, step=res / 200)
    assert out.total_power() == pytest.approx(2.0, rel=1e-6)
    assert _fwhm(out) == pytest.approx(res, rel=0.02)
    assert out.peak_frequency() == pytest.approx(1.2e15, abs=res / 100)
    assert out.resolution == res


def test_teeth_resolved_at_600_mhz():
    f = 1.2e15 + np.array([0.0, TWO_PI * 1e9])
    out = convolve_instrument(Spectrum(f, np.ones(2)), OSA_SIGNAL_RESOLUTION)
    mid = np.interp(f.mean(), out.frequencies, out.powers)
    assert mid < 0.5 * out.powers.max()


def test_converted_peaks_unresolved_at_10_ghz():
    f = 2.4e15 + np.array([0.0, FSR])
    out = convolve_instrument(Spectrum(f, np.ones(2)), OSA_CONVERTED_RESOLUTION)
    mid = np.interp(f.mean(), out.frequencies, out.powers)
    assert mid == pytest.approx(out.powers.max(), rel=1e-2)


def test_convolution_rejects_bad_input():
    with pytest.raises(ParameterError):
        convolve_instrument(Spectrum(np.array([1.0]), np.array([1.0])), 0.0)
    with pytest.raises(ParameterError):
        convolve_instrument(Spectrum(np.array([1.0]), np.array([1.0]), resolution=0.1), 1.0)


@settings(max_examples=30, deadline=None)
@given(a=st.lists(st.floats(0.0, 5.0), min_size=5, max_size=5),
       b=st.lists(st.floats(0.0, 5.0), min_size=5, max_size=5),
       x=st.floats(0.0, 3.0), y=st.floats(0.0, 3.0))
def test_convolution_linear_and_area_preserving(a, b, x, y):
    f = 1.2e15 + COMB_SPACING * np.arange(5)
    res = OSA_SIGNAL_RESOLUTION
    sa, sb = Spectrum(f, np.array(a)), Spectrum(f, np.array(b))
    mix = Spectrum(f, x * np.array(a) + y * np.array(b))
    ca, cb, cm = (convolve_instrument(s, res) for s in (sa, sb, mix))
    np.testing.assert_allclose(cm.powers, x * ca.powers + y * cb.powers,
                               atol=1e-9 * max(1.0, cm.powers.max()))
    assert cm.total_power() == pytest.approx(mix.total_power(), rel=1e-6, abs=1e-12)


def test_density_convolution_preserves_area():
    f = np.linspace(0, 100.0, 1001)
    y = np.exp(-((f - 50) / 5) ** 2)
    s = Spectrum(f, y, resolution=0.5)
    out = convolve_instrument(s, 2.0)
    assert out.total_power() == pytest.approx(s.total_power(), rel=1e-6)
    assert out.resolution == pytest.approx(math.hypot(0.5, 2.0))


# -- resonant comb -------------------------------------------------------------


def test_resonant_comb_envelope(cav):
    spec = simulate_resonant_comb(cav, 1.2e15, COMB_SPACING, 34)
    # Every 33 teeth the comb returns to the same resonance detuning.
    assert spec.powers[33] == pytest.approx(spec.powers[0], rel=1e-9)
    assert spec.powers[0] == 1.0
    assert spec.powers[3] == pytest.approx(1 / (1 + (2 * 0.3e9 / 40e6) ** 2), rel=1e-9)


def test_resonant_comb_commensurate_is_flat(cav):
    spec = simulate_resonant_comb(cav, 1.2e15, FSR, 10)
    np.testing.assert_allclose(spec.powers, 1.0)


def test_resonant_comb_two_teeth(cav):
    spec = simulate_resonant_comb(cav, 1.2e15, COMB_SPACING, 2)
    assert len(spec) == 2
    with pytest.raises(ParameterError):
        simulate_resonant_comb(cav, 1.2e15, COMB_SPACING, 1)


# -- sweeps and fits -----------------------------------------------------------


def test_bandwidth_fit_noiseless(cav):
    sweep = synthetic_sweep(cav, np.linspace(0, 250, 26), BANDWIDTH)
    alpha, gamma_all, rms = fit_bandwidth_sweep(sweep)
    assert alpha == pytest.approx(7.3e-3, rel=1e-9)
    assert gamma_all == pytest.approx(cav.gamma_all, rel=1e-9)


def test_bandwidth_fit_two_points(cav):
    sweep = synthetic_sweep(cav, [0.0, 180.0], BANDWIDTH)
    alpha, gamma_all, rms = fit_bandwidth_sweep(sweep)
    assert alpha == pytest.approx(7.3e-3, rel=1e-12)
    assert gamma_all == pytest.approx(cav.gamma_all, rel=1e-12)


def test_bandwidth_fit_singular():
    with pytest.raises(FitError):
        fit_bandwidth_sweep(PowerSweep([50.0, 50.0, 50.0], [1.0, 1.0, 1.0], BANDWIDTH))


def test_bandwidth_fit_with_noise(cav):
    rng = np.random.default_rng(7)
    sweep = synthetic_sweep(cav, np.linspace(0, 250, 20), BANDWIDTH, noise=0.05, rng=rng)
    alpha, gamma_all, _ = fit_bandwidth_sweep(sweep)
    assert alpha == pytest.approx(7.3e-3, rel=0.1)
    assert gamma_all == pytest.approx(cav.gamma_all, rel=0.1)


def test_efficiency_fit(cav):
    sweep = synthetic_sweep(cav, np.linspace(0, 250, 26), EFFICIENCY)
    g, rms = fit_efficiency_sweep(sweep, cav.alpha)
    assert g == pytest.approx(0.17, rel=1e-12)
    assert rms < 1e-15


def test_efficiency_fit_single_peak_point(cav):
    sweep = PowerSweep([cav.p_max], [0.1234], EFFICIENCY)
    g, _ = fit_efficiency_sweep(sweep, cav.alpha)
    assert g == pytest.approx(0.1234, rel=1e-12)
    with pytest.raises(FitError):
        fit_efficiency_sweep(PowerSweep([0.0], [0.0], EFFICIENCY), cav.alpha)


def test_efficiency_curve_shape(cav):
    p = np.arange(0, 251, 10.0)
    sweep = synthetic_sweep(cav, p, EFFICIENCY)
    assert p[np.argmax(sweep.values)] == 140.0
    assert sweep.values.max() == pytest.approx(0.17, abs=1e-3)


def test_sweep_validation():
    with pytest.raises(ParameterError):
        PowerSweep([10.0, 0.0], [1.0, 1.0], BANDWIDTH)
    with pytest.raises(ParameterError):
        PowerSweep([-1.0], [1.0], BANDWIDTH)
    with pytest.raises(ParameterError):
        PowerSweep([1.0], [1.0], "other")


@settings(max_examples=25, deadline=None)
@given(alpha=st.floats(1e-3, 3e-2), g=st.floats(1e7, 1e9), r=st.floats(0.01, 1.0))
def test_fit_round_trip_property(alpha, g, r):
    from csqfc.core import CavityParams
    cav = CavityParams.from_linewidth(g, r, 100 * g, alpha, 10.0)
    p = np.linspace(0, 2 / alpha, 15)
    a, gamma_all, _ = fit_bandwidth_sweep(synthetic_sweep(cav, p, BANDWIDTH))
    assert a == pytest.approx(alpha, rel=1e-9)
    assert gamma_all == pytest.approx(g, rel=1e-9)
    rr, _ = fit_efficiency_sweep(synthetic_sweep(cav, p, EFFICIENCY), a)
    assert rr == pytest.approx(r, rel=1e-8)
    assert conversion_bandwidth(cav, 0.0) == pytest.approx(gamma_all, rel=1e-9)


def test_joint_fit_noiseless(cav):
    p = np.linspace(0, 250, 26)
    a, g_all, r = fit_power_sweeps(synthetic_sweep(cav, p, BANDWIDTH),
                                   synthetic_sweep(cav, p, EFFICIENCY))
    assert (a, g_all, r) == pytest.approx((cav.alpha, cav.gamma_all, 0.17), rel=1e-9)


def test_joint_fit_noise_robust(cav):
    # 5% multiplicative noise, 20 points: every one of 100 seeds within 10%.
    p = np.linspace(0, 250, 20)
    truth = np.array([cav.alpha, cav.gamma_all, cav.gamma_r_tilde])
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        fit = fit_power_sweeps(synthetic_sweep(cav, p, BANDWIDTH, 0.05, rng),
                               synthetic_sweep(cav, p, EFFICIENCY, 0.05, rng))
        worst = max(worst, float(np.max(np.abs(np.array(fit) / truth - 1))))
    assert worst <= 0.10


def test_joint_fit_rejects_swapped_kinds(cav):
    p = np.linspace(0, 250, 5)
    bw = synthetic_sweep(cav, p, BANDWIDTH)
    with pytest.raises(ParameterError):
        fit_power_sweeps(bw, bw)
