"""Reference device and operating-point constants of the demonstrated converter."""

from __future__ import annotations

import math

from csqfc.channel_plan import ChannelPlan
from csqfc.core import CavityParams
from csqfc.noise import SignalModel

TWO_PI = 2 * math.pi
SPEED_OF_LIGHT = 299_792_458.0

GAMMA_ALL = TWO_PI * 40e6
GAMMA_R_TILDE = 0.17
FSR = TWO_PI * 3.3e9
ALPHA = 7.3e-3  # 1/mW
LENGTH = 19.67  # mm
NOISE_COEFF = 25.0  # counts / (s mW GHz mm)
# Coating window half-width; only a scalar window is modelled.
ACCEPTANCE_BAND = TWO_PI * 500e9

COMB_SPACING = TWO_PI * 1e9
SIGNAL_WAVELENGTH = 1540e-9
PUMP_00 = TWO_PI * 189.542e12
OPERATING_POWER = 180.0  # mW, selective-conversion runs

OSA_SIGNAL_RESOLUTION = TWO_PI * 600e6
OSA_CONVERTED_RESOLUTION = TWO_PI * 10e9

PAPER_ZETA = 62.5
PAPER_G2_OUT = 0.05


def paper_cavity(gamma_int_zero: bool = False) -> CavityParams:
    if gamma_int_zero:
        return CavityParams(
            gamma_r=GAMMA_ALL, gamma_int=0.0, fsr=FSR, alpha=ALPHA, length=LENGTH,
            noise_coeff=NOISE_COEFF, acceptance_band=ACCEPTANCE_BAND,
        )
    return CavityParams.from_linewidth(
        GAMMA_ALL, GAMMA_R_TILDE, FSR, ALPHA, LENGTH, NOISE_COEFF, ACCEPTANCE_BAND
    )


def paper_plan(tooth_count: int = 11, first_index: int = -5) -> ChannelPlan:
    """1 GHz comb at 1540 nm whose tooth 0 meets resonance 0 under ``PUMP_00``."""
    center = TWO_PI * SPEED_OF_LIGHT / SIGNAL_WAVELENGTH
    return ChannelPlan(
        comb_center=center,
        comb_spacing=COMB_SPACING,
        tooth_count=tooth_count,
        resonance_anchor=center + PUMP_00,
        fsr=FSR,
        bin_width=2 * GAMMA_ALL,
        first_index=first_index,
    )


def paper_signal(n_in: float = 0.1) -> SignalModel:
    return SignalModel(n_in=n_in, g2_in=0.01, linewidth_ratio=5.0, window=125e-9)


# -- FSR-estimation fixtures ---------------------------------------------------

FSR_FIXTURES = ("resonant_comb", "sinusoid", "noise")
SINUSOID_PERIOD = TWO_PI * 5e9
NOISE_SEED = 20240917


def fsr_fixture(name: str):
    """Synthetic spectra for FSR estimation, reproducible bit for bit.

    ``resonant_comb``: a 100 MHz comb spanning 600 GHz filtered by the cold
    reference cavity. ``sinusoid``: a pure cosine modulation of period
    2*pi*5 GHz. ``noise``: seeded uniform noise with no periodicity.
    """
    import numpy as np

    from csqfc.spectra import Spectrum, simulate_resonant_comb

    center = TWO_PI * SPEED_OF_LIGHT / SIGNAL_WAVELENGTH
    if name == "resonant_comb":
        return simulate_resonant_comb(paper_cavity(), center, TWO_PI * 100e6, 6001)
    x = center + np.linspace(0.0, TWO_PI * 100e9, 2001)
    if name == "sinusoid":
        y = 1.0 + np.cos(2 * np.pi * (x - center) / SINUSOID_PERIOD)
        return Spectrum(x, y, 0.0, "signal", {"period": SINUSOID_PERIOD})
    if name == "noise":
        y = np.random.default_rng(NOISE_SEED).uniform(0.0, 1.0, x.size)
        return Spectrum(x, y, 0.0, "signal", {"seed": NOISE_SEED})
    raise KeyError(f"unknown FSR fixture {name!r}; choose from {FSR_FIXTURES}")
