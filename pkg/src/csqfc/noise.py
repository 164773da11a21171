"""Anti-Stokes noise budget, converted-signal photon number, SNR and g2.

The anti-Stokes coefficient is normalized per GHz of ordinary frequency, so
the loss rate it multiplies is converted from rad/s to GHz first. The
alternative reading (rad/s fed straight into the per-GHz coefficient) is
available through ``convention="angular"``; it lowers the SNR by 2*pi.
"""

from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from csqfc.core import CavityParams
from csqfc.errors import NumericalError, ParameterError

NOISE_CONVENTION = "hz"
_CONVENTIONS = {"hz": 2 * math.pi * 1e9, "angular": 1e9}

CSV_HEADER = ("round", "m", "s780", "n780", "zeta_eff", "g2_out")


@dataclass(frozen=True)
class SignalModel:
    """Input photons per tooth.

    ``linewidth_ratio`` is the factor by which a tooth is narrower than the
    cold cavity; ``window`` is the detection window in seconds.
    """

    n_in: float
    g2_in: float
    linewidth_ratio: float
    window: float

    def __post_init__(self) -> None:
        if self.n_in < 0 or self.g2_in < 0:
            raise ParameterError("n_in and g2_in must be non-negative")
        if self.linewidth_ratio <= 0 or self.window <= 0:
            raise ParameterError("linewidth_ratio and window must be positive")


@dataclass(frozen=True)
class NoiseBudget:
    n_780: float
    s_780: float
    zeta: float
    g2_out: float
    round_index: int = 1
    exposures: int = 1

    def row(self) -> tuple:
        return (self.round_index, self.exposures, self.s_780, self.n_780, self.zeta, self.g2_out)


def noise_photons(
    cavity: CavityParams,
    power: float,
    window: float,
    convention: str = NOISE_CONVENTION,
) -> float:
    """Mean anti-Stokes photons converted into one resonance per window."""
    try:
        per_ghz = _CONVENTIONS[convention]
    except KeyError:
        raise ParameterError(f"unknown noise convention {convention!r}") from None
    c = cavity.c_tilde(power)
    gamma_r = cavity.gamma_r / per_ghz
    return (
        cavity.noise_coeff * cavity.length * window
        * 2 * math.pi * gamma_r * c * power / (1.0 + c)
    )


def signal_photons(cavity: CavityParams, sig: SignalModel) -> float:
    """Detected converted photons per window at the C = 1 operating point."""
    n = sig.linewidth_ratio
    decay = math.exp(-2.0 * sig.window * cavity.gamma_all / (1.0 + n))
    return cavity.gamma_r_tilde * sig.n_in * n / (1.0 + n) * (1.0 - decay)


def snr(s: float, n: float) -> float:
    if n == 0:
        raise ZeroDivisionError("noise photon number is zero; SNR undefined")
    if n < 0 or s < 0:
        raise ParameterError("photon numbers must be non-negative")
    return s / n


def g2_out(g2_in: float, zeta: float) -> float:
    """Autocorrelation after adding unit-g2 noise at signal-to-noise ``zeta``."""
    if zeta < 0 or g2_in < 0:
        raise ParameterError("zeta and g2_in must be non-negative")
    if math.isinf(zeta):
        return g2_in
    return (g2_in * zeta * zeta + 1.0 + 2.0 * zeta) / (1.0 + zeta) ** 2


def multi_round_g2(g2_in: float, zeta: float, m: int) -> float:
    """g2 of the photon extracted in round ``m``; noise grows linearly with m."""
    if m < 1:
        raise ParameterError(f"round must be >= 1, got {m}")
    return g2_out(g2_in, zeta / m)


def rounds_within_threshold(g2_in: float, zeta: float, threshold: float) -> float:
    """Largest round count whose g2 stays at or below ``threshold``.

    Returns ``math.inf`` when the threshold can never be exceeded (g2 tends
    to 1 from below as rounds accumulate) and 0 if even round 1 fails.
    """
    if threshold >= 1.0 and g2_in <= 1.0:
        return math.inf
    if multi_round_g2(g2_in, zeta, 1) > threshold:
        return 0
    lo, hi = 1, 2
    while multi_round_g2(g2_in, zeta, hi) <= threshold:
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if multi_round_g2(g2_in, zeta, mid) <= threshold:
            lo = mid
        else:
            hi = mid
    return lo


def budget_table(
    g2_in: float, zeta: float, rounds: int, s780: float = math.nan, n780: float = math.nan
) -> list[NoiseBudget]:
    """One budget per sequential extraction round 1..rounds."""
    out = []
    for m in range(1, rounds + 1):
        out.append(NoiseBudget(
            n_780=n780 * m, s_780=s780, zeta=zeta / m,
            g2_out=multi_round_g2(g2_in, zeta, m), round_index=m, exposures=m,
        ))
    return out


def budgets_to_csv(budgets: list[NoiseBudget]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for b in budgets:
        r, m, s, n, z, g = b.row()
        w.writerow([r, m, f"{s:.10g}", f"{n:.10g}", f"{z:.10g}", f"{g:.10g}"])
    return buf.getvalue()


def operating_point(
    cavity: CavityParams,
    sig: SignalModel,
    power: float | None = None,
    convention: str = NOISE_CONVENTION,
) -> NoiseBudget:
    """Round-1 budget at pump power ``power`` (defaults to ``1/alpha``)."""
    p = cavity.p_max if power is None else power
    s = signal_photons(cavity, sig)
    n = noise_photons(cavity, p, sig.window, convention)
    z = snr(s, n)
    return NoiseBudget(n_780=n, s_780=s, zeta=z, g2_out=g2_out(sig.g2_in, z))


# -- quadrature oracle -------------------------------------------------------

# Fourier-sum grid for the oracle: time step and sample count in units of
# 1/gamma_all. The implied frequency cut-off is pi / _ORACLE_STEP.
_ORACLE_STEP = 2.5e-4
_ORACLE_SAMPLES = 2**22


@functools.lru_cache(maxsize=8)
def _output_intensity(gamma_r_tilde: float, n: float) -> tuple[np.ndarray, np.ndarray]:
    """Converted-pulse intensity versus time (units of 1/gamma_all).

    The product of the C = 1 cavity response and a normalized
    time-reversed Lorentzian input of relative width 1/n is inverted by a
    trapezoid-rule Fourier sum evaluated with the FFT.
    """
    size = _ORACLE_SAMPLES
    # The input tail lasts ~n; keep the periodic image 40 decay lengths away.
    dt = max(_ORACLE_STEP, 100.0 * n / size)
    span = size * dt
    dx = 2 * math.pi / span
    x = (np.arange(size) - size // 2) * dx
    inv_n = 1.0 / n
    spectrum = (
        math.sqrt(gamma_r_tilde) / (1 - 1j * x)
        * math.sqrt(inv_n / math.pi) / (inv_n + 1j * x)
    )
    amp = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(spectrum))) * dx / math.sqrt(2 * math.pi)
    t = (np.arange(size) - size // 2) * dt
    y = np.abs(amp) ** 2
    t.flags.writeable = False
    y.flags.writeable = False
    return t, y


def _sample(t: np.ndarray, y: np.ndarray, x: float) -> float:
    """Linear interpolation on the uniform grid ``t`` (O(1), unlike np.interp)."""
    dt = t[1] - t[0]
    k = min(max(int((x - t[0]) // dt), 0), t.size - 2)
    w = (x - t[k]) / dt
    return float((1.0 - w) * y[k] + w * y[k + 1])


def _window_integral(t: np.ndarray, y: np.ndarray, a: float, b: float) -> float:
    """Trapezoid integral of linearly interpolated samples over [a, b]."""
    lo = int(np.searchsorted(t, a, side="right"))
    hi = int(np.searchsorted(t, b, side="left"))
    tt = np.concatenate(([a], t[lo:hi], [b]))
    yy = np.concatenate(([_sample(t, y, a)], y[lo:hi], [_sample(t, y, b)]))
    trapezoid = getattr(np, "trapezoid", None) or np.trapz
    return float(trapezoid(yy, tt))


def s780_numeric_oracle(cavity: CavityParams, sig: SignalModel) -> float:
    """Converted photons in the best-placed window, by brute quadrature.

    The converted pulse is obtained by numerical Fourier inversion, the
    window of length ``T_w`` is slid to where the intensities at both edges
    match (the energy-maximizing position for a unimodal pulse) and the
    intensity is integrated across it.
    """
    n = sig.linewidth_ratio
    tw = sig.window * cavity.gamma_all
    t, y = _output_intensity(cavity.gamma_r_tilde, n)
    if tw > t[-1] - t[0]:
        return sig.n_in * _window_integral(t, y, t[0], t[-1])
    k = int(np.argmax(y))
    peak = t[k]

    def edge_gap(t0: float) -> float:
        return _sample(t, y, t0) - _sample(t, y, t0 + tw)

    a, b = max(peak - tw, t[0]), min(peak, t[-1] - tw)
    try:
        start = optimize.brentq(edge_gap, a, b, xtol=1e-12)
    except ValueError as exc:
        raise NumericalError(f"could not place detection window: {exc}") from exc
    val = _window_integral(t, y, start, start + tw)
    if not math.isfinite(val):
        raise NumericalError("window integral is not finite")
    return sig.n_in * val
