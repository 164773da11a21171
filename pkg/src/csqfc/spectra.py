"""Synthetic transmitted / converted comb spectra, instrument blur, sweep fits.

Ideal spectra are line spectra: one sample per comb tooth, ``resolution``
zero, power in linear arbitrary units. :func:`convolve_instrument` turns a
line spectrum into a power density on a uniform grid.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import optimize, signal

from csqfc.channel_plan import ChannelPlan, nearest_resonance, resonance_in_band
from csqfc.core import CavityParams, PumpSetting, conversion_efficiency, steady_state_transfer
from csqfc.errors import FitError, ParameterError

SIGNAL_BAND = "signal"
CONVERTED_BAND = "converted"
CSV_HEADER = ("omega_rad_per_s", "power")

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass
class Spectrum:
    frequencies: np.ndarray
    powers: np.ndarray
    resolution: float = 0.0
    band_label: str = SIGNAL_BAND
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.powers = np.asarray(self.powers, dtype=float)
        if self.frequencies.shape != self.powers.shape or self.frequencies.ndim != 1:
            raise ParameterError("frequencies and powers must be 1-D arrays of equal length")
        if self.frequencies.size > 1 and np.any(np.diff(self.frequencies) <= 0):
            raise ParameterError("spectrum frequencies must be strictly increasing")
        if np.any(self.powers < 0):
            raise ParameterError("spectrum powers must be non-negative")
        if self.resolution < 0:
            raise ParameterError("resolution must be non-negative")

    def __len__(self) -> int:
        return self.frequencies.size

    @property
    def is_line(self) -> bool:
        return self.resolution == 0

    @property
    def span(self) -> float:
        return float(self.frequencies[-1] - self.frequencies[0]) if len(self) else 0.0

    def total_power(self) -> float:
        """Sum of line powers, or integral of a density."""
        if self.is_line:
            return float(self.powers.sum())
        trapezoid = getattr(np, "trapezoid", None) or np.trapz
        return float(trapezoid(self.powers, self.frequencies))

    def peak_frequency(self) -> float:
        return float(self.frequencies[int(np.argmax(self.powers))])

    def scaled(self, factor: float) -> Spectrum:
        return Spectrum(self.frequencies, self.powers * factor, self.resolution,
                        self.band_label, dict(self.meta))

    def shifted(self, offset: float) -> Spectrum:
        return Spectrum(self.frequencies + offset, self.powers, self.resolution,
                        self.band_label, dict(self.meta))

    def metadata(self) -> dict:
        return {"band_label": self.band_label, "resolution": self.resolution, **self.meta}


def write_spectrum(spec: Spectrum, path: str | Path) -> tuple[Path, Path]:
    """Write ``<path>`` as CSV and a ``.meta.json`` sidecar next to it."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for om, p in zip(spec.frequencies, spec.powers):
            w.writerow([repr(float(om)), repr(float(p))])
    meta_path = path.with_suffix(".meta.json")
    meta_path.write_text(json.dumps(spec.metadata(), indent=2, sort_keys=True) + "\n")
    return path, meta_path


def read_spectrum(path: str | Path) -> Spectrum:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ParameterError(f"{path}: expected header {','.join(CSV_HEADER)}")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]]).reshape(-1, 2)
    meta = {}
    meta_path = path.with_suffix(".meta.json")
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
    resolution = float(meta.pop("resolution", 0.0))
    band = meta.pop("band_label", SIGNAL_BAND)
    return Spectrum(data[:, 0], data[:, 1], resolution, band, meta)


def _check_pair(plan: ChannelPlan, cavity: CavityParams) -> None:
    if not math.isclose(plan.fsr, cavity.fsr, rel_tol=1e-9):
        raise ParameterError(
            f"plan FSR {plan.fsr:.6g} does not match cavity FSR {cavity.fsr:.6g}"
        )


def _tooth_powers(plan: ChannelPlan, per_tooth_power) -> np.ndarray:
    if per_tooth_power is None:
        return np.ones(plan.tooth_count)
    p = np.asarray(per_tooth_power, dtype=float)
    if p.shape != (plan.tooth_count,):
        raise ParameterError(f"need {plan.tooth_count} tooth powers, got {p.shape}")
    return p


def _per_tooth(plan: ChannelPlan, cavity: CavityParams, pump: PumpSetting):
    for i in plan.indices:
        j, res = nearest_resonance(plan, i, pump.frequency)
        yield i, j, res, resonance_in_band(plan, j, cavity)


def simulate_transmission(
    plan: ChannelPlan, cavity: CavityParams, pump: PumpSetting, per_tooth_power=None
) -> Spectrum:
    """Signal-band comb after one pass through the converter."""
    _check_pair(plan, cavity)
    p_in = _tooth_powers(plan, per_tooth_power)
    freqs, powers, idx = [], [], []
    for k, (i, j, res, in_band) in enumerate(_per_tooth(plan, cavity, pump)):
        factor = steady_state_transfer(cavity, pump, res).transmission if in_band else 1.0
        freqs.append(plan.tooth_frequency(i))
        powers.append(p_in[k] * factor)
        idx.append(i)
    order = np.argsort(freqs)
    freqs, powers, idx = np.array(freqs)[order], np.array(powers)[order], np.array(idx)[order]
    p_sorted = p_in[order]
    depletion = np.where(p_sorted > 0, 1 - powers / np.where(p_sorted > 0, p_sorted, 1), 0.0)
    target = int(idx[int(np.argmax(depletion))]) if pump.power > 0 else None
    meta = {
        "pump_frequency": pump.frequency,
        "pump_power_mw": pump.power,
        "target_index": target,
        "tooth_indices": [int(i) for i in idx],
    }
    return Spectrum(freqs, powers, 0.0, SIGNAL_BAND, meta)


def simulate_conversion(
    plan: ChannelPlan, cavity: CavityParams, pump: PumpSetting, per_tooth_power=None
) -> Spectrum:
    """Converted-band lines at ``omega_t,i + omega_p`` weighted by efficiency."""
    _check_pair(plan, cavity)
    p_in = _tooth_powers(plan, per_tooth_power)
    rows = []
    for k, (i, j, res, in_band) in enumerate(_per_tooth(plan, cavity, pump)):
        if not in_band:
            continue
        eta = conversion_efficiency(cavity, pump.power, res)
        rows.append((plan.tooth_frequency(i) + pump.frequency, p_in[k] * eta, i, j))
    rows.sort()
    freqs = np.array([r[0] for r in rows])
    powers = np.array([r[1] for r in rows])
    meta = {"pump_frequency": pump.frequency, "pump_power_mw": pump.power,
            "converted_center": None, "target_index": None, "output_index": None}
    if rows and powers.max() > 0:
        best = rows[int(np.argmax(powers))]
        meta.update(converted_center=best[0], target_index=int(best[2]),
                    output_index=int(best[3]))
    return Spectrum(freqs, powers, 0.0, CONVERTED_BAND, meta)


def gaussian_kernel(offsets: np.ndarray, fwhm: float) -> np.ndarray:
    sigma = fwhm * FWHM_TO_SIGMA
    return np.exp(-0.5 * (offsets / sigma) ** 2)


def convolve_instrument(
    spec: Spectrum,
    resolution: float,
    step: float | None = None,
    kernel: Callable[[np.ndarray, float], np.ndarray] = gaussian_kernel,
) -> Spectrum:
    """Blur with an instrument response of FWHM ``resolution`` [rad/s].

    Line spectra are deposited on a uniform grid (linear sharing between the
    two nearest nodes keeps both area and centroid); densities are linearly
    resampled. The kernel is normalized to unit discrete sum, so the
    integrated power is preserved.
    """
    if resolution <= 0:
        raise ParameterError("resolution must be positive")
    if len(spec) < 2 and not (spec.is_line and len(spec) == 1):
        raise ParameterError("need at least 2 samples to convolve a density")
    if len(spec) == 0:
        raise ParameterError("empty spectrum")
    step = resolution / 20.0 if step is None else step
    half = int(math.ceil(5.0 * resolution / step))
    lo = spec.frequencies[0] - half * step
    n_grid = int(math.ceil((spec.frequencies[-1] - lo) / step)) + half + 1
    grid = lo + np.arange(n_grid) * step

    if spec.is_line:
        pos = (spec.frequencies - lo) / step
        k = np.floor(pos).astype(int)
        frac = pos - k
        dens = np.zeros(n_grid)
        np.add.at(dens, k, spec.powers * (1 - frac))
        np.add.at(dens, np.minimum(k + 1, n_grid - 1), spec.powers * frac)
        dens /= step
        new_res = resolution
    else:
        dens = np.interp(grid, spec.frequencies, spec.powers, left=0.0, right=0.0)
        new_res = math.hypot(spec.resolution, resolution)

    taps = kernel(np.arange(-half, half + 1) * step, resolution)
    taps = taps / taps.sum()
    out = signal.fftconvolve(dens, taps, mode="same")
    out = np.clip(out, 0.0, None)
    meta = dict(spec.meta)
    meta["instrument_fwhm"] = resolution
    return Spectrum(grid, out, new_res, spec.band_label, meta)


def simulate_resonant_comb(
    cavity: CavityParams,
    comb_center: float,
    comb_spacing: float,
    tooth_count: int,
    resonance_offset: float = 0.0,
) -> Spectrum:
    """Comb filtered by the cold-cavity Lorentzian of the nearest resonance.

    Resonances sit at ``comb_center + resonance_offset + k * fsr``.
    """
    if tooth_count < 2:
        raise ParameterError("need at least two teeth")
    offsets = np.arange(tooth_count) * comb_spacing - resonance_offset
    nearest = np.ceil(offsets / cavity.fsr - 0.5)
    detuning = offsets - nearest * cavity.fsr
    weight = 1.0 / (1.0 + (2.0 * detuning / cavity.gamma_all) ** 2)
    freqs = comb_center + np.arange(tooth_count) * comb_spacing
    meta = {"comb_spacing": comb_spacing, "fsr": cavity.fsr}
    return Spectrum(freqs, weight, 0.0, SIGNAL_BAND, meta)


# -- power sweeps ------------------------------------------------------------

BANDWIDTH = "bandwidth"
EFFICIENCY = "efficiency"


@dataclass(frozen=True)
class PowerSweep:
    powers: np.ndarray
    values: np.ndarray
    kind: str

    def __post_init__(self) -> None:
        p = np.asarray(self.powers, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "powers", p)
        object.__setattr__(self, "values", v)
        if self.kind not in (BANDWIDTH, EFFICIENCY):
            raise ParameterError(f"unknown sweep kind {self.kind!r}")
        if p.shape != v.shape or p.ndim != 1:
            raise ParameterError("powers and values must be 1-D arrays of equal length")
        if np.any(p < 0) or not np.all(np.isfinite(p)) or not np.all(np.isfinite(v)):
            raise ParameterError("sweep powers must be finite and non-negative")
        # Repeated powers are allowed here; a fit impossible from them raises FitError.
        if np.any(np.diff(p) < 0):
            raise ParameterError("sweep powers must be sorted ascending")


def fit_bandwidth_sweep(sweep: PowerSweep) -> tuple[float, float, float]:
    """Straight-line fit of ``(1 + alpha P) gamma_all``; returns alpha, gamma_all, rms."""
    if sweep.kind != BANDWIDTH:
        raise ParameterError("expected a bandwidth sweep")
    p, v = sweep.powers, sweep.values
    if p.size < 2 or np.ptp(p) == 0:
        raise FitError("bandwidth fit needs at least two distinct pump powers")
    design = np.column_stack([np.ones_like(p), p])
    (intercept, slope), *_ = np.linalg.lstsq(design, v, rcond=None)
    if intercept <= 0:
        raise FitError(f"non-physical cold linewidth {intercept:.3g}")
    rms = float(np.sqrt(np.mean((design @ np.array([intercept, slope]) - v) ** 2)))
    return float(slope / intercept), float(intercept), rms


def efficiency_shape(power: np.ndarray, alpha: float) -> np.ndarray:
    c = alpha * np.asarray(power, dtype=float)
    return c / (0.25 * (1.0 + c) ** 2)


def fit_efficiency_sweep(sweep: PowerSweep, alpha: float) -> tuple[float, float]:
    """One-parameter least squares for the coupling fraction; returns (value, rms)."""
    if sweep.kind != EFFICIENCY:
        raise ParameterError("expected an efficiency sweep")
    f = efficiency_shape(sweep.powers, alpha)
    denom = float(f @ f)
    if denom == 0:
        raise FitError("efficiency fit needs at least one point with non-zero pump power")
    g = float(f @ sweep.values) / denom
    rms = float(np.sqrt(np.mean((g * f - sweep.values) ** 2)))
    return g, rms


def fit_power_sweeps(bandwidth: PowerSweep, efficiency: PowerSweep) -> tuple[float, float, float]:
    """Joint fit of both sweeps; returns ``(alpha, gamma_all, gamma_r_tilde)``.

    Residuals are relative to the model, matching multiplicative measurement
    noise. The efficiency curve's peak position constrains ``alpha``
    independently of the bandwidth slope, which roughly halves the scatter of
    ``alpha`` compared with the straight-line fit alone. The separate fits
    provide the starting point.
    """
    if bandwidth.kind != BANDWIDTH or efficiency.kind != EFFICIENCY:
        raise ParameterError("expected a bandwidth sweep and an efficiency sweep")
    alpha0, gamma0, _ = fit_bandwidth_sweep(bandwidth)
    ratio0, _ = fit_efficiency_sweep(efficiency, alpha0)
    if ratio0 <= 0:
        raise FitError(f"non-physical coupling fraction {ratio0:.3g}")
    pb, vb = bandwidth.powers, bandwidth.values
    keep = efficiency.powers > 0
    pe, ve = efficiency.powers[keep], efficiency.values[keep]

    def residuals(x: np.ndarray) -> np.ndarray:
        alpha, gamma_all, ratio = x
        mb = (1.0 + alpha * pb) * gamma_all
        me = ratio * efficiency_shape(pe, alpha)
        return np.concatenate([(mb - vb) / mb, (me - ve) / me])

    x0 = np.array([alpha0, gamma0, ratio0])
    if pb.size + pe.size <= 3:
        return float(alpha0), float(gamma0), float(ratio0)
    sol = optimize.least_squares(residuals, x0, x_scale=x0, bounds=(1e-12 * x0, np.inf))
    if not sol.success:
        raise FitError(f"joint sweep fit did not converge: {sol.message}")
    alpha, gamma_all, ratio = (float(v) for v in sol.x)
    return alpha, gamma_all, ratio


def synthetic_sweep(
    cavity: CavityParams,
    powers,
    kind: str,
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
) -> PowerSweep:
    """Model sweep, optionally with multiplicative Gaussian noise of rms ``noise``."""
    p = np.asarray(powers, dtype=float)
    if kind == BANDWIDTH:
        v = (1.0 + cavity.alpha * p) * cavity.gamma_all
    else:
        v = cavity.gamma_r_tilde * efficiency_shape(p, cavity.alpha)
    if noise:
        rng = np.random.default_rng() if rng is None else rng
        v = v * (1.0 + noise * rng.standard_normal(v.shape))
    return PowerSweep(p, v, kind)
