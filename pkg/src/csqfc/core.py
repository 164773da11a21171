"""Cavity-enhanced sum-frequency conversion: transfer amplitudes and rates.

All rates and detunings are angular frequencies (rad/s). The pump enters
only through the normalized coupling ``C = alpha * P``; the complex SFG
coupling satisfies ``|xi|**2 = C * gamma_all`` with phase ``pump.phase``.

Operator-valued modes are replaced by classical complex amplitudes; every
prediction downstream depends only on squared magnitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from csqfc.errors import ConvergenceError, ParameterError

#: Upper limit on the normalized coupling before the undepleted-pump
#: model is considered invalid.
MAX_C_TILDE = 100.0


@dataclass(frozen=True)
class CavityParams:
    """Constants of one waveguide-resonator converter.

    Parameters
    ----------
    gamma_r : float
        Mirror out-coupling rate [rad/s].
    gamma_int : float
        Internal loss rate [rad/s].
    fsr : float
        Free spectral range [rad/s].
    alpha : float
        Normalized nonlinearity, ``C = alpha * P`` [1/mW].
    length : float
        Waveguide length [mm].
    noise_coeff : float
        Anti-Stokes noise coefficient [counts/(s mW GHz mm)].
    acceptance_band : float
        Half-width of the coating / phase-matching window around the
        converted band [rad/s].
    """

    gamma_r: float
    gamma_int: float
    fsr: float
    alpha: float
    length: float
    noise_coeff: float = 0.0
    acceptance_band: float = math.inf

    def __post_init__(self) -> None:
        for name in ("gamma_r", "gamma_int", "fsr", "alpha", "length", "noise_coeff"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value}")
        if self.gamma_r <= 0:
            raise ParameterError(f"gamma_r must be positive, got {self.gamma_r}")
        if self.gamma_int < 0:
            raise ParameterError(f"gamma_int must be non-negative, got {self.gamma_int}")
        if self.fsr <= self.gamma_all:
            raise ParameterError(
                f"fsr ({self.fsr:.4g}) must exceed gamma_all ({self.gamma_all:.4g})"
            )
        if self.alpha <= 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if self.length <= 0:
            raise ParameterError(f"length must be positive, got {self.length}")
        if self.noise_coeff < 0:
            raise ParameterError(f"noise_coeff must be non-negative, got {self.noise_coeff}")
        if not self.acceptance_band > 0:
            raise ParameterError(f"acceptance_band must be positive, got {self.acceptance_band}")

    @classmethod
    def from_linewidth(
        cls,
        gamma_all: float,
        gamma_r_tilde: float,
        fsr: float,
        alpha: float,
        length: float,
        noise_coeff: float = 0.0,
        acceptance_band: float = math.inf,
    ) -> CavityParams:
        """Build from the total linewidth and the coupling fraction."""
        if not 0 < gamma_r_tilde <= 1:
            raise ParameterError(f"gamma_r_tilde must lie in (0, 1], got {gamma_r_tilde}")
        gamma_r = gamma_r_tilde * gamma_all
        return cls(
            gamma_r=gamma_r,
            gamma_int=max(gamma_all - gamma_r, 0.0),
            fsr=fsr,
            alpha=alpha,
            length=length,
            noise_coeff=noise_coeff,
            acceptance_band=acceptance_band,
        )

    @property
    def gamma_all(self) -> float:
        return self.gamma_r + self.gamma_int

    @property
    def gamma_r_tilde(self) -> float:
        return self.gamma_r / self.gamma_all

    @property
    def p_max(self) -> float:
        """Pump power of maximum efficiency, ``1/alpha`` [mW]."""
        return 1.0 / self.alpha

    def c_tilde(self, power: float) -> float:
        if power < 0:
            raise ParameterError(f"pump power must be non-negative, got {power}")
        c = self.alpha * power
        if c > MAX_C_TILDE:
            raise ParameterError(
                f"normalized coupling {c:.3g} exceeds {MAX_C_TILDE:g} (pump depletion regime)"
            )
        return c


@dataclass(frozen=True)
class PumpSetting:
    """Pump power [mW], absolute angular frequency [rad/s] and phase [rad]."""

    power: float
    frequency: float = 0.0
    phase: float = 0.0

    def __post_init__(self) -> None:
        if self.power < 0 or not math.isfinite(self.power):
            raise ParameterError(f"pump power must be finite and non-negative, got {self.power}")

    def c_tilde(self, cavity: CavityParams) -> float:
        return cavity.c_tilde(self.power)

    def xi(self, cavity: CavityParams) -> complex:
        """Complex SFG coupling ``xi`` with ``|xi|**2 = C * gamma_all``."""
        return math.sqrt(self.c_tilde(cavity) * cavity.gamma_all) * np.exp(1j * self.phase)


@dataclass(frozen=True)
class TransferAmplitudes:
    t_conv: complex
    r_pass: complex
    t_rev: complex
    detuning: float
    # Coefficient of the converted-band input in the converted-band output.
    r_vis: complex = 0j

    @property
    def efficiency(self) -> float:
        return abs(self.t_conv) ** 2

    @property
    def transmission(self) -> float:
        return abs(self.r_pass) ** 2


def steady_state_transfer(
    cavity: CavityParams, pump: PumpSetting, detuning: float
) -> TransferAmplitudes:
    """Steady-state input-output coefficients at detuning ``omega_v - omega_c``.

    The reverse coefficient follows from the input-output relations
    ``a_t,out = a_t,in - conj(xi) a_c``, which fixes its overall sign.
    """
    if not math.isfinite(detuning):
        raise ParameterError(f"detuning must be finite, got {detuning}")
    c = pump.c_tilde(cavity)
    d = detuning / cavity.gamma_all
    gr = cavity.gamma_r_tilde
    denom = 0.5 * (1.0 + c) - 1j * d
    cross = math.sqrt(gr * c)
    phase = complex(np.exp(1j * pump.phase))
    return TransferAmplitudes(
        t_conv=phase * cross / denom,
        r_pass=(0.5 * (1.0 - c) - 1j * d) / denom,
        t_rev=-phase.conjugate() * cross / denom,
        detuning=detuning,
        r_vis=(gr - 0.5 * (1.0 + c) + 1j * d) / denom,
    )


def conversion_efficiency(cavity: CavityParams, power: float, detuning: float = 0.0) -> float:
    c = cavity.c_tilde(power)
    d = detuning / cavity.gamma_all
    return cavity.gamma_r_tilde * c / (0.25 * (1.0 + c) ** 2 + d * d)


def conversion_bandwidth(cavity: CavityParams, power: float) -> float:
    """FWHM of the conversion response around one resonance [rad/s]."""
    return (1.0 + cavity.c_tilde(power)) * cavity.gamma_all


def cold_finesse(cavity: CavityParams) -> float:
    return cavity.fsr / cavity.gamma_all


def max_channels(cavity: CavityParams) -> int:
    """Channel capacity ``floor(F_cold / 2)`` at the linewidth-doubling point."""
    # Guard against ratios such as 99.99999999 that are exact on paper.
    return int(math.floor(cold_finesse(cavity) / 2.0 + 1e-9))


@dataclass(frozen=True)
class CavityTrajectory:
    times: np.ndarray
    amplitude: np.ndarray
    signal_input: complex
    visible_input: complex
    xi: complex
    gamma_r: float
    converged_at: float

    @property
    def steady_amplitude(self) -> complex:
        return complex(self.amplitude[-1])

    @property
    def converted_output(self) -> complex:
        """``a_v,out = sqrt(gamma_r) a_c - a_v,in`` at the final sample."""
        return math.sqrt(self.gamma_r) * self.steady_amplitude - self.visible_input

    @property
    def transmitted_output(self) -> complex:
        """``a_t,out = a_t,in - conj(xi) a_c`` at the final sample."""
        return self.signal_input - self.xi.conjugate() * self.steady_amplitude


def integrate_cavity_ode(
    cavity: CavityParams,
    pump: PumpSetting,
    detuning: float,
    input_amplitude: complex,
    duration: float,
    step: float,
    visible_input: complex = 0j,
    rtol: float = 1e-12,
) -> CavityTrajectory:
    """Integrate the intracavity amplitude from an empty cavity with RK4.

    Convergence is declared once the amplitude changes by less than ``rtol``
    (relative) across one ``1/gamma_all`` window; the returned trajectory
    stops there. Raises :class:`ConvergenceError` if ``duration`` elapses
    first.
    """
    if step <= 0 or duration <= 0:
        raise ParameterError("duration and step must be positive")
    xi = pump.xi(cavity)
    g = cavity.gamma_all
    rate = 1j * detuning - 0.5 * (g + abs(xi) ** 2)
    drive = xi * input_amplitude + math.sqrt(cavity.gamma_r) * visible_input
    if step * abs(rate) > 0.5:
        raise ParameterError(
            f"step {step:.3g} s too coarse for decay rate {abs(rate):.3g} rad/s"
        )

    def f(a: complex) -> complex:
        return rate * a + drive

    n_steps = int(math.ceil(duration / step))
    window = max(1, int(round(1.0 / (g * step))))
    amps = np.empty(n_steps + 1, dtype=complex)
    amps[0] = a = 0j
    h = step
    converged_at = math.nan
    last = n_steps
    for k in range(1, n_steps + 1):
        k1 = f(a)
        k2 = f(a + 0.5 * h * k1)
        k3 = f(a + 0.5 * h * k2)
        k4 = f(a + h * k3)
        a = a + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        amps[k] = a
        if k >= window and k % window == 0:
            prev = amps[k - window]
            scale = abs(a)
            change = abs(a - prev)
            if (scale == 0.0 and change == 0.0) or (scale > 0 and change / scale < rtol):
                converged_at = k * h
                last = k
                break
    else:
        prev = amps[max(0, n_steps - window)]
        scale = abs(a) or 1.0
        raise ConvergenceError(
            f"cavity amplitude not stationary after {duration:.3g} s", abs(a - prev) / scale
        )
    return CavityTrajectory(
        times=np.arange(last + 1) * h,
        amplitude=amps[: last + 1].copy(),
        signal_input=complex(input_amplitude),
        visible_input=complex(visible_input),
        xi=complex(xi),
        gamma_r=cavity.gamma_r,
        converged_at=converged_at,
    )
