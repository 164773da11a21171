"""Index algebra between comb teeth, cavity resonances and pump frequencies.

Tooth ``i`` sits at ``comb_center + i * comb_spacing`` and converted
resonance ``j`` at ``resonance_anchor + j * fsr``. A pump at
``omega_v,j - omega_t,i`` moves tooth ``i`` into resonance ``j``; lowering
the pump by ``n`` comb spacings selects tooth ``i + n`` for the same output,
raising it by ``m`` FSRs routes the same tooth to resonance ``j + m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from csqfc.core import CavityParams, conversion_bandwidth, max_channels
from csqfc.errors import OutOfBandError, ParameterError


@dataclass(frozen=True)
class ChannelPlan:
    comb_center: float
    comb_spacing: float
    tooth_count: int
    resonance_anchor: float
    fsr: float
    bin_width: float
    first_index: int = 0
    # Optional per-tooth FSR shifts k_i: tooth i sits k_i * fsr away from the
    # regular grid, which changes only the output resonance it lands in.
    alias: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.alias and len(self.alias) != self.tooth_count:
            raise ParameterError("alias must list one FSR shift per tooth")
        if self.tooth_count < 1:
            raise ParameterError(f"tooth_count must be >= 1, got {self.tooth_count}")
        if self.comb_spacing <= 0 or self.fsr <= 0:
            raise ParameterError("comb_spacing and fsr must be positive")
        if self.bin_width < 0 or self.comb_spacing <= self.bin_width:
            raise ParameterError(
                f"comb_spacing ({self.comb_spacing:.4g}) must exceed bin_width ({self.bin_width:.4g})"
            )

    @property
    def indices(self) -> range:
        return range(self.first_index, self.first_index + self.tooth_count)

    def alias_of(self, i: int) -> int:
        return self.alias[i - self.first_index] if self.alias else 0

    def tooth_offset(self, i: int) -> float:
        """Tooth frequency relative to ``comb_center``."""
        return i * self.comb_spacing + self.alias_of(i) * self.fsr

    def tooth_frequency(self, i: int) -> float:
        return self.comb_center + self.tooth_offset(i)

    def resonance_frequency(self, j: int) -> float:
        return self.resonance_anchor + j * self.fsr

    def check_index(self, i: int) -> None:
        if i not in self.indices:
            raise ParameterError(f"tooth index {i} outside plan range {self.indices}")

    def with_fsr(self, fsr: float) -> ChannelPlan:
        return ChannelPlan(
            self.comb_center, self.comb_spacing, self.tooth_count,
            self.resonance_anchor, fsr, self.bin_width, self.first_index, self.alias,
        )


@dataclass(frozen=True)
class PumpAssignment:
    input_index: int
    output_index: int
    pump_frequency: float
    residual_detuning: float = 0.0


@dataclass(frozen=True)
class DecodedTooth:
    input_index: int
    output_index: int
    residual_detuning: float
    weight: float


def resonance_in_band(plan: ChannelPlan, j: int, cavity: CavityParams | None) -> bool:
    if cavity is None:
        return True
    return abs(j * plan.fsr) <= cavity.acceptance_band


def pump_for(
    plan: ChannelPlan, i: int, j: int, cavity: CavityParams | None = None
) -> PumpAssignment:
    """Pump frequency sending tooth ``i`` exactly onto resonance ``j``."""
    plan.check_index(i)
    if not resonance_in_band(plan, j, cavity):
        raise OutOfBandError(
            f"resonance {j} is {abs(j * plan.fsr) / (2 * math.pi * 1e9):.1f} GHz from the "
            f"anchor, outside the acceptance band"
        )
    omega_p = (plan.resonance_anchor - plan.comb_center) + (j * plan.fsr - plan.tooth_offset(i))
    return PumpAssignment(i, j, omega_p, 0.0)


def nearest_resonance(plan: ChannelPlan, i: int, pump_frequency: float) -> tuple[int, float]:
    """Nearest resonance index and signed residual for tooth ``i`` under a pump.

    A tie at exactly half an FSR resolves to the lower resonance index.
    """
    # Subtract the large absolute frequencies first to keep the residual exact.
    offset = (plan.comb_center - plan.resonance_anchor) + pump_frequency + plan.tooth_offset(i)
    x = offset / plan.fsr
    j = math.ceil(x - 0.5)
    return j, offset - j * plan.fsr


def lorentzian_weight(residual: float, c_tilde: float, gamma_all: float) -> float:
    """Conversion weight relative to exact resonance at the same coupling."""
    d = residual / gamma_all
    on = 0.25 * (1.0 + c_tilde) ** 2
    return on / (on + d * d)


def decode_pump(
    plan: ChannelPlan,
    cavity: CavityParams,
    pump_frequency: float,
    power: float | None = None,
) -> list[DecodedTooth]:
    """Which tooth lands where under ``pump_frequency``, ranked by weight.

    ``power`` sets the coupling used in the Lorentzian weight and defaults
    to the maximum-efficiency point ``1/alpha``.
    """
    c = cavity.c_tilde(cavity.p_max if power is None else power)
    out = []
    for i in plan.indices:
        j, res = nearest_resonance(plan, i, pump_frequency)
        if not resonance_in_band(plan, j, cavity):
            continue
        w = lorentzian_weight(res, c, cavity.gamma_all)
        out.append(DecodedTooth(i, j, res, w))
    return sorted(out, key=lambda t: (-t.weight, t.input_index))


@dataclass(frozen=True)
class PlanReport:
    capacity: int
    tooth_count: int
    bandwidth: float
    collisions: tuple[tuple[int, float], ...]
    min_residual: tuple[int, float] | None

    @property
    def capacity_exceeded(self) -> bool:
        return self.tooth_count > self.capacity

    @property
    def ok(self) -> bool:
        return not self.capacity_exceeded and not self.collisions


def comb_residual(plan: ChannelPlan, n: int) -> float:
    """Signed distance of ``n * comb_spacing`` from the nearest FSR multiple."""
    x = n * plan.comb_spacing
    k = math.ceil(x / plan.fsr - 0.5)
    return x - k * plan.fsr


def validate_plan(
    plan: ChannelPlan, cavity: CavityParams, power: float | None = None
) -> PlanReport:
    """Capacity and co-conversion check for every tooth separation in the plan."""
    bw = conversion_bandwidth(cavity, cavity.p_max if power is None else power)
    collisions = []
    best = None
    for n in range(1, plan.tooth_count):
        r = comb_residual(plan, n)
        if best is None or abs(r) < abs(best[1]):
            best = (n, r)
        if abs(r) < bw:
            collisions.append((n, r))
            collisions.append((-n, -r))
    collisions.sort(key=lambda nr: (abs(nr[0]), nr[0]))
    return PlanReport(
        capacity=max_channels(cavity),
        tooth_count=plan.tooth_count,
        bandwidth=bw,
        collisions=tuple(collisions),
        min_residual=best,
    )
