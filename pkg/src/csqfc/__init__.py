"""Channel-selective cavity-enhanced frequency up-conversion toolkit."""

from csqfc.core import (
    CavityParams,
    PumpSetting,
    TransferAmplitudes,
    cold_finesse,
    conversion_bandwidth,
    conversion_efficiency,
    integrate_cavity_ode,
    max_channels,
    steady_state_transfer,
)
from csqfc.channel_plan import ChannelPlan, PumpAssignment, decode_pump, pump_for, validate_plan
from csqfc.fixtures import paper_cavity, paper_plan, paper_signal

__all__ = [
    "CavityParams",
    "ChannelPlan",
    "PumpAssignment",
    "PumpSetting",
    "TransferAmplitudes",
    "cold_finesse",
    "conversion_bandwidth",
    "conversion_efficiency",
    "decode_pump",
    "integrate_cavity_ode",
    "max_channels",
    "paper_cavity",
    "paper_plan",
    "paper_signal",
    "pump_for",
    "steady_state_transfer",
    "validate_plan",
]
