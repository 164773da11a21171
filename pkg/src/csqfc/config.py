"""Run configuration: TOML with explicit unit tags on every frequency and time.

Frequency values are strings such as ``"40 MHz"`` (ordinary frequency),
``"2pi*40 MHz"`` (written as 2*pi times an ordinary frequency; same value)
or ``"2.5e8 rad/s"`` (angular). Wavelength-valued comb centres accept
``"1540 nm"``. Bare numbers in these fields are rejected.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from csqfc.channel_plan import ChannelPlan
from csqfc.core import CavityParams
from csqfc.errors import ConfigError, ParameterError
from csqfc.fixtures import SPEED_OF_LIGHT
from csqfc.noise import NOISE_CONVENTION, SignalModel

_HZ = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "THz": 1e12}
_PER_SECOND = {"s": 1.0, "ms": 1e3, "us": 1e6, "ns": 1e9, "ps": 1e12}  # divide: exact decimals
_METERS = {"m": 1.0, "um": 1e-6, "nm": 1e-9}

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_FREQ_RE = re.compile(rf"^\s*(?P<twopi>2\s*pi\s*\*?\s*)?(?P<num>{_NUM})\s*(?P<unit>[A-Za-z/]+)\s*$")
_PLAIN_RE = re.compile(rf"^\s*(?P<num>{_NUM})\s*(?P<unit>[A-Za-z]+)\s*$")

BUNDLED_CONFIG = "paper.toml"


def _tagged(value, key: str) -> tuple[str, float, str, bool]:
    if isinstance(value, dict):
        if set(value) - {"value", "unit"} or "unit" not in value or "value" not in value:
            raise ConfigError(f"{key}: table form needs exactly 'value' and 'unit'")
        unit = str(value["unit"]).strip()
        twopi = unit.startswith("2pi")
        unit = re.sub(r"^2\s*pi\s*\*?\s*", "", unit)
        return key, float(value["value"]), unit, twopi
    if isinstance(value, bool) or not isinstance(value, str):
        raise ConfigError(f"{key}: unit tag required, got bare value {value!r}")
    m = _FREQ_RE.match(value)
    if not m:
        raise ConfigError(f"{key}: cannot parse {value!r}; expected e.g. '2pi*40 MHz'")
    return key, float(m["num"]), m["unit"], bool(m["twopi"])


def parse_frequency(value, key: str = "frequency") -> float:
    """Angular frequency in rad/s from a unit-tagged value."""
    key, num, unit, twopi = _tagged(value, key)
    if unit == "rad/s":
        if twopi:
            raise ConfigError(f"{key}: '2pi*' prefix is meaningless with rad/s")
        return num
    if unit in _HZ:
        return 2 * math.pi * num * _HZ[unit]
    raise ConfigError(f"{key}: unknown frequency unit {unit!r}")


def parse_time(value, key: str = "time") -> float:
    if isinstance(value, bool) or not isinstance(value, str):
        raise ConfigError(f"{key}: unit tag required, got bare value {value!r}")
    m = _PLAIN_RE.match(value)
    if not m or m["unit"] not in _PER_SECOND:
        raise ConfigError(f"{key}: cannot parse time {value!r}")
    return float(m["num"]) / _PER_SECOND[m["unit"]]


def parse_comb_center(value, key: str = "comb_center") -> float:
    """Angular frequency from a tagged frequency or a vacuum wavelength."""
    if isinstance(value, str):
        m = _PLAIN_RE.match(value)
        if m and m["unit"] in _METERS:
            return 2 * math.pi * SPEED_OF_LIGHT / (float(m["num"]) * _METERS[m["unit"]])
    return parse_frequency(value, key)


def _number(section: dict, key: str, where: str, default=None) -> float:
    if key not in section:
        if default is None:
            raise ConfigError(f"[{where}] missing {key}")
        return default
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"[{where}] {key} must be a plain number, got {v!r}")
    return float(v)


@dataclass
class RunConfig:
    cavity: CavityParams
    plan: ChannelPlan
    signal: SignalModel
    pump_power: float
    pump_phase: float = 0.0
    pump_00: float = 0.0
    zeta: float | None = None
    rounds: int = 40
    convention: str = NOISE_CONVENTION
    scenario: dict = field(default_factory=dict)
    output_dir: str = "."
    seed: int = 0
    source: str = ""


def _cavity(sec: dict) -> CavityParams:
    where = "cavity"
    fsr = parse_frequency(sec.get("fsr"), "cavity.fsr")
    alpha = _number(sec, "alpha", where)
    length = _number(sec, "length", where)
    noise = _number(sec, "noise_coeff", where, 0.0)
    band = parse_frequency(sec["acceptance_band"], "cavity.acceptance_band") \
        if "acceptance_band" in sec else math.inf
    if "gamma_r_tilde" in sec:
        gamma_all = parse_frequency(sec.get("gamma_all"), "cavity.gamma_all")
        return CavityParams.from_linewidth(
            gamma_all, _number(sec, "gamma_r_tilde", where), fsr, alpha, length, noise, band
        )
    gamma_r = parse_frequency(sec.get("gamma_r"), "cavity.gamma_r")
    if "gamma_int" in sec:
        gamma_int = parse_frequency(sec["gamma_int"], "cavity.gamma_int")
    else:
        gamma_int = parse_frequency(sec.get("gamma_all"), "cavity.gamma_all") - gamma_r
    return CavityParams(gamma_r, gamma_int, fsr, alpha, length, noise, band)


def _plan(sec: dict, cavity: CavityParams) -> tuple[ChannelPlan, float]:
    center = parse_comb_center(sec.get("comb_center"), "plan.comb_center")
    pump_00 = parse_frequency(sec["pump_00"], "plan.pump_00") if "pump_00" in sec else 0.0
    if "resonance_anchor" in sec:
        anchor = parse_frequency(sec["resonance_anchor"], "plan.resonance_anchor")
        pump_00 = anchor - center
    elif "pump_00" in sec:
        anchor = center + pump_00
    else:
        raise ConfigError("[plan] needs pump_00 or resonance_anchor")
    spacing = parse_frequency(sec.get("comb_spacing"), "plan.comb_spacing")
    bin_width = parse_frequency(sec["bin_width"], "plan.bin_width") \
        if "bin_width" in sec else 2 * cavity.gamma_all
    plan = ChannelPlan(
        comb_center=center,
        comb_spacing=spacing,
        tooth_count=int(_number(sec, "tooth_count", "plan")),
        resonance_anchor=anchor,
        fsr=cavity.fsr,
        bin_width=bin_width,
        first_index=int(_number(sec, "first_index", "plan", 0)),
    )
    return plan, pump_00


def parse_config(data: dict, source: str = "") -> RunConfig:
    try:
        for name in ("cavity", "plan", "signal"):
            if name not in data:
                raise ConfigError(f"missing [{name}] section")
        cavity = _cavity(data["cavity"])
        plan, pump_00 = _plan(data["plan"], cavity)
        s = data["signal"]
        signal = SignalModel(
            n_in=_number(s, "n_in", "signal"),
            g2_in=_number(s, "g2_in", "signal"),
            linewidth_ratio=_number(s, "linewidth_ratio", "signal"),
            window=parse_time(s.get("window"), "signal.window"),
        )
        pump = data.get("pump", {})
        noise = data.get("noise", {})
        return RunConfig(
            cavity=cavity,
            plan=plan,
            signal=signal,
            pump_power=_number(pump, "power", "pump", cavity.p_max),
            pump_phase=_number(pump, "phase", "pump", 0.0),
            pump_00=pump_00,
            zeta=_number(s, "zeta", "signal") if "zeta" in s else None,
            rounds=int(_number(s, "rounds", "signal", 40)),
            convention=str(noise.get("convention", NOISE_CONVENTION)),
            scenario=dict(data.get("scenario", {})),
            output_dir=str(data.get("output_dir", ".")),
            seed=int(data.get("seed", 0)),
            source=source,
        )
    except ConfigError:
        raise
    except (ParameterError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{source or 'config'}: {exc}") from exc


def load_config(path: str | Path | None = None) -> RunConfig:
    """Load ``path``, or the bundled reference-device config when ``None``."""
    if path is None:
        text = resources.files("csqfc.data").joinpath(BUNDLED_CONFIG).read_text()
        source = f"bundled:{BUNDLED_CONFIG}"
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        source = str(path)
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return parse_config(data, source)
