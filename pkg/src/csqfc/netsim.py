"""Round-based ring-network engine built on channel-selective converters.

A distributor feeds frequency-multiplexed entangled pairs around a ring.
Each end node owns a converter; a link request makes both nodes tweeze the
same channel into the same output resonance, so a Bell-state measurement
between the two converted photons is possible. Every pump pass at a node
exposes all still-unconverted channels there to anti-Stokes noise, which
is tracked as a per-node exposure counter and degrades the SNR as
``zeta / m``.
"""

from __future__ import annotations

import copy
import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from csqfc import fixtures
from csqfc.channel_plan import (
    ChannelPlan, PumpAssignment, nearest_resonance, pump_for, resonance_in_band,
)
from csqfc.core import (
    CavityParams, PumpSetting, conversion_efficiency, max_channels, steady_state_transfer,
)
from csqfc.errors import (
    AddCollisionError, CsqfcError, InvalidDropError, OutOfBandError, ParameterError,
    ResourceExhaustedError,
)
from csqfc.noise import NoiseBudget, SignalModel, g2_out, operating_point

LOG_HEADER = ("round", "event", "node", "channel", "omega_p", "eta", "zeta_eff", "g2_out")
EXPOSURE_EVENT = "exposure:node-local"


class Occupancy(str, enum.Enum):
    AVAILABLE = "entangled-pair-available"
    CONSUMED = "consumed"
    EMPTY = "empty"


@dataclass
class ChannelState:
    index: int
    occupancy: Occupancy = Occupancy.AVAILABLE
    exposure_by_node: dict[str, int] = field(default_factory=dict)
    owner: object = None

    @property
    def exposure_rounds(self) -> int:
        return max(self.exposure_by_node.values(), default=0)


@dataclass(frozen=True)
class Node:
    name: str
    cavity: CavityParams
    pump_power: float | None = None

    @property
    def power(self) -> float:
        return self.cavity.p_max if self.pump_power is None else self.pump_power


@dataclass(frozen=True)
class NetworkTopology:
    """Ring of nodes (in ring order, distributor included) sharing one plan.

    ``zeta`` is the single-round SNR of a converted photon; when omitted it
    is derived from ``signal`` and each node's cavity. ``edge_loss_db``
    maps ``(node, next_node)`` ring edges to fiber loss.
    """

    nodes: tuple[Node, ...]
    distributor: str
    plan: ChannelPlan
    signal: SignalModel
    zeta: float | None = None
    edge_loss_db: dict = field(default_factory=dict)
    empty_channels: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise ParameterError("node names must be unique")
        if self.distributor not in names:
            raise ParameterError(f"distributor {self.distributor!r} is not a ring node")
        if len(self.end_nodes) < 2:
            raise ParameterError("ring needs at least two end nodes")
        for n in self.nodes:
            if self.plan.tooth_count > max_channels(n.cavity):
                raise ParameterError(
                    f"{self.plan.tooth_count} channels exceed capacity "
                    f"{max_channels(n.cavity)} of node {n.name}"
                )
            if not math.isclose(n.cavity.fsr, self.plan.fsr, rel_tol=1e-9):
                raise ParameterError(f"node {n.name} FSR differs from the plan FSR")
        for ch in self.empty_channels:
            self.plan.check_index(ch)

    @property
    def end_nodes(self) -> list[str]:
        return [n.name for n in self.nodes if n.name != self.distributor]

    @property
    def channel_count(self) -> int:
        return self.plan.tooth_count

    def node(self, name: str) -> Node:
        for n in self.nodes:
            if n.name == name:
                return n
        raise ParameterError(f"unknown node {name!r}")

    def path_transmission(self, name: str) -> float:
        """Fiber transmission from the distributor to ``name`` along ring order."""
        names = [n.name for n in self.nodes]
        k, target = names.index(self.distributor), names.index(name)
        total_db = 0.0
        while k != target:
            nxt = (k + 1) % len(names)
            total_db += self.edge_loss_db.get((names[k], names[nxt]), 0.0)
            k = nxt
        return 10.0 ** (-total_db / 10.0)

    def base_budget(self, name: str) -> NoiseBudget:
        node = self.node(name)
        op = operating_point(node.cavity, self.signal, node.power)
        if self.zeta is None:
            return op
        return NoiseBudget(n_780=op.s_780 / self.zeta, s_780=op.s_780, zeta=self.zeta,
                           g2_out=g2_out(self.signal.g2_in, self.zeta))


@dataclass
class NetworkState:
    channels: dict[int, ChannelState]
    round: int = 0

    @classmethod
    def fresh(cls, topology: NetworkTopology) -> NetworkState:
        chans = {}
        for i in topology.plan.indices:
            occ = Occupancy.EMPTY if i in topology.empty_channels else Occupancy.AVAILABLE
            chans[i] = ChannelState(i, occ)
        return cls(chans)

    def available(self) -> list[int]:
        return sorted(i for i, c in self.channels.items() if c.occupancy is Occupancy.AVAILABLE)

    def counts(self) -> dict[str, int]:
        c = Counter(ch.occupancy.value for ch in self.channels.values())
        return {o.value: c.get(o.value, 0) for o in Occupancy}

    def copy(self) -> NetworkState:
        return copy.deepcopy(self)


@dataclass(frozen=True)
class ConversionRecord:
    node: str
    channel: int
    pump: PumpAssignment
    residual_detuning: float
    efficiency: float
    exposures: int
    budget: NoiseBudget
    transmissions: dict[int, float]
    exposed: tuple[int, ...]


@dataclass(frozen=True)
class VisiblePhoton:
    """Converted-band photon injected at a node for the add operation."""

    resonance: int = 0
    detuning: float = 0.0
    source: object = None


@dataclass(frozen=True)
class AddRecord:
    node: str
    channel: int
    pump: PumpAssignment
    efficiency: float


@dataclass(frozen=True)
class LinkRequest:
    node_a: str
    node_b: str
    issued_round: int = 0
    request_id: int = 0


@dataclass(frozen=True)
class LinkOutcome:
    request: LinkRequest
    channel: int
    output_index: int
    conversions: tuple[ConversionRecord, ConversionRecord]

    @property
    def pumps(self) -> dict[str, PumpAssignment]:
        return {c.node: c.pump for c in self.conversions}

    @property
    def budgets(self) -> dict[str, NoiseBudget]:
        return {c.node: c.budget for c in self.conversions}

    @property
    def g2_values(self) -> tuple[float, float]:
        return tuple(c.budget.g2_out for c in self.conversions)

    @property
    def bsm_feasible(self) -> bool:
        a, b = self.conversions
        return a.pump.output_index == b.pump.output_index

    @property
    def bsm_efficiency(self) -> float:
        a, b = self.conversions
        return a.efficiency * b.efficiency


# -- channel selection policies ---------------------------------------------

Policy = Callable[[Sequence[int], np.random.Generator], int]


def lowest_index(available: Sequence[int], rng: np.random.Generator) -> int:
    return min(available)


def seeded_random(available: Sequence[int], rng: np.random.Generator) -> int:
    return int(available[int(rng.integers(len(available)))])


POLICIES: dict[str, Policy] = {"lowest": lowest_index, "random": seeded_random}


# -- operations ---------------------------------------------------------------


def common_output_index(topology: NetworkTopology, nodes: Iterable[str]) -> int:
    """Resonance index closest to the anchor that is in band at every node."""
    cavs = [topology.node(n).cavity for n in nodes]
    band = min(c.acceptance_band for c in cavs)
    reach = int(band / topology.plan.fsr) if math.isfinite(band) else 0
    for j in sorted(range(-reach, reach + 1), key=lambda j: (abs(j), j)):
        if all(resonance_in_band(topology.plan, j, c) for c in cavs):
            return j
    raise OutOfBandError("no resonance lies in the acceptance band of every node")


def _convert(
    topology: NetworkTopology,
    state: NetworkState,
    node_name: str,
    channel: int,
    output_index: int,
    power: float | None = None,
) -> ConversionRecord:
    node = topology.node(node_name)
    plan = topology.plan
    if channel not in state.channels:
        raise InvalidDropError(f"channel {channel} not in plan")
    if state.channels[channel].occupancy is not Occupancy.AVAILABLE:
        raise InvalidDropError(
            f"channel {channel} is {state.channels[channel].occupancy.value}, cannot drop"
        )
    p = node.power if power is None else power
    if p <= 0:
        raise InvalidDropError("pump is off; nothing would be converted")
    assignment = pump_for(plan, channel, output_index, node.cavity)
    pump = PumpSetting(p, assignment.pump_frequency)
    _, residual = nearest_resonance(plan, channel, assignment.pump_frequency)
    eta = conversion_efficiency(node.cavity, p, residual) * topology.path_transmission(node_name)

    transmissions = {}
    for i in state.available():
        if i == channel:
            continue
        j, res = nearest_resonance(plan, i, pump.frequency)
        transmissions[i] = (
            steady_state_transfer(node.cavity, pump, res).transmission
            if resonance_in_band(plan, j, node.cavity) else 1.0
        )

    exposed = tuple(state.available())
    for i in exposed:
        ch = state.channels[i]
        ch.exposure_by_node[node_name] = ch.exposure_by_node.get(node_name, 0) + 1
    m = state.channels[channel].exposure_by_node[node_name]
    base = topology.base_budget(node_name)
    budget = NoiseBudget(
        n_780=base.n_780 * m, s_780=base.s_780, zeta=base.zeta / m,
        g2_out=g2_out(topology.signal.g2_in, base.zeta / m),
        round_index=state.round, exposures=m,
    )
    return ConversionRecord(node_name, channel, assignment, residual, eta, m, budget,
                            transmissions, exposed)


def drop(
    topology: NetworkTopology, state: NetworkState, node: str, channel: int,
    power: float | None = None,
) -> ConversionRecord:
    """Pick channel ``channel`` out of the comb at ``node``; mutates ``state``."""
    rec = _convert(topology, state, node, channel, common_output_index(topology, [node]), power)
    state.channels[channel].occupancy = Occupancy.CONSUMED
    return rec


def add(
    topology: NetworkTopology, state: NetworkState, node: str, channel: int,
    photon: VisiblePhoton,
) -> AddRecord:
    """Reverse-convert a visible photon into the empty ``channel``; mutates ``state``."""
    n = topology.node(node)
    if channel not in state.channels:
        raise ParameterError(f"channel {channel} not in plan")
    ch = state.channels[channel]
    if ch.occupancy is not Occupancy.EMPTY:
        raise AddCollisionError(f"channel {channel} is {ch.occupancy.value}; add needs it empty")
    assignment = pump_for(topology.plan, channel, photon.resonance, n.cavity)
    pump = PumpSetting(n.power, assignment.pump_frequency)
    eff = abs(steady_state_transfer(n.cavity, pump, photon.detuning).t_rev) ** 2
    ch.occupancy = Occupancy.AVAILABLE
    ch.owner = photon.source
    ch.exposure_by_node = {}
    return AddRecord(node, channel, assignment, eff)


def schedule_link(
    topology: NetworkTopology,
    state: NetworkState,
    request: LinkRequest,
    policy: Policy = lowest_index,
    rng: np.random.Generator | None = None,
) -> LinkOutcome:
    """Hand one entangled-pair channel to a node pair; mutates ``state``."""
    for name in (request.node_a, request.node_b):
        if name not in topology.end_nodes:
            raise ParameterError(f"{name!r} is not an end node")
    if request.node_a == request.node_b:
        raise ParameterError("a link needs two distinct end nodes")
    available = state.available()
    if not available:
        raise ResourceExhaustedError("no entangled-pair channel left")
    rng = np.random.default_rng(0) if rng is None else rng
    channel = policy(available, rng)
    j = common_output_index(topology, [request.node_a, request.node_b])
    rec_a = _convert(topology, state, request.node_a, channel, j)
    rec_b = _convert(topology, state, request.node_b, channel, j)
    ch = state.channels[channel]
    ch.occupancy = Occupancy.CONSUMED
    ch.owner = request.request_id
    return LinkOutcome(request, channel, j, (rec_a, rec_b))


# -- scenario runner ----------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


@dataclass(frozen=True)
class LogRecord:
    round: int
    event: str
    node: str = ""
    channel: int | None = None
    omega_p: float | None = None
    eta: float | None = None
    zeta_eff: float | None = None
    g2_out: float | None = None

    def line(self) -> str:
        return ",".join(_fmt(getattr(self, k)) for k in LOG_HEADER)


@dataclass
class ScenarioResult:
    log: list[LogRecord]
    state: NetworkState
    outcomes: list[LinkOutcome]
    occupancy_history: list[dict[str, int]]

    def log_text(self) -> str:
        return "\n".join([",".join(LOG_HEADER)] + [r.line() for r in self.log]) + "\n"

    def link_rows(self) -> list[tuple]:
        rows = []
        for k, out in enumerate(self.outcomes, start=1):
            for rec in out.conversions:
                b = rec.budget
                rows.append((b.round_index, k, rec.node, out.channel, b.exposures,
                             b.s_780, b.n_780, b.zeta, b.g2_out, rec.efficiency))
        return rows

    def summary_csv(self) -> str:
        head = "round,link,node,channel,m,s780,n780,zeta_eff,g2_out,eta"
        body = [",".join(_fmt(v) for v in row) for row in self.link_rows()]
        return "\n".join([head] + body) + "\n"


def _parse_step(step: dict) -> tuple[str, dict]:
    if not isinstance(step, dict) or "op" not in step:
        raise ParameterError(f"malformed scenario step {step!r}")
    op = step["op"]
    if op not in ("link", "drop", "add"):
        raise ParameterError(f"unknown scenario op {op!r}")
    return op, step


def run_scenario(
    topology: NetworkTopology,
    script: Sequence[dict],
    seed: int = 0,
    policy: str | Policy = "lowest",
    state: NetworkState | None = None,
) -> ScenarioResult:
    """Execute ``script`` one step per round.

    Steps are dicts: ``{"op": "link", "a": .., "b": ..}``,
    ``{"op": "drop", "node": .., "channel": ..}`` or
    ``{"op": "add", "node": .., "channel": .., "resonance": 0, "detuning": 0.0}``.
    Failures raised by a step are logged and the run continues.
    """
    steps = [_parse_step(s) for s in script]
    pick = POLICIES[policy] if isinstance(policy, str) else policy
    rng = np.random.default_rng(seed)
    state = NetworkState.fresh(topology) if state is None else state
    log: list[LogRecord] = []
    outcomes: list[LinkOutcome] = []
    history: list[dict[str, int]] = []

    def log_conversion(r: int, rec: ConversionRecord) -> None:
        for i in rec.exposed:
            m = state.channels[i].exposure_by_node[rec.node]
            z = topology.base_budget(rec.node).zeta / m
            log.append(LogRecord(r, EXPOSURE_EVENT, rec.node, i, zeta_eff=z,
                                 g2_out=g2_out(topology.signal.g2_in, z)))
        log.append(LogRecord(r, "pump", rec.node, rec.channel, rec.pump.pump_frequency,
                             rec.efficiency, rec.budget.zeta, rec.budget.g2_out))

    for k, (op, step) in enumerate(steps, start=1):
        state.round += 1
        r = state.round
        try:
            if op == "link":
                req = LinkRequest(step["a"], step["b"], r, k)
                out = schedule_link(topology, state, req, pick, rng)
                for rec in out.conversions:
                    log_conversion(r, rec)
                log.append(LogRecord(r, "link", f"{req.node_a}|{req.node_b}", out.channel,
                                     eta=out.bsm_efficiency,
                                     g2_out=max(out.g2_values)))
                outcomes.append(out)
            elif op == "drop":
                rec = drop(topology, state, step["node"], int(step["channel"]),
                           step.get("power"))
                log_conversion(r, rec)
                log.append(LogRecord(r, "drop", rec.node, rec.channel, eta=rec.efficiency))
            else:
                photon = VisiblePhoton(int(step.get("resonance", 0)),
                                       float(step.get("detuning", 0.0)), step.get("source", k))
                rec = add(topology, state, step["node"], int(step["channel"]), photon)
                log.append(LogRecord(r, "add", rec.node, rec.channel, rec.pump.pump_frequency,
                                     rec.efficiency))
        except (CsqfcError, KeyError) as exc:
            name = type(exc).__name__
            log.append(LogRecord(r, f"error:{name}", str(step.get("node", step.get("a", ""))),
                                 step.get("channel")))
        history.append(state.counts())
    return ScenarioResult(log, state, outcomes, history)


def ring_topology(
    cavity: CavityParams,
    signal: SignalModel,
    channel_count: int = 40,
    end_nodes: int = 4,
    zeta: float | None = None,
    comb_center: float | None = None,
    resonance_anchor: float | None = None,
) -> NetworkTopology:
    """Distributor plus ``end_nodes`` identical converters on one ring.

    Channels are packed within one FSR at ``fsr / capacity`` spacing. The
    comb and resonance ladder default to the 1540 nm / 780 nm reference
    frequencies.
    """
    if comb_center is None:
        comb_center = fixtures.paper_plan().comb_center
    if resonance_anchor is None:
        resonance_anchor = comb_center + fixtures.PUMP_00
    spacing = cavity.fsr / max_channels(cavity)
    plan = ChannelPlan(
        comb_center=comb_center,
        comb_spacing=spacing,
        tooth_count=channel_count,
        resonance_anchor=resonance_anchor,
        fsr=cavity.fsr,
        bin_width=min(2 * cavity.gamma_all, 0.5 * spacing),
    )
    nodes = (Node("D", cavity),) + tuple(Node(f"n{k}", cavity) for k in range(1, end_nodes + 1))
    return NetworkTopology(nodes, "D", plan, signal, zeta)
