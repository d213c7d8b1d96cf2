"""Timed network runtime: hardware profiles, clock, decoupling, links.

A network is a handful of star-topology nodes, each with one optically
active electron (slot 0) and a few carbon memories (slots >= 1). Two-qubit
gates exist only between a node's electron and one of its own carbons;
entanglement between nodes comes exclusively from heralded remote links
between electrons.

Time is a single global clock. Operations on disjoint nodes may be grouped
into one layer that advances the clock once by its longest member; every
qubit is charged idle decoherence for whatever part of the layer its own
node's operation is not acting on it. Carbon memories are assumed to sit
under a dynamical-decoupling sequence, so any operation touching a carbon
can only start on that node's decoupling boundary; the enforced wait is
charged as idle time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .channels import (
    DecoherencePair,
    depolarize_two_qubit,
    idle_decoherence,
    noisy_measure,
    re_bell_source,
)
from .register import (
    CNOT,
    CZ,
    HADAMARD,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    SWAP,
    FactoredRegister,
    QubitId,
)

@dataclass(frozen=True)
class HardwareProfile:
    """Error probabilities, decoherence times and durations of one platform.

    All times are seconds. ``t1e`` is math.inf: electron relaxation is
    negligible on protocol timescales and only its dephasing is tracked.
    """

    name: str
    p_g: float  # depolarizing probability per two-qubit gate
    p_m: float  # readout assignment error
    p_n: float  # double-excitation admixture per heralded link
    p_re: float  # success probability per entanglement attempt
    t_re: float  # duration of one entanglement attempt
    t_meas: float
    t1e: float
    t2e_idle: float
    t1n_idle: float
    t2n_idle: float
    t1n_re: float  # carbon relaxation while its node runs link attempts
    t2n_re: float
    t_e_x: float
    t_e_y: float
    t_e_z: float
    t_e_h: float
    t_c_x: float
    t_c_y: float
    t_c_z: float
    t_c_h: float
    t_cnot: float  # electron-controlled, carbon-target native gate
    t_cz: float
    t_swap: float
    dd_tau: float  # half the free evolution between decoupling pulses
    dd_pi: float  # duration of the decoupling pulse itself
    # Control-layer latency absorbed by the decoupling sequence: a carbon
    # operation this soon after the node's anchor still counts as starting
    # on the boundary. Covers readout plus feed-forward pulses, not gates.
    dd_slack: float = 10e-6

    def __post_init__(self):
        for attr in ("p_g", "p_m", "p_n"):
            v = getattr(self, attr)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{attr}={v} outside [0, 1]")
        if not 0.0 < self.p_re <= 1.0:
            raise ValueError(f"p_re={self.p_re} outside (0, 1]")

    @property
    def dd_period(self) -> float:
        return 2.0 * self.dd_tau + self.dd_pi

    @property
    def electron_pair(self) -> DecoherencePair:
        return DecoherencePair(self.t1e, self.t2e_idle)

    @property
    def carbon_idle_pair(self) -> DecoherencePair:
        return DecoherencePair(self.t1n_idle, self.t2n_idle)

    @property
    def carbon_re_pair(self) -> DecoherencePair:
        return DecoherencePair(self.t1n_re, self.t2n_re)

    def with_overrides(self, **kwargs) -> "HardwareProfile":
        return replace(self, **kwargs)


_BASE = dict(
    p_g=0.01,
    p_m=0.01,
    p_n=0.1,
    p_re=1e-4,
    t_re=6e-6,
    t_meas=4e-6,
    t1e=math.inf,
    t2e_idle=1.0,
    t1n_idle=300.0,
    t2n_idle=10.0,
    t_e_x=0.14e-6,
    t_e_y=0.14e-6,
    t_e_z=0.10e-6,
    t_e_h=0.10e-6,
)


def purified_profile() -> HardwareProfile:
    """Long-lived carbons during link generation, slow weakly coupled gates."""
    return HardwareProfile(
        name="purified",
        t1n_re=1.2,
        t2n_re=1.2,
        t_c_x=13e-3,
        t_c_y=13e-3,
        t_c_z=6.5e-3,
        t_c_h=6.5e-3,
        t_cnot=25e-3,
        t_cz=25e-3,
        t_swap=75e-3,
        dd_tau=15e-3,
        dd_pi=13e-3,
        **_BASE,
    )


def natural_profile() -> HardwareProfile:
    """Strongly coupled carbons: fast gates, short-lived under linking."""
    return HardwareProfile(
        name="natural",
        t1n_re=0.03,
        t2n_re=0.012,
        t_c_x=1e-3,
        t_c_y=1e-3,
        t_c_z=0.5e-3,
        t_c_h=0.5e-3,
        t_cnot=0.5e-3,
        t_cz=0.5e-3,
        t_swap=1.5e-3,
        dd_tau=1.5e-3,
        dd_pi=1e-3,
        **_BASE,
    )


def ideal_profile() -> HardwareProfile:
    """Purified durations with every error and decoherence source removed."""
    return purified_profile().with_overrides(
        name="ideal",
        p_g=0.0,
        p_m=0.0,
        p_n=0.0,
        p_re=1.0,
        t2e_idle=math.inf,
        t1n_idle=math.inf,
        t2n_idle=math.inf,
        t1n_re=math.inf,
        t2n_re=math.inf,
    )


PROFILES = {
    "purified": purified_profile,
    "natural": natural_profile,
    "ideal": ideal_profile,
}


def electron(node: int) -> QubitId:
    return QubitId(node, 0)


def carbon(node: int, k: int = 1) -> QubitId:
    if k < 1:
        raise ValueError("carbon slots start at 1")
    return QubitId(node, k)


@dataclass
class LinkResult:
    """One heralded entanglement round."""

    qubits: tuple[QubitId, QubitId]
    attempts: int
    duration: float


@dataclass
class NetworkState:
    """Mutable simulation state shared by every timed operation."""

    profile: HardwareProfile
    register: FactoredRegister
    nodes: tuple[int, ...]
    clock: float = 0.0
    anchors: dict[int, float] = field(default_factory=dict)
    noiseless: set[QubitId] = field(default_factory=set)
    links_generated: int = 0
    # While a track runs (see run_tracks), decoherence and operations are
    # restricted to these nodes; None means the whole network.
    scope: set[int] | None = None

    def __post_init__(self):
        for n in self.nodes:
            self.anchors.setdefault(n, 0.0)


def build_network(profile: HardwareProfile, n_nodes: int) -> NetworkState:
    """Fresh network with empty registers and all clocks at zero."""
    return NetworkState(
        profile=profile,
        register=FactoredRegister(),
        nodes=tuple(range(n_nodes)),
    )


def _pair_for(net: NetworkState, q: QubitId, re_nodes: frozenset[int]) -> DecoherencePair:
    if q.slot == 0:
        return net.profile.electron_pair
    if q.node in re_nodes:
        return net.profile.carbon_re_pair
    return net.profile.carbon_idle_pair


def advance(
    net: NetworkState,
    duration: float,
    active: frozenset[QubitId] = frozenset(),
    re_nodes: frozenset[int] = frozenset(),
) -> None:
    """Move the clock and decohere every idle qubit.

    ``active`` qubits are the ones an operation is acting on; they receive
    that operation's own noise instead. Carbons of ``re_nodes`` decay with
    the (usually much worse) link-generation constants.
    """
    if duration < 0:
        raise ValueError(f"cannot advance by {duration}")
    net.clock += duration
    if duration == 0.0:
        return
    for q in list(net.register.qubits):
        if q in active or q in net.noiseless:
            continue
        if net.scope is not None and q.node not in net.scope:
            continue
        idle_decoherence(net.register, q, _pair_for(net, q, re_nodes), duration)


def next_boundary(net: NetworkState, node: int, t: float) -> float:
    """Earliest decoupling boundary of ``node`` usable at time t.

    The grid is anchor + k * period; requests within ``dd_slack`` of a
    boundary round down to it (short feed-forward latency rides along with
    the sequence instead of costing a whole period).
    """
    anchor = net.anchors[node]
    period = net.profile.dd_period
    if period <= 0.0:
        return t
    k = math.ceil((t - anchor - net.profile.dd_slack) / period)
    return anchor + max(k, 0) * period


def sync_nodes(net: NetworkState, *nodes: int) -> None:
    """Restart the listed nodes' decoupling sequences at the current instant.

    Models the classical control layer re-synchronizing a node when a
    message from a peer arrives (a herald or a remote measurement outcome):
    the node's sequence picks up from now, so its next carbon window opens
    immediately instead of waiting out the remainder of a period that was
    anchored to stale local work.
    """
    for n in nodes:
        net.anchors[n] = net.clock


def dd_align(net: NetworkState, nodes: Iterable[int]) -> float:
    """Wait (idle) until every listed node sits on a decoupling boundary.

    Boundaries are per node: each node's grid restarts whenever one of its
    own carbon operations or links completes, so a common instant is taken
    as the max of the per-node next boundaries and late nodes restart their
    sequence there.

    Returns the wait that was charged.
    """
    target = max(next_boundary(net, n, net.clock) for n in nodes)
    target = max(target, net.clock)
    wait = target - net.clock
    if wait > 0:
        advance(net, wait)
    for n in nodes:
        net.anchors[n] = target
    return wait


_SINGLE_UNITARIES = {
    "x": PAULI_X,
    "y": PAULI_Y,
    "z": PAULI_Z,
    "h": HADAMARD,
}


def _gate_duration(profile: HardwareProfile, name: str, qubits: Sequence[QubitId]) -> float:
    if name in _SINGLE_UNITARIES:
        q = qubits[0]
        attr = f"t_e_{name}" if q.slot == 0 else f"t_c_{name}"
        return getattr(profile, attr)
    if name == "cnot":
        control = qubits[0]
        if control.slot == 0:
            return profile.t_cnot
        # carbon-controlled: run it as H CZ H on the electron target
        return profile.t_cz + 2.0 * profile.t_e_h
    if name == "cz":
        return profile.t_cz
    if name == "swap":
        return profile.t_swap
    if name == "measure":
        return profile.t_meas
    if name == "measure_x":
        return profile.t_e_h + profile.t_meas
    raise ValueError(f"unknown operation {name!r}")


def _validate_op(name: str, qubits: Sequence[QubitId]) -> None:
    if name in _SINGLE_UNITARIES:
        if len(qubits) != 1:
            raise ValueError(f"{name} takes one qubit")
        return
    if name in ("cnot", "cz", "swap"):
        a, b = qubits
        if a.node != b.node:
            raise ValueError("two-qubit gates are local to one node")
        slots = sorted((a.slot == 0, b.slot == 0))
        if slots != [False, True]:
            raise ValueError("two-qubit gates couple the electron to a carbon")
        return
    if name in ("measure", "measure_x"):
        if len(qubits) != 1 or qubits[0].slot != 0:
            raise ValueError("only the electron can be read out")
        return
    raise ValueError(f"unknown operation {name!r}")


def apply_ops(
    net: NetworkState,
    ops: Sequence[tuple[str, Sequence[QubitId]]],
    rng: np.random.Generator,
) -> dict[QubitId, int]:
    """Run one layer of node-disjoint operations concurrently.

    Every op starts at the same instant: the latest decoupling boundary
    among the nodes whose op touches a carbon (ops that involve only
    electrons neither wait for a boundary nor move one). The clock then
    advances once by the longest duration in the layer, and each qubit is
    charged idle decoherence for the remainder of the layer beyond its own
    op. All state updates (gates, projections) are applied at the layer
    start; two-qubit depolarizing commutes with the gate it follows, so the
    order within the instant is immaterial.

    Returns measurement outcomes keyed by the measured qubit.
    """
    if not ops:
        return {}
    seen_nodes: set[int] = set()
    aligning: set[int] = set()
    for name, qubits in ops:
        _validate_op(name, qubits)
        op_nodes = {q.node for q in qubits}
        if len(op_nodes) != 1:
            raise ValueError("each operation must stay inside one node")
        if op_nodes & seen_nodes:
            raise ValueError("layer operations must touch disjoint nodes")
        seen_nodes |= op_nodes
        if any(q.slot != 0 for q in qubits):
            aligning |= op_nodes
    if net.scope is not None and not seen_nodes <= net.scope:
        raise ValueError("operation touches nodes outside the running track")
    if aligning:
        dd_align(net, aligning)

    profile = net.profile
    durations = [_gate_duration(profile, name, qubits) for name, qubits in ops]
    total = max(durations)
    outcomes: dict[QubitId, int] = {}
    busy: dict[QubitId, float] = {}
    for (name, qubits), dur in zip(ops, durations):
        qubits = list(qubits)
        for q in qubits:
            busy[q] = dur
        if name in _SINGLE_UNITARIES:
            net.register.apply_unitary(_SINGLE_UNITARIES[name], qubits)
        elif name == "cnot":
            net.register.apply_unitary(CNOT, qubits)
            depolarize_two_qubit(net.register, tuple(qubits), profile.p_g)
        elif name == "cz":
            net.register.apply_unitary(CZ, qubits)
            depolarize_two_qubit(net.register, tuple(qubits), profile.p_g)
        elif name == "swap":
            # three CNOTs long, but noise-wise one two-qubit gate like any other
            net.register.apply_unitary(SWAP, qubits)
            depolarize_two_qubit(net.register, tuple(qubits), profile.p_g)
        elif name == "measure":
            outcomes[qubits[0]] = noisy_measure(net.register, qubits[0], profile.p_m, rng)
        elif name == "measure_x":
            net.register.apply_unitary(HADAMARD, qubits)
            outcomes[qubits[0]] = noisy_measure(net.register, qubits[0], profile.p_m, rng)

    net.clock += total
    for q in list(net.register.qubits):
        if q in net.noiseless:
            continue
        idle = total - busy.get(q, 0.0)
        if idle > 0.0:
            idle_decoherence(net.register, q, _pair_for(net, q, frozenset()), idle)
    end = net.clock
    for (name, qubits), dur in zip(ops, durations):
        if any(q.slot != 0 for q in qubits):
            for node in {q.node for q in qubits}:
                net.anchors[node] = end - (total - dur)
    return outcomes


def timed_gate(
    net: NetworkState,
    name: str,
    qubits: Sequence[QubitId],
    rng: np.random.Generator,
) -> None:
    """Run a single gate as its own layer."""
    apply_ops(net, [(name, qubits)], rng)


def timed_measure(
    net: NetworkState, qubit: QubitId, rng: np.random.Generator, basis: str = "z"
) -> int:
    """Destructive electron readout in the z or x basis."""
    name = {"z": "measure", "x": "measure_x"}[basis]
    return apply_ops(net, [(name, [qubit])], rng)[qubit]


def parallel_links(
    net: NetworkState,
    pairs: Sequence[tuple[int, int]],
    rng: np.random.Generator,
) -> list[LinkResult]:
    """Generate heralded electron-electron links on node-disjoint pairs.

    Attempt counts are geometric with success probability p_re, one draw
    per pair in argument order. Each link occupies both electrons for
    attempts * t_re; carbons on linking nodes decay with the RE constants
    for exactly that window. The noisy pair state appears only when its
    link completes (decay of everything else is charged segment by
    segment, which is exact because the idle channels form a semigroup).
    Both nodes' decoupling grids restart at their link's completion.
    """
    seen: set[int] = set()
    for a, b in pairs:
        if a == b or {a, b} & seen:
            raise ValueError("link pairs must touch disjoint nodes")
        seen |= {a, b}
        for node in (a, b):
            if electron(node) in net.register:
                raise ValueError(f"electron of node {node} is still occupied")
    if net.scope is not None and not seen <= net.scope:
        raise ValueError("link touches nodes outside the running track")
    draws = [int(rng.geometric(net.profile.p_re)) for _ in pairs]
    t_re = net.profile.t_re
    finish = [n * t_re for n in draws]
    order = sorted(range(len(pairs)), key=lambda i: finish[i])
    start = net.clock
    elapsed = 0.0
    results: dict[int, LinkResult] = {}
    pending = set(range(len(pairs)))
    for i in order:
        seg = finish[i] - elapsed
        re_nodes = frozenset(n for j in pending for n in pairs[j])
        advance(net, seg, re_nodes=re_nodes)
        elapsed = finish[i]
        a, b = pairs[i]
        qpair = (electron(a), electron(b))
        net.register.allocate_joint(qpair, re_bell_source(net.profile.p_n))
        results[i] = LinkResult(qubits=qpair, attempts=draws[i], duration=finish[i])
        net.anchors[a] = net.anchors[b] = start + finish[i]
        net.links_generated += 1
        pending.remove(i)
    return [results[i] for i in range(len(pairs))]


def run_tracks(
    net: NetworkState,
    tracks: Sequence[tuple[Iterable[int], Callable[[], None]]],
) -> list[float]:
    """Run independent per-node-group pipelines over the same wall-clock span.

    Each track is ``(nodes, body)``. Bodies execute in list order (which
    fixes the RNG draw sequence) but each one starts at the instant of this
    call, may only operate on its own nodes, and charges decoherence only
    to their qubits. Afterwards the slowest finish time becomes the clock
    and every faster track's qubits idle out the gap, so the net effect is
    the tracks evolving concurrently. Valid because disjoint node groups
    share no qubits and no decoherence terms until the caller reconnects
    them.

    Returns each track's own finish time.
    """
    groups = [frozenset(nodes) for nodes, _ in tracks]
    for i, g in enumerate(groups):
        if not g:
            raise ValueError("a track needs at least one node")
        for h in groups[:i]:
            if g & h:
                raise ValueError("tracks must cover disjoint node sets")
    if net.scope is not None:
        raise ValueError("tracks cannot nest")
    t0 = net.clock
    finishes: list[float] = []
    try:
        for g, (_, body) in zip(groups, tracks):
            net.clock = t0
            net.scope = set(g)
            body()
            finishes.append(net.clock)
    finally:
        net.scope = None
    t_end = max(finishes, default=t0)
    for g, fin in zip(groups, finishes):
        if fin < t_end:
            net.clock = fin
            net.scope = set(g)
            try:
                advance(net, t_end - fin)
            finally:
                net.scope = None
    net.clock = t_end
    return finishes


def generate_link(
    net: NetworkState, a: int, b: int, rng: np.random.Generator
) -> LinkResult:
    """Generate one heralded link between the electrons of nodes a and b."""
    return parallel_links(net, [(a, b)], rng)[0]
