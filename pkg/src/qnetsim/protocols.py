"""Entanglement protocols: teleported CNOT, GHZ generation, purification.

Everything here drives a :class:`~qnetsim.network.NetworkState` through
explicit timed operations, so fidelities come out of the density matrix and
durations out of the clock; nothing is estimated analytically.

Measurement-based fusion and parity checks follow the standard feed-forward
conventions: a fusion (bilateral copy onto a shared Bell pair, both halves
measured) succeeds deterministically up to a Pauli correction on one side,
while a verification (bilateral copy onto an ancilla pair that is then
consumed) post-selects on even parity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .network import (
    HardwareProfile,
    NetworkState,
    apply_ops,
    build_network,
    carbon,
    electron,
    generate_link,
    parallel_links,
    purified_profile,
    run_tracks,
    sync_nodes,
    timed_gate,
    timed_measure,
)
from .register import CNOT, QubitId, _embed
from .seeding import derive_stream

BELL_PHI = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2.0)

GHZ4 = np.zeros(16, dtype=complex)
GHZ4[0] = GHZ4[15] = 1.0 / math.sqrt(2.0)

# Choi target for a CNOT between the two memory carbons: references first,
# qubit order (ref_ctrl, ctrl, ref_tgt, tgt).
_OMEGA = np.kron(BELL_PHI, BELL_PHI)
CHOI_CNOT = _embed(CNOT, (1, 3), 4) @ _OMEGA


@dataclass(frozen=True)
class ProtocolOutcome:
    """Result of one protocol repetition.

    ``restarts`` counts full protocol restarts after a failed verification;
    local regeneration of a single pair during purification is not a
    restart. ``bell_pairs_used`` counts every heralded link consumed,
    including retries.
    """

    fidelity: float
    duration: float
    bell_pairs_used: int
    restarts: int


@dataclass(frozen=True)
class MetricPair:
    """Entanglement fidelity together with the average gate fidelity."""

    f_e: float
    f_av: float

    @classmethod
    def from_entanglement_fidelity(cls, f_e: float, dim: int = 4) -> "MetricPair":
        return cls(f_e=f_e, f_av=(dim * f_e + 1.0) / (dim + 1.0))


def link_efficiency(p_re: float, n_1e: float) -> float:
    """Expected links per memory 1/e time: attempt rate times lifetime."""
    return p_re * n_1e


def _entangle(
    net: NetworkState, pairs: Sequence[tuple[int, int]], rng: np.random.Generator
) -> list[tuple[QubitId, QubitId]]:
    """Heralded links plus the X that orients each pair to (|00>+|11>)/sqrt2."""
    links = parallel_links(net, pairs, rng)
    apply_ops(net, [("x", [lk.qubits[1]]) for lk in links], rng)
    return [lk.qubits for lk in links]


def _store(
    net: NetworkState,
    moves: Sequence[tuple[int, int]],
    rng: np.random.Generator,
) -> None:
    """Swap each node's electron into a carbon slot and free the electron."""
    ops = []
    for node, slot in moves:
        net.register.allocate(carbon(node, slot))
        ops.append(("swap", [electron(node), carbon(node, slot)]))
    apply_ops(net, ops, rng)
    for node, _ in moves:
        net.register.discard(electron(node))


def _unstore(
    net: NetworkState,
    moves: Sequence[tuple[int, int]],
    rng: np.random.Generator,
) -> None:
    """Swap stored carbon states back onto fresh electrons."""
    ops = []
    for node, slot in moves:
        net.register.allocate(electron(node))
        ops.append(("swap", [electron(node), carbon(node, slot)]))
    apply_ops(net, ops, rng)
    for node, slot in moves:
        net.register.discard(carbon(node, slot))


def _clear(net: NetworkState) -> None:
    for q in list(net.register.qubits):
        if q not in net.noiseless:
            net.register.discard(q)


def run_nonlocal_cnot(
    profile: HardwareProfile, rng: np.random.Generator
) -> ProtocolOutcome:
    """Teleported CNOT between the memory carbons of two linked nodes.

    Both carbons are first maximally entangled with noiseless reference
    qubits, so the returned fidelity is the entanglement fidelity F_e of
    the implemented channel against an ideal CNOT (control at node 0).
    """
    net = build_network(profile, 2)
    c_ctl, c_tgt = carbon(0), carbon(1)
    r_ctl, r_tgt = QubitId(-1, 0), QubitId(-1, 1)
    net.register.allocate_joint([r_ctl, c_ctl], BELL_PHI)
    net.register.allocate_joint([r_tgt, c_tgt], BELL_PHI)
    net.noiseless |= {r_ctl, r_tgt}

    (e_ctl, e_tgt), = _entangle(net, [(0, 1)], rng)
    # Both local halves run in the same circuit column; the measurement
    # dependence sits entirely in the terminal Pauli corrections (the X that
    # would precede the target CNOT commutes through it onto the carbon, and
    # an X in front of an X-basis readout is invisible).
    apply_ops(
        net, [("cnot", [c_ctl, e_ctl]), ("cnot", [e_tgt, c_tgt])], rng
    )
    m = apply_ops(
        net, [("measure", [e_ctl]), ("measure_x", [e_tgt])], rng
    )
    sync_nodes(net, c_ctl.node, c_tgt.node)
    corrections = []
    if m[e_ctl]:
        corrections.append(("x", [c_tgt]))
    if m[e_tgt]:
        corrections.append(("z", [c_ctl]))
    if corrections:
        apply_ops(net, corrections, rng)

    f_e = net.register.fidelity_pure([r_ctl, c_ctl, r_tgt, c_tgt], CHOI_CNOT)
    return ProtocolOutcome(
        fidelity=f_e,
        duration=net.clock,
        bell_pairs_used=net.links_generated,
        restarts=0,
    )


def _fuse(
    net: NetworkState,
    bus: tuple[QubitId, QubitId],
    corrections: Sequence[QubitId],
    rng: np.random.Generator,
) -> None:
    """Consume an electron Bell pair to fuse the two stored states.

    The slot-1 carbon at each bus node is copied onto its electron, both
    electrons are read out, and odd parity applies X to every qubit in
    ``corrections`` (the whole second state).
    """
    e_a, e_b = bus
    apply_ops(
        net,
        [("cnot", [carbon(e_a.node), e_a]), ("cnot", [carbon(e_b.node), e_b])],
        rng,
    )
    m = apply_ops(net, [("measure", [e_a]), ("measure", [e_b])], rng)
    sync_nodes(net, *{q.node for q in corrections})
    if (m[e_a] + m[e_b]) % 2:
        apply_ops(net, [("x", [q]) for q in corrections], rng)


def _parity_check(
    net: NetworkState,
    ancilla: tuple[QubitId, QubitId],
    targets: tuple[QubitId, QubitId],
    rng: np.random.Generator,
) -> bool:
    """Check a ZZ stabilizer of ``targets`` with an electron ancilla pair.

    Copies each target carbon onto its node's ancilla electron and reads
    both out; even parity (the noise-free outcome) means pass.
    """
    e_a, e_b = ancilla
    t_a, t_b = targets
    apply_ops(net, [("cnot", [t_a, e_a]), ("cnot", [t_b, e_b])], rng)
    m = apply_ops(net, [("measure", [e_a]), ("measure", [e_b])], rng)
    return (m[e_a] + m[e_b]) % 2 == 0


def _purify_round(
    net: NetworkState,
    edge: tuple[int, int],
    target_slot: int,
    park_slot: int,
    rng: np.random.Generator,
) -> bool:
    """One double-selection round on the pair stored at ``target_slot``.

    A first ancilla pair records the target's ZZ parity and is parked in
    carbons; a second ancilla pair then checks the parked pair's XX parity
    before its Z record is trusted. Consumes two links; returns pass/fail.
    """
    left, right = edge
    nodes = (left, right)

    _entangle(net, [edge], rng)
    apply_ops(
        net,
        [("cnot", [carbon(n, target_slot), electron(n)]) for n in nodes],
        rng,
    )
    _store(net, [(n, park_slot) for n in nodes], rng)

    _entangle(net, [edge], rng)
    apply_ops(
        net,
        [("cnot", [electron(n), carbon(n, park_slot)]) for n in nodes],
        rng,
    )
    mx = apply_ops(net, [("measure_x", [electron(n)]) for n in nodes], rng)
    x_even = (mx[electron(left)] + mx[electron(right)]) % 2 == 0

    # read the parked ancilla out in Z through fresh electrons
    for n in nodes:
        net.register.allocate(electron(n))
    apply_ops(
        net,
        [("cnot", [carbon(n, park_slot), electron(n)]) for n in nodes],
        rng,
    )
    mz = apply_ops(net, [("measure", [electron(n)]) for n in nodes], rng)
    for n in nodes:
        net.register.discard(carbon(n, park_slot))
    z_even = (mz[electron(left)] + mz[electron(right)]) % 2 == 0

    return x_even and z_even


def _purified_pair(
    net: NetworkState,
    edge: tuple[int, int],
    target_slot: int,
    park_slot: int,
    rounds: int,
    rng: np.random.Generator,
) -> None:
    """Store a link at ``target_slot`` and purify it, regenerating locally.

    A failed round throws the stored pair away and starts over from a fresh
    link; only this edge is touched, the rest of the network keeps waiting.
    """
    left, right = edge
    while True:
        _entangle(net, [edge], rng)
        _store(net, [(left, target_slot), (right, target_slot)], rng)
        ok = True
        for _ in range(rounds):
            if not _purify_round(net, edge, target_slot, park_slot, rng):
                ok = False
                break
        if ok:
            return
        net.register.discard(carbon(left, target_slot))
        net.register.discard(carbon(right, target_slot))


def _stored_pair_track(
    net: NetworkState,
    edge: tuple[int, int],
    slot: int,
    rng: np.random.Generator,
) -> Callable[[], None]:
    """Track body: link this edge and store it, on the edge's own timeline."""

    def body() -> None:
        _entangle(net, [edge], rng)
        _store(net, [(n, slot) for n in edge], rng)

    return body


def _store_two_pairs(net: NetworkState, rng: np.random.Generator) -> None:
    """Link the two node pairs and store each at its own herald."""
    a, b, c, d = net.nodes
    run_tracks(
        net,
        [
            ((a, b), _stored_pair_track(net, (a, b), 1, rng)),
            ((c, d), _stored_pair_track(net, (c, d), 1, rng)),
        ],
    )


def _run_plain(net: NetworkState, rng: np.random.Generator) -> int:
    """Three links, no verification: two stored pairs fused by a third."""
    a, b, c, d = net.nodes
    _store_two_pairs(net, rng)
    (bus,) = _entangle(net, [(a, c)], rng)
    _fuse(net, bus, corrections=[carbon(c), carbon(d)], rng=rng)
    return 0


def _run_modicum(net: NetworkState, rng: np.random.Generator) -> int:
    """Plain plus one ZZ verification on the remaining diagonal.

    The verification link is generated concurrently with the fusion link
    (all four electrons are free after storage), and the check's copy
    CNOTs share the fusion's circuit column since the node sets are
    disjoint. The check therefore reads the pre-correction parity; the
    conditional X on the checked carbon flips ZZ, so the accept condition
    is the measured parity XORed with the fusion outcome. On failure the
    corrections are skipped and everything restarts from scratch.
    """
    a, b, c, d = net.nodes
    restarts = 0
    while True:
        _store_two_pairs(net, rng)
        fuse_parity: list[int] = []
        ancilla: list[tuple[QubitId, QubitId]] = []

        def fuse_body() -> None:
            (bus,) = _entangle(net, [(a, c)], rng)
            e_a, e_c = bus
            apply_ops(
                net, [("cnot", [carbon(a), e_a]), ("cnot", [carbon(c), e_c])], rng
            )
            m = apply_ops(net, [("measure", [e_a]), ("measure", [e_c])], rng)
            fuse_parity.append((m[e_a] + m[e_c]) % 2)

        def link_body() -> None:
            ancilla.extend(_entangle(net, [(b, d)], rng))

        run_tracks(net, [((a, c), fuse_body), ((b, d), link_body)])
        sync_nodes(net, a, b, c, d)
        e_b, e_d = ancilla[0]
        apply_ops(
            net, [("cnot", [carbon(b), e_b]), ("cnot", [carbon(d), e_d])], rng
        )
        m = apply_ops(net, [("measure", [e_b]), ("measure", [e_d])], rng)
        if (m[e_b] + m[e_d] + fuse_parity[0]) % 2:
            _clear(net)
            restarts += 1
            continue
        if fuse_parity[0]:
            apply_ops(net, [("x", [carbon(c)]), ("x", [carbon(d)])], rng)
        return restarts


# Edges whose ZZ stabilizers are verified after the Expedient fusion. All
# three must pass; together with the two purified branches they certify
# every pairwise parity of the GHZ state.
_EXPEDIENT_CHECKS = ((1, 3), (0, 1), (2, 3))


def _run_expedient(net: NetworkState, rng: np.random.Generator) -> int:
    """Two doubly purified branches fused and then triple-checked.

    Branch pairs (a, b) and (c, d) each get two double-selection rounds;
    the fusion pair (a, c) gets one. After fusion, three GHZ parities are
    each checked with a freshly purified ancilla pair. Any failed check
    restarts the whole protocol; failed purification rounds only regenerate
    their own pair.
    """
    a, b, c, d = net.nodes
    restarts = 0
    while True:
        run_tracks(
            net,
            [
                ((a, b), lambda: _purified_pair(net, (a, b), 1, 2, rounds=2, rng=rng)),
                ((c, d), lambda: _purified_pair(net, (c, d), 1, 2, rounds=2, rng=rng)),
            ],
        )

        _purified_pair(net, (a, c), 2, 3, rounds=1, rng=rng)
        _unstore(net, [(a, 2), (c, 2)], rng)
        _fuse(
            net,
            (electron(a), electron(c)),
            corrections=[carbon(c), carbon(d)],
            rng=rng,
        )

        ok = True
        for left, right in _EXPEDIENT_CHECKS:
            _purified_pair(net, (left, right), 2, 3, rounds=1, rng=rng)
            _unstore(net, [(left, 2), (right, 2)], rng)
            if not _parity_check(
                net,
                (electron(left), electron(right)),
                (carbon(left), carbon(right)),
                rng,
            ):
                ok = False
                break
        if ok:
            return restarts
        _clear(net)
        restarts += 1


_GHZ_RUNNERS: dict[str, Callable[[NetworkState, np.random.Generator], int]] = {
    "plain": _run_plain,
    "modicum": _run_modicum,
    "expedient": _run_expedient,
}

GHZ_PROTOCOLS = tuple(_GHZ_RUNNERS)


def run_ghz(
    profile: HardwareProfile, protocol: str, rng: np.random.Generator
) -> ProtocolOutcome:
    """Distribute a four-party GHZ state onto the slot-1 memory carbons.

    ``protocol`` is one of plain, modicum, expedient. Returns the fidelity
    against (|0000> + |1111>)/sqrt(2) after all feed-forward, the wall-clock
    duration, links consumed and full restarts.
    """
    try:
        runner = _GHZ_RUNNERS[protocol]
    except KeyError:
        raise ValueError(
            f"unknown protocol {protocol!r}, expected one of {GHZ_PROTOCOLS}"
        ) from None
    net = build_network(profile, 4)
    restarts = runner(net, rng)
    shares = [carbon(n) for n in net.nodes]
    fidelity = net.register.fidelity_pure(shares, GHZ4)
    return ProtocolOutcome(
        fidelity=fidelity,
        duration=net.clock,
        bell_pairs_used=net.links_generated,
        restarts=restarts,
    )


def memory_profile(n_1e: float, base: HardwareProfile | None = None) -> HardwareProfile:
    """Purified hardware whose link-side carbon lifetime is n_1e attempts.

    Only the decay constants that act while a node is generating
    entanglement are clamped (T1 = T2 = n_1e * t_re); everything else keeps
    the base profile's values.
    """
    if n_1e <= 0:
        raise ValueError("n_1e must be positive")
    base = base if base is not None else purified_profile()
    lifetime = n_1e * base.t_re
    return base.with_overrides(
        name=f"memory-{n_1e:g}", t1n_re=lifetime, t2n_re=lifetime
    )


@dataclass(frozen=True)
class SweepPoint:
    """Aggregated teleported-CNOT statistics at one memory lifetime."""

    n_1e: float
    reps: int
    f_e: float
    f_e_stderr: float
    f_av: float
    f_av_stderr: float
    duration_p16: float
    duration_p50: float
    duration_p84: float


def sweep_memory_lifetime(
    n_values: Sequence[float],
    reps: int,
    master_seed: int,
    base: HardwareProfile | None = None,
) -> list[SweepPoint]:
    """Run the teleported CNOT at each memory lifetime and aggregate.

    Repetition r of point i uses the derived stream i * reps + r, so
    results are independent of execution order.
    """
    points = []
    for i, n_1e in enumerate(n_values):
        profile = memory_profile(n_1e, base)
        f_e = np.empty(reps)
        durations = np.empty(reps)
        for r in range(reps):
            rng = derive_stream(master_seed, i * reps + r)
            out = run_nonlocal_cnot(profile, rng)
            f_e[r] = out.fidelity
            durations[r] = out.duration
        f_av = (4.0 * f_e + 1.0) / 5.0
        p16, p50, p84 = np.percentile(durations, [16, 50, 84])
        points.append(
            SweepPoint(
                n_1e=float(n_1e),
                reps=reps,
                f_e=float(f_e.mean()),
                f_e_stderr=float(f_e.std(ddof=1) / math.sqrt(reps)),
                f_av=float(f_av.mean()),
                f_av_stderr=float(f_av.std(ddof=1) / math.sqrt(reps)),
                duration_p16=float(p16),
                duration_p50=float(p50),
                duration_p84=float(p84),
            )
        )
    return points
