"""Kraus-operator noise channels and the noisy entanglement source.

The decoherence model is generalized amplitude damping toward the maximally
mixed state (both relaxation directions equally likely) composed with pure
dephasing. Composing the two over the same interval reproduces the usual
exponential coherence decay exp(-t/T2) exactly, which is pinned by a test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence
from itertools import product

import numpy as np

from .register import FactoredRegister, ID2, PAULI_X, PAULI_Y, PAULI_Z, QubitId

COMPLETENESS_ATOL = 1e-12


def completeness_defect(operators) -> float:
    """Max-abs deviation of sum(K^dag K) from the identity."""
    dim = operators[0].shape[0]
    acc = np.zeros((dim, dim), dtype=complex)
    for op in operators:
        acc += op.conj().T @ op
    return float(np.abs(acc - np.eye(dim)).max())


@dataclass(frozen=True)
class KrausSet:
    """An immutable, completeness-checked collection of Kraus operators."""

    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        defect = completeness_defect(self.operators)
        if defect > COMPLETENESS_ATOL:
            raise ValueError(f"Kraus completeness defect {defect:.3e}")

    def __iter__(self):
        return iter(self.operators)

    def __len__(self) -> int:
        return len(self.operators)


def effective_t2bar(t1: float, t2: float) -> float:
    """Pure-dephasing timescale hidden inside a measured T2.

    Defined by 1/t2bar = 2/T2 - 1/T1 so that amplitude damping's own
    coherence decay exp(-t/(2 T1)) plus pure dephasing with this constant
    compose to exactly exp(-t/T2). Returns inf when T2 saturates 2*T1.
    """
    rate = 2.0 / t2 - (0.0 if math.isinf(t1) else 1.0 / t1)
    if rate < 0:
        raise ValueError(f"T2={t2} exceeds the 2*T1={2 * t1} limit")
    return math.inf if rate == 0 else 1.0 / rate


@dataclass(frozen=True)
class DecoherencePair:
    """A (T1, T2) pair in seconds; T1 may be math.inf."""

    t1: float
    t2: float

    def __post_init__(self):
        if self.t1 <= 0 or self.t2 <= 0:
            raise ValueError("decoherence times must be positive")
        if self.t2 > 2.0 * self.t1:
            raise ValueError(f"T2={self.t2} exceeds 2*T1={2 * self.t1}")

    @property
    def t2bar(self) -> float:
        return effective_t2bar(self.t1, self.t2)


def gad_kraus(gamma1: float) -> KrausSet:
    """Generalized amplitude damping with fixed point I/2.

    Args:
        gamma1: decay parameter 1 - exp(-t/T1), in [0, 1].

    Returns:
        Four Kraus operators, the damping and exciting branches each
        carrying weight 1/2 so populations relax toward 1/2.
    """
    if not 0.0 <= gamma1 <= 1.0:
        raise ValueError(f"gamma1={gamma1} outside [0, 1]")
    s = math.sqrt(0.5)
    keep = math.sqrt(max(0.0, 1.0 - gamma1))
    jump = math.sqrt(gamma1)
    k0 = s * np.array([[1, 0], [0, keep]], dtype=complex)
    k1 = s * np.array([[0, jump], [0, 0]], dtype=complex)
    k2 = s * np.array([[keep, 0], [0, 1]], dtype=complex)
    k3 = s * np.array([[0, 0], [jump, 0]], dtype=complex)
    return KrausSet((k0, k1, k2, k3))


def pd_kraus(gamma2: float) -> KrausSet:
    """Pure dephasing with off-diagonal factor sqrt(1 - gamma2).

    Args:
        gamma2: 1 - exp(-t/t2bar), in [0, 1].
    """
    if not 0.0 <= gamma2 <= 1.0:
        raise ValueError(f"gamma2={gamma2} outside [0, 1]")
    k0 = np.array([[1, 0], [0, math.sqrt(max(0.0, 1.0 - gamma2))]], dtype=complex)
    k1 = np.array([[0, 0], [0, math.sqrt(gamma2)]], dtype=complex)
    return KrausSet((k0, k1))


def idle_decoherence(
    register: FactoredRegister, qubit: QubitId, pair: DecoherencePair, duration: float
) -> None:
    """Apply GAD then PD to one idle qubit for the given duration."""
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    if duration == 0.0:
        return
    if not math.isinf(pair.t1):
        register.apply_channel(gad_kraus(-math.expm1(-duration / pair.t1)), [qubit])
    t2bar = pair.t2bar
    if not math.isinf(t2bar):
        register.apply_channel(pd_kraus(-math.expm1(-duration / t2bar)), [qubit])


@lru_cache(maxsize=None)
def two_qubit_depolarizing(p: float) -> KrausSet:
    """Two-qubit depolarizing channel as 16 Kraus operators.

    With probability p one of the 15 nonidentity Pauli products is applied,
    each with weight p/15. At p = 15/16 any input maps exactly to I/4.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    singles = (ID2, PAULI_X, PAULI_Y, PAULI_Z)
    ops = [math.sqrt(1.0 - p) * np.kron(ID2, ID2)]
    for i, (a, b) in enumerate(product(singles, repeat=2)):
        if i == 0:
            continue
        ops.append(math.sqrt(p / 15.0) * np.kron(a, b))
    return KrausSet(tuple(ops))


def depolarize_two_qubit(
    register: FactoredRegister, qubits: tuple[QubitId, QubitId], p: float
) -> None:
    """Depolarize a qubit pair in place."""
    register.apply_channel(two_qubit_depolarizing(p), list(qubits))


def noisy_measure(
    register: FactoredRegister, qubit: QubitId, p_m: float, rng: np.random.Generator
) -> int:
    """Z measurement whose record is wrong with probability p_m.

    The projection follows the Born rule; the reported bit is then flipped
    with probability p_m, so record and surviving branch disagree. This is
    identical to an X error immediately before a perfect measurement. Draw
    order (projection first, then the error flip) is part of the seeded
    reproducibility contract.
    """
    record = register.measure_z(qubit, rng)
    if rng.random() < p_m:
        record ^= 1
    return record


def re_bell_source(p_n: float) -> np.ndarray:
    """Density matrix produced by one heralded remote-entanglement round.

    The ideal output is (|01> + |10>)/sqrt(2); with probability p_n both
    electrons are instead left in |11>.
    """
    if not 0.0 <= p_n <= 1.0:
        raise ValueError(f"p_n={p_n} outside [0, 1]")
    psi = np.zeros(4, dtype=complex)
    psi[1] = psi[2] = 1.0 / math.sqrt(2.0)
    rho = (1.0 - p_n) * np.outer(psi, psi.conj())
    rho[3, 3] += p_n
    return rho


def quadrature_combine(times: Sequence[float]) -> float:
    """Combine independent dephasing timescales into one effective constant.

    Rates add in quadrature (root-sum-square), the right rule for
    independent Gaussian-envelope dephasing processes: T = (sum 1/T_i^2)^-1/2.
    """
    if len(times) == 0:
        raise ValueError("need at least one timescale")
    if any(t <= 0.0 for t in times):
        raise ValueError("timescales must be positive")
    return 1.0 / math.sqrt(sum(1.0 / (t * t) for t in times))
