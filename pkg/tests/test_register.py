"""Engine-level tests: factor bookkeeping, gates, measurement, traces."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnetsim.register import (
    CNOT,
    CZ,
    HADAMARD,
    PAULI_X,
    SWAP,
    FactoredRegister,
    InvariantViolation,
    QubitId,
)

A = QubitId(0, 0)
B = QubitId(0, 1)
C = QubitId(1, 0)
D = QubitId(1, 1)

BELL = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


class FixedRng:
    """Stand-in for a Generator whose random() returns a chosen value."""

    def __init__(self, value: float):
        self.value = value

    def random(self) -> float:
        return self.value


class TestAllocation:
    def test_fresh_qubit_starts_in_zero(self):
        reg = FactoredRegister()
        reg.allocate(A)
        assert np.allclose(reg.reduced([A]), [[1, 0], [0, 0]])

    def test_double_allocation_rejected(self):
        reg = FactoredRegister()
        reg.allocate(A)
        with pytest.raises(ValueError, match="already allocated"):
            reg.allocate(A)

    def test_joint_statevector_allocation(self):
        reg = FactoredRegister()
        reg.allocate_joint([A, C], BELL)
        assert reg.fidelity_pure([A, C], BELL) == pytest.approx(1.0)

    def test_joint_density_allocation(self):
        reg = FactoredRegister()
        reg.allocate_joint([A, C], np.eye(4) / 4)
        assert np.allclose(reg.reduced([A]), np.eye(2) / 2)

    def test_unnormalized_statevector_rejected(self):
        reg = FactoredRegister()
        with pytest.raises(InvariantViolation):
            reg.allocate_joint([A, C], np.array([1, 0, 0, 1], dtype=complex))

    def test_shape_mismatch_rejected(self):
        reg = FactoredRegister()
        with pytest.raises(ValueError, match="shape"):
            reg.allocate_joint([A], BELL)


class TestUnitaries:
    def test_x_flips_population(self):
        reg = FactoredRegister()
        reg.allocate(A)
        reg.apply_unitary(PAULI_X, [A])
        assert np.allclose(reg.reduced([A]), [[0, 0], [0, 1]])

    def test_two_qubit_gate_merges_factors(self):
        reg = FactoredRegister()
        reg.allocate(A, bit=1)
        reg.allocate(C)
        reg.apply_unitary(CNOT, [A, C])
        target = np.zeros(4, dtype=complex)
        target[3] = 1.0
        assert reg.fidelity_pure([A, C], target) == pytest.approx(1.0)

    def test_qubit_order_respected_in_embedding(self):
        # CNOT with control listed second must act on the right qubit.
        reg = FactoredRegister()
        reg.allocate(A)
        reg.allocate(C, bit=1)
        reg.apply_unitary(CNOT, [C, A])
        target = np.zeros(4, dtype=complex)
        target[3] = 1.0  # |11> in (A, C) order
        assert reg.fidelity_pure([A, C], target) == pytest.approx(1.0)

    def test_hadamard_then_cnot_builds_bell(self):
        reg = FactoredRegister()
        reg.allocate(A)
        reg.allocate(C)
        reg.apply_unitary(HADAMARD, [A])
        reg.apply_unitary(CNOT, [A, C])
        assert reg.fidelity_pure([A, C], BELL) == pytest.approx(1.0)

    def test_swap_exchanges_states(self):
        reg = FactoredRegister()
        reg.allocate(A, bit=1)
        reg.allocate(B)
        reg.apply_unitary(SWAP, [A, B])
        assert np.allclose(reg.reduced([A]), [[1, 0], [0, 0]])
        assert np.allclose(reg.reduced([B]), [[0, 0], [0, 1]])

    def test_cz_is_symmetric(self):
        rng = np.random.default_rng(7)
        rho = random_density(4, rng)
        reg1 = FactoredRegister()
        reg1.allocate_joint([A, C], rho)
        reg1.apply_unitary(CZ, [A, C])
        reg2 = FactoredRegister()
        reg2.allocate_joint([A, C], rho)
        reg2.apply_unitary(CZ, [C, A])
        assert np.allclose(reg1.reduced([A, C]), reg2.reduced([A, C]), atol=1e-12)

    def test_factor_width_cap(self):
        reg = FactoredRegister(max_factor_qubits=2)
        reg.allocate_joint([A, B], BELL)
        reg.allocate(C)
        with pytest.raises(ValueError, match="factor"):
            reg.apply_unitary(CNOT, [B, C])


class TestMeasurement:
    def test_deterministic_outcomes(self):
        rng = np.random.default_rng(0)
        reg = FactoredRegister()
        reg.allocate(A)
        reg.allocate(C, bit=1)
        assert reg.measure_z(A, rng) == 0
        assert reg.measure_z(C, rng) == 1

    def test_measured_qubit_is_removed(self):
        rng = np.random.default_rng(0)
        reg = FactoredRegister()
        reg.allocate(A)
        reg.measure_z(A, rng)
        assert A not in reg
        with pytest.raises(KeyError):
            reg.reduced([A])

    def test_bell_measurement_collapses_partner(self):
        for seed in range(8):
            rng = np.random.default_rng(seed)
            reg = FactoredRegister()
            reg.allocate_joint([A, C], BELL)
            first = reg.measure_z(A, rng)
            assert reg.measure_z(C, rng) == first

    def test_outcome_statistics_follow_born_rule(self):
        rng = np.random.default_rng(42)
        plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
        hits = 0
        n = 2000
        for _ in range(n):
            reg = FactoredRegister()
            reg.allocate_joint([A], plus)
            hits += reg.measure_z(A, rng)
        assert abs(hits / n - 0.5) < 0.04

    def test_degenerate_branch_is_hard_error(self):
        eps = 1e-20
        rho = np.diag([1.0 - eps, eps]).astype(complex)
        reg = FactoredRegister()
        reg.allocate_joint([A], rho)
        with pytest.raises(InvariantViolation, match="branch"):
            reg.measure_z(A, FixedRng(eps / 2))


class TestDiscardAndReduction:
    def test_discard_traces_out(self):
        reg = FactoredRegister()
        reg.allocate_joint([A, C], BELL)
        reg.discard(A)
        assert A not in reg
        assert np.allclose(reg.reduced([C]), np.eye(2) / 2)

    def test_reduced_spans_independent_factors(self):
        reg = FactoredRegister()
        reg.allocate(A, bit=1)
        reg.allocate(C)
        rho = reg.reduced([C, A])
        expect = np.zeros((4, 4))
        expect[1, 1] = 1.0  # |01> in (C, A) order
        assert np.allclose(rho, expect)

    def test_reduced_rejects_duplicates(self):
        reg = FactoredRegister()
        reg.allocate(A)
        with pytest.raises(ValueError, match="duplicate"):
            reg.reduced([A, A])

    def test_fidelity_matches_overlap(self):
        rng = np.random.default_rng(3)
        rho = random_density(4, rng)
        reg = FactoredRegister()
        reg.allocate_joint([A, C], rho)
        assert reg.fidelity_pure([A, C], BELL) == pytest.approx(
            float(np.real(BELL.conj() @ rho @ BELL))
        )


class TestStateValidity:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_random_unitaries_keep_state_valid(self, seed):
        rng = np.random.default_rng(seed)
        reg = FactoredRegister()
        reg.allocate_joint([A, B], random_density(4, rng))
        reg.allocate(C)
        reg.apply_unitary(random_unitary(4, rng), [B, C])
        reg.apply_unitary(random_unitary(2, rng), [A])
        reg.check_state()

    def test_invalid_joint_state_rejected(self):
        bad = np.diag([0.7, 0.4]).astype(complex)  # trace 1.1
        reg = FactoredRegister()
        with pytest.raises(InvariantViolation, match="trace"):
            reg.allocate_joint([A], bad)
