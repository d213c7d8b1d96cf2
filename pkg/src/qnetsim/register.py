"""Dense density-matrix engine over lazily merged tensor factors.

Qubits live in small independent factors, one density matrix per group of
qubits that have interacted. Factors merge on demand when an operation spans
several of them and shrink when qubits are measured out or discarded. That
keeps matrix dimensions at 2^k for the handful of qubits that are actually
entangled at any moment instead of the whole register.

All operators and states are complex128. Trace and hermiticity are checked
after every state-changing call; positivity is checked on demand via
:meth:`FactoredRegister.check_state` because eigendecompositions are too
expensive to run inside Monte Carlo loops.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple, Sequence

import numpy as np

TRACE_ATOL = 1e-10
HERM_ATOL = 1e-10
EIG_ATOL = 1e-10
# Measurement branches below this probability are numerical artifacts,
# selecting one is a hard error rather than renormalized noise.
BRANCH_FLOOR = 1e-15


class InvariantViolation(RuntimeError):
    """A density-matrix invariant (trace, hermiticity, positivity) failed."""


class QubitId(NamedTuple):
    """Address of a qubit: node index plus slot within the node.

    Slot 0 is the optically active electron, slots >= 1 are carbon memories.
    Negative node indices are free for bookkeeping qubits that live outside
    the network, e.g. noiseless reference halves of a Choi state.
    """

    node: int
    slot: int


ID2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
CZ = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def _embed(op: np.ndarray, positions: Sequence[int], k: int) -> np.ndarray:
    """Expand ``op`` acting on the given factor positions to all k qubits."""
    m = len(positions)
    if m == k and tuple(positions) == tuple(range(k)):
        return op
    full = np.kron(op, np.eye(2 ** (k - m), dtype=complex))
    # ``full`` addresses qubits in order (positions..., rest...); permute its
    # tensor axes back into factor order.
    rest = [i for i in range(k) if i not in positions]
    order = np.array(list(positions) + rest)
    inv = np.argsort(order)
    axes = list(inv) + [k + i for i in inv]
    full = full.reshape([2] * (2 * k)).transpose(axes)
    return full.reshape(2**k, 2**k)


class Factor:
    """One density matrix over an ordered tuple of qubits."""

    __slots__ = ("qubits", "rho")

    def __init__(self, qubits: Sequence[QubitId], rho: np.ndarray):
        self.qubits = list(qubits)
        self.rho = rho


class FactoredRegister:
    """Mutable register of qubits with factored density-matrix state.

    Parameters
    ----------
    max_factor_qubits:
        Hard cap on factor width. Merging past it raises ``ValueError``;
        dense simulation beyond ~2^8 is almost certainly a protocol bug.
    """

    def __init__(self, max_factor_qubits: int = 8):
        self.max_factor_qubits = max_factor_qubits
        self._factors: dict[QubitId, Factor] = {}

    @property
    def qubits(self) -> list[QubitId]:
        """All currently allocated qubits."""
        return list(self._factors)

    def __contains__(self, qubit: QubitId) -> bool:
        return qubit in self._factors

    def allocate(self, qubit: QubitId, bit: int = 0) -> None:
        """Add a fresh qubit in the computational state |bit>."""
        if qubit in self._factors:
            raise ValueError(f"{qubit} is already allocated")
        rho = np.zeros((2, 2), dtype=complex)
        rho[bit, bit] = 1.0
        self._factors[qubit] = Factor([qubit], rho)

    def allocate_joint(self, qubits: Sequence[QubitId], state: np.ndarray) -> None:
        """Add several fresh qubits in a joint state.

        ``state`` is either a normalized statevector of length 2^m or a
        density matrix of shape (2^m, 2^m); it is validated either way.
        """
        qubits = list(qubits)
        if len(set(qubits)) != len(qubits):
            raise ValueError("duplicate qubits in joint allocation")
        for q in qubits:
            if q in self._factors:
                raise ValueError(f"{q} is already allocated")
        dim = 2 ** len(qubits)
        state = np.asarray(state, dtype=complex)
        if state.shape == (dim,):
            norm = float(np.real(np.vdot(state, state)))
            if abs(norm - 1.0) > TRACE_ATOL:
                raise InvariantViolation(f"statevector norm {norm} != 1")
            rho = np.outer(state, state.conj())
        elif state.shape == (dim, dim):
            rho = state.copy()
        else:
            raise ValueError(f"state shape {state.shape} does not match {len(qubits)} qubits")
        factor = Factor(qubits, rho)
        self._check_basic(factor)
        for q in qubits:
            self._factors[q] = factor

    def _factor(self, qubit: QubitId) -> Factor:
        try:
            return self._factors[qubit]
        except KeyError:
            raise KeyError(f"{qubit} is not allocated") from None

    def _merge(self, qubits: Sequence[QubitId]) -> Factor:
        factors: list[Factor] = []
        for q in qubits:
            f = self._factor(q)
            if f not in factors:
                factors.append(f)
        if len(factors) == 1:
            return factors[0]
        width = sum(len(f.qubits) for f in factors)
        if width > self.max_factor_qubits:
            raise ValueError(f"merge would create a {width}-qubit factor")
        rho = factors[0].rho
        merged = list(factors[0].qubits)
        for f in factors[1:]:
            rho = np.kron(rho, f.rho)
            merged.extend(f.qubits)
        out = Factor(merged, rho)
        for q in merged:
            self._factors[q] = out
        return out

    def _check_basic(self, factor: Factor) -> None:
        tr = complex(np.trace(factor.rho))
        if abs(tr - 1.0) > TRACE_ATOL:
            raise InvariantViolation(f"trace deviates from 1 by {abs(tr - 1.0):.3e}")
        herm = float(np.abs(factor.rho - factor.rho.conj().T).max())
        if herm > HERM_ATOL:
            raise InvariantViolation(f"hermiticity defect {herm:.3e}")

    def _op_view(self, f: Factor, qubits: Sequence[QubitId]) -> tuple[np.ndarray, list[int], int]:
        """Permute f.rho so the row/column axes of ``qubits`` come first.

        Returns the state as a (2^m, 2^(k-m), 2^m, 2^(k-m)) array plus the
        permutation needed to undo the move. Lets operators contract against
        a fixed leading axis instead of being embedded to full width.
        """
        k = len(f.qubits)
        pos = [f.qubits.index(q) for q in qubits]
        rest = [i for i in range(k) if i not in pos]
        perm = pos + rest
        m = len(pos)
        rt = f.rho.reshape([2] * (2 * k))
        if perm != list(range(k)):
            rt = rt.transpose(perm + [k + i for i in perm])
        return rt.reshape(2**m, 2 ** (k - m), 2**m, 2 ** (k - m)), perm, k

    @staticmethod
    def _op_unview(rt: np.ndarray, perm: list[int], k: int) -> np.ndarray:
        inv = list(np.argsort(perm))
        rt = rt.reshape([2] * (2 * k))
        if inv != list(range(k)):
            rt = rt.transpose(inv + [k + i for i in inv])
        return rt.reshape(2**k, 2**k)

    @staticmethod
    def _conjugate(op: np.ndarray, rt: np.ndarray) -> np.ndarray:
        """op @ rho @ op^dagger on the leading row/column axes of ``rt``."""
        tmp = np.tensordot(op, rt, axes=([1], [0]))
        return np.tensordot(tmp, op.conj(), axes=([2], [1])).transpose(0, 1, 3, 2)

    def apply_unitary(self, u: np.ndarray, qubits: Sequence[QubitId]) -> None:
        """Apply a unitary on the given qubits, merging factors as needed."""
        qubits = list(qubits)
        f = self._merge(qubits)
        rt, perm, k = self._op_view(f, qubits)
        out = self._conjugate(np.asarray(u, dtype=complex), rt)
        f.rho = self._op_unview(out, perm, k)
        self._check_basic(f)

    def apply_channel(self, kraus_ops: Iterable[np.ndarray], qubits: Sequence[QubitId]) -> None:
        """Apply a CPTP map given by Kraus operators on the given qubits."""
        qubits = list(qubits)
        f = self._merge(qubits)
        rt, perm, k = self._op_view(f, qubits)
        out = np.zeros_like(rt)
        for op in kraus_ops:
            out += self._conjugate(np.asarray(op, dtype=complex), rt)
        f.rho = self._op_unview(out, perm, k)
        self._check_basic(f)

    def measure_z(self, qubit: QubitId, rng: np.random.Generator) -> int:
        """Projective Z measurement; the qubit is removed from the register.

        Returns the sampled outcome (0 or 1). The surviving qubits of the
        factor are projected onto the sampled branch and renormalized.
        """
        f = self._factor(qubit)
        k = len(f.qubits)
        p = f.qubits.index(qubit)
        diag = np.real(np.diagonal(f.rho)).reshape([2] * k)
        other_axes = tuple(a for a in range(k) if a != p)
        p1 = float(diag.sum(axis=other_axes)[1]) if other_axes else float(diag[1])
        p1 = min(max(p1, 0.0), 1.0)
        outcome = 1 if rng.random() < p1 else 0
        prob = p1 if outcome == 1 else 1.0 - p1
        if prob < BRANCH_FLOOR:
            raise InvariantViolation(
                f"measurement selected a branch of probability {prob:.3e}"
            )
        rt = f.rho.reshape([2] * (2 * k))
        sub = np.take(rt, outcome, axis=p)
        sub = np.take(sub, outcome, axis=k - 1 + p)
        del self._factors[qubit]
        if k == 1:
            return outcome
        f.qubits.remove(qubit)
        f.rho = sub.reshape(2 ** (k - 1), 2 ** (k - 1)) / prob
        self._check_basic(f)
        return outcome

    def discard(self, qubit: QubitId) -> None:
        """Trace out a qubit and drop it from the register."""
        f = self._factor(qubit)
        k = len(f.qubits)
        del self._factors[qubit]
        if k == 1:
            return
        p = f.qubits.index(qubit)
        rt = f.rho.reshape([2] * (2 * k))
        traced = np.trace(rt, axis1=p, axis2=k + p)
        f.qubits.remove(qubit)
        f.rho = traced.reshape(2 ** (k - 1), 2 ** (k - 1))
        self._check_basic(f)

    def reduced(self, qubits: Sequence[QubitId]) -> np.ndarray:
        """Reduced density matrix over ``qubits``, in the order given."""
        qubits = list(qubits)
        if len(set(qubits)) != len(qubits):
            raise ValueError("duplicate qubits requested")
        factors: list[Factor] = []
        for q in qubits:
            f = self._factor(q)
            if f not in factors:
                factors.append(f)
        rho = factors[0].rho
        order = list(factors[0].qubits)
        for f in factors[1:]:
            rho = np.kron(rho, f.rho)
            order.extend(f.qubits)
        k = len(order)
        keep = [order.index(q) for q in qubits]
        rest = [i for i in range(k) if i not in keep]
        axes = keep + rest + [k + i for i in keep] + [k + i for i in rest]
        rt = rho.reshape([2] * (2 * k)).transpose(axes)
        m = len(keep)
        rt = rt.reshape(2**m, 2 ** (k - m), 2**m, 2 ** (k - m))
        return np.einsum("ajbj->ab", rt)

    def fidelity_pure(self, qubits: Sequence[QubitId], target: np.ndarray) -> float:
        """Fidelity <t|rho|t> of the reduced state against a pure target."""
        target = np.asarray(target, dtype=complex)
        dim = 2 ** len(qubits)
        if target.shape != (dim,):
            raise ValueError(f"target must be a statevector of length {dim}")
        red = self.reduced(qubits)
        return float(np.real(target.conj() @ red @ target))

    def check_state(self) -> None:
        """Validate trace, hermiticity and positivity of every factor."""
        seen: list[Factor] = []
        for f in self._factors.values():
            if f in seen:
                continue
            seen.append(f)
            self._check_basic(f)
            lo = float(np.linalg.eigvalsh(f.rho)[0])
            if lo < -EIG_ATOL:
                raise InvariantViolation(f"negative eigenvalue {lo:.3e}")
