"""Dense state-vector engine.

Qubits are addressed 1-based and qubit 1 is the most significant bit of the
basis index, so ``|b1 b2 ... bn>`` lives at index ``sum(b_i * 2**(n - i))``.
Every operation returns a new :class:`StateVector`; inputs are never mutated.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import sqrt
from typing import Sequence

import numpy as np

NORM_TOL = 1e-10
PRESERVE_TOL = 1e-12
ZERO_PROB = 1e-14

_INV_SQRT2 = 1 / sqrt(2)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * _INV_SQRT2

PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state of ``num_qubits`` qubits as a read-only amplitude array."""

    num_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        if self.num_qubits < 0:
            raise ValueError("num_qubits must be >= 0")
        amps = _frozen(np.asarray(self.amps).reshape(-1))
        if amps.shape[0] != 2**self.num_qubits:
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes, got {amps.shape[0]}"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_amplitudes(cls, amps: Sequence[complex] | np.ndarray) -> "StateVector":
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        n = int(amps.shape[0]).bit_length() - 1
        if 2**n != amps.shape[0]:
            raise ValueError("amplitude count must be a power of two")
        return cls(n, amps)

    @classmethod
    def scalar(cls) -> "StateVector":
        """The 0-qubit state, identity element of :func:`tensor`."""
        return cls(0, np.ones(1, dtype=complex))

    @property
    def dim(self) -> int:
        return self.amps.shape[0]

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to ``[2] * n`` with axis ``k`` = qubit ``k + 1``."""
        return self.amps.reshape([2] * self.num_qubits) if self.num_qubits else self.amps

    def nonzero_terms(self, tol: float = 1e-12) -> dict[str, complex]:
        """Map bitstring -> amplitude for every amplitude larger than ``tol``."""
        out = {}
        for idx in np.flatnonzero(np.abs(self.amps) > tol):
            out[format(int(idx), f"0{self.num_qubits}b") if self.num_qubits else ""] = complex(
                self.amps[idx]
            )
        return out

    def allclose(self, other: "StateVector", atol: float = 1e-12) -> bool:
        return self.num_qubits == other.num_qubits and bool(
            np.allclose(self.amps, other.amps, rtol=0, atol=atol)
        )


class BellOutcome(Enum):
    """Bell-basis measurement results, in canonical table order."""

    PhiPlus = "phi+"
    PhiMinus = "phi-"
    PsiPlus = "psi+"
    PsiMinus = "psi-"

    @property
    def token(self) -> str:
        return self.value

    @classmethod
    def from_token(cls, token: str) -> "BellOutcome":
        try:
            return cls(token.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown Bell outcome {token!r}; expected one of phi+ phi- psi+ psi-"
            ) from None

    def vector(self) -> np.ndarray:
        return _BELL_VECTORS[self]


BELL_OUTCOMES = tuple(BellOutcome)

_BELL_VECTORS = {
    BellOutcome.PhiPlus: _frozen(np.array([1, 0, 0, 1]) * _INV_SQRT2),
    BellOutcome.PhiMinus: _frozen(np.array([1, 0, 0, -1]) * _INV_SQRT2),
    BellOutcome.PsiPlus: _frozen(np.array([0, 1, 1, 0]) * _INV_SQRT2),
    BellOutcome.PsiMinus: _frozen(np.array([0, 1, -1, 0]) * _INV_SQRT2),
}


def bell_state(outcome: BellOutcome) -> StateVector:
    return StateVector(2, outcome.vector())


def _check_qubit(s: StateVector, q: int, name: str = "qubit") -> int:
    if not isinstance(q, (int, np.integer)) or not 1 <= q <= s.num_qubits:
        raise ValueError(f"{name} index {q!r} out of range 1..{s.num_qubits}")
    return int(q) - 1


def make_basis_state(n: int, bits: Sequence[int]) -> StateVector:
    if n < 0:
        raise ValueError("n must be >= 0")
    bits = list(bits)
    if len(bits) != n:
        raise ValueError(f"expected {n} bits, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("bits must be 0 or 1")
    idx = 0
    for b in bits:
        idx = (idx << 1) | b
    amps = np.zeros(2**n, dtype=complex)
    amps[idx] = 1.0
    return StateVector(n, amps)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """``a (x) b`` with ``a``'s qubits as the most significant block."""
    return StateVector(a.num_qubits + b.num_qubits, np.kron(a.amps, b.amps))


def tensor_all(states: Sequence[StateVector]) -> StateVector:
    out = StateVector.scalar()
    for s in states:
        out = tensor(out, s)
    return out


def _check_perm(perm: Sequence[int], n: int) -> list[int]:
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(1, n + 1)):
        raise ValueError(f"{perm} is not a permutation of 1..{n}")
    return perm


def reorder_qubits(s: StateVector, perm: Sequence[int]) -> StateVector:
    """Output qubit ``k`` carries input qubit ``perm[k-1]``.

    Equivalently the amplitude of ``|b_perm(1) ... b_perm(n)>`` in the output
    equals the amplitude of ``|b_1 ... b_n>`` in the input.
    """
    perm = _check_perm(perm, s.num_qubits)
    if s.num_qubits == 0:
        return s
    t = np.transpose(s.tensor(), [p - 1 for p in perm])
    return StateVector(s.num_qubits, t.reshape(-1))


def inverse_perm(perm: Sequence[int]) -> list[int]:
    inv = [0] * len(perm)
    for k, p in enumerate(perm, start=1):
        inv[p - 1] = k
    return inv


def is_unitary(g: np.ndarray, tol: float = NORM_TOL) -> bool:
    g = np.asarray(g, dtype=complex)
    return g.shape == (2, 2) and bool(
        np.allclose(g.conj().T @ g, I2, rtol=0, atol=tol)
    )


def apply_1q(s: StateVector, q: int, g: np.ndarray) -> StateVector:
    axis = _check_qubit(s, q)
    g = np.asarray(g, dtype=complex)
    if not is_unitary(g):
        raise ValueError("gate is not a 2x2 unitary")
    t = np.tensordot(g, s.tensor(), axes=([1], [axis]))
    t = np.moveaxis(t, 0, axis)
    return StateVector(s.num_qubits, t.reshape(-1))


def apply_cnot(s: StateVector, control: int, target: int) -> StateVector:
    c = _check_qubit(s, control, "control")
    t = _check_qubit(s, target, "target")
    if c == t:
        raise ValueError("control and target must differ")
    arr = np.array(s.tensor())
    sel1 = [slice(None)] * s.num_qubits
    sel1[c] = 1
    sub = arr[tuple(sel1)]
    # target axis shifts down by one once the control axis is indexed away
    t_sub = t - 1 if t > c else t
    arr[tuple(sel1)] = np.flip(sub, axis=t_sub)
    return StateVector(s.num_qubits, arr.reshape(-1))


def bell_amplitudes(s: StateVector, qa: int, qb: int) -> np.ndarray:
    """Unnormalized projected remainders for all four outcomes, shape (4, 2**(n-2))."""
    a = _check_qubit(s, qa, "qa")
    b = _check_qubit(s, qb, "qb")
    if a == b:
        raise ValueError("Bell projection needs two distinct qubits")
    t = np.moveaxis(s.tensor(), (a, b), (0, 1)).reshape(4, -1)
    basis = np.stack([o.vector() for o in BELL_OUTCOMES])
    return basis.conj() @ t


def bell_project(
    s: StateVector, qa: int, qb: int, outcome: BellOutcome
) -> tuple[float, StateVector | None]:
    """Project qubits ``(qa, qb)`` onto a Bell state and drop them from the register.

    Returns ``(probability, collapsed)``. ``collapsed`` is ``None`` when the
    outcome has probability below 1e-14. Remaining qubits keep their order.
    """
    a = _check_qubit(s, qa, "qa")
    b = _check_qubit(s, qb, "qb")
    if a == b:
        raise ValueError("Bell projection needs two distinct qubits")
    t = np.moveaxis(s.tensor(), (a, b), (0, 1)).reshape(4, -1)
    rest = outcome.vector().conj() @ t
    prob = float(np.sum(np.abs(rest) ** 2))
    if prob < ZERO_PROB:
        return prob, None
    return prob, StateVector(s.num_qubits - 2, rest / sqrt(prob))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    num_qubits: int
    entries: np.ndarray

    def __post_init__(self):
        m = _frozen(self.entries)
        d = 2**self.num_qubits
        if m.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got {m.shape}")
        if not np.allclose(m, m.conj().T, rtol=0, atol=NORM_TOL):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1) > NORM_TOL:
            raise ValueError("density matrix trace is not 1")
        if np.linalg.eigvalsh(m).min() < -1e-9:
            raise ValueError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def fidelity_with(self, psi: StateVector) -> float:
        """``<psi| rho |psi>`` for a pure target."""
        if psi.num_qubits != self.num_qubits:
            raise ValueError("register size mismatch")
        return float(np.real(np.vdot(psi.amps, self.entries @ psi.amps)))

    def marginal(self, keep: Sequence[int]) -> "DensityMatrix":
        """Partial trace of this matrix onto the ordered 1-based subset ``keep``."""
        n = self.num_qubits
        keep = _check_subset(keep, n)
        drop = [q for q in range(n) if q not in keep]
        t = self.entries.reshape([2] * (2 * n))
        order = keep + drop + [n + q for q in keep] + [n + q for q in drop]
        t = np.transpose(t, order)
        dk, dd = 2 ** len(keep), 2 ** len(drop)
        t = t.reshape(dk, dd, dk, dd)
        return DensityMatrix(len(keep), np.einsum("ajbj->ab", t))

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        return cls(n, np.eye(2**n, dtype=complex) / 2**n)


def _check_subset(keep: Sequence[int], n: int) -> list[int]:
    keep = [int(q) for q in keep]
    if not keep:
        raise ValueError("keep must be non-empty")
    if len(set(keep)) != len(keep):
        raise ValueError("keep contains duplicates")
    if any(not 1 <= q <= n for q in keep):
        raise ValueError(f"keep indices must lie in 1..{n}")
    return [q - 1 for q in keep]


def reduced_density(s: StateVector, keep: Sequence[int]) -> DensityMatrix:
    axes = _check_subset(keep, s.num_qubits)
    drop = [q for q in range(s.num_qubits) if q not in axes]
    m = np.transpose(s.tensor(), axes + drop).reshape(2 ** len(axes), -1)
    return DensityMatrix(len(axes), m @ m.conj().T)


def fidelity_mod_phase(a: StateVector, b: StateVector) -> float:
    if a.num_qubits != b.num_qubits:
        raise ValueError("register size mismatch")
    f = abs(np.vdot(a.amps, b.amps)) ** 2
    return float(min(max(f, 0.0), 1.0))
