"""Recompute the frozen reference values used in tests/test_oracle.py.

Everything here works on dense 3N-qubit arrays with explicit Bell bras and
explicit Pauli matrices. Only the channel builder and the seeded input
generator come from the package.
"""
import itertools

import numpy as np

from mpteleport.channel import build_channel
from mpteleport.protocol import random_generic_inputs

PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
}
BELL = [np.array(v) / np.sqrt(2) for v in ([1, 0, 0, 1], [1, 0, 0, -1], [0, 1, 1, 0], [0, 1, -1, 0])]
FIX = "IZXY"  # phi+, phi-, psi+, psi-


def kron(vs):
    out = np.array([1.0 + 0j])
    for v in vs:
        out = np.kron(out, v)
    return out


def joint_tensor(inputs, kind="entangled"):
    N = len(inputs)
    psi = np.kron(kron([[q.a, q.b] for q in inputs]), build_channel(N, kind).amps)
    return psi.reshape([2] * (3 * N))


def grouped(inputs, measured, rest, kind="entangled"):
    """Rows: measured (A_i, Q_i) pairs; middle: the other pairs; columns: receiver."""
    N = len(inputs)
    t = joint_tensor(inputs, kind)
    pair = lambda i: (i - 1, N + i - 1)
    order = [ax for i in measured for ax in pair(i)] + [ax for i in rest for ax in pair(i)]
    order += list(range(2 * N, 3 * N))
    return np.transpose(t, order).reshape(4 ** len(measured), 4 ** len(rest), 2**N)


def withheld_density(inputs, withheld, corrected, kind="entangled"):
    N = len(inputs)
    parts = [i for i in range(1, N + 1) if i not in withheld]
    m = grouped(inputs, parts, withheld, kind)
    rho = np.zeros((2**N, 2**N), complex)
    for outs in itertools.product(range(4), repeat=len(parts)):
        chi = np.tensordot(kron([BELL[o].conj() for o in outs]), m, axes=(0, 0))
        if corrected:
            ops = ["I"] * N
            for i, o in zip(parts, outs):
                ops[i - 1] = FIX[o]
            u = np.array([[1.0 + 0j]])
            for op in ops:
                u = np.kron(u, PAULI[op])
            chi = chi @ u.T
        rho += chi.T @ chi.conj()
    return rho


def stolen_fidelity(inputs, outs, kind="entangled"):
    N = len(inputs)
    m = grouped(inputs, list(range(1, N + 1)), [], kind)[:, 0, :]
    chi = kron([BELL[o].conj() for o in outs]) @ m
    chi = chi / np.linalg.norm(chi)
    u = np.array([[1.0 + 0j]])
    for o in outs[:-1]:
        u = np.kron(u, PAULI[FIX[o]])
    u = np.kron(u, np.eye(2))
    t = (u @ chi).reshape(2 ** (N - 1), 2)
    rho = t @ t.conj().T
    v = kron([[q.a, q.b] for q in inputs[:-1]])
    return float(np.vdot(v, rho @ v).real)


def fidelity(rho, inputs):
    v = kron([[q.a, q.b] for q in inputs])
    return float(np.vdot(v, rho @ v).real)


def main():
    print("withheld senders, inputs random_generic_inputs(N, 7): (corrected, uncorrected)")
    for N, w in [(2, (1,)), (2, (2,)), (3, (2,)), (3, (1, 3))]:
        inp = random_generic_inputs(N, 7)
        vals = tuple(fidelity(withheld_density(inp, w, c), inp) for c in (True, False))
        print(f"  N={N} withheld={w}: {vals!r}")
    print("stolen qubits, inputs random_generic_inputs(N, 7)")
    for N, outs in [(2, (0, 0)), (3, (0, 0, 0)), (3, (3, 1, 2))]:
        inp = random_generic_inputs(N, 7)
        print(f"  N={N} outcomes={outs}: {stolen_fidelity(inp, outs)!r}")


if __name__ == "__main__":
    main()
