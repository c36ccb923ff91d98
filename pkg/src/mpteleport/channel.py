"""Shared 2N-qubit channels: N Bell pairs, and the all-or-nothing variant.

Register layout follows the interleaved labelling where pair ``i`` occupies
qubits ``(i, N + i)``: qubits ``1..N`` go to the senders and ``N+1..2N`` to
the receiver.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .statevector import (
    BellOutcome,
    StateVector,
    apply_cnot,
    bell_state,
    reorder_qubits,
    tensor_all,
)

MAX_SENDERS = 10


class ChannelKind(Enum):
    Product = "product"
    Entangled = "entangled"

    @classmethod
    def parse(cls, value: "str | ChannelKind") -> "ChannelKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown channel kind {value!r}") from None


@dataclass(frozen=True)
class ChannelLayout:
    N: int
    kind: "ChannelKind | str"

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind.parse(self.kind))
        if self.N < 1:
            raise ValueError("need at least one sender")
        # no CNOTs exist for a single pair
        if self.N == 1 and self.kind is ChannelKind.Entangled:
            object.__setattr__(self, "kind", ChannelKind.Product)

    @property
    def sender_positions(self) -> tuple[int, ...]:
        return tuple(range(1, self.N + 1))

    @property
    def receiver_positions(self) -> tuple[int, ...]:
        return tuple(range(self.N + 1, 2 * self.N + 1))

    def build(self) -> StateVector:
        return build_channel(self.N, self.kind)


def _check_n(N: int, minimum: int) -> None:
    if not isinstance(N, (int, np.integer)) or N < minimum:
        raise ValueError(f"N must be an integer >= {minimum}, got {N!r}")
    if N > MAX_SENDERS:
        raise ValueError(f"N={N} exceeds the supported maximum of {MAX_SENDERS}")


def interleave_perm(N: int) -> list[int]:
    """Permutation taking pair-major order (1, N+1, 2, N+2, ...) to 1..2N."""
    return [2 * k - 1 for k in range(1, N + 1)] + [2 * k for k in range(1, N + 1)]


def build_product_channel(N: int) -> StateVector:
    _check_n(N, 1)
    pairs = tensor_all([bell_state(BellOutcome.PhiPlus)] * N)
    return reorder_qubits(pairs, interleave_perm(N))


def build_entangled_channel(N: int) -> StateVector:
    _check_n(N, 2)
    s = build_product_channel(N)
    for control in range(1, N):
        s = apply_cnot(s, control, 2 * N)
    return s


def build_channel(N: int, kind: "ChannelKind | str") -> StateVector:
    kind = ChannelKind.parse(kind)
    if kind is ChannelKind.Entangled and N != 1:
        return build_entangled_channel(N)
    return build_product_channel(N)


def _expected_bits(sender_bits: tuple[int, ...], kind: ChannelKind) -> tuple[int, ...]:
    N = len(sender_bits)
    if kind is ChannelKind.Product or N == 1:
        return sender_bits
    parity = sum(sender_bits[:-1]) % 2
    return sender_bits[:-1] + (sender_bits[-1] ^ parity,)


def verify_channel_structure(s: StateVector, N: int, kind: "ChannelKind | str") -> bool:
    """Check the bit-pattern rule and uniform amplitude ``2**(-N/2)`` of a channel."""
    kind = ChannelKind.parse(kind)
    if s.num_qubits != 2 * N:
        raise ValueError(f"expected a {2 * N}-qubit channel, got {s.num_qubits}")
    target = 2 ** (-N / 2)
    for idx in np.flatnonzero(np.abs(s.amps) > 1e-12):
        bits = tuple(int(c) for c in format(int(idx), f"0{2 * N}b"))
        if bits[N:] != _expected_bits(bits[:N], kind):
            return False
        if abs(s.amps[idx] - target) > 1e-10:
            return False
    return True


def parity_blocks(s: StateVector, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Split an entangled channel into its even- and odd-parity halves.

    Returns two ``2**(N-1) x 2**(N-1) x 4`` arrays indexed by
    (bits 1..N-1, bits N+1..2N-1, pair (N, 2N)). For the entangled channel the
    even block carries phi+ on the last pair and the odd block psi+.
    """
    if s.num_qubits != 2 * N or N < 2:
        raise ValueError("need a 2N-qubit channel with N >= 2")
    t = s.tensor()
    # axes: senders 0..N-1, receivers N..2N-1; move the (N, 2N) pair last
    order = list(range(N - 1)) + list(range(N, 2 * N - 1)) + [N - 1, 2 * N - 1]
    t = np.transpose(t, order).reshape(2 ** (N - 1), 2 ** (N - 1), 4)
    parity = np.array([bin(k).count("1") % 2 for k in range(2 ** (N - 1))])
    even = t * (parity == 0)[:, None, None]
    odd = t * (parity == 1)[:, None, None]
    return even, odd
