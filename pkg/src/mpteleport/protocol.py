"""Teleporting N qubits from N senders to one receiver over a shared channel.

Joint register layout: input qubit ``A_i`` sits at position ``i`` and channel
qubit ``j`` at position ``N + j``. Sender ``i`` measures ``(A_i, channel qubit i)``;
positions shift as measured pairs leave the register, so :class:`Register`
tracks qubits by label (``A1..AN``, ``Q1..Q2N``).
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import ChannelKind, build_channel
from .statevector import (
    BELL_OUTCOMES,
    NORM_TOL,
    PAULIS,
    BellOutcome,
    StateVector,
    apply_1q,
    apply_cnot,
    bell_amplitudes,
    bell_project,
    fidelity_mod_phase,
    tensor,
    tensor_all,
)

MAX_TABLE_N = 6
FIDELITY_TOL = 1e-10


class ProtocolStateError(RuntimeError):
    """An operation is not valid at this point of a protocol run."""


@dataclass(frozen=True)
class InputQubit:
    a: complex
    b: complex

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        if abs(abs(self.a) ** 2 + abs(self.b) ** 2 - 1) > NORM_TOL:
            raise ValueError(f"input qubit ({self.a}, {self.b}) is not normalized")

    @classmethod
    def from_bit(cls, bit: int) -> "InputQubit":
        if bit not in (0, 1):
            raise ValueError("vote bits must be 0 or 1")
        return cls(1.0, 0.0) if bit == 0 else cls(0.0, 1.0)

    @classmethod
    def from_bloch(cls, theta: float, phi: float) -> "InputQubit":
        return cls(np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2))

    def state(self) -> StateVector:
        return StateVector(1, np.array([self.a, self.b]))


def random_generic_inputs(n: int, seed: int, pole_margin: float = 0.05) -> list[InputQubit]:
    """Seeded inputs uniform on the Bloch sphere, away from the poles.

    Polar angles within ``pole_margin`` radians of either pole are redrawn so
    that no input is accidentally a basis state.
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        z = rng.uniform(-1.0, 1.0)
        phi = rng.uniform(0.0, 2 * np.pi)
        theta = float(np.arccos(z))
        if theta < pole_margin or theta > np.pi - pole_margin:
            continue
        out.append(InputQubit.from_bloch(theta, phi))
    return out


def product_target(inputs: Sequence[InputQubit]) -> StateVector:
    return tensor_all([q.state() for q in inputs])


_CORRECTION_OF = {
    BellOutcome.PhiPlus: "I",
    BellOutcome.PhiMinus: "Z",
    BellOutcome.PsiPlus: "X",
    BellOutcome.PsiMinus: "Y",
}


@dataclass(frozen=True)
class PauliString:
    """Per-qubit Pauli correction; ``ops[i]`` acts on receiver qubit ``N + i + 1``."""

    ops: tuple[str, ...]

    def __post_init__(self):
        ops = tuple(str(o).upper() for o in self.ops)
        if any(o not in PAULIS for o in ops):
            raise ValueError(f"Pauli entries must be I, X, Y or Z, got {ops}")
        object.__setattr__(self, "ops", ops)

    def __len__(self):
        return len(self.ops)

    def is_identity(self) -> bool:
        return all(o == "I" for o in self.ops)

    def label(self, first_qubit: int) -> str:
        """Compact product form, e.g. ``Z5X6`` with receiver qubits numbered from ``first_qubit``."""
        parts = [f"{o}{first_qubit + k}" for k, o in enumerate(self.ops) if o != "I"]
        return "".join(parts) or "I"

    @classmethod
    def from_label(cls, label: str, n: int, first_qubit: int) -> "PauliString":
        ops = ["I"] * n
        label = label.replace(" ", "")
        if label != "I":
            terms = re.findall(r"([XYZ])(\d+)", label)
            if "".join(p + q for p, q in terms) != label:
                raise ValueError(f"cannot parse Pauli label {label!r}")
            for p, q in terms:
                k = int(q) - first_qubit
                if not 0 <= k < n or ops[k] != "I":
                    raise ValueError(f"bad qubit index in Pauli label {label!r}")
                ops[k] = p
        return cls(tuple(ops))


def correction_for(outcomes: Sequence[BellOutcome]) -> PauliString:
    return PauliString(tuple(_CORRECTION_OF[o] for o in outcomes))


def apply_correction(s: StateVector, p: PauliString) -> StateVector:
    if s.num_qubits != len(p):
        raise ValueError(f"{len(p)}-qubit correction for a {s.num_qubits}-qubit state")
    for q, op in enumerate(p.ops, start=1):
        if op != "I":
            s = apply_1q(s, q, PAULIS[op])
    return s


def receiver_cnot_cascade(s: StateVector, N: int | None = None) -> StateVector:
    """CNOTs from receiver qubits 1..N-1 onto receiver qubit N."""
    if N is not None and s.num_qubits != N:
        raise ValueError(f"expected the receiver's {N} qubits, got {s.num_qubits}")
    if s.num_qubits < 1:
        raise ValueError("cascade needs at least one qubit")
    n = s.num_qubits
    for control in range(1, n):
        s = apply_cnot(s, control, n)
    return s


@dataclass(frozen=True, eq=False)
class Register:
    """A state plus the label of the qubit held at each position."""

    state: StateVector
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) != self.state.num_qubits or len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique and match the register size")

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label) + 1
        except ValueError:
            raise ProtocolStateError(f"qubit {label} is no longer in the register") from None

    def has(self, label: str) -> bool:
        return label in self.labels

    def without(self, *drop: str) -> tuple[str, ...]:
        return tuple(lab for lab in self.labels if lab not in drop)


def input_label(i: int) -> str:
    return f"A{i}"


def channel_label(j: int) -> str:
    return f"Q{j}"


def receiver_labels(N: int) -> tuple[str, ...]:
    return tuple(channel_label(N + i) for i in range(1, N + 1))


def prepare_joint_state(inputs: Sequence[InputQubit], channel: StateVector) -> StateVector:
    N = len(inputs)
    if N < 1 or channel.num_qubits != 2 * N:
        raise ValueError(f"{N} inputs need a {2 * N}-qubit channel, got {channel.num_qubits}")
    return tensor(product_target(inputs), channel)


def joint_register(inputs: Sequence[InputQubit], channel: StateVector) -> Register:
    N = len(inputs)
    labels = tuple(input_label(i) for i in range(1, N + 1)) + tuple(
        channel_label(j) for j in range(1, 2 * N + 1)
    )
    return Register(prepare_joint_state(inputs, channel), labels)


def outcome_probabilities(reg: Register, sender_index: int) -> np.ndarray:
    qa = reg.position(input_label(sender_index))
    qb = reg.position(channel_label(sender_index))
    rest = bell_amplitudes(reg.state, qa, qb)
    return np.sum(np.abs(rest) ** 2, axis=1)


def sample_outcome(probs: np.ndarray, rng: np.random.Generator) -> BellOutcome:
    u = rng.random()
    acc = 0.0
    for outcome, p in zip(BELL_OUTCOMES, probs):
        acc += p
        if u < acc:
            return outcome
    # u landed in the rounding slack above sum(probs)
    return BELL_OUTCOMES[int(np.flatnonzero(probs > 0)[-1])]


def sender_measure(
    reg: Register,
    sender_index: int,
    policy: "BellOutcome | np.random.Generator",
) -> tuple[BellOutcome, float, Register | None]:
    """Bell measurement of sender ``i`` on ``(A_i, channel qubit i)``.

    ``policy`` is either a forced outcome or a generator to sample from the
    exact outcome distribution. The measured pair leaves the register; a
    forced zero-probability outcome yields ``None`` in place of the register.
    """
    a_lab, q_lab = input_label(sender_index), channel_label(sender_index)
    if not (reg.has(a_lab) and reg.has(q_lab)):
        raise ProtocolStateError(f"sender {sender_index} has already measured")
    if isinstance(policy, BellOutcome):
        outcome = policy
    else:
        outcome = sample_outcome(outcome_probabilities(reg, sender_index), policy)
    prob, collapsed = bell_project(reg.state, reg.position(a_lab), reg.position(q_lab), outcome)
    if collapsed is None:
        return outcome, prob, None
    return outcome, prob, Register(collapsed, reg.without(a_lab, q_lab))


@dataclass(frozen=True, eq=False)
class Transcript:
    N: int
    channel_kind: ChannelKind
    inputs: tuple[InputQubit, ...] | None
    outcomes: tuple[BellOutcome | None, ...]
    outcome_probability: float
    cascade_applied: bool
    correction: PauliString | None
    final_state: StateVector | None
    fidelity: float | None
    rng_seed: int | None
    aborted: bool = False

    @property
    def complete(self) -> bool:
        return self.final_state is not None

    def redacted(self) -> "Transcript":
        return Transcript(**{**self.__dict__, "inputs": None})


def _resolve_policy(N: int, forced: Sequence[BellOutcome] | None, seed: int | None):
    if forced is not None:
        forced = tuple(
            BellOutcome.from_token(o) if isinstance(o, str) else o for o in forced
        )
        if len(forced) != N:
            raise ValueError(f"expected {N} forced outcomes, got {len(forced)}")
        return forced, None
    return None, np.random.default_rng(0 if seed is None else seed)


def run_from_register(
    reg: Register,
    inputs: Sequence[InputQubit],
    kind: ChannelKind,
    forced: Sequence[BellOutcome] | None = None,
    seed: int | None = None,
) -> Transcript:
    """Run all N measurements and the receiver's recovery on a prepared register."""
    N = len(inputs)
    forced, rng = _resolve_policy(N, forced, seed)
    outcomes: list[BellOutcome] = []
    probability = 1.0
    for i in range(1, N + 1):
        outcome, p, reg = sender_measure(reg, i, forced[i - 1] if forced else rng)
        outcomes.append(outcome)
        probability *= p
        if reg is None:
            return Transcript(
                N, kind, tuple(inputs), tuple(outcomes) + (None,) * (N - i),
                0.0, False, None, None, None, None if forced else seed, aborted=True,
            )
    s = reg.state
    cascade = kind is ChannelKind.Entangled and N > 1
    if cascade:
        s = receiver_cnot_cascade(s, N)
    correction = correction_for(outcomes)
    final = apply_correction(s, correction)
    fid = fidelity_mod_phase(final, product_target(inputs))
    return Transcript(
        N, kind, tuple(inputs), tuple(outcomes), probability, cascade, correction,
        final, fid, None if forced else (0 if seed is None else seed),
    )


def run_protocol(
    inputs: Sequence[InputQubit],
    channel_kind: "ChannelKind | str" = ChannelKind.Entangled,
    forced: Sequence[BellOutcome] | None = None,
    seed: int | None = None,
) -> Transcript:
    """Build the channel, measure every sender, recover, and score the result.

    Outcomes are forced when ``forced`` is given and sampled with ``seed``
    otherwise.
    """
    kind = ChannelKind.parse(channel_kind)
    N = len(inputs)
    if N < 1:
        raise ValueError("need at least one input qubit")
    if forced is not None and len(forced) != N:
        raise ValueError(f"expected {N} forced outcomes, got {len(forced)}")
    reg = joint_register(inputs, build_channel(N, kind))
    return run_from_register(reg, inputs, kind, forced, seed)


_STATE_TEXT = {
    BellOutcome.PhiPlus: "a{i}|0> + b{i}|1>",
    BellOutcome.PhiMinus: "a{i}|0> - b{i}|1>",
    BellOutcome.PsiPlus: "a{i}|1> + b{i}|0>",
    BellOutcome.PsiMinus: "a{i}|1> - b{i}|0>",
}


def describe_post_cascade(outcomes: Sequence[BellOutcome]) -> str:
    N = len(outcomes)
    return " (x) ".join(
        f"[{_STATE_TEXT[o].format(i=i)}]_{N + i}" for i, o in enumerate(outcomes, start=1)
    )


@dataclass(frozen=True)
class CorrectionRow:
    outcomes: tuple[BellOutcome, ...]
    correction: PauliString
    state: str
    fidelity: float

    def label(self) -> str:
        return self.correction.label(len(self.outcomes) + 1)


TABLE_SEED = 20240611


def generate_correction_table(
    N: int, inputs: Sequence[InputQubit] | None = None
) -> list[CorrectionRow]:
    """All ``4**N`` outcome tuples with their verified receiver corrections.

    Each row's correction is checked by a forced run on ``inputs`` (a fixed
    generic list by default); a row that fails to reach unit fidelity raises.
    """
    if not 1 <= N <= MAX_TABLE_N:
        raise ValueError(f"table size 4**N needs 1 <= N <= {MAX_TABLE_N}, got {N}")
    inputs = list(inputs) if inputs is not None else random_generic_inputs(N, TABLE_SEED)
    kind = ChannelKind.Entangled if N > 1 else ChannelKind.Product
    reg = joint_register(inputs, build_channel(N, kind))
    rows = []
    for outcomes in itertools.product(BELL_OUTCOMES, repeat=N):
        t = run_from_register(reg, inputs, kind, forced=outcomes)
        if t.fidelity is None or abs(t.fidelity - 1) > FIDELITY_TOL:
            raise AssertionError(f"correction for {outcomes} failed: fidelity {t.fidelity}")
        rows.append(CorrectionRow(outcomes, t.correction, describe_post_cascade(outcomes), t.fidelity))
    return rows


def pre_cascade_state(outcomes: Sequence[BellOutcome], inputs: Sequence[InputQubit],
                      kind: "ChannelKind | str" = ChannelKind.Entangled) -> StateVector:
    """Receiver state right after all broadcasts, before cascade or corrections."""
    kind = ChannelKind.parse(kind)
    reg = joint_register(inputs, build_channel(len(inputs), kind))
    for i, o in enumerate(outcomes, start=1):
        _, _, reg = sender_measure(reg, i, o)
        if reg is None:
            raise ProtocolStateError(f"outcome tuple {tuple(outcomes)} has zero probability")
    return reg.state
