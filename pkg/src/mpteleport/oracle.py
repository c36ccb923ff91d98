"""Brute-force checks of the protocol.

Two routes are used on purpose. :func:`enumerate_all_outcomes` drives the
protocol itself with forced outcomes. :func:`branch_amplitudes` instead rotates
every sender pair into the Bell basis with an explicit CNOT-then-H circuit,
which yields all ``4**N`` unnormalized receiver branches in one array without
touching the projector code. Probabilities from both routes are compared.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .channel import ChannelKind, build_channel
from .protocol import (
    InputQubit,
    PauliString,
    correction_for,
    channel_label,
    joint_register,
    prepare_joint_state,
    product_target,
    receiver_labels,
    run_from_register,
    sender_measure,
)
from .statevector import (
    BELL_OUTCOMES,
    PAULIS,
    BellOutcome,
    DensityMatrix,
    StateVector,
    apply_1q,
    reduced_density,
    tensor_all,
)

MAX_ENUMERATE_N = 7
MAX_AVERAGE_N = 6


class ResourceLimitError(RuntimeError):
    """Requested enumeration is too large for a dense simulation."""


class WithheldModel(Enum):
    TraceOut = "trace-out"
    MeasureNoBroadcast = "measure-no-broadcast"

    @classmethod
    def parse(cls, value: "str | WithheldModel") -> "WithheldModel":
        if isinstance(value, cls):
            return value
        v = str(value).lower().replace("_", "-")
        aliases = {"traceout": "trace-out", "measurenobroadcast": "measure-no-broadcast"}
        try:
            return cls(aliases.get(v.replace("-", ""), v))
        except ValueError:
            raise ValueError(f"unknown withheld model {value!r}") from None


# Bell-basis rotation for one pair: CNOT(first -> second) followed by H on first.
# Outcome index is 2*m_first + m_second.
_H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
_BELL_ROTATION = np.kron(_H, np.eye(2)) @ _CNOT
_MEASURED_BITS_TO_OUTCOME = {
    (0, 0): BellOutcome.PhiPlus,
    (1, 0): BellOutcome.PhiMinus,
    (0, 1): BellOutcome.PsiPlus,
    (1, 1): BellOutcome.PsiMinus,
}
# row k of the rotated pair <-> BELL_OUTCOMES order
_ROW_FOR_OUTCOME = np.array(
    [
        2 * m0 + m1
        for o in BELL_OUTCOMES
        for (m0, m1), oo in _MEASURED_BITS_TO_OUTCOME.items()
        if oo is o
    ]
)


def _check_inputs(inputs: Sequence[InputQubit], N: int | None) -> int:
    if N is None:
        N = len(inputs)
    if len(inputs) != N:
        raise ValueError(f"expected {N} inputs, got {len(inputs)}")
    if N < 1:
        raise ValueError("need at least one sender")
    return N


def branch_amplitudes(
    inputs: Sequence[InputQubit], channel_kind: "ChannelKind | str"
) -> np.ndarray:
    """Unnormalized pre-cascade receiver states for every outcome tuple.

    Shape ``(4,) * N + (2,) * N``; axis ``i`` indexes sender ``i``'s outcome in
    ``BELL_OUTCOMES`` order and the trailing axes are receiver qubits.
    """
    N = len(inputs)
    joint = prepare_joint_state(inputs, build_channel(N, channel_kind))
    t = joint.amps.reshape([2] * (3 * N))
    rot = _BELL_ROTATION.reshape(2, 2, 2, 2)
    for i in range(N):
        a_axis, q_axis = i, N + i
        t = np.tensordot(rot, t, axes=([2, 3], [a_axis, q_axis]))
        # new leading axes (m0, m1) go back where (A_i, Q_i) were
        t = np.moveaxis(t, (0, 1), (a_axis, q_axis))
    # axes now: m0 for each sender, then m1 for each sender, then receivers
    order = [ax for i in range(N) for ax in (i, N + i)] + list(range(2 * N, 3 * N))
    t = np.transpose(t, order).reshape([4] * N + [2] * N)
    for i in range(N):
        t = np.take(t, _ROW_FOR_OUTCOME, axis=i)
    return t


def outcome_distribution(
    inputs: Sequence[InputQubit], channel_kind: "ChannelKind | str"
) -> np.ndarray:
    """Exact joint outcome probabilities, shape ``(4,) * N``."""
    N = len(inputs)
    b = branch_amplitudes(inputs, channel_kind)
    return np.sum(np.abs(b) ** 2, axis=tuple(range(N, 2 * N)))


def outcome_marginals(
    inputs: Sequence[InputQubit], channel_kind: "ChannelKind | str"
) -> np.ndarray:
    """Per-sender outcome marginals, shape ``(N, 4)``."""
    dist = outcome_distribution(inputs, channel_kind)
    N = dist.ndim
    return np.stack(
        [dist.sum(axis=tuple(j for j in range(N) if j != i)) for i in range(N)]
    )


@dataclass(frozen=True)
class OutcomeReport:
    outcomes: tuple[BellOutcome, ...]
    probability: float
    fidelity: float | None
    correction: PauliString | None
    direct_probability: float


@dataclass(frozen=True)
class Enumeration:
    N: int
    channel_kind: ChannelKind
    reports: tuple[OutcomeReport, ...]
    exhaustive: bool

    @property
    def probability_sum(self) -> float:
        return float(sum(r.probability for r in self.reports))

    @property
    def min_fidelity(self) -> float:
        return min(r.fidelity if r.fidelity is not None else 0.0 for r in self.reports)

    @property
    def max_fidelity(self) -> float:
        return max(r.fidelity if r.fidelity is not None else 0.0 for r in self.reports)

    @property
    def max_probability_error(self) -> float:
        """Largest deviation of a branch probability from ``4**-N``."""
        return max(abs(r.probability - 4.0**-self.N) for r in self.reports)

    @property
    def max_route_disagreement(self) -> float:
        return max(abs(r.probability - r.direct_probability) for r in self.reports)


def _tuples(N: int, samples: int | None, seed: int) -> list[tuple[BellOutcome, ...]]:
    if samples is None:
        return list(itertools.product(BELL_OUTCOMES, repeat=N))
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, 4, size=(samples, N))
    picked = sorted(tuple(int(k) for k in row) for row in idx)
    return [tuple(BELL_OUTCOMES[k] for k in row) for row in picked]


def enumerate_all_outcomes(
    inputs: Sequence[InputQubit],
    channel_kind: "ChannelKind | str",
    N: int | None = None,
    samples: int | None = None,
    seed: int = 0,
) -> Enumeration:
    """Forced-outcome protocol runs over every outcome tuple.

    With ``samples`` set, that many tuples are drawn uniformly (with
    replacement) instead. Reports come back in lexicographic outcome order.
    """
    N = _check_inputs(inputs, N)
    if N > MAX_ENUMERATE_N:
        raise ResourceLimitError(f"N={N} exceeds the enumeration limit of {MAX_ENUMERATE_N}")
    kind = ChannelKind.parse(channel_kind)
    direct = outcome_distribution(inputs, kind)
    reg = joint_register(inputs, build_channel(N, kind))
    reports = []
    for outcomes in _tuples(N, samples, seed):
        t = run_from_register(reg, inputs, kind, forced=outcomes)
        key = tuple(BELL_OUTCOMES.index(o) for o in outcomes)
        reports.append(
            OutcomeReport(outcomes, t.outcome_probability, t.fidelity, t.correction, float(direct[key]))
        )
    return Enumeration(N, kind, tuple(reports), exhaustive=samples is None)


def average_receiver_state(
    inputs: Sequence[InputQubit], channel_kind: "ChannelKind | str", N: int | None = None
) -> DensityMatrix:
    """Outcome-averaged receiver state before cascade and corrections."""
    N = _check_inputs(inputs, N)
    if N > MAX_AVERAGE_N:
        raise ResourceLimitError(f"N={N} exceeds the averaging limit of {MAX_AVERAGE_N}")
    m = branch_amplitudes(inputs, channel_kind).reshape(4**N, 2**N)
    return DensityMatrix(N, m.T @ m.conj())


def _apply_by_label(s: StateVector, labels: Sequence[str], ops: dict[str, str]) -> StateVector:
    for lab, op in ops.items():
        if op != "I":
            s = apply_1q(s, labels.index(lab) + 1, PAULIS[op])
    return s


def withheld_participation_state(
    inputs: Sequence[InputQubit],
    N: int | None,
    withheld: Iterable[int],
    model: "WithheldModel | str" = WithheldModel.TraceOut,
    corrected: bool = True,
    channel_kind: "ChannelKind | str" = ChannelKind.Entangled,
) -> DensityMatrix:
    """Receiver's N-qubit state when some senders never broadcast.

    Participants measure and the result is averaged over their outcomes,
    with their per-qubit corrections applied when ``corrected``. Withheld
    senders' qubits are traced out (``TraceOut``) or measured with the
    outcome kept private (``MeasureNoBroadcast``). The cascade is never
    applied since not every broadcast arrived.
    """
    N = _check_inputs(inputs, N)
    withheld = sorted(set(int(k) for k in withheld))
    if not withheld:
        raise ValueError("withheld set must be non-empty")
    if any(not 1 <= k <= N for k in withheld):
        raise ValueError(f"withheld senders must lie in 1..{N}")
    if len(withheld) == N:
        raise ValueError("at least one sender must participate")
    model = WithheldModel.parse(model)
    kind = ChannelKind.parse(channel_kind)
    participants = [i for i in range(1, N + 1) if i not in withheld]
    silent = withheld if model is WithheldModel.MeasureNoBroadcast else []
    measured = participants + silent
    rx = receiver_labels(N)
    start = joint_register(inputs, build_channel(N, kind))
    rho = np.zeros((2**N, 2**N), dtype=complex)
    for outcomes in itertools.product(BELL_OUTCOMES, repeat=len(measured)):
        reg, prob = start, 1.0
        for i, o in zip(measured, outcomes):
            _, p, reg = sender_measure(reg, i, o)
            prob *= p
            if reg is None:
                break
        if reg is None:
            continue
        s = reg.state
        if corrected:
            fix = correction_for(outcomes[: len(participants)])
            s = _apply_by_label(
                s, reg.labels, {channel_label(N + i): op for i, op in zip(participants, fix.ops)}
            )
        keep = [reg.labels.index(lab) + 1 for lab in rx]
        rho += prob * reduced_density(s, keep).entries
    return DensityMatrix(N, rho)


@dataclass(frozen=True)
class WithheldMetrics:
    model: WithheldModel
    corrected: bool
    joint_fidelity: float
    per_qubit_fidelity: tuple[float, ...]


def withheld_metrics(
    inputs: Sequence[InputQubit],
    withheld: Iterable[int],
    channel_kind: "ChannelKind | str" = ChannelKind.Entangled,
) -> list[WithheldMetrics]:
    """Fidelities against the intended product state for both models, with and without corrections."""
    N = len(inputs)
    withheld = list(withheld)
    target = product_target(inputs)
    out = []
    for model in WithheldModel:
        for corrected in (True, False):
            rho = withheld_participation_state(inputs, N, withheld, model, corrected, channel_kind)
            per_qubit = tuple(
                rho.marginal([i]).fidelity_with(inputs[i - 1].state()) for i in range(1, N + 1)
            )
            out.append(WithheldMetrics(model, corrected, rho.fidelity_with(target), per_qubit))
    return out


def stolen_qubits_fidelity(
    inputs: Sequence[InputQubit],
    outcomes: Sequence[BellOutcome],
    channel_kind: "ChannelKind | str" = ChannelKind.Entangled,
    corrected: bool = True,
) -> float:
    """Fidelity of receiver qubits ``N+1..2N-1`` without the last qubit.

    Models a thief holding every receiver qubit but the cascade target, who
    has seen all broadcasts and applies the public per-qubit corrections.
    """
    N = len(inputs)
    if N < 2:
        raise ValueError("need N >= 2 to leave out the last receiver qubit")
    b = branch_amplitudes(inputs, channel_kind)
    key = tuple(BELL_OUTCOMES.index(o) for o in outcomes)
    chi = b[key].reshape(-1)
    chi = StateVector(N, chi / np.linalg.norm(chi))
    if corrected:
        fix = correction_for(outcomes)
        for q in range(1, N):
            if fix.ops[q - 1] != "I":
                chi = apply_1q(chi, q, PAULIS[fix.ops[q - 1]])
    rho = reduced_density(chi, list(range(1, N)))
    return rho.fidelity_with(tensor_all([q.state() for q in inputs[:-1]]))
