"""Multiparty scenarios: senders and a receiver on a classical broadcast bus.

Parties act in a fixed order derived from the scenario seed. The receiver
only touches the cascade target (its last qubit) once every sender's message
is on the bus; with a product channel it can correct each qubit as soon as
that qubit's message arrives.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

from .channel import ChannelKind, build_channel
from .oracle import (
    WithheldMetrics,
    WithheldModel,
    average_receiver_state,
    outcome_distribution,
    outcome_marginals,
    withheld_metrics,
)
from .protocol import (
    InputQubit,
    ProtocolStateError,
    Register,
    Transcript,
    apply_correction,
    channel_label,
    correction_for,
    input_label,
    joint_register,
    product_target,
    random_generic_inputs,
    receiver_cnot_cascade,
    receiver_labels,
    sender_measure,
)
from .statevector import (
    BELL_OUTCOMES,
    PAULIS,
    BellOutcome,
    StateVector,
    apply_1q,
    fidelity_mod_phase,
    reduced_density,
)

log = logging.getLogger(__name__)

RULE_TOL = 1e-10


class ProtocolIncompleteError(RuntimeError):
    """The receiver never obtained a final state."""


@dataclass
class Party:
    id: str
    role: str  # "sender" or "receiver"
    index: int | None = None
    held: tuple[str, ...] = ()
    outcome: BellOutcome | None = None
    participates: bool = True


class BroadcastBus:
    """Reliable ordered log of (sender index, outcome) messages."""

    def __init__(self):
        self._log: list[tuple[int, BellOutcome]] = []

    def post(self, sender: int, outcome: BellOutcome) -> None:
        if any(s == sender for s, _ in self._log):
            raise ProtocolStateError(f"sender {sender} already broadcast")
        self._log.append((sender, outcome))

    @property
    def log(self) -> tuple[tuple[int, BellOutcome], ...]:
        return tuple(self._log)

    def senders(self) -> set[int]:
        return {s for s, _ in self._log}

    def outcome_of(self, sender: int) -> BellOutcome | None:
        return next((o for s, o in self._log if s == sender), None)


@dataclass(frozen=True)
class ScenarioConfig:
    N: int
    channel_kind: ChannelKind = ChannelKind.Entangled
    participation: tuple[bool, ...] | None = None
    seed: int = 0
    forced: tuple[BellOutcome, ...] | None = None
    vote_mode: bool = False
    votes: tuple[int, ...] | None = None
    inputs: tuple[InputQubit, ...] | None = None
    withheld_model: WithheldModel = WithheldModel.TraceOut
    hide_basis: bool = False
    check_rules: bool = False

    def __post_init__(self):
        object.__setattr__(self, "channel_kind", ChannelKind.parse(self.channel_kind))
        object.__setattr__(self, "withheld_model", WithheldModel.parse(self.withheld_model))
        if self.N < 1:
            raise ValueError("N must be >= 1")
        mask = self.participation
        if mask is None:
            mask = (True,) * self.N
        mask = tuple(bool(m) for m in mask)
        if len(mask) != self.N:
            raise ValueError(f"participation mask needs {self.N} entries")
        if not any(mask):
            raise ValueError("at least one sender must participate")
        object.__setattr__(self, "participation", mask)
        if self.forced is not None:
            forced = tuple(
                BellOutcome.from_token(o) if isinstance(o, str) else o for o in self.forced
            )
            if len(forced) != self.N:
                raise ValueError(f"expected {self.N} forced outcomes")
            object.__setattr__(self, "forced", forced)
        if self.vote_mode:
            if self.votes is None or len(self.votes) != self.N:
                raise ValueError(f"vote mode needs exactly {self.N} votes")
            if any(v not in (0, 1) for v in self.votes):
                raise ValueError("votes must be 0 or 1")
            object.__setattr__(self, "votes", tuple(int(v) for v in self.votes))
        if self.inputs is not None and len(self.inputs) != self.N:
            raise ValueError(f"expected {self.N} inputs")

    @property
    def withheld(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.participation, start=1) if not p)

    def resolve_inputs(self) -> tuple[InputQubit, ...]:
        if self.vote_mode:
            return tuple(InputQubit.from_bit(v) for v in self.votes)
        if self.inputs is not None:
            return tuple(self.inputs)
        return tuple(random_generic_inputs(self.N, self.seed))


@dataclass(frozen=True)
class Tally:
    yes: int
    no: int


@dataclass(frozen=True)
class RuleCheck:
    rule: int
    passed: bool
    measured: float
    detail: str


@dataclass(frozen=True)
class ScenarioReport:
    config: ScenarioConfig
    transcript: Transcript
    schedule: tuple[int, ...]
    bus_log: tuple[tuple[int, BellOutcome], ...]
    per_qubit_fidelity: tuple[float, ...]
    joint_fidelity: float
    tally: Tally | None = None
    encoding_basis: str | None = None
    rule_checks: tuple[RuleCheck, ...] = ()
    failure_metrics: tuple[WithheldMetrics, ...] = ()
    withheld_model: WithheldModel | None = None
    parties: tuple[Party, ...] = ()


def _receiver_density(reg: Register, N: int, corrections: dict[int, str]):
    s = reg.state
    for i, op in corrections.items():
        if op != "I":
            s = apply_1q(s, reg.position(channel_label(N + i)), PAULIS[op])
    keep = [reg.position(lab) for lab in receiver_labels(N)]
    return reduced_density(s, keep)


def run_scenario(config: ScenarioConfig) -> ScenarioReport:
    N = config.N
    kind = config.channel_kind
    inputs = config.resolve_inputs()
    rng = np.random.default_rng(config.seed)
    schedule = tuple(int(k) for k in rng.permutation(N) + 1)

    senders = {
        i: Party(f"S{i}", "sender", i, (input_label(i), channel_label(i)),
                 participates=config.participation[i - 1])
        for i in range(1, N + 1)
    }
    receiver = Party("R", "receiver", held=receiver_labels(N))
    bus = BroadcastBus()
    reg = joint_register(inputs, build_channel(N, kind))
    probability = 1.0

    events = deque(("sender", i) for i in schedule)
    events.append(("receiver", None))
    final: StateVector | None = None
    cascade = False
    correction = None
    while events:
        who, i = events.popleft()
        if who == "sender":
            party = senders[i]
            if not party.participates and config.withheld_model is WithheldModel.TraceOut:
                log.debug("sender %d withholds; qubits stay unmeasured", i)
                continue
            policy = config.forced[i - 1] if config.forced else rng
            party.outcome, p, reg = sender_measure(reg, i, policy)
            probability *= p
            if party.participates:
                bus.post(i, party.outcome)
            continue
        # receiver turn: gate on a complete bus for the entangled channel
        heard = bus.senders()
        complete = len(heard) == N
        if complete:
            s = reg.state
            if kind is ChannelKind.Entangled and N > 1:
                s = receiver_cnot_cascade(s, N)
                cascade = True
            correction = correction_for([bus.outcome_of(k) for k in range(1, N + 1)])
            final = apply_correction(s, correction)

    target = product_target(inputs)
    failure: tuple[WithheldMetrics, ...] = ()
    if final is not None:
        joint = fidelity_mod_phase(final, target)
        per_qubit = tuple(
            reduced_density(final, [q]).fidelity_with(inputs[q - 1].state())
            for q in range(1, N + 1)
        )
    else:
        # receiver can only correct qubits whose sender broadcast
        fixes = {k: correction_for([o]).ops[0] for k, o in bus.log}
        rho = _receiver_density(reg, N, fixes)
        joint = rho.fidelity_with(target)
        per_qubit = tuple(
            rho.marginal([q]).fidelity_with(inputs[q - 1].state()) for q in range(1, N + 1)
        )
        failure = tuple(withheld_metrics(inputs, config.withheld, kind))

    outcomes = tuple(bus.outcome_of(k) for k in range(1, N + 1))
    transcript = Transcript(
        N=N,
        channel_kind=kind,
        inputs=None if config.vote_mode and config.hide_basis else inputs,
        outcomes=outcomes,
        outcome_probability=probability,
        cascade_applied=cascade,
        correction=correction,
        final_state=final,
        fidelity=joint if final is not None else None,
        rng_seed=config.seed,
    )
    tally = None
    basis = None
    if config.vote_mode and final is not None:
        tally = tally_votes(transcript)
        basis = None if config.hide_basis else "computational"
    rules = check_voting_rules(config) if config.check_rules else ()
    return ScenarioReport(
        config=config,
        transcript=transcript,
        schedule=schedule,
        bus_log=bus.log,
        per_qubit_fidelity=per_qubit,
        joint_fidelity=joint,
        tally=tally,
        encoding_basis=basis,
        rule_checks=rules,
        failure_metrics=failure,
        withheld_model=config.withheld_model if config.withheld else None,
        parties=tuple(senders[i] for i in range(1, N + 1)) + (receiver,),
    )


def tally_votes(t: Transcript, rng: np.random.Generator | None = None) -> Tally:
    """Count |1> (yes) and |0> (no) over the receiver's qubits.

    Basis-state votes give deterministic results; anything else is sampled
    from ``rng`` (seeded from the transcript by default).
    """
    if t.final_state is None:
        raise ProtocolIncompleteError("no final state: not every sender broadcast")
    if rng is None:
        rng = np.random.default_rng(t.rng_seed or 0)
    yes = 0
    n = t.final_state.num_qubits
    for q in range(1, n + 1):
        p1 = float(reduced_density(t.final_state, [q]).entries[1, 1].real)
        if p1 > 1 - 1e-10:
            yes += 1
        elif p1 > 1e-10 and rng.random() < p1:
            yes += 1
    return Tally(yes=yes, no=n - yes)


def _project_in_place(s: StateVector, qa: int, qb: int, outcome: BellOutcome) -> StateVector:
    """Apply a Bell projector on (qa, qb) without removing the pair."""
    n = s.num_qubits
    t = np.moveaxis(s.tensor(), (qa - 1, qb - 1), (0, 1)).reshape(4, -1)
    v = outcome.vector()
    t = np.outer(v, v.conj() @ t)
    t = np.moveaxis(t.reshape([2] * n), (0, 1), (qa - 1, qb - 1)).reshape(-1)
    return StateVector(n, t / np.linalg.norm(t))


def _comparison_inputs(config: ScenarioConfig) -> tuple[list[InputQubit], list[InputQubit]]:
    if config.vote_mode:
        flipped = [1 - v for v in config.votes]
        return (
            [InputQubit.from_bit(v) for v in config.votes],
            [InputQubit.from_bit(v) for v in flipped],
        )
    return list(config.resolve_inputs()), random_generic_inputs(config.N, config.seed + 1)


def check_voting_rules(config: ScenarioConfig) -> tuple[RuleCheck, ...]:
    """Numerical checks for the one-vote, public-privacy and receiver-privacy rules."""
    N, kind = config.N, config.channel_kind
    inputs = list(config.resolve_inputs())
    start = joint_register(inputs, build_channel(N, kind))

    rejected = 0
    min_purity = 1.0
    for i in range(1, N + 1):
        _, _, after = sender_measure(start, i, BellOutcome.PhiPlus)
        try:
            sender_measure(after, i, BellOutcome.PhiPlus)
        except ProtocolStateError:
            rejected += 1
        qa, qb = start.position(input_label(i)), start.position(channel_label(i))
        for o in BELL_OUTCOMES:
            post = _project_in_place(start.state, qa, qb, o)
            min_purity = min(min_purity, reduced_density(post, [qa, qb]).purity())
    rule2 = RuleCheck(
        2,
        rejected == N and abs(min_purity - 1) < RULE_TOL,
        min_purity,
        f"{rejected}/{N} repeat measurements rejected; min pair purity after measurement",
    )

    first, second = _comparison_inputs(config)
    dev = max(
        float(np.max(np.abs(outcome_marginals(x, kind) - 0.25))) for x in (first, second)
    )
    joint_diff = float(
        np.max(np.abs(outcome_distribution(first, kind) - outcome_distribution(second, kind)))
    )
    rule3 = RuleCheck(
        3,
        dev < RULE_TOL and joint_diff < RULE_TOL,
        max(dev, joint_diff),
        "max deviation of outcome statistics between input lists and from uniform",
    )

    rho_a = average_receiver_state(first, kind).entries
    rho_b = average_receiver_state(second, kind).entries
    diff = float(np.max(np.abs(rho_a - rho_b)))
    mixed = float(np.max(np.abs(rho_a - np.eye(2**N) / 2**N)))
    rule4 = RuleCheck(
        4,
        diff < RULE_TOL and mixed < RULE_TOL,
        max(diff, mixed),
        "max entrywise gap of outcome-averaged receiver states",
    )
    return (rule2, rule3, rule4)
