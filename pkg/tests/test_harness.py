import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpteleport.harness import (
    BroadcastBus,
    ProtocolIncompleteError,
    ScenarioConfig,
    check_voting_rules,
    run_scenario,
    tally_votes,
)
from mpteleport.oracle import WithheldModel
from mpteleport.protocol import InputQubit, ProtocolStateError, run_protocol
from mpteleport.statevector import BELL_OUTCOMES

PP, PM, SP, SM = BELL_OUTCOMES


def test_bus_rejects_second_broadcast():
    bus = BroadcastBus()
    bus.post(1, PP)
    with pytest.raises(ProtocolStateError):
        bus.post(1, PM)
    assert bus.log == ((1, PP),)
    assert bus.outcome_of(2) is None


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(N=0),
        dict(N=2, participation=(True,)),
        dict(N=2, participation=(False, False)),
        dict(N=2, forced=("phi+",)),
        dict(N=2, vote_mode=True, votes=(1,)),
        dict(N=2, vote_mode=True, votes=(1, 2)),
        dict(N=2, vote_mode=True),
        dict(N=2, inputs=(InputQubit.from_bit(0),)),
        dict(N=2, channel_kind="ghz"),
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ScenarioConfig(**kwargs)


def test_full_participation_succeeds():
    r = run_scenario(ScenarioConfig(N=3, seed=4))
    assert r.transcript.complete and r.transcript.cascade_applied
    assert r.joint_fidelity == pytest.approx(1, abs=1e-10)
    assert r.per_qubit_fidelity == pytest.approx((1, 1, 1), abs=1e-10)
    assert sorted(r.schedule) == [1, 2, 3]
    assert [s for s, _ in r.bus_log] == list(r.schedule)
    assert [p.id for p in r.parties] == ["S1", "S2", "S3", "R"]


def test_schedule_depends_on_seed():
    schedules = {run_scenario(ScenarioConfig(N=4, seed=s)).schedule for s in range(12)}
    assert len(schedules) > 1


def test_scenario_is_deterministic():
    a = run_scenario(ScenarioConfig(N=3, seed=99))
    b = run_scenario(ScenarioConfig(N=3, seed=99))
    assert a.schedule == b.schedule and a.bus_log == b.bus_log
    np.testing.assert_array_equal(a.transcript.final_state.amps, b.transcript.final_state.amps)


def test_schedule_order_does_not_change_result():
    inputs = tuple(InputQubit.from_bloch(0.3 * k + 0.2, 1.1 * k) for k in range(1, 4))
    forced = (SP, PM, SM)
    finals = [
        run_scenario(ScenarioConfig(N=3, seed=s, forced=forced, inputs=inputs)).transcript.final_state
        for s in range(6)
    ]
    for f in finals[1:]:
        np.testing.assert_allclose(f.amps, finals[0].amps, atol=1e-12)


@pytest.mark.parametrize("model", list(WithheldModel))
def test_receiver_waits_for_every_broadcast(model):
    r = run_scenario(ScenarioConfig(N=3, seed=1, participation=(True, False, True), withheld_model=model))
    t = r.transcript
    assert not t.complete and not t.cascade_applied
    assert t.final_state is None and t.correction is None and t.fidelity is None
    assert t.outcomes[1] is None
    assert {s for s, _ in r.bus_log} == {1, 3}
    assert r.withheld_model is model
    assert len(r.failure_metrics) == 4
    assert all(m.joint_fidelity < 0.99 for m in r.failure_metrics)
    withheld_party = r.parties[1]
    assert (withheld_party.outcome is None) == (model is WithheldModel.TraceOut)


def test_product_baseline_keeps_participants():
    r = run_scenario(ScenarioConfig(N=3, seed=2, channel_kind="product", participation=(True, True, False)))
    assert r.per_qubit_fidelity[0] == pytest.approx(1, abs=1e-10)
    assert r.per_qubit_fidelity[1] == pytest.approx(1, abs=1e-10)


def test_entangled_withheld_participants_lose_fidelity():
    r = run_scenario(ScenarioConfig(N=3, seed=2, participation=(True, True, False)))
    assert r.per_qubit_fidelity[0] < 0.99 and r.per_qubit_fidelity[1] < 0.99


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=4), st.integers(0, 2**31))
def test_tally_conserves_votes(votes, seed):
    N = len(votes)
    kind = "entangled" if N > 1 else "product"
    r = run_scenario(ScenarioConfig(N=N, seed=seed, vote_mode=True, votes=tuple(votes), channel_kind=kind))
    assert (r.tally.yes, r.tally.no) == (sum(votes), N - sum(votes))
    assert r.encoding_basis == "computational"


def test_tally_every_forced_tuple_n3():
    votes = (1, 0, 1)
    for forced in itertools.product(BELL_OUTCOMES, repeat=3):
        r = run_scenario(ScenarioConfig(N=3, vote_mode=True, votes=votes, forced=forced))
        assert (r.tally.yes, r.tally.no) == (2, 1)


def test_hidden_basis_redacts_inputs():
    r = run_scenario(ScenarioConfig(N=2, vote_mode=True, votes=(1, 1), hide_basis=True))
    assert r.transcript.inputs is None and r.encoding_basis is None
    assert r.tally.yes == 2


def test_tally_needs_final_state():
    r = run_scenario(ScenarioConfig(N=2, participation=(False, True)))
    with pytest.raises(ProtocolIncompleteError):
        tally_votes(r.transcript)


def test_tally_of_superposed_votes_is_sampled_reproducibly():
    inputs = [InputQubit.from_bloch(np.pi / 2, 0)] * 3
    t = run_protocol(inputs, seed=3)
    a = tally_votes(t, np.random.default_rng(0))
    b = tally_votes(t, np.random.default_rng(0))
    assert a == b and a.yes + a.no == 3


@pytest.mark.parametrize("vote_mode", [False, True])
@pytest.mark.parametrize("kind", ["entangled", "product"])
def test_rule_checks_pass(vote_mode, kind):
    cfg = ScenarioConfig(N=3, seed=5, channel_kind=kind, vote_mode=vote_mode,
                         votes=(0, 1, 1) if vote_mode else None, check_rules=True)
    checks = check_voting_rules(cfg)
    assert [c.rule for c in checks] == [2, 3, 4]
    assert all(c.passed for c in checks)
    assert run_scenario(cfg).rule_checks == checks
