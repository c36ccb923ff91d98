import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpteleport.channel import ChannelKind
from mpteleport.oracle import (
    ResourceLimitError,
    WithheldModel,
    average_receiver_state,
    branch_amplitudes,
    enumerate_all_outcomes,
    outcome_distribution,
    outcome_marginals,
    stolen_qubits_fidelity,
    withheld_metrics,
    withheld_participation_state,
)
from mpteleport.protocol import InputQubit, pre_cascade_state, random_generic_inputs
from mpteleport.statevector import BELL_OUTCOMES, StateVector, fidelity_mod_phase

from conftest import input_qubits

PP, PM, SP, SM = BELL_OUTCOMES

# Frozen from a dense 3N-qubit contraction (explicit Bell bras, explicit
# Pauli matrices on the receiver block, no library code beyond the channel
# builder), inputs random_generic_inputs(N, 7). Values are joint fidelities
# for (corrected, uncorrected).
WITHHELD_ORACLE = {
    (2, (1,)): (0.3156881615384648, 0.25),
    (2, (2,)): (0.295981929178797, 0.25),
    (3, (2,)): (0.18761401918498077, 0.125),
    (3, (1, 3)): (0.21887697213187327, 0.125),
}

# Same dense route: receiver qubits N+1..2N-1 with public corrections, last qubit traced.
STOLEN_ORACLE = {
    (2, (PP, PP)): 0.5919638583575946,
    (3, (PP, PP, PP)): 0.8245332030678666,
    (3, (SM, PM, SP)): 0.8245332030678666,
}


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("kind", list(ChannelKind))
def test_enumeration_is_perfect(N, kind):
    if kind is ChannelKind.Entangled and N == 1:
        kind = ChannelKind.Product
    e = enumerate_all_outcomes(random_generic_inputs(N, 3), kind)
    assert e.exhaustive and len(e.reports) == 4**N
    assert abs(e.min_fidelity - 1) < 1e-10 and abs(e.max_fidelity - 1) < 1e-10
    assert e.max_probability_error < 1e-10
    assert abs(e.probability_sum - 1) < 1e-10
    assert e.max_route_disagreement < 1e-12


def test_enumeration_order_is_lexicographic():
    e = enumerate_all_outcomes(random_generic_inputs(2, 3), "entangled")
    assert [r.outcomes for r in e.reports] == list(itertools.product(BELL_OUTCOMES, repeat=2))


def test_sampled_enumeration():
    e = enumerate_all_outcomes(random_generic_inputs(3, 1), "entangled", samples=20, seed=5)
    assert not e.exhaustive and len(e.reports) == 20
    again = enumerate_all_outcomes(random_generic_inputs(3, 1), "entangled", samples=20, seed=5)
    assert [r.outcomes for r in e.reports] == [r.outcomes for r in again.reports]


def test_enumeration_limit():
    with pytest.raises(ResourceLimitError):
        enumerate_all_outcomes(random_generic_inputs(8, 0), "entangled")


@pytest.mark.parametrize("N", [2, 3])
def test_branch_amplitudes_match_sequential_projection(N):
    inputs = random_generic_inputs(N, 9)
    b = branch_amplitudes(inputs, "entangled")
    assert b.shape == (4,) * N + (2,) * N
    for outcomes in itertools.product(BELL_OUTCOMES, repeat=N):
        chi = b[tuple(BELL_OUTCOMES.index(o) for o in outcomes)].reshape(-1)
        assert abs(np.vdot(chi, chi).real - 4.0**-N) < 1e-12
        got = StateVector(N, chi / np.linalg.norm(chi))
        assert fidelity_mod_phase(got, pre_cascade_state(outcomes, inputs)) == pytest.approx(1, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.lists(input_qubits(), min_size=1, max_size=4))
def test_marginals_uniform_for_any_input(inputs):
    kind = "entangled" if len(inputs) > 1 else "product"
    np.testing.assert_allclose(outcome_marginals(inputs, kind), 0.25, atol=1e-10)
    np.testing.assert_allclose(outcome_distribution(inputs, kind), 4.0 ** -len(inputs), atol=1e-10)


def test_average_state_single_pair_from_branches():
    # average of the four one-qubit branches (a,b), (a,-b), (b,a), (-b,a), each 1/4
    a, b = np.sqrt(1 / 3), np.sqrt(2 / 3) * 1j
    rho = sum(np.outer(v, np.conj(v)) for v in ([a, b], [a, -b], [b, a], [-b, a])) / 4
    np.testing.assert_allclose(rho, np.eye(2) / 2, atol=1e-15)
    got = average_receiver_state([InputQubit(a, b)], "product")
    np.testing.assert_allclose(got.entries, rho, atol=1e-12)


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("seed", [0, 1])
def test_average_state_is_maximally_mixed(N, seed):
    kind = "entangled" if N > 1 else "product"
    rho = average_receiver_state(random_generic_inputs(N, seed), kind)
    np.testing.assert_allclose(rho.entries, np.eye(2**N) / 2**N, atol=1e-10)


@pytest.mark.parametrize("key", sorted(WITHHELD_ORACLE))
def test_withheld_fidelities_match_dense_oracle(key):
    N, withheld = key
    corrected, uncorrected = WITHHELD_ORACLE[key]
    inputs = random_generic_inputs(N, 7)
    for m in withheld_metrics(inputs, withheld):
        expected = corrected if m.corrected else uncorrected
        assert m.joint_fidelity == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("N, withheld", [(2, [1]), (3, [2]), (3, [1, 2])])
def test_withheld_models_agree_on_receiver(N, withheld):
    # measuring without broadcasting cannot signal to the receiver
    inputs = random_generic_inputs(N, 2)
    for corrected in (True, False):
        a = withheld_participation_state(inputs, N, withheld, WithheldModel.TraceOut, corrected)
        b = withheld_participation_state(inputs, N, withheld, WithheldModel.MeasureNoBroadcast, corrected)
        np.testing.assert_allclose(a.entries, b.entries, atol=1e-12)


@pytest.mark.parametrize("N", [2, 3])
def test_uncorrected_withheld_receiver_is_maximally_mixed(N):
    rho = withheld_participation_state(random_generic_inputs(N, 4), N, [1], corrected=False)
    np.testing.assert_allclose(rho.entries, np.eye(2**N) / 2**N, atol=1e-12)


def test_withheld_on_product_channel_keeps_participants():
    inputs = random_generic_inputs(3, 4)
    for m in withheld_metrics(inputs, [2], ChannelKind.Product):
        if m.corrected:
            assert m.per_qubit_fidelity[0] == pytest.approx(1, abs=1e-10)
            assert m.per_qubit_fidelity[2] == pytest.approx(1, abs=1e-10)
        assert m.joint_fidelity < 0.99


@pytest.mark.parametrize("bad", [[], [0], [4], [1, 2, 3]])
def test_withheld_argument_checks(bad):
    with pytest.raises(ValueError):
        withheld_participation_state(random_generic_inputs(3, 0), 3, bad)


@pytest.mark.parametrize("key", sorted(STOLEN_ORACLE, key=str))
def test_stolen_qubits_match_dense_oracle(key):
    N, outcomes = key
    got = stolen_qubits_fidelity(random_generic_inputs(N, 7), outcomes)
    assert got == pytest.approx(STOLEN_ORACLE[key], abs=1e-10)


def test_stolen_qubits_on_product_channel_are_fine():
    inputs = random_generic_inputs(3, 7)
    assert stolen_qubits_fidelity(inputs, (PM, SP, SM), "product") == pytest.approx(1, abs=1e-10)


def test_stolen_needs_two_senders():
    with pytest.raises(ValueError):
        stolen_qubits_fidelity(random_generic_inputs(1, 0), (PP,))


def test_withheld_model_parse():
    assert WithheldModel.parse("trace-out") is WithheldModel.TraceOut
    with pytest.raises(ValueError):
        WithheldModel.parse("vanish")
