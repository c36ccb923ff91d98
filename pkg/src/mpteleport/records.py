"""JSON run records.

A record is one JSON object with keys ``schema_version``, ``command``,
``config``, ``result`` and ``timing``. Complex amplitudes are ``[re, im]``
pairs written with Python's shortest round-trip float repr, so reading and
re-writing a record reproduces it byte for byte.
"""
from __future__ import annotations

import json
from typing import Any

from .harness import RuleCheck, ScenarioConfig, ScenarioReport, Tally
from .oracle import Enumeration, WithheldMetrics
from .protocol import InputQubit, Transcript
from .statevector import StateVector

SCHEMA_VERSION = 1


def pair(z: complex) -> list[float]:
    z = complex(z)
    # normalise -0.0 so equal states serialise identically
    return [z.real + 0.0, z.imag + 0.0]


def state_to_pairs(s: StateVector | None) -> list[list[float]] | None:
    return None if s is None else [pair(z) for z in s.amps]


def nonzero_terms(s: StateVector) -> dict[str, list[float]]:
    return {bits: pair(z) for bits, z in s.nonzero_terms().items()}


def input_to_dict(q: InputQubit) -> dict[str, list[float]]:
    return {"a": pair(q.a), "b": pair(q.b)}


def transcript_to_dict(t: Transcript) -> dict[str, Any]:
    return {
        "N": t.N,
        "channel_kind": t.channel_kind.value,
        "inputs": None if t.inputs is None else [input_to_dict(q) for q in t.inputs],
        "outcomes": [None if o is None else o.token for o in t.outcomes],
        "outcome_probability": t.outcome_probability,
        "cascade_applied": t.cascade_applied,
        "correction": None if t.correction is None else list(t.correction.ops),
        "final_state": state_to_pairs(t.final_state),
        "fidelity": t.fidelity,
        "rng_seed": t.rng_seed,
        "aborted": t.aborted,
    }


def config_to_dict(c: ScenarioConfig) -> dict[str, Any]:
    return {
        "N": c.N,
        "channel_kind": c.channel_kind.value,
        "participation": list(c.participation),
        "seed": c.seed,
        "forced": None if c.forced is None else [o.token for o in c.forced],
        "vote_mode": c.vote_mode,
        # the vote list itself stays out of the record
        "votes_configured": c.votes is not None,
        "inputs": None if c.inputs is None else [input_to_dict(q) for q in c.inputs],
        "withheld_model": c.withheld_model.value,
        "hide_basis": c.hide_basis,
    }


def metrics_to_dict(m: WithheldMetrics) -> dict[str, Any]:
    return {
        "model": m.model.value,
        "corrected": m.corrected,
        "joint_fidelity": m.joint_fidelity,
        "per_qubit_fidelity": list(m.per_qubit_fidelity),
    }


def rule_to_dict(r: RuleCheck) -> dict[str, Any]:
    return {"rule": r.rule, "passed": r.passed, "measured": r.measured, "detail": r.detail}


def tally_to_dict(t: Tally | None) -> dict[str, int] | None:
    return None if t is None else {"yes": t.yes, "no": t.no}


def report_to_dict(r: ScenarioReport) -> dict[str, Any]:
    return {
        "transcript": transcript_to_dict(r.transcript),
        "schedule": list(r.schedule),
        "bus_log": [[s, o.token] for s, o in r.bus_log],
        "per_qubit_fidelity": list(r.per_qubit_fidelity),
        "joint_fidelity": r.joint_fidelity,
        "tally": tally_to_dict(r.tally),
        "encoding_basis": r.encoding_basis,
        "rule_checks": [rule_to_dict(c) for c in r.rule_checks],
        "withheld_model": None if r.withheld_model is None else r.withheld_model.value,
        "failure_metrics": [metrics_to_dict(m) for m in r.failure_metrics],
    }


def enumeration_to_dict(e: Enumeration) -> dict[str, Any]:
    return {
        "N": e.N,
        "channel_kind": e.channel_kind.value,
        "exhaustive": e.exhaustive,
        "count": len(e.reports),
        "min_fidelity": e.min_fidelity,
        "max_fidelity": e.max_fidelity,
        "probability_sum": e.probability_sum,
        "max_probability_error": e.max_probability_error,
        "max_route_disagreement": e.max_route_disagreement,
    }


def make_record(command: list[str], config: dict, result: dict, timing: float | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": list(command),
        "config": config,
        "result": result,
        "timing": timing,
    }


def dumps(record: dict) -> str:
    return json.dumps(record, indent=2, allow_nan=False) + "\n"


def loads(text: str) -> dict:
    record = json.loads(text)
    if "schema_version" not in record:
        raise ValueError("not a run record: schema_version missing")
    if record["schema_version"] != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {record['schema_version']}")
    return record
