"""Command-line entry point.

Exit codes: 0 success, 1 I/O error, 2 usage error, 3 protocol incomplete
(a sender withheld), 4 verification failure. ``MPTELEPORT_SEED`` sets the
default seed.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from typing import Sequence

import numpy as np

from . import records
from .channel import MAX_SENDERS, ChannelKind, ChannelLayout, build_channel, verify_channel_structure
from .harness import ScenarioConfig, run_scenario
from .oracle import (
    MAX_AVERAGE_N,
    MAX_ENUMERATE_N,
    WithheldModel,
    average_receiver_state,
    enumerate_all_outcomes,
    outcome_distribution,
    outcome_marginals,
)
from .protocol import MAX_TABLE_N, InputQubit, generate_correction_table, random_generic_inputs, run_protocol
from .statevector import BellOutcome
from .tables import REFERENCE_NS, compare_with_reference

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_INCOMPLETE, EXIT_VERIFY = 0, 1, 2, 3, 4
EXHAUSTIVE_MAX_N = 4
SEED_ENV = "MPTELEPORT_SEED"


class UsageError(Exception):
    pass


def _default_seed() -> int:
    value = os.environ.get(SEED_ENV)
    if value is None:
        return 0
    try:
        return int(value)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {value!r}") from None


def parse_outcomes(text: str) -> tuple[BellOutcome, ...]:
    try:
        return tuple(BellOutcome.from_token(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def parse_inputs(text: str) -> tuple[InputQubit, ...]:
    """``"a,b;a,b;..."`` with Python complex literals; each pair is normalized."""
    out = []
    for chunk in text.split(";"):
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) != 2:
            raise UsageError(f"input {chunk!r} must be 'a,b'")
        try:
            a, b = (complex(p.replace(" ", "")) for p in parts)
        except ValueError:
            raise UsageError(f"cannot parse amplitudes in {chunk!r}") from None
        norm = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
        if norm == 0:
            raise UsageError(f"input {chunk!r} is the zero vector")
        out.append(InputQubit(a / norm, b / norm))
    return tuple(out)


def parse_votes(text: str) -> tuple[int, ...]:
    if not text or any(c not in "01" for c in text):
        raise UsageError(f"votes must be a string of 0/1, got {text!r}")
    return tuple(int(c) for c in text)


def parse_range(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(text)]
    except ValueError:
        raise UsageError(f"bad N range {text!r}; use e.g. 3 or 1..4") from None


def _write(record: dict, out: str | None) -> None:
    if out is None:
        return
    text = records.dumps(record)
    if out == "-":
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)


def _fmt(x: float | None) -> str:
    return "n/a" if x is None else f"{x:.12g}"


def cmd_channel(args, argv) -> int:
    N = args.n
    if not 1 <= N <= MAX_SENDERS:
        raise UsageError(f"--n must lie in 1..{MAX_SENDERS}")
    layout = ChannelLayout(N, ChannelKind.parse(args.kind))
    s = layout.build()
    terms = records.nonzero_terms(s)
    norm = float(np.sum(np.abs(s.amps) ** 2))
    ok = verify_channel_structure(s, N, layout.kind)
    print(f"channel N={N} kind={layout.kind.value}: {len(terms)} terms, norm {norm:.15g}, structure {'ok' if ok else 'VIOLATED'}")
    config = {"N": N, "kind": layout.kind.value}
    result = {"num_qubits": s.num_qubits, "terms": terms, "norm": norm, "structure_ok": ok}
    _write(records.make_record(argv, config, result), args.out)
    return EXIT_OK


def cmd_run(args, argv) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    N = args.n
    if not 1 <= N <= MAX_SENDERS:
        raise UsageError(f"--n must lie in 1..{MAX_SENDERS}")
    kind = ChannelKind.parse(args.kind)
    forced = parse_outcomes(args.forced) if args.forced else None
    if forced is not None and len(forced) != N:
        raise UsageError(f"--forced needs {N} outcomes")
    votes = parse_votes(args.votes) if args.votes else None
    if votes is not None and len(votes) != N:
        raise UsageError(f"--votes needs {N} bits")
    inputs = parse_inputs(args.inputs) if args.inputs else None
    if inputs is not None and len(inputs) != N:
        raise UsageError(f"--inputs needs {N} qubits")
    if inputs is not None and votes is not None:
        raise UsageError("--inputs and --votes are exclusive")
    withheld = []
    if args.withhold:
        try:
            withheld = sorted({int(k) for k in args.withhold.split(",")})
        except ValueError:
            raise UsageError("--withhold takes comma-separated sender indices") from None
        if any(not 1 <= k <= N for k in withheld) or len(withheld) == N:
            raise UsageError("--withhold must name a proper subset of senders 1..N")

    t0 = time.perf_counter()
    if votes is None and not withheld:
        qubits = inputs if inputs is not None else tuple(random_generic_inputs(N, seed))
        t = run_protocol(qubits, kind, forced=forced, seed=seed)
        config = {"N": N, "channel_kind": kind.value, "seed": seed,
                  "forced": None if forced is None else [o.token for o in forced]}
        result = {"transcript": records.transcript_to_dict(t)}
        print(f"outcomes: {' '.join(o.token for o in t.outcomes)}")
        print(f"correction: {t.correction.label(N + 1)}")
        print(f"fidelity: {_fmt(t.fidelity)}")
        code = EXIT_OK
    else:
        config_obj = ScenarioConfig(
            N=N,
            channel_kind=kind,
            participation=tuple(i not in withheld for i in range(1, N + 1)),
            seed=seed,
            forced=forced,
            vote_mode=votes is not None,
            votes=votes,
            inputs=inputs,
            withheld_model=WithheldModel.parse(args.withheld_model),
            hide_basis=args.hide_basis,
            check_rules=args.check_rules,
        )
        report = run_scenario(config_obj)
        config = records.config_to_dict(config_obj)
        result = records.report_to_dict(report)
        t = report.transcript
        if t.complete:
            print(f"fidelity: {_fmt(t.fidelity)}")
            if report.tally is not None:
                print(f"tally: yes={report.tally.yes} no={report.tally.no}")
            code = EXIT_OK
        else:
            print(f"protocol incomplete: sender(s) {','.join(map(str, withheld))} withheld; cascade not applied")
            print(f"joint fidelity (this run): {_fmt(report.joint_fidelity)}")
            for m in report.failure_metrics:
                tag = "corrected" if m.corrected else "uncorrected"
                print(f"  {m.model.value:<22} {tag:<12} joint fidelity {_fmt(m.joint_fidelity)}")
            code = EXIT_INCOMPLETE
        for rc in report.rule_checks:
            print(f"rule ({rc.rule}): {'pass' if rc.passed else 'FAIL'} measured={rc.measured:.3g}")
    timing = time.perf_counter() - t0 if args.timing else None
    _write(records.make_record(argv, config, result, timing), args.out)
    return code


def cmd_tables(args, argv) -> int:
    N = args.n
    if not 1 <= N <= MAX_TABLE_N:
        raise UsageError(f"--n must lie in 1..{MAX_TABLE_N}")
    if args.compare == "published" and N not in REFERENCE_NS:
        raise UsageError(f"published tables exist only for N in {REFERENCE_NS}")
    rows = generate_correction_table(N)
    for row in rows:
        print(f"{' '.join(o.token for o in row.outcomes):<{5 * N}}  {row.label():<12} {row.state}")
    result = {
        "rows": [
            {"outcomes": [o.token for o in r.outcomes], "correction": r.label(),
             "state": r.state, "fidelity": r.fidelity}
            for r in rows
        ]
    }
    if args.compare == "published":
        cmp = compare_with_reference(rows, N)
        print(f"{cmp.matched}/{cmp.total} rows match the published table")
        for d in cmp.mismatches:
            print(f"  mismatch at {' '.join(o.token for o in d.outcomes)}: generated {d.generated}, published {d.published}")
        print(f"{cmp.unordered_matched}/{cmp.total} match when order within each printed row is ignored")
        for d in cmp.unordered_mismatches:
            print(f"  no published counterpart for {d.generated} ({' '.join(o.token for o in d.outcomes)})")
        result["comparison"] = {
            "matched": cmp.matched,
            "total": cmp.total,
            "mismatches": [
                {"outcomes": [o.token for o in d.outcomes], "generated": d.generated, "published": d.published}
                for d in cmp.mismatches
            ],
            "unordered_matched": cmp.unordered_matched,
            "unordered_mismatches": [
                {"outcomes": [o.token for o in d.outcomes], "generated": d.generated, "published": d.published}
                for d in cmp.unordered_mismatches
            ],
        }
    _write(records.make_record(argv, {"N": N, "compare": args.compare}, result), args.out)
    return EXIT_OK


VERIFY_PROPERTIES = (
    "structure", "fidelity", "uniform_prob", "closure", "routes_agree", "marginals", "avg_state",
)


def verify_n(N: int, samples: int, seed: int) -> dict[str, bool | None]:
    """Property matrix row for one N; ``None`` marks a property not evaluated."""
    inputs = random_generic_inputs(N, seed)
    exhaustive = N <= EXHAUSTIVE_MAX_N
    row: dict[str, bool | None] = {}
    row["structure"] = all(
        verify_channel_structure(build_channel(N, k), N, k)
        for k in (ChannelKind.Product, ChannelKind.Entangled)
    )
    fid = uniform = agree = closure = marg = True
    for kind in ChannelKind:
        e = enumerate_all_outcomes(
            inputs, kind, samples=None if exhaustive else samples, seed=seed
        )
        fid &= e.min_fidelity > 1 - 1e-10
        uniform &= e.max_probability_error < 1e-10
        agree &= e.max_route_disagreement < 1e-12
        closure &= abs(float(outcome_distribution(inputs, kind).sum()) - 1) < 1e-9
        marg &= float(np.max(np.abs(outcome_marginals(inputs, kind) - 0.25))) < 1e-10
    row.update(fidelity=fid, uniform_prob=uniform, closure=closure, routes_agree=agree, marginals=marg)
    if N <= MAX_AVERAGE_N:
        other = random_generic_inputs(N, seed + 1)
        ok = True
        for kind in ChannelKind:
            a = average_receiver_state(inputs, kind).entries
            b = average_receiver_state(other, kind).entries
            ok &= float(np.max(np.abs(a - np.eye(2**N) / 2**N))) < 1e-10
            ok &= float(np.max(np.abs(a - b))) < 1e-10
        row["avg_state"] = ok
    else:
        row["avg_state"] = None
    return row


def cmd_verify(args, argv) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    ns = parse_range(args.n)
    if not ns or min(ns) < 1 or max(ns) > MAX_ENUMERATE_N:
        raise UsageError(f"--n must lie within 1..{MAX_ENUMERATE_N}")
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    matrix = {}
    print("N  mode        " + " ".join(f"{p:>12}" for p in VERIFY_PROPERTIES))
    for N in ns:
        row = verify_n(N, args.samples, seed)
        matrix[N] = row
        mode = "exhaustive" if N <= EXHAUSTIVE_MAX_N else f"sampled:{args.samples}"
        cells = " ".join(
            f"{'-' if row[p] is None else ('pass' if row[p] else 'FAIL'):>12}" for p in VERIFY_PROPERTIES
        )
        print(f"{N:<2} {mode:<11} {cells}")
    all_ok = all(v is not False for row in matrix.values() for v in row.values())
    print("all properties pass" if all_ok else "VERIFICATION FAILED")
    config = {"N": ns, "samples": args.samples, "seed": seed}
    result = {"matrix": {str(N): row for N, row in matrix.items()}, "passed": all_ok}
    _write(records.make_record(argv, config, result), args.out)
    return EXIT_OK if all_ok else EXIT_VERIFY


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mpteleport", description="All-or-nothing multiparty teleportation simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("channel", help="build a shared channel and dump its amplitudes")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--kind", choices=[k.value for k in ChannelKind], default="entangled")
    c.add_argument("--out", help="write the run record here ('-' for stdout)")
    c.set_defaults(func=cmd_channel)

    r = sub.add_parser("run", help="run the protocol or a voting/withholding scenario")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--kind", choices=[k.value for k in ChannelKind], default="entangled")
    r.add_argument("--inputs", help="'a,b;a,b;...' amplitudes, normalized per qubit")
    r.add_argument("--votes", help="vote bits, e.g. 011 (0 = no, 1 = yes)")
    r.add_argument("--forced", help="comma-separated outcomes: phi+ phi- psi+ psi-")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--withhold", help="comma-separated sender indices that do not broadcast")
    r.add_argument("--withheld-model", choices=[m.value for m in WithheldModel], default="trace-out")
    r.add_argument("--hide-basis", action="store_true", help="leave the vote encoding basis out of the report")
    r.add_argument("--check-rules", action="store_true", help="evaluate voting rules (2)-(4)")
    r.add_argument("--timing", action="store_true", help="record wall time (breaks byte-identical output)")
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("tables", help="emit the verified correction table")
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--compare", choices=["none", "published"], default="none")
    t.add_argument("--out")
    t.set_defaults(func=cmd_tables)

    v = sub.add_parser("verify", help="run the oracle property suite")
    v.add_argument("--n", default="1..3", help="N or lo..hi within 1..7")
    v.add_argument("--samples", type=int, default=256)
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
