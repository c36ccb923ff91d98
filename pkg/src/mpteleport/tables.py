"""Published correction tables for N = 2, 3 and a row-by-row diff against generated ones."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from .channel import ChannelKind
from .protocol import (
    CorrectionRow,
    InputQubit,
    PauliString,
    apply_correction,
    pre_cascade_state,
    product_target,
    receiver_cnot_cascade,
)
from .statevector import BellOutcome, fidelity_mod_phase

REFERENCE_NS = (2, 3)

_FAMILY_SIGN = {
    ("phi", "+"): BellOutcome.PhiPlus,
    ("phi", "-"): BellOutcome.PhiMinus,
    ("psi", "+"): BellOutcome.PsiPlus,
    ("psi", "-"): BellOutcome.PsiMinus,
}


def load_reference_table(N: int) -> dict[tuple[BellOutcome, ...], str]:
    """Outcome tuple -> correction label exactly as printed."""
    if N not in REFERENCE_NS:
        raise ValueError(f"no published table for N={N}; available: {REFERENCE_NS}")
    text = resources.files("mpteleport.data").joinpath(f"table_n{N}.json").read_text()
    doc = json.loads(text)
    out = {}
    for row in doc["rows"]:
        key = tuple(_FAMILY_SIGN[f, s] for f, s in zip(row["families"], row["signs"]))
        out[key] = row["correction"]
    if len(out) != 4**N:
        raise ValueError(f"reference table for N={N} is incomplete")
    return out


@dataclass(frozen=True)
class RowDiff:
    outcomes: tuple[BellOutcome, ...]
    generated: str
    published: str


@dataclass(frozen=True)
class TableComparison:
    """Positional diff plus an order-insensitive diff per printed row.

    A printed row groups the outcome tuples sharing the same phi/psi pattern;
    ``unordered_mismatches`` counts entries of a group that have no partner in
    the generated group when order inside the group is ignored.
    """

    N: int
    total: int
    matched: int
    mismatches: tuple[RowDiff, ...]
    unordered_mismatches: tuple[RowDiff, ...] = ()

    @property
    def unordered_matched(self) -> int:
        return self.total - len(self.unordered_mismatches)


def compare_with_reference(rows: list[CorrectionRow], N: int) -> TableComparison:
    ref = load_reference_table(N)
    first = N + 1
    mismatches = []
    groups: dict[tuple[str, ...], list[tuple[CorrectionRow, PauliString]]] = {}
    for row in rows:
        published = PauliString.from_label(ref[row.outcomes], N, first)
        if published != row.correction:
            mismatches.append(RowDiff(row.outcomes, row.label(), ref[row.outcomes]))
        family = tuple(o.value[:3] for o in row.outcomes)
        groups.setdefault(family, []).append((row, published))
    unordered = []
    for members in groups.values():
        missing = Counter(r.correction for r, _ in members) - Counter(p for _, p in members)
        for row, published in members:
            if missing[row.correction] > 0:
                missing[row.correction] -= 1
                unordered.append(RowDiff(row.outcomes, row.label(), ref[row.outcomes]))
    return TableComparison(
        N, len(rows), len(rows) - len(mismatches), tuple(mismatches), tuple(unordered)
    )


def correction_fidelity(
    outcomes: Sequence[BellOutcome], correction: PauliString, inputs: Sequence[InputQubit]
) -> float:
    """Fidelity reached when ``correction`` follows the cascade on this branch."""
    s = pre_cascade_state(outcomes, inputs, ChannelKind.Entangled)
    s = apply_correction(receiver_cnot_cascade(s, len(inputs)), correction)
    return fidelity_mod_phase(s, product_target(inputs))
