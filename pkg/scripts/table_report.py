"""Print the generated correction tables and their diff against the published ones."""
from mpteleport.protocol import generate_correction_table
from mpteleport.tables import REFERENCE_NS, compare_with_reference


def show(N):
    rows = generate_correction_table(N)
    cmp = compare_with_reference(rows, N)
    print(f"N={N}: {cmp.matched}/{cmp.total} positional, {cmp.unordered_matched}/{cmp.total} order-insensitive")
    for d in cmp.mismatches:
        flag = "  (also order-insensitive)" if d in cmp.unordered_mismatches else ""
        print(f"  {' '.join(o.token for o in d.outcomes):<18} generated {d.generated:<8} printed {d.published}{flag}")


if __name__ == "__main__":
    for N in REFERENCE_NS:
        show(N)
