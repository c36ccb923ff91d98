"""Sweep withheld-sender fidelities over seeded generic inputs.

    python3 scripts/withhold_sweep.py --n 3 --lists 20
"""
import argparse
import itertools

import numpy as np

from mpteleport.channel import ChannelKind
from mpteleport.oracle import withheld_metrics
from mpteleport.protocol import random_generic_inputs


def sweep(N, lists, kind):
    subsets = [w for k in range(1, N) for w in itertools.combinations(range(1, N + 1), k)]
    stats = {}
    for seed in range(lists):
        inputs = random_generic_inputs(N, seed)
        for w in subsets:
            for m in withheld_metrics(inputs, w, kind):
                stats.setdefault((w, m.model.value, m.corrected), []).append(m.joint_fidelity)
    return stats


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--lists", type=int, default=20)
    ap.add_argument("--kind", choices=[k.value for k in ChannelKind], default="entangled")
    args = ap.parse_args()
    stats = sweep(args.n, args.lists, ChannelKind.parse(args.kind))
    print(f"{'withheld':<10} {'model':<22} {'corrected':<10} {'mean':>8} {'max':>8}")
    for (w, model, corrected), vals in sorted(stats.items()):
        print(f"{','.join(map(str, w)):<10} {model:<22} {str(corrected):<10} "
              f"{np.mean(vals):8.4f} {np.max(vals):8.4f}")


if __name__ == "__main__":
    main()
