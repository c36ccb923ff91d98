"""Fidelity of the receiver's first N-1 qubits when the cascade target is missing."""
import itertools

import numpy as np

from mpteleport.oracle import stolen_qubits_fidelity
from mpteleport.protocol import random_generic_inputs
from mpteleport.statevector import BELL_OUTCOMES

for N in (2, 3, 4):
    for kind in ("entangled", "product"):
        vals = [
            stolen_qubits_fidelity(random_generic_inputs(N, seed), outs, kind)
            for seed in range(5)
            for outs in itertools.product(BELL_OUTCOMES, repeat=N)
        ]
        print(f"N={N} {kind:<9} min {np.min(vals):.4f} mean {np.mean(vals):.4f} max {np.max(vals):.4f}")
