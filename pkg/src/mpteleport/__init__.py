"""All-or-nothing teleportation of N qubits to one receiver over a 2N-qubit channel."""
from .channel import ChannelKind, ChannelLayout, build_entangled_channel, build_product_channel
from .protocol import InputQubit, PauliString, Transcript, run_protocol
from .statevector import BellOutcome, StateVector

__all__ = [
    "BellOutcome",
    "ChannelKind",
    "ChannelLayout",
    "InputQubit",
    "PauliString",
    "StateVector",
    "Transcript",
    "build_entangled_channel",
    "build_product_channel",
    "run_protocol",
]
__version__ = "0.1.0"
