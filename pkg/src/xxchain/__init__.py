"""Simulation library for protected qubit chains and wide-margin adiabatic gates."""

__version__ = "0.1.0"

from . import envelopes, evolve, flow, noise, operators, pauli, readout, schedule  # noqa: E402,F401
from . import config, experiments  # noqa: E402,F401

__all__ = [
    "__version__",
    "config",
    "envelopes",
    "evolve",
    "experiments",
    "flow",
    "noise",
    "operators",
    "pauli",
    "readout",
    "schedule",
]
