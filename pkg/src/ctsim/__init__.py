"""Simulator for (k, m)-threshold controlled teleportation and its security."""

__version__ = "0.1.0"

from . import adversary, channels, entanglement, gametheory, protocol, qcore  # noqa: F401
