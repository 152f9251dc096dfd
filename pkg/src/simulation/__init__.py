"""Simulation: effective and full models, the protocol and its verification modes."""

from .decoherence import Dissipation
from .model import SystemParams
from .protocol import UnknownQubit

__all__ = ["Dissipation", "SystemParams", "UnknownQubit"]
