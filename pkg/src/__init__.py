"""Teleportation simulator for atoms in a driven, detuned cavity."""
__version__ = "1.0.0"
