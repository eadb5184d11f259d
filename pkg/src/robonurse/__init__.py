"""Deterministic ward simulator and IoT control stack for a robot nurse."""

__version__ = "0.1.0"
