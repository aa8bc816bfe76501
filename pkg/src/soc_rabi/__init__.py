"""Spin-orbit coupled quantum well as an anisotropic Rabi model."""

__version__ = "0.1.0"
