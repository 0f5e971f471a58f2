"""Simulation of the symmetric three-party qutrit state, its secret-sharing and
pair QKD protocols, and the heralded OAM optics that produce it."""

__version__ = "0.1.0"
