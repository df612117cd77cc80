"""Partial-wave phase shifts from unitary perturbation theory, with oracles."""

__version__ = "0.1.0"
