"""Command-line front end: ``python -m phaseshift compare|wavefunction|validate``."""

from phaseshift.cli import main

__all__ = ["main"]
