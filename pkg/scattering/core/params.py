"""Scattering parameter record and its dimensionless groups.

Natural units with hbar = 1. The coupling lambda carries energy x length so
that the well depth lambda/R is an energy and eta = lambda*m/p is
dimensionless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MAX_ANGULAR_MOMENTUM = 10


@dataclass(frozen=True)
class ScatteringParams:
    """Physical inputs of one partial-wave scattering problem."""

    m: float
    R: float
    coupling: float
    l: int
    p: float

    def __post_init__(self) -> None:
        if not self.m > 0:
            raise ValueError(f"mass must be positive, got {self.m}")
        if not self.R > 0:
            raise ValueError(f"range R must be positive, got {self.R}")
        if not self.p > 0:
            raise ValueError(f"momentum p must be positive, got {self.p}")
        if self.l < 0 or self.l > MAX_ANGULAR_MOMENTUM or int(self.l) != self.l:
            raise ValueError(f"l must be an integer in [0, {MAX_ANGULAR_MOMENTUM}], got {self.l}")
        if not math.isfinite(self.coupling):
            raise ValueError(f"coupling must be finite, got {self.coupling}")

    @property
    def kappa(self) -> float:
        return self.p * self.R

    @classmethod
    def from_dimensionless(
        cls,
        kappa: float,
        eta: float,
        m: float = 1.0,
        R: float = 1.0,
        l: int = 0,
    ) -> ScatteringParams:
        """Build the parameter record that realises a given (kappa, eta) pair."""
        p = kappa / R
        return cls(m=m, R=R, coupling=eta * p / m, l=l, p=p)


@dataclass(frozen=True)
class DimensionlessGroups:
    """eta, kappa and the interior momentum of the spherical well/barrier.

    ``kappa_prime`` is always a non-negative magnitude. When ``evanescent`` is
    set the interior solution is a real exponential and ``kappa_prime`` is the
    magnitude of the imaginary interior momentum.
    """

    eta: float
    kappa: float
    kappa_prime: float
    evanescent: bool


def derive_dimensionless(params: ScatteringParams) -> DimensionlessGroups:
    """Derive (eta, kappa, kappa') for a well of depth coupling/R.

    The interior kinetic energy is p^2/2m - coupling/R, which gives
    kappa'^2 = kappa^2 - 2*eta*kappa.
    """
    eta = params.coupling * params.m / params.p
    kappa = params.kappa
    if params.coupling == 0.0:
        return DimensionlessGroups(eta=0.0, kappa=kappa, kappa_prime=kappa, evanescent=False)

    discriminant = kappa * kappa - 2.0 * eta * kappa
    return DimensionlessGroups(
        eta=eta,
        kappa=kappa,
        kappa_prime=math.sqrt(abs(discriminant)),
        evanescent=discriminant < 0.0,
    )
