"""Closed-form s-wave solution of the spherical well/barrier.

For V = lambda/R on r <= R the interior momentum obeys
kappa'^2 = kappa^2 - 2 eta kappa. Matching the interior solution to the
exterior free solutions at r = R gives the determinants

    A0 = kappa^2 j0(kappa') n0'(kappa) - kappa' kappa n0(kappa) j0'(kappa')
    B0 = kappa' kappa j0(kappa) j0'(kappa') - kappa^2 j0(kappa') j0'(kappa)

and exp(2 i delta0) = (A0 - i B0)^2 / (A0^2 + B0^2).
"""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from scattering.core.errors import ScatteringError
from scattering.core.params import ScatteringParams, derive_dimensionless
from scattering.core.results import PhaseShiftResult
from scattering.potential import PotentialModel
from utils.logging_config import get_logger

logger = get_logger(__name__)

DEFAULT_ETA_STEP = 0.01
RICHARDSON_TOLERANCE = 1e-7

_SMALL_ARGUMENT = 1e-4


class SeriesExtrapolationError(ScatteringError):
    """Raised when the eta-derivative extrapolation does not settle."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class UnsupportedModelError(ScatteringError, ValueError):
    """Raised when the closed form is asked for a model it does not cover."""


@dataclass(frozen=True)
class ExactWellSolution:
    """Matching determinants and the s-wave phase shift.

    ``delta0`` lies in (-pi/2, pi/2]; ``delta0 + branch * pi`` is the
    continuous phase along an unwrapped sweep.
    """

    A0: float
    B0: float
    delta0: float
    branch: int = 0
    evanescent: bool = False

    def __post_init__(self) -> None:
        if self.A0 == 0.0 and self.B0 == 0.0:
            raise ValueError("matching determinants (A0, B0) must not both vanish")
        if not -math.pi / 2 < self.delta0 <= math.pi / 2:
            raise ValueError(f"delta0 must lie in (-pi/2, pi/2], got {self.delta0}")

    @property
    def unwrapped(self) -> float:
        return self.delta0 + self.branch * math.pi

    @property
    def s_matrix(self) -> complex:
        """exp(2 i delta0) from the determinants."""
        z = complex(self.A0, -self.B0)
        return z * z / (self.A0 * self.A0 + self.B0 * self.B0)


def _reduce_half_period(angle: float) -> float:
    if angle > math.pi / 2:
        return angle - math.pi
    if angle <= -math.pi / 2:
        return angle + math.pi
    return angle


def _interior_factors(kappa_prime: float, evanescent: bool) -> tuple[float, float]:
    # J = j0(kappa'), D = kappa' j0'(kappa') = cos(kappa') - J, continued to
    # sinh/cosh when the interior momentum is imaginary.
    x = kappa_prime
    if evanescent:
        j = math.sinh(x) / x if x > _SMALL_ARGUMENT else 1.0 + x * x / 6.0
        return j, math.cosh(x) - j
    j = math.sin(x) / x if x > _SMALL_ARGUMENT else 1.0 - x * x / 6.0
    return j, math.cos(x) - j


def exact_phase_shift_s(params: ScatteringParams) -> ExactWellSolution:
    """Exact s-wave phase shift of the well/barrier of depth coupling/R.

    The phase is atan2(-B0, A0) reduced to (-pi/2, pi/2], so that a small
    repulsive coupling gives a small negative phase.

    Raises:
        UnsupportedModelError: If ``params.l`` is not 0.
    """
    if params.l != 0:
        raise UnsupportedModelError(f"the closed-form well solution covers l = 0 only, got l = {params.l}")
    groups = derive_dimensionless(params)
    kappa = groups.kappa
    sin_k, cos_k = math.sin(kappa), math.cos(kappa)
    if params.coupling == 0.0:
        # kappa' = kappa: A0 = sin^2 + cos^2 and B0 is a vanishing Wronskian.
        return ExactWellSolution(A0=1.0, B0=0.0, delta0=0.0)

    j, d = _interior_factors(groups.kappa_prime, groups.evanescent)
    # n0(x) = -cos x / x and j0(x) = sin x / x, with their derivatives at kappa.
    n0 = -cos_k / kappa
    n0_prime = sin_k / kappa + cos_k / kappa**2
    j0 = sin_k / kappa
    j0_prime = cos_k / kappa - sin_k / kappa**2
    a0 = kappa * kappa * j * n0_prime - kappa * n0 * d
    b0 = kappa * j0 * d - kappa * kappa * j * j0_prime

    delta = _reduce_half_period(math.atan2(-b0, a0))
    logger.debug(
        "exact_phase_shift_s kappa=%.6g eta=%.6g kappa_prime=%.6g evanescent=%s delta=%.12g",
        kappa, groups.eta, groups.kappa_prime, groups.evanescent, delta,
    )
    return ExactWellSolution(A0=a0, B0=b0, delta0=delta, evanescent=groups.evanescent)


def unwrap_branches(solutions: Sequence[ExactWellSolution]) -> list[ExactWellSolution]:
    """Assign branch windings so delta0 + branch*pi is continuous along a sweep.

    The sweep must be dense enough that the true phase moves by less than
    pi/2 between neighbours.
    """
    if not solutions:
        return []
    deltas = np.array([s.delta0 for s in solutions])
    continuous = np.unwrap(deltas, period=math.pi)
    branches = np.rint((continuous - deltas) / math.pi).astype(int)
    return [dataclasses.replace(s, branch=int(b)) for s, b in zip(solutions, branches)]


def exact_phase_shift(model: PotentialModel, l: int, p: float, m: float) -> PhaseShiftResult:
    """Exact phase shift as a PhaseShiftResult, for the uniform well and barrier.

    Raises:
        UnsupportedModelError: For other models or l != 0.
    """
    if model.name not in ("well", "barrier", "null"):
        raise UnsupportedModelError(f"no closed-form solution for the {model.name!r} potential")
    params = ScatteringParams(m=m, R=model.scale_radius, coupling=model.coupling, l=l, p=p)
    solution = exact_phase_shift_s(params)
    return PhaseShiftResult(
        method="exact",
        value=solution.delta0,
        diagnostics={"A0": solution.A0, "B0": solution.B0, "evanescent": solution.evanescent},
    )


def _richardson(estimates: Sequence[float]) -> tuple[float, float]:
    # Step halving with an h^2 leading error: two Richardson levels.
    coarse, mid, fine = estimates
    first = (4.0 * mid - coarse) / 3.0
    second = (4.0 * fine - mid) / 3.0
    return (16.0 * second - first) / 15.0, abs(second - first)


def eta_series_coefficients(
    params_at_eta0: ScatteringParams,
    orders: int = 2,
    h: float | None = None,
    tol: float = RICHARDSON_TOLERANCE,
) -> tuple[float, ...]:
    """Coefficients c_n of delta0 = c1 eta + c2 eta^2 + ... at fixed kappa.

    c1 = d delta0 / d eta and c2 = (1/2) d^2 delta0 / d eta^2 at eta = 0, by
    central differences with steps h, h/2 and h/4 and Richardson
    extrapolation. Only kappa, m and R are taken from ``params_at_eta0``.

    Args:
        params_at_eta0: Parameter point fixing kappa (its coupling is ignored).
        orders: 1 for (c1,), 2 for (c1, c2).
        h: Largest eta step; defaults to min(0.01, kappa/400).
        tol: Bound on the Richardson residual, relative to max(1, |c_n|).

    Raises:
        ValueError: If orders is not 1 or 2, or h is not positive.
        SeriesExtrapolationError: If h reaches the radius of convergence
            kappa/2 or the Richardson residual exceeds the tolerance.
    """
    if orders not in (1, 2):
        raise ValueError(f"orders must be 1 or 2, got {orders}")
    kappa = params_at_eta0.kappa
    if h is None:
        h = min(DEFAULT_ETA_STEP, kappa / 400.0)
    if not h > 0:
        raise ValueError(f"eta step must be positive, got {h}")
    if not h < 0.5 * kappa:
        raise SeriesExtrapolationError(
            f"eta step {h} is outside the radius of convergence kappa/2 = {0.5 * kappa}",
            {"h": h, "kappa": kappa},
        )

    def phase(eta: float) -> float:
        point = ScatteringParams.from_dimensionless(
            kappa, eta, m=params_at_eta0.m, R=params_at_eta0.R, l=params_at_eta0.l
        )
        return exact_phase_shift_s(point).delta0

    steps = (h, 0.5 * h, 0.25 * h)
    pairs = [(phase(s), phase(-s)) for s in steps]
    first = [(plus - minus) / (2.0 * s) for s, (plus, minus) in zip(steps, pairs)]
    second = [(plus + minus) / (2.0 * s * s) for s, (plus, minus) in zip(steps, pairs)]

    coefficients = []
    residuals = []
    for estimates in (first, second)[:orders]:
        value, residual = _richardson(estimates)
        coefficients.append(value)
        residuals.append(residual)
        if residual > tol * max(1.0, abs(value)):
            raise SeriesExtrapolationError(
                f"Richardson residual {residual:.3g} for c{len(coefficients)} exceeds {tol:.3g}; reduce the eta step",
                {"h": h, "kappa": kappa, "estimates": estimates, "residual": residual},
            )
    logger.debug("eta_series kappa=%.6g h=%.3g coeffs=%s residuals=%s", kappa, h, coefficients, residuals)
    return tuple(coefficients)
