"""Adaptive, principal-value and oscillatory-tail quadrature.

Finite intervals are handed to QUADPACK through ``scipy.integrate.quad``
(scalar integrands) or ``scipy.integrate.quad_vec`` (array-valued integrands,
e.g. one wavefunction sample per radius). Principal values use symmetric
excision around the pole; semi-infinite oscillatory tails are summed panel by
panel and accelerated by repeated averaging of the partial sums.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from config import settings
from scattering.core.errors import ScatteringError
from utils.logging_config import get_logger

logger = get_logger(__name__)

Integrand = Callable[[float], "float | np.ndarray"]

# Accepted overshoot of the error estimate over the requested tolerance
# before a QUADPACK warning is escalated to an error.
_ERROR_SLACK = 10.0

_POLE_PROBE_OFFSETS = (1e-3, 1e-6)
_POLE_GROWTH_LIMIT = 100.0

_ENVELOPE_MIN_RATE = 0.8
_ENVELOPE_SAMPLES = 33
_TAIL_MIN_PANELS = 8
_TAIL_AVERAGING_DEPTH = 12

_VECTOR_LIMIT = 10000
_QUAD_VEC_STATUS = {1: "maximum number of subintervals reached", 2: "round-off error detected"}


@dataclass(frozen=True)
class QuadratureResult:
    """Integral estimate; ``value`` is an array for vector integrands."""

    value: float | np.ndarray
    error_estimate: float
    evaluations: int

    def __post_init__(self) -> None:
        if not self.error_estimate >= 0:
            raise ValueError(f"error_estimate must be non-negative, got {self.error_estimate}")

    def __add__(self, other: QuadratureResult) -> QuadratureResult:
        return QuadratureResult(
            value=self.value + other.value,
            error_estimate=self.error_estimate + other.error_estimate,
            evaluations=self.evaluations + other.evaluations,
        )


ZERO_RESULT = QuadratureResult(value=0.0, error_estimate=0.0, evaluations=0)


@dataclass(frozen=True)
class PVSpec:
    """Principal-value request: a simple pole at ``singularity`` inside (lower, upper)."""

    singularity: float
    lower: float
    upper: float
    tolerance: float = settings.tol_abs
    window: float = settings.pv_window

    def __post_init__(self) -> None:
        if not self.lower < self.singularity < self.upper:
            raise ValueError(
                f"singularity {self.singularity} must lie strictly inside "
                f"[{self.lower}, {self.upper}]"
            )
        if not 0 < self.window <= 1:
            raise ValueError(f"window fraction must be in (0, 1], got {self.window}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")

    @property
    def half_width(self) -> float:
        return self.window * min(self.singularity - self.lower, self.upper - self.singularity)


class QuadratureError(ScatteringError):
    """Raised when an integral fails to converge; carries the best estimate."""

    def __init__(self, message: str, best_estimate: QuadratureResult | None = None):
        super().__init__(message)
        self.best_estimate = best_estimate


class PoleOrderError(QuadratureError):
    """Raised when a principal-value integrand has worse than a simple pole."""


class EnvelopeDecayError(QuadratureError):
    """Raised when an oscillatory tail decays too slowly to be summed."""


def _magnitude(value: float | np.ndarray) -> float:
    return float(np.max(np.abs(value)))


def integrate_adaptive(
    f: Integrand,
    a: float,
    b: float,
    tol: float | None = None,
    *,
    vectorized: bool = False,
    rel_tol: float | None = None,
    limit: int | None = None,
) -> QuadratureResult:
    """Integrate f over [a, b] by adaptive Gauss-Kronrod bisection.

    Args:
        f: Integrand. Returns a float, or an array when ``vectorized``.
        a: Lower limit.
        b: Upper limit.
        tol: Absolute tolerance (defaults to ``settings.tol_abs``).
        vectorized: Integrate an array-valued f with ``quad_vec`` (max norm).
        rel_tol: Relative tolerance (defaults to ``settings.tol_rel``).
        limit: Maximum number of subintervals.

    Returns:
        QuadratureResult with value, absolute error estimate and the number
        of integrand evaluations.

    Raises:
        QuadratureError: If the subdivision limit is reached (or QUADPACK
            reports trouble) with an error estimate above the tolerance.
    """
    tol = settings.tol_abs if tol is None else tol
    rel_tol = settings.tol_rel if rel_tol is None else rel_tol
    limit = settings.max_subdivisions if limit is None else limit
    if a == b:
        return ZERO_RESULT

    if vectorized:
        value, error, info = integrate.quad_vec(
            f, a, b, epsabs=tol, epsrel=rel_tol, norm="max", limit=max(limit, _VECTOR_LIMIT), full_output=True
        )
        value = np.asarray(value, dtype=float)
        evaluations = int(info.neval)
        failed = not info.success
        message = _QUAD_VEC_STATUS.get(info.status, f"status {info.status}")
    else:
        output = integrate.quad(f, a, b, epsabs=tol, epsrel=rel_tol, limit=limit, full_output=1)
        value, error, info = output[0], output[1], output[2]
        evaluations = int(info["neval"])
        failed = len(output) == 4
        message = output[3] if failed else ""

    result = QuadratureResult(value=value, error_estimate=float(error), evaluations=evaluations)
    target = max(tol, rel_tol * _magnitude(value))
    if failed and result.error_estimate > _ERROR_SLACK * target:
        logger.warning(
            "integrate_adaptive failed a=%.6g b=%.6g err=%.3g target=%.3g evals=%d",
            a, b, result.error_estimate, target, evaluations,
        )
        raise QuadratureError(
            f"adaptive quadrature on [{a}, {b}] did not converge: {message.strip()}",
            best_estimate=result,
        )
    return result


def _probe_pole_order(f: Integrand, c: float, h: float) -> None:
    # (x - c) f(x) must stay bounded on both sides for a simple pole.
    readings = []
    for offset in _POLE_PROBE_OFFSETS:
        q = h * offset
        right = _magnitude(q * np.asarray(f(c + q)))
        left = _magnitude(q * np.asarray(f(c - q)))
        readings.append(max(right, left))
    if not all(math.isfinite(v) for v in readings):
        raise PoleOrderError(f"integrand is not finite next to the pole at {c}")
    coarse, fine = readings
    if fine > _POLE_GROWTH_LIMIT * max(coarse, 1e-300):
        raise PoleOrderError(
            f"(x - c) f(x) grows from {coarse:.3g} to {fine:.3g} approaching c={c}; "
            "the singularity is not a simple pole"
        )


def pv_integrate(f: Integrand, spec: PVSpec, *, vectorized: bool = False) -> QuadratureResult:
    """Cauchy principal value of the integral of f across a simple pole.

    On the window [c - h, c + h] the folded integrand f(c + q) + f(c - q) is
    regular at q = 0 because the odd pole cancels pointwise; the remainders
    on either side are integrated adaptively.

    Raises:
        PoleOrderError: If the boundedness probe of (x - c) f(x) fails.
        QuadratureError: If any piece fails to converge.
    """
    c = spec.singularity
    h = spec.half_width
    _probe_pole_order(f, c, h)

    def folded(q):
        return f(c + q) + f(c - q)

    result = integrate_adaptive(folded, 0.0, h, spec.tolerance, vectorized=vectorized)
    if c - h > spec.lower:
        result = result + integrate_adaptive(f, spec.lower, c - h, spec.tolerance, vectorized=vectorized)
    if c + h < spec.upper:
        result = result + integrate_adaptive(f, c + h, spec.upper, spec.tolerance, vectorized=vectorized)

    logger.debug(
        "pv_integrate c=%.6g window=%.4g err=%.3g evals=%d",
        c, h, result.error_estimate, result.evaluations,
    )
    return result


def _window_peak(f: Integrand, start: float, width: float, samples: int = _ENVELOPE_SAMPLES) -> tuple[float, float]:
    xs = np.linspace(start, start + width, samples)
    peaks = [_magnitude(f(x)) for x in xs]
    i = int(np.argmax(peaks))
    return peaks[i], float(xs[i])


def _averaged_estimate(partial_sums: list) -> np.ndarray:
    # Euler/van Wijngaarden: repeatedly average neighbouring partial sums.
    depth = min(_TAIL_AVERAGING_DEPTH, len(partial_sums) - 1)
    sums = np.asarray(partial_sums[-(depth + 1):], dtype=float)
    while len(sums) > 1:
        sums = 0.5 * (sums[:-1] + sums[1:])
    return sums[0]


def integrate_tail_oscillatory(
    f: Integrand,
    a: float,
    period_scale: float,
    tol: float | None = None,
    *,
    vectorized: bool = False,
    max_panels: int | None = None,
) -> QuadratureResult:
    """Integrate an oscillatory f over [a, inf).

    The tail is cut into panels of width ``period_scale`` (half a period of
    the fastest oscillation). Partial sums are accelerated by repeated
    averaging; the error estimate is the change of the accelerated value over
    the last panel.

    Raises:
        EnvelopeDecayError: If the envelope decays more slowly than ~1/x.
        QuadratureError: If ``max_panels`` panels do not converge.
    """
    tol = settings.tol_abs if tol is None else tol
    max_panels = settings.tail_max_panels if max_panels is None else max_panels
    if not period_scale > 0:
        raise ValueError(f"period_scale must be positive, got {period_scale}")

    # The envelope is sampled over the whole first averaged block and once far out.
    block_samples = 8 * _TAIL_MIN_PANELS + 1
    near_peak, near_at = _window_peak(f, a, _TAIL_MIN_PANELS * period_scale, block_samples)
    near_start = a + period_scale
    far_start = max(4.0 * abs(near_start), near_start + 16.0 * period_scale)
    far_peak, far_at = _window_peak(f, far_start, 4.0 * period_scale)
    if max(near_peak, far_peak) * period_scale <= tol:
        zero = np.zeros_like(np.asarray(f(a), dtype=float)) if vectorized else 0.0
        return QuadratureResult(
            value=zero,
            error_estimate=max(near_peak, far_peak) * period_scale,
            evaluations=block_samples + _ENVELOPE_SAMPLES,
        )

    if far_peak > 0.0 and near_peak > 0.0:
        rate = math.log(near_peak / far_peak) / math.log(abs(far_at) / abs(near_at))
        if rate < _ENVELOPE_MIN_RATE:
            raise EnvelopeDecayError(
                f"tail envelope decays like x^-{rate:.2f}; at least 1/x decay is required"
            )

    partial_sums: list = []
    running: float | np.ndarray = 0.0
    evaluations = block_samples + _ENVELOPE_SAMPLES
    previous = None
    change = float("inf")
    x = a
    for panel in range(max_panels):
        piece = integrate_adaptive(f, x, x + period_scale, 0.1 * tol, vectorized=vectorized)
        evaluations += piece.evaluations
        running = running + piece.value
        partial_sums.append(running)
        x += period_scale

        estimate = _averaged_estimate(partial_sums)
        if previous is not None:
            change = _magnitude(estimate - previous)
            if panel + 1 >= _TAIL_MIN_PANELS and change <= tol:
                logger.debug("tail a=%.6g panels=%d err=%.3g evals=%d", a, panel + 1, change, evaluations)
                value = float(estimate) if not vectorized else estimate
                return QuadratureResult(value=value, error_estimate=change, evaluations=evaluations)
        previous = estimate

    best = QuadratureResult(
        value=previous if vectorized else float(previous), error_estimate=change, evaluations=evaluations
    )
    logger.warning("tail a=%.6g did not converge in %d panels err=%.3g", a, max_panels, change)
    raise QuadratureError(f"oscillatory tail from {a} did not converge in {max_panels} panels", best)
