"""Spherical Bessel functions and the free reduced radial solutions.

The free solutions are delta-normalized in momentum,

    ybar_l(r, k) = sqrt(2/pi) * kr * j_l(kr)
    ntilde_l(r, k) = sqrt(2/pi) * kr * n_l(kr)

so that int_0^inf ybar_l(r, k) ybar_l(r, k') dr = delta(k - k').
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike
from scipy import special

from scattering.core.errors import ScatteringError
from scattering.core.params import MAX_ANGULAR_MOMENTUM

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

_SERIES_MAX_TERMS = 60
_SINC_SERIES_CUTOFF = 1e-4


class SpecialFunctionDomainError(ScatteringError, ValueError):
    """Raised when a special function is evaluated outside its domain."""


def _check_order(l: int) -> None:
    if int(l) != l or l < 0 or l > MAX_ANGULAR_MOMENTUM:
        raise SpecialFunctionDomainError(f"order l must be an integer in [0, {MAX_ANGULAR_MOMENTUM}], got {l}")


def _flatten(x: ArrayLike) -> tuple[np.ndarray, tuple[int, ...]]:
    arr = np.asarray(x, dtype=float)
    return np.atleast_1d(arr).ravel(), arr.shape


def _restore(values: np.ndarray, shape: tuple[int, ...]) -> float | np.ndarray:
    return float(values[0]) if shape == () else values.reshape(shape)


def _scalar_or_array(values: np.ndarray) -> float | np.ndarray:
    return float(values) if values.ndim == 0 else values


def series_threshold(l: int) -> float:
    """Argument below which j_l is summed from its ascending series."""
    return max(0.1, 0.5 * l)


def _double_factorial_odd(l: int) -> float:
    return float(np.prod(np.arange(1, 2 * l + 2, 2, dtype=float)))


def _ascending_series(l: int, x: np.ndarray) -> np.ndarray:
    # j_l(x) = x^l / (2l+1)!! * sum_k (-x^2/2)^k / (k! (2l+3)(2l+5)...(2l+2k+1))
    term = x**l / _double_factorial_odd(l)
    total = term.copy()
    step = -0.5 * x * x
    for k in range(1, _SERIES_MAX_TERMS):
        term = term * step / (k * (2 * l + 2 * k + 1))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def spherical_bessel_j(l: int, x: ArrayLike) -> float | np.ndarray:
    """Spherical Bessel function j_l(x) on the real line.

    Small arguments use the ascending series so the trigonometric closed
    forms never cancel catastrophically near the origin.
    """
    _check_order(l)
    x, shape = _flatten(x)
    out = np.empty_like(x)
    small = np.abs(x) < series_threshold(l)
    out[small] = _ascending_series(l, x[small])
    out[~small] = special.spherical_jn(l, x[~small])
    return _restore(out, shape)


def spherical_neumann_n(l: int, x: ArrayLike) -> float | np.ndarray:
    """Spherical Neumann function n_l(x) for x > 0, with n_0(x) = -cos(x)/x.

    Raises:
        SpecialFunctionDomainError: If any argument is not strictly positive.
    """
    _check_order(l)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise SpecialFunctionDomainError("spherical_neumann_n requires x > 0")
    return _scalar_or_array(special.spherical_yn(l, x))


def sinc(x: ArrayLike) -> float | np.ndarray:
    """Unnormalized sinc, sin(x)/x, with a series branch near zero."""
    x, shape = _flatten(x)
    out = np.empty_like(x)
    small = np.abs(x) < _SINC_SERIES_CUTOFF
    xs = x[small]
    x2 = xs * xs
    out[small] = 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    xl = x[~small]
    out[~small] = np.sin(xl) / xl
    return _restore(out, shape)


def _check_momentum(k: ArrayLike) -> None:
    if np.any(np.asarray(k) <= 0):
        raise SpecialFunctionDomainError("free solutions require momentum k > 0")


def free_regular(l: int, k: ArrayLike, r: ArrayLike) -> float | np.ndarray:
    """Regular free solution ybar_l(r, k); vanishes at r = 0 for every l."""
    _check_momentum(k)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise SpecialFunctionDomainError("free_regular requires r >= 0")
    x = np.asarray(k, dtype=float) * r
    return SQRT_2_OVER_PI * x * spherical_bessel_j(l, x)


def free_irregular(l: int, k: ArrayLike, r: ArrayLike) -> float | np.ndarray:
    """Irregular free solution ntilde_l(r, k), defined for r > 0."""
    _check_momentum(k)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise SpecialFunctionDomainError("free_irregular is singular at r = 0")
    x = np.asarray(k, dtype=float) * r
    return SQRT_2_OVER_PI * x * spherical_neumann_n(l, x)
