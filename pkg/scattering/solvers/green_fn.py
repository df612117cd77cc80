"""Green-function iteration of the radial integral equation.

    y_{n+1}(r) = ybar(r) - int_0^inf dr' G(r, r') V(r') y_n(r')

with the symmetric kernel G = -(pi m / k) ybar(r<) ntilde(r>). Each
iteration adds one order in the coupling. Outside the potential the iterate
is ybar + (pi m / p) ntilde * int ybar V y_n, so its sin coefficient stays 1
while its cos coefficient collects b_1 + b_2 + ...; the phase is read after
dividing out the norm.

The nested integrals are evaluated from cumulative tables on one dense
support grid: the inner integral is accumulated once, not once per outer
node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from config import settings
from scattering.core.errors import ScatteringError
from scattering.core.quadrature import integrate_adaptive
from scattering.core.results import PhaseShiftResult
from scattering.core.specfun import SpecialFunctionDomainError, free_irregular, free_regular
from scattering.potential import PotentialModel, RangeClass, check_admissible
from scattering.solvers.asymptotics import RadialWavefunction
from utils.logging_config import get_logger

logger = get_logger(__name__)

NODES_PER_WAVELENGTH = 64


class DegenerateCoefficientsError(ScatteringError, ValueError):
    """Raised when both asymptotic coefficients vanish."""


@dataclass
class GreenIterate:
    """The n-th Green-function iterate and its asymptotic coefficients.

    ``terms`` holds the order-by-order pieces c_0 = ybar, c_1, ..., c_n on
    ``support_grid``; ``b_terms`` holds their cos coefficients b_1..b_n.
    """

    order: int
    samples: RadialWavefunction
    A_n: float
    B_n: float
    Delta_n: float
    b_terms: tuple[float, ...] = ()
    support_grid: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    terms: list[np.ndarray] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        if self.order < 0 or len(self.b_terms) != self.order:
            raise ValueError(f"order {self.order} needs {self.order} cos coefficients, got {len(self.b_terms)}")
        if self.order == 0 and self.Delta_n != 0.0:
            raise ValueError("the zeroth iterate is the free solution, with zero phase")


def green_function(l: int, k: float, r: float, r_prime: float, m: float) -> float:
    """Symmetric free Green function G(r, r').

    Raises:
        SpecialFunctionDomainError: If r or r' is not positive.
    """
    if not (r > 0 and r_prime > 0):
        raise SpecialFunctionDomainError(f"green_function needs r, r' > 0, got r={r}, r'={r_prime}")
    lesser, greater = (r, r_prime) if r <= r_prime else (r_prime, r)
    return float(-(math.pi * m / k) * free_regular(l, k, lesser) * free_irregular(l, k, greater))


def support_grid(model: PotentialModel, p: float) -> np.ndarray:
    """Uniform grid on [0, support], at least 64 nodes per wavelength."""
    support = model.support_radius
    per_wavelength = int(math.ceil(NODES_PER_WAVELENGTH * p * support / (2.0 * math.pi))) + 1
    return np.linspace(0.0, support, max(settings.green_support_nodes, per_wavelength))


def _potential_on(model: PotentialModel, grid: np.ndarray) -> np.ndarray:
    # Inside value at the edge of a finite range.
    return model.coupling * np.asarray(model.shape(grid), dtype=float)


def _free_pair(l: int, p: float, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    regular = np.asarray(free_regular(l, p, grid), dtype=float)
    irregular = np.zeros_like(grid)
    irregular[1:] = free_irregular(l, p, grid[1:])
    return regular, irregular


def _next_term(
    model: PotentialModel, l: int, p: float, m: float, grid: np.ndarray, term: np.ndarray
) -> tuple[np.ndarray, float]:
    regular, irregular = _free_pair(l, p, grid)
    v = _potential_on(model, grid)
    inner_regular = regular * v * term
    inner_irregular = irregular * v * term
    # ntilde * c vanishes at the origin for a regular c.
    inner_irregular[0] = 0.0
    lower = cumulative_simpson(inner_regular, x=grid, initial=0.0)
    upper_cumulative = cumulative_simpson(inner_irregular, x=grid, initial=0.0)
    upper = upper_cumulative[-1] - upper_cumulative
    scale = math.pi * m / p
    next_term = scale * (irregular * lower + regular * upper)
    next_term[0] = 0.0
    b = -scale * float(lower[-1])
    return next_term, b


def _evaluate(
    l: int, p: float, grid: np.ndarray, terms: list[np.ndarray], b_terms: tuple[float, ...], r_grid: np.ndarray
) -> np.ndarray:
    support = grid[-1]
    inside = r_grid <= support
    outside = ~inside
    values = np.asarray(free_regular(l, p, r_grid), dtype=float).copy()
    irregular_outside = np.asarray(free_irregular(l, p, r_grid[outside]), dtype=float) if outside.any() else None
    for term, b in zip(terms[1:], b_terms):
        if inside.any():
            values[inside] += CubicSpline(grid, term)(r_grid[inside])
        if irregular_outside is not None:
            values[outside] -= b * irregular_outside
    return values


def _make_iterate(
    l: int,
    p: float,
    grid: np.ndarray,
    terms: list[np.ndarray],
    b_terms: tuple[float, ...],
    r_grid: np.ndarray,
) -> GreenIterate:
    r_grid = np.asarray(r_grid, dtype=float)
    samples = RadialWavefunction(r_grid, _evaluate(l, p, grid, terms, b_terms, r_grid), p, l)
    b_total = float(sum(b_terms))
    delta = phase_from_coeffs(1.0, b_total) if b_terms else 0.0
    return GreenIterate(
        order=len(b_terms),
        samples=samples,
        A_n=1.0,
        B_n=b_total,
        Delta_n=delta,
        b_terms=b_terms,
        support_grid=grid,
        terms=terms,
    )


def free_iterate(model: PotentialModel, l: int, p: float, r_grid: np.ndarray | None = None) -> GreenIterate:
    """Zeroth iterate: the free regular solution."""
    check_admissible(model)
    grid = support_grid(model, p)
    r_grid = grid if r_grid is None else r_grid
    return _make_iterate(l, p, grid, [np.asarray(free_regular(l, p, grid), dtype=float)], (), r_grid)


def iterate(
    model: PotentialModel,
    l: int,
    p: float,
    m: float,
    prev: GreenIterate,
    r_grid: np.ndarray | None = None,
) -> GreenIterate:
    """Next iterate y_{n+1} = ybar - int G V y_n, sampled on ``r_grid``.

    For finite-range models the integral ends at R exactly.

    Raises:
        ValueError: If ``prev`` was built on a different support grid.
    """
    check_admissible(model)
    grid = support_grid(model, p)
    if not np.array_equal(prev.support_grid, grid):
        raise ValueError("previous iterate belongs to a different model or momentum")
    if model.coupling == 0.0:
        term, b = np.zeros_like(grid), 0.0
    else:
        term, b = _next_term(model, l, p, m, grid, prev.terms[-1])
    r_grid = grid if r_grid is None else r_grid
    result = _make_iterate(l, p, grid, [*prev.terms, term], (*prev.b_terms, b), r_grid)
    logger.debug(
        "green iterate order=%d p=%.6g nodes=%d b=%.12g Delta=%.12g", result.order, p, len(grid), b, result.Delta_n
    )
    return result


def first_order_coeffs(model: PotentialModel, l: int, p: float, m: float, r_max: float) -> tuple[float, float]:
    """(A1, B1) = (pi m / p) (int ntilde V ybar, int ybar V ybar) over [0, r_max].

    delta1 = -B1 once r_max covers the potential. The integration stops at
    the support radius; for finite range that is R exactly.

    Raises:
        InadmissiblePotentialError: For potentials decaying like 1/r or slower.
        QuadratureError: If the position integral fails.
    """
    check_admissible(model)
    if not r_max > 0:
        raise ValueError(f"r_max must be positive, got {r_max}")
    if model.coupling == 0.0:
        return 0.0, 0.0
    upper = min(r_max, model.support_radius)
    edges = [0.0, *sorted(d for d in model.discontinuities if d < upper), upper]
    if model.range_class is not RangeClass.FINITE and model.scale_radius < upper:
        edges = sorted({*edges, model.scale_radius})

    def diagonal(r: float) -> float:
        y = free_regular(l, p, r)
        return float(y * model.coupling * model.shape(np.asarray(r)) * y)

    def mixed(r: float) -> float:
        return float(free_irregular(l, p, r) * model.coupling * model.shape(np.asarray(r)) * free_regular(l, p, r))

    scale = math.pi * m / p
    a_total = 0.0
    b_total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        a_total += integrate_adaptive(mixed, a, b).value
        b_total += integrate_adaptive(diagonal, a, b).value
    return scale * a_total, scale * b_total


def phase_from_coeffs(A: float, B: float) -> float:
    """Renormalized phase: cos = A/norm, sin = B/norm, i.e. atan2(B, A).

    Raises:
        DegenerateCoefficientsError: If A = B = 0.
    """
    if A == 0.0 and B == 0.0:
        raise DegenerateCoefficientsError("cannot extract a phase from (A, B) = (0, 0)")
    return math.atan2(B, A)


def norm_drift(state: GreenIterate) -> float:
    """sqrt(A^2 + B^2) - 1: how far the iterate's asymptotic norm has moved."""
    return math.hypot(state.A_n, state.B_n) - 1.0


def first_order_phase(model: PotentialModel, l: int, p: float, m: float) -> PhaseShiftResult:
    """delta1 = -B1 from the adaptive position integral."""
    _, b1 = first_order_coeffs(model, l, p, m, model.support_radius)
    return PhaseShiftResult(method="green", order=1, value=-b1)


def second_order_phase(model: PotentialModel, l: int, p: float, m: float) -> PhaseShiftResult:
    """Second-order phase from the second iterate.

    The value is the O(lambda^2) part b_2 of the renormalized phase. The
    literal Delta2 - delta1 differs from it at O(lambda^3) and is reported
    in the diagnostics, together with the norm drift of the iterate.
    """
    check_admissible(model)
    if model.coupling == 0.0:
        return PhaseShiftResult(method="green", order=2, value=0.0, diagnostics={"norm_drift": 0.0})
    second = iterate(model, l, p, m, iterate(model, l, p, m, free_iterate(model, l, p)))
    b1, b2 = second.b_terms
    return PhaseShiftResult(
        method="green",
        order=2,
        value=b2,
        diagnostics={
            "b1": b1,
            "Delta2": second.Delta_n,
            "Delta2_minus_delta1": second.Delta_n - b1,
            "norm_drift": norm_drift(second),
            "support_nodes": len(second.support_grid),
        },
    )
