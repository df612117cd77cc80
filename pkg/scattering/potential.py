"""Potential models and their matrix elements in the free basis.

A model is V(r) = coupling * U(r). Matrix elements are taken of the shape U
alone (coupling divided out):

    U_l(k1, k2) = int_0^inf ybar_l(r, k1) U(r) ybar_l(r, k2) dr
"""

from __future__ import annotations

import functools
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from config import settings
from scattering.core.errors import ScatteringError
from scattering.core.quadrature import integrate_adaptive
from scattering.core.specfun import free_regular, sinc
from utils.logging_config import get_logger

logger = get_logger(__name__)

GAUSSIAN_SUPPORT_LENGTHS = 8.0

ElementFunction = Callable[[float, float], float]


class RangeClass(str, Enum):
    """Large-r behaviour of a potential."""

    FINITE = "finite"
    EXPONENTIAL = "exponential"
    POWER = "power"


class InadmissiblePotentialError(ScatteringError, ValueError):
    """Raised when a potential decays too slowly or is too singular at the origin."""


@dataclass(frozen=True)
class PotentialModel:
    """A local, spherically symmetric potential V(r) = coupling * shape(r).

    Attributes:
        name: Model identifier (``well``, ``barrier``, ``gaussian``, ...).
        coupling: Strength lambda, in energy x length.
        shape: Vectorized U(r).
        range_class: Large-r class of the shape.
        scale_radius: R for finite range, the decay length otherwise.
        decay_exponent: alpha for power-law tails, ignored otherwise.
        origin_exponent: s in U ~ r^-s as r -> 0 (0 for a regular origin).
        discontinuities: Radii where U jumps.
        s_wave_element: Closed-form U_0(k1, k2), when one exists.
    """

    name: str
    coupling: float
    shape: Callable[[np.ndarray], np.ndarray]
    range_class: RangeClass
    scale_radius: float
    decay_exponent: float = math.inf
    origin_exponent: float = 0.0
    discontinuities: tuple[float, ...] = field(default_factory=tuple)
    s_wave_element: ElementFunction | None = None

    def __post_init__(self) -> None:
        if not self.scale_radius > 0:
            raise ValueError(f"scale_radius must be positive, got {self.scale_radius}")

    def evaluate(self, r: float | np.ndarray) -> float | np.ndarray:
        """V(r) = coupling * U(r); identically zero beyond a finite range."""
        r = np.asarray(r, dtype=float)
        values = self.coupling * np.asarray(self.shape(r), dtype=float)
        if self.range_class is RangeClass.FINITE:
            values = np.where(r > self.scale_radius, 0.0, values)
        return float(values) if values.ndim == 0 else values

    def evaluate_sides(self, r: float) -> tuple[float, float]:
        """V just inside and just outside r (they differ at a discontinuity)."""
        return (
            float(self.evaluate(np.nextafter(r, -math.inf))),
            float(self.evaluate(np.nextafter(r, math.inf))),
        )

    @property
    def support_radius(self) -> float:
        """Radius beyond which V is (numerically) zero."""
        if self.range_class is RangeClass.FINITE:
            return self.scale_radius
        return GAUSSIAN_SUPPORT_LENGTHS * self.scale_radius

    def with_coupling(self, coupling: float) -> PotentialModel:
        return PotentialModel(
            name=self.name,
            coupling=coupling,
            shape=self.shape,
            range_class=self.range_class,
            scale_radius=self.scale_radius,
            decay_exponent=self.decay_exponent,
            origin_exponent=self.origin_exponent,
            discontinuities=self.discontinuities,
            s_wave_element=self.s_wave_element,
        )


def check_admissible(model: PotentialModel) -> None:
    """Reject potentials outside the reach of the phase-shift methods.

    The potential must fall off faster than 1/r and may diverge at the origin
    no faster than 1/r^2.

    Raises:
        InadmissiblePotentialError: If either condition fails.
    """
    if model.range_class is RangeClass.POWER and not model.decay_exponent > 1.0:
        raise InadmissiblePotentialError(
            f"{model.name}: power-law decay r^-{model.decay_exponent} is not faster than 1/r"
        )
    if not model.origin_exponent < 2.0:
        raise InadmissiblePotentialError(
            f"{model.name}: origin divergence r^-{model.origin_exponent} is not milder than 1/r^2"
        )


def matrix_element_well_s(R: float, k1: float, k2: float) -> float:
    """Closed-form s-wave element of the uniform well shape U = 1/R on [0, R]."""
    return float((sinc((k1 - k2) * R) - sinc((k1 + k2) * R)) / math.pi)


def matrix_element(
    model: PotentialModel,
    l: int,
    k1: float,
    k2: float,
    tol: float | None = None,
) -> float:
    """U_l(k1, k2) by position-space quadrature.

    The arguments are sorted before integrating so that swapping k1 and k2
    returns the identical float.

    Raises:
        InadmissiblePotentialError: Before any integration, for inadmissible models.
        ValueError: If a momentum is not positive.
    """
    check_admissible(model)
    if not (k1 > 0 and k2 > 0):
        raise ValueError(f"momenta must be positive, got k1={k1}, k2={k2}")
    tol = settings.element_tol if tol is None else tol
    lo, hi = (k1, k2) if k1 <= k2 else (k2, k1)

    def integrand(r: float) -> float:
        return float(free_regular(l, lo, r) * model.shape(np.asarray(r)) * free_regular(l, hi, r))

    if model.range_class is RangeClass.FINITE:
        edges: Sequence[float] = (0.0, *sorted(d for d in model.discontinuities if d < model.scale_radius), model.scale_radius)
    else:
        edges = (0.0, model.scale_radius, model.support_radius)

    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += integrate_adaptive(integrand, a, b, tol).value
    return total


def element_function(
    model: PotentialModel,
    l: int,
    tol: float | None = None,
    prefer_closed_form: bool = True,
) -> ElementFunction:
    """Memoised, exactly symmetric (k1, k2) -> U_l(k1, k2) for one model."""
    check_admissible(model)
    if prefer_closed_form and l == 0 and model.s_wave_element is not None:
        closed = model.s_wave_element

        def closed_element(k1: float, k2: float) -> float:
            return closed(k1, k2) if k1 <= k2 else closed(k2, k1)

        return closed_element

    @functools.lru_cache(maxsize=1 << 16)
    def cached(lo: float, hi: float) -> float:
        return matrix_element(model, l, lo, hi, tol)

    def element(k1: float, k2: float) -> float:
        return cached(k1, k2) if k1 <= k2 else cached(k2, k1)

    return element


@dataclass
class KernelMatrix:
    """A momentum-space matrix on a quadrature grid.

    ``entries`` holds U_l(k_i, k_j) for a potential kernel, or the real
    coefficient T of -i for a generator (Theta = -i T). A set
    ``diagonal_excluded`` flag marks the principal-part rule: the diagonal is
    exactly zero.
    """

    nodes: np.ndarray
    weights: np.ndarray
    entries: np.ndarray
    diagonal_excluded: bool = False

    def __post_init__(self) -> None:
        n = len(self.nodes)
        if self.entries.shape != (n, n) or len(self.weights) != n:
            raise ValueError("entries must be n x n and weights length n for n nodes")
        if self.diagonal_excluded and np.any(np.diag(self.entries) != 0.0):
            raise ValueError("diagonal_excluded kernel has non-zero diagonal entries")

    @property
    def size(self) -> int:
        return len(self.nodes)

    def is_symmetric(self, atol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.entries - self.entries.T) <= atol))

    def weighted(self) -> np.ndarray:
        """sqrt(w_i) M_ij sqrt(w_j), symmetrised for a symmetric M."""
        s = np.sqrt(self.weights)
        scaled = s[:, None] * self.entries * s[None, :]
        return 0.5 * (scaled + scaled.T)


def build_kernel(
    model: PotentialModel,
    l: int,
    nodes: np.ndarray,
    weights: np.ndarray | None = None,
    element: ElementFunction | None = None,
) -> KernelMatrix:
    """Fill U_l(k_i, k_j) on a strictly increasing positive grid.

    Each unordered pair is computed once and mirrored, so the result is
    exactly symmetric. The numeric matrix element is used unless an
    ``element`` function is supplied.
    """
    nodes = np.asarray(nodes, dtype=float)
    if np.any(nodes <= 0) or np.any(np.diff(nodes) <= 0):
        raise ValueError("kernel grid must be strictly increasing and positive")
    weights = np.ones_like(nodes) if weights is None else np.asarray(weights, dtype=float)
    if element is None:
        element = element_function(model, l, prefer_closed_form=False)

    n = len(nodes)
    entries = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            entries[i, j] = entries[j, i] = element(nodes[i], nodes[j])
    logger.debug("build_kernel model=%s l=%d n=%d", model.name, l, n)
    return KernelMatrix(nodes=nodes, weights=weights, entries=entries)


def square_well(R: float, coupling: float) -> PotentialModel:
    """Uniform well/barrier V = coupling/R on r <= R (attractive for coupling < 0)."""
    return PotentialModel(
        name="well",
        coupling=coupling,
        shape=lambda r: np.where(np.asarray(r) <= R, 1.0 / R, 0.0),
        range_class=RangeClass.FINITE,
        scale_radius=R,
        discontinuities=(R,),
        s_wave_element=functools.partial(matrix_element_well_s, R),
    )


def square_barrier(R: float, coupling: float) -> PotentialModel:
    """Repulsive uniform barrier; the coupling must be non-negative."""
    if coupling < 0:
        raise InadmissiblePotentialError(f"a barrier needs a non-negative coupling, got {coupling}")
    model = square_well(R, coupling)
    return PotentialModel(
        name="barrier",
        coupling=model.coupling,
        shape=model.shape,
        range_class=model.range_class,
        scale_radius=model.scale_radius,
        discontinuities=model.discontinuities,
        s_wave_element=model.s_wave_element,
    )


def gaussian_bump(width: float, coupling: float) -> PotentialModel:
    """Smooth bump U = exp(-r^2/w^2)/w with no closed-form element."""
    return PotentialModel(
        name="gaussian",
        coupling=coupling,
        shape=lambda r: np.exp(-((np.asarray(r) / width) ** 2)) / width,
        range_class=RangeClass.EXPONENTIAL,
        scale_radius=width,
    )


def null_potential(R: float = 1.0) -> PotentialModel:
    """U identically zero on a finite range; the free-problem fixed point."""
    return PotentialModel(
        name="null",
        coupling=0.0,
        shape=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        range_class=RangeClass.FINITE,
        scale_radius=R,
        s_wave_element=lambda k1, k2: 0.0,
    )


def make_potential(kind: str, R: float, coupling: float, width: float = 1.0) -> PotentialModel:
    """Model factory behind the ``potential.kind`` config key."""
    builders = {
        "well": lambda: square_well(R, coupling),
        "barrier": lambda: square_barrier(R, coupling),
        "gaussian": lambda: gaussian_bump(width, coupling),
    }
    if kind not in builders:
        raise ValueError(f"unknown potential kind {kind!r}; expected one of {sorted(builders)}")
    return builders[kind]()
