"""Unitary stationary perturbation theory.

The interacting and free Hamiltonians are related by U = exp(-i Theta) with
Theta = lambda*Theta1 + lambda^2/2*Theta2. In the free momentum basis the
generator elements are purely imaginary; they are stored as the real
coefficient of -i.

    Theta1(k1, k2) = -i 2m U(k1, k2) / (k1^2 - k2^2)
    delta1 = -(pi m / p) lambda U(p, p)
    delta2 = (2 pi m^2 / p) lambda^2 PV int_0^inf U(k, p)^2 / (k^2 - p^2) dk

The diagonal of Theta is excluded (principal-part rule), which keeps the
first-order correction orthogonal to the unperturbed state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import linalg

from scattering.core.errors import ScatteringError
from scattering.core.quadrature import (
    PVSpec,
    QuadratureResult,
    integrate_tail_oscillatory,
    pv_integrate,
)
from scattering.core.results import PhaseShiftResult
from scattering.core.specfun import free_regular
from scattering.potential import (
    KernelMatrix,
    PotentialModel,
    build_kernel,
    check_admissible,
    element_function,
)
from scattering.run_config import QuadConfig
from scattering.solvers.asymptotics import RadialWavefunction
from utils.logging_config import get_logger

logger = get_logger(__name__)


class DiagonalSingularityError(ScatteringError, ValueError):
    """Raised when a generator element is requested on the diagonal k1 == k2."""


@dataclass(frozen=True)
class GeneratorElement:
    """One generator matrix element, Theta(k1, k2) = -i * value."""

    order: int
    k1: float
    k2: float
    value: float

    def __post_init__(self) -> None:
        if self.order not in (1, 2):
            raise ValueError(f"generator order must be 1 or 2, got {self.order}")


@dataclass
class PerturbativeWavefunction:
    """First-order wavefunction from the unitary transformation."""

    p: float
    samples: RadialWavefunction
    pv_diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.samples.samples[0] != 0.0:
            raise ValueError("perturbative wavefunction must vanish at r = 0")


def momentum_cut(p: float, scale_radius: float, quad_cfg: QuadConfig) -> float:
    """Upper end of the finite momentum integral; beyond it the tail is summed."""
    if quad_cfg.k_cut_over_p is not None:
        return quad_cfg.k_cut_over_p * p
    return p + quad_cfg.k_cut_margin / scale_radius


def _check_off_diagonal(k1: float, k2: float) -> None:
    if k1 == k2:
        raise DiagonalSingularityError(
            f"generator elements are undefined on the diagonal k1 = k2 = {k1}; "
            "use the principal-value machinery instead"
        )


def theta1(model: PotentialModel, l: int, k1: float, k2: float, m: float) -> GeneratorElement:
    """First-order generator element, stored as 2m U(k1, k2) / (k1^2 - k2^2).

    Raises:
        DiagonalSingularityError: If k1 == k2.
    """
    _check_off_diagonal(k1, k2)
    element = element_function(model, l)
    value = 2.0 * m * element(k1, k2) / (k1 * k1 - k2 * k2)
    return GeneratorElement(order=1, k1=k1, k2=k2, value=value)


def theta2(
    model: PotentialModel,
    l: int,
    k1: float,
    k2: float,
    m: float,
    quad_cfg: QuadConfig | None = None,
) -> GeneratorElement:
    """Second-order generator element.

    The inner momentum integral has simple poles at k = k1 and k = k2. The
    domain is split at their midpoint so each side carries one pole and is
    handled by a single-pole principal value; the tail beyond the momentum
    cut is summed separately.

    Raises:
        DiagonalSingularityError: If k1 == k2.
        ValueError: If a pole lies beyond the momentum cut.
    """
    _check_off_diagonal(k1, k2)
    quad_cfg = quad_cfg or QuadConfig()
    element = element_function(model, l)
    lo, hi = min(k1, k2), max(k1, k2)
    k_cut = momentum_cut(hi, model.scale_radius, quad_cfg)
    if not hi < k_cut:
        raise ValueError(f"pole at k={hi} must lie inside the momentum cut {k_cut}")

    def integrand(k: float) -> float:
        product = 2.0 * m * element(k1, k) * element(k, k2)
        return product * (1.0 / (k1 * k1 - k * k) - 1.0 / (k * k - k2 * k2))

    mid = 0.5 * (lo + hi)
    tol = quad_cfg.tol_abs
    inner = pv_integrate(integrand, PVSpec(lo, 0.0, mid, tol, quad_cfg.pv_window))
    inner = inner + pv_integrate(integrand, PVSpec(hi, mid, k_cut, tol, quad_cfg.pv_window))
    inner = inner + integrate_tail_oscillatory(
        integrand, k_cut, math.pi / (2.0 * model.scale_radius), tol, max_panels=quad_cfg.tail_max_panels
    )
    value = 2.0 * m * inner.value / (k1 * k1 - k2 * k2)
    return GeneratorElement(order=2, k1=k1, k2=k2, value=value)


def _on_shell_element(model: PotentialModel, l: int, p: float) -> float:
    return element_function(model, l)(p, p)


def delta1(model: PotentialModel, l: int, p: float, m: float) -> PhaseShiftResult:
    """First-order phase shift -(pi m / p) <p|V|p>."""
    check_admissible(model)
    if model.coupling == 0.0:
        return PhaseShiftResult(method="unitary", order=1, value=0.0)
    value = -(math.pi * m / p) * model.coupling * _on_shell_element(model, l, p)
    return PhaseShiftResult(method="unitary", order=1, value=value)


def _second_order_integral(
    model: PotentialModel, l: int, p: float, quad_cfg: QuadConfig
) -> tuple[QuadratureResult, QuadratureResult, float]:
    element = element_function(model, l)

    def integrand(k: float) -> float:
        u = element(k, p)
        return u * u / (k * k - p * p)

    k_cut = momentum_cut(p, model.scale_radius, quad_cfg)
    finite = pv_integrate(integrand, PVSpec(p, 0.0, k_cut, quad_cfg.tol_abs, quad_cfg.pv_window))
    tail = integrate_tail_oscillatory(
        integrand,
        k_cut,
        math.pi / (2.0 * model.scale_radius),
        quad_cfg.tol_abs,
        max_panels=quad_cfg.tail_max_panels,
    )
    return finite, tail, k_cut


def delta2(model: PotentialModel, l: int, p: float, m: float, quad_cfg: QuadConfig | None = None) -> PhaseShiftResult:
    """Second-order phase shift (2 pi m^2 / p) lambda^2 PV int U(k,p)^2/(k^2-p^2) dk.

    Raises:
        QuadratureError: If the principal value or the tail fails to converge.
    """
    check_admissible(model)
    quad_cfg = quad_cfg or QuadConfig()
    if model.coupling == 0.0:
        return PhaseShiftResult(method="unitary", order=2, value=0.0)

    finite, tail, k_cut = _second_order_integral(model, l, p, quad_cfg)
    prefactor = 2.0 * math.pi * m * m / p * model.coupling**2
    return PhaseShiftResult(
        method="unitary",
        order=2,
        value=prefactor * (finite.value + tail.value),
        error_estimate=prefactor * (finite.error_estimate + tail.error_estimate),
        diagnostics={
            "k_cut": k_cut,
            "pv_evaluations": finite.evaluations,
            "tail_value": prefactor * tail.value,
            "tail_evaluations": tail.evaluations,
        },
    )


def unitary_phase_shifts(
    model: PotentialModel, l: int, p: float, m: float, quad_cfg: QuadConfig | None = None
) -> tuple[PhaseShiftResult, PhaseShiftResult]:
    """delta1 and delta2 together."""
    return delta1(model, l, p, m), delta2(model, l, p, m, quad_cfg)


def first_order_wavefunction(
    model: PotentialModel,
    l: int,
    p: float,
    m: float,
    r_grid: np.ndarray,
    quad_cfg: QuadConfig | None = None,
) -> PerturbativeWavefunction:
    """y(r) = ybar(r, p) - lambda PV int dk ybar(r, k) 2m U(k, p) / (k^2 - p^2).

    All radii are integrated together as one vector-valued momentum integral.
    """
    check_admissible(model)
    quad_cfg = quad_cfg or QuadConfig()
    r_grid = np.asarray(r_grid, dtype=float)
    free = np.asarray(free_regular(l, p, r_grid), dtype=float)
    if model.coupling == 0.0:
        return PerturbativeWavefunction(p=p, samples=RadialWavefunction(r_grid, free, p, l))

    element = element_function(model, l)

    def integrand(k: float) -> np.ndarray:
        return free_regular(l, k, r_grid) * (2.0 * m * element(k, p) / (k * k - p * p))

    k_cut = momentum_cut(p, model.scale_radius, quad_cfg)
    finite = pv_integrate(
        integrand, PVSpec(p, 0.0, k_cut, quad_cfg.tol_abs, quad_cfg.pv_window), vectorized=True
    )
    period = math.pi / (float(r_grid[-1]) + model.scale_radius)
    tail = integrate_tail_oscillatory(
        integrand, k_cut, period, quad_cfg.tol_abs, vectorized=True, max_panels=quad_cfg.tail_max_panels
    )
    correction = np.asarray(finite.value + tail.value, dtype=float)
    correction[r_grid == 0.0] = 0.0
    samples = free - model.coupling * correction
    diagnostics = {
        "k_cut": k_cut,
        "pv_window": PVSpec(p, 0.0, k_cut, quad_cfg.tol_abs, quad_cfg.pv_window).half_width,
        "pv_error": finite.error_estimate,
        "tail_error": tail.error_estimate,
        "evaluations": finite.evaluations + tail.evaluations,
    }
    return PerturbativeWavefunction(
        p=p, samples=RadialWavefunction(r_grid, samples, p, l), pv_diagnostics=diagnostics
    )


def gauss_legendre_grid(n: int, k_cut: float, avoid: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped onto (0, k_cut].

    If a node would land on ``avoid`` (the on-shell momentum) one node is
    added, which moves every node.
    """
    if n < 2 or not k_cut > 0:
        raise ValueError(f"need n >= 2 and k_cut > 0, got n={n}, k_cut={k_cut}")
    while True:
        x, w = np.polynomial.legendre.leggauss(n)
        nodes = 0.5 * k_cut * (x + 1.0)
        weights = 0.5 * k_cut * w
        if avoid is None or np.min(np.abs(nodes - avoid)) > 1e-9 * k_cut:
            return nodes, weights
        n += 1


def free_hamiltonian(kernel: KernelMatrix, m: float) -> np.ndarray:
    """Diagonal matrix of k_i^2 / 2m."""
    return np.diag(kernel.nodes**2 / (2.0 * m))


def _energy_denominators(nodes: np.ndarray) -> np.ndarray:
    k2 = nodes**2
    denominators = k2[:, None] - k2[None, :]
    np.fill_diagonal(denominators, 1.0)
    return denominators


def build_discrete_generator(kernel: KernelMatrix, m: float) -> KernelMatrix:
    """Discrete first-order generator on the kernel's grid.

    Entries are T_ij = 2m Utilde_ij / (k_i^2 - k_j^2) with
    Utilde_ij = sqrt(w_i) U_ij sqrt(w_j), and T_ii = 0. The generator matrix
    is Theta = -i T, Hermitian because T is real antisymmetric.

    Raises:
        ValueError: If the kernel is not symmetric.
    """
    if not kernel.is_symmetric():
        raise ValueError("discrete generator requires a symmetric kernel")
    t = 2.0 * m * kernel.weighted() / _energy_denominators(kernel.nodes)
    np.fill_diagonal(t, 0.0)
    return KernelMatrix(nodes=kernel.nodes, weights=kernel.weights, entries=t, diagonal_excluded=True)


def off_diagonal(matrix: np.ndarray) -> np.ndarray:
    out = np.array(matrix, dtype=float)
    np.fill_diagonal(out, 0.0)
    return out


def build_discrete_second_generator(kernel: KernelMatrix, generator: KernelMatrix, m: float) -> KernelMatrix:
    """Discrete second-order generator solving [H_f, Theta2] = [Theta1, Utilde_off].

    With Theta = -i T this reads (E_i - E_j) T2_ij = [T1, Utilde_off]_ij
    off the diagonal; the diagonal is excluded.
    """
    u_off = off_diagonal(kernel.weighted())
    t1 = generator.entries
    commutator = t1 @ u_off - u_off @ t1
    commutator = 0.5 * (commutator + commutator.T)
    t2 = 2.0 * m * commutator / _energy_denominators(kernel.nodes)
    np.fill_diagonal(t2, 0.0)
    return KernelMatrix(nodes=kernel.nodes, weights=kernel.weights, entries=t2, diagonal_excluded=True)


def discrete_unitary(generator: KernelMatrix, coupling: float, second: KernelMatrix | None = None) -> np.ndarray:
    """exp(-i Theta) for Theta = lambda Theta1 (+ lambda^2/2 Theta2); real orthogonal."""
    exponent = coupling * generator.entries
    if second is not None:
        exponent = exponent + 0.5 * coupling**2 * second.entries
    return linalg.expm(-exponent)


def unitarity_defect(unitary: np.ndarray) -> float:
    """Spectral norm of U U^dagger - 1."""
    return float(np.linalg.norm(unitary @ unitary.T - np.eye(len(unitary)), 2))


def commutator_identity_residual(kernel: KernelMatrix, generator: KernelMatrix, m: float) -> float:
    """Largest off-diagonal entry of i[H_f, Theta1] - Utilde."""
    h = free_hamiltonian(kernel, m)
    t = generator.entries
    residual = off_diagonal((h @ t - t @ h) - kernel.weighted())
    return float(np.max(np.abs(residual)))


def second_order_identity_residual(kernel: KernelMatrix, generator: KernelMatrix, second: KernelMatrix, m: float) -> float:
    """Largest off-diagonal entry of i[H_f, Theta2] - [Theta1, Utilde], relative to the commutator."""
    h = free_hamiltonian(kernel, m)
    u_off = off_diagonal(kernel.weighted())
    commutator = generator.entries @ u_off - u_off @ generator.entries
    residual = off_diagonal((h @ second.entries - second.entries @ h) - commutator)
    return float(np.max(np.abs(residual)) / np.max(np.abs(off_diagonal(commutator))))


def transformed_hamiltonian_residual(
    kernel: KernelMatrix,
    m: float,
    coupling: float,
    second_order: bool = False,
) -> tuple[float, float]:
    """Residual of U H_f U^dagger against H_f + lambda Utilde_off.

    Returns:
        (off-diagonal residual, full residual), spectral norms. With the
        second-order generator the off-diagonal residual is O(lambda^3).
    """
    generator = build_discrete_generator(kernel, m)
    second = build_discrete_second_generator(kernel, generator, m) if second_order else None
    u = discrete_unitary(generator, coupling, second)
    h = free_hamiltonian(kernel, m)
    residual = u @ h @ u.T - (h + coupling * off_diagonal(kernel.weighted()))
    return (
        float(np.linalg.norm(off_diagonal(residual), 2)),
        float(np.linalg.norm(residual, 2)),
    )


def first_order_state_norm(generator: KernelMatrix, coupling: float, index: int) -> tuple[float, float]:
    """Squared norm of (1 - i lambda Theta1)|k_index> and its O(lambda) coefficient.

    Returns:
        (squared norm, linear coefficient). The linear coefficient is
        -2 T_jj, which the excluded diagonal makes exactly zero.
    """
    basis = np.zeros(generator.size)
    basis[index] = 1.0
    state = basis - coupling * (generator.entries @ basis)
    linear = -2.0 * generator.entries[index, index]
    return float(state @ state), float(linear)


def default_discrete_kernel(model: PotentialModel, l: int, p: float, quad_cfg: QuadConfig | None = None) -> KernelMatrix:
    """Kernel on the default Gauss-Legendre grid, keeping p off-grid."""
    quad_cfg = quad_cfg or QuadConfig()
    k_cut = momentum_cut(p, model.scale_radius, quad_cfg)
    nodes, weights = gauss_legendre_grid(quad_cfg.grid_nodes, k_cut, avoid=p)
    return build_kernel(model, l, nodes, weights, element=element_function(model, l))
