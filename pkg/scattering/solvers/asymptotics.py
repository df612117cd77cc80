"""Phase extraction from sampled radial wavefunctions, and the Numerov oracle.

Outside the potential a solution is a combination of the free solutions,

    y(r) ~ sqrt(2/pi) [A sin(pr - l pi/2) + B cos(pr - l pi/2)],

and its phase shift is atan2(B, A). The Wronskian route gives sin(delta)
directly from an overlap integral over the potential's support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from config import settings
from scattering.core.errors import ScatteringError
from scattering.core.results import PhaseShiftResult
from scattering.core.specfun import free_irregular, free_regular
from scattering.potential import PotentialModel, RangeClass, check_admissible
from utils.logging_config import get_logger

logger = get_logger(__name__)

MIN_FIT_PERIODS = 4
FIT_WINDOW_PERIODS = 4  # default window is 8 pi / p wide


class FitValidityError(ScatteringError):
    """Raised when an asymptotic fit does not describe the samples."""

    def __init__(self, message: str, fit: AsymptoticFit | None = None):
        super().__init__(message)
        self.fit = fit


class StepSizeError(ScatteringError, ValueError):
    """Raised when a radial grid does not resolve the oscillation."""


@dataclass
class AsymptoticFit:
    """Least-squares sin/cos coefficients over a radial window."""

    A: float
    B: float
    window: tuple[float, float]
    residual: float

    @property
    def amplitude(self) -> float:
        return math.hypot(self.A, self.B)

    @property
    def phase(self) -> float:
        return math.atan2(self.B, self.A)


@dataclass
class RadialWavefunction:
    """Samples of y_l(r) on a grid that starts at the origin."""

    grid: np.ndarray
    samples: np.ndarray
    p: float
    l: int
    fit: AsymptoticFit | None = None

    def __post_init__(self) -> None:
        self.grid = np.asarray(self.grid, dtype=float)
        self.samples = np.asarray(self.samples, dtype=float)
        if self.grid.shape != self.samples.shape or self.grid.ndim != 1 or len(self.grid) < 3:
            raise ValueError("grid and samples must be matching 1-d arrays of length >= 3")
        if self.grid[0] != 0.0 or np.any(np.diff(self.grid) <= 0):
            raise ValueError("radial grid must start at 0 and increase strictly")
        if self.samples[0] != 0.0:
            raise ValueError("radial wavefunction must vanish at r = 0")
        spacing = float(np.max(np.diff(self.grid)))
        if not spacing < math.pi / (8.0 * self.p):
            raise StepSizeError(
                f"grid spacing {spacing:.4g} does not resolve the oscillation (needs < pi/(8p) = "
                f"{math.pi / (8.0 * self.p):.4g})"
            )


def default_window(model: PotentialModel, p: float) -> tuple[float, float]:
    """[max(2R, 20/p), that + 8 pi / p]: beyond the potential, several periods."""
    start = max(2.0 * model.support_radius, 20.0 / p)
    return start, start + FIT_WINDOW_PERIODS * 2.0 * math.pi / p


def _fit_basis(l: int, p: float, r: np.ndarray) -> np.ndarray:
    # Exact free solutions, so the fit holds at any r outside the potential.
    return np.column_stack([free_regular(l, p, r), -free_irregular(l, p, r)])


def fit_sin_cos(wf: RadialWavefunction, window: tuple[float, float] | None = None) -> AsymptoticFit:
    """Least-squares (A, B) of wf over a window outside the potential.

    Args:
        wf: Sampled wavefunction.
        window: (r_lo, r_hi). Defaults to the last 8 pi / p of the grid.

    Raises:
        ValueError: If the window holds fewer than 4 periods or leaves the grid.
        FitValidityError: If the relative RMS misfit exceeds the validity gate.
    """
    if window is None:
        r_hi = float(wf.grid[-1])
        window = (r_hi - FIT_WINDOW_PERIODS * 2.0 * math.pi / wf.p, r_hi)
    r_lo, r_hi = window
    if r_hi - r_lo < MIN_FIT_PERIODS * 2.0 * math.pi / wf.p * (1.0 - 1e-9):
        raise ValueError(f"fit window [{r_lo}, {r_hi}] holds fewer than {MIN_FIT_PERIODS} periods")
    if r_lo <= 0 or r_hi > wf.grid[-1] * (1.0 + 1e-12):
        raise ValueError(f"fit window [{r_lo}, {r_hi}] is not inside the grid (0, {wf.grid[-1]}]")

    mask = (wf.grid >= r_lo) & (wf.grid <= r_hi)
    r = wf.grid[mask]
    y = wf.samples[mask]
    basis = _fit_basis(wf.l, wf.p, r)
    coeffs, *_ = np.linalg.lstsq(basis, y, rcond=None)
    a, b = (float(c) for c in coeffs)
    residual = float(np.sqrt(np.mean((basis @ coeffs - y) ** 2)))
    fit = AsymptoticFit(A=a, B=b, window=(float(r_lo), float(r_hi)), residual=residual)

    scale = fit.amplitude * math.sqrt(2.0 / math.pi)
    if scale == 0.0 or residual > settings.fit_residual_gate * scale:
        raise FitValidityError(
            f"asymptotic fit residual {residual:.3g} exceeds {settings.fit_residual_gate} of the "
            f"amplitude {scale:.3g}; the window may overlap the interaction region",
            fit,
        )
    return fit


def wronskian_sin_delta(y_i: RadialWavefunction, model: PotentialModel, l: int, p: float, m: float) -> float:
    """sin(delta) = -(pi m / p) int_0^inf y_i V ybar dr.

    ``y_i`` must carry the asymptotic amplitude sqrt(2/pi) of the free
    solution. The integral runs over the samples up to the potential's
    support; for a finite range the edge R is added by spline interpolation
    when it is not a grid node.
    """
    check_admissible(model)
    if model.coupling == 0.0:
        return 0.0
    support = model.support_radius
    if y_i.grid[-1] < support:
        if model.range_class is RangeClass.FINITE:
            raise ValueError(f"wavefunction grid ends at {y_i.grid[-1]}, inside the support radius {support}")
        logger.warning("wronskian grid ends at r=%.4g before the support radius %.4g", y_i.grid[-1], support)

    inside = y_i.grid <= support
    r = y_i.grid[inside]
    y = y_i.samples[inside]
    if r[-1] < support <= y_i.grid[-1]:
        spline = CubicSpline(y_i.grid, y_i.samples)
        r = np.append(r, support)
        y = np.append(y, float(spline(support)))
    # The shape is sampled from the inside at the edge of a finite range.
    v = model.coupling * np.asarray(model.shape(r), dtype=float)
    integrand = y * v * np.asarray(free_regular(l, p, r), dtype=float)
    return float(-(math.pi * m / p) * integrate.simpson(integrand, x=r))


def radial_grid(model: PotentialModel, p: float, r_end: float, phase_step: float | None = None) -> np.ndarray:
    """Uniform grid on [0, >= r_end] with every discontinuity of V on a node."""
    phase_step = settings.numerov_phase_step if phase_step is None else phase_step
    h = min(phase_step / p, model.support_radius / 200.0)
    if model.discontinuities:
        first = min(model.discontinuities)
        h = first / math.ceil(first / h)
    n = int(math.ceil(r_end / h)) + 1
    return h * np.arange(n, dtype=float)


def numerov_solve(
    model: PotentialModel,
    l: int,
    p: float,
    m: float,
    r_grid: np.ndarray,
    window: tuple[float, float] | None = None,
) -> RadialWavefunction:
    """Integrate y'' = [l(l+1)/r^2 + 2m V(r) - p^2] y outward with Numerov.

    The recursion starts from y(0) = 0, y(h) = h^(l+1). At a node where V
    jumps, f is averaged and the step picks up h^3 * [f] * y'(r) / 12, the
    jump of the third derivative that the plain recursion misses; the steps
    into and out of that node weight it with the one-sided limits of f. The result
    is rescaled so its asymptotic amplitude is sqrt(2/pi), using the fit over
    ``window`` (default: the last 8 pi / p of the grid).

    Raises:
        StepSizeError: If the grid is not uniform from 0 or too coarse.
    """
    check_admissible(model)
    r = np.asarray(r_grid, dtype=float)
    steps = np.diff(r)
    h = float(steps[0])
    if r[0] != 0.0 or not np.allclose(steps, h, rtol=1e-9, atol=0.0):
        raise StepSizeError("Numerov needs a uniform grid starting at r = 0")
    if not h < math.pi / (8.0 * p):
        raise StepSizeError(f"Numerov step {h:.4g} exceeds pi/(8p) = {math.pi / (8.0 * p):.4g}")

    n = len(r)
    f = np.empty(n)
    f[1:] = l * (l + 1) / r[1:] ** 2 + 2.0 * m * np.asarray(model.evaluate(r[1:]), dtype=float) - p * p
    f[0] = 0.0
    jumps: dict[int, float] = {}
    for radius in model.discontinuities:
        index = int(round(radius / h))
        if 0 < index < n - 1 and abs(r[index] - radius) <= 1e-9 * radius:
            inside, outside = model.evaluate_sides(radius)
            f[index] = l * (l + 1) / radius**2 + m * (inside + outside) - p * p
            jumps[index] = 2.0 * m * (outside - inside)
        elif 0 < radius < r[-1]:
            logger.warning("numerov discontinuity r=%.6g is not a grid node; accuracy drops to O(h^2)", radius)

    h2 = h * h
    w = (1.0 - h2 / 12.0 * f).tolist()
    # Steps that only touch a jump node from one side use that side's limit of f.
    w_inside = {i: 1.0 - h2 / 12.0 * (f[i] - 0.5 * jump) for i, jump in jumps.items()}
    w_outside = {i: 1.0 - h2 / 12.0 * (f[i] + 0.5 * jump) for i, jump in jumps.items()}
    y = [0.0] * n
    y[1] = h ** (l + 1)
    # w_0 y_0 is the limit -h^2 F(0) / 12 with F = y'' ; only l = 1 has F(0) != 0.
    w0y0 = -h2 / 12.0 * (2.0 * y[1] / h2) if l == 1 else 0.0
    for i in range(1, n - 1):
        if i == 1:
            previous = w0y0
        else:
            previous = w_outside.get(i - 1, w[i - 1]) * y[i - 1]
        rhs = (12.0 - 10.0 * w[i]) * y[i] - previous
        if i in jumps:
            slope = (3.0 * y[i] - 4.0 * y[i - 1] + y[i - 2]) / (2.0 * h)
            rhs += h2 * h * jumps[i] * slope / 12.0
        y[i + 1] = rhs / w_inside.get(i + 1, w[i + 1])

    raw = RadialWavefunction(r, np.asarray(y), p, l)
    fit = fit_sin_cos(raw, window)
    scale = 1.0 / fit.amplitude
    scaled_fit = AsymptoticFit(A=fit.A * scale, B=fit.B * scale, window=fit.window, residual=fit.residual * scale)
    return RadialWavefunction(r, raw.samples * scale, p, l, fit=scaled_fit)


def numerov_phase_shift(model: PotentialModel, l: int, p: float, m: float) -> PhaseShiftResult:
    """All-orders phase shift from the Numerov oracle on the default grid and window."""
    window = default_window(model, p)
    grid = radial_grid(model, p, window[1])
    wf = numerov_solve(model, l, p, m, grid, window)
    return PhaseShiftResult(
        method="numerov",
        value=wf.fit.phase,
        diagnostics={"step": float(grid[1]), "nodes": len(grid), "fit_residual": wf.fit.residual},
    )
