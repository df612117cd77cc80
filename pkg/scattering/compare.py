"""Method comparison over a parameter sweep, and wavefunction tables.

Each sweep point is evaluated independently (and may run in a worker
process); rows are assembled in sweep order so the table does not depend on
the number of workers.
"""

from __future__ import annotations

import functools
import itertools
import math
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.interpolate import CubicSpline

from scattering.core.errors import ScatteringError
from scattering.core.results import PhaseShiftResult
from scattering.core.specfun import free_regular, sinc
from scattering.potential import PotentialModel
from scattering.run_config import RunConfig
from scattering.solvers import green_fn
from scattering.solvers.asymptotics import (
    default_window,
    numerov_phase_shift,
    numerov_solve,
    radial_grid,
    wronskian_sin_delta,
)
from scattering.solvers.exact_well import ExactWellSolution, exact_phase_shift, unwrap_branches
from scattering.solvers.unitary_pt import delta1, first_order_wavefunction, unitary_phase_shifts
from utils.logging_config import get_logger

logger = get_logger(__name__)

REFERENCE_COLUMNS = ("ref_first_order", "ref_second_order")
WAVEFUNCTION_METHODS = ("unitary1", "green1", "green2", "numerov")

_WRONSKIAN_MIN_NODES = 401
RESOLUTION_MARGIN = 0.25  # internal grids use this fraction of the pi/(8p) spacing limit


@dataclass
class ResultTable:
    """Numeric table plus the metadata the writers need."""

    columns: list[str]
    rows: list[list[float]]
    angle_columns: set[str] = field(default_factory=set)
    notes: list[str] = field(default_factory=list)
    diagnostics: list[dict[str, Any]] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        index = self.columns.index(name)
        return np.array([row[index] for row in self.rows], dtype=float)


@dataclass
class PointResult:
    """All requested phases at one sweep point."""

    index: int
    p: float
    coupling: float
    kappa: float
    eta: float
    phases: dict[str, float]
    references: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    diagnostics: dict[str, Any] = field(default_factory=dict)


def reference_phases(model: PotentialModel, l: int, kappa: float, eta: float) -> dict[str, float]:
    """Closed-form first/second-order phases, for the uniform well at l = 0."""
    if l != 0 or model.name not in ("well", "barrier"):
        return {}
    first = -eta * (1.0 - float(sinc(2.0 * kappa)))
    second = first - eta * eta * (1.0 + 2.0 * math.cos(2.0 * kappa)) / (2.0 * kappa)
    return {"ref_first_order": first, "ref_second_order": second}


def _wronskian_phase(model: PotentialModel, l: int, p: float, m: float, config: RunConfig) -> PhaseShiftResult:
    # At this order sin(delta) and delta agree, so the overlap is reported as is.
    support = model.support_radius
    nodes = max(_WRONSKIAN_MIN_NODES, int(math.ceil(16.0 * p * support / math.pi)) + 1)
    r_grid = np.linspace(0.0, support, nodes)
    wf = first_order_wavefunction(model, l, p, m, r_grid, config.quad)
    value = wronskian_sin_delta(wf.samples, model, l, p, m)
    return PhaseShiftResult(method="wronskian", value=value, diagnostics=wf.pv_diagnostics)


class _PointEvaluator:
    """Evaluates methods at one point, sharing first orders between columns."""

    def __init__(self, config: RunConfig, p: float, coupling: float):
        self.config = config
        self.p = p
        self.m = config.scatter.m
        self.l = config.scatter.l
        self.model = config.build_model(coupling)
        self._cache: dict[str, PhaseShiftResult] = {}

    def _once(self, key: str, compute: Callable[[], PhaseShiftResult]) -> PhaseShiftResult:
        if key not in self._cache:
            self._cache[key] = compute()
        return self._cache[key]

    def unitary1(self) -> float:
        return self._once("unitary1", lambda: delta1(self.model, self.l, self.p, self.m)).value

    def unitary2(self) -> float:
        if "unitary2" not in self._cache:
            first, second = unitary_phase_shifts(self.model, self.l, self.p, self.m, self.config.quad)
            self._cache.setdefault("unitary1", first)
            self._cache["unitary2"] = second
        return self.unitary1() + self._cache["unitary2"].value

    def green1(self) -> float:
        return self._once("green1", lambda: green_fn.first_order_phase(self.model, self.l, self.p, self.m)).value

    def green2(self) -> float:
        second = self._once("green2", lambda: green_fn.second_order_phase(self.model, self.l, self.p, self.m))
        return self.green1() + second.value

    def exact(self) -> float:
        return self._once("exact", lambda: exact_phase_shift(self.model, self.l, self.p, self.m)).value

    def numerov(self) -> float:
        return self._once("numerov", lambda: numerov_phase_shift(self.model, self.l, self.p, self.m)).value

    def wronskian(self) -> float:
        return self._once("wronskian", lambda: _wronskian_phase(self.model, self.l, self.p, self.m, self.config)).value

    def diagnostics(self) -> dict[str, Any]:
        return {key: result.diagnostics for key, result in self._cache.items() if result.diagnostics}


def evaluate_point(config: RunConfig, index: int, p: float, coupling: float) -> PointResult:
    """Every requested method at one (p, coupling); failures become NaN plus a note."""
    kappa = p * config.potential.R
    eta = coupling * config.scatter.m / p
    try:
        evaluator = _PointEvaluator(config, p, coupling)
    except ScatteringError as exc:
        logger.warning("row=%d model rejected: %s", index, exc)
        return PointResult(
            index=index,
            p=p,
            coupling=coupling,
            kappa=kappa,
            eta=eta,
            phases={method: math.nan for method in config.scatter.methods},
            notes=[f"row {index} model: {exc}"],
        )
    phases: dict[str, float] = {}
    notes: list[str] = []
    for method in config.scatter.methods:
        try:
            phases[method] = float(getattr(evaluator, method)())
        except ScatteringError as exc:
            logger.warning("row=%d method=%s failed: %s", index, method, exc)
            phases[method] = math.nan
            notes.append(f"row {index} {method}: {exc}")
    return PointResult(
        index=index,
        p=p,
        coupling=coupling,
        kappa=kappa,
        eta=eta,
        phases=phases,
        references=reference_phases(evaluator.model, config.scatter.l, kappa, eta),
        notes=notes,
        diagnostics=evaluator.diagnostics(),
    )


def _evaluate_packed(args: tuple[RunConfig, int, float, float]) -> PointResult:
    return evaluate_point(*args)


def _pairs(methods: list[str]) -> list[tuple[str, str]]:
    return list(itertools.combinations(methods, 2))


def _phase_difference(a: float, b: float) -> float:
    # Phase shifts are defined modulo pi.
    return math.remainder(a - b, math.pi)


def _unwrap_exact(results: list[PointResult]) -> None:
    """Make the exact column continuous along the sweep, run by run of finite rows."""
    runs: list[list[PointResult]] = [[]]
    for result in results:
        if "A0" in result.diagnostics.get("exact", {}):
            runs[-1].append(result)
        elif runs[-1]:
            runs.append([])
    for run in runs:
        solutions = [
            ExactWellSolution(
                A0=r.diagnostics["exact"]["A0"],
                B0=r.diagnostics["exact"]["B0"],
                delta0=r.phases["exact"],
                evanescent=r.diagnostics["exact"]["evanescent"],
            )
            for r in run
        ]
        for result, solution in zip(run, unwrap_branches(solutions)):
            result.phases["exact"] = solution.unwrapped
            if solution.branch:
                result.diagnostics["exact"]["branch"] = solution.branch


def build_compare_table(config: RunConfig, workers: int = 1) -> ResultTable:
    """One row per sweep point: p, lambda, kappa, eta, phases, differences, references.

    The exact column is unwrapped along the sweep; differences between
    methods are reduced modulo pi into [-pi/2, pi/2].

    Args:
        config: Validated run configuration.
        workers: Worker processes; 1 evaluates in-process.
    """
    points = config.sweep_points()
    jobs = [(config, index, p, coupling) for index, (p, coupling) in enumerate(points)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_packed, jobs))
    else:
        results = [_evaluate_packed(job) for job in jobs]

    methods = list(config.scatter.methods)
    if "exact" in methods:
        _unwrap_exact(results)
    pairs = _pairs(methods)
    with_references = any(result.references for result in results)
    columns = ["p", "lambda", "kappa", "eta", *methods]
    columns += [f"diff_{a}_{b}" for a, b in pairs]
    if pairs:
        columns.append("max_abs_diff")
    if with_references:
        columns += list(REFERENCE_COLUMNS)

    rows = []
    notes = []
    for result in results:
        row = [result.p, result.coupling, result.kappa, result.eta]
        row += [result.phases[method] for method in methods]
        diffs = [_phase_difference(result.phases[a], result.phases[b]) for a, b in pairs]
        row += diffs
        if pairs:
            finite = [abs(d) for d in diffs if not math.isnan(d)]
            row.append(max(finite) if finite else math.nan)
        if with_references:
            row += [result.references.get(name, math.nan) for name in REFERENCE_COLUMNS]
        rows.append(row)
        notes.extend(result.notes)

    angle_columns = set(columns) - {"p", "lambda", "kappa", "eta"}
    logger.info("compare rows=%d methods=%s failures=%d", len(rows), ",".join(methods), len(notes))
    return ResultTable(
        columns=columns,
        rows=rows,
        angle_columns=angle_columns,
        notes=notes,
        diagnostics=[{"row": r.index, **r.diagnostics} for r in results],
    )


def wavefunction_grid(config: RunConfig, model: PotentialModel, p: float) -> np.ndarray:
    """Output radii: [0, r_max] with ``output.r_points`` samples."""
    r_max = config.output.r_max if config.output.r_max is not None else default_window(model, p)[1]
    return np.linspace(0.0, r_max, config.output.r_points)


def resolved_grid(r_grid: np.ndarray, p: float) -> np.ndarray:
    """``r_grid`` when it resolves the oscillation, else a uniform grid over the same range that does."""
    limit = math.pi / (8.0 * p)
    if float(np.max(np.diff(r_grid))) < limit:
        return r_grid
    r_max = float(r_grid[-1])
    return np.linspace(0.0, r_max, int(math.ceil(r_max / (RESOLUTION_MARGIN * limit))) + 1)


def _sampled_on(compute: Callable[[np.ndarray], np.ndarray], r_grid: np.ndarray, p: float) -> np.ndarray:
    # Coarse output radii are computed on a resolved grid and interpolated.
    dense = resolved_grid(r_grid, p)
    values = np.asarray(compute(dense), dtype=float)
    if dense is r_grid:
        return values
    return CubicSpline(dense, values)(r_grid)


def _numerov_on(model: PotentialModel, l: int, p: float, m: float, r_grid: np.ndarray) -> np.ndarray:
    window = default_window(model, p)
    end = max(window[1], float(r_grid[-1]))
    grid = radial_grid(model, p, end)
    wf = numerov_solve(model, l, p, m, grid, (end - (window[1] - window[0]), end))
    return CubicSpline(wf.grid, wf.samples)(r_grid)


def build_wavefunction_table(config: RunConfig) -> ResultTable:
    """Columns r, y_free and y_<method> for each requested method with a wavefunction.

    Raises:
        ValueError: If the configuration describes more than one point.
    """
    points = config.sweep_points()
    if len(points) != 1:
        raise ValueError(f"wavefunction output needs a single parameter point, the sweep has {len(points)}")
    p, coupling = points[0]
    l, m = config.scatter.l, config.scatter.m
    model = config.build_model(coupling)
    r_grid = wavefunction_grid(config, model, p)
    free_column = np.asarray(free_regular(l, p, r_grid), dtype=float)

    def unitary1(radii: np.ndarray) -> np.ndarray:
        return first_order_wavefunction(model, l, p, m, radii, config.quad).samples.samples

    def green(order: int, radii: np.ndarray) -> np.ndarray:
        state = green_fn.free_iterate(model, l, p)
        for _ in range(order - 1):
            state = green_fn.iterate(model, l, p, m, state)
        return green_fn.iterate(model, l, p, m, state, radii).samples.samples

    builders: dict[str, Callable[[], np.ndarray]] = {
        "unitary1": lambda: _sampled_on(unitary1, r_grid, p),
        "green1": lambda: _sampled_on(functools.partial(green, 1), r_grid, p),
        "green2": lambda: _sampled_on(functools.partial(green, 2), r_grid, p),
        "numerov": lambda: _numerov_on(model, l, p, m, r_grid),
    }
    requested = [method for method in config.scatter.methods if method in WAVEFUNCTION_METHODS]
    skipped = [method for method in config.scatter.methods if method not in WAVEFUNCTION_METHODS]
    if skipped:
        logger.info("wavefunction output has no column for methods=%s", ",".join(skipped))

    columns = ["r", "y_free"]
    data = [r_grid, free_column]
    notes = []
    for method in requested:
        try:
            values = np.asarray(builders[method](), dtype=float)
        except (ScatteringError, ValueError) as exc:
            logger.warning("wavefunction method=%s failed: %s", method, exc)
            values = np.full_like(r_grid, math.nan)
            notes.append(f"{method}: {exc}")
        columns.append(f"y_{method}")
        data.append(values)

    rows = np.column_stack(data).tolist()
    return ResultTable(columns=columns, rows=rows, notes=notes)
