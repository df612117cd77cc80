"""Tests for the closed-form well/barrier solution and its eta series."""

import math

import pytest

from scattering.core.params import ScatteringParams
from scattering.potential import gaussian_bump, null_potential, square_well
from scattering.solvers.asymptotics import numerov_phase_shift
from scattering.solvers.exact_well import (
    ExactWellSolution,
    SeriesExtrapolationError,
    UnsupportedModelError,
    eta_series_coefficients,
    exact_phase_shift,
    exact_phase_shift_s,
    unwrap_branches,
)
from scattering.solvers.unitary_pt import delta1, delta2


def _point(kappa, eta):
    return ScatteringParams.from_dimensionless(kappa, eta, m=1.0, R=1.0)


def _matching_oracle(kappa, eta):
    """tan(kappa + delta) = kappa tan(kappa') / kappa' (tanh for a barrier above the energy)."""
    k2 = kappa * kappa - 2.0 * eta * kappa
    if k2 >= 0:
        kp = math.sqrt(k2)
        ratio = kappa * math.tan(kp) / kp
    else:
        kp = math.sqrt(-k2)
        ratio = kappa * math.tanh(kp) / kp
    return math.atan(ratio) - kappa


def _same_modulo_pi(a, b):
    return abs(math.remainder(a - b, math.pi))


class TestExactPhaseShift:
    """Tests for exact_phase_shift_s."""

    def test_zero_coupling(self):
        solution = exact_phase_shift_s(_point(2.0, 0.0))
        assert (solution.A0, solution.B0, solution.delta0) == (1.0, 0.0, 0.0)

    @pytest.mark.parametrize("kappa, eta", [(2.0, 0.05), (0.7, -0.4), (5.3, 0.2), (1.0, 2.0), (0.5, 0.3)])
    def test_matches_log_derivative_matching(self, kappa, eta):
        solution = exact_phase_shift_s(_point(kappa, eta))
        assert _same_modulo_pi(solution.delta0, _matching_oracle(kappa, eta)) < 1e-12
        assert -math.pi / 2 < solution.delta0 <= math.pi / 2

    def test_sign_follows_coupling(self):
        """Small repulsion gives a small negative phase, attraction a positive one."""
        assert -0.1 < exact_phase_shift_s(_point(2.0, 0.05)).delta0 < 0.0
        assert 0.0 < exact_phase_shift_s(_point(2.0, -0.05)).delta0 < 0.1

    def test_evanescent_barrier(self):
        """kappa = 0.5, eta = 0.3 puts the barrier above the energy."""
        solution = exact_phase_shift_s(_point(0.5, 0.3))
        assert solution.evanescent is True
        assert solution.delta0 < 0.0
        assert abs(solution.s_matrix) == pytest.approx(1.0, abs=1e-14)

    def test_continuous_across_evanescent_threshold(self):
        """kappa' = 0 at eta = kappa/2; the phase is continuous there."""
        below = exact_phase_shift_s(_point(0.5, 0.25 - 1e-9)).delta0
        at = exact_phase_shift_s(_point(0.5, 0.25)).delta0
        above = exact_phase_shift_s(_point(0.5, 0.25 + 1e-9)).delta0
        assert below == pytest.approx(at, abs=1e-7)
        assert above == pytest.approx(at, abs=1e-7)

    def test_hard_sphere_limit(self):
        """A very strong barrier approaches delta = -kappa."""
        solution = exact_phase_shift_s(_point(1.0, 500.0))
        assert solution.delta0 == pytest.approx(-1.0, abs=0.05)

    @pytest.mark.parametrize("kappa, eta", [(2.0, 0.05), (9.0, -1.0), (0.5, 0.3)])
    def test_s_matrix_is_unimodular(self, kappa, eta):
        solution = exact_phase_shift_s(_point(kappa, eta))
        assert abs(abs(solution.s_matrix) - 1.0) < 1e-14
        assert solution.s_matrix == pytest.approx(complex(math.cos(2 * solution.delta0), math.sin(2 * solution.delta0)))

    def test_only_s_wave(self):
        with pytest.raises(UnsupportedModelError):
            exact_phase_shift_s(ScatteringParams(m=1.0, R=1.0, coupling=0.1, l=1, p=2.0))

    def test_agrees_with_numerov(self):
        """(m = R = 1, lambda = 0.1, p = 2)."""
        model = square_well(R=1.0, coupling=0.1)
        exact = exact_phase_shift(model, 0, 2.0, 1.0).value
        numerov = numerov_phase_shift(model, 0, 2.0, 1.0).value
        assert _same_modulo_pi(exact, numerov) < 1e-7


class TestExactWellSolution:
    """Tests for the ExactWellSolution record and branch unwrapping."""

    def test_rejects_vanishing_determinants(self):
        with pytest.raises(ValueError):
            ExactWellSolution(A0=0.0, B0=0.0, delta0=0.0)

    def test_rejects_out_of_range_phase(self):
        with pytest.raises(ValueError):
            ExactWellSolution(A0=1.0, B0=0.0, delta0=-math.pi / 2)

    def test_unwrap_branches(self):
        solutions = [
            ExactWellSolution(A0=1.0, B0=-1.0, delta0=1.4),
            ExactWellSolution(A0=1.0, B0=1.0, delta0=1.55),
            ExactWellSolution(A0=1.0, B0=1.0, delta0=-1.45),
            ExactWellSolution(A0=1.0, B0=1.0, delta0=-1.3),
        ]
        unwrapped = unwrap_branches(solutions)
        assert [s.branch for s in unwrapped] == [0, 0, 1, 1]
        assert unwrapped[2].unwrapped == pytest.approx(math.pi - 1.45)
        assert unwrap_branches([]) == []

    def test_result_wrapper(self):
        result = exact_phase_shift(square_well(1.0, 0.1), 0, 2.0, 1.0)
        assert result.method == "exact"
        assert result.diagnostics["evanescent"] is False
        assert exact_phase_shift(null_potential(), 0, 2.0, 1.0).value == 0.0

    def test_result_wrapper_rejects_other_models(self):
        with pytest.raises(UnsupportedModelError):
            exact_phase_shift(gaussian_bump(1.0, 0.1), 0, 2.0, 1.0)


class TestEtaSeries:
    """Tests for eta_series_coefficients."""

    def test_first_coefficient_at_half_period(self):
        """2 kappa = pi: c1 = -(1 - sinc pi) = -1."""
        (c1,) = eta_series_coefficients(_point(math.pi / 2, 0.0), orders=1)
        assert c1 == pytest.approx(-1.0, abs=1e-7)

    @pytest.mark.parametrize("kappa", [0.8, 3.0, 12.0])
    def test_first_coefficient_matches_delta1(self, kappa):
        (c1,) = eta_series_coefficients(_point(kappa, 0.0), orders=1)
        eta = 0.01
        model = square_well(R=1.0, coupling=eta * kappa)
        assert c1 * eta == pytest.approx(delta1(model, 0, kappa, 1.0).value, abs=1e-9)

    def test_second_coefficient_large_kappa(self):
        kappa = 20.0
        _, c2 = eta_series_coefficients(_point(kappa, 0.0))
        reference = -(1.0 + 2.0 * math.cos(2 * kappa)) / (2 * kappa)
        assert abs(c2 - reference) <= 3.0 / kappa**2

    def test_second_coefficient_matches_delta2(self):
        """The unitary second order is the exact eta^2 coefficient."""
        kappa, eta = 5.0, 0.05
        _, c2 = eta_series_coefficients(_point(kappa, 0.0))
        model = square_well(R=1.0, coupling=eta * kappa)
        assert delta2(model, 0, kappa, 1.0).value / eta**2 == pytest.approx(c2, abs=1e-5)

    def test_step_outside_radius_of_convergence(self):
        with pytest.raises(SeriesExtrapolationError) as excinfo:
            eta_series_coefficients(_point(0.01, 0.0), h=0.01)
        assert excinfo.value.diagnostics["kappa"] == pytest.approx(0.01)

    def test_invalid_orders(self):
        with pytest.raises(ValueError):
            eta_series_coefficients(_point(1.0, 0.0), orders=3)
