"""Tests for unitary stationary perturbation theory."""

import math

import numpy as np
import pytest

from scattering.potential import gaussian_bump, null_potential, square_well
from scattering.run_config import QuadConfig
from scattering.solvers.asymptotics import fit_sin_cos
from scattering.solvers.unitary_pt import (
    DiagonalSingularityError,
    build_discrete_generator,
    build_discrete_second_generator,
    commutator_identity_residual,
    default_discrete_kernel,
    delta1,
    delta2,
    discrete_unitary,
    first_order_state_norm,
    first_order_wavefunction,
    free_hamiltonian,
    gauss_legendre_grid,
    momentum_cut,
    second_order_identity_residual,
    theta1,
    theta2,
    transformed_hamiltonian_residual,
    unitarity_defect,
    unitary_phase_shifts,
)


@pytest.fixture
def well():
    """Uniform well with eta = 0.05 at p = 2 (m = R = 1)."""
    return square_well(R=1.0, coupling=0.1)


@pytest.fixture
def kernel(well):
    return default_discrete_kernel(well, 0, 2.0)


class TestGeneratorElements:
    """Tests for theta1 and theta2."""

    def test_theta1_value(self, well):
        element = theta1(well, 0, 1.0, 3.0, 1.0)
        expected = 2.0 * (math.sin(2.0) / 2.0 - math.sin(4.0) / 4.0) / math.pi / (1.0 - 9.0)
        assert element.order == 1
        assert element.value == pytest.approx(expected, rel=1e-13)

    def test_theta1_antisymmetric(self, well):
        assert theta1(well, 0, 1.0, 3.0, 1.0).value == -theta1(well, 0, 3.0, 1.0, 1.0).value

    def test_diagonal_rejected(self, well):
        with pytest.raises(DiagonalSingularityError):
            theta1(well, 0, 2.0, 2.0, 1.0)
        with pytest.raises(DiagonalSingularityError):
            theta2(well, 0, 2.0, 2.0, 1.0)

    def test_theta2_antisymmetric(self, well):
        forward = theta2(well, 0, 1.5, 2.5, 1.0)
        backward = theta2(well, 0, 2.5, 1.5, 1.0)
        assert forward.order == 2
        assert math.isfinite(forward.value)
        assert forward.value == pytest.approx(-backward.value, rel=1e-12)


class TestPhaseShifts:
    """Tests for delta1 and delta2."""

    def test_delta1_at_half_period(self):
        """2 kappa = pi, eta = 0.05 gives delta1 = -eta exactly."""
        p = math.pi / 2.0
        model = square_well(R=1.0, coupling=0.05 * p)
        result = delta1(model, 0, p, 1.0)
        assert result.method == "unitary"
        assert result.order == 1
        assert result.value == pytest.approx(-0.05, abs=1e-12)

    @pytest.mark.parametrize("kappa", [0.3, 2.0, 7.5])
    def test_delta1_closed_form(self, kappa):
        """delta1 = -eta (1 - sinc 2 kappa)."""
        eta = 0.05
        model = square_well(R=1.0, coupling=eta * kappa)
        expected = -eta * (1.0 - math.sin(2 * kappa) / (2 * kappa))
        assert delta1(model, 0, kappa, 1.0).value == pytest.approx(expected, abs=1e-12)

    def test_delta1_attractive_sign(self):
        """An attractive well gives a positive first-order shift."""
        assert delta1(square_well(1.0, -0.1), 0, 2.0, 1.0).value > 0

    def test_delta2_large_kappa_reference(self):
        """delta2 ~ -eta^2 (1 + 2 cos 2 kappa) / (2 kappa) at kappa = 20."""
        kappa, eta = 20.0, 0.05
        model = square_well(R=1.0, coupling=eta * kappa)
        result = delta2(model, 0, kappa, 1.0)
        reference = -(eta**2) * (1.0 + 2.0 * math.cos(2 * kappa)) / (2 * kappa)
        assert result.order == 2
        assert abs(result.value - reference) <= 3.0 * eta**2 / kappa**2
        assert result.diagnostics["k_cut"] == pytest.approx(kappa + 40.0)

    def test_delta2_scales_quadratically(self, well):
        weaker = well.with_coupling(0.05)
        ratio = delta2(well, 0, 2.0, 1.0).value / delta2(weaker, 0, 2.0, 1.0).value
        assert ratio == pytest.approx(4.0, rel=1e-8)

    def test_zero_coupling(self):
        null = null_potential()
        assert delta1(null, 0, 1.0, 1.0).value == 0.0
        assert delta2(null, 0, 1.0, 1.0).value == 0.0

    def test_combined_call_matches_separate(self, well):
        first, second = unitary_phase_shifts(well, 0, 2.0, 1.0)
        assert first.value == delta1(well, 0, 2.0, 1.0).value
        assert second.value == delta2(well, 0, 2.0, 1.0).value
        assert (first.order, second.order) == (1, 2)

    def test_gaussian_p_wave(self):
        """l = 1 uses the numeric element and stays finite."""
        model = gaussian_bump(width=1.0, coupling=0.1)
        assert math.isfinite(delta1(model, 1, 1.5, 1.0).value)
        assert math.isfinite(delta2(model, 1, 1.5, 1.0).value)


class TestMomentumCut:
    """Tests for momentum_cut."""

    def test_margin(self):
        assert momentum_cut(2.0, 0.5, QuadConfig()) == pytest.approx(82.0)

    def test_ratio(self):
        assert momentum_cut(2.0, 0.5, QuadConfig(k_cut_over_p=30.0)) == pytest.approx(60.0)


class TestFirstOrderWavefunction:
    """Tests for first_order_wavefunction."""

    def test_free_limit(self):
        r = np.linspace(0.0, 5.0, 51)
        wf = first_order_wavefunction(null_potential(), 0, 2.0, 1.0, r)
        np.testing.assert_allclose(wf.samples.samples, math.sqrt(2 / math.pi) * np.sin(2.0 * r), atol=1e-15)

    def test_outside_is_shifted_standing_wave(self, well):
        """Beyond R, y = sqrt(2/pi) (sin pr + delta1 cos pr) exactly at first order."""
        p = 2.0
        r = np.linspace(0.0, 6.0, 61)
        wf = first_order_wavefunction(well, 0, p, 1.0, r)
        d1 = delta1(well, 0, p, 1.0).value
        outside = r >= 2.0
        expected = math.sqrt(2 / math.pi) * (np.sin(p * r[outside]) + d1 * np.cos(p * r[outside]))
        np.testing.assert_allclose(wf.samples.samples[outside], expected, atol=1e-7)
        assert wf.samples.samples[0] == 0.0
        assert wf.pv_diagnostics["k_cut"] == pytest.approx(42.0)

    @pytest.mark.parametrize("kappa", [5.0, 20.0, 50.0])
    def test_fitted_phase_is_delta1(self, kappa):
        """The asymptotic fit beyond R returns tan(phase) = delta1 at first order."""
        eta = 0.05
        model = square_well(R=1.0, coupling=eta * kappa)
        r_max = 1.5 + 8.0 * math.pi / kappa
        r = np.linspace(0.0, r_max, int(math.ceil(16.0 * kappa * r_max / math.pi)) + 1)
        samples = first_order_wavefunction(model, 0, kappa, 1.0, r).samples
        fit = fit_sin_cos(samples)
        assert fit.window[0] > 1.0
        assert fit.A == pytest.approx(1.0, abs=1e-6)
        assert math.tan(fit.phase) == pytest.approx(delta1(model, 0, kappa, 1.0).value, abs=1e-6)


class TestDiscreteGenerator:
    """Tests for the discrete generator and its invariants."""

    def test_grid_avoids_on_shell_point(self):
        nodes, _ = gauss_legendre_grid(4, 10.0)
        shifted, weights = gauss_legendre_grid(4, 10.0, avoid=float(nodes[1]))
        assert len(shifted) == 5
        assert np.min(np.abs(shifted - nodes[1])) > 1e-9 * 10.0
        assert weights.sum() == pytest.approx(10.0)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            gauss_legendre_grid(1, 10.0)

    def test_generator_is_antisymmetric(self, kernel):
        generator = build_discrete_generator(kernel, 1.0)
        np.testing.assert_array_equal(generator.entries, -generator.entries.T)
        assert generator.diagonal_excluded
        assert np.all(np.diag(generator.entries) == 0.0)

    def test_asymmetric_kernel_rejected(self, kernel):
        kernel.entries[0, 1] += 1e-3
        with pytest.raises(ValueError):
            build_discrete_generator(kernel, 1.0)

    def test_unitarity(self, kernel):
        generator = build_discrete_generator(kernel, 1.0)
        assert unitarity_defect(discrete_unitary(generator, 0.1)) < 1e-12

    def test_unitarity_with_second_order(self, kernel):
        generator = build_discrete_generator(kernel, 1.0)
        second = build_discrete_second_generator(kernel, generator, 1.0)
        np.testing.assert_array_equal(second.entries, -second.entries.T)
        assert unitarity_defect(discrete_unitary(generator, 0.1, second)) < 1e-12

    def test_commutator_identity(self, kernel):
        generator = build_discrete_generator(kernel, 1.0)
        energy = float(np.max(np.diag(free_hamiltonian(kernel, 1.0))))
        scale = energy * float(np.max(np.abs(generator.entries)))
        assert commutator_identity_residual(kernel, generator, 1.0) / scale < 1e-13

    @pytest.mark.parametrize("nodes", [32, 64, 128])
    def test_second_order_identity_under_refinement(self, well, nodes):
        """i[H_f, Theta2] = [Theta1, Utilde] off the diagonal at every grid size."""
        kernel = default_discrete_kernel(well, 0, 2.0, QuadConfig(grid_nodes=nodes))
        generator = build_discrete_generator(kernel, 1.0)
        second = build_discrete_second_generator(kernel, generator, 1.0)
        assert second_order_identity_residual(kernel, generator, second, 1.0) < 1e-11

    def test_residual_second_order_scaling(self, kernel):
        """First-order generator: the off-diagonal residual drops ~4x when lambda halves."""
        big = transformed_hamiltonian_residual(kernel, 1.0, 2e-3)[0]
        small = transformed_hamiltonian_residual(kernel, 1.0, 1e-3)[0]
        assert 3.2 <= big / small <= 4.8

    def test_residual_third_order_scaling(self, kernel):
        """Adding the second-order generator: ~8x when lambda halves."""
        big = transformed_hamiltonian_residual(kernel, 1.0, 1e-2, second_order=True)[0]
        small = transformed_hamiltonian_residual(kernel, 1.0, 5e-3, second_order=True)[0]
        assert 6.4 <= big / small <= 9.6

    def test_second_order_generator_improves_residual(self, kernel):
        first = transformed_hamiltonian_residual(kernel, 1.0, 1e-2)[0]
        second = transformed_hamiltonian_residual(kernel, 1.0, 1e-2, second_order=True)[0]
        assert second < first

    def test_state_norm_has_no_linear_term(self, kernel):
        generator = build_discrete_generator(kernel, 1.0)
        index = int(np.argmin(np.abs(kernel.nodes - 2.0)))
        norm, linear = first_order_state_norm(generator, 1e-3, index)
        assert linear == 0.0
        assert norm >= 1.0
        assert norm - 1.0 == pytest.approx(1e-6 * float(generator.entries[:, index] @ generator.entries[:, index]))
