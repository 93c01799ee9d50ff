import numpy as np
import pytest

from hamrom.errors import IntegrationError, NewtonDivergence
from hamrom.integrators import (
    NewtonConfig,
    Trajectory,
    integrate,
    newton_solve,
    rk2_step,
    stormer_verlet_step,
)
from hamrom.models import GridSpec, build_nls_model, build_wave_model
from hamrom.symplectic import apply_structure_matrix


class Oscillator:
    """H = (q^2 + p^2) / 2 in one degree of freedom."""

    dim = 2
    separable = True

    def gradient(self, z):
        return z.copy()

    def gradient_jacobian(self, z):
        return np.eye(2)

    def rhs(self, z):
        return apply_structure_matrix(self.gradient(z))


class FreeParticle:
    dim = 2
    separable = True

    def gradient(self, z):
        return np.array([0.0, z[1]])

    def rhs(self, z):
        return apply_structure_matrix(self.gradient(z))


class Decay:
    """dz/dt = -z componentwise (not canonical; used for the midpoint rule)."""

    dim = 2
    separable = True

    def gradient(self, z):
        return z

    def rhs(self, z):
        return -z


class TestNewton:
    def test_square_root_of_two(self):
        calls = []

        def residual(x):
            calls.append(1)
            return np.array([x[0] ** 2 - 2.0])

        out = newton_solve(residual, np.array([1.5]), NewtonConfig(tol=1e-12))
        assert out[0] == pytest.approx(np.sqrt(2.0), abs=1e-12)
        assert len(calls) <= 14  # six iterations, two evaluations each

    def test_linear_single_step(self):
        out = newton_solve(lambda x: x, np.array([5.0]), NewtonConfig())
        assert out[0] == pytest.approx(0.0, abs=1e-12)

    def test_already_converged_returns_start(self):
        x0 = np.array([1.0 + 1e-14])
        out = newton_solve(lambda x: x - 1.0, x0, NewtonConfig(tol=1e-12))
        assert out is not x0
        assert np.array_equal(out, x0)

    def test_divergence(self):
        with pytest.raises(NewtonDivergence):
            newton_solve(lambda x: np.array([x[0] ** 2 + 1.0]), np.array([1.0]),
                         NewtonConfig(max_iters=5))

    def test_analytic_jacobian_used(self):
        def residual(x):
            return np.array([np.tanh(x[0]) - 0.5])

        out = newton_solve(residual, np.array([0.0]), jacobian=lambda x: np.array(
            [[1.0 / np.cosh(x[0]) ** 2]]))
        assert np.tanh(out[0]) == pytest.approx(0.5, abs=1e-12)


class TestVerletStep:
    def test_oscillator_one_step(self):
        z1 = stormer_verlet_step(Oscillator(), np.array([1.0, 0.0]), 0.1)
        assert z1[0] == pytest.approx(0.995)
        assert z1[1] == pytest.approx(-0.1)

    def test_free_particle_exact(self):
        z1 = stormer_verlet_step(FreeParticle(), np.array([0.2, 0.7]), 0.5)
        assert z1[0] == pytest.approx(0.2 + 0.5 * 0.7, abs=1e-15)
        assert z1[1] == pytest.approx(0.7, abs=1e-15)

    def test_small_step_consistency(self):
        system = Oscillator()
        z = np.array([0.3, -0.4])
        z1 = stormer_verlet_step(system, z, 1e-8)
        assert np.linalg.norm(z1 - z) <= 2e-8 * np.linalg.norm(system.rhs(z)) + 1e-15

    def test_reversibility(self):
        model = build_wave_model(GridSpec(1.0, 16, 0.01, 1.0))
        bound = model.at([0.4, 0.1, 0.7, 0.3])
        rng = np.random.default_rng(0)
        z = rng.normal(size=model.dim)
        forward = stormer_verlet_step(bound, z, 0.01)
        # reversing momenta, stepping, and reversing again recovers the start
        flip = np.concatenate([forward[: model.n], -forward[model.n :]])
        back = stormer_verlet_step(bound, flip, 0.01)
        recovered = np.concatenate([back[: model.n], -back[model.n :]])
        assert np.linalg.norm(recovered - z) < 1e-10

    def test_momentum_variant_second_order_too(self):
        exact = np.array([np.cos(1.0), -np.sin(1.0)])
        errors = []
        for dt in (0.1, 0.05):
            z = np.array([1.0, 0.0])
            for _ in range(int(round(1.0 / dt))):
                z = stormer_verlet_step(Oscillator(), z, dt, variant="momentum")
            errors.append(np.linalg.norm(z - exact))
        assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.2)

    def test_implicit_stages_match_explicit_on_separable(self):
        # Force the Newton path by dropping the separability marker.
        model = build_wave_model(GridSpec(1.0, 8, 0.01, 1.0))
        bound = model.at([0.5, 0.5, 0.5, 0.5])

        class Opaque:
            dim = bound.dim
            separable = False
            gradient = staticmethod(bound.gradient)
            gradient_jacobian = staticmethod(bound.gradient_jacobian)
            rhs = staticmethod(bound.rhs)

        rng = np.random.default_rng(1)
        z = rng.normal(size=bound.dim)
        explicit = stormer_verlet_step(bound, z, 0.02)
        implicit = stormer_verlet_step(Opaque(), z, 0.02)
        assert np.linalg.norm(explicit - implicit) < 1e-10

    def test_step_map_is_symplectic(self):
        model = build_wave_model(GridSpec(1.0, 16, 0.01, 1.0))
        bound = model.at([0.9, 0.2, 0.5, 0.8])
        rng = np.random.default_rng(2)
        z = rng.normal(size=model.dim)
        dim = model.dim
        step = 1e-5
        M = np.empty((dim, dim))
        for j in range(dim):
            e = np.zeros(dim)
            e[j] = step
            M[:, j] = (
                stormer_verlet_step(bound, z + e, 0.01) - stormer_verlet_step(bound, z - e, 0.01)
            ) / (2.0 * step)
        J = apply_structure_matrix(np.eye(dim))
        residual = np.linalg.norm(M.T @ J @ M - J)
        assert residual < 1e-6


class TestRk2:
    def test_midpoint_decay(self):
        z1 = rk2_step(Decay(), np.array([1.0, 1.0]), 0.1)
        assert np.allclose(z1, 0.905)


class TestIntegrate:
    def test_zero_steps(self):
        model = build_wave_model(GridSpec(1.0, 8, 0.1, 1.0))
        omega = [0.5, 0.5, 0.5, 0.5]
        z0 = model.initial_state(omega)
        traj = integrate(model, z0, GridSpec(1.0, 8, 0.1, 0.0), omega=omega)
        assert traj.states.shape == (16, 1)
        assert np.array_equal(traj.states[:, 0], z0)

    def test_second_order_global_error(self):
        exact = np.array([np.cos(1.0), -np.sin(1.0)])
        errors, steps = [], [0.1, 0.05, 0.025, 0.0125]
        for dt in steps:
            traj = integrate(Oscillator(), np.array([1.0, 0.0]), GridSpec(1.0, 1, dt, 1.0))
            errors.append(np.linalg.norm(traj.final - exact))
        slope = np.polyfit(np.log(steps), np.log(errors), 1)[0]
        assert abs(slope - 2.0) < 0.1

    def test_energy_band_no_secular_drift(self):
        traj = integrate(Oscillator(), np.array([1.0, 0.0]), GridSpec(1.0, 1, 0.01, 100.0),
                         store_every=10)
        energy = 0.5 * np.sum(traj.states**2, axis=0)
        drift_slope = np.polyfit(traj.times, energy - energy[0], 1)[0]
        assert abs(drift_slope) < 1e-8
        assert np.abs(energy - energy[0]).max() < 1e-4 * energy[0] + 1e-12

    def test_midpoint_drifts_verlet_does_not(self):
        model = build_wave_model(GridSpec(1.0, 100, 0.01, 30.0))
        omega = [0.8456, 0.1320, 0.9328, 0.5809]
        bound = model.at(omega)
        z0 = model.initial_state(omega)
        grid = GridSpec(1.0, 100, 0.01, 30.0)
        sv = integrate(model, z0, grid, omega=omega, store_every=20)
        with np.errstate(over="ignore", invalid="ignore"):
            rk = integrate(model, z0, grid, scheme="rk2", omega=omega, store_every=20)
        h_sv = bound.hamiltonian(sv.states)
        h_rk = bound.hamiltonian(rk.states)
        band = np.abs(h_sv - h_sv[0]).max()
        drift = np.abs(h_rk - h_rk[0]).max()
        assert drift / band >= 10.0

    def test_nonfinite_state_reported_with_step(self):
        class Explode:
            dim = 2
            separable = True

            def gradient(self, z):
                return np.array([0.0, np.inf])

            def rhs(self, z):
                return np.array([np.inf, 0.0])

        with pytest.raises(IntegrationError, match="step 1"):
            integrate(Explode(), np.array([1.0, 0.0]), GridSpec(1.0, 1, 0.1, 1.0), scheme="rk2")

    def test_store_every_keeps_final(self):
        traj = integrate(Oscillator(), np.array([1.0, 0.0]), GridSpec(1.0, 1, 0.1, 0.5),
                         store_every=3)
        assert traj.times[-1] == pytest.approx(0.5)
        assert traj.times.size == 3  # t = 0, 0.3, 0.5

    def test_trajectory_shape_validation(self):
        with pytest.raises(ValueError):
            Trajectory(times=np.zeros(3), states=np.zeros((4, 2)), omega=np.zeros(1))

    def test_nls_implicit_conserves_energy(self):
        grid = GridSpec(2.0 * np.pi / 0.11, 32, 0.01, 2.0)
        model = build_nls_model(grid)
        eps = np.array([1.0])
        traj = integrate(model, model.initial_state(eps), grid, omega=eps, store_every=10)
        bound = model.at(eps)
        energy = bound.hamiltonian(traj.states)
        assert np.abs(energy - energy[0]).max() < 1e-3 * max(1.0, abs(energy[0]))
