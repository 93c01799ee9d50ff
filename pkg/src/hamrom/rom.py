"""Reduced-model assembly, online simulation, lifting, and error metrics.

Two reduction kinds:

* ``symplectic`` - paired basis A, reduced dynamics ``dy/dt = J_2k grad
  H~(y)`` with ``H~ = H o A``; integrated with the Verlet scheme. The
  nonlinear term is evaluated densely (lift, evaluate, contract), through a
  plain interpolation operator (comparison path; breaks the canonical
  structure), or through the energy-quadrature operator, which keeps the
  reduced system Hamiltonian with a sampled nonlinear energy.
* ``pod_galerkin`` - orthonormal basis V, reduced dynamics ``V^T J grad
  H(V y)``; not canonical, integrated with the explicit midpoint rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .deim import DeimOperator, deim_apply, reduced_jacobian
from .errors import ConfigError
from .integrators import NewtonConfig, Trajectory, integrate
from .symplectic import SymplecticBasis, apply_structure_matrix, symplecticity_residual

__all__ = [
    "ReducedModel",
    "assemble_symplectic_rom",
    "assemble_pod_rom",
    "stable_substeps",
    "simulate_rom",
    "lift",
    "lift_trajectory",
    "ErrorSeries",
    "error_series",
]

SYMPLECTICITY_TOL = 1e-8


@dataclass(frozen=True)
class ReducedModel:
    """Offline-projected system; ``at(omega)`` binds the parameter."""

    kind: str
    model: object
    basis: object
    nonlinear_path: str
    deim: Optional[DeimOperator] = None

    @property
    def pairs(self):
        if self.kind == "symplectic":
            return self.basis.k
        return self.basis.shape[1] // 2

    @property
    def columns(self):
        if self.kind == "symplectic":
            return 2 * self.basis.k
        return self.basis.shape[1]

    @property
    def basis_matrix(self):
        return self.basis.assembled if self.kind == "symplectic" else self.basis

    def at(self, omega):
        omega = self.model.parameter(omega)
        if self.kind == "symplectic":
            return _SymplecticReducedSystem(self, omega)
        return _PodReducedSystem(self, omega)

    def initial_state(self, omega):
        omega = self.model.parameter(omega)
        z0 = self.model.initial_state(omega)
        if self.kind == "symplectic":
            return self.basis.reduce_state(z0)
        return self.basis.T @ z0

    def hamiltonian(self, y, omega):
        """Reduced energy; the function whose canonical gradient drives the
        symplectic reduced dynamics."""
        return self.at(omega).hamiltonian(np.asarray(y, dtype=float))

    def lift(self, y):
        return self.basis_matrix @ y


class _SymplecticReducedSystem:
    """Parameter-bound canonical reduced system of dimension 2k."""

    def __init__(self, rom, omega):
        self.rom = rom
        self.omega = omega
        model = rom.model
        A = rom.basis.assembled
        self.A = A
        self.dim = A.shape[1]
        # grad H~ linear part: H1 = 1/2 z^T L z gives A^T L A y.
        self.quadratic = A.T @ model.linear_matrix(omega) @ A
        self.separable = False
        self.path = rom.nonlinear_path

    def _nonlinear_gradient(self, y):
        model, rom = self.rom.model, self.rom
        if self.path == "none":
            return 0.0
        if self.path == "dense":
            return self.A.T @ model.nonlinear_grad(self.A @ y, self.omega)
        op = rom.deim
        qs, ps = _sampled_state(op, y)
        gq, gp = model.site_nonlinear(qs, ps, self.omega)
        term = deim_apply(op, np.concatenate([gq, gp]))
        if self.path == "sdeim":
            # term = J grad(sampled energy); undo J to expose the gradient.
            return apply_structure_matrix(term, transpose=True)
        # Interpolation path: the term is not a gradient field. Fold it into
        # a pseudo-gradient so the Verlet stages see one consistent object.
        return apply_structure_matrix(term, transpose=True)

    def gradient(self, y):
        return self.quadratic @ y + self._nonlinear_gradient(y)

    def gradient_jacobian(self, y):
        model, rom = self.rom.model, self.rom
        if self.path == "none":
            return self.quadratic
        if self.path == "dense":
            return self.quadratic + self.A.T @ model.nonlinear_jacobian(self.A @ y, self.omega) @ self.A
        jac = reduced_jacobian(rom.deim, model, rom.basis, y, self.omega)
        return self.quadratic + apply_structure_matrix(jac, transpose=True)

    def rhs(self, y):
        return apply_structure_matrix(self.gradient(y))

    def hamiltonian(self, y):
        model = self.rom.model
        value = 0.5 * float(y @ (self.quadratic @ y))
        if self.path in ("dense", "deim"):
            if model.nonlinear_potential is not None:
                value += model.nonlinear_potential(self.A @ y, self.omega)
        elif self.path == "sdeim":
            op = self.rom.deim
            qs, ps = _sampled_state(op, y)
            value += float(op.site_weights @ model.site_potential(qs, ps, self.omega))
        return value

    def initial_state(self):
        return self.rom.initial_state(self.omega)

    def top_frequency(self):
        """Largest oscillation frequency of the linearized reduced system."""
        eigs = np.linalg.eigvals(apply_structure_matrix(self.quadratic))
        return float(np.abs(eigs.imag).max()) if eigs.size else 0.0


class _PodReducedSystem:
    """Orthogonal-projection reduced system ``dy/dt = V^T J grad H(V y)``."""

    def __init__(self, rom, omega):
        self.rom = rom
        self.omega = omega
        model = rom.model
        V = rom.basis
        self.V = V
        self.dim = V.shape[1]
        self.separable = False
        JL = apply_structure_matrix(model.linear_matrix(omega))
        self.linear = V.T @ JL @ V
        self.path = rom.nonlinear_path

    def rhs(self, y):
        model = self.rom.model
        out = self.linear @ y
        if self.path == "dense":
            g = model.nonlinear_grad(self.V @ y, self.omega)
            out = out + self.V.T @ apply_structure_matrix(g)
        elif self.path == "deim":
            op = self.rom.deim
            qs, ps = _sampled_state(op, y)
            gq, gp = model.site_nonlinear(qs, ps, self.omega)
            out = out + deim_apply(op, np.concatenate([gq, gp]))
        return out

    def hamiltonian(self, y):
        return self.rom.model.hamiltonian(self.V @ y, self.omega)

    def initial_state(self):
        return self.rom.initial_state(self.omega)


def _sampled_state(op, y):
    w = op.sample_map @ y
    half = op.m // 2
    return w[:half], w[half:]


def assemble_symplectic_rom(model, basis, deim=None, symplecticity_tol=SYMPLECTICITY_TOL):
    """Reduced canonical system over a paired basis.

    The nonlinear path follows the operator handed in: none (linear model),
    dense lifting, ``interpolation`` (comparison path), or ``hamiltonian``
    energy quadrature. Rejects bases whose symplecticity residual exceeds
    ``symplecticity_tol``.
    """
    if not isinstance(basis, SymplecticBasis):
        raise ConfigError("symplectic reduction needs a paired basis")
    residual = basis.symplecticity_residual()
    if residual > symplecticity_tol:
        raise ConfigError(f"basis symplecticity residual {residual:.3e} above tolerance")
    if model.nonlinear_grad is None:
        path = "none"
    elif deim is None:
        path = "dense"
    elif deim.mode == "hamiltonian":
        path = "sdeim"
    else:
        path = "deim"
    if deim is not None and not deim.paired:
        raise ConfigError("symplectic reduction requires a paired sample set")
    return ReducedModel(kind="symplectic", model=model, basis=basis, nonlinear_path=path, deim=deim)


def assemble_pod_rom(model, V, deim=None, orthonormality_tol=1e-8):
    """Galerkin reduced system over an orthonormal basis."""
    V = np.asarray(V, dtype=float)
    defect = np.linalg.norm(V.T @ V - np.eye(V.shape[1]))
    if defect > orthonormality_tol:
        raise ConfigError(f"basis orthonormality defect {defect:.3e} above tolerance")
    if model.nonlinear_grad is None:
        path = "none"
    elif deim is None:
        path = "dense"
    else:
        path = "deim"
        if not deim.paired:
            raise ConfigError("sampled evaluation here expects a paired sample set")
    return ReducedModel(kind="pod_galerkin", model=model, basis=V, nonlinear_path=path, deim=deim)


def stable_substeps(rom, omega, dt, target=0.5):
    """Sub-step count keeping ``dt/m * w_max`` at or below ``target``.

    Projection can push reduced frequencies above the full model's largest
    one (the paired columns mix positions and momenta), so the full model's
    stable step is not automatically stable for the reduced system.
    """
    if rom.kind != "symplectic":
        return 1
    freq = rom.at(omega).top_frequency()
    if freq == 0.0:
        return 1
    return max(1, int(np.ceil(dt * freq / target)))


def simulate_rom(
    rom, grid, omega, newton=NewtonConfig(), variant="position", store_every=1, substeps=1
):
    """Integrate the reduced system; returns reduced-coordinate states.

    Symplectic reductions use the Verlet scheme (implicit stages solved with
    Newton when the reduced energy couples q and p); orthogonal reductions
    use the explicit midpoint rule. With ``substeps="auto"`` a symplectic
    reduction runs ``stable_substeps`` inner steps per outer step; stored
    states stay on the outer time grid either way.
    """
    system = rom.at(omega)
    scheme = "stormer_verlet" if rom.kind == "symplectic" else "rk2"
    if substeps == "auto":
        substeps = stable_substeps(rom, omega, grid.dt)
    substeps = int(substeps)
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    inner = grid
    if substeps > 1:
        from .models import GridSpec

        inner = GridSpec(
            length=grid.length, points=grid.points, dt=grid.dt / substeps, t_final=grid.t_final
        )
    return integrate(
        system,
        system.initial_state(),
        inner,
        scheme=scheme,
        newton=newton,
        variant=variant,
        store_every=store_every * substeps,
    )


def lift(rom, y):
    """Map reduced coordinates back to the full space."""
    return rom.basis_matrix @ y


def lift_trajectory(rom, traj):
    return Trajectory(times=traj.times, states=rom.basis_matrix @ traj.states, omega=traj.omega)


@dataclass(frozen=True)
class ErrorSeries:
    """Time-aligned reduction errors: grid-weighted l2 distance, both
    energies, and the energy defect."""

    times: np.ndarray
    l2: np.ndarray
    hamiltonian_full: np.ndarray
    hamiltonian_reduced: np.ndarray
    delta_h: np.ndarray

    def rows(self):
        for j in range(self.times.size):
            yield (
                self.times[j],
                self.l2[j],
                self.hamiltonian_full[j],
                self.hamiltonian_reduced[j],
                self.delta_h[j],
            )


def error_series(fom_traj, rom, rom_traj, omega=None):
    """Per-time comparison of a full and a reduced trajectory.

    The spatial error carries the sqrt(dx) grid weight so values are
    mesh-consistent; the energy defect compares the full energy along the
    full trajectory with the full energy at the lifted reduced states.
    """
    if fom_traj.times.shape != rom_traj.times.shape or not np.allclose(
        fom_traj.times, rom_traj.times
    ):
        raise ValueError("trajectories live on different time grids")
    model = rom.model
    omega = model.parameter(omega if omega is not None else rom_traj.omega)
    lifted = rom.basis_matrix @ rom_traj.states
    weight = np.sqrt(model.grid.dx)
    l2 = weight * np.linalg.norm(fom_traj.states - lifted, axis=0)
    h_full = np.array(
        [model.hamiltonian(fom_traj.states[:, j], omega) for j in range(fom_traj.times.size)]
    )
    h_red = np.array([model.hamiltonian(lifted[:, j], omega) for j in range(rom_traj.times.size)])
    return ErrorSeries(
        times=fom_traj.times.copy(),
        l2=l2,
        hamiltonian_full=h_full,
        hamiltonian_reduced=h_red,
        delta_h=np.abs(h_full - h_red),
    )
