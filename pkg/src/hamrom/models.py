"""Parametric canonical test systems on the periodic 1-d grid.

Both bundled models are finite-difference discretizations on a torus of
length L with N equidistant points ``x_i = i * dx``:

* linear wave equation, parametrized by a 4-vector controlling the squared
  wave speed;
* focusing cubic Schroedinger equation, parametrized by the strength of the
  nonlinearity.

A model packages the energy function H, its gradient split ``grad H(z) =
L z + g(z)``, the initial condition, and (for nonlinear terms acting site
by site) sampled-evaluation hooks used by hyper-reduction. The implemented
H is the one that generates the dynamics: ``dz/dt = J (L z + g(z))`` with
``grad H = L z + g`` exactly, so no quadrature weight appears in H itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .symplectic import apply_structure_matrix

__all__ = [
    "GridSpec",
    "HamiltonianModel",
    "BoundModel",
    "periodic_laplacian",
    "wave_speed_coefficient",
    "bump_spline",
    "build_wave_model",
    "build_nls_model",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time grid: ``dx = length / points``, fixed step dt."""

    length: float
    points: int
    dt: float
    t_final: float

    def __post_init__(self):
        if self.points < 1:
            raise ValueError("grid needs at least one point")
        if self.length <= 0 or self.dt <= 0 or self.t_final < 0:
            raise ValueError("length and dt must be positive, t_final non-negative")

    @property
    def dx(self):
        return self.length / self.points

    @property
    def steps(self):
        """Number of time steps; t_final must be an integer multiple of dt."""
        ratio = self.t_final / self.dt
        steps = int(round(ratio))
        if abs(ratio - steps) > 1e-9 * max(1.0, ratio):
            raise ValueError(f"t_final={self.t_final} is not a multiple of dt={self.dt}")
        return steps

    @property
    def x(self):
        return self.dx * np.arange(1, self.points + 1)


def periodic_laplacian(points, dx):
    """Dense central second-difference matrix with wrap-around stencil."""
    eye = np.eye(points)
    D = np.roll(eye, 1, axis=1) + np.roll(eye, -1, axis=1) - 2.0 * eye
    return D / dx**2


def _as_parameter(omega, dim, bounds=None, name="omega"):
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if omega.shape != (dim,):
        raise ValueError(f"{name} must have {dim} component(s), got shape {omega.shape}")
    if not np.all(np.isfinite(omega)):
        raise ValueError(f"{name} contains non-finite values")
    if bounds is not None:
        lo, hi = bounds
        if np.any(omega < lo - 1e-12) or np.any(omega > hi + 1e-12):
            raise ValueError(f"{name}={omega} outside [{lo}, {hi}]")
    return omega


@dataclass(frozen=True)
class HamiltonianModel:
    """Descriptor of one parametric canonical system of dimension 2n.

    The right-hand side is ``J (L(omega) z + g(z, omega))`` and the energy
    gradient satisfies ``grad H = L z + g`` exactly. ``separable`` marks
    energies of the form K(p) + U(q), for which the Verlet step is explicit.

    Site hooks (optional, present when g acts componentwise on (q_i, p_i)
    pairs): ``site_nonlinear`` evaluates g at selected sites only,
    ``site_nonlinear_jacobian`` the corresponding 2x2 blocks, and
    ``site_potential`` the per-site nonlinear energy density whose sum is
    the nonlinear part of H.
    """

    name: str
    n: int
    grid: GridSpec
    separable: bool
    parameter_dim: int
    parameter_bounds: Optional[tuple]
    linear_matrix: Callable
    hamiltonian: Callable
    initial_state: Callable
    nonlinear_grad: Optional[Callable] = None
    nonlinear_jacobian: Optional[Callable] = None
    nonlinear_potential: Optional[Callable] = None
    site_nonlinear: Optional[Callable] = None
    site_nonlinear_jacobian: Optional[Callable] = None
    site_potential: Optional[Callable] = None

    @property
    def dim(self):
        return 2 * self.n

    def parameter(self, omega):
        return _as_parameter(omega, self.parameter_dim, self.parameter_bounds)

    def at(self, omega):
        """Bind the model to one parameter value for repeated evaluation."""
        return BoundModel(self, self.parameter(omega))


class BoundModel:
    """Model with frozen parameter: assembles L(omega) once."""

    def __init__(self, model, omega):
        self.model = model
        self.omega = omega
        self.linear = model.linear_matrix(omega)
        self.separable = model.separable
        self.dim = model.dim
        self.n = model.n

    def gradient(self, z):
        """Energy gradient ``L z + g(z)``."""
        grad = self.linear @ z
        if self.model.nonlinear_grad is not None:
            grad = grad + self.model.nonlinear_grad(z, self.omega)
        return grad

    def gradient_jacobian(self, z):
        """Hessian of H, used by implicit stages of the integrator."""
        hess = self.linear
        if self.model.nonlinear_jacobian is not None:
            hess = hess + self.model.nonlinear_jacobian(z, self.omega)
        return hess

    def rhs(self, z):
        return apply_structure_matrix(self.gradient(z))

    def hamiltonian(self, z):
        return self.model.hamiltonian(z, self.omega)

    def initial_state(self):
        return self.model.initial_state(self.omega)


def wave_speed_coefficient(omega, c_squared=0.1):
    """Effective squared wave speed ``c^2 * sum_l omega_l / l^2``."""
    omega = _as_parameter(omega, 4, name="omega")
    weights = 1.0 / np.arange(1, 5, dtype=float) ** 2
    return float(c_squared * (weights @ omega))


def bump_spline(s):
    """Compactly supported cubic bump: 1 at 0, 1/4 at 1, 0 beyond 2."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inner = s <= 1.0
    out[inner] = 1.0 - 1.5 * s[inner] ** 2 + 0.75 * s[inner] ** 3
    mid = (s > 1.0) & (s <= 2.0)
    out[mid] = 0.25 * (2.0 - s[mid]) ** 3
    return out


def build_wave_model(grid, c_squared=0.1, enforce_bounds=True):
    """Linear wave equation ``u_tt = kappa(omega) u_xx`` on the torus.

    Canonical variables are ``q = u`` and ``p = u_t``; the stiffness block
    is the periodic second-difference operator. The initial profile is a
    cubic bump centered at x = 1/2 scaled to the grid, with zero momentum.
    """
    if grid.points < 3:
        raise ValueError("wave model needs at least 3 grid points")
    n = grid.points
    dx = grid.dx
    Dxx = periodic_laplacian(n, dx)
    x = grid.x
    bounds = (0.0, 1.0) if enforce_bounds else None

    def linear_matrix(omega):
        kappa = wave_speed_coefficient(omega, c_squared)
        L = np.zeros((2 * n, 2 * n))
        L[:n, :n] = -kappa * Dxx
        L[n:, n:] = np.eye(n)
        return L

    def hamiltonian(z, omega):
        # Accepts one state or a column block; sums run over the site axis.
        kappa = wave_speed_coefficient(omega, c_squared)
        q, p = z[:n], z[n:]
        fwd = np.roll(q, -1, axis=0) - q
        bwd = q - np.roll(q, 1, axis=0)
        value = 0.5 * np.sum(p**2 + kappa * (fwd**2 + bwd**2) / (2.0 * dx**2), axis=0)
        return float(value) if np.ndim(z) == 1 else value

    def initial_state(omega):
        q0 = bump_spline(10.0 * np.abs(x - 0.5))
        return np.concatenate([q0, np.zeros(n)])

    return HamiltonianModel(
        name="wave",
        n=n,
        grid=grid,
        separable=True,
        parameter_dim=4,
        parameter_bounds=bounds,
        linear_matrix=linear_matrix,
        hamiltonian=hamiltonian,
        initial_state=initial_state,
    )


def build_nls_model(grid, wave_speed=1.0, x0=None, enforce_bounds=True):
    """Focusing cubic Schroedinger equation in real canonical form.

    With ``u = p + i q`` the PDE ``i u_t = -u_xx - eps |u|^2 u`` becomes

        q_t =  p_xx + eps (q^2 + p^2) p,
        p_t = -q_xx - eps (q^2 + p^2) q,

    a canonical system with non-separable energy. The initial condition is
    a soliton profile ``sqrt(2)/cosh(x - x0) * exp(i c (x - x0) / 2)``
    centered at ``x0`` (domain midpoint by default).
    """
    if grid.points < 3:
        raise ValueError("Schroedinger model needs at least 3 grid points")
    n = grid.points
    dx = grid.dx
    Dxx = periodic_laplacian(n, dx)
    L = np.zeros((2 * n, 2 * n))
    L[:n, :n] = Dxx
    L[n:, n:] = Dxx
    x = grid.x
    center = 0.5 * grid.length if x0 is None else float(x0)
    bounds = (0.9, 1.1) if enforce_bounds else None

    def linear_matrix(omega):
        return L

    def split(z):
        return z[:n], z[n:]

    def _eps(omega):
        return float(np.atleast_1d(omega)[0])

    def nonlinear_grad(z, omega):
        eps = _eps(omega)
        q, p = split(z)
        amp = q**2 + p**2
        return eps * np.concatenate([amp * q, amp * p])

    def nonlinear_jacobian(z, omega):
        eps = _eps(omega)
        q, p = split(z)
        J = np.zeros((2 * n, 2 * n))
        idx = np.arange(n)
        J[idx, idx] = eps * (3.0 * q**2 + p**2)
        J[idx, idx + n] = eps * 2.0 * q * p
        J[idx + n, idx] = eps * 2.0 * q * p
        J[idx + n, idx + n] = eps * (q**2 + 3.0 * p**2)
        return J

    def nonlinear_potential(z, omega):
        eps = _eps(omega)
        q, p = split(z)
        value = 0.25 * eps * np.sum((q**2 + p**2) ** 2, axis=0)
        return float(value) if np.ndim(z) == 1 else value

    def hamiltonian(z, omega):
        # Accepts one state or a column block; sums run over the site axis.
        q, p = split(z)
        linear_part = (
            np.sum(q * np.roll(q, 1, axis=0) - q**2, axis=0)
            + np.sum(p * np.roll(p, 1, axis=0) - p**2, axis=0)
        ) / dx**2
        value = linear_part + nonlinear_potential(z, omega)
        return float(value) if np.ndim(z) == 1 else value

    def initial_state(omega):
        u0 = np.sqrt(2.0) / np.cosh(x - center) * np.exp(1j * wave_speed * (x - center) / 2.0)
        return np.concatenate([u0.imag, u0.real])

    def site_nonlinear(qs, ps, omega):
        eps = _eps(omega)
        amp = qs**2 + ps**2
        return eps * amp * qs, eps * amp * ps

    def site_nonlinear_jacobian(qs, ps, omega):
        eps = _eps(omega)
        return (
            eps * (3.0 * qs**2 + ps**2),
            eps * 2.0 * qs * ps,
            eps * (qs**2 + 3.0 * ps**2),
        )

    def site_potential(qs, ps, omega):
        eps = _eps(omega)
        return 0.25 * eps * (qs**2 + ps**2) ** 2

    return HamiltonianModel(
        name="nls",
        n=n,
        grid=grid,
        separable=False,
        parameter_dim=1,
        parameter_bounds=bounds,
        linear_matrix=linear_matrix,
        hamiltonian=hamiltonian,
        initial_state=initial_state,
        nonlinear_grad=nonlinear_grad,
        nonlinear_jacobian=nonlinear_jacobian,
        nonlinear_potential=nonlinear_potential,
        site_nonlinear=site_nonlinear,
        site_nonlinear_jacobian=site_nonlinear_jacobian,
        site_potential=site_potential,
    )
