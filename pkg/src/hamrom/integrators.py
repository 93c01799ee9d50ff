"""Fixed-step time integration for canonical systems.

``stormer_verlet_step`` implements the second-order symplectic one-step
map in both orderings (position half-step first, the default, or momentum
half-step first). For separable energies every substage is explicit;
otherwise the implicit substages are solved with Newton's method. A
non-symplectic explicit midpoint step (``rk2``) is included as the
comparison integrator for orthogonally projected reduced systems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IntegrationError, NewtonDivergence

__all__ = [
    "NewtonConfig",
    "newton_solve",
    "stormer_verlet_step",
    "rk2_step",
    "Trajectory",
    "integrate",
]


@dataclass(frozen=True)
class NewtonConfig:
    """Inner nonlinear solver settings: residual 2-norm target, iteration
    cap, and the forward-difference step used when no Jacobian is given."""

    tol: float = 1e-12
    max_iters: int = 50
    fd_step: float = 1e-7

    def __post_init__(self):
        if self.tol <= 0 or self.max_iters < 1 or self.fd_step <= 0:
            raise ValueError("Newton settings must be positive")


def _fd_jacobian(residual, x, r0, step):
    m = x.size
    J = np.empty((m, m))
    for j in range(m):
        xp = x.copy()
        xp[j] += step
        J[:, j] = (residual(xp) - r0) / step
    return J


def newton_solve(residual, x0, config=NewtonConfig(), jacobian=None):
    """Solve ``residual(x) = 0`` starting from x0.

    Convergence means ``||residual||_2 <= tol * max(1, ||x||_2)``; the
    scaling keeps the target attainable in double precision when the
    unknown itself is large. The Jacobian comes from the optional callback,
    else from forward differences with ``config.fd_step``. Raises
    ``NewtonDivergence`` when the target is not met within the iteration
    budget; a singular linear stage surfaces as ``numpy.linalg.LinAlgError``.
    """
    x = np.array(x0, dtype=float)
    r = np.asarray(residual(x), dtype=float)

    def converged():
        return np.linalg.norm(r) <= config.tol * max(1.0, np.linalg.norm(x))

    for _ in range(config.max_iters):
        if converged():
            return x
        if not np.all(np.isfinite(r)):
            raise NewtonDivergence("residual became non-finite")
        J = jacobian(x) if jacobian is not None else _fd_jacobian(residual, x, r, config.fd_step)
        x = x - np.linalg.solve(J, r)
        r = np.asarray(residual(x), dtype=float)
    if converged():
        return x
    raise NewtonDivergence(
        f"no convergence in {config.max_iters} iterations (residual {np.linalg.norm(r):.3e})"
    )


class _Stepper:
    """Verlet substages for one system, with gradients split into blocks."""

    def __init__(self, system, newton):
        self.system = system
        self.newton = newton
        self.n = system.dim // 2
        self.hessian = getattr(system, "gradient_jacobian", None)

    def grad(self, q, p):
        g = self.system.gradient(np.concatenate([q, p]))
        return g[: self.n], g[self.n :]

    def _implicit(self, residual, guess, hess_block):
        jacobian = None
        if self.hessian is not None:
            jacobian = hess_block
        return newton_solve(residual, guess, self.newton, jacobian=jacobian)

    def position_first(self, q, p, dt):
        if self.system.separable:
            _, gp = self.grad(q, p)
            q_half = q + 0.5 * dt * gp
            gq, _ = self.grad(q_half, p)
            p_new = p - dt * gq
            _, gp_new = self.grad(q_half, p_new)
            return q_half + 0.5 * dt * gp_new, p_new

        n = self.n

        def res_qh(qh):
            _, gp = self.grad(qh, p)
            return qh - q - 0.5 * dt * gp

        def jac_qh(qh):
            hess = self.hessian(np.concatenate([qh, p]))
            return np.eye(n) - 0.5 * dt * hess[n:, :n]

        _, gp0 = self.grad(q, p)
        q_half = self._implicit(res_qh, q + 0.5 * dt * gp0, jac_qh)

        gq0, _ = self.grad(q_half, p)

        def res_pn(pn):
            gq, _ = self.grad(q_half, pn)
            return pn - p + 0.5 * dt * (gq0 + gq)

        def jac_pn(pn):
            hess = self.hessian(np.concatenate([q_half, pn]))
            return np.eye(n) + 0.5 * dt * hess[:n, n:]

        p_new = self._implicit(res_pn, p - dt * gq0, jac_pn)
        _, gp_new = self.grad(q_half, p_new)
        return q_half + 0.5 * dt * gp_new, p_new

    def momentum_first(self, q, p, dt):
        if self.system.separable:
            gq, _ = self.grad(q, p)
            p_half = p - 0.5 * dt * gq
            _, gp = self.grad(q, p_half)
            q_new = q + dt * gp
            gq_new, _ = self.grad(q_new, p_half)
            return q_new, p_half - 0.5 * dt * gq_new

        n = self.n

        def res_ph(ph):
            gq, _ = self.grad(q, ph)
            return ph - p + 0.5 * dt * gq

        def jac_ph(ph):
            hess = self.hessian(np.concatenate([q, ph]))
            return np.eye(n) + 0.5 * dt * hess[:n, n:]

        gq0, _ = self.grad(q, p)
        p_half = self._implicit(res_ph, p - 0.5 * dt * gq0, jac_ph)

        _, gp0 = self.grad(q, p_half)

        def res_qn(qn):
            _, gp = self.grad(qn, p_half)
            return qn - q - 0.5 * dt * (gp0 + gp)

        def jac_qn(qn):
            hess = self.hessian(np.concatenate([qn, p_half]))
            return np.eye(n) - 0.5 * dt * hess[n:, :n]

        q_new = self._implicit(res_qn, q + dt * gp0, jac_qn)
        gq_new, _ = self.grad(q_new, p_half)
        return q_new, p_half - 0.5 * dt * gq_new


def stormer_verlet_step(system, z, dt, newton=NewtonConfig(), variant="position"):
    """One Verlet step of size dt for ``dz/dt = J grad H(z)``.

    variant="position" performs the position half-step first:

        q_half = q + dt/2 * H_p(q_half, p)
        p_new  = p - dt/2 * (H_q(q_half, p) + H_q(q_half, p_new))
        q_new  = q_half + dt/2 * H_p(q_half, p_new)

    variant="momentum" is the mirrored scheme starting with the momentum
    half-step. For separable H both collapse to the explicit leapfrog.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if variant not in ("position", "momentum"):
        raise ValueError(f"unknown variant {variant!r}")
    z = np.asarray(z, dtype=float)
    n = z.size // 2
    stepper = _Stepper(system, newton)
    if variant == "momentum":
        q_new, p_new = stepper.momentum_first(z[:n].copy(), z[n:].copy(), dt)
    else:
        q_new, p_new = stepper.position_first(z[:n].copy(), z[n:].copy(), dt)
    return np.concatenate([q_new, p_new])


def rk2_step(system, z, dt):
    """Explicit midpoint step for an arbitrary right-hand side."""
    mid = z + 0.5 * dt * system.rhs(z)
    return z + dt * system.rhs(mid)


@dataclass(frozen=True)
class Trajectory:
    """States stored column-wise at uniformly spaced times."""

    times: np.ndarray
    states: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        if self.states.shape[1] != self.times.size:
            raise ValueError("one state column per time is required")

    @property
    def dt(self):
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    @property
    def final(self):
        return self.states[:, -1]


def integrate(
    model,
    z0,
    grid,
    scheme="stormer_verlet",
    omega=None,
    newton=NewtonConfig(),
    variant="position",
    store_every=1,
):
    """Integrate from ``z0`` over ``grid.steps`` fixed steps.

    ``model`` is either a parametric model (bound at ``omega``) or an
    already-bound canonical system. Every ``store_every``-th state is kept,
    always including the initial and final ones. A non-finite state aborts
    with the failing step index in the message.
    """
    system = model.at(omega) if hasattr(model, "at") else model
    if scheme not in ("stormer_verlet", "rk2"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if variant not in ("position", "momentum"):
        raise ValueError(f"unknown variant {variant!r}")
    if store_every < 1:
        raise ValueError("store_every must be >= 1")
    z = np.array(z0, dtype=float)
    if z.size != system.dim:
        raise ValueError(f"state has length {z.size}, system expects {system.dim}")
    steps = grid.steps
    times = [0.0]
    states = [z.copy()]
    stepper = _Stepper(system, newton) if scheme == "stormer_verlet" else None
    n = system.dim // 2
    for step in range(1, steps + 1):
        if scheme == "rk2":
            z = rk2_step(system, z, grid.dt)
        else:
            if variant == "momentum":
                q_new, p_new = stepper.momentum_first(z[:n].copy(), z[n:].copy(), grid.dt)
            else:
                q_new, p_new = stepper.position_first(z[:n].copy(), z[n:].copy(), grid.dt)
            z = np.concatenate([q_new, p_new])
        if not np.all(np.isfinite(z)):
            raise IntegrationError(
                f"non-finite state at step {step} (omega={getattr(system, 'omega', omega)})"
            )
        if step % store_every == 0 or step == steps:
            times.append(step * grid.dt)
            states.append(z.copy())
    omega_value = getattr(system, "omega", omega)
    if omega_value is None:
        omega_value = []
    return Trajectory(
        times=np.asarray(times, dtype=float),
        states=np.column_stack(states) if states else np.zeros((system.dim, 0)),
        omega=np.atleast_1d(np.asarray(omega_value, dtype=float)),
    )
