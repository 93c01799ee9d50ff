"""Offline-stage construction of reduced bases from snapshot data.

Four generators:

* ``pod_basis`` - plain orthonormal basis of leading left singular vectors;
* ``cotangent_lift_basis`` - block-diagonal paired basis from stacked
  position/momentum snapshots;
* ``complex_svd_basis`` - paired basis from the SVD of q + i p snapshots;
* ``greedy_symplectic_basis`` - iterative pair enrichment driven by an
  integration-free energy-defect indicator over a parameter grid.

``greedy_projection_basis`` runs the same pair enrichment over a fixed
vector set, selecting by projection error; it is the variant used for
convergence studies.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateVector, StagnationError
from .integrators import NewtonConfig, integrate
from .svd import complex_truncated_svd, truncated_svd
from .symplectic import SymplecticBasis, enrich_basis

__all__ = [
    "SnapshotSet",
    "collect_snapshots",
    "pod_basis",
    "cotangent_lift_basis",
    "complex_svd_basis",
    "projection_error",
    "hamiltonian_error_indicator",
    "GreedyConfig",
    "GreedyReport",
    "greedy_symplectic_basis",
    "greedy_projection_basis",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SnapshotSet:
    """Column-stacked states with their (t, omega) provenance.

    ``nonlinear`` optionally carries g evaluated at each state column, so a
    later hyper-reduction stage needs no extra full-model sweeps.
    """

    states: np.ndarray
    times: np.ndarray
    parameters: np.ndarray
    nonlinear: Optional[np.ndarray] = None

    def __post_init__(self):
        cols = self.states.shape[1]
        if self.times.shape[0] != cols or self.parameters.shape[0] != cols:
            raise ValueError("snapshot provenance must have one row per column")
        if self.nonlinear is not None and self.nonlinear.shape != self.states.shape:
            raise ValueError("nonlinear snapshots must mirror the state block")

    @property
    def count(self):
        return self.states.shape[1]

    @property
    def n(self):
        return self.states.shape[0] // 2

    @classmethod
    def from_trajectories(cls, trajectories, model=None):
        states, times, params, nonlin = [], [], [], []
        for traj in trajectories:
            states.append(traj.states)
            times.append(traj.times)
            params.append(np.tile(traj.omega, (traj.times.size, 1)))
            if model is not None and model.nonlinear_grad is not None:
                cols = [
                    model.nonlinear_grad(traj.states[:, j], traj.omega)
                    for j in range(traj.states.shape[1])
                ]
                nonlin.append(np.column_stack(cols))
        return cls(
            states=np.hstack(states),
            times=np.concatenate(times),
            parameters=np.vstack(params),
            nonlinear=np.hstack(nonlin) if nonlin else None,
        )

    def merged(self, other):
        if other.count == 0:
            return self
        both_nonlinear = self.nonlinear is not None and other.nonlinear is not None
        return SnapshotSet(
            states=np.hstack([self.states, other.states]),
            times=np.concatenate([self.times, other.times]),
            parameters=np.vstack([self.parameters, other.parameters]),
            nonlinear=np.hstack([self.nonlinear, other.nonlinear]) if both_nonlinear else None,
        )


def collect_snapshots(
    model,
    parameters,
    grid=None,
    scheme="stormer_verlet",
    newton=NewtonConfig(),
    store_every=1,
    jobs=1,
):
    """Integrate the full model at each parameter and stack the snapshots.

    Trajectories at distinct parameters are independent, so they fan out
    over a thread pool when ``jobs > 1``; results are merged in input order.
    """
    grid = grid or model.grid
    parameters = [model.parameter(omega) for omega in parameters]

    def run(omega):
        return integrate(
            model,
            model.initial_state(omega),
            grid,
            scheme=scheme,
            omega=omega,
            newton=newton,
            store_every=store_every,
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            trajectories = list(pool.map(run, parameters))
    else:
        trajectories = [run(omega) for omega in parameters]
    return SnapshotSet.from_trajectories(trajectories, model=model)


def _state_matrix(snapshots):
    return snapshots.states if isinstance(snapshots, SnapshotSet) else np.asarray(snapshots, float)


def pod_basis(snapshots, k):
    """Leading k left singular vectors of the state block (orthonormal)."""
    S = _state_matrix(snapshots)
    return truncated_svd(S, k).left_vectors


def cotangent_lift_basis(snapshots, k):
    """Paired basis ``blockdiag(Phi, Phi)`` from stacked q and p snapshots.

    ``Phi`` holds the top-k left singular vectors of ``[q_1..q_M, p_1..p_M]``
    so one subspace serves both the position and the momentum block.
    """
    S = _state_matrix(snapshots)
    n = S.shape[0] // 2
    combined = np.hstack([S[:n, :], S[n:, :]])
    phi = truncated_svd(combined, k).left_vectors
    zeros = np.zeros_like(phi)
    return SymplecticBasis(np.vstack([phi, zeros]), np.vstack([zeros, phi]))


def complex_svd_basis(snapshots, k):
    """Paired basis ``[[Phi, -Psi], [Psi, Phi]]`` from q + i p snapshots.

    Phi and Psi are the real and imaginary parts of the top-k left singular
    vectors; unitarity of the singular vectors makes the assembled matrix
    orthosymplectic.
    """
    S = _state_matrix(snapshots)
    n = S.shape[0] // 2
    phi, psi, _ = complex_truncated_svd(S[:n, :], S[n:, :], k)
    return SymplecticBasis(np.vstack([phi, psi]), np.vstack([-psi, phi]))


def projection_error(snapshots, basis, kind="symplectic"):
    """Worst-column projection defect ``max_s ||s - P s||_2``.

    ``kind="symplectic"`` uses ``P = A A^+``; ``kind="orthogonal"`` uses
    ``P = A A^T`` and requires orthonormal columns. For an orthosymplectic
    paired basis the two coincide.
    """
    S = _state_matrix(snapshots)
    errors = _projection_defects(S, basis, kind)
    return float(errors.max()) if errors.size else 0.0


def _projection_defects(S, basis, kind="symplectic"):
    if isinstance(basis, SymplecticBasis):
        A = basis.assembled
        left = basis.inverse if kind == "symplectic" else A.T
    else:
        A = np.asarray(basis, float)
        if kind == "symplectic":
            from .symplectic import symplectic_inverse

            left = symplectic_inverse(A)
        else:
            left = A.T
    if kind == "orthogonal":
        gram_defect = np.linalg.norm(A.T @ A - np.eye(A.shape[1]))
        if gram_defect > 1e-8:
            raise ValueError(f"orthogonal projection needs orthonormal columns ({gram_defect:.2e})")
    residual = S - A @ (left @ S)
    return np.linalg.norm(residual, axis=0)


def hamiltonian_error_indicator(model, basis, omega):
    """Energy defect ``|H(z0) - H(A A^+ z0)|`` at the initial state.

    Needs no time integration, which is what makes a dense parameter grid
    affordable during the greedy sweep. Note that once the basis contains
    the initial state this value is zero, so the greedy search additionally
    evaluates the same defect over already-gathered training states (see
    ``greedy_symplectic_basis``).
    """
    omega = model.parameter(omega)
    z0 = model.initial_state(omega)
    projected = basis.project(z0)
    return abs(model.hamiltonian(z0, omega) - model.hamiltonian(projected, omega))


def _energy_defects(model, states, projected, omega):
    """Energy defect of each column pair under H(. , omega)."""
    return np.abs(model.hamiltonian(states, omega) - model.hamiltonian(projected, omega))


@dataclass(frozen=True)
class GreedyConfig:
    """Settings for the parametric greedy loop.

    ``delta`` is the tolerated indicator value, ``parameter_grid`` the
    discrete search set (one parameter per row), ``max_pairs`` the basis
    size cap in column pairs. ``indicator`` selects the search criterion:
    the energy defect (default, integration free) or the worst symplectic /
    orthogonal projection error over that parameter's trajectory.
    """

    delta: float
    parameter_grid: np.ndarray
    max_pairs: int
    indicator: str = "hamiltonian_error"
    grid: Optional[object] = None
    scheme: str = "stormer_verlet"
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    store_every: int = 1
    fresh_snapshots: bool = False
    degenerate_tol: float = 1e-12

    _INDICATORS = ("hamiltonian_error", "symplectic_projection_error", "orthogonal_projection_error")

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        grid = np.atleast_2d(np.asarray(self.parameter_grid, dtype=float))
        if grid.size == 0:
            raise ValueError("parameter grid must be non-empty")
        object.__setattr__(self, "parameter_grid", grid)
        if self.max_pairs < 1:
            raise ValueError("max_pairs must be at least 1")
        if self.indicator not in self._INDICATORS:
            raise ValueError(f"indicator must be one of {self._INDICATORS}")


@dataclass
class GreedyReport:
    """Per-iteration record of the greedy run."""

    selected_parameters: list = field(default_factory=list)
    indicator_values: list = field(default_factory=list)
    projection_errors: list = field(default_factory=list)
    final_pairs: int = 0
    termination: str = ""
    snapshots: Optional[SnapshotSet] = None

    def rows(self):
        for i, (omega, ind, sigma) in enumerate(
            zip(self.selected_parameters, self.indicator_values, self.projection_errors)
        ):
            yield i, omega, ind, sigma


def _enrich_from_pool(basis, pool, defects, degenerate_tol):
    """Enrich with the worst-approximated pool column, skipping degenerate
    candidates; raises StagnationError when every candidate is in the span."""
    for idx in np.argsort(defects)[::-1]:
        try:
            return enrich_basis(basis, pool[:, idx], degenerate_tol=degenerate_tol)
        except DegenerateVector:
            continue
    raise StagnationError("every remaining snapshot lies in the current span")


def greedy_symplectic_basis(model, config):
    """Parametric greedy generation of an orthosymplectic paired basis.

    Initialization seeds the basis with the normalized initial state at the
    first grid parameter and gathers that parameter's trajectory. Each
    iteration then scans the whole grid with the configured indicator
    (no integration during the scan), integrates the full model at the
    worst parameter if its trajectory is not cached yet, picks the cached
    snapshot with the largest symplectic projection error, and appends its
    orthosymplectic pair. Stops when the worst indicator drops to
    ``delta`` or when ``max_pairs`` pairs are reached.

    The energy-defect indicator is evaluated as the worst defect
    ``|H(s, omega) - H(A A^+ s, omega)|`` over the gathered training
    states together with the initial state at ``omega``; restricted to the
    initial state alone it vanishes as soon as the seed pair is in place,
    which would stall the search.

    Returns the basis together with a ``GreedyReport``; the report also
    carries the accumulated snapshot cache for reuse (hyper-reduction,
    convergence studies).
    """
    cfg = config
    grid = cfg.grid or model.grid
    params = cfg.parameter_grid
    # Seed where the initial configuration carries the most energy; the
    # first grid point can be dynamically degenerate (zero wave speed).
    seed = int(
        np.argmax(
            [
                abs(model.hamiltonian(model.initial_state(model.parameter(p)), model.parameter(p)))
                for p in params
            ]
        )
    )
    z0 = model.initial_state(model.parameter(params[seed]))
    if np.linalg.norm(z0) == 0:
        raise ValueError("initial state at the seed parameter is zero")
    basis = enrich_basis(SymplecticBasis.empty(model.n), z0, degenerate_tol=cfg.degenerate_tol)

    trajectories = {}
    report = GreedyReport()

    def trajectory_snapshots(index):
        if index not in trajectories:
            omega = model.parameter(params[index])
            traj = integrate(
                model,
                model.initial_state(omega),
                grid,
                scheme=cfg.scheme,
                omega=omega,
                newton=cfg.newton,
                store_every=cfg.store_every,
            )
            trajectories[index] = SnapshotSet.from_trajectories([traj], model=model)
        return trajectories[index]

    cache = trajectory_snapshots(seed)
    cached_indices = {seed}

    def indicator_sweep():
        if cfg.indicator == "hamiltonian_error":
            projected = basis.project(cache.states)
            values = np.empty(len(params))
            for i, omega_row in enumerate(params):
                omega = model.parameter(omega_row)
                defects = _energy_defects(model, cache.states, projected, omega)
                values[i] = max(float(defects.max()), hamiltonian_error_indicator(model, basis, omega))
            return values
        kind = "symplectic" if cfg.indicator.startswith("symplectic") else "orthogonal"
        return np.array(
            [projection_error(trajectory_snapshots(i), basis, kind=kind) for i in range(len(params))]
        )

    report.termination = "max_pairs"
    while basis.k < cfg.max_pairs:
        values = indicator_sweep()
        worst = int(np.argmax(values))
        if values[worst] <= cfg.delta:
            report.termination = "tolerance"
            break
        fresh = trajectory_snapshots(worst)
        if worst not in cached_indices:
            cache = cache.merged(fresh)
            cached_indices.add(worst)
        pool = fresh if cfg.fresh_snapshots else cache
        defects = _projection_defects(pool.states, basis, kind="symplectic")
        report.selected_parameters.append(params[worst].copy())
        report.indicator_values.append(float(values[worst]))
        report.projection_errors.append(float(defects.max()))
        basis = _enrich_from_pool(basis, pool.states, defects, cfg.degenerate_tol)
        log.info(
            "greedy pair %d: omega=%s indicator=%.3e sigma=%.3e",
            basis.k,
            np.array2string(params[worst], precision=4),
            values[worst],
            defects.max(),
        )

    report.final_pairs = basis.k
    report.snapshots = cache
    return basis, report


def greedy_projection_basis(snapshots, max_pairs, delta=0.0, kind="symplectic"):
    """Pair-greedy over a fixed vector set, selecting by projection error.

    The first direction is the largest-norm column; afterwards each
    iteration appends the pair generated by the worst-approximated column.
    Returns the basis and the per-iteration worst projection errors (the
    value before each enrichment, plus the final one).
    """
    S = _state_matrix(snapshots)
    if S.shape[1] == 0:
        raise ValueError("empty snapshot set")
    n = S.shape[0] // 2
    start = int(np.argmax(np.linalg.norm(S, axis=0)))
    if np.linalg.norm(S[:, start]) == 0:
        raise ValueError("all snapshots are zero")
    basis = enrich_basis(SymplecticBasis.empty(n), S[:, start])
    history = []
    while True:
        defects = _projection_defects(S, basis, kind=kind)
        history.append(float(defects.max()))
        if history[-1] <= delta or basis.k >= max_pairs:
            break
        try:
            basis = _enrich_from_pool(basis, S, defects, 1e-12)
        except StagnationError:
            break
    return basis, np.asarray(history)
