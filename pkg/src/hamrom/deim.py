"""Empirical interpolation of nonlinear terms and its energy-preserving
variant.

``deim_indices`` is the classic greedy row selection; combined with a basis
U it yields the interpolation operator ``U (P^T U)^{-1} P^T``. Nonlinear
terms acting componentwise on canonical pairs (q_i, p_i) additionally need
the sample set closed under i <-> i+-n so sampling commutes with the
nonlinearity (``pair_indices``).

Two operator flavours share one reduced-side contract (a precomputed
2k x m matrix applied to the m sampled nonlinear values):

* ``interpolation`` - the oblique-projection form; with an arbitrary basis
  this does not preserve the canonical structure of the reduced system and
  serves as the comparison path.
* ``hamiltonian`` - sampled-site quadrature of the nonlinear energy: the
  per-site energy density is interpolated over selected sites, giving a
  reduced nonlinear term that is exactly the canonical gradient of a
  sampled energy. The reduced system stays Hamiltonian by construction.

``sdeim_basis`` enriches the transposed symplectic inverse of an existing
paired basis with nonlinear snapshots, pair by pair, and maps the result
back, so the enlarged basis covers the nonlinear range as well.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateVector, StagnationError, ZeroResidual
from .svd import truncated_svd
from .symplectic import (
    SymplecticBasis,
    apply_structure_matrix,
    enrich_basis,
    symplectic_inverse,
)

__all__ = [
    "deim_indices",
    "pair_indices",
    "DeimOperator",
    "build_interpolation_operator",
    "build_hamiltonian_operator",
    "deim_apply",
    "reduced_jacobian",
    "transposed_symplectic_inverse",
    "sdeim_basis",
]

log = logging.getLogger(__name__)

_RESIDUAL_TOL = 1e-13


def deim_indices(U):
    """Greedy interpolation rows for the columns of U.

    Row 1 is the largest-magnitude entry of the first column; each further
    column is interpolated on the rows found so far and the largest residual
    entry provides the next row. A vanishing residual means the column is
    numerically dependent and raises ``ZeroResidual``.
    """
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[1] == 0:
        raise ValueError("expected a matrix with at least one column")
    indices = [int(np.argmax(np.abs(U[:, 0])))]
    if np.abs(U[indices[0], 0]) <= _RESIDUAL_TOL:
        raise ZeroResidual("first column is numerically zero")
    for i in range(1, U.shape[1]):
        coeff = np.linalg.solve(U[np.ix_(indices, range(i))], U[indices, i])
        residual = U[:, i] - U[:, :i] @ coeff
        pick = int(np.argmax(np.abs(residual)))
        if np.abs(residual[pick]) <= _RESIDUAL_TOL * max(1.0, np.linalg.norm(U[:, i])):
            raise ZeroResidual(f"column {i} is numerically dependent on the previous ones")
        indices.append(pick)
    return np.asarray(indices, dtype=int)


def pair_indices(indices, n):
    """Close a sample-row set under the canonical pairing i <-> i +- n.

    Returns the sorted, deduplicated closure. A closed set guarantees that
    sampling commutes with nonlinearities that act on (q_i, p_i) pairs.
    """
    indices = np.asarray(indices, dtype=int)
    if indices.size and (indices.min() < 0 or indices.max() >= 2 * n):
        raise ValueError("indices out of range")
    partners = np.where(indices < n, indices + n, indices - n)
    return np.unique(np.concatenate([indices, partners]))


@dataclass(frozen=True)
class DeimOperator:
    """Sampled evaluation of a reduced nonlinear term.

    The reduced term is ``projector @ g_sampled`` where ``g_sampled`` holds
    the nonlinear values at ``indices`` (length m). ``sample_map`` is
    ``P^T A`` (m x 2k), which maps reduced coordinates to the sampled raw
    coordinates; together with the commuting property it also gives the
    reduced Jacobian at sampled cost. For the ``hamiltonian`` flavour the
    indices come in (site, site+n) pairs ordered q-block first, and
    ``site_weights`` carries the energy quadrature weights.
    """

    mode: str
    basis_matrix: np.ndarray
    indices: np.ndarray
    paired: bool
    projector: np.ndarray
    sample_map: np.ndarray
    condition: float
    site_weights: Optional[np.ndarray] = None

    @property
    def m(self):
        return self.indices.size

    @property
    def sites(self):
        if not self.paired:
            raise ValueError("unpaired operator has no site layout")
        return self.indices[: self.m // 2]


def _reduced_projector(rom_basis, core):
    """Left factor ``A^+ J core`` (paired basis) or ``V^T J core``."""
    if isinstance(rom_basis, SymplecticBasis):
        # A^+ J = J_{2k} A^T for any even-dimensional A
        return apply_structure_matrix(rom_basis.assembled.T @ core)
    V = np.asarray(rom_basis, float)
    return apply_structure_matrix(V, transpose=True).T @ core


def _sample_matrix(rom_basis):
    return rom_basis.assembled if isinstance(rom_basis, SymplecticBasis) else np.asarray(rom_basis, float)


def _inline_paired_indices(U, n):
    """Greedy selection that closes the sample set after every pick, so the
    later interpolation residuals already see both partners of each pair."""
    indices = []

    def admit(row):
        for entry in (row, row + n if row < n else row - n):
            if entry not in indices:
                indices.append(entry)

    first = int(np.argmax(np.abs(U[:, 0])))
    if np.abs(U[first, 0]) <= _RESIDUAL_TOL:
        raise ZeroResidual("first column is numerically zero")
    admit(first)
    for i in range(1, U.shape[1]):
        coeff = np.linalg.lstsq(U[np.ix_(indices, range(i))], U[indices, i], rcond=None)[0]
        residual = U[:, i] - U[:, :i] @ coeff
        pick = int(np.argmax(np.abs(residual)))
        if np.abs(residual[pick]) <= _RESIDUAL_TOL * max(1.0, np.linalg.norm(U[:, i])):
            raise ZeroResidual(f"column {i} is numerically dependent on the previous ones")
        admit(pick)
    return np.asarray(sorted(indices), dtype=int)


def build_interpolation_operator(U, rom_basis, paired=False, n=None, inline_pairing=False):
    """Oblique-projection operator from a nonlinear basis U.

    With ``paired=True`` the greedy rows are closed under the canonical
    pairing; the closure can leave more rows than columns, in which case the
    sampled system is solved in the least-squares sense. ``inline_pairing``
    closes after every greedy pick instead of once at the end; the stored
    sample layout is always the sorted closure.
    """
    U = np.asarray(U, dtype=float)
    if paired:
        if n is None:
            n = U.shape[0] // 2
        if inline_pairing:
            indices = _inline_paired_indices(U, n)
        else:
            indices = pair_indices(deim_indices(U), n)
    else:
        indices = deim_indices(U)
    sampled = U[indices, :]
    condition = float(np.linalg.cond(sampled))
    log.info("interpolation operator: m=%d, cond(P^T U)=%.3e", indices.size, condition)
    if sampled.shape[0] == sampled.shape[1]:
        core = U @ np.linalg.inv(sampled)
    else:
        core = U @ np.linalg.pinv(sampled)
    projector = _reduced_projector(rom_basis, core)
    return DeimOperator(
        mode="interpolation",
        basis_matrix=U,
        indices=indices,
        paired=paired,
        projector=projector,
        sample_map=_sample_matrix(rom_basis)[indices, :],
        condition=condition,
    )


def build_hamiltonian_operator(model, rom_basis, snapshots, sites):
    """Energy-quadrature operator over ``sites`` greedily selected rows.

    The per-site nonlinear energy density is evaluated on the state
    snapshots; its leading left singular vectors drive the greedy site
    selection, and the quadrature weights reproduce the total density sum
    on that subspace: ``w^T = 1^T U_phi (P^T U_phi)^{-1}``. The reduced
    nonlinear term becomes ``J_2k (P^T A)^T diag(w) g_sampled``, the exact
    canonical gradient of the sampled energy, so the reduced system remains
    Hamiltonian.
    """
    if model.site_potential is None or model.site_nonlinear is None:
        raise ValueError("model provides no site-level nonlinearity")
    if not isinstance(rom_basis, SymplecticBasis):
        raise ValueError("energy quadrature requires a paired basis")
    if not hasattr(snapshots, "parameters"):
        raise ValueError("energy quadrature needs snapshots with parameter provenance")
    states = snapshots.states
    params = snapshots.parameters
    n = model.n
    density = np.column_stack(
        [
            model.site_potential(states[:n, j], states[n:, j], model.parameter(params[j]))
            for j in range(states.shape[1])
        ]
    )
    rank = int(min(sites, np.linalg.matrix_rank(density, tol=1e-12)))
    if rank < sites:
        log.info("density snapshots have rank %d < %d sites; truncating", rank, sites)
    basis_phi = truncated_svd(density, max(rank, 1)).left_vectors
    site_rows = deim_indices(basis_phi)
    if site_rows.size < sites:
        extra = [i for i in np.argsort(-np.abs(basis_phi[:, 0])) if i not in set(site_rows)]
        site_rows = np.concatenate([site_rows, extra[: sites - site_rows.size]])
    site_rows = np.sort(site_rows[:sites])
    sampled_phi = basis_phi[site_rows, :]
    weights = np.linalg.lstsq(sampled_phi.T, basis_phi.sum(axis=0), rcond=None)[0]
    condition = float(np.linalg.cond(sampled_phi))
    log.info("energy quadrature: %d sites, cond(P^T U_phi)=%.3e", sites, condition)

    indices = np.concatenate([site_rows, site_rows + n])
    A = rom_basis.assembled
    W = A[indices, :]
    weight_vec = np.concatenate([weights, weights])
    projector = apply_structure_matrix(W.T * weight_vec)
    return DeimOperator(
        mode="hamiltonian",
        basis_matrix=basis_phi,
        indices=indices,
        paired=True,
        projector=projector,
        sample_map=W,
        condition=condition,
        site_weights=weights,
    )


def deim_apply(op, g_sampled):
    """Reduced nonlinear term from the values of g at ``op.indices``."""
    g_sampled = np.asarray(g_sampled, dtype=float)
    if g_sampled.shape[0] != op.m:
        raise ValueError(f"expected {op.m} sampled values, got {g_sampled.shape[0]}")
    return op.projector @ g_sampled


def reduced_jacobian(op, model, rom_basis, y, omega):
    """Jacobian of the reduced nonlinear term at reduced state y.

    Requires a paired sample set so sampling commutes with the
    componentwise nonlinearity; only the m x m sampled Jacobian of g is
    evaluated, keeping the cost independent of the full dimension.
    """
    if not op.paired:
        raise ValueError("reduced Jacobian needs a paired sample set")
    omega = model.parameter(omega)
    sampled_jac = _sampled_nonlinear_jacobian(op, model, y, omega)
    return op.projector @ sampled_jac @ op.sample_map


def _sampled_coordinates(op, y):
    w = op.sample_map @ y
    half = op.m // 2
    return w[:half], w[half:]


def _sampled_nonlinear_jacobian(op, model, y, omega):
    if model.site_nonlinear_jacobian is None:
        raise ValueError("model provides no site-level nonlinear Jacobian")
    qs, ps = _sampled_coordinates(op, y)
    gqq, gqp, gpp = model.site_nonlinear_jacobian(qs, ps, omega)
    half = op.m // 2
    J = np.zeros((op.m, op.m))
    idx = np.arange(half)
    J[idx, idx] = gqq
    J[idx, idx + half] = gqp
    J[idx + half, idx] = gqp
    J[idx + half, idx + half] = gpp
    return J


def transposed_symplectic_inverse(basis):
    """Paired basis formed by the columns of ``(A^+)^T``.

    For an orthosymplectic paired basis this reproduces the input exactly
    (the products reduce to signed index shuffles); the formula is kept for
    inputs that are merely symplectic.
    """
    B = symplectic_inverse(basis.assembled).T
    k = basis.k
    E, F = B[:, :k], B[:, k:]
    defect = np.linalg.norm(F - apply_structure_matrix(E, transpose=True))
    if defect > 1e-8:
        raise ValueError(f"transposed inverse lost the pairing structure ({defect:.2e})")
    return SymplecticBasis(E, F)


def sdeim_basis(basis, snapshots, delta=1e-4, max_pairs=None, degenerate_tol=1e-12):
    """Enrich a paired basis until it covers the nonlinear snapshots.

    Works on ``(A^+)^T``: while the worst symplectic projection defect of a
    nonlinear snapshot exceeds ``delta``, the worst snapshot is
    orthosymplectically appended (pair by pair). The enlarged set is mapped
    back through transpose and symplectic inverse. Degenerate candidates
    are skipped in favour of the next worst one.
    """
    nonlinear = snapshots.nonlinear if hasattr(snapshots, "nonlinear") else np.asarray(snapshots, float)
    work = transposed_symplectic_inverse(basis)
    if nonlinear is None:
        # Linear model: nothing to cover, the round trip is the identity.
        return transposed_symplectic_inverse(work)
    budget = np.inf if max_pairs is None else max_pairs
    added = 0
    while added < budget:
        defects = np.linalg.norm(nonlinear - work.project(nonlinear), axis=0)
        if defects.size == 0 or defects.max() <= delta:
            break
        order = np.argsort(defects)[::-1]
        for idx in order:
            if defects[idx] <= delta:
                raise StagnationError("all snapshots above tolerance are in the span")
            try:
                work = enrich_basis(work, nonlinear[:, idx], degenerate_tol=degenerate_tol)
                break
            except DegenerateVector:
                continue
        else:
            raise StagnationError("all nonlinear snapshots lie in the current span")
        added += 1
    return transposed_symplectic_inverse(work)
