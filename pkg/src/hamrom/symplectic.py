"""Dense linear algebra for canonical phase spaces.

States are ordered ``z = (q_1..q_n, p_1..p_n)``. The canonical structure
matrix

    J = [[ 0, I ],
         [-I, 0 ]]

is never materialized: every product with J or J^T is an index swap with a
sign flip, so all structure operations stay O(n) per vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateVector, RankDeficient

__all__ = [
    "apply_structure_matrix",
    "canonical_form",
    "symplectic_inverse",
    "symplecticity_residual",
    "SymplecticBasis",
    "symplectic_gram_schmidt",
    "enrich_basis",
    "SqrFactors",
    "sqr_decompose",
]

#: Relative norm below which a candidate counts as already in the span.
DEGENERATE_TOL = 1e-12

#: Orthogonality residual that triggers one extra Gram-Schmidt pass.
REORTH_TOL = 1e-10


def _check_even(length, what="vector"):
    if length % 2:
        raise ValueError(f"{what} dimension must be even, got {length}")
    return length // 2


def apply_structure_matrix(v, transpose=False):
    """Multiply J (or J^T) with a vector, or column-wise with a matrix.

    For ``z = (q, p)`` this returns ``J z = (p, -q)`` and ``J^T z = (-p, q)``.
    """
    v = np.asarray(v)
    n = _check_even(v.shape[0])
    out = np.empty_like(v)
    if transpose:
        out[:n] = -v[n:]
        out[n:] = v[:n]
    else:
        out[:n] = v[n:]
        out[n:] = -v[:n]
    return out


def canonical_form(u, v):
    """Evaluate the canonical two-form ``u^T J v``.

    Antisymmetric; equals the Euclidean inner product ``<x, v>`` when
    ``u = J x``.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
    n = _check_even(u.shape[0])
    return float(u[:n] @ v[n:] - u[n:] @ v[:n])


def symplectic_inverse(A):
    """Return ``A^+ = J_{2k}^T A^T J_{2n}`` for a 2n x 2k matrix.

    If A is symplectic, ``A^+ A = I`` and ``(A^+)^T`` is symplectic again.
    """
    A = np.asarray(A)
    _check_even(A.shape[0], "row")
    _check_even(A.shape[1], "column")
    # A^T J_{2n} = (J_{2n}^T A)^T, then one more J^T acting on the 2k rows.
    return apply_structure_matrix(apply_structure_matrix(A, transpose=True).T, transpose=True)


def symplecticity_residual(A):
    """Frobenius norm of ``A^T J_{2n} A - J_{2k}``."""
    A = np.asarray(A)
    _check_even(A.shape[0], "row")
    k = _check_even(A.shape[1], "column")
    G = A.T @ apply_structure_matrix(A)
    G[:k, k:] -= np.eye(k)
    G[k:, :k] += np.eye(k)
    return float(np.linalg.norm(G))


def _positive_leading_sign(v):
    """Flip the sign so the largest-magnitude entry is positive."""
    lead = v[np.argmax(np.abs(v))]
    return -v if lead < 0 else v


@dataclass(frozen=True)
class SymplecticBasis:
    """Orthosymplectic basis with paired columns ``A = [E, F]``, ``F = J^T E``.

    ``E`` and ``F`` are 2n x k blocks. The assembled matrix satisfies
    ``A^T J A = J_{2k}`` and ``A^T A = I`` up to round-off.
    """

    E: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        E = np.asarray(self.E, dtype=float)
        F = np.asarray(self.F, dtype=float)
        if E.shape != F.shape:
            raise ValueError("paired blocks must have identical shapes")
        _check_even(E.shape[0], "row")
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "F", F)

    @classmethod
    def empty(cls, n):
        return cls(np.zeros((2 * n, 0)), np.zeros((2 * n, 0)))

    @classmethod
    def from_pair_block(cls, A):
        """Split an assembled ``[E, F]`` matrix back into a paired basis."""
        A = np.asarray(A, dtype=float)
        k = _check_even(A.shape[1], "column")
        return cls(A[:, :k].copy(), A[:, k:].copy())

    @property
    def n(self):
        return self.E.shape[0] // 2

    @property
    def k(self):
        return self.E.shape[1]

    @cached_property
    def assembled(self):
        return np.hstack([self.E, self.F])

    @cached_property
    def inverse(self):
        """Symplectic inverse of the assembled matrix (2k x 2n)."""
        return symplectic_inverse(self.assembled)

    def reduce_state(self, z):
        """Map a full state (or column block) to reduced coordinates A^+ z."""
        return self.inverse @ z

    def lift(self, y):
        return self.assembled @ y

    def project(self, z):
        """Symplectic projection ``A A^+ z`` (idempotent)."""
        return self.lift(self.reduce_state(z))

    def truncated(self, pairs):
        """Leading sub-basis with the first ``pairs`` column pairs."""
        if pairs > self.k:
            raise ValueError(f"cannot keep {pairs} pairs, basis has {self.k}")
        return SymplecticBasis(self.E[:, :pairs].copy(), self.F[:, :pairs].copy())

    def symplecticity_residual(self):
        return symplecticity_residual(self.assembled)

    def orthonormality_residual(self):
        A = self.assembled
        return float(np.linalg.norm(A.T @ A - np.eye(2 * self.k)))


def symplectic_gram_schmidt(basis, z, degenerate_tol=DEGENERATE_TOL):
    """Orthogonalize ``z`` against a paired basis in the two-form sense.

    Returns the unit vector

        e = normalize( z - sum_i W(z, f_i) e_i + sum_i W(z, e_i) f_i )

    with W the canonical two-form. The result is orthogonal to every basis
    column both canonically and Euclideanly; one extra pass is run when the
    first pass leaves an orthogonality residual above ``REORTH_TOL``.

    Raises
    ------
    DegenerateVector
        If the defect has norm below ``degenerate_tol * ||z||``.
    """
    z = np.asarray(z, dtype=float)
    if z.shape[0] != 2 * basis.n:
        raise ValueError(f"state has length {z.shape[0]}, basis expects {2 * basis.n}")
    scale = np.linalg.norm(z)

    def sweep(w):
        jw = apply_structure_matrix(w, transpose=True)
        # W(w, f_i) = (J^T w) . f_i and W(w, e_i) = (J^T w) . e_i
        return w - basis.E @ (basis.F.T @ jw) + basis.F @ (basis.E.T @ jw)

    zt = sweep(z)
    norm = np.linalg.norm(zt)
    if norm <= degenerate_tol * scale:
        raise DegenerateVector(
            f"candidate lies in the basis span (defect {norm:.3e}, input norm {scale:.3e})"
        )
    zt /= norm
    residual = np.linalg.norm(np.concatenate([basis.E.T @ zt, basis.F.T @ zt]))
    if residual > REORTH_TOL:
        zt = sweep(zt)
        norm = np.linalg.norm(zt)
        if norm <= degenerate_tol:
            raise DegenerateVector("candidate vanished in re-orthogonalization")
        zt /= norm
    return _positive_leading_sign(zt)


def enrich_basis(basis, z, degenerate_tol=DEGENERATE_TOL):
    """Append the orthosymplectic pair generated by ``z`` to the basis."""
    e = symplectic_gram_schmidt(basis, z, degenerate_tol=degenerate_tol)
    f = apply_structure_matrix(e, transpose=True)
    return SymplecticBasis(
        np.column_stack([basis.E, e]),
        np.column_stack([basis.F, f]),
    )


@dataclass(frozen=True)
class SqrFactors:
    """Symplectic analogue of a QR factorization, ``M = A R``.

    ``A`` is symplectic (not necessarily orthogonal). ``R`` carries four
    upper-triangular k x k blocks ``[[S, T], [U, V]]``; the diagonals of T
    and U are exactly zero by construction.
    """

    A: np.ndarray
    R: np.ndarray

    @property
    def blocks(self):
        k = self.R.shape[0] // 2
        return (
            self.R[:k, :k],
            self.R[:k, k:],
            self.R[k:, :k],
            self.R[k:, k:],
        )


def sqr_decompose(M, rank_tol=1e-12):
    """Factor ``M = A R`` with A symplectic via two-form Gram-Schmidt.

        M = [u_1..u_k, v_1..v_k]

    Each column pair is swept against the previous pairs, then scaled by
    ``sign(a)/sqrt(|a|)`` with ``a = W(q, p)`` the two-form pivot. R is
    assembled from the recorded sweep coefficients, which makes its block
    triangular structure exact.

    Raises
    ------
    RankDeficient
        When a two-form pivot falls below ``rank_tol * ||q|| * ||p||``.
    """
    M = np.asarray(M, dtype=float)
    _check_even(M.shape[0], "row")
    k = _check_even(M.shape[1], "column")
    two_n = M.shape[0]

    E = np.zeros((two_n, k))
    F = np.zeros((two_n, k))
    S = np.zeros((k, k))
    T = np.zeros((k, k))
    U = np.zeros((k, k))
    V = np.zeros((k, k))

    for i in range(k):
        q = M[:, i].copy()
        p = M[:, k + i].copy()
        for j in range(i):
            cq_f, cq_e = canonical_form(q, F[:, j]), canonical_form(q, E[:, j])
            q = q - cq_f * E[:, j] + cq_e * F[:, j]
            S[j, i] = cq_f
            U[j, i] = -cq_e
            cp_f, cp_e = canonical_form(p, F[:, j]), canonical_form(p, E[:, j])
            p = p - cp_f * E[:, j] + cp_e * F[:, j]
            T[j, i] = cp_f
            V[j, i] = -cp_e
        alpha = canonical_form(q, p)
        if abs(alpha) <= rank_tol * max(np.linalg.norm(q) * np.linalg.norm(p), 1e-300):
            raise RankDeficient(f"two-form pivot {alpha:.3e} at column pair {i}")
        root = np.sqrt(abs(alpha))
        sign = 1.0 if alpha >= 0 else -1.0
        E[:, i] = sign * q / root
        F[:, i] = p / root
        # q = sign * root * e_i and p = root * f_i, so the pivots land on the
        # diagonals of S and V while T and U stay strictly upper triangular.
        S[i, i] = sign * root
        V[i, i] = root

    A = np.hstack([E, F])
    R = np.block([[S, T], [U, V]])
    return SqrFactors(A=A, R=R)
