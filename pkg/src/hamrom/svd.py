"""Self-contained truncated singular value decomposition.

The factorization is computed from the smaller Gram matrix of the input,
diagonalized with a cyclic Jacobi sweep (Hermitian rotations, so the same
kernel serves real and complex snapshot matrices). Accuracy, not speed, is
the contract; snapshot matrices here are tall-skinny or short-fat, so the
Gram side stays small.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SvdResult", "jacobi_eigh", "truncated_svd", "complex_truncated_svd"]

#: Off-diagonal Frobenius mass (relative) at which Jacobi sweeps stop.
JACOBI_TOL = 1e-14

_MAX_SWEEPS = 60


def jacobi_eigh(G, tol=JACOBI_TOL, max_sweeps=_MAX_SWEEPS):
    """Eigendecomposition of a symmetric/Hermitian matrix by cyclic Jacobi.

    Returns eigenvalues in non-increasing order and the matching orthonormal
    eigenvector columns.
    """
    A = np.array(G)
    m = A.shape[0]
    if A.shape != (m, m):
        raise ValueError(f"expected a square matrix, got {A.shape}")
    complex_input = np.iscomplexobj(A)
    Q = np.eye(m, dtype=complex if complex_input else float)
    scale = np.linalg.norm(A)
    if scale == 0.0 or m == 1:
        return np.real(np.diag(A)).copy(), Q

    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[p, q]
                mag = abs(apq)
                if mag <= 1e-300 or mag <= tol * scale / m:
                    continue
                phase = apq / mag if complex_input else (1.0 if apq > 0 else -1.0)
                app = A[p, p].real
                aqq = A[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                # Unitary plane rotation [[c, s*phase], [-s*conj(phase), c]]
                # zeroing A[p, q] after the similarity transform.
                col_p = c * A[:, p] - s * np.conj(phase) * A[:, q]
                col_q = s * phase * A[:, p] + c * A[:, q]
                A[:, p], A[:, q] = col_p, col_q
                row_p = c * A[p, :] - s * phase * A[q, :]
                row_q = s * np.conj(phase) * A[p, :] + c * A[q, :]
                A[p, :], A[q, :] = row_p, row_q
                A[p, q] = 0.0
                A[q, p] = 0.0
                qp = c * Q[:, p] - s * np.conj(phase) * Q[:, q]
                qq = s * phase * Q[:, p] + c * Q[:, q]
                Q[:, p], Q[:, q] = qp, qq

    values = np.real(np.diag(A)).copy()
    order = np.argsort(values)[::-1]
    return values[order], Q[:, order]


@dataclass(frozen=True)
class SvdResult:
    """Leading singular triplets, values sorted non-increasingly."""

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray


def _canonical_phase(U, V):
    """Rotate each column so its largest-magnitude entry is real positive."""
    for i in range(U.shape[1]):
        col = U[:, i]
        lead = col[np.argmax(np.abs(col))]
        mag = abs(lead)
        if mag == 0.0:
            continue
        phase = lead / mag
        U[:, i] = col / phase
        V[:, i] = V[:, i] / phase
    return U, V


def _complete_orthonormal(X, start, rng_dim):
    """Fill columns X[:, start:] with unit vectors orthogonal to the rest."""
    m = X.shape[0]
    col = start
    cand = 0
    while col < X.shape[1]:
        if cand >= m + rng_dim:
            raise np.linalg.LinAlgError("could not complete an orthonormal set")
        v = np.zeros(m, dtype=X.dtype)
        v[cand % m] = 1.0
        cand += 1
        v -= X[:, :col] @ (X[:, :col].conj().T @ v)
        norm = np.linalg.norm(v)
        if norm < 0.5:
            continue
        X[:, col] = v / norm
        col += 1
    return X


def _gram_svd(S, k):
    """Top-k singular triplets via the smaller Gram matrix."""
    m, n = S.shape
    if m <= n:
        values, U = jacobi_eigh(S @ S.conj().T)
        sigma = np.sqrt(np.clip(values[:k], 0.0, None))
        U = U[:, :k]
        V = np.zeros((n, k), dtype=S.dtype)
        cutoff = max(m, n) * np.finfo(float).eps * (sigma[0] if k else 0.0)
        rank = 0
        for i in range(k):
            if sigma[i] > cutoff and sigma[i] > 0.0:
                V[:, i] = (S.conj().T @ U[:, i]) / sigma[i]
                rank = i + 1
        _complete_orthonormal(V, rank, k)
        sigma[rank:] = 0.0
    else:
        values, V = jacobi_eigh(S.conj().T @ S)
        sigma = np.sqrt(np.clip(values[:k], 0.0, None))
        V = V[:, :k]
        U = np.zeros((m, k), dtype=S.dtype)
        cutoff = max(m, n) * np.finfo(float).eps * (sigma[0] if k else 0.0)
        rank = 0
        for i in range(k):
            if sigma[i] > cutoff and sigma[i] > 0.0:
                U[:, i] = (S @ V[:, i]) / sigma[i]
                rank = i + 1
        _complete_orthonormal(U, rank, k)
        sigma[rank:] = 0.0
    return sigma, U, V


def truncated_svd(S, k):
    """Best rank-k factors of a real matrix.

    Left/right vectors have orthonormal columns; the sign of each left
    vector is fixed so its largest-magnitude entry is positive, making the
    factors deterministic across runs.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2:
        raise ValueError("expected a matrix")
    if not np.all(np.isfinite(S)):
        raise ValueError("matrix contains non-finite entries")
    if k > min(S.shape):
        raise ValueError(f"k={k} exceeds min(shape)={min(S.shape)}")
    sigma, U, V = _gram_svd(S, k)
    U, V = _canonical_phase(U, V)
    return SvdResult(sigma, U, V)


def complex_truncated_svd(S_re, S_im, k):
    """Top-k left singular vectors of ``S_re + i S_im``, split into parts.

    Returns ``(R, S, sigma)`` where column m of R + iS is the m-th left
    singular vector. The stacked blocks satisfy ``R^T R + S^T S = I`` and
    ``R^T S = S^T R`` because the singular vectors are unitary; each column
    is phase-rotated so its largest-magnitude entry is real positive.
    """
    S_re = np.asarray(S_re, dtype=float)
    S_im = np.asarray(S_im, dtype=float)
    if S_re.shape != S_im.shape:
        raise ValueError(f"shape mismatch: {S_re.shape} vs {S_im.shape}")
    if k > min(S_re.shape):
        raise ValueError(f"k={k} exceeds min(shape)={min(S_re.shape)}")
    C = S_re + 1j * S_im
    if not np.all(np.isfinite(C)):
        raise ValueError("matrix contains non-finite entries")
    sigma, U, V = _gram_svd(C, k)
    U, V = _canonical_phase(U, V)
    return U.real.copy(), U.imag.copy(), sigma
