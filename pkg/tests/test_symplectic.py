import numpy as np
import pytest

from hamrom.errors import DegenerateVector, RankDeficient
from hamrom.symplectic import (
    SymplecticBasis,
    apply_structure_matrix,
    canonical_form,
    enrich_basis,
    sqr_decompose,
    symplectic_gram_schmidt,
    symplectic_inverse,
    symplecticity_residual,
)


def canonical_pair_basis():
    # span{e1, J^T e1} in R^4
    return SymplecticBasis(
        np.array([[1.0, 0.0, 0.0, 0.0]]).T, np.array([[0.0, 0.0, 1.0, 0.0]]).T
    )


class TestStructureMatrix:
    def test_block_definition(self):
        v = np.array([1.0, 0.0, 0.0, 0.0])
        assert np.array_equal(apply_structure_matrix(v), [0.0, 0.0, -1.0, 0.0])
        assert np.array_equal(apply_structure_matrix(v, transpose=True), [0.0, 0.0, 1.0, 0.0])

    def test_two_by_two(self):
        assert np.array_equal(apply_structure_matrix(np.array([3.0, 5.0])), [5.0, -3.0])

    def test_transpose_inverts(self):
        rng = np.random.default_rng(0)
        v = rng.normal(size=10)
        out = apply_structure_matrix(apply_structure_matrix(v), transpose=True)
        assert np.array_equal(out, v)

    def test_odd_length_rejected(self):
        with pytest.raises(ValueError):
            apply_structure_matrix(np.zeros(3))


class TestCanonicalForm:
    def test_canonical_pair(self):
        assert canonical_form([1.0, 0.0], [0.0, 1.0]) == 1.0

    def test_direct_expansion(self):
        assert canonical_form([1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]) == 1.0

    def test_antisymmetry(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            u, v = rng.normal(size=(2, 8))
            assert canonical_form(u, v) == pytest.approx(-canonical_form(v, u), abs=1e-12)
            assert canonical_form(u, u) == pytest.approx(0.0, abs=1e-12)

    def test_recovers_inner_product(self):
        rng = np.random.default_rng(2)
        v, u = rng.normal(size=(2, 12))
        assert canonical_form(apply_structure_matrix(v), u) == pytest.approx(v @ u, rel=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            canonical_form(np.zeros(4), np.zeros(2))


class TestSymplecticInverse:
    def test_identity(self):
        assert np.allclose(symplectic_inverse(np.eye(4)), np.eye(4))

    def test_shear(self):
        A = np.array([[1.0, 1.0], [0.0, 1.0]])
        plus = symplectic_inverse(A)
        assert np.allclose(plus, [[1.0, -1.0], [0.0, 1.0]])
        assert np.allclose(plus @ A, np.eye(2))

    def test_structure_matrix_itself(self):
        J = apply_structure_matrix(np.eye(6))
        assert np.allclose(symplectic_inverse(J), -J)

    def test_left_inverse_of_random_symplectic(self):
        rng = np.random.default_rng(3)
        basis = SymplecticBasis.empty(5)
        for _ in range(3):
            basis = enrich_basis(basis, rng.normal(size=10))
        A = basis.assembled
        assert np.linalg.norm(symplectic_inverse(A) @ A - np.eye(6)) < 1e-10
        # transposed inverse is symplectic again
        assert symplecticity_residual(symplectic_inverse(A).T) < 1e-10


class TestSymplecticityResidual:
    def test_identity_and_structure(self):
        assert symplecticity_residual(np.eye(6)) == 0.0
        assert symplecticity_residual(apply_structure_matrix(np.eye(6))) == pytest.approx(0.0)

    def test_scaled_identity(self):
        assert symplecticity_residual(2.0 * np.eye(2)) == pytest.approx(3.0 * np.sqrt(2.0))


class TestProjection:
    def test_fixes_range_and_idempotent(self):
        rng = np.random.default_rng(4)
        basis = SymplecticBasis.empty(4)
        for _ in range(2):
            basis = enrich_basis(basis, rng.normal(size=8))
        z = basis.assembled @ rng.normal(size=4)
        assert np.allclose(basis.project(z), z, atol=1e-10)
        w = rng.normal(size=8)
        once = basis.project(w)
        assert np.allclose(basis.project(once), once, atol=1e-10)

    def test_canonical_pair_example(self):
        basis = canonical_pair_basis()
        assert np.allclose(basis.project(np.array([1.0, 1.0, 0.0, 0.0])), [1.0, 0.0, 0.0, 0.0])


class TestGramSchmidt:
    def test_hand_example(self):
        basis = canonical_pair_basis()
        out = symplectic_gram_schmidt(basis, np.array([1.0, 1.0, 0.0, 0.0]))
        assert np.allclose(out, [0.0, 1.0, 0.0, 0.0], atol=1e-14)

    def test_already_orthogonal_keeps_direction(self):
        basis = canonical_pair_basis()
        z = np.array([0.0, 3.0, 0.0, 0.0])
        out = symplectic_gram_schmidt(basis, z)
        assert np.allclose(out, z / 3.0)

    def test_degenerate_candidate(self):
        basis = canonical_pair_basis()
        with pytest.raises(DegenerateVector):
            symplectic_gram_schmidt(basis, np.array([2.0, 0.0, -1.0, 0.0]))

    def test_output_orthogonality(self):
        rng = np.random.default_rng(5)
        basis = SymplecticBasis.empty(6)
        for _ in range(4):
            basis = enrich_basis(basis, rng.normal(size=12))
        e = symplectic_gram_schmidt(basis, rng.normal(size=12))
        A = basis.assembled
        assert np.linalg.norm(A.T @ e) < 1e-10
        assert abs(np.linalg.norm(e) - 1.0) < 1e-12


class TestEnrichment:
    def test_first_vector_normalized_and_paired(self):
        basis = enrich_basis(SymplecticBasis.empty(2), np.array([2.0, 0.0, 0.0, 0.0]))
        assert np.allclose(basis.E[:, 0], [1.0, 0.0, 0.0, 0.0])
        assert np.allclose(basis.F[:, 0], [0.0, 0.0, 1.0, 0.0])
        assert basis.k == 1

    def test_grows_by_one_pair(self):
        rng = np.random.default_rng(6)
        basis = SymplecticBasis.empty(3)
        for expected in range(1, 4):
            basis = enrich_basis(basis, rng.normal(size=6))
            assert basis.k == expected

    def test_invariants_over_random_sequences(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n = int(rng.integers(2, 5))
            basis = SymplecticBasis.empty(n)
            for _ in range(n):
                basis = enrich_basis(basis, rng.normal(size=2 * n))
            assert basis.symplecticity_residual() < 1e-10
            assert basis.orthonormality_residual() < 1e-10

    def test_truncated_prefix_is_valid(self):
        rng = np.random.default_rng(8)
        basis = SymplecticBasis.empty(5)
        for _ in range(4):
            basis = enrich_basis(basis, rng.normal(size=10))
        head = basis.truncated(2)
        assert head.k == 2
        assert head.symplecticity_residual() < 1e-10


class TestSqr:
    def test_identity(self):
        factors = sqr_decompose(np.eye(6))
        assert np.allclose(factors.A, np.eye(6))
        assert np.allclose(factors.R, np.eye(6))

    def test_scaled_identity_hand_run(self):
        factors = sqr_decompose(2.0 * np.eye(2))
        assert np.allclose(factors.A, np.eye(2))
        assert np.allclose(factors.R, 2.0 * np.eye(2))

    def test_random_reconstruction(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            M = rng.normal(size=(4, 4))
            factors = sqr_decompose(M)
            rel = np.linalg.norm(M - factors.A @ factors.R) / np.linalg.norm(M)
            assert rel < 1e-8
            assert symplecticity_residual(factors.A) < 1e-8

    def test_block_structure_exact(self):
        rng = np.random.default_rng(10)
        M = rng.normal(size=(8, 8))
        S, T, U, V = sqr_decompose(M).blocks
        for block in (S, T, U, V):
            assert np.all(np.tril(block, -1) == 0.0)
        assert np.all(np.diag(T) == 0.0)
        assert np.all(np.diag(U) == 0.0)

    def test_r_matches_symplectic_inverse_product(self):
        rng = np.random.default_rng(11)
        M = rng.normal(size=(6, 6))
        factors = sqr_decompose(M)
        ref = symplectic_inverse(factors.A) @ M
        assert np.linalg.norm(factors.R - ref) / np.linalg.norm(ref) < 1e-8

    def test_rank_deficient_pivot(self):
        M = np.eye(4)
        M[2, 1] = 1.0
        M[3, 1] = 0.0
        M[:, 3] = M[:, 1]  # duplicate column forces a vanishing pivot
        with pytest.raises(RankDeficient):
            sqr_decompose(M)
