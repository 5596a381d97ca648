"""Symmetric-matrix core: eigensolver, PSD classification, rotations, tangents."""

import numpy as np
import pytest

from ramanasdp import (
    NonOrthonormalError,
    NotPsdInputError,
    PsdTag,
    SymMat,
    classify_psd,
    eig,
    rotate,
    tan_contains,
)

from helpers import random_orthonormal, random_psd, random_sym


def char_poly_roots(a: np.ndarray) -> np.ndarray:
    """Independent eigenvalue oracle: Faddeev-LeVerrier characteristic
    polynomial coefficients, then companion-matrix roots."""
    n = a.shape[0]
    coeffs = [1.0]
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(a @ m) / k)
    roots = np.roots(coeffs)
    assert np.max(np.abs(roots.imag)) < 1e-8
    return np.sort(roots.real)[::-1]


class TestEig:
    def test_identity(self):
        dec = eig(SymMat.identity(3))
        assert np.allclose(dec.lam, [1, 1, 1])
        assert np.allclose(dec.q.T @ dec.q, np.eye(3), atol=1e-12)

    def test_diagonal(self):
        dec = eig(SymMat.diag([3, -1]))
        assert np.allclose(dec.lam, [3, -1])

    def test_against_char_poly_oracle(self):
        a2 = np.array(
            [[-5, 0, 2, 1], [0, 1, 0, 0], [2, 0, 0, 0], [1, 0, 0, 0]], dtype=float
        )
        expected = char_poly_roots(a2)
        dec = eig(SymMat(a2))
        assert np.allclose(dec.lam, expected, atol=1e-10)

    def test_reconstruction_and_orthogonality(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(1, 9))
            a = random_sym(rng, n, scale=rng.uniform(0.1, 10))
            dec = eig(a)
            recon = dec.q @ np.diag(dec.lam) @ dec.q.T
            assert np.max(np.abs(recon - a.a)) <= 1e-10 * (1 + a.norm())
            assert np.max(np.abs(dec.q.T @ dec.q - np.eye(n))) <= 1e-10
            assert np.all(np.diff(dec.lam) <= 1e-12)

    def test_deterministic_bitwise(self):
        rng = np.random.default_rng(11)
        a = random_sym(rng, 6)
        d1, d2 = eig(a), eig(a)
        assert np.array_equal(d1.lam, d2.lam)
        assert np.array_equal(d1.q, d2.q)

    def test_sign_convention(self):
        dec = eig(SymMat([[0, 1], [1, 0]]))
        for j in range(2):
            col = dec.q[:, j]
            nz = np.nonzero(np.abs(col) > 1e-12)[0]
            assert col[nz[0]] > 0


class TestClassify:
    def test_rank_deficient(self):
        cls = classify_psd(SymMat.diag([1, 1, 0]))
        assert cls.tag == PsdTag.PSD_RANK_DEFICIENT
        assert cls.rank == 2

    def test_indefinite_objective_matrix(self):
        # Closed form: eigenvalues of [[0,1,0],[1,0,0],[0,0,0]] are 1, -1, 0.
        c = SymMat([[0, 1, 0], [1, 0, 0], [0, 0, 0]])
        assert np.allclose(eig(c).lam, [1, 0, -1], atol=1e-12)
        cls = classify_psd(c)
        assert cls.tag == PsdTag.NOT_PSD
        assert cls.evidence == pytest.approx(-1.0)

    def test_identity_positive_definite(self):
        cls = classify_psd(SymMat.identity(4))
        assert cls.tag == PsdTag.POSITIVE_DEFINITE

    def test_rotation_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            n = int(rng.integers(1, 8))
            a = random_psd(rng, n, rank=int(rng.integers(0, n + 1)))
            q = random_orthonormal(rng, n)
            c1, c2 = classify_psd(a), classify_psd(rotate(a, q))
            assert (c1.tag, c1.rank) == (c2.tag, c2.rank)

    def test_eps_must_be_positive(self):
        with pytest.raises(ValueError):
            classify_psd(SymMat.identity(2), eps_psd=0.0)


class TestRotate:
    def test_identity_rotation(self):
        a = SymMat([[1, 2], [2, 3]])
        assert rotate(a, np.eye(2)).allclose(a, tol=0.0)

    def test_permutation(self):
        perm = np.array([[0.0, 1.0], [1.0, 0.0]])
        out = rotate(SymMat.diag([0, 1]), perm)
        assert np.allclose(out.a, np.diag([1.0, 0.0]))

    def test_inner_product_preserved(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            n = int(rng.integers(2, 9))
            s, t = random_sym(rng, n), random_sym(rng, n)
            q = random_orthonormal(rng, n)
            assert rotate(s, q).inner(rotate(t, q)) == pytest.approx(
                s.inner(t), abs=1e-10 * (1 + s.norm() * t.norm())
            )

    def test_rejects_non_orthonormal(self):
        with pytest.raises(NonOrthonormalError):
            rotate(SymMat.identity(2), np.array([[1.0, 0.0], [0.5, 1.0]]))


class TestTangent:
    def test_zero_always_member(self):
        rng = np.random.default_rng(13)
        for _ in range(5):
            u = random_psd(rng, 4, rank=int(rng.integers(0, 5)))
            assert tan_contains(u, SymMat.zero(4)).member

    def test_structured_member(self):
        u1 = SymMat.diag([1, 0, 0])
        v2 = SymMat([[-1, 0, 1], [0, 0, 0], [1, 0, 0]])
        res = tan_contains(u1, v2)
        assert res.member
        w = res.witness
        assert np.max(np.abs(w.w + w.w.T - v2.a)) <= 1e-10 * (1 + v2.norm())
        assert classify_psd(w.block_matrix(u1)).is_psd

    def test_tangent_of_zero_is_zero(self):
        u = SymMat.zero(3)
        v = SymMat.from_outer([1, 0, 0])
        res = tan_contains(u, v)
        assert not res.member
        i, j, mag = res.violation
        assert (i, j) == (0, 0) and mag == pytest.approx(1.0)

    def test_not_psd_input_rejected(self):
        with pytest.raises(NotPsdInputError):
            tan_contains(SymMat.diag([1, -1]), SymMat.zero(2))

    def test_planted_violations(self):
        # Plant one entry in the trailing block of U's eigenbasis: NotMember;
        # zero it out: Member.  Construction guarantees the ground truth.
        rng = np.random.default_rng(17)
        for _ in range(50):
            n = int(rng.integers(2, 8))
            r = int(rng.integers(1, n))
            q = random_orthonormal(rng, n)
            lam = np.sort(rng.uniform(0.5, 2.0, size=n))[::-1]
            lam[r:] = 0.0
            u = SymMat(q @ np.diag(lam) @ q.T)
            v_rot = np.zeros((n, n))
            v_rot[:r, :] = rng.standard_normal((r, n))
            v_rot = (v_rot + v_rot.T) / 2  # member pattern in the eigenbasis
            i = int(rng.integers(r, n))
            j = int(rng.integers(r, n))
            planted = v_rot.copy()
            planted[i, j] = planted[j, i] = rng.uniform(0.5, 2.0)
            v_bad = SymMat(q @ planted @ q.T)
            v_good = SymMat(q @ v_rot @ q.T)
            assert not tan_contains(u, v_bad).member
            good = tan_contains(u, v_good)
            assert good.member
            w = good.witness
            assert np.max(np.abs(w.w + w.w.T - v_good.a)) <= 1e-9 * (1 + v_good.norm())
            assert classify_psd(w.block_matrix(u)).is_psd

    def test_rotation_invariance(self):
        rng = np.random.default_rng(19)
        for _ in range(25):
            n = int(rng.integers(2, 8))
            u = random_psd(rng, n, rank=int(rng.integers(0, n + 1)))
            v = random_sym(rng, n)
            q = random_orthonormal(rng, n)
            assert tan_contains(u, v).member == tan_contains(
                rotate(u, q), rotate(v, q)
            ).member

    def test_pd_leading_block_accepts_bordered(self):
        # U with PD leading block accepts exactly the matrices supported on
        # the leading rows/columns (both directions of the shape result).
        rng = np.random.default_rng(23)
        for _ in range(20):
            n, k = 5, int(rng.integers(1, 5))
            u_lead = random_psd(rng, k) + 0.1 * SymMat.identity(k)
            u = u_lead.embed(n, 0)
            v = np.zeros((n, n))
            v[:k, :] = rng.standard_normal((k, n))
            v = SymMat(v + v.T)
            assert tan_contains(u, v).member
