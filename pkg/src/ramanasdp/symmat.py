"""Dense symmetric matrices and the PSD-cone primitives built on them.

Everything downstream (instances, facial reduction, certificate checks)
reduces to four operations on real symmetric matrices:

  * a deterministic spectral decomposition (cyclic Jacobi sweeps),
  * classification against the PSD cone at a relative tolerance,
  * congruence by an orthonormal matrix, which preserves the trace inner
    product and eigenvalues,
  * membership in tan(U), the tangent space of the PSD cone at U.

tan(U) is the set of matrices W + Wᵀ such that the block matrix
[[U, W], [Wᵀ, R]] is PSD for some PSD R.  Operationally, for U PSD of
rank r with eigenbasis Q, a symmetric V lies in tan(U) exactly when
QᵀVQ has no entries outside its leading r rows and columns.  Membership
therefore reduces to one rotation and a zero-pattern test, and a witness
(W, R) can be synthesized explicitly when the test passes.

All decisions are tolerance-based; the tolerance is a parameter on every
public operation and scales with 1 + Frobenius norm of the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

# Relative tolerance defaults: eps_psd for rank/PSD decisions, recon_tol for
# reconstruction identities, orth_tol for orthonormality checks.
EPS_PSD = 1e-8
RECON_TOL = 1e-10
ORTH_TOL = 1e-10

_JACOBI_MAX_SWEEPS = 64


class NonOrthonormalError(ValueError):
    """Rotation matrix fails the orthonormality precondition."""


class NotPsdInputError(ValueError):
    """Operation requires a PSD input and classification said otherwise."""


def _as_square_array(entries) -> np.ndarray:
    a = np.array(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise ValueError("matrix order must be at least 1")
    return a


class SymMat:
    """Immutable dense symmetric matrix of order n.

    Symmetry is storage-enforced: the constructor averages the input with
    its transpose, which makes entries[i][j] and entries[j][i] bitwise
    equal, and the underlying array is frozen.
    """

    __slots__ = ("_a",)

    def __init__(self, entries):
        a = _as_square_array(entries)
        a = (a + a.T) / 2.0
        a.flags.writeable = False
        object.__setattr__(self, "_a", a)

    def __setattr__(self, name, value):
        raise AttributeError("SymMat is immutable")

    @property
    def a(self) -> np.ndarray:
        """Read-only ndarray view of the entries."""
        return self._a

    @property
    def n(self) -> int:
        return self._a.shape[0]

    @staticmethod
    def zero(n: int) -> "SymMat":
        return SymMat(np.zeros((n, n)))

    @staticmethod
    def identity(n: int) -> "SymMat":
        return SymMat(np.eye(n))

    @staticmethod
    def diag(values: Sequence[float]) -> "SymMat":
        return SymMat(np.diag(np.asarray(values, dtype=float)))

    @staticmethod
    def from_outer(v: Sequence[float]) -> "SymMat":
        v = np.asarray(v, dtype=float)
        return SymMat(np.outer(v, v))

    def inner(self, other: "SymMat") -> float:
        """Trace inner product <S, T> = trace(S T)."""
        return float(np.sum(self._a * other._a))

    def norm(self) -> float:
        return float(np.linalg.norm(self._a))

    def scale_factor(self) -> float:
        """Relative-tolerance scale 1 + Frobenius norm."""
        return 1.0 + self.norm()

    def submatrix(self, lo: int, hi: int) -> "SymMat":
        """Principal submatrix on indices lo..hi-1."""
        return SymMat(self._a[lo:hi, lo:hi])

    def embed(self, n: int, offset: int) -> "SymMat":
        """Place this matrix as a principal block of an order-n zero matrix."""
        out = np.zeros((n, n))
        k = self.n
        out[offset : offset + k, offset : offset + k] = self._a
        return SymMat(out)

    def allclose(self, other: "SymMat", tol: float = RECON_TOL) -> bool:
        scale = 1.0 + max(self.norm(), other.norm())
        return bool(np.max(np.abs(self._a - other._a)) <= tol * scale)

    def __add__(self, other: "SymMat") -> "SymMat":
        return SymMat(self._a + other._a)

    def __sub__(self, other: "SymMat") -> "SymMat":
        return SymMat(self._a - other._a)

    def __neg__(self) -> "SymMat":
        return SymMat(-self._a)

    def __mul__(self, t: float) -> "SymMat":
        return SymMat(self._a * float(t))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"SymMat(n={self.n})"


@dataclass(frozen=True)
class SpectralDecomp:
    """Eigendecomposition A = Q diag(lam) Qᵀ with lam sorted descending."""

    q: np.ndarray
    lam: np.ndarray

    @property
    def n(self) -> int:
        return self.lam.shape[0]

    def rank(self, eps: float, scale: float) -> int:
        return int(np.sum(self.lam > eps * scale))


def _jacobi_sweeps(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi iteration; returns (eigenvalues, eigenvector columns).

    Deterministic: fixed sweep order over the strict upper triangle,
    rotations applied until the off-diagonal mass is at machine level.
    """
    n = a.shape[0]
    m = a.copy()
    v = np.eye(n)
    if n == 1:
        return m.diagonal().copy(), v
    norm = np.linalg.norm(m)
    stop = 1e-15 * max(norm, 1e-300)
    offdiag_mask = ~np.eye(n, dtype=bool)
    for _ in range(_JACOBI_MAX_SWEEPS):
        # Summed directly over the off-diagonal entries: the subtraction
        # ‖M‖² - ‖diag‖² cancels catastrophically near convergence.
        off = math.sqrt(float(np.sum(m[offdiag_mask] ** 2)))
        if off <= stop:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if abs(apq) <= 1e-18 * max(norm, 1e-300):
                    m[p, q] = m[q, p] = 0.0
                    continue
                # Classic stable rotation: tan(2θ) from the 2x2 pivot block.
                theta = 0.5 * (m[q, q] - m[p, p]) / apq
                t = math.copysign(1.0, theta) / (
                    abs(theta) + math.sqrt(1.0 + theta * theta)
                )
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rp = m[:, p].copy()
                rq = m[:, q].copy()
                m[:, p] = c * rp - s * rq
                m[:, q] = s * rp + c * rq
                rp = m[p, :].copy()
                rq = m[q, :].copy()
                m[p, :] = c * rp - s * rq
                m[q, :] = s * rp + c * rq
                m[p, q] = m[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return m.diagonal().copy(), v


def eig(a: SymMat) -> SpectralDecomp:
    """Deterministic spectral decomposition by cyclic Jacobi sweeps.

    Eigenvalues are returned in descending order (stable among exact
    ties), and each eigenvector is sign-fixed so that its first
    coordinate of non-negligible magnitude is positive.  Two calls on
    bit-identical input return bit-identical output.
    """
    lam, v = _jacobi_sweeps(a.a)
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    q = v[:, order]
    for j in range(q.shape[1]):
        col = q[:, j]
        nz = np.nonzero(np.abs(col) > 1e-12)[0]
        if nz.size and col[nz[0]] < 0:
            q[:, j] = -col
    lam.flags.writeable = False
    q.flags.writeable = False
    return SpectralDecomp(q=q, lam=lam)


class PsdTag:
    POSITIVE_DEFINITE = "positive_definite"
    PSD_RANK_DEFICIENT = "psd_rank_deficient"
    NOT_PSD = "not_psd"


@dataclass(frozen=True)
class PsdClass:
    """Classification of a symmetric matrix against the PSD cone.

    ``evidence`` is the minimum eigenvalue; ``rank`` is the count of
    eigenvalues above the tolerance (meaningful unless NOT_PSD).
    """

    tag: str
    rank: int
    evidence: float

    @property
    def is_psd(self) -> bool:
        return self.tag != PsdTag.NOT_PSD

    @property
    def is_positive_definite(self) -> bool:
        return self.tag == PsdTag.POSITIVE_DEFINITE


def classify_psd(a: SymMat, eps_psd: float = EPS_PSD) -> PsdClass:
    """Classify by eigenvalues against the relative tolerance eps_psd·(1+‖A‖)."""
    if eps_psd <= 0:
        raise ValueError("eps_psd must be positive")
    dec = eig(a)
    scale = a.scale_factor()
    lam_min = float(dec.lam[-1])
    thresh = eps_psd * scale
    if lam_min > thresh:
        return PsdClass(PsdTag.POSITIVE_DEFINITE, a.n, lam_min)
    if lam_min < -thresh:
        return PsdClass(PsdTag.NOT_PSD, int(np.sum(dec.lam > thresh)), lam_min)
    return PsdClass(PsdTag.PSD_RANK_DEFICIENT, int(np.sum(dec.lam > thresh)), lam_min)


def check_orthonormal(q: np.ndarray, orth_tol: float = ORTH_TOL) -> None:
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise NonOrthonormalError(f"rotation must be square, got shape {q.shape}")
    dev = float(np.max(np.abs(q.T @ q - np.eye(q.shape[0]))))
    if dev > orth_tol:
        raise NonOrthonormalError(f"‖QᵀQ - I‖_max = {dev:.3e} exceeds {orth_tol:.1e}")


def rotate(a: SymMat, q: np.ndarray, orth_tol: float = ORTH_TOL) -> SymMat:
    """Congruence QᵀAQ by an orthonormal Q; preserves eigenvalues and ⟨·,·⟩."""
    check_orthonormal(q, orth_tol)
    if q.shape[0] != a.n:
        raise ValueError("rotation order does not match matrix order")
    return SymMat(q.T @ a.a @ q)


@dataclass(frozen=True)
class TangentWitness:
    """Explicit pair (W, R) realizing V = W + Wᵀ with [[U,W],[Wᵀ,R]] PSD."""

    w: np.ndarray
    r: SymMat

    def block_matrix(self, u: SymMat) -> SymMat:
        n = u.n
        big = np.zeros((2 * n, 2 * n))
        big[:n, :n] = u.a
        big[:n, n:] = self.w
        big[n:, :n] = self.w.T
        big[n:, n:] = self.r.a
        return SymMat(big)


@dataclass(frozen=True)
class TangentResult:
    """Outcome of a tan(U) membership test.

    On membership, ``witness`` holds the synthesized (W, R).  Otherwise
    ``violation`` is (i, j, magnitude): the worst offending entry of
    QᵀVQ outside the leading rank(U) rows and columns, indices in U's
    eigenbasis.
    """

    member: bool
    witness: Optional[TangentWitness] = None
    violation: Optional[tuple[int, int, float]] = None


def _tangent_witness_from_eigbasis(
    q: np.ndarray, lam_min_pos: float, v_rot: np.ndarray, r: int, v_norm: float
) -> TangentWitness:
    # Put all of V's cross-block mass in W's top rows so the rows of the
    # block matrix matching U's nullspace stay (numerically) zero; the
    # Schur complement R - Wᵀ U⁺ W ⪰ 0 then holds for R = tI with the
    # explicit bound below.
    n = q.shape[0]
    w_rot = np.zeros((n, n))
    w_rot[:r, :r] = v_rot[:r, :r] / 2.0
    w_rot[:r, r:] = v_rot[:r, r:]
    w_rot[r:, r:] = v_rot[r:, r:] / 2.0  # below-tolerance residue, kept exact
    w = q @ w_rot @ q.T
    t = 1.0 if r == 0 else v_norm**2 / lam_min_pos + 1.0
    return TangentWitness(w=w, r=SymMat(np.eye(n) * t))


def tan_contains(u: SymMat, v: SymMat, eps: float = EPS_PSD) -> TangentResult:
    """Test V ∈ tan(U) for PSD U and synthesize a witness on membership.

    Rotation to U's eigenbasis reduces the test to a zero-pattern check:
    with r = rank(U), every entry of QᵀVQ outside the leading r rows and
    columns must vanish below eps·(1+‖V‖).  U = 0 is handled without an
    eigendecomposition: tan(0) = {0}.
    """
    if u.n != v.n:
        raise ValueError("U and V must have the same order")
    cls = classify_psd(u, eps)
    if not cls.is_psd:
        raise NotPsdInputError(f"U is not PSD (λ_min = {cls.evidence:.3e})")
    n = u.n
    v_scale = 1.0 + v.norm()
    if cls.rank == 0:
        # Degenerate U ≈ 0: membership iff V ≈ 0.
        mags = np.abs(v.a)
        i, j = np.unravel_index(int(np.argmax(mags)), mags.shape)
        if mags[i, j] <= eps * v_scale:
            return TangentResult(
                member=True,
                witness=TangentWitness(w=np.zeros((n, n)), r=SymMat.identity(n)),
            )
        return TangentResult(member=False, violation=(int(i), int(j), float(mags[i, j])))
    dec = eig(u)
    r = dec.rank(eps, u.scale_factor())
    v_rot = dec.q.T @ v.a @ dec.q
    trailing = np.abs(v_rot[r:, r:])
    if trailing.size:
        i, j = np.unravel_index(int(np.argmax(trailing)), trailing.shape)
        if trailing[i, j] > eps * v_scale:
            return TangentResult(
                member=False, violation=(int(i + r), int(j + r), float(trailing[i, j]))
            )
    witness = _tangent_witness_from_eigbasis(
        dec.q, float(dec.lam[r - 1]), v_rot, r, v.norm()
    )
    return TangentResult(member=True, witness=witness)


def psd_plus_tan_contains(
    u: SymMat, z: SymMat, eps: float = EPS_PSD
) -> tuple[bool, float]:
    """Test Z ∈ S₊ + tan(U) for PSD U.

    In U's eigenbasis with rank r, membership holds exactly when the
    trailing (n-r)×(n-r) block of the rotated Z is PSD.  Returns the
    verdict and the minimum eigenvalue of that block (0.0 when empty).
    """
    cls = classify_psd(u, eps)
    if not cls.is_psd:
        raise NotPsdInputError(f"U is not PSD (λ_min = {cls.evidence:.3e})")
    r = cls.rank
    if r == 0:
        block = z
    else:
        dec = eig(u)
        block = SymMat(dec.q[:, r:].T @ z.a @ dec.q[:, r:]) if r < z.n else None
    if block is None:
        return True, 0.0
    bcls = classify_psd(block, eps)
    return bcls.is_psd, bcls.evidence


def split_psd_plus_tan(u: SymMat, z: SymMat, eps: float = EPS_PSD) -> tuple[SymMat, SymMat]:
    """Decompose Z = P + V with P PSD and V ∈ tan(U); requires membership.

    P carries the trailing block of Z in U's eigenbasis, V the rest.
    """
    ok, lam_min = psd_plus_tan_contains(u, z, eps)
    if not ok:
        raise ValueError(f"Z is not in S₊ + tan(U): trailing block λ_min = {lam_min:.3e}")
    cls = classify_psd(u, eps)
    r = cls.rank
    n = z.n
    if r == 0:
        return z, SymMat.zero(n)
    if r == n:
        return SymMat.zero(n), z
    dec = eig(u)
    z_rot = dec.q.T @ z.a @ dec.q
    p_rot = np.zeros((n, n))
    p_rot[r:, r:] = z_rot[r:, r:]
    p = SymMat(dec.q @ p_rot @ dec.q.T)
    return p, z - p
