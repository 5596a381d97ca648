"""Regular facial reduction sequences and the rank-revealing (RR) form.

A regular facial reduction sequence Y_1, ..., Y_k is a staircase of
symmetric matrices: writing p_i = r_1 + ... + r_{i-1}, the trailing
(n - p_i)-block of Y_i equals diag(Λ_i, 0) with Λ_i positive definite of
order r_i, while the leading p_i rows and columns are arbitrary.  Each
Y_i with <Y_i, X> = 0 forces the next r_i rows and columns of any PSD X
to vanish, so the sequence certifies the zero pattern (and hence the
maximum rank) of every feasible solution.

An instance is in RR form when its first k constraint matrices form such
a sequence with b_1 = ... = b_k = 0 and a feasible point exists that is
zero outside a trailing positive definite block of order n - p_{k+1}.
The infeasibility variant replaces the last right-hand side by -1: the
k-th equation then contradicts the zero pattern forced by the first
k - 1, which is an exact proof of infeasibility.

build_rr_form constructs the reformulation by the classical loop: find y
with 𝒜*y PSD and nonzero and <b, y> ≤ 0 (solve_alternative), swap that
combination into the next row, rotate by its eigenvectors, delete the
newly-zeroed rows and columns, and recurse; a strictly negative <b, y>
ends the loop on the infeasibility branch.  The embedded subsolver is a
small dense barrier method; its certificates are polished onto the
active face, thresholded, and revalidated before use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import subsolver
from .model import (
    Reformulation,
    SdpInstance,
    apply_a,
    apply_at,
    constraint_stack,
    reformulate,
    smat,
)
from .subsolver import IterationLimitError
from .symmat import EPS_PSD, SymMat, classify_psd, eig

MODE_EQ_ZERO = "eq_zero"
MODE_LEQ_ZERO = "leq_zero"

STATUS_FEASIBLE = "feasible"
STATUS_INFEASIBLE = "infeasible"

CERT_STRICT_ONLY = "strict_only"
CERT_INFEASIBILITY = "infeasibility"

# Entries of a cleaned certificate below eps_round·scale are zeroed before
# the final exact revalidation.
EPS_ROUND = 1e-6


class NumericalRankAmbiguityError(RuntimeError):
    """An eigenvalue fell inside the (eps, 100·eps)·scale band; the rank
    decision is refused rather than guessed."""


class SubsolverFailureError(RuntimeError):
    """The facial-reduction loop could not obtain a usable certificate."""


@dataclass(frozen=True)
class FrSequence:
    """A validated regular facial reduction sequence with block orders r."""

    mats: tuple[SymMat, ...]
    r: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.mats)

    def prefix_rank(self) -> int:
        return int(sum(self.r))


@dataclass(frozen=True)
class FrsValidation:
    valid: bool
    seq: Optional[FrSequence] = None
    q_norm: Optional[np.ndarray] = None
    reason: Optional[str] = None


@dataclass(frozen=True)
class AltCertificateRaw:
    """Certificate of the alternative system: 𝒜*y PSD (nonzero unless the
    linear degenerate case) with <b, y> = 0 (strict_only) or < 0
    (infeasibility)."""

    y: np.ndarray
    mode: str


@dataclass(frozen=True)
class AltResult:
    found: bool
    certificate: Optional[AltCertificateRaw] = None
    max_lambda_min: Optional[float] = None


@dataclass(frozen=True)
class RrForm:
    """Result of an RR-form construction.

    ``ref`` maps the input instance to ``reformulated``; the first ``k``
    equations there certify.  On the feasible branch ``maxrank_x`` is a
    feasible point of ``reformulated`` that is zero outside its trailing
    positive definite block.
    """

    ref: Reformulation
    k: int
    r: tuple[int, ...]
    status: str
    reformulated: SdpInstance
    maxrank_x: Optional[SymMat] = None


def validate_frs(mats: Sequence[SymMat], eps: float = EPS_PSD) -> FrsValidation:
    """Check the staircase shape of a candidate sequence, inferring each r_i.

    r_i is inferred greedily as one plus the last non-negligible row of
    the trailing block; the block itself must classify positive definite
    (diagonal is not required — the reported q_norm rotation makes all
    blocks diagonal simultaneously without disturbing the shape).
    """
    mats = tuple(mats)
    if not mats:
        return FrsValidation(valid=True, seq=FrSequence(mats=(), r=()), q_norm=None)
    n = mats[0].n
    for y in mats:
        if y.n != n:
            return FrsValidation(valid=False, reason="members have mixed orders")
    p = 0
    ranks: list[int] = []
    q_norm = np.eye(n)
    for idx, y in enumerate(mats):
        scale = y.scale_factor()
        block = y.a[p:, p:]
        if block.size == 0:
            ranks.append(0)
            continue
        row_mags = np.max(np.abs(block), axis=1) if block.size else np.zeros(0)
        nz = np.nonzero(row_mags > eps * scale)[0]
        r_i = 0 if nz.size == 0 else int(nz[-1]) + 1
        if r_i > 0:
            lead = SymMat(block[:r_i, :r_i])
            cls = classify_psd(lead, eps)
            if not cls.is_positive_definite:
                return FrsValidation(
                    valid=False,
                    reason=(
                        f"member {idx + 1}: diagonal block of order {r_i} at offset {p}"
                        f" is not positive definite (λ_min = {cls.evidence:.3e})"
                    ),
                )
            # Rows of the trailing block past r_i are zero by choice of r_i;
            # the cross block to the right of the PD block must vanish too.
            cross = np.abs(block[:r_i, r_i:])
            if cross.size and np.max(cross) > eps * scale:
                return FrsValidation(
                    valid=False,
                    reason=f"member {idx + 1}: nonzero beyond the order-{r_i} block",
                )
            dec = eig(lead)
            q_norm_step = np.eye(n)
            q_norm_step[p : p + r_i, p : p + r_i] = dec.q
            q_norm = q_norm @ q_norm_step
        ranks.append(r_i)
        p += r_i
        if p > n:
            return FrsValidation(valid=False, reason="block orders exceed n")
    return FrsValidation(
        valid=True, seq=FrSequence(mats=mats, r=tuple(ranks)), q_norm=q_norm
    )


def is_rr_form(
    inst: SdpInstance, k: int, x_witness: SymMat, eps: float = EPS_PSD
) -> bool:
    """Definition check: first k equations certify and the witness fits."""
    if not 0 <= k <= inst.m:
        raise ValueError(f"k = {k} outside 0..m = {inst.m}")
    if x_witness.n != inst.n:
        raise ValueError("witness order mismatch")
    val = validate_frs(inst.a[:k], eps)
    if not val.valid:
        return False
    b_scale = 1.0 + float(np.linalg.norm(inst.b))
    if k and np.max(np.abs(inst.b[:k])) > eps * b_scale:
        return False
    p = val.seq.prefix_rank()
    x = x_witness.a
    x_scale = x_witness.scale_factor()
    if p and np.max(np.abs(x[:p, :])) > eps * x_scale:
        return False
    if p < inst.n:
        if not classify_psd(SymMat(x[p:, p:]), eps).is_positive_definite:
            return False
    res = float(np.linalg.norm(apply_a(inst, x_witness) - inst.b))
    return res <= eps * (1.0 + float(np.linalg.norm(inst.b)) + x_witness.norm())


def _affine_solutions(
    rows: np.ndarray, rhs: np.ndarray, tol: float = 1e-10
) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Minimum-norm particular solution and nullspace basis of rows·y = rhs."""
    m = rows.shape[1]
    if rows.shape[0] == 0:
        return np.zeros(m), np.eye(m)
    y0, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    res = float(np.linalg.norm(rows @ y0 - rhs))
    if res > tol * (1.0 + float(np.linalg.norm(rhs))):
        return None
    u, s, vt = np.linalg.svd(rows)
    rank = int(np.sum(s > max(s[0], 1.0) * 1e-12)) if s.size else 0
    null = vt[rank:].T
    return y0, null


# Accepted certificates are canonicalized to a well-separated spectrum:
# positive eigenvalues spanning more than this ratio are refused (their
# eigenvectors are too ill-conditioned to base an elimination on).
CLEAN_SPECTRUM_RATIO = 1e-4


def _spectrum_is_clean(z: SymMat, eps: float) -> bool:
    """Eigenvalues clear of the rank-ambiguity band (eps, 100·eps]·scale,
    none below -eps·scale, and positive ones well separated from zero."""
    lam = eig(z).lam
    scale = z.scale_factor()
    if lam[-1] < -eps * scale:
        return False
    in_band = np.logical_and(lam > eps * scale, lam <= 100.0 * eps * scale)
    if bool(np.any(in_band)):
        return False
    positives = lam[lam > eps * scale]
    if positives.size >= 2 and positives[-1] < CLEAN_SPECTRUM_RATIO * positives[0]:
        return False
    return True


def _revalidate_candidate(
    inst: SdpInstance, y: np.ndarray, target: Optional[float], eps: float
) -> Optional[AltCertificateRaw]:
    """Exact revalidation of a cleaned candidate; returns the normalized
    certificate or None.  Candidates whose matrix has eigenvalues inside
    the rank-ambiguity band are rejected so downstream rank decisions
    never have to guess, and so are badly cancelling candidates (huge y
    against a small 𝒜*y), whose zero pattern is numerically meaningless."""
    z = apply_at(inst, y)
    cls = classify_psd(z, eps)
    if not cls.is_psd or not _spectrum_is_clean(z, eps):
        return None
    tr = float(np.trace(z.a))
    if tr <= eps * z.scale_factor():
        return None
    mass = float(sum(abs(yi) * ai.norm() for yi, ai in zip(y, inst.a)))
    if mass > 0.01 / eps * max(1.0, z.norm()):
        return None
    y = y / tr
    bval = float(inst.b @ y)
    b_scale = (1.0 + float(np.linalg.norm(inst.b))) * (1.0 + float(np.linalg.norm(y)))
    if target == 0.0:
        if abs(bval) > eps * b_scale:
            return None
        return AltCertificateRaw(y=y, mode=CERT_STRICT_ONLY)
    # Negative branch: strict negativity marks infeasibility.
    if bval > -eps * b_scale:
        return None
    return AltCertificateRaw(y=y, mode=CERT_INFEASIBILITY)


def _face_residual(
    inst: SdpInstance,
    y: np.ndarray,
    rows: np.ndarray,
    rhs: np.ndarray,
    face_tol: float,
    n_active: int,
) -> float:
    """Badness of a candidate: mass of the n_active smallest-magnitude
    eigenvalues plus affine error.  The count is fixed by the caller so a
    step cannot "improve" by pushing eigenvalues out of the active band;
    leaving the near-PSD region is infinitely bad."""
    lam = np.linalg.eigvalsh(apply_at(inst, y).a)
    if lam.size and lam[0] < -10.0 * face_tol:
        return float("inf")
    order = np.argsort(np.abs(lam))
    res = float(np.sum(lam[order[:n_active]] ** 2))
    if rows.shape[0]:
        res += float(np.sum((rows @ y - rhs) ** 2))
    return res


def _polish_on_face(
    inst: SdpInstance,
    y: np.ndarray,
    rows: np.ndarray,
    rhs: np.ndarray,
    face_tol: float,
    support: Optional[np.ndarray] = None,
    rounds: int = 8,
) -> np.ndarray:
    """Newton polish of y so the near-null eigenblock of 𝒜*y vanishes while
    the affine normalization rows·y = rhs is maintained exactly.

    Each round linearizes in the current eigenbasis: eigenvectors with
    |eigenvalue| ≤ face_tol span the active face, and the least-squares
    step solves v_aᵀ(𝒜*y)v_b = 0 on that face together with the affine
    rows, minimally perturbing y (restricted to ``support`` if given).
    Steps are damped when the full update does not reduce the face
    residual, and the best iterate seen is returned (the face equations
    can be linearly unreachable, in which case polishing must not make
    the candidate worse).
    """
    mats = [ai.a for ai in inst.a]
    y = np.asarray(y, dtype=float).copy()
    cols = np.arange(inst.m) if support is None else support
    n_active = int(np.sum(np.abs(np.linalg.eigvalsh(apply_at(inst, y).a)) <= face_tol))
    best = y.copy()
    best_res = _face_residual(inst, y, rows, rhs, face_tol, n_active)
    for _ in range(rounds):
        z = apply_at(inst, y).a
        lam, vecs = np.linalg.eigh(z)
        active = np.argsort(np.abs(lam))[:n_active]
        sys_rows = []
        sys_rhs = []
        for ai_idx in range(active.size):
            for bi_idx in range(ai_idx, active.size):
                va = vecs[:, active[ai_idx]]
                vb = vecs[:, active[bi_idx]]
                sys_rows.append([float(va @ mats[j] @ vb) for j in cols])
                sys_rhs.append(-float(va @ z @ vb))
        if rows.shape[0]:
            for ci in range(rows.shape[0]):
                sys_rows.append([rows[ci, j] for j in cols])
                sys_rhs.append(float(rhs[ci]) - float(rows[ci] @ y))
        if not sys_rows:
            return best
        a_sys = np.asarray(sys_rows)
        b_sys = np.asarray(sys_rhs)
        delta, *_ = np.linalg.lstsq(a_sys, b_sys, rcond=None)
        if not np.all(np.isfinite(delta)):
            return best
        stepped = False
        alpha = 1.0
        for _ in range(8):
            cand = y.copy()
            cand[cols] = cand[cols] + alpha * delta
            res = _face_residual(inst, cand, rows, rhs, face_tol, n_active)
            if res < best_res:
                y = cand
                best = cand.copy()
                best_res = res
                stepped = True
                break
            alpha *= 0.25
        if not stepped:
            break
        if best_res <= 1e-28:
            break
    return best


def _face_tolerance_ladder(z: SymMat, eps: float) -> list[float]:
    """Face tolerances to try, most aggressive first.

    Beyond the base level, one tolerance is added just above every group
    of small positive eigenvalues (below CLEAN_SPECTRUM_RATIO of the top):
    when the optimizer lands in the interior of a degenerate optimal face,
    flattening those groups polishes the candidate onto a clean lower-rank
    vertex instead of keeping ill-conditioned near-zero eigenvalues.
    """
    scale = z.scale_factor()
    lam = np.linalg.eigvalsh(z.a)
    lam_max = float(lam[-1]) if lam.size else 0.0
    tols = {1e-5 * scale}
    for x in lam:
        if eps * scale < x < CLEAN_SPECTRUM_RATIO * max(lam_max, 1.0):
            tols.add(min(2.0 * float(x), 0.5 * lam_max))
    return sorted(tols, reverse=True)


def _clean_and_validate(
    inst: SdpInstance,
    y: np.ndarray,
    rows: np.ndarray,
    rhs: np.ndarray,
    target: Optional[float],
    eps: float,
) -> Optional[AltCertificateRaw]:
    """Face polish, entry thresholding, support re-polish, revalidation."""
    z0 = apply_at(inst, y)
    candidates = []
    for face_tol in _face_tolerance_ladder(z0, eps):
        y_pol = _polish_on_face(inst, y, rows, rhs, face_tol)
        y_thr = y_pol.copy()
        # The rounding scale is the candidate's own magnitude: an absolute
        # floor would zero meaningful entries of small-norm certificates.
        y_thr[np.abs(y_thr) < EPS_ROUND * float(np.max(np.abs(y_pol)))] = 0.0
        support = np.nonzero(y_thr)[0]
        if support.size:
            candidates.append(
                _polish_on_face(inst, y_thr, rows, rhs, face_tol, support)
            )
        candidates.extend([y_thr, y_pol])
    candidates.append(y)
    for cand in candidates:
        cert = _revalidate_candidate(inst, cand, target, eps)
        if cert is not None:
            return cert
    return None


def solve_alternative(
    inst: SdpInstance,
    mode: str = MODE_EQ_ZERO,
    eps: float = EPS_PSD,
    max_iter: int = 2000,
) -> AltResult:
    """Search for y with 𝒜*y PSD and nonzero and <b, y> = 0 (eq_zero) or
    <b, y> ≤ 0 (leq_zero).

    The search maximizes λ_min(𝒜*y) over the trace-normalized affine
    slice; NotFound certifies (to tolerance) that no certificate exists,
    which for a feasible instance means strict feasibility.  Raises
    IterationLimitError when the optimum lands inside the undecidable
    band and cleanup fails.
    """
    if mode not in (MODE_EQ_ZERO, MODE_LEQ_ZERO):
        raise ValueError(f"unknown mode {mode!r}")
    m = inst.m
    if m == 0:
        return AltResult(found=False, max_lambda_min=None)
    stack = constraint_stack(inst)
    trace_row = np.array([float(np.trace(a.a)) for a in inst.a])

    ambiguous = False

    # Branch A: <b, y> = 0 with trace(𝒜*y) = 1.
    rows = np.vstack([inst.b, trace_row])
    rhs = np.array([0.0, 1.0])
    sol = _affine_solutions(rows, rhs)
    best_t = None
    if sol is not None:
        y0, null = sol
        s0 = apply_at(inst, y0).a
        fam = [apply_at(inst, null[:, j]).a for j in range(null.shape[1])]
        res = subsolver.maximize_lambda_min(
            s0, fam, reg=1e-12, max_iter=max_iter
        )
        y_opt = y0 + null @ res.w
        z_norm = float(np.linalg.norm(s0 + sum(w * f for w, f in zip(res.w, fam)))) if fam else float(np.linalg.norm(s0))
        band = 100.0 * eps * max(1.0, z_norm)
        best_t = res.value
        if res.value >= -band:
            cert = _clean_and_validate(inst, y_opt, rows, rhs, 0.0, eps)
            if cert is not None:
                return AltResult(found=True, certificate=cert, max_lambda_min=res.value)
            ambiguous = True
    if mode == MODE_EQ_ZERO:
        if ambiguous:
            raise IterationLimitError(
                "alternative-system optimum is inside the tolerance band and "
                "could not be cleaned into a valid certificate"
            )
        return AltResult(found=False, max_lambda_min=best_t)

    # Branch B (leq_zero): linear degenerate certificate 𝒜*y = 0, <b,y> = -1.
    # The combination is rescaled, so its matrix must be revalidated at the
    # final size: an approximately-null direction blown up by 1/<b, v> can
    # otherwise smuggle in a large matrix.
    gram = stack @ stack.T
    w_eig, w_vec = np.linalg.eigh(gram)
    null_mask = w_eig < max(1.0, float(w_eig[-1])) * 1e-12
    null_basis = w_vec[:, null_mask]
    if null_basis.shape[1]:
        coeff = null_basis.T @ inst.b
        nc = float(np.linalg.norm(coeff))
        b_scale = 1.0 + float(np.linalg.norm(inst.b))
        # sqrt(eps) guard: after earlier elimination rounds the data is only
        # consistent to about the square root of machine precision (subspace
        # alignment error), so a smaller b-component is indistinguishable
        # from reduction noise and must not be read as infeasibility.
        if nc > np.sqrt(eps) * b_scale:
            y_lin = -null_basis @ coeff / nc**2  # min-norm <b,y> = -1 in the null space
            z_lin = apply_at(inst, y_lin)
            if z_lin.norm() <= 100.0 * eps * b_scale:
                return AltResult(
                    found=True,
                    certificate=AltCertificateRaw(y=y_lin, mode=CERT_INFEASIBILITY),
                    max_lambda_min=best_t,
                )

    # Branch C: <b, y> = -1 with a ridge to bound the search.
    rows_c = inst.b.reshape(1, -1)
    rhs_c = np.array([-1.0])
    sol = _affine_solutions(rows_c, rhs_c)
    if sol is not None:
        y0, null = sol
        s0 = apply_at(inst, y0).a
        fam = [apply_at(inst, null[:, j]).a for j in range(null.shape[1])]
        res = subsolver.maximize_lambda_min(s0, fam, reg=1e-8, max_iter=max_iter)
        y_opt = y0 + null @ res.w
        z_opt = apply_at(inst, y_opt)
        band = 100.0 * eps * max(1.0, z_opt.norm())
        if res.value >= -band:
            cert = _clean_and_validate(inst, y_opt, rows_c, rhs_c, -1.0, eps)
            if cert is not None:
                return AltResult(found=True, certificate=cert, max_lambda_min=res.value)
            ambiguous = True
        best_t = res.value if best_t is None else max(best_t, res.value)
    if ambiguous:
        raise IterationLimitError(
            "alternative-system optimum is inside the tolerance band and "
            "could not be cleaned into a valid certificate"
        )
    return AltResult(found=False, max_lambda_min=best_t)


def _rank_split(lam: np.ndarray, eps: float, scale: float) -> int:
    """Positive count of an eigenvalue vector, refusing in-band decisions."""
    pos = int(np.sum(lam > 100.0 * eps * scale))
    nonzero = int(np.sum(lam > eps * scale))
    if nonzero != pos:
        bad = [x for x in lam if eps * scale < x <= 100.0 * eps * scale]
        raise NumericalRankAmbiguityError(
            f"eigenvalues {bad} lie inside ({eps * scale:.3e}, {100 * eps * scale:.3e}]"
        )
    if lam.size and lam[-1] < -eps * scale:
        raise SubsolverFailureError(
            f"certificate matrix has a negative eigenvalue {lam[-1]:.3e}"
        )
    return pos


def _reduced_instance(cur: SdpInstance, p: int, s: int) -> SdpInstance:
    """Sub-instance on the trailing (n-p)-block, rows s..m."""
    mats = tuple(SymMat(ai.a[p:, p:]) for ai in cur.a[s:])
    return SdpInstance(a=mats, b=cur.b[s:], c=SymMat(cur.c.a[p:, p:]))


def _replace_and_swap(m_total: np.ndarray, s: int, y_red: np.ndarray) -> np.ndarray:
    """Left-multiply the accumulated M: row s+j* := Σ y_j · row (s+j), then
    swap it into position s.  The pivot is the largest |y_j|."""
    m = m_total.shape[0]
    j_star = int(np.argmax(np.abs(y_red)))
    if abs(y_red[j_star]) == 0.0:
        raise SubsolverFailureError("certificate vector is identically zero")
    e = np.eye(m)
    e[s + j_star, s:] = y_red
    perm = np.eye(m)
    if j_star != 0:
        perm[[s, s + j_star]] = perm[[s + j_star, s]]
    return perm @ e @ m_total


def _interior_of_reduced(
    cur: SdpInstance, p: int, s: int, eps: float, max_iter: int
) -> SymMat:
    """Strictly feasible point of the reduced instance, embedded at order n."""
    n = cur.n
    if p == n:
        return SymMat.zero(n)
    red = _reduced_instance(cur, p, s)
    stack = constraint_stack(red)
    if red.m:
        x0_vec, *_ = np.linalg.lstsq(stack, red.b, rcond=None)
        u, sv, vt = np.linalg.svd(stack)
        rank = int(np.sum(sv > max(sv[0], 1.0) * 1e-12)) if sv.size else 0
        null = vt[rank:].T
    else:
        nn = red.n * (red.n + 1) // 2
        x0_vec = np.zeros(nn)
        null = np.eye(nn)
    s0 = smat(x0_vec, red.n).a
    fam = [smat(null[:, j], red.n).a for j in range(null.shape[1])]
    w = subsolver.interior_point(s0, fam, max_iter=max_iter)
    if w is None:
        raise SubsolverFailureError(
            "reduced instance reported strictly feasible but no interior point was found"
        )
    x_red = s0 + sum(wi * f for wi, f in zip(w, fam)) if len(fam) else s0
    return SymMat(x_red).embed(n, p)


def _block_rotation(n: int, p: int, q_small: np.ndarray) -> np.ndarray:
    q = np.eye(n)
    q[p:, p:] = q_small
    return q


def build_rr_form(
    inst: SdpInstance, eps: float = EPS_PSD, max_iter: int = 2000
) -> RrForm:
    """Reformulate the instance into RR form (or its infeasibility form).

    Each round solves the alternative system on the shrunken instance;
    a certificate with <b, y> = 0 becomes the next certifying equation
    (rotated so its matrix is diag(Λ, 0) on the active block), while a
    strictly negative <b, y> is scaled to rhs -1 and ends the loop with
    status infeasible.  NotFound ends the loop with status feasible and
    an interior max-rank witness of the reduced problem.
    """
    n, m = inst.n, inst.m
    m_total = np.eye(m)
    q_total = np.eye(n)
    cur = inst
    p = 0
    s = 0
    ranks: list[int] = []
    status = None
    while True:
        if s == m or p == n:
            # Equations are exhausted (tail below is empty) or no block is
            # left, in which case the remaining equations read 0 = b_i and
            # only a linear infeasibility certificate is possible.
            tail = cur.b[s:]
            if tail.size and float(np.max(np.abs(tail))) > eps * (
                1.0 + float(np.linalg.norm(inst.b))
            ):
                j = int(np.argmax(np.abs(tail)))
                y_red = np.zeros(m - s)
                y_red[j] = -1.0 / tail[j]
                m_total = _replace_and_swap(m_total, s, y_red)
                cur = reformulate(inst, Reformulation(m_total, q_total))
                ranks.append(0)
                s += 1
                status = STATUS_INFEASIBLE
                break
            status = STATUS_FEASIBLE
            break
        red = _reduced_instance(cur, p, s)
        try:
            alt = solve_alternative(red, MODE_LEQ_ZERO, eps, max_iter)
        except IterationLimitError as exc:
            raise SubsolverFailureError(str(exc)) from exc
        if not alt.found:
            status = STATUS_FEASIBLE
            break
        y_red = alt.certificate.y
        bval = float(red.b @ y_red)
        terminal = alt.certificate.mode == CERT_INFEASIBILITY
        if terminal:
            y_red = y_red * (-1.0 / bval)
        z_red = apply_at(red, y_red)
        if terminal and z_red.norm() <= 100.0 * eps * (
            1.0 + float(np.linalg.norm(red.b))
        ):
            # Linear terminal certificate: its matrix is zero by validation,
            # so there is no spectral rank decision to make.
            dec = None
            r_i = 0
        else:
            dec = eig(z_red)
            r_i = _rank_split(dec.lam, eps, z_red.scale_factor())
        if r_i == 0 and not terminal:
            raise SubsolverFailureError("certificate matrix vanished on the active block")
        m_total = _replace_and_swap(m_total, s, y_red)
        if r_i > 0:
            q_total = q_total @ _block_rotation(n, p, dec.q)
        cur = reformulate(inst, Reformulation(m_total, q_total))
        ranks.append(r_i)
        s += 1
        p += r_i
        if terminal:
            status = STATUS_INFEASIBLE
            break
    k = s
    # Enforce the k ≤ n-1 bound where the construction allows it.
    if status == STATUS_FEASIBLE and k >= 2 and sum(ranks) == n:
        coeffs = _pd_combination([cur.a[i] for i in range(k)], ranks, eps)
        e = np.eye(m)
        e[0, :k] = coeffs
        m_total = e @ m_total
        cur = reformulate(inst, Reformulation(m_total, q_total))
        ranks = [n]
        k = 1
    elif status == STATUS_INFEASIBLE and k >= 3 and sum(ranks[: k - 1]) == n:
        coeffs = _pd_combination([cur.a[i] for i in range(k - 1)], ranks[: k - 1], eps)
        e = np.eye(m)
        e[0, : k - 1] = coeffs
        # The merged PD equation takes row 0; the terminal stays row k-1 and
        # moves up to row 1.
        perm = np.eye(m)
        order = [0, k - 1] + [i for i in range(1, m) if i != k - 1]
        perm = perm[order]
        m_total = perm @ e @ m_total
        cur = reformulate(inst, Reformulation(m_total, q_total))
        ranks = [n, 0]
        k = 2
    ref = Reformulation(m_total, q_total)
    maxrank = None
    if status == STATUS_FEASIBLE:
        maxrank = _interior_of_reduced(cur, sum(ranks), k, eps, max_iter)
    return RrForm(
        ref=ref,
        k=k,
        r=tuple(ranks),
        status=status,
        reformulated=cur,
        maxrank_x=maxrank,
    )


def _pd_combination(
    mats: Sequence[SymMat], ranks: Sequence[int], eps: float
) -> np.ndarray:
    """Positive weights making Σ w_i Y_i positive definite.

    Requires a regular facial reduction sequence whose block orders sum
    to the full order.  Recursion from the back: combine the trailing
    sub-sequence first, then one Schur-complement bound gives the weight
    of the leading member (smallest power of two exceeding the bound,
    escalated under classify_psd verification).
    """
    k = len(mats)
    n = mats[0].n
    if k == 1:
        lam = np.linalg.eigvalsh(mats[0].a)
        if lam[0] <= 0:
            raise SubsolverFailureError("merge: single member not positive definite")
        # Scale so the result is PD with unit-ish norm.
        return np.array([1.0])
    p = int(ranks[0])
    inner = [SymMat(y.a[p:, p:]) for y in mats[1:]]
    v = _pd_combination(inner, ranks[1:], eps)
    g = np.zeros((n, n))
    for vi, y in zip(v, mats[1:]):
        g += vi * y.a
    b11 = g[:p, :p]
    e12 = g[:p, p:]
    h22 = g[p:, p:]
    lam_h = np.linalg.eigvalsh(h22)[0]
    lam_1 = np.linalg.eigvalsh(mats[0].a[:p, :p])[0]
    if lam_h <= 0 or lam_1 <= 0:
        raise SubsolverFailureError("merge: inner combination lost definiteness")
    bound = (
        float(np.linalg.norm(b11, 2))
        + float(np.linalg.norm(e12, 2)) ** 2 / lam_h
    ) / lam_1
    lam = 2.0 ** int(np.ceil(np.log2(max(bound, 1.0)) + 1e-12))
    if lam <= bound:
        lam *= 2.0
    for _ in range(64):
        total = lam * mats[0].a + g
        if classify_psd(SymMat(total), eps).is_positive_definite:
            return np.concatenate([[lam], v])
    raise SubsolverFailureError("merge: Schur bound escalation failed")


def merge_to_bound(seq: FrSequence, eps: float = EPS_PSD) -> tuple[FrSequence, np.ndarray]:
    """Drop zero-rank members; collapse a full-rank sequence to one PD member.

    Returns the new sequence together with the coefficient matrix mapping
    new members to old ones (k_new × k_old), so a caller can mirror the
    change as row operations on an instance.
    """
    k = seq.k
    n = seq.mats[0].n if k else 0
    if k and seq.prefix_rank() == n:
        coeffs = _pd_combination(list(seq.mats), list(seq.r), eps)
        merged = np.zeros((n, n))
        for c, y in zip(coeffs, seq.mats):
            merged += c * y.a
        return FrSequence(mats=(SymMat(merged),), r=(n,)), coeffs.reshape(1, -1)
    keep = [i for i in range(k) if seq.r[i] > 0]
    rows = np.zeros((len(keep), k))
    for new_i, old_i in enumerate(keep):
        rows[new_i, old_i] = 1.0
    new_seq = FrSequence(
        mats=tuple(seq.mats[i] for i in keep), r=tuple(seq.r[i] for i in keep)
    )
    return new_seq, rows


def max_rank_zero_pattern(
    x_max: SymMat, x_test: SymMat, eps: float = EPS_PSD
) -> bool:
    """True when x_test vanishes on the rows/columns where x_max does.

    x_max must have the max-rank shape diag(0, Λ): its leading zero rows
    determine the pattern every feasible PSD point must share.
    """
    if x_max.n != x_test.n:
        raise ValueError("order mismatch")
    scale = x_max.scale_factor()
    row_mags = np.max(np.abs(x_max.a), axis=1)
    nz = np.nonzero(row_mags > eps * scale)[0]
    lead_zero = int(nz[0]) if nz.size else x_max.n
    if lead_zero == 0:
        return True
    t_scale = x_test.scale_factor()
    return bool(np.max(np.abs(x_test.a[:lead_zero, :])) <= eps * t_scale)


def sample_feasible(
    inst: SdpInstance,
    rr: RrForm,
    count: int,
    seed: int = 0,
    eps: float = EPS_PSD,
    max_iter: int = 2000,
) -> list[SymMat]:
    """Feasible points of the original instance, sampled on the reduced face.

    Uses the RR reformulation: strictly feasible points of the reduced
    block, perturbed along the constraint nullspace while staying PD,
    re-embedded at order n and rotated back.
    """
    if rr.status != STATUS_FEASIBLE:
        raise ValueError("cannot sample from an infeasible instance")
    n = inst.n
    p = sum(rr.r)
    cur = rr.reformulated
    center = rr.maxrank_x if rr.maxrank_x is not None else _interior_of_reduced(
        cur, p, rr.k, eps, max_iter
    )
    q = rr.ref.q
    out = [SymMat(q @ center.a @ q.T)]
    if p == n or count <= 1:
        return out[:count]
    red = _reduced_instance(cur, p, rr.k)
    stack = constraint_stack(red)
    if red.m:
        u, sv, vt = np.linalg.svd(stack)
        rank = int(np.sum(sv > max(sv[0], 1.0) * 1e-12)) if sv.size else 0
        null = vt[rank:].T
    else:
        null = np.eye(red.n * (red.n + 1) // 2)
    x_red = center.a[p:, p:]
    lam_min = float(np.linalg.eigvalsh(x_red)[0])
    rng = np.random.default_rng(seed)
    while len(out) < count:
        if null.shape[1] == 0:
            out.append(out[0])
            continue
        d = null @ rng.standard_normal(null.shape[1])
        direction = smat(d, red.n).a
        dn = float(np.linalg.norm(direction, 2))
        if dn <= 0:
            out.append(out[0])
            continue
        step = 0.5 * lam_min / dn
        x_new = x_red + step * direction
        x_cur = SymMat(x_new).embed(n, p)
        out.append(SymMat(q @ x_cur.a @ q.T))
    return out


def primal_optimal_value(
    inst: SdpInstance, rr: Optional[RrForm] = None, eps: float = EPS_PSD,
    max_iter: int = 4000,
) -> float:
    """Optimal value of the instance via its RR form.

    The feasible set is the RR face diag(0, X') with X' ranging over the
    strictly feasible reduced problem; a short barrier path minimizes
    <C', X'> there.  Returns +inf on the infeasible branch.  (Desk-scale
    helper: an unbounded-below instance will surface as a very negative
    value rather than -inf.)
    """
    if rr is None:
        rr = build_rr_form(inst, eps=eps, max_iter=max_iter)
    if rr.status == STATUS_INFEASIBLE:
        return float("inf")
    cur = rr.reformulated
    n = cur.n
    p = sum(rr.r)
    if p == n:
        return 0.0
    red = _reduced_instance(cur, p, rr.k)
    stack = constraint_stack(red)
    if red.m:
        u, sv, vt = np.linalg.svd(stack)
        rank = int(np.sum(sv > max(sv[0], 1.0) * 1e-12)) if sv.size else 0
        null = vt[rank:].T
    else:
        null = np.eye(red.n * (red.n + 1) // 2)
    witness = rr.maxrank_x
    if witness is None:
        witness = _interior_of_reduced(cur, p, rr.k, eps, max_iter)
    x_start = witness.a[p:, p:]
    fam = [smat(null[:, j], red.n).a for j in range(null.shape[1])]
    _, value = subsolver.minimize_linear_over_face(
        red.c.a, x_start, fam, np.zeros(null.shape[1]), mu_final=1e-9, max_iter=max_iter
    )
    return value
