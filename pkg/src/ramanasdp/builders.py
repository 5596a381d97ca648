"""Explicit standard-form SDPs for the exact duals and alternative systems.

Every system here is emitted as one StandardFormSdp: a list of PSD block
variables plus one free-scalar vector, linear equality constraints, and a
linear objective.  The tangent-space constraint V ∈ tan(U) is what makes
the exact dual an explicit SDP: the existential witness pair (W, R) of

    V = W + Wᵀ,   [[U, W], [Wᵀ, R]] PSD

becomes a single PSD block variable T of order 2n whose upper-left corner
is tied entrywise to U; W and R are addressed as sub-blocks of T, and V
is the derived expression W + Wᵀ.  Constraint counts and block orders are
polynomial: the exact dual of an order-n instance with m equalities has
2n-1 PSD blocks (n of order n, n-1 of order 2n) and m·n free scalars.

Systems built:

  * build_dram     — the exact dual: max <b,y> with an n-1 rung ladder
                     y^i, U_i, V_i and head constraint
                     C - 𝒜*y ∈ S₊ + tan(U_{n-1}).
  * build_alt_ram  — the exact alternative system: same ladder, head
                     𝒜*y ∈ S₊ + tan(U_{n-1}) and <b, y> = -1; feasible
                     exactly when the primal is infeasible.
  * build_pram     — the exact primal of the dual: min <C,X> subject to
                     𝒜X = b, a ladder with 𝒜(U_i+V_i) = 0 and
                     <C, U_i+V_i> = 0, and X ∈ S₊ + tan(U_{n-1}).
  * build_dstrong  — the strong dual: given the max-rank primal solution
                     Q diag(0, Λ_r) Qᵀ, only the trailing r-block of the
                     rotated slack is required PSD.
  * build_pstrong  — the strong primal: given the max-rank dual slack
                     Q diag(Λ_r, 0) Qᵀ, only the leading r-block of the
                     rotated X is required PSD.
  * build_red      — the equality-form rewrite of the dual over the slack
                     variable Z, via the orthogonal complement basis.

The builders never solve anything; rotation data for the strong systems
is produced upstream by the RR-form construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import (
    DependentConstraintsError,
    DualComplement,
    SdpInstance,
    complement_basis,
    constraint_stack,
    svec_order,
)
from .symmat import EPS_PSD, SymMat, check_orthonormal, classify_psd, eig

SENSE_MIN = "min"
SENSE_MAX = "max"


@dataclass(frozen=True)
class PsdBlock:
    name: str
    order: int


@dataclass(frozen=True)
class VarSlot:
    """Location of a named mathematical variable inside the SDP storage.

    kinds: free_vec (offset/length into the free vector), free_sym
    (upper-triangle layout of a symmetric matrix in the free vector),
    block (a whole PSD block), sub_block (rectangular part of a block),
    tan_sum (derived value W + Wᵀ from a coupling block).
    """

    kind: str
    block: Optional[str] = None
    offset: int = 0
    length: int = 0
    order: int = 0
    row0: int = 0
    col0: int = 0
    rows: int = 0
    cols: int = 0


@dataclass(frozen=True)
class Constraint:
    """Linear equality Σ_B <mats[B], Y_B> + free·u = rhs."""

    name: str
    mats: dict[str, np.ndarray]
    free: np.ndarray
    rhs: float


@dataclass(frozen=True)
class StandardFormSdp:
    system: str
    sense: str
    blocks: tuple[PsdBlock, ...]
    n_free: int
    objective_mats: dict[str, np.ndarray]
    objective_free: np.ndarray
    constraints: tuple[Constraint, ...]
    var_map: dict[str, VarSlot]
    meta: dict = field(default_factory=dict)

    def block_order(self, name: str) -> int:
        for b in self.blocks:
            if b.name == name:
                return b.order
        raise KeyError(name)


@dataclass
class Assignment:
    """A full variable assignment: one symmetric array per PSD block plus
    the free vector."""

    blocks: dict[str, np.ndarray]
    free: np.ndarray


def constraint_value(c: Constraint, assign: Assignment) -> float:
    total = float(c.free @ assign.free) if c.free.size else 0.0
    for name, k in c.mats.items():
        total += float(np.sum(k * assign.blocks[name]))
    return total


def residuals(sdp: StandardFormSdp, assign: Assignment) -> np.ndarray:
    return np.array([constraint_value(c, assign) - c.rhs for c in sdp.constraints])


def max_violation(sdp: StandardFormSdp, assign: Assignment) -> float:
    res = residuals(sdp, assign)
    return float(np.max(np.abs(res))) if res.size else 0.0


def min_block_eigenvalue(sdp: StandardFormSdp, assign: Assignment) -> float:
    worst = 0.0
    for b in sdp.blocks:
        lam = float(np.linalg.eigvalsh(assign.blocks[b.name])[0])
        worst = min(worst, lam)
    return worst


def objective_value(sdp: StandardFormSdp, assign: Assignment) -> float:
    total = float(sdp.objective_free @ assign.free) if sdp.objective_free.size else 0.0
    for name, k in sdp.objective_mats.items():
        total += float(np.sum(k * assign.blocks[name]))
    return total


def extract(sdp: StandardFormSdp, assign: Assignment, name: str) -> np.ndarray:
    """Resolve a var_map name against an assignment."""
    slot = sdp.var_map[name]
    if slot.kind == "free_vec":
        return assign.free[slot.offset : slot.offset + slot.length].copy()
    if slot.kind == "free_sym":
        vals = assign.free[slot.offset : slot.offset + slot.length]
        out = np.zeros((slot.order, slot.order))
        for v, (i, j) in zip(vals, svec_order(slot.order)):
            out[i, j] = out[j, i] = v
        return out
    if slot.kind == "block":
        return assign.blocks[slot.block].copy()
    if slot.kind == "sub_block":
        blk = assign.blocks[slot.block]
        return blk[slot.row0 : slot.row0 + slot.rows, slot.col0 : slot.col0 + slot.cols].copy()
    if slot.kind == "tan_sum":
        blk = assign.blocks[slot.block]
        n = slot.order
        w = blk[:n, n:]
        return w + w.T
    raise ValueError(f"unknown slot kind {slot.kind!r}")


def _e_sym(n: int, p: int, q: int) -> np.ndarray:
    """Coefficient matrix with <E, Y> = Y[p, q]."""
    e = np.zeros((n, n))
    if p == q:
        e[p, p] = 1.0
    else:
        e[p, q] = e[q, p] = 0.5
    return e


def _tan_entry_coupler(n: int, p: int, q: int) -> np.ndarray:
    """Coefficient matrix with <K, T> = (W + Wᵀ)[p, q] for W = T[:n, n:]."""
    k = np.zeros((2 * n, 2 * n))
    k[p, n + q] += 0.5
    k[n + q, p] += 0.5
    k[q, n + p] += 0.5
    k[n + p, q] += 0.5
    return k


def _tan_inner_coupler(n: int, a: np.ndarray) -> np.ndarray:
    """Coefficient matrix with <K, T> = <A, W + Wᵀ> for W = T[:n, n:]."""
    k = np.zeros((2 * n, 2 * n))
    k[:n, n:] = a
    k[n:, :n] = a.T
    return k


def _free_sym_coeffs(a: np.ndarray) -> np.ndarray:
    """Coefficients c with c·x_utri = <A, X> for upper-triangle layout."""
    n = a.shape[0]
    return np.array([a[i, i] if i == j else 2.0 * a[i, j] for i, j in svec_order(n)])


def dram_size(n: int, m: int) -> tuple[int, int]:
    """(PSD block count, free scalar count) of the exact dual."""
    if n == 1:
        return 1, m
    return 2 * n - 1, m * n


def _ladder_blocks(n: int) -> list[PsdBlock]:
    blocks = [PsdBlock(f"U{i}", n) for i in range(1, n)]
    blocks += [PsdBlock(f"T{i}", 2 * n) for i in range(2, n)]
    blocks.append(PsdBlock("Thead", 2 * n))
    blocks.append(PsdBlock("P", n))
    return blocks


def _ladder_var_map(n: int) -> dict[str, VarSlot]:
    vm: dict[str, VarSlot] = {}
    for i in range(1, n):
        vm[f"U{i}"] = VarSlot(kind="block", block=f"U{i}", order=n)
    for i in range(2, n):
        vm[f"W{i}"] = VarSlot(
            kind="sub_block", block=f"T{i}", row0=0, col0=n, rows=n, cols=n, order=n
        )
        vm[f"R{i}"] = VarSlot(
            kind="sub_block", block=f"T{i}", row0=n, col0=n, rows=n, cols=n, order=n
        )
        vm[f"V{i}"] = VarSlot(kind="tan_sum", block=f"T{i}", order=n)
    vm["Whead"] = VarSlot(
        kind="sub_block", block="Thead", row0=0, col0=n, rows=n, cols=n, order=n
    )
    vm["Rhead"] = VarSlot(
        kind="sub_block", block="Thead", row0=n, col0=n, rows=n, cols=n, order=n
    )
    vm["Vhead"] = VarSlot(kind="tan_sum", block="Thead", order=n)
    vm["P"] = VarSlot(kind="block", block="P", order=n)
    return vm


def _ladder_constraints(inst: SdpInstance, free_offset_of_rung) -> list[Constraint]:
    """Ladder constraints shared by the dual and the alternative system:
    𝒜*y^i = U_i + V_i entrywise, <b, y^i> = 0, corner ties."""
    n, m = inst.n, inst.m
    n_free = m * n
    cons: list[Constraint] = []
    for i in range(1, n):
        off = free_offset_of_rung(i)
        for p, q in svec_order(n):
            free = np.zeros(n_free)
            for j in range(m):
                free[off + j] = inst.a[j].a[p, q]
            mats = {f"U{i}": -_e_sym(n, p, q)}
            if i >= 2:
                mats[f"T{i}"] = -_tan_entry_coupler(n, p, q)
            cons.append(
                Constraint(name=f"rung{i}_decomp[{p},{q}]", mats=mats, free=free, rhs=0.0)
            )
        free = np.zeros(n_free)
        free[off : off + m] = inst.b
        cons.append(Constraint(name=f"rung{i}_rhs", mats={}, free=free, rhs=0.0))
    for i in range(2, n):
        for p, q in svec_order(n):
            cons.append(
                Constraint(
                    name=f"tie{i}[{p},{q}]",
                    mats={f"T{i}": _e_sym(2 * n, p, q), f"U{i - 1}": -_e_sym(n, p, q)},
                    free=np.zeros(n_free),
                    rhs=0.0,
                )
            )
    for p, q in svec_order(n):
        cons.append(
            Constraint(
                name=f"tiehead[{p},{q}]",
                mats={"Thead": _e_sym(2 * n, p, q), f"U{n - 1}": -_e_sym(n, p, q)},
                free=np.zeros(n_free),
                rhs=0.0,
            )
        )
    return cons


def build_dram(inst: SdpInstance) -> StandardFormSdp:
    """The exact dual as an explicit SDP: max <b, y> over the ladder lift.

    Free variables are y followed by y^1..y^{n-1}; the head constraint
    C - 𝒜*y = P + (Whead + Wheadᵀ) encodes membership in S₊ + tan(U_{n-1}).
    The degenerate order-1 instance has no ladder and reduces to the
    classical dual.
    """
    n, m = inst.n, inst.m
    if n == 1:
        blocks = (PsdBlock("P", 1),)
        n_free = m
        cons = []
        free = np.array([inst.a[j].a[0, 0] for j in range(m)])
        cons.append(
            Constraint(
                name="head_decomp[0,0]",
                mats={"P": np.array([[1.0]])},
                free=free,
                rhs=float(inst.c.a[0, 0]),
            )
        )
        vm = {
            "y": VarSlot(kind="free_vec", offset=0, length=m),
            "P": VarSlot(kind="block", block="P", order=1),
        }
        return StandardFormSdp(
            system="dram",
            sense=SENSE_MAX,
            blocks=blocks,
            n_free=n_free,
            objective_mats={},
            objective_free=inst.b.copy(),
            constraints=tuple(cons),
            var_map=vm,
            meta={"n": n, "m": m},
        )
    n_free = m * n
    off = lambda i: m * i  # y at 0, y^i at m*i
    cons = _ladder_constraints(inst, off)
    for p, q in svec_order(n):
        free = np.zeros(n_free)
        for j in range(m):
            free[j] = inst.a[j].a[p, q]
        cons.append(
            Constraint(
                name=f"head_decomp[{p},{q}]",
                mats={"P": _e_sym(n, p, q), "Thead": _tan_entry_coupler(n, p, q)},
                free=free,
                rhs=float(inst.c.a[p, q]),
            )
        )
    obj_free = np.zeros(n_free)
    obj_free[:m] = inst.b
    vm = _ladder_var_map(n)
    vm["y"] = VarSlot(kind="free_vec", offset=0, length=m)
    for i in range(1, n):
        vm[f"y{i}"] = VarSlot(kind="free_vec", offset=m * i, length=m)
    return StandardFormSdp(
        system="dram",
        sense=SENSE_MAX,
        blocks=tuple(_ladder_blocks(n)),
        n_free=n_free,
        objective_mats={},
        objective_free=obj_free,
        constraints=tuple(cons),
        var_map=vm,
        meta={"n": n, "m": m},
    )


def build_alt_ram(inst: SdpInstance) -> StandardFormSdp:
    """The exact alternative system: feasible iff the instance is infeasible.

    Same ladder as the exact dual; the head becomes 𝒜*y = P + V with
    <b, y> = -1 and there is no objective.
    """
    n, m = inst.n, inst.m
    if n == 1:
        blocks = (PsdBlock("P", 1),)
        free = np.array([inst.a[j].a[0, 0] for j in range(m)])
        cons = [
            Constraint(
                name="head_decomp[0,0]",
                mats={"P": np.array([[-1.0]])},
                free=free,
                rhs=0.0,
            ),
            Constraint(name="head_rhs", mats={}, free=inst.b.copy(), rhs=-1.0),
        ]
        vm = {
            "y": VarSlot(kind="free_vec", offset=0, length=m),
            "P": VarSlot(kind="block", block="P", order=1),
        }
        return StandardFormSdp(
            system="altram",
            sense=SENSE_MAX,
            blocks=blocks,
            n_free=m,
            objective_mats={},
            objective_free=np.zeros(m),
            constraints=tuple(cons),
            var_map=vm,
            meta={"n": n, "m": m},
        )
    n_free = m * n
    off = lambda i: m * i
    cons = _ladder_constraints(inst, off)
    for p, q in svec_order(n):
        free = np.zeros(n_free)
        for j in range(m):
            free[j] = inst.a[j].a[p, q]
        cons.append(
            Constraint(
                name=f"head_decomp[{p},{q}]",
                mats={"P": -_e_sym(n, p, q), "Thead": -_tan_entry_coupler(n, p, q)},
                free=free,
                rhs=0.0,
            )
        )
    free = np.zeros(n_free)
    free[:m] = inst.b
    cons.append(Constraint(name="head_rhs", mats={}, free=free, rhs=-1.0))
    vm = _ladder_var_map(n)
    vm["y"] = VarSlot(kind="free_vec", offset=0, length=m)
    for i in range(1, n):
        vm[f"y{i}"] = VarSlot(kind="free_vec", offset=m * i, length=m)
    return StandardFormSdp(
        system="altram",
        sense=SENSE_MAX,
        blocks=tuple(_ladder_blocks(n)),
        n_free=n_free,
        objective_mats={},
        objective_free=np.zeros(n_free),
        constraints=tuple(cons),
        var_map=vm,
        meta={"n": n, "m": m},
    )


def build_pram(inst: SdpInstance) -> StandardFormSdp:
    """The exact primal of the dual: min <C, X> with an X-side ladder.

    X is a free symmetric matrix; its membership in S₊ + tan(U_{n-1}) is
    carried by X = P + Vhead.  Each rung imposes 𝒜(U_i + V_i) = 0 and
    <C, U_i + V_i> = 0.  Requires linearly independent A_i.
    """
    n, m = inst.n, inst.m
    stack = constraint_stack(inst)
    if m:
        s = np.linalg.svd(stack, compute_uv=False)
        if int(np.sum(s > max(s[0], 1.0) * 1e-8)) < m:
            raise DependentConstraintsError("A_i are linearly dependent")
    nn = n * (n + 1) // 2
    x_coeff = {  # coefficients of <A, X> on the utri layout
        t: _free_sym_coeffs(inst.a[t].a) for t in range(m)
    }
    if n == 1:
        blocks = (PsdBlock("P", 1),)
        cons = []
        for t in range(m):
            cons.append(
                Constraint(
                    name=f"primal_eq{t + 1}",
                    mats={},
                    free=x_coeff[t],
                    rhs=float(inst.b[t]),
                )
            )
        cons.append(
            Constraint(
                name="head_decomp[0,0]",
                mats={"P": np.array([[-1.0]])},
                free=np.ones(1),
                rhs=0.0,
            )
        )
        vm = {
            "X": VarSlot(kind="free_sym", offset=0, length=1, order=1),
            "P": VarSlot(kind="block", block="P", order=1),
        }
        return StandardFormSdp(
            system="pram",
            sense=SENSE_MIN,
            blocks=blocks,
            n_free=1,
            objective_mats={},
            objective_free=_free_sym_coeffs(inst.c.a),
            constraints=tuple(cons),
            var_map=vm,
            meta={"n": n, "m": m},
        )
    n_free = nn  # X only
    cons: list[Constraint] = []
    for t in range(m):
        cons.append(
            Constraint(
                name=f"primal_eq{t + 1}", mats={}, free=x_coeff[t], rhs=float(inst.b[t])
            )
        )
    for i in range(1, n):
        for t in range(m):
            mats = {f"U{i}": inst.a[t].a.copy()}
            if i >= 2:
                mats[f"T{i}"] = _tan_inner_coupler(n, inst.a[t].a)
            cons.append(
                Constraint(name=f"rung{i}_a{t + 1}", mats=mats, free=np.zeros(n_free), rhs=0.0)
            )
        mats = {f"U{i}": inst.c.a.copy()}
        if i >= 2:
            mats[f"T{i}"] = _tan_inner_coupler(n, inst.c.a)
        cons.append(
            Constraint(name=f"rung{i}_c", mats=mats, free=np.zeros(n_free), rhs=0.0)
        )
    for i in range(2, n):
        for p, q in svec_order(n):
            cons.append(
                Constraint(
                    name=f"tie{i}[{p},{q}]",
                    mats={f"T{i}": _e_sym(2 * n, p, q), f"U{i - 1}": -_e_sym(n, p, q)},
                    free=np.zeros(n_free),
                    rhs=0.0,
                )
            )
    for p, q in svec_order(n):
        cons.append(
            Constraint(
                name=f"tiehead[{p},{q}]",
                mats={"Thead": _e_sym(2 * n, p, q), f"U{n - 1}": -_e_sym(n, p, q)},
                free=np.zeros(n_free),
                rhs=0.0,
            )
        )
    # Head: X - P - (Whead + Wheadᵀ) = 0 entrywise.
    for idx, (p, q) in enumerate(svec_order(n)):
        free = np.zeros(n_free)
        free[idx] = 1.0
        cons.append(
            Constraint(
                name=f"head_decomp[{p},{q}]",
                mats={"P": -_e_sym(n, p, q), "Thead": -_tan_entry_coupler(n, p, q)},
                free=free,
                rhs=0.0,
            )
        )
    vm = _ladder_var_map(n)
    vm["X"] = VarSlot(kind="free_sym", offset=0, length=nn, order=n)
    return StandardFormSdp(
        system="pram",
        sense=SENSE_MIN,
        blocks=tuple(_ladder_blocks(n)),
        n_free=n_free,
        objective_mats={},
        objective_free=_free_sym_coeffs(inst.c.a),
        constraints=tuple(cons),
        var_map=vm,
        meta={"n": n, "m": m},
    )


@dataclass(frozen=True)
class StrongDualSpec:
    """Rotation and max-rank order pinning a strong system.

    Dual side: the max-rank primal solution is Q diag(0, Λ_r) Qᵀ and the
    trailing r-block of the rotated slack must be PSD.  Primal side: the
    max-rank dual slack is Q diag(Λ_r, 0) Qᵀ and the leading r-block of
    the rotated X must be PSD.
    """

    q: np.ndarray
    r: int

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        q.flags.writeable = False
        object.__setattr__(self, "q", q)

    def validate(self, n: int) -> None:
        check_orthonormal(self.q)
        if self.q.shape[0] != n:
            raise ValueError("rotation order mismatch")
        if not 0 <= self.r <= n:
            raise ValueError(f"r = {self.r} outside 0..{n}")


def strong_spec_from_rr(rr) -> StrongDualSpec:
    """Dual-side spec from a feasible RR form: Q from the reformulation,
    r the order of the trailing max-rank block."""
    n = rr.reformulated.n
    return StrongDualSpec(q=rr.ref.q.copy(), r=n - int(sum(rr.r)))


def pstrong_spec_from_slack(slack: SymMat, eps: float = EPS_PSD) -> StrongDualSpec:
    """Primal-side spec from a max-rank dual slack: descending eigenbasis
    puts the PD block in the leading corner."""
    cls = classify_psd(slack, eps)
    if not cls.is_psd:
        raise ValueError("max-rank slack must be PSD")
    dec = eig(slack)
    return StrongDualSpec(q=dec.q.copy(), r=cls.rank)


def build_dstrong(inst: SdpInstance, spec: StrongDualSpec) -> StandardFormSdp:
    """The strong dual: C - 𝒜*y = QVQᵀ with only V₂₂ (trailing r) PSD."""
    n, m = inst.n, inst.m
    spec.validate(n)
    r = spec.r
    q = spec.q
    f = n - r  # order of the free leading part
    # Free layout: y (m), V11 utri (f(f+1)/2), V12 row-major (f*r).
    n11 = f * (f + 1) // 2
    n_free = m + n11 + f * r
    blocks = (PsdBlock("V22", r),) if r else ()
    ord11 = svec_order(f)
    cons: list[Constraint] = []
    for p, qq in svec_order(n):
        free = np.zeros(n_free)
        for j in range(m):
            free[j] = inst.a[j].a[p, qq]
        # (Q V Qᵀ)[p,qq] = Σ_{a,b} Q[p,a] Q[qq,b] V[a,b]
        k22 = np.zeros((r, r)) if r else None
        for a in range(n):
            for b in range(n):
                coef = q[p, a] * q[qq, b]
                if coef == 0.0:
                    continue
                if a < f and b < f:
                    i, j = min(a, b), max(a, b)
                    idx = m + ord11.index((i, j))
                    free[idx] += coef
                elif a < f <= b:
                    free[m + n11 + a * r + (b - f)] += coef
                elif b < f <= a:
                    free[m + n11 + b * r + (a - f)] += coef
                else:
                    k22[a - f, b - f] += coef
        mats = {}
        if r and np.any(k22):
            mats["V22"] = (k22 + k22.T) / 2.0
        cons.append(
            Constraint(
                name=f"slack_eq[{p},{qq}]", mats=mats, free=free, rhs=float(inst.c.a[p, qq])
            )
        )
    obj = np.zeros(n_free)
    obj[:m] = inst.b
    vm = {
        "y": VarSlot(kind="free_vec", offset=0, length=m),
        "V11": VarSlot(kind="free_sym", offset=m, length=n11, order=f),
    }
    if r:
        vm["V22"] = VarSlot(kind="block", block="V22", order=r)
    return StandardFormSdp(
        system="dstrong",
        sense=SENSE_MAX,
        blocks=blocks,
        n_free=n_free,
        objective_mats={},
        objective_free=obj,
        constraints=tuple(cons),
        var_map=vm,
        meta={"n": n, "m": m, "q": q.copy(), "r": r},
    )


def build_pstrong(inst: SdpInstance, spec: StrongDualSpec) -> StandardFormSdp:
    """The strong primal: min <C,X>, 𝒜X = b, X = QVQᵀ, leading r-block of
    V PSD (the max-rank slack's PD block position)."""
    n, m = inst.n, inst.m
    spec.validate(n)
    r = spec.r
    q = spec.q
    f = n - r
    nn = n * (n + 1) // 2
    # Free layout: X utri (nn), V22 utri (f(f+1)/2), V12 row-major (r*f).
    n22 = f * (f + 1) // 2
    n_free = nn + n22 + r * f
    blocks = (PsdBlock("V11", r),) if r else ()
    ordx = svec_order(n)
    ord22 = svec_order(f)
    cons: list[Constraint] = []
    for t in range(m):
        free = np.zeros(n_free)
        free[:nn] = _free_sym_coeffs(inst.a[t].a)
        cons.append(Constraint(name=f"primal_eq{t + 1}", mats={}, free=free, rhs=float(inst.b[t])))
    for p, qq in svec_order(n):
        free = np.zeros(n_free)
        free[ordx.index((p, qq))] = 1.0
        k11 = np.zeros((r, r)) if r else None
        for a in range(n):
            for b in range(n):
                coef = -q[p, a] * q[qq, b]
                if coef == 0.0:
                    continue
                if a < r and b < r:
                    k11[a, b] += coef
                elif a < r <= b:
                    free[nn + n22 + a * f + (b - r)] += coef
                elif b < r <= a:
                    free[nn + n22 + b * f + (a - r)] += coef
                else:
                    i, j = min(a, b) - r, max(a, b) - r
                    free[nn + ord22.index((i, j))] += coef
        mats = {}
        if r and np.any(k11):
            mats["V11"] = (k11 + k11.T) / 2.0
        cons.append(
            Constraint(name=f"shape_eq[{p},{qq}]", mats=mats, free=free, rhs=0.0)
        )
    obj = np.zeros(n_free)
    obj[:nn] = _free_sym_coeffs(inst.c.a)
    vm = {
        "X": VarSlot(kind="free_sym", offset=0, length=nn, order=n),
        "V22": VarSlot(kind="free_sym", offset=nn, length=n22, order=f),
    }
    if r:
        vm["V11"] = VarSlot(kind="block", block="V11", order=r)
    return StandardFormSdp(
        system="pstrong",
        sense=SENSE_MIN,
        blocks=blocks,
        n_free=n_free,
        objective_mats={},
        objective_free=obj,
        constraints=tuple(cons),
        var_map=vm,
        meta={"n": n, "m": m, "q": q.copy(), "r": r},
    )


def build_red(inst: SdpInstance) -> tuple[StandardFormSdp, DualComplement]:
    """Equality-form rewrite of the dual over the slack Z.

    Z is feasible iff Z = C - 𝒜*y for a dual-feasible y, and
    <X0, Z> + <y, b> = <X0, C> is constant, so optima correspond too.
    """
    comp = complement_basis(inst)
    n = inst.n
    cons = [
        Constraint(
            name=f"red_eq{j + 1}",
            mats={"Z": comp.d[j].a.copy()},
            free=np.zeros(0),
            rhs=float(comp.d_vals[j]),
        )
        for j in range(comp.ell)
    ]
    sdp = StandardFormSdp(
        system="red",
        sense=SENSE_MIN,
        blocks=(PsdBlock("Z", n),),
        n_free=0,
        objective_mats={"Z": comp.x0.a.copy()},
        objective_free=np.zeros(0),
        constraints=tuple(cons),
        var_map={"Z": VarSlot(kind="block", block="Z", order=n)},
        meta={"n": n, "m": inst.m, "ell": comp.ell},
    )
    return sdp, comp


def red_to_instance(sdp: StandardFormSdp, comp: DualComplement) -> SdpInstance:
    """View the equality-form rewrite as a plain instance over Z."""
    return SdpInstance(a=comp.d, b=comp.d_vals.copy(), c=comp.x0)


def _utri_values(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    return np.array([a[i, j] for i, j in svec_order(n)])


def _coupling_block(u: SymMat, v: SymMat, eps: float) -> np.ndarray:
    """[[U, W],[Wᵀ, R]] from a synthesized tangent witness for V ∈ tan(U)."""
    from .symmat import tan_contains

    res = tan_contains(u, v, eps)
    if not res.member:
        raise ValueError("certificate rung fails tangent membership; cannot embed")
    return res.witness.block_matrix(u).a


def embed_certificate(sdp: StandardFormSdp, inst: SdpInstance, cert, eps: float = EPS_PSD) -> Assignment:
    """Map a verified ladder certificate onto the emitted SDP's variables.

    Tangent memberships become explicit coupling blocks via synthesized
    witnesses; the head matrix is split into its PSD part and a tangent
    part in the eigenbasis of the last U.
    """
    from .model import apply_at, dual_slack
    from .symmat import split_psd_plus_tan
    from .verify import SYSTEM_DRAM, SYSTEM_PRAM, pad_ladder

    cert = pad_ladder(cert, inst)
    n, m = inst.n, inst.m
    if sdp.system != cert.system:
        raise ValueError(f"certificate is for {cert.system}, SDP is {sdp.system}")
    if sdp.system == SYSTEM_PRAM:
        free = _utri_values(cert.x.a)
        head_z = cert.x
    else:
        parts = [np.asarray(cert.y, dtype=float)]
        parts += [np.asarray(r.y, dtype=float) for r in cert.ladder]
        free = np.concatenate(parts) if parts else np.zeros(0)
        head_z = (
            dual_slack(inst, cert.y)
            if sdp.system == SYSTEM_DRAM
            else apply_at(inst, cert.y)
        )
    blocks: dict[str, np.ndarray] = {}
    if n == 1:
        blocks["P"] = head_z.a.copy()
        return Assignment(blocks=blocks, free=free)
    prev_u = SymMat.zero(n)
    for i, rung in enumerate(cert.ladder, start=1):
        blocks[f"U{i}"] = rung.u.a.copy()
        if i >= 2:
            blocks[f"T{i}"] = _coupling_block(prev_u, rung.v, eps)
        prev_u = rung.u
    p_head, v_head = split_psd_plus_tan(prev_u, head_z, eps)
    blocks["P"] = p_head.a.copy()
    blocks["Thead"] = _coupling_block(prev_u, v_head, eps)
    return Assignment(blocks=blocks, free=free)


def embed_strong_point(sdp: StandardFormSdp, inst: SdpInstance, spec: StrongDualSpec, point) -> Assignment:
    """Map a strong-system point onto the emitted SDP's variables."""
    from .model import dual_slack

    n = inst.n
    r = spec.r
    f = n - r
    if sdp.system == "dstrong":
        y = np.asarray(point, dtype=float).reshape(-1)
        v = spec.q.T @ dual_slack(inst, y).a @ spec.q
        free = np.concatenate(
            [y, _utri_values(v[:f, :f]), v[:f, f:].reshape(-1)]
        )
        blocks = {"V22": v[f:, f:].copy()} if r else {}
        return Assignment(blocks=blocks, free=free)
    if sdp.system == "pstrong":
        x = point if isinstance(point, SymMat) else SymMat(point)
        v = spec.q.T @ x.a @ spec.q
        free = np.concatenate(
            [_utri_values(x.a), _utri_values(v[r:, r:]), v[:r, r:].reshape(-1)]
        )
        blocks = {"V11": v[:r, :r].copy()} if r else {}
        return Assignment(blocks=blocks, free=free)
    raise ValueError(f"not a strong system: {sdp.system}")
