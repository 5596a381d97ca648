"""Shared instance builders and random generators for the test suite."""

from __future__ import annotations

import numpy as np

from ramanasdp import SdpInstance, SymMat, apply_a


def inst_unattained() -> SdpInstance:
    """Order-3 instance: primal value 0 attained, dual value 0 unattained."""
    a1 = [[1, 0, 0], [0, 0, 0], [0, 0, 0]]
    a2 = [[0, 0, 1], [0, 1, 0], [1, 0, 0]]
    a3 = [[0, 0, 0], [0, 0, 0], [0, 0, 1]]
    c = [[0, 1, 0], [1, 0, 0], [0, 0, 0]]
    return SdpInstance.from_arrays([a1, a2, a3], [0, 0, 1], c)


def inst_gap_raw() -> SdpInstance:
    """Order-4 duality-gap instance before the revealing row operations."""
    a1 = [[-4, 15, 6, 3], [15, 3, 0, 5], [6, 0, 5, 0], [3, 5, 0, 0]]
    a2 = [[-1, 6, 2, 1], [6, 1, 0, 2], [2, 0, 2, 0], [1, 2, 0, 0]]
    a3 = [[2, 3, 0, 0], [3, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]]
    return SdpInstance.from_arrays([a1, a2, a3], [5, 2, 1], np.diag([1.0, 1, 1, 0]))


def inst_gap_rr() -> SdpInstance:
    """The same instance in rank-revealing form."""
    a1 = np.diag([1.0, 0, 0, 0])
    a2 = [[-5, 0, 2, 1], [0, 1, 0, 0], [2, 0, 0, 0], [1, 0, 0, 0]]
    a3 = [[2, 3, 0, 0], [3, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]]
    return SdpInstance.from_arrays([a1, a2, a3], [0, 0, 1], np.diag([1.0, 1, 1, 0]))


def inst_infeasible() -> SdpInstance:
    """Infeasible order-3 system whose classical alternative system fails."""
    a1 = [[1, 0, 0], [0, 0, 0], [0, 0, 0]]
    a2 = [[0, 0, 1], [0, 1, 0], [1, 0, 0]]
    return SdpInstance.from_arrays([a1, a2], [0, -1], np.zeros((3, 3)))


def inst_strict(n: int = 3, target: float = 3.0) -> SdpInstance:
    return SdpInstance.from_arrays([np.eye(n)], [target], np.eye(n))


def random_sym(rng: np.random.Generator, n: int, scale: float = 1.0) -> SymMat:
    a = rng.standard_normal((n, n)) * scale
    return SymMat(a + a.T)


def random_psd(rng: np.random.Generator, n: int, rank: int | None = None) -> SymMat:
    r = n if rank is None else rank
    if r == 0:
        return SymMat.zero(n)
    g = rng.standard_normal((n, r))
    return SymMat(g @ g.T)


def random_orthonormal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_instance(rng: np.random.Generator, n: int, m: int) -> SdpInstance:
    mats = [random_sym(rng, n) for _ in range(m)]
    return SdpInstance(
        a=tuple(mats), b=rng.standard_normal(m), c=random_sym(rng, n)
    )


def random_feasible_instance(
    rng: np.random.Generator, n: int, m: int, strictly: bool = True
) -> tuple[SdpInstance, SymMat]:
    """Instance with a known feasible X0 (PD when strictly=True)."""
    mats = [random_sym(rng, n) for _ in range(m)]
    if strictly:
        x0 = random_psd(rng, n) + 0.5 * SymMat.identity(n)
    else:
        x0 = random_psd(rng, n, rank=max(1, n - 1 - int(rng.integers(0, 2))))
    inst = SdpInstance(
        a=tuple(mats),
        b=np.array([ai.inner(x0) for ai in mats]),
        c=random_sym(rng, n),
    )
    return inst, x0


def random_dual_feasible_instance(
    rng: np.random.Generator, n: int, m: int
) -> tuple[SdpInstance, np.ndarray]:
    """Instance with a known dual-feasible y0 (C := sum y0_i A_i + PSD)."""
    mats = [random_sym(rng, n) for _ in range(m)]
    y0 = rng.standard_normal(m)
    s0 = random_psd(rng, n)
    c = SymMat(sum(y * ai.a for y, ai in zip(y0, mats)) + s0.a)
    inst = SdpInstance(a=tuple(mats), b=rng.standard_normal(m), c=c)
    return inst, y0


def assert_feasible(inst: SdpInstance, x: SymMat, tol: float = 1e-7) -> None:
    res = np.max(np.abs(apply_a(inst, x) - inst.b))
    assert res <= tol * (1.0 + float(np.linalg.norm(inst.b)) + x.norm()), res


def random_staircase_member(
    rng: np.random.Generator, n: int, prefix: int, r: int
) -> SymMat:
    """Symmetric matrix whose trailing (n-prefix)-block is diag(PD, 0) with a
    PD block of order r; leading rows arbitrary."""
    a = np.zeros((n, n))
    if prefix:
        band = rng.standard_normal((prefix, n))
        a[:prefix, :] = band
        a = (a + a.T) / 2 * 2  # symmetric band, arbitrary values
    g = rng.standard_normal((r, r))
    a[prefix : prefix + r, prefix : prefix + r] = g @ g.T + 0.3 * np.eye(r)
    return SymMat(a)


def random_degenerate_instance(
    rng: np.random.Generator,
    n: int,
    m: int,
    ranks: tuple[int, ...],
    scramble: bool = True,
):
    """Instance whose feasible set lies on the face with the given certified
    block sizes: built in rank-revealing form, then hidden behind a random
    reformulation.  Returns (instance, dual-feasible y0, certified rank sum).

    Requires len(ranks) <= m and sum(ranks) < n.
    """
    from ramanasdp import Reformulation, reformulate

    k = len(ranks)
    assert k <= m and sum(ranks) < n
    p_total = sum(ranks)
    mats = []
    prefix = 0
    for r in ranks:
        mats.append(random_staircase_member(rng, n, prefix, r))
        prefix += r
    witness = np.zeros((n, n))
    g = rng.standard_normal((n - p_total, n - p_total))
    witness[p_total:, p_total:] = g @ g.T + 0.3 * np.eye(n - p_total)
    witness = SymMat(witness)
    b = [0.0] * k
    for _ in range(m - k):
        a = random_sym(rng, n)
        mats.append(a)
        b.append(a.inner(witness))
    y0 = rng.standard_normal(m)
    s0 = random_psd(rng, n)
    c = SymMat(sum(y * a.a for y, a in zip(y0, mats)) + s0.a)
    inst = SdpInstance(a=tuple(mats), b=np.array(b), c=c)
    if scramble:
        mm = rng.standard_normal((m, m)) + (2.0 + m) * np.eye(m)
        q = random_orthonormal(rng, n)
        ref = Reformulation(mm, q)
        inst = reformulate(inst, ref)
        y0 = ref.transport_dual(y0)
    return inst, y0, p_total
