"""Small dense feasibility kernel used by the facial-reduction loop.

Everything here optimizes over an affine family of symmetric matrices

    S(w) = S0 + w_1 S_1 + ... + w_d S_d,   w in R^d,

at desk scale (matrix order and d both small).  Three entry points:

  * maximize_lambda_min  — max over w of lambda_min(S(w)), solved by
    damped Newton on the log-det barrier of the hypograph
    {(w, t) : S(w) - tI ≻ 0}, with a decreasing centering parameter.
    A tiny quadratic regularization keeps the iteration bounded when
    the supremum is +infinity.
  * interior_point       — a strictly positive definite S(w), pushed to
    the regularized analytic center (damped Newton on -log det + ridge).

All iterations are deterministic: fixed starting points, fixed step
rules, no randomization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class IterationLimitError(RuntimeError):
    """The kernel exhausted its iteration budget without a verdict."""


def _chol_or_none(g: np.ndarray) -> Optional[np.ndarray]:
    try:
        return np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        return None


def _lambda_min(g: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(g)[0])


@dataclass
class LambdaMinResult:
    w: np.ndarray
    value: float  # reached max of lambda_min(S(w)) (within ~mu of optimum)
    newton_steps: int


def _assemble(s0: np.ndarray, mats: Sequence[np.ndarray], w: np.ndarray) -> np.ndarray:
    s = s0.copy()
    for wi, si in zip(w, mats):
        if wi != 0.0:
            s += wi * si
    return s


def maximize_lambda_min(
    s0: np.ndarray,
    mats: Sequence[np.ndarray],
    *,
    reg: float = 0.0,
    max_iter: int = 2000,
    mu_final: float = 1e-11,
    stop_above: Optional[float] = None,
) -> LambdaMinResult:
    """Maximize lambda_min(S(w)) over w, to roughly n·mu_final accuracy.

    ``reg`` adds (reg/2)·‖w‖² to the barrier objective; use a tiny value
    whenever the supremum may be unbounded.  ``stop_above`` ends the run
    early once lambda_min exceeds the given level (phase-1 use).
    """
    d = len(mats)
    n = s0.shape[0]
    mats = [np.asarray(m, dtype=float) for m in mats]
    w = np.zeros(d)
    s = _assemble(s0, mats, w)
    t = _lambda_min(s) - max(1.0, 0.1 * float(np.linalg.norm(s0)))
    mu = 1.0
    steps = 0
    eye = np.eye(n)
    while True:
        # Inner damped Newton on f(w,t) = -t + (reg/2)|w|^2 - mu log det(S(w) - tI).
        for _ in range(60):
            if steps >= max_iter:
                raise IterationLimitError(
                    f"lambda_min maximization exceeded {max_iter} Newton steps"
                )
            steps += 1
            g = _assemble(s0, mats, w) - t * eye
            l = _chol_or_none(g)
            if l is None:
                raise IterationLimitError("barrier iterate left the PSD cone")
            ginv = np.linalg.inv(g)
            # Gradient.
            grad = np.empty(d + 1)
            for i in range(d):
                grad[i] = -mu * float(np.sum(ginv * mats[i])) + reg * w[i]
            grad[d] = -1.0 + mu * float(np.trace(ginv))
            # Hessian via G^{-1} S_i G^{-1} products.
            gim = [ginv @ mats[i] for i in range(d)]
            hess = np.empty((d + 1, d + 1))
            for i in range(d):
                for j in range(i, d):
                    hess[i, j] = hess[j, i] = mu * float(np.sum(gim[i] * gim[j].T))
                hess[i, i] += reg
                hti = -mu * float(np.sum(ginv * gim[i].T))
                hess[i, d] = hess[d, i] = hti
            hess[d, d] = mu * float(np.sum(ginv * ginv))
            try:
                step = np.linalg.solve(hess + 1e-14 * np.eye(d + 1), -grad)
            except np.linalg.LinAlgError:
                step = -grad
            decrement = float(-grad @ step)
            if decrement <= 1e-13 * (1.0 + abs(t)):
                break
            # Backtracking line search keeping the iterate interior.
            alpha = 1.0
            f0 = -t + 0.5 * reg * float(w @ w) - mu * 2.0 * float(
                np.sum(np.log(np.diag(l)))
            )
            accepted = False
            for _ in range(50):
                w_new = w + alpha * step[:d]
                t_new = t + alpha * step[d]
                g_new = _assemble(s0, mats, w_new) - t_new * eye
                l_new = _chol_or_none(g_new)
                if l_new is not None:
                    f_new = -t_new + 0.5 * reg * float(w_new @ w_new) - mu * 2.0 * float(
                        np.sum(np.log(np.diag(l_new)))
                    )
                    if f_new <= f0 - 0.25 * alpha * decrement:
                        accepted = True
                        break
                alpha *= 0.5
            if not accepted:
                break
            w, t = w_new, t_new
            if stop_above is not None and t > stop_above:
                return LambdaMinResult(w=w, value=_lambda_min(_assemble(s0, mats, w)), newton_steps=steps)
        if mu <= mu_final:
            break
        mu = max(mu * 0.2, mu_final) if mu > mu_final else mu_final
    value = _lambda_min(_assemble(s0, mats, w))
    return LambdaMinResult(w=w, value=value, newton_steps=steps)


def interior_point(
    s0: np.ndarray,
    mats: Sequence[np.ndarray],
    *,
    reg: float = 1e-9,
    max_iter: int = 2000,
    tol: float = 1e-8,
) -> Optional[np.ndarray]:
    """A strictly PD point of {S(w) ≻ 0}, or None if none exists to tolerance.

    Phase 1 maximizes lambda_min; on success the point is polished toward
    the regularized analytic center: min -log det S(w) + (reg/2)‖w‖².
    """
    d = len(mats)
    mats = [np.asarray(m, dtype=float) for m in mats]
    scale = 1.0 + float(np.linalg.norm(s0)) + sum(float(np.linalg.norm(m)) for m in mats)
    phase1 = maximize_lambda_min(
        s0, mats, reg=1e-10, max_iter=max_iter, stop_above=0.05 * scale
    )
    w = phase1.w
    if _lambda_min(_assemble(s0, mats, w)) <= 1e-10 * scale:
        return None
    if d == 0:
        return w
    for _ in range(120):
        s = _assemble(s0, mats, w)
        l = _chol_or_none(s)
        if l is None:
            break
        sinv = np.linalg.inv(s)
        grad = np.array(
            [-float(np.sum(sinv * m)) + reg * wi for m, wi in zip(mats, w)]
        )
        sim = [sinv @ m for m in mats]
        hess = np.empty((d, d))
        for i in range(d):
            for j in range(i, d):
                hess[i, j] = hess[j, i] = float(np.sum(sim[i] * sim[j].T))
            hess[i, i] += reg
        try:
            step = np.linalg.solve(hess + 1e-14 * np.eye(d), -grad)
        except np.linalg.LinAlgError:
            break
        decrement = float(-grad @ step)
        if decrement <= tol * tol:
            break
        alpha = 1.0
        f0 = -2.0 * float(np.sum(np.log(np.diag(l)))) + 0.5 * reg * float(w @ w)
        improved = False
        for _ in range(50):
            w_new = w + alpha * step
            l_new = _chol_or_none(_assemble(s0, mats, w_new))
            if l_new is not None:
                f_new = -2.0 * float(np.sum(np.log(np.diag(l_new)))) + 0.5 * reg * float(
                    w_new @ w_new
                )
                if f_new <= f0 - 0.25 * alpha * decrement:
                    improved = True
                    break
            alpha *= 0.5
        if not improved:
            break
        w = w_new
    return w


def minimize_linear_over_face(
    obj: np.ndarray,
    s0: np.ndarray,
    mats: Sequence[np.ndarray],
    w_start: np.ndarray,
    *,
    reg: float = 1e-10,
    mu_final: float = 1e-9,
    max_iter: int = 4000,
) -> tuple[np.ndarray, float]:
    """min <obj, S(w)> over {w : S(w) ⪰ 0} by a short barrier path.

    Requires S(w_start) ≻ 0.  The ridge term (reg/2)‖w‖² bounds the path
    when the feasible set or objective is unbounded; accuracy is
    O(n·mu_final + reg·‖w*‖²), enough for the 1e-6 value tolerances used
    by the golden checks.  Returns (w, objective value).
    """
    d = len(mats)
    obj = np.asarray(obj, dtype=float)
    mats = [np.asarray(m, dtype=float) for m in mats]
    lin = np.array([float(np.sum(obj * m)) for m in mats])
    const = float(np.sum(obj * s0))
    w = np.asarray(w_start, dtype=float).copy()
    if _chol_or_none(_assemble(s0, mats, w)) is None:
        raise ValueError("minimize_linear_over_face requires a strictly feasible start")
    if d == 0:
        return w, const
    mu = max(1.0, float(np.abs(lin).sum()))
    steps = 0
    while True:
        for _ in range(80):
            if steps >= max_iter:
                raise IterationLimitError("linear minimization exceeded iteration budget")
            steps += 1
            s = _assemble(s0, mats, w)
            if not np.all(np.isfinite(s)):
                raise IterationLimitError("barrier iterate diverged (objective unbounded?)")
            l = _chol_or_none(s)
            if l is None:
                raise IterationLimitError("barrier iterate left the PSD cone")
            sinv = np.linalg.inv(s)
            grad = lin + reg * w - mu * np.array([float(np.sum(sinv * m)) for m in mats])
            sim = [sinv @ m for m in mats]
            hess = np.empty((d, d))
            for i in range(d):
                for j in range(i, d):
                    hess[i, j] = hess[j, i] = mu * float(np.sum(sim[i] * sim[j].T))
                hess[i, i] += reg
            try:
                step = np.linalg.solve(hess + 1e-14 * np.eye(max(d, 1))[:d, :d], -grad)
            except np.linalg.LinAlgError:
                break
            decrement = float(-grad @ step)
            if decrement <= 1e-12 * (1.0 + abs(const)):
                break
            alpha = 1.0
            f0 = lin @ w + 0.5 * reg * float(w @ w) - mu * 2.0 * float(
                np.sum(np.log(np.diag(l)))
            )
            ok = False
            for _ in range(50):
                w_new = w + alpha * step
                l_new = _chol_or_none(_assemble(s0, mats, w_new))
                if l_new is not None:
                    f_new = lin @ w_new + 0.5 * reg * float(w_new @ w_new) - mu * 2.0 * float(
                        np.sum(np.log(np.diag(l_new)))
                    )
                    if f_new <= f0 - 0.25 * alpha * decrement:
                        ok = True
                        break
                alpha *= 0.5
            if not ok:
                break
            w = w_new
        if mu <= mu_final:
            break
        mu = max(mu * 0.15, mu_final)
    return w, const + float(lin @ w)
