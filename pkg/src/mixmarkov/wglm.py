"""Weighted multinomial logit fitted by damped Newton iterations.

This is the inner problem of the M-step: for one (group, source state) pair,
maximize ``F(beta) = sum_r w_r log P_{y_r}(x_r; beta_2..beta_K)`` with state 1
as the baseline.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import InvalidInputError
from .model import _log_softmax_baseline


@dataclass(frozen=True)
class WeightedMultinomialProblem:
    """Rows ``(X[r], y[r], w[r])`` with outcomes ``y`` in ``1..K`` and weights ``w >= 0``."""

    X: np.ndarray
    y: np.ndarray
    w: np.ndarray
    K: int

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=np.int64)
        w = np.asarray(self.w, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],) or w.shape != (X.shape[0],):
            raise InvalidInputError(
                f"inconsistent problem shapes X={X.shape}, y={y.shape}, w={w.shape}"
            )
        if self.K < 2:
            raise InvalidInputError("K must be >= 2")
        if y.size and (y.min() < 1 or y.max() > self.K):
            raise InvalidInputError(f"outcomes must lie in 1..{self.K}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InvalidInputError("weights must be finite and non-negative")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("covariates must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "w", w)

    @property
    def q(self) -> int:
        return self.X.shape[1]

    def drop_zero_weights(self) -> "WeightedMultinomialProblem":
        keep = self.w > 0
        if keep.all():
            return self
        return WeightedMultinomialProblem(self.X[keep], self.y[keep], self.w[keep], self.K)


@dataclass(frozen=True)
class SolverOptions:
    ridge: float = 1e-8
    grad_tol: float = 1e-10
    obj_tol: float = 1e-12
    max_iter: int = 200
    max_halvings: int = 30
    max_norm: float = 1e4
    # below this Newton decrement the full step is taken without line search
    quadratic_tol: float = 1e-9
    # gradient level accepted as converged when the line search stalls at
    # floating-point resolution
    stall_grad_tol: float = 1e-7


@dataclass(frozen=True)
class SolveResult:
    coef: np.ndarray  # (K-1, q)
    objective: float
    converged: bool
    iterations: int
    grad_norm: float
    diverged: bool = False
    degenerate: bool = False


def _log_probs_t(coef: np.ndarray, Xt: np.ndarray) -> np.ndarray:
    """Log probabilities in state-major layout ``(K, m)`` (row 0 is the baseline)."""
    full = np.empty((coef.shape[0] + 1, Xt.shape[1]))
    full[0] = 0.0
    np.matmul(coef, Xt, out=full[1:])
    full -= full.max(axis=0)
    full -= np.log(np.exp(full).sum(axis=0))
    return full


def _log_probs(coef: np.ndarray, X: np.ndarray) -> np.ndarray:
    return _log_probs_t(coef, X.T).T


def objective(coef, problem: WeightedMultinomialProblem) -> float:
    """Weighted log-likelihood at ``coef`` of shape ``(K-1, q)``."""
    coef = np.asarray(coef, dtype=float).reshape(problem.K - 1, problem.q)
    logp = _log_probs(coef, problem.X)
    return float(problem.w @ logp[np.arange(problem.y.size), problem.y - 1])


def _onehot(problem):
    Y = np.zeros((problem.y.size, problem.K))
    Y[np.arange(problem.y.size), problem.y - 1] = 1.0
    return Y[:, 1:]


def gradient(coef, problem: WeightedMultinomialProblem) -> np.ndarray:
    coef = np.asarray(coef, dtype=float).reshape(problem.K - 1, problem.q)
    P = np.exp(_log_probs(coef, problem.X))[:, 1:]
    return ((_onehot(problem) - P) * problem.w[:, None]).T @ problem.X


def _information(P: np.ndarray, w: np.ndarray, Xt: np.ndarray) -> np.ndarray:
    # negative Hessian: sum_r w_r (diag(P_r) - P_r P_r^T) kron x_r x_r^T, with P as (K-1, m)
    km1, q = P.shape[0], Xt.shape[0]
    wP = w * P
    H = np.empty((km1, q, km1, q))
    for v in range(km1):
        for s in range(v, km1):
            c = wP[v] * ((v == s) - P[s])
            H[v, :, s, :] = (Xt * c) @ Xt.T
            H[s, :, v, :] = H[v, :, s, :].T
    return H.reshape(km1 * q, km1 * q)


def solve(problem: WeightedMultinomialProblem, init=None,
          opts: SolverOptions | None = None) -> SolveResult:
    """Maximize the weighted multinomial log-likelihood of ``problem``.

    ``init`` is a ``(K-1, q)`` starting coefficient array (zeros when omitted).
    The returned objective is never below the objective at ``init`` beyond
    floating-point rounding.
    """
    opts = opts or SolverOptions()
    km1, q = problem.K - 1, problem.q
    beta = np.zeros((km1, q)) if init is None else np.array(init, dtype=float).reshape(km1, q)

    prob = problem.drop_zero_weights()
    if prob.w.size == 0:
        return SolveResult(beta, 0.0, False, 0, 0.0, degenerate=True)

    Xt = np.ascontiguousarray(prob.X.T)
    w = prob.w
    m = w.size
    Yt = np.zeros((problem.K, m))
    Yt[prob.y - 1, np.arange(m)] = 1.0
    Yt = Yt[1:]
    flat = (prob.y - 1) * m + np.arange(m)

    def evaluate(b):
        logp = _log_probs_t(b, Xt)
        return float(w @ logp.ravel()[flat]), np.exp(logp[1:])

    f, P = evaluate(beta)
    converged = diverged = False
    g_norm = np.inf
    it = 0
    for it in range(1, opts.max_iter + 1):
        g = ((Yt - P) * w) @ prob.X
        g_norm = float(np.abs(g).max())
        if g_norm < opts.grad_tol:
            converged = True
            it -= 1
            break
        H = _information(P, w, Xt)
        H[np.diag_indices_from(H)] += opts.ridge
        try:
            step = cho_solve(cho_factor(H), g.ravel())
        except LinAlgError:
            step = np.linalg.lstsq(H, g.ravel(), rcond=None)[0]
        decrement = float(g.ravel() @ step)
        step = step.reshape(km1, q)

        if decrement < opts.quadratic_tol:
            # Newton decrement this small: the quadratic model is exact to
            # rounding and objective differences are pure noise
            beta = beta + step
            f, P = evaluate(beta)
            if decrement < opts.obj_tol:
                g = ((Yt - P) * w) @ prob.X
                g_norm = float(np.abs(g).max())
                converged = True
                break
            continue

        t = 1.0
        accepted = False
        for _ in range(opts.max_halvings + 1):
            cand = beta + t * step
            f_cand, P_cand = evaluate(cand)
            if f_cand >= f:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            converged = g_norm < opts.stall_grad_tol
            break
        df = f_cand - f
        beta, f, P = cand, f_cand, P_cand
        if np.abs(beta).max() > opts.max_norm:
            diverged = True
            break
        if df < opts.obj_tol:
            g = ((Yt - P) * w) @ prob.X
            g_norm = float(np.abs(g).max())
            converged = g_norm < opts.stall_grad_tol
            break

    return SolveResult(beta, f, converged and not diverged, it, g_norm, diverged=diverged)
