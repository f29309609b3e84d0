"""Model dimensions, parameters and the transition/path likelihoods.

Conventions used throughout the package:

* response states are labelled ``1..K``; state ``1`` is the logit baseline;
* group labels are ``1..L``;
* variable indices in ``ModelSpec.active`` are ``1..p`` and variable ``1`` is
  the intercept (a column of ones in ``PanelDataset.x``);
* time windows are 1-based inclusive pairs ``(a, b)``; the likelihood over
  ``(a, b)`` scores the transitions into times ``a+1..b``, conditioning on
  the state observed at time ``a``.

Array axes are ordinary 0-based numpy axes.  ``ParameterSet.alpha`` has shape
``(L, K, K-1, p)``: ``alpha[g, u-1, v-2]`` is the coefficient vector of target
state ``v`` out of source state ``u`` in group ``g+1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidInputError, InvalidModelError


@dataclass(frozen=True)
class ModelSpec:
    K: int
    L: int
    p: int
    active: tuple[int, ...] = (1,)

    def __post_init__(self):
        if self.K < 2:
            raise InvalidInputError(f"K must be >= 2, got {self.K}")
        if self.L < 1:
            raise InvalidInputError(f"L must be >= 1, got {self.L}")
        if self.p < 1:
            raise InvalidInputError(f"p must be >= 1, got {self.p}")
        active = tuple(int(j) for j in self.active)
        if 1 not in active:
            raise InvalidInputError("active set must contain the intercept index 1")
        if list(active) != sorted(set(active)):
            raise InvalidInputError(f"active set must be sorted and duplicate-free: {active}")
        if active[0] < 1 or active[-1] > self.p:
            raise InvalidInputError(f"active indices must lie in 1..{self.p}: {active}")
        object.__setattr__(self, "active", active)

    @property
    def active_idx(self) -> np.ndarray:
        """0-based column indices of the active variables."""
        return np.asarray(self.active, dtype=int) - 1

    def with_active(self, active) -> "ModelSpec":
        return replace(self, active=tuple(sorted(set(int(j) for j in active))))

    @classmethod
    def full(cls, K: int, L: int, p: int) -> "ModelSpec":
        return cls(K, L, p, tuple(range(1, p + 1)))


@dataclass(frozen=True)
class PanelDataset:
    """Rectangular panel: ``y`` is ``(n, T)`` with states ``1..K``,
    ``x`` is ``(n, T, p)`` with ``x[:, :, 0] == 1``."""

    y: np.ndarray
    x: np.ndarray
    ids: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        y = np.asarray(self.y)
        x = np.asarray(self.x, dtype=float)
        if y.ndim != 2:
            raise InvalidInputError(f"y must be 2-d (n, T), got shape {y.shape}")
        if x.ndim != 3 or x.shape[:2] != y.shape:
            raise InvalidInputError(f"x must have shape (n, T, p) matching y {y.shape}, got {x.shape}")
        if not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.isfinite(y)) or not np.all(y == np.round(y)):
                raise InvalidInputError("y must hold integer state labels")
            y = y.astype(np.int64)
        if y.shape[1] < 2:
            raise InvalidInputError("a panel needs at least T = 2 time points")
        if y.size and y.min() < 1:
            raise InvalidInputError("state labels must be >= 1")
        if x.shape[2] < 1 or not np.all(x[:, :, 0] == 1.0):
            raise InvalidInputError("covariate column 1 must be identically 1 (intercept)")
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("covariates must be finite")
        if self.ids is not None and len(self.ids) != y.shape[0]:
            raise InvalidInputError("ids length must equal the number of individuals")
        y.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def T(self) -> int:
        return self.y.shape[1]

    @property
    def p(self) -> int:
        return self.x.shape[2]

    def subset(self, rows) -> "PanelDataset":
        rows = np.asarray(rows)
        ids = None if self.ids is None else tuple(np.asarray(self.ids, dtype=object)[rows])
        return PanelDataset(self.y[rows], self.x[rows], ids)


@dataclass(frozen=True)
class ParameterSet:
    pi: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        pi = np.array(self.pi, dtype=float)
        alpha = np.array(self.alpha, dtype=float)
        if pi.ndim != 1 or alpha.ndim != 4 or alpha.shape[0] != pi.shape[0]:
            raise InvalidInputError(
                f"expected pi (L,) and alpha (L, K, K-1, p); got {pi.shape} and {alpha.shape}"
            )
        if alpha.shape[2] != alpha.shape[1] - 1:
            raise InvalidInputError(f"alpha axis 2 must have K-1 entries, got shape {alpha.shape}")
        if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-12:
            raise InvalidInputError(f"pi must be a probability vector, got {pi}")
        if not np.all(np.isfinite(alpha)):
            raise InvalidInputError("alpha must be finite")
        pi.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "alpha", alpha)

    @property
    def L(self) -> int:
        return self.alpha.shape[0]

    @property
    def K(self) -> int:
        return self.alpha.shape[1]

    @property
    def p(self) -> int:
        return self.alpha.shape[3]

    @classmethod
    def zeros(cls, spec: ModelSpec) -> "ParameterSet":
        return cls(np.full(spec.L, 1.0 / spec.L), np.zeros((spec.L, spec.K, spec.K - 1, spec.p)))

    def coef(self, u: int, v: int, group: int) -> np.ndarray:
        """Coefficient vector for transition ``u -> v`` in ``group`` (1-based labels)."""
        if v == 1:
            return np.zeros(self.p)
        return self.alpha[group - 1, u - 1, v - 2].copy()

    def permuted(self, perm) -> "ParameterSet":
        """Relabel groups: new group ``g`` is old group ``perm[g]`` (0-based)."""
        perm = np.asarray(perm)
        return ParameterSet(self.pi[perm], self.alpha[perm])

    def check(self, spec: ModelSpec) -> None:
        if self.alpha.shape != (spec.L, spec.K, spec.K - 1, spec.p):
            raise InvalidInputError(
                f"alpha shape {self.alpha.shape} does not match spec "
                f"(L={spec.L}, K={spec.K}, p={spec.p})"
            )
        inactive = np.setdiff1d(np.arange(spec.p), spec.active_idx)
        if inactive.size and np.any(self.alpha[..., inactive] != 0):
            raise InvalidInputError("coefficients of inactive variables must be exactly zero")


def check_data(data: PanelDataset, spec: ModelSpec) -> None:
    if data.p != spec.p:
        raise InvalidInputError(f"data has p={data.p} covariates but spec has p={spec.p}")
    if data.y.max() > spec.K:
        raise InvalidInputError(f"state {data.y.max()} outside 1..{spec.K}")


def resolve_window(window, T: int) -> tuple[int, int]:
    if window is None:
        return 1, T
    a, b = (int(w) for w in window)
    if not 1 <= a < b <= T:
        raise InvalidInputError(f"window {window} must satisfy 1 <= a < b <= T={T}")
    return a, b


def _log_softmax_baseline(lin: np.ndarray) -> np.ndarray:
    """Map linear predictors of states 2..K (last axis) to log probs of 1..K."""
    full = np.concatenate([np.zeros(lin.shape[:-1] + (1,)), lin], axis=-1)
    full -= full.max(axis=-1, keepdims=True)
    return full - np.log(np.exp(full).sum(axis=-1, keepdims=True))


def transition_probs(x, u: int, group: int, theta: ParameterSet, spec: ModelSpec) -> np.ndarray:
    """Probabilities of moving from state ``u`` to each of ``1..K`` given covariates ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.p,):
        raise InvalidInputError(f"x must have length p={spec.p}, got shape {x.shape}")
    if x[0] != 1.0:
        raise InvalidInputError("x[1] must be the intercept value 1")
    if not 1 <= u <= spec.K or not 1 <= group <= spec.L:
        raise InvalidInputError(f"u={u} or group={group} out of range")
    theta.check(spec)
    lin = theta.alpha[group - 1, u - 1] @ x
    return np.exp(_log_softmax_baseline(lin))


def transition_log_probs(data: PanelDataset, theta: ParameterSet, window=None) -> np.ndarray:
    """Log probability of every observed transition in ``window`` under each group.

    Returns an array of shape ``(L, n, b - a)``.
    """
    a, b = resolve_window(window, data.T)
    prev = data.y[:, a - 1:b - 1] - 1
    cur = data.y[:, a:b] - 1
    x = data.x[:, a:b, :]
    coef = theta.alpha[:, prev]  # (L, n, m, K-1, p)
    lin = np.einsum("nmp,lnmvp->lnmv", x, coef)
    logp = _log_softmax_baseline(lin)
    idx = np.broadcast_to(cur[None, :, :, None], logp.shape[:-1] + (1,))
    return np.take_along_axis(logp, idx, axis=-1)[..., 0]


def log_path_matrix(data: PanelDataset, theta: ParameterSet, window=None) -> np.ndarray:
    """``log A[i, g]`` for all individuals and groups, shape ``(n, L)``."""
    return transition_log_probs(data, theta, window).sum(axis=2).T


def path_log_likelihood(i: int, group: int, data: PanelDataset, theta: ParameterSet,
                        spec: ModelSpec, window=None) -> float:
    """Log probability of individual ``i``'s (0-based) observed path given membership in ``group``."""
    check_data(data, spec)
    theta.check(spec)
    if not 1 <= group <= spec.L:
        raise InvalidInputError(f"group {group} outside 1..{spec.L}")
    single = data.subset([i])
    sub = ParameterSet(np.ones(1), theta.alpha[group - 1:group])
    return float(transition_log_probs(single, sub, window).sum())


def _log_joint(log_a: np.ndarray, pi: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        log_pi = np.log(pi)
    joint = log_a + log_pi[None, :]
    bad = np.flatnonzero(np.all(np.isneginf(joint), axis=1))
    if bad.size:
        raise InvalidModelError(f"individual {bad[0]} has zero likelihood under every group")
    return joint


def observed_log_likelihood(data: PanelDataset, theta: ParameterSet, spec: ModelSpec,
                            window=None) -> float:
    """Mixture log-likelihood ``sum_i log sum_g pi_g A[i, g]`` over ``window``."""
    check_data(data, spec)
    theta.check(spec)
    joint = _log_joint(log_path_matrix(data, theta, window), theta.pi)
    return float(logsumexp(joint, axis=1).sum())
