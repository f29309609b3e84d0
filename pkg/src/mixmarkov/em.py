"""EM estimation of the mixture of Markov multinomial-logit transition models."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import wglm
from .errors import FitError, InvalidInputError, InvalidModelError
from .wglm import _log_probs_t
from .model import (
    ModelSpec,
    PanelDataset,
    ParameterSet,
    _log_joint,
    check_data,
    log_path_matrix,
    resolve_window,
)

log = logging.getLogger(__name__)

INIT_STRATEGIES = ("random", "user")


@dataclass(frozen=True)
class EmOptions:
    max_iter: int = 500
    rel_tol: float = 1e-8
    n_restarts: int = 10
    seed: int | None = 0
    init_strategy: str = "random"
    solver: wglm.SolverOptions = field(default_factory=wglm.SolverOptions)

    def __post_init__(self):
        if self.max_iter < 1:
            raise InvalidInputError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.rel_tol > 0:
            raise InvalidInputError(f"rel_tol must be > 0, got {self.rel_tol}")
        if self.n_restarts < 1:
            raise InvalidInputError(f"n_restarts must be >= 1, got {self.n_restarts}")
        if self.init_strategy not in INIT_STRATEGIES:
            raise InvalidInputError(f"init_strategy must be one of {INIT_STRATEGIES}")


@dataclass
class FitResult:
    theta: ParameterSet
    loglik: float
    trace: list[float]
    iterations: int
    converged: bool
    restarts_used: int
    spec: ModelSpec
    window: tuple[int, int]
    seed: int | None = None
    initial_loglik: float = float("nan")
    restart_logliks: list[float] = field(default_factory=list)
    degenerate_blocks: list[tuple[int, int]] = field(default_factory=list)
    diverged_blocks: list[tuple[int, int]] = field(default_factory=list)


class TransitionBlocks:
    """Observed transitions in a window, grouped by source state.

    For every source state ``u`` this holds the active covariates at the
    destination time, the destination state and the owning individual.  Both
    EM steps only ever touch the data through these blocks.
    """

    def __init__(self, data: PanelDataset, spec: ModelSpec, window=None):
        check_data(data, spec)
        a, b = resolve_window(window, data.T)
        self.window = (a, b)
        self.n, self.K, self.L = data.n, spec.K, spec.L
        self.active_idx = spec.active_idx
        prev = data.y[:, a - 1:b - 1]
        cur = data.y[:, a:b]
        x = data.x[:, a:b][..., self.active_idx]
        owner = np.broadcast_to(np.arange(data.n)[:, None], prev.shape)
        self.blocks = []
        for u in range(1, spec.K + 1):
            mask = prev == u
            self.blocks.append((x[mask], cur[mask].astype(np.int64), owner[mask]))

    def log_paths(self, theta: ParameterSet) -> np.ndarray:
        out = np.zeros((self.n, self.L))
        for u, (X, yv, owner) in enumerate(self.blocks):
            if yv.size == 0:
                continue
            coef = theta.alpha[:, u][..., self.active_idx]  # (L, K-1, q)
            for g in range(self.L):
                logp = _log_probs_t(coef[g], X.T)
                picked = logp[yv - 1, np.arange(yv.size)]
                out[:, g] += np.bincount(owner, weights=picked, minlength=self.n)
        return out


def _normalize(joint: np.ndarray) -> np.ndarray:
    eta = np.exp(joint - joint.max(axis=1, keepdims=True))
    return eta / eta.sum(axis=1, keepdims=True)


def e_step(data: PanelDataset, theta: ParameterSet, spec: ModelSpec, window=None) -> np.ndarray:
    """Posterior group probabilities ``eta[i, g]``, shape ``(n, L)``."""
    check_data(data, spec)
    theta.check(spec)
    return _normalize(_log_joint(log_path_matrix(data, theta, window), theta.pi))


def update_pi(eta) -> np.ndarray:
    eta = np.asarray(eta, dtype=float)
    col = eta.sum(axis=0)
    return col / col.sum()


def expected_complete_loglik(data: PanelDataset, eta, theta: ParameterSet, spec: ModelSpec,
                             window=None) -> float:
    """The EM auxiliary function ``Q``: ``sum_{i,g} eta[i,g] (log pi_g + log A[i,g])``."""
    eta = np.asarray(eta, dtype=float)
    with np.errstate(divide="ignore"):
        log_pi = np.log(theta.pi)
    terms = log_path_matrix(data, theta, window) + log_pi[None, :]
    # 0 * -inf contributes nothing
    return float(np.where(eta > 0, eta * terms, 0.0).sum())


def _m_step(blocks: TransitionBlocks, eta: np.ndarray, theta_prev: ParameterSet,
            solver: wglm.SolverOptions):
    alpha = np.array(theta_prev.alpha)
    act = blocks.active_idx
    degenerate, diverged = [], []
    for g in range(blocks.L):
        for u, (X, yv, owner) in enumerate(blocks.blocks):
            init = theta_prev.alpha[g, u][:, act]
            if yv.size == 0:
                degenerate.append((g + 1, u + 1))
                continue
            problem = wglm.WeightedMultinomialProblem(X, yv, eta[owner, g], blocks.K)
            res = wglm.solve(problem, init, solver)
            if res.degenerate:
                degenerate.append((g + 1, u + 1))
                continue
            if res.diverged:
                diverged.append((g + 1, u + 1))
            alpha[g, u][:, act] = res.coef
    return ParameterSet(update_pi(eta), alpha), degenerate, diverged


def m_step(data: PanelDataset, eta, theta_prev: ParameterSet, spec: ModelSpec,
           window=None) -> ParameterSet:
    """Maximize ``Q(. | theta_prev)`` given responsibilities ``eta``.

    Each (group, source state) block is an independent weighted multinomial
    logit fit, warm-started at ``theta_prev``.  Blocks with no transitions keep
    their previous coefficients.
    """
    theta_prev.check(spec)
    eta = _check_eta(eta, data.n, spec.L)
    blocks = TransitionBlocks(data, spec, window)
    theta, degenerate, diverged = _m_step(blocks, eta, theta_prev, wglm.SolverOptions())
    if degenerate:
        log.debug("carried over coefficients for empty blocks %s", degenerate)
    if diverged:
        log.debug("quasi-separation flagged in blocks %s", diverged)
    return theta


def _check_eta(eta, n, L) -> np.ndarray:
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (n, L):
        raise InvalidInputError(f"responsibilities must have shape {(n, L)}, got {eta.shape}")
    if np.any(eta < 0) or np.any(np.abs(eta.sum(axis=1) - 1) > 1e-9):
        raise InvalidInputError("responsibility rows must be non-negative and sum to 1")
    return eta


def _initialize(blocks: TransitionBlocks, spec: ModelSpec, rng, solver) -> tuple:
    eta = rng.dirichlet(np.ones(spec.L), size=blocks.n)
    return _m_step(blocks, eta, ParameterSet.zeros(spec), solver)


def initialize(data: PanelDataset, spec: ModelSpec, strategy: str = "random", seed=None,
               window=None) -> ParameterSet:
    """Starting parameters: Dirichlet(1) responsibilities followed by one M-step."""
    if strategy != "random":
        raise InvalidInputError("initialize only generates random-responsibility starts; "
                                "pass a user ParameterSet to fit() instead")
    blocks = TransitionBlocks(data, spec, window)
    theta, _, _ = _initialize(blocks, spec, np.random.default_rng(seed), wglm.SolverOptions())
    return theta


def _run_em(blocks: TransitionBlocks, theta: ParameterSet, opts: EmOptions):
    log_a = blocks.log_paths(theta)
    joint = _log_joint(log_a, theta.pi)
    ll = float(logsumexp(joint, axis=1).sum())
    ll0 = ll
    trace = []
    converged = False
    degenerate, diverged = set(), set()
    all_degenerate = True
    n_blocks = blocks.L * blocks.K
    for _ in range(opts.max_iter):
        eta = _normalize(joint)
        theta, deg, div = _m_step(blocks, eta, theta, opts.solver)
        degenerate.update(deg)
        diverged.update(div)
        all_degenerate &= len(deg) == n_blocks
        joint = _log_joint(blocks.log_paths(theta), theta.pi)
        ll_new = float(logsumexp(joint, axis=1).sum())
        trace.append(ll_new)
        change = abs(ll_new - ll) / (abs(ll) + 1.0)
        ll = ll_new
        if change < opts.rel_tol:
            converged = True
            break
    return theta, ll, ll0, trace, converged, all_degenerate, sorted(degenerate), sorted(diverged)


def fit(data: PanelDataset, spec: ModelSpec, opts: EmOptions | None = None, window=None,
        init: ParameterSet | None = None) -> FitResult:
    """Fit by EM with multiple starts and keep the best final log-likelihood.

    With ``init_strategy="random"`` there are ``n_restarts`` Dirichlet starts
    (one when ``L == 1``); ``init``, if given, is tried as one extra start.
    With ``init_strategy="user"`` only ``init`` is used.
    """
    opts = opts or EmOptions()
    blocks = TransitionBlocks(data, spec, window)
    starts = []
    if opts.init_strategy == "user":
        if init is None:
            raise InvalidInputError("init_strategy='user' requires an initial ParameterSet")
    else:
        n_random = 1 if spec.L == 1 else opts.n_restarts
        children = np.random.SeedSequence(opts.seed).spawn(n_random)
        starts.extend(("random", child) for child in children)
    if init is not None:
        init.check(spec)
        starts.append(("user", init))

    best = None
    logliks = []
    for kind, payload in starts:
        try:
            if kind == "random":
                theta0, deg, _ = _initialize(blocks, spec, np.random.default_rng(payload),
                                             opts.solver)
                if len(deg) == blocks.L * blocks.K:
                    raise FitError("every M-step block is empty")
            else:
                theta0 = payload
            out = _run_em(blocks, theta0, opts)
        except (InvalidModelError, FitError) as exc:
            log.debug("EM start failed: %s", exc)
            logliks.append(float("-inf"))
            continue
        if out[5]:
            logliks.append(float("-inf"))
            continue
        logliks.append(out[1])
        if best is None or out[1] > best[1]:
            best = out
    if best is None:
        raise FitError(f"all {len(starts)} EM starts failed")
    theta, ll, ll0, trace, converged, _, degenerate, diverged = best
    return FitResult(
        theta=theta,
        loglik=ll,
        trace=trace,
        iterations=len(trace),
        converged=converged,
        restarts_used=int(np.isfinite(logliks).sum()),
        spec=spec,
        window=blocks.window,
        seed=opts.seed,
        initial_loglik=ll0,
        restart_logliks=logliks,
        degenerate_blocks=degenerate,
        diverged_blocks=diverged,
    )
