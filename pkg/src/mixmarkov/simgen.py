"""Synthetic panels drawn from a known mixture of Markov logit models."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .model import ModelSpec, PanelDataset, ParameterSet, _log_softmax_baseline

# Coefficients used to generate the benchmark panels: TABLE1_ALPHA[g, u-1, v-2]
# is the length-5 vector for group g+1, source state u, target state v.
TABLE1_ALPHA = np.array([
    [  # group 1
        [[0.2, 0.2, 1.0, 0.0, 0.0], [0.4, 0.4, 0.8, 0.0, 0.0]],
        [[0.1, -0.2, 1.3, 0.0, 0.0], [0.2, 0.5, 0.5, 0.0, 0.0]],
        [[0.2, 0.9, -0.3, 0.0, 0.0], [0.5, -0.1, 0.3, 0.0, 0.0]],
    ],
    [  # group 2
        [[0.2, 0.2, 1.3, 0.0, 0.0], [0.4, 0.3, 0.8, 0.0, 0.0]],
        [[0.3, 0.2, 1.3, 0.0, 0.0], [0.2, -0.5, 0.8, 0.0, 0.0]],
        [[0.1, -0.5, -0.3, 0.0, 0.0], [0.5, 0.1, 0.2, 0.0, 0.0]],
    ],
])
TABLE1_TRUE_ACTIVE = (1, 2, 3)


@dataclass(frozen=True)
class CovariateSpec:
    kind: str = "normal"  # "constant" or "normal"
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "normal"):
            raise InvalidInputError(f"unknown covariate kind {self.kind!r}")
        if self.kind == "normal" and not self.sd >= 0:
            raise InvalidInputError("normal covariate needs sd >= 0")


@dataclass(frozen=True)
class GeneratorConfig:
    group_sizes: tuple[int, ...]
    T: int
    covariates: tuple[CovariateSpec, ...]
    alpha: np.ndarray
    initial_probs: np.ndarray | None = None
    seed: int | None = 0
    # explicit mixing weights; when set, group labels are drawn rather than fixed
    pi: np.ndarray | None = field(default=None)

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "group_sizes", tuple(int(c) for c in self.group_sizes))
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if alpha.ndim != 4 or alpha.shape[2] != alpha.shape[1] - 1:
            raise InvalidInputError(f"alpha must have shape (L, K, K-1, p), got {alpha.shape}")
        L, K, _, p = alpha.shape
        if len(self.group_sizes) != L or min(self.group_sizes) < 0 or sum(self.group_sizes) < 1:
            raise InvalidInputError(f"need {L} non-negative group sizes, got {self.group_sizes}")
        if len(self.covariates) != p:
            raise InvalidInputError(f"need {p} covariate specs, got {len(self.covariates)}")
        first = self.covariates[0]
        if first.kind != "constant" or first.mean != 1.0:
            raise InvalidInputError("covariate 1 must be the constant 1")
        if self.T < 2:
            raise InvalidInputError("T must be >= 2")
        if self.initial_probs is not None:
            init = np.asarray(self.initial_probs, dtype=float)
            if init.shape != (K,) or np.any(init < 0) or abs(init.sum() - 1) > 1e-12:
                raise InvalidInputError("initial_probs must be a length-K probability vector")
            object.__setattr__(self, "initial_probs", init)
        if self.pi is not None:
            pi = np.asarray(self.pi, dtype=float)
            if pi.shape != (L,) or np.any(pi < 0) or abs(pi.sum() - 1) > 1e-12:
                raise InvalidInputError("pi must be a length-L probability vector")
            object.__setattr__(self, "pi", pi)

    @property
    def n(self) -> int:
        return sum(self.group_sizes)

    @property
    def spec(self) -> ModelSpec:
        L, K, _, p = self.alpha.shape
        active = tuple(j + 1 for j in range(p) if j == 0 or np.any(self.alpha[..., j] != 0))
        return ModelSpec(K, L, p, active)

    def theta(self) -> ParameterSet:
        sizes = np.asarray(self.group_sizes, dtype=float)
        pi = self.pi if self.pi is not None else sizes / sizes.sum()
        return ParameterSet(pi, self.alpha)


def table1_config(seed: int | None = 0, per_group: int = 50, T: int = 120) -> GeneratorConfig:
    """Two groups of ``per_group`` individuals, 3 states, 5 covariates."""
    covs = (
        CovariateSpec("constant", 1.0, 0.0),
        CovariateSpec("normal", 0.0, 1.0),
        CovariateSpec("normal", 1.0, 2.0),
        CovariateSpec("normal", 0.0, 1.0),
        CovariateSpec("normal", 0.0, 1.0),
    )
    return GeneratorConfig((per_group, per_group), T, covs, TABLE1_ALPHA, seed=seed)


def generate(config: GeneratorConfig):
    """Draw a panel.  Returns ``(data, truth_labels, theta_true)``; labels are 1-based."""
    rng = np.random.default_rng(config.seed)
    L, K, _, p = config.alpha.shape
    n, T = config.n, config.T
    theta = config.theta()

    if config.pi is None:
        groups = np.repeat(np.arange(L), config.group_sizes)
    else:
        groups = rng.choice(L, size=n, p=config.pi)

    x = np.empty((n, T, p))
    for j, cov in enumerate(config.covariates):
        if cov.kind == "constant":
            x[:, :, j] = cov.mean
        else:
            x[:, :, j] = rng.normal(cov.mean, cov.sd, size=(n, T))

    init = config.initial_probs if config.initial_probs is not None else np.full(K, 1.0 / K)
    y = np.empty((n, T), dtype=np.int64)
    y[:, 0] = rng.choice(K, size=n, p=init) + 1
    for t in range(1, T):
        coef = config.alpha[groups, y[:, t - 1] - 1]  # (n, K-1, p)
        probs = np.exp(_log_softmax_baseline(np.einsum("nvp,np->nv", coef, x[:, t])))
        cdf = np.cumsum(probs, axis=1)
        draw = rng.random(n)
        y[:, t] = np.minimum((draw[:, None] > cdf).sum(axis=1), K - 1) + 1
    ids = tuple(f"i{k + 1}" for k in range(n))
    return PanelDataset(y, x, ids), groups + 1, theta
