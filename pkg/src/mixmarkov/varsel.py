"""Greedy forward selection of explanatory variables with a held-out stop rule.

Starting from the intercept alone, each step fits every one-variable
extension on the training window ``1..T1``, keeps the extension with the
largest training log-likelihood, and stops as soon as the held-out
log-likelihood over ``T1+1..T`` falls below that of the previous set.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .em import EmOptions, FitResult, fit
from .errors import FitError, InvalidInputError
from .model import ModelSpec, PanelDataset, ParameterSet, observed_log_likelihood
from .parallel import parallel_map

log = logging.getLogger(__name__)

HELD_OUT_DECREASE = "held-out-decrease"
EXHAUSTED = "exhausted-candidates"
ALL_CANDIDATES_FAILED = "all-candidates-failed"


@dataclass
class SelectionStep:
    candidates: tuple[int, ...]
    train_logliks: tuple[float, ...]
    chosen: int
    heldout_loglik: float


@dataclass
class SelectionTrace:
    steps: list[SelectionStep]
    final_set: tuple[int, ...]
    stop_reason: str
    T1: int
    initial_heldout_loglik: float
    initial_train_loglik: float
    seed: int | None = None
    refit: FitResult | None = field(default=None, repr=False)


def check_T1(T1: int, T: int) -> None:
    if not 2 <= T1 <= T - 2:
        raise InvalidInputError(f"T1={T1} must satisfy 2 <= T1 <= T-2 (T={T})")


def holdout_log_likelihood(data: PanelDataset, theta: ParameterSet, spec: ModelSpec,
                           T1: int) -> float:
    """Mixture log-likelihood over ``T1+1..T`` (transitions into ``T1+2..T``)."""
    if data.T - (T1 + 1) < 1:
        raise InvalidInputError(f"held-out window {T1 + 1}..{data.T} has fewer than 2 time points")
    return observed_log_likelihood(data, theta, spec, (T1 + 1, data.T))


def _fit_candidate(args):
    data, spec, opts, window, warm = args
    try:
        return fit(data, spec, opts, window, init=warm)
    except FitError as exc:
        log.debug("candidate %s failed: %s", spec.active, exc)
        return None


def forward_select(data: PanelDataset, spec: ModelSpec, T1: int, opts: EmOptions | None = None,
                   *, refit: bool = False, threads: int | None = 1) -> SelectionTrace:
    """Run forward selection over variables ``2..spec.p``.

    ``spec.active`` is ignored; the search always starts from ``{1}``.  Each
    candidate fit uses the same restart seeds plus a warm start from the
    incumbent model.  With ``refit=True`` the selected model is refitted on
    the full panel and attached to the trace.
    """
    opts = opts or EmOptions()
    check_T1(T1, data.T)
    train = (1, T1)
    active = (1,)
    inc_spec = spec.with_active(active)
    incumbent = fit(data, inc_spec, opts, train)
    held = holdout_log_likelihood(data, incumbent.theta, inc_spec, T1)
    initial_held, initial_train = held, incumbent.loglik

    steps = []
    stop = EXHAUSTED
    for _ in range(2, spec.p + 1):
        phi = tuple(j for j in range(1, spec.p + 1) if j not in active)
        specs = [spec.with_active(active + (j,)) for j in phi]
        fits = parallel_map(_fit_candidate,
                            [(data, s, opts, train, incumbent.theta) for s in specs], threads)
        scores = tuple(f.loglik if f is not None else float("-inf") for f in fits)
        best = int(np.argmax(scores))
        if not np.isfinite(scores[best]):
            steps.append(SelectionStep(phi, scores, phi[best], float("-inf")))
            stop = ALL_CANDIDATES_FAILED
            break
        chosen_spec, chosen_fit = specs[best], fits[best]
        new_held = holdout_log_likelihood(data, chosen_fit.theta, chosen_spec, T1)
        steps.append(SelectionStep(phi, scores, phi[best], new_held))
        if new_held < held:
            stop = HELD_OUT_DECREASE
            break
        active, held, incumbent = chosen_spec.active, new_held, chosen_fit

    refit_result = None
    if refit:
        refit_result = fit(data, spec.with_active(active), opts, None, init=incumbent.theta)
    return SelectionTrace(steps, active, stop, T1, initial_held, initial_train, opts.seed,
                          refit_result)
