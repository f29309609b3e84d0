import numpy as np
import pytest

from mixmarkov import simgen
from mixmarkov.em import EmOptions, fit
from mixmarkov.errors import InvalidInputError
from mixmarkov.model import ModelSpec, PanelDataset, ParameterSet
from mixmarkov.varsel import (
    EXHAUSTED,
    HELD_OUT_DECREASE,
    forward_select,
    holdout_log_likelihood,
)

from conftest import random_instance
from oracles import mixture_enumeration


def signal_on_var2(seed, n_per=50, T=60, p=4):
    rng = np.random.default_rng(seed)
    alpha = np.zeros((2, 3, 2, p))
    alpha[..., 0] = rng.normal(scale=0.3, size=(2, 3, 2))
    alpha[..., 1] = rng.choice([-1.0, 1.0], size=(2, 3, 2)) * rng.uniform(0.6, 1.2, size=(2, 3, 2))
    covs = (simgen.CovariateSpec("constant", 1.0, 0.0),) + tuple(
        simgen.CovariateSpec("normal", 0.0, 1.0) for _ in range(p - 1))
    data, _, _ = simgen.generate(simgen.GeneratorConfig((n_per, n_per), T, covs, alpha, seed=seed))
    return data


def test_intercept_only_panel_exhausts():
    rng = np.random.default_rng(0)
    data = PanelDataset(rng.integers(1, 3, size=(10, 8)), np.ones((10, 8, 1)))
    trace = forward_select(data, ModelSpec(2, 1, 1), 5, EmOptions(seed=0))
    assert trace.final_set == (1,)
    assert trace.stop_reason == EXHAUSTED
    assert trace.steps == []


@pytest.mark.parametrize("T1", [1, 9, 10, 12])
def test_T1_range(T1):
    rng = np.random.default_rng(0)
    data = PanelDataset(rng.integers(1, 3, size=(5, 10)), np.ones((5, 10, 1)))
    with pytest.raises(InvalidInputError):
        forward_select(data, ModelSpec(2, 1, 1), T1)


def test_holdout_boundary_scores_one_transition(rng):
    data, theta, spec = random_instance(rng, 4, 6, 2, 2, 2)
    lik, _ = mixture_enumeration(data, theta, a=5, b=6)
    assert holdout_log_likelihood(data, theta, spec, 4) == pytest.approx(np.log(lik).sum(),
                                                                         abs=1e-12)


def test_holdout_matches_enumeration(rng):
    data, theta, spec = random_instance(rng, 3, 7, 2, 2, 2)
    lik, _ = mixture_enumeration(data, theta, a=4, b=7)
    score = holdout_log_likelihood(data, theta, spec, 3)
    assert score == pytest.approx(np.log(lik).sum(), abs=1e-10)
    assert holdout_log_likelihood(data, theta, spec, 3) == score


def test_holdout_rejects_short_window(rng):
    data, theta, spec = random_instance(rng, 3, 7, 2, 2, 2)
    with pytest.raises(InvalidInputError):
        holdout_log_likelihood(data, theta, spec, 6)


@pytest.fixture(scope="module")
def small_trace():
    data = signal_on_var2(seed=3, n_per=25, T=40, p=4)
    opts = EmOptions(n_restarts=3, seed=5)
    return data, opts, forward_select(data, ModelSpec(3, 2, 4), 28, opts)


def test_trace_invariants(small_trace):
    data, opts, trace = small_trace
    assert 1 in trace.final_set and set(trace.final_set) <= {1, 2, 3, 4}
    for step in trace.steps:
        best = int(np.argmax(step.train_logliks))
        assert step.chosen == step.candidates[best]
    if trace.stop_reason == HELD_OUT_DECREASE:
        held = [trace.initial_heldout_loglik] + [s.heldout_loglik for s in trace.steps]
        assert held[-1] < held[-2]
        assert all(b >= a for a, b in zip(held[:-2], held[1:-1]))
        assert len(trace.final_set) == len(trace.steps)
    else:
        assert trace.final_set == (1, 2, 3, 4)


def test_training_score_nondecreasing(small_trace):
    _, _, trace = small_trace
    scores = [trace.initial_train_loglik] + [max(s.train_logliks) for s in trace.steps]
    assert all(b >= a - 1e-6 for a, b in zip(scores, scores[1:]))


def test_selection_deterministic(small_trace):
    data, opts, trace = small_trace
    again = forward_select(data, ModelSpec(3, 2, 4), 28, opts)
    assert again == trace


def test_refit_on_full_panel():
    data = signal_on_var2(seed=4, n_per=15, T=30, p=3)
    trace = forward_select(data, ModelSpec(3, 2, 3), 20, EmOptions(n_restarts=2, seed=0),
                           refit=True)
    assert trace.refit is not None
    assert trace.refit.window == (1, 30)
    assert trace.refit.spec.active == trace.final_set


@pytest.mark.slow
def test_selects_the_single_signal_variable():
    hits = 0
    replicates = 5
    for seed in range(replicates):
        data = signal_on_var2(seed=100 + seed, n_per=50, T=60, p=4)
        trace = forward_select(data, ModelSpec(3, 2, 4), 40, EmOptions(n_restarts=3, seed=seed))
        hits += trace.final_set == (1, 2)
    assert hits > replicates / 2
