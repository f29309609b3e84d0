"""Posterior group membership and hard (MAP) cluster assignment."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .em import e_step
from .errors import InvalidInputError


@dataclass
class ClusterResult:
    posterior: np.ndarray  # (n, L)
    assignment: np.ndarray  # (n,), labels 1..L
    ids: tuple[str, ...] | None = None


def posterior_membership(data, theta, spec, window=None) -> np.ndarray:
    return e_step(data, theta, spec, window)


def assign(posterior) -> np.ndarray:
    """Row-wise argmax as 1-based labels; ties go to the smallest label."""
    posterior = np.asarray(posterior, dtype=float)
    if posterior.ndim != 2:
        raise InvalidInputError("posterior must be an (n, L) matrix")
    return np.argmax(posterior, axis=1) + 1


def cluster(data, theta, spec, window=None) -> ClusterResult:
    post = posterior_membership(data, theta, spec, window)
    return ClusterResult(post, assign(post), data.ids)


def align_labels(assignment, truth, L: int):
    """Best relabelling of ``assignment`` against ``truth`` by exhaustive search.

    Returns ``(perm, accuracy)`` where ``perm[k]`` is the truth label matched to
    estimated label ``k + 1``.
    """
    assignment = np.asarray(assignment, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if assignment.shape != truth.shape:
        raise InvalidInputError("assignment and truth must have equal length")
    if L > 8:
        raise InvalidInputError("align_labels enumerates L! permutations; L > 8 is refused")
    if assignment.size == 0:
        return tuple(range(1, L + 1)), 1.0
    confusion = np.zeros((L, L), dtype=int)
    np.add.at(confusion, (assignment - 1, truth - 1), 1)
    best_perm, best_hits = None, -1
    for perm in itertools.permutations(range(L)):
        hits = confusion[np.arange(L), perm].sum()
        if hits > best_hits:
            best_perm, best_hits = perm, hits
    return tuple(k + 1 for k in best_perm), best_hits / assignment.size
