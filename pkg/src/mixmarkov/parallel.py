"""Process-level fan-out for independent fits."""
from __future__ import annotations

import os

from .errors import InvalidInputError

THREADS_ENV = "MIXMARKOV_THREADS"


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            threads = int(raw)
        except ValueError:
            raise InvalidInputError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if threads < 1:
        raise InvalidInputError(f"thread count must be >= 1, got {threads}")
    return threads


def parallel_map(func, items, threads: int | None = 1) -> list:
    """``[func(item) for item in items]``, optionally spread over worker processes.

    Results come back in input order, so output does not depend on ``threads``.
    """
    items = list(items)
    threads = resolve_threads(threads)
    if threads == 1 or len(items) < 2:
        return [func(item) for item in items]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=min(threads, len(items)))(delayed(func)(item) for item in items)
