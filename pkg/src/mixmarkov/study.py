"""Repeated simulate-then-select study on the two-group benchmark design."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .em import EmOptions
from .model import ModelSpec
from .parallel import parallel_map
from .simgen import TABLE1_TRUE_ACTIVE, generate, table1_config
from .varsel import forward_select


@dataclass
class ReplicateOutcome:
    replicate: int
    data_seed: int
    selected: tuple[int, ...]
    category: str
    stop_reason: str


def classify(selected, truth=TABLE1_TRUE_ACTIVE) -> str:
    """``exact``, ``missed`` (some true variable absent) or ``+k`` extra variables."""
    selected, truth = set(selected), set(truth)
    if not truth <= selected:
        return "missed"
    extra = len(selected - truth)
    return "exact" if extra == 0 else f"+{extra}"


def _one(args):
    rep, data_seed, T1, per_group, T, opts = args
    data, _, _ = generate(table1_config(seed=data_seed, per_group=per_group, T=T))
    spec = ModelSpec(3, 2, data.p)
    trace = forward_select(data, spec, T1, opts)
    return ReplicateOutcome(rep, data_seed, trace.final_set, classify(trace.final_set),
                            trace.stop_reason)


def run_selection_study(replicates: int, seed: int = 1, T1: int = 80, opts: EmOptions | None = None,
                        *, per_group: int = 50, T: int = 120, threads: int | None = 1
                        ) -> list[ReplicateOutcome]:
    opts = opts or EmOptions()
    data_seeds = np.random.SeedSequence(seed).generate_state(replicates)
    jobs = [(r + 1, int(s), T1, per_group, T, opts) for r, s in enumerate(data_seeds)]
    return parallel_map(_one, jobs, threads)


def summarize(outcomes) -> dict[str, int]:
    counts = Counter(o.category for o in outcomes)
    keys = ["exact"] + sorted(k for k in counts if k.startswith("+")) + ["missed"]
    return {k: counts.get(k, 0) for k in keys}


def format_summary(outcomes) -> str:
    summary = summarize(outcomes)
    total = len(outcomes)
    lines = [f"{'outcome':<10}{'count':>7}{'share':>9}"]
    for key, count in summary.items():
        share = count / total if total else 0.0
        lines.append(f"{key:<10}{count:>7}{share:>9.3f}")
    lines.append(f"{'total':<10}{total:>7}")
    return "\n".join(lines)
