"""Long-format panel CSV files and JSON model artifacts.

Panel files have the header ``id,t,y,x1,...,xp`` with one row per
(individual, time) cell.  JSON artifacts carry a ``kind`` tag and store
floats with Python's shortest round-trip representation, so reading a file
back yields bit-identical values.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .cluster import ClusterResult
from .em import FitResult
from .errors import InvalidInputError, PanelParseError
from .model import ModelSpec, PanelDataset, ParameterSet
from .simgen import CovariateSpec, GeneratorConfig
from .varsel import SelectionStep, SelectionTrace

FORMAT = "mixmarkov"


def read_panel_csv(path, *, add_intercept: bool = True, K: int | None = None) -> PanelDataset:
    """Read a long-format panel.

    Individuals keep their order of first appearance.  When the first
    covariate column is not identically 1, a constant column is prepended
    (``add_intercept=True``) or the file is rejected.
    """
    path = Path(path)
    cells: dict[str, dict[int, tuple[int, list[float]]]] = {}
    n_cov = None
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PanelParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if header[:3] != ["id", "t", "y"]:
            raise PanelParseError(f"{path}: header must start with id,t,y; got {header[:3]}")
        n_cov = len(header) - 3
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise PanelParseError(f"{path}: row {line} has {len(row)} fields, "
                                      f"expected {len(header)}")
            pid = row[0].strip()
            try:
                t = int(row[1])
                y = int(row[2])
            except ValueError:
                raise PanelParseError(f"{path}: row {line}: t and y must be integers") from None
            try:
                xs = [float(c) for c in row[3:]]
            except ValueError:
                raise PanelParseError(f"{path}: row {line}: non-numeric covariate") from None
            if not all(math.isfinite(v) for v in xs):
                raise PanelParseError(f"{path}: row {line}: covariates must be finite")
            if y < 1 or (K is not None and y > K):
                top = K if K is not None else "K"
                raise PanelParseError(f"{path}: row {line}: state {y} outside 1..{top}")
            if t < 1:
                raise PanelParseError(f"{path}: row {line}: time index must be >= 1")
            by_t = cells.setdefault(pid, {})
            if t in by_t:
                raise PanelParseError(f"{path}: row {line}: duplicate (id={pid}, t={t})")
            by_t[t] = (y, xs)

    if not cells:
        raise PanelParseError(f"{path}: no data rows")
    T = max(max(by_t) for by_t in cells.values())
    for pid, by_t in cells.items():
        if len(by_t) != T:
            missing = sorted(set(range(1, T + 1)) - set(by_t))
            raise PanelParseError(f"{path}: ragged panel: id {pid} is missing t={missing}")
    if T < 2:
        raise PanelParseError(f"{path}: panel needs at least 2 time points")

    ids = tuple(cells)
    y = np.array([[cells[pid][t][0] for t in range(1, T + 1)] for pid in ids], dtype=np.int64)
    x = np.array([[cells[pid][t][1] for t in range(1, T + 1)] for pid in ids], dtype=float)
    x = x.reshape(len(ids), T, n_cov)
    if n_cov == 0 or not np.all(x[:, :, 0] == 1.0):
        if not add_intercept:
            raise PanelParseError(f"{path}: first covariate is not identically 1 and "
                                  "intercept insertion is disabled")
        x = np.concatenate([np.ones((len(ids), T, 1)), x], axis=2)
    return PanelDataset(y, x, ids)


def write_panel_csv(data: PanelDataset, path) -> None:
    ids = data.ids or tuple(f"i{k + 1}" for k in range(data.n))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "t", "y"] + [f"x{j + 1}" for j in range(data.p)])
        for i, pid in enumerate(ids):
            for t in range(data.T):
                w.writerow([pid, t + 1, int(data.y[i, t])] + [repr(float(v)) for v in data.x[i, t]])


def write_labels_csv(ids, labels, path, posterior=None) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        head = ["id", "group"]
        if posterior is not None:
            head += [f"posterior_{g + 1}" for g in range(posterior.shape[1])]
        w.writerow(head)
        for i, (pid, lab) in enumerate(zip(ids, labels)):
            row = [pid, int(lab)]
            if posterior is not None:
                row += [repr(float(v)) for v in posterior[i]]
            w.writerow(row)


# -- JSON -----------------------------------------------------------------

def _theta_to_dict(theta: ParameterSet) -> dict:
    return {"pi": theta.pi.tolist(), "alpha": theta.alpha.tolist()}


def _theta_from_dict(d) -> ParameterSet:
    return ParameterSet(np.array(d["pi"], dtype=float), np.array(d["alpha"], dtype=float))


def _spec_to_dict(spec: ModelSpec) -> dict:
    return {"K": spec.K, "L": spec.L, "p": spec.p, "active": list(spec.active)}


def _spec_from_dict(d) -> ModelSpec:
    return ModelSpec(d["K"], d["L"], d["p"], tuple(d["active"]))


def _fit_to_dict(r: FitResult) -> dict:
    return {
        "spec": _spec_to_dict(r.spec),
        "window": list(r.window),
        "theta": _theta_to_dict(r.theta),
        "loglik": r.loglik,
        "initial_loglik": r.initial_loglik,
        "trace": list(r.trace),
        "iterations": r.iterations,
        "converged": r.converged,
        "restarts_used": r.restarts_used,
        "restart_logliks": list(r.restart_logliks),
        "seed": r.seed,
        "degenerate_blocks": [list(b) for b in r.degenerate_blocks],
        "diverged_blocks": [list(b) for b in r.diverged_blocks],
    }


def _fit_from_dict(d) -> FitResult:
    return FitResult(
        theta=_theta_from_dict(d["theta"]),
        loglik=d["loglik"],
        trace=list(d["trace"]),
        iterations=d["iterations"],
        converged=d["converged"],
        restarts_used=d["restarts_used"],
        spec=_spec_from_dict(d["spec"]),
        window=tuple(d["window"]),
        seed=d.get("seed"),
        initial_loglik=d.get("initial_loglik", float("nan")),
        restart_logliks=list(d.get("restart_logliks", [])),
        degenerate_blocks=[tuple(b) for b in d.get("degenerate_blocks", [])],
        diverged_blocks=[tuple(b) for b in d.get("diverged_blocks", [])],
    )


def _selection_to_dict(tr: SelectionTrace) -> dict:
    return {
        "steps": [
            {
                "candidates": list(s.candidates),
                "train_logliks": list(s.train_logliks),
                "chosen": s.chosen,
                "heldout_loglik": s.heldout_loglik,
            }
            for s in tr.steps
        ],
        "final_set": list(tr.final_set),
        "stop_reason": tr.stop_reason,
        "T1": tr.T1,
        "initial_heldout_loglik": tr.initial_heldout_loglik,
        "initial_train_loglik": tr.initial_train_loglik,
        "seed": tr.seed,
        "refit": None if tr.refit is None else _fit_to_dict(tr.refit),
    }


def _selection_from_dict(d) -> SelectionTrace:
    steps = [SelectionStep(tuple(s["candidates"]), tuple(s["train_logliks"]), s["chosen"],
                           s["heldout_loglik"]) for s in d["steps"]]
    return SelectionTrace(steps, tuple(d["final_set"]), d["stop_reason"], d["T1"],
                          d["initial_heldout_loglik"], d["initial_train_loglik"], d.get("seed"),
                          None if d.get("refit") is None else _fit_from_dict(d["refit"]))


def _cluster_to_dict(c: ClusterResult) -> dict:
    return {
        "ids": None if c.ids is None else list(c.ids),
        "posterior": np.asarray(c.posterior).tolist(),
        "assignment": [int(a) for a in c.assignment],
    }


def _cluster_from_dict(d) -> ClusterResult:
    ids = None if d.get("ids") is None else tuple(d["ids"])
    return ClusterResult(np.array(d["posterior"], dtype=float),
                         np.array(d["assignment"], dtype=int), ids)


def config_to_dict(cfg: GeneratorConfig) -> dict:
    return {
        "group_sizes": list(cfg.group_sizes),
        "T": cfg.T,
        "covariates": [{"kind": c.kind, "mean": c.mean, "sd": c.sd} for c in cfg.covariates],
        "alpha": cfg.alpha.tolist(),
        "initial_probs": None if cfg.initial_probs is None else cfg.initial_probs.tolist(),
        "pi": None if cfg.pi is None else cfg.pi.tolist(),
        "seed": cfg.seed,
    }


def config_from_dict(d) -> GeneratorConfig:
    try:
        return GeneratorConfig(
            group_sizes=tuple(d["group_sizes"]),
            T=int(d["T"]),
            covariates=tuple(CovariateSpec(c["kind"], float(c.get("mean", 0.0)),
                                           float(c.get("sd", 1.0))) for c in d["covariates"]),
            alpha=np.array(d["alpha"], dtype=float),
            initial_probs=None if d.get("initial_probs") is None else np.array(d["initial_probs"]),
            pi=None if d.get("pi") is None else np.array(d["pi"]),
            seed=d.get("seed"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"malformed generator config: {exc}") from exc


_WRITERS = [
    (FitResult, "fit", _fit_to_dict),
    (SelectionTrace, "selection", _selection_to_dict),
    (ClusterResult, "cluster", _cluster_to_dict),
    (GeneratorConfig, "generator", config_to_dict),
    (ParameterSet, "parameters", _theta_to_dict),
]
_READERS = {
    "fit": _fit_from_dict,
    "selection": _selection_from_dict,
    "cluster": _cluster_from_dict,
    "generator": config_from_dict,
    "parameters": _theta_from_dict,
}


def to_json_dict(obj) -> dict:
    for cls, kind, conv in _WRITERS:
        if isinstance(obj, cls):
            return {"format": FORMAT, "version": __version__, "kind": kind, **conv(obj)}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def from_json_dict(d):
    kind = d.get("kind")
    if d.get("format") != FORMAT or kind not in _READERS:
        raise InvalidInputError(f"not a {FORMAT} artifact (kind={kind!r})")
    return _READERS[kind](d)


def write_fit_json(obj, path) -> None:
    """Serialize a FitResult, SelectionTrace, ClusterResult, GeneratorConfig or ParameterSet."""
    text = json.dumps(to_json_dict(obj), indent=2)
    try:
        Path(path).write_text(text + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def read_fit_json(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: invalid JSON ({exc})") from exc
    return from_json_dict(d)
