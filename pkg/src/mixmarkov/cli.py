"""Command-line entry point: ``mixmarkov {simulate,fit,cluster,select,reproduce-sim}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from . import io as mio
from .cluster import cluster
from .em import EmOptions, fit
from .errors import FitError, InvalidInputError, InvalidModelError, PanelParseError
from .model import ModelSpec
from .parallel import resolve_threads
from .simgen import generate, table1_config
from .study import format_summary, run_selection_study, summarize
from .varsel import forward_select

log = logging.getLogger("mixmarkov")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _window(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b, got {text!r}")
    return a, b


def _em_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("EM options")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--restarts", type=int, default=10, help="random EM starts (default 10)")
    g.add_argument("--max-iter", type=int, default=500)
    g.add_argument("--rel-tol", type=float, default=1e-8)
    return p


def _data_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--data", required=True, help="long-format panel CSV (id,t,y,x1..xp)")
    p.add_argument("--add-intercept", dest="add_intercept", action="store_true", default=True,
                   help="prepend a constant column when x1 is not identically 1 (default)")
    p.add_argument("--no-add-intercept", dest="add_intercept", action="store_false",
                   help="reject files whose first covariate is not identically 1")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixmarkov", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    em_p, data_p = _em_parent(), _data_parent()

    s = sub.add_parser("simulate", help="draw a synthetic panel")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=["table1"])
    src.add_argument("--config", help="generator config JSON")
    s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    s.add_argument("--per-group", type=int, default=50, help="preset only")
    s.add_argument("--T", type=int, default=120, help="preset only")
    s.add_argument("--out", required=True, help="panel CSV to write")
    s.add_argument("--truth", help="CSV of true group labels")
    s.add_argument("--save-config", help="write the generator config as JSON")

    f = sub.add_parser("fit", parents=[data_p, em_p], help="fit the mixture by EM")
    f.add_argument("--K", type=int, required=True)
    f.add_argument("--L", type=int, required=True)
    f.add_argument("--active", type=_int_list, help="1-based variable indices (default: all)")
    f.add_argument("--window", type=_window, help="time window a:b (default: whole panel)")
    f.add_argument("--out", required=True, help="FitResult JSON to write")

    c = sub.add_parser("cluster", parents=[data_p], help="MAP group assignments")
    c.add_argument("--fit", required=True, help="FitResult JSON from `fit`")
    c.add_argument("--out", required=True, help="assignments CSV to write")
    c.add_argument("--json", help="also write a ClusterResult JSON")

    sel = sub.add_parser("select", parents=[data_p, em_p], help="forward variable selection")
    sel.add_argument("--K", type=int, required=True)
    sel.add_argument("--L", type=int, required=True)
    sel.add_argument("--T1", type=int, required=True, help="last training time point")
    sel.add_argument("--refit", action="store_true", help="refit the selected model on 1..T")
    sel.add_argument("--threads", type=int, default=None)
    sel.add_argument("--out", help="SelectionTrace JSON to write")

    r = sub.add_parser("reproduce-sim", parents=[em_p], help="repeated selection study")
    r.add_argument("--replicates", type=int, default=30)
    r.add_argument("--T1", type=int, default=80)
    r.add_argument("--per-group", type=int, default=50)
    r.add_argument("--T", type=int, default=120)
    r.add_argument("--threads", type=int, default=None)
    r.add_argument("--out", help="JSON file with per-replicate outcomes and counts")
    return parser


def _em_options(args) -> EmOptions:
    return EmOptions(max_iter=args.max_iter, rel_tol=args.rel_tol, n_restarts=args.restarts,
                     seed=args.seed)


def cmd_simulate(args) -> int:
    if args.preset:
        cfg = table1_config(seed=0 if args.seed is None else args.seed,
                            per_group=args.per_group, T=args.T)
    else:
        cfg = mio.read_fit_json(args.config)
        if not hasattr(cfg, "group_sizes"):
            raise InvalidInputError(f"{args.config} is not a generator config")
        if args.seed is not None:
            cfg = mio.config_from_dict({**mio.config_to_dict(cfg), "seed": args.seed})
    data, truth, _ = generate(cfg)
    mio.write_panel_csv(data, args.out)
    if args.truth:
        mio.write_labels_csv(data.ids, truth, args.truth)
    if args.save_config:
        mio.write_fit_json(cfg, args.save_config)
    print(f"wrote {args.out}: n={data.n} T={data.T} p={data.p}")
    return 0


def cmd_fit(args) -> int:
    data = mio.read_panel_csv(args.data, add_intercept=args.add_intercept, K=args.K)
    active = args.active or tuple(range(1, data.p + 1))
    spec = ModelSpec(args.K, args.L, data.p, active)
    res = fit(data, spec, _em_options(args), args.window)
    mio.write_fit_json(res, args.out)
    print(f"loglik={res.loglik!r} iterations={res.iterations} converged={res.converged} "
          f"restarts_used={res.restarts_used}")
    return 0


def cmd_cluster(args) -> int:
    res = mio.read_fit_json(args.fit)
    if not hasattr(res, "theta"):
        raise InvalidInputError(f"{args.fit} is not a fit result")
    data = mio.read_panel_csv(args.data, add_intercept=args.add_intercept, K=res.spec.K)
    out = cluster(data, res.theta, res.spec, res.window)
    mio.write_labels_csv(out.ids, out.assignment, args.out, out.posterior)
    if args.json:
        mio.write_fit_json(out, args.json)
    sizes = [int((out.assignment == g + 1).sum()) for g in range(res.spec.L)]
    print(f"cluster sizes: {sizes}")
    return 0


def cmd_select(args) -> int:
    data = mio.read_panel_csv(args.data, add_intercept=args.add_intercept, K=args.K)
    spec = ModelSpec(args.K, args.L, data.p)
    trace = forward_select(data, spec, args.T1, _em_options(args), refit=args.refit,
                           threads=args.threads)
    if args.out:
        mio.write_fit_json(trace, args.out)
    chosen = ",".join(str(j) for j in trace.final_set)
    print(f"Λ={{{chosen}}} stop_reason={trace.stop_reason}")
    return 0


def cmd_reproduce(args) -> int:
    if args.replicates < 1:
        raise InvalidInputError("--replicates must be >= 1")
    outcomes = run_selection_study(args.replicates, args.seed, args.T1, _em_options(args),
                                   per_group=args.per_group, T=args.T,
                                   threads=resolve_threads(args.threads))
    print(format_summary(outcomes))
    if args.out:
        payload = {
            "format": mio.FORMAT,
            "version": __version__,
            "kind": "study",
            "replicates": args.replicates,
            "seed": args.seed,
            "T1": args.T1,
            "counts": summarize(outcomes),
            "outcomes": [
                {"replicate": o.replicate, "data_seed": o.data_seed, "selected": list(o.selected),
                 "category": o.category, "stop_reason": o.stop_reason}
                for o in outcomes
            ],
        }
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "cluster": cmd_cluster,
    "select": cmd_select,
    "reproduce-sim": cmd_reproduce,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except PanelParseError as exc:
        print(f"mixmarkov: error: {exc}", file=sys.stderr)
        return 1
    except InvalidInputError as exc:
        print(f"mixmarkov {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (FitError, InvalidModelError, OSError) as exc:
        print(f"mixmarkov: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
