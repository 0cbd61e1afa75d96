"""Command-line entry point: ``expressivity <command> ...``.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import constructions, gamlp, sbm, tasks, wl
from .gamlp import LogisticConfig, Mode
from .graph import GraphCollection, GraphFormatError, NodeFeatures, load_edge_list, load_features
from .operators import OperatorError, OperatorFamily, Tower
from .reports import EquivalenceReport, canonical_json
from .walks import BudgetExceeded

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Everything that determines a run; its canonical text is stored in every report."""

    command: str
    inputs: list[str] = field(default_factory=list)
    omega: str | None = None
    K: int | None = None
    seeds: list[int] = field(default_factory=list)
    output: str | None = None
    features_removed: bool = False
    normalize: bool = True
    tower: str | None = None
    options: dict = field(default_factory=dict)

    def to_text(self) -> str:
        return canonical_json(asdict(self))

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        return cls(**json.loads(text))


# ---------------------------------------------------------------------------
# input handling

_NODES_HEADER = re.compile(r"#\s*nodes\s*[:=]?\s*(\d+)")


def _read(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"input file not found: {path}")
    return p.read_text(encoding="utf-8")


def _load_graph(path: str, relabel: bool = False):
    text = _read(path)
    first = text.lstrip().split("\n", 1)[0]
    m = _NODES_HEADER.match(first)
    try:
        return load_edge_list(text, n=int(m.group(1)) if m else None, relabel=relabel)
    except GraphFormatError as e:
        raise UsageError(f"{path}: {e}") from None


def _graph_paths(inputs: list[str]) -> list[str]:
    out = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            found = sorted(str(q) for q in p.glob("*.edges"))
            if not found:
                raise UsageError(f"no *.edges files in directory {item}")
            out.extend(found)
        else:
            out.append(item)
    if not out:
        raise UsageError("no input graphs given")
    return out


def load_collection(inputs: list[str], features_removed: bool = False, relabel: bool = False) -> GraphCollection:
    """Edge lists (files or directories of ``*.edges``); ``<file>.features`` is
    picked up automatically unless features are removed."""
    c = GraphCollection()
    for path in _graph_paths(inputs):
        g = _load_graph(path, relabel)
        f = None
        feat = Path(path + ".features")
        if not features_removed and feat.is_file():
            try:
                f = load_features(feat.read_text(encoding="utf-8"), g.n)
            except GraphFormatError as e:
                raise UsageError(f"{feat}: {e}") from None
        c.add(path, g, f)
    return c


def _family(text: str, tower: str | None) -> OperatorFamily:
    try:
        return OperatorFamily.parse(text, tower)
    except (OperatorError, ValueError) as e:
        raise UsageError(f"invalid operator family {text!r}: {e}") from None


# ---------------------------------------------------------------------------
# output

def _emit(cfg: RunConfig, payload: dict, csv_text: str | None = None) -> None:
    payload = dict(payload)
    payload["config"] = json.loads(cfg.to_text())
    text = canonical_json(payload)
    if cfg.output is None:
        sys.stdout.write(text)
        return
    out = Path(cfg.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    if csv_text is not None:
        out.with_suffix(".csv").write_text(csv_text, encoding="utf-8")


# ---------------------------------------------------------------------------
# commands

def cmd_wl_classes(cfg: RunConfig) -> int:
    c = load_collection(cfg.inputs, cfg.features_removed)
    scope = cfg.options.get("scope", "node")
    rep = (wl.count_node_classes if scope == "node" else wl.count_graph_classes)(c, cfg.K, with_sizes=True)
    _emit(cfg, rep.to_dict(), rep.to_csv())
    return EXIT_OK


def cmd_gamlp_classes(cfg: RunConfig) -> int:
    fam = _family(cfg.omega, cfg.tower)
    c = load_collection(cfg.inputs, cfg.features_removed)
    mode = cfg.options.get("mode", "exact")
    fn = gamlp.count_node_classes if cfg.options.get("scope", "node") == "node" else gamlp.count_graph_classes
    try:
        rep = fn(c, fam, mode, with_sizes=True)
    except OperatorError as e:
        raise UsageError(str(e)) from None
    _emit(cfg, rep.to_dict(), rep.to_csv())
    return EXIT_OK


def cmd_fit_walk_task(cfg: RunConfig) -> int:
    o = cfg.options
    seed = cfg.seeds[0] if cfg.seeds else 0
    if cfg.inputs:
        g = _load_graph(cfg.inputs[0])
    else:
        g = tasks.random_regular(o["rrg_n"], o["rrg_d"], seed)
    f = NodeFeatures.uniform(g.n) if cfg.features_removed else tasks.parity_features(g.n)
    blue = 0 if cfg.features_removed else 1
    n_train = o["train"] if o["train"] >= 1 else int(round(o["train"] * g.n))
    res = tasks.walk_task(g, f, o["length"], n_train, seed, o["lam"], blue=blue)
    rows = ["model,train_nmse,test_nmse"] + [
        f"{k},{v['train_nmse']!r},{v['test_nmse']!r}" for k, v in res.metrics.items()]
    _emit(cfg, res.to_dict(), "\n".join(rows) + "\n")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.options.get("list"):
        sys.stdout.write("".join(f"{n}\n" for n in constructions.REGISTRY))
        return EXIT_OK
    names = cfg.inputs or list(constructions.REGISTRY)
    unknown = [n for n in names if n not in constructions.REGISTRY]
    if unknown:
        raise UsageError(f"unknown construction(s): {', '.join(unknown)}; "
                         f"known: {', '.join(constructions.REGISTRY)}")
    results, ok = {}, True
    for name in names:
        checks = constructions.get(name).verify()
        results[name] = [{"check": c.name, "passed": c.passed, "detail": c.detail} for c in checks]
        for c in checks:
            sys.stderr.write(f"{'PASS' if c.passed else 'FAIL'} {name}: {c.name}"
                             f"{'' if c.passed or not c.detail else ' (' + c.detail + ')'}\n")
        ok &= all(c.passed for c in checks)
    _emit(cfg, {"results": results, "all_passed": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_enumerate(cfg: RunConfig) -> int:
    o = cfg.options
    if o.get("q") is not None or o.get("full"):
        q = None if o.get("q") is None else tuple(o["q"])
        try:
            spec = constructions.TreeSpec(o["m"], cfg.K, q)
        except ValueError as e:
            raise UsageError(str(e)) from None
        res = constructions.enumerate_full_mary(spec)
    else:
        res = constructions.enumerate_agg_trees(o["m"], cfg.K)
    _emit(cfg, res.to_dict())
    return EXIT_OK if res.satisfied else EXIT_FAIL


def cmd_sbm(cfg: RunConfig) -> int:
    o = cfg.options
    omega = None
    if cfg.omega:
        omega = sbm.family(cfg.omega, cfg.K) if cfg.omega in ("A", "H", "SL") \
            else _family(cfg.omega, "float")
    cfgl = LogisticConfig(o["lr"], o["epochs"], o["l2"])
    try:
        res = sbm.bench(o["n"], o["a"], o["b"], cfg.seeds, omega, cfgl)
    except ValueError as e:
        raise UsageError(str(e)) from None
    _emit(cfg, res)
    return EXIT_OK


def cmd_babai(cfg: RunConfig) -> int:
    o = cfg.options
    res = tasks.babai_sweep(o["n"], o["graphs"], cfg.seeds[0] if cfg.seeds else 0)
    _emit(cfg, res)
    return EXIT_OK if res["violations"] == 0 else EXIT_FAIL


COMMANDS = {
    "wl-classes": cmd_wl_classes,
    "gamlp-classes": cmd_gamlp_classes,
    "fit-walk-task": cmd_fit_walk_task,
    "verify": cmd_verify,
    "enumerate": cmd_enumerate,
    "sbm": cmd_sbm,
    "babai": cmd_babai,
}


# ---------------------------------------------------------------------------
# argument parsing

def _q_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _seed_list(text: str) -> list[int]:
    """"10" means seeds 0..9; "3,5,7" lists them."""
    try:
        if "," in text:
            return [int(v) for v in text.split(",")]
        return list(range(int(text)))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="write the JSON report here (CSV alongside for tables)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="accepted for compatibility; runs are serial")
    common.add_argument("--tower", choices=[t.value for t in Tower])
    common.add_argument("--features-removed", action="store_true",
                        help="ignore node features (all labels 0)")

    p = argparse.ArgumentParser(prog="expressivity", description=__doc__.splitlines()[0],
                                parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("wl-classes", parents=[common], help="WL equivalence classes per depth")
    s.add_argument("inputs", nargs="+", help="edge-list files or directories of *.edges")
    s.add_argument("--K", type=int, default=5)
    s.add_argument("--scope", choices=["node", "graph"], default="node")

    s = sub.add_parser("gamlp-classes", parents=[common], help="GA-MLP equivalence classes per depth")
    s.add_argument("inputs", nargs="+")
    s.add_argument("--omega", required=True, help='operator family, e.g. "I,A^1..A^5"')
    s.add_argument("--mode", choices=[m.value for m in Mode], default="exact")
    s.add_argument("--scope", choices=["node", "graph"], default="node")

    s = sub.add_parser("fit-walk-task", parents=[common], help="attributed walk counting regression")
    s.add_argument("graph", nargs="?", help="edge list; omit to sample a random regular graph")
    s.add_argument("--rrg-n", type=int, default=1000)
    s.add_argument("--rrg-d", type=int, default=6)
    s.add_argument("--length", type=int, default=4)
    s.add_argument("--train", type=float, default=300, help="train size (count, or fraction if < 1)")
    s.add_argument("--lam", type=float, default=1e-6)

    s = sub.add_parser("verify", parents=[common], help="run construction verifiers")
    s.add_argument("names", nargs="*")
    s.add_argument("--list", action="store_true")

    s = sub.add_parser("enumerate", parents=[common], help="exhaustive tree enumeration")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--K", type=int, required=True)
    s.add_argument("--q", type=_q_list, help="per-level feature-0 counts q_0,...,q_K (full m-ary trees)")
    s.add_argument("--full", action="store_true", help="full m-ary trees without a q constraint")

    s = sub.add_parser("sbm", parents=[common], help="SBM community detection benchmark")
    s.add_argument("action", nargs="?", choices=["bench"], default="bench")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--a", type=float)
    s.add_argument("--b", type=float)
    s.add_argument("--preset", choices=sorted(sbm.PRESETS))
    s.add_argument("--seeds", type=_seed_list, default=list(range(10)), help='count ("10") or list ("1,2")')
    s.add_argument("--omega", help='"A", "H", "SL" or an operator family')
    s.add_argument("--k", type=int, default=30, help="max power for named families")
    s.add_argument("--lr", type=float, default=0.1)
    s.add_argument("--epochs", type=int, default=500)
    s.add_argument("--l2", type=float, default=1e-4)

    s = sub.add_parser("babai", parents=[common], help="identifier vs degree-pair fingerprint sweep")
    s.add_argument("--n", type=int, default=30)
    s.add_argument("--graphs", type=int, default=500)

    s = sub.add_parser("constructions", parents=[common], help="list or verify named constructions")
    s.add_argument("action", choices=["list", "verify"])
    s.add_argument("names", nargs="*")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cmd = args.command
    cfg = RunConfig(cmd, output=args.output, seeds=[args.seed], features_removed=args.features_removed,
                    tower=args.tower)
    if cmd in ("wl-classes", "gamlp-classes"):
        cfg.inputs = list(args.inputs)
        cfg.options = {"scope": args.scope}
        if cmd == "wl-classes":
            cfg.K = args.K
        else:
            cfg.omega = args.omega
            cfg.options["mode"] = args.mode
    elif cmd == "fit-walk-task":
        cfg.inputs = [args.graph] if args.graph else []
        cfg.options = {"rrg_n": args.rrg_n, "rrg_d": args.rrg_d, "length": args.length,
                       "train": args.train if args.train < 1 else int(args.train), "lam": args.lam}
    elif cmd == "constructions":
        cfg.command = "verify"
        cfg.inputs = list(args.names)
        cfg.options = {"list": args.action == "list"}
    elif cmd == "verify":
        cfg.inputs = list(args.names)
        cfg.options = {"list": args.list}
    elif cmd == "enumerate":
        cfg.K = args.K
        cfg.options = {"m": args.m, "q": args.q, "full": args.full}
    elif cmd == "sbm":
        if args.preset:
            a, b = sbm.PRESETS[args.preset]
        elif args.a is not None and args.b is not None:
            a, b = args.a, args.b
        else:
            raise UsageError("sbm needs --preset or both --a and --b")
        cfg.seeds = args.seeds
        cfg.omega = args.omega
        cfg.K = args.k
        cfg.options = {"n": args.n, "a": a, "b": b, "lr": args.lr, "epochs": args.epochs, "l2": args.l2}
    elif cmd == "babai":
        cfg.options = {"n": args.n, "graphs": args.graphs}
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_USAGE
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except UsageError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except BudgetExceeded as e:
        sys.stderr.write(f"error: enumeration budget exceeded: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
