"""Command-line interface: learn, simulate and oracle-check."""

from __future__ import annotations

import argparse
import json
import os
import sys
import zlib
from pathlib import Path

import numpy as np

from .ci import DataCi, OracleCi
from .clustering import Partition
from .dataset import DataError, load_csv, write_csv
from .eval import compare
from .graph import (
    PDAG,
    GraphError,
    cpdag_of_dag,
    detect_vstructures_from_sepsets,
    pdag_to_dag,
    random_dag,
)
from .path import path_select
from .search import TabuConfig, gsc, hgi_hc, hill_climb, phgs
from .simulate import BayesNet, builtin, merge_states, permute_columns, sample, tile
from .skeleton import pc, ppc
from .stats import CallCounter, ScoreCache, bic_lambda

ALGOS = ("pc", "ppc", "pc-path", "ppc-path", "hc", "gsc", "hgi-hc", "phgs")
PATH_ALGOS = {"pc", "ppc", "pc-path", "ppc-path"}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def derive_seed(seed: int, *key) -> np.random.SeedSequence:
    """Seed for one (component, purpose, index) slot of the run's random namespace."""
    words = [zlib.crc32(str(k).encode()) if not isinstance(k, int) else k for k in key]
    return np.random.SeedSequence(entropy=seed, spawn_key=tuple(words))


def _default_seed() -> int:
    env = os.environ.get("CS_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise ConfigError(f"CS_SEED must be an integer, got {env!r}") from exc


def _parse_lambda(text: str, n: int) -> float:
    if text == "bic":
        return bic_lambda(n)
    val = text.split(":", 1)[1] if text.startswith("fixed:") else text
    try:
        lam = float(val)
    except ValueError as exc:
        raise ConfigError(f"--lambda must be 'bic', 'fixed:<value>' or a number, got {text!r}") from exc
    if lam < 0:
        raise ConfigError("--lambda must be non-negative")
    return lam


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _load_net(name: str) -> BayesNet:
    if Path(name).is_file():
        return BayesNet.load(name)
    try:
        return builtin(name)
    except KeyError as exc:
        raise FileNotFoundError(f"no network file or built-in named {name!r}") from exc


def cmd_learn(args) -> int:
    if args.alpha is not None and not 0 < args.alpha < 1:
        raise ConfigError("--alpha must be in (0, 1)")
    if args.tau < 1 or args.t0 < 0 or args.t1 < 0 or args.threads < 1:
        raise ConfigError("--tau and --threads must be >= 1; --t0/--t1 >= 0")
    if args.m is not None and args.m < 0:
        raise ConfigError("--m must be >= 0")
    alpha = args.alpha if args.alpha is not None else (0.1 if args.algo in PATH_ALGOS else 0.05)
    seed = args.seed if args.seed is not None else _default_seed()
    data = load_csv(args.data, has_header=not args.no_header)
    truth = None
    if args.truth:
        try:
            truth = BayesNet.load(args.truth)
        except (OSError, ValueError, GraphError) as exc:
            raise DataError(f"cannot load truth network: {exc}") from exc
        if truth.p != data.p:
            raise DataError(f"truth has {truth.p} nodes but data has {data.p} columns")
    lam = _parse_lambda(args.lam, data.n)
    tabu = TabuConfig(args.t0, args.t1)
    counter = CallCounter()
    cache = ScoreCache()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = None
    algo = args.algo
    if algo == "phgs":
        res = phgs(data, alpha, args.tau, args.alpha_min, args.m, lam, tabu,
                   derive_seed(seed, "path", "extension", 0), args.threads, counter)
        est, path = res.dag, res.path
    elif algo == "hc":
        est = hill_climb(data, None, None, lam, tabu, cache, counter)
    else:
        ci = DataCi(data, alpha, counter)
        if algo.startswith("pc"):
            sk = pc(ci, data, args.m, args.threads)
        else:
            sk = ppc(ci, data, args.m, threads=args.threads)
        if algo in ("pc", "ppc"):
            est = sk.cpdag
        elif algo.endswith("-path"):
            path = path_select(sk.record, data, sk.skeleton, args.tau, args.alpha_min, lam=lam,
                               cache=cache, counter=counter, seed=derive_seed(seed, "path", "extension", 0))
            est = path.best
        elif algo == "gsc":
            est = gsc(data, sk.skeleton, lam, tabu, cache, counter)
        else:
            vs = detect_vstructures_from_sepsets(sk.skeleton, sk.record, alpha)
            est = hgi_hc(data, sk.skeleton, vs, lam, tabu, cache, counter)
    _write(out / "estimate.edges", est.to_edgelist())
    if path is not None:
        _write(out / "path.json", path.dumps())
    _write(out / "calls.json", _dump(counter.as_dict()))
    if truth is not None:
        rep = compare(est, truth.dag, counter)
        _write(out / "report.json", rep.dumps())
        _write(out / "report.tsv", rep.tsv_header() + rep.tsv_row())
    print(f"{algo}: {est.n_edges} edges written to {out}")
    return 0


def cmd_simulate(args) -> int:
    if args.n < 1 or args.copies < 1 or args.reps < 1:
        raise ConfigError("--n, --copies and --reps must be >= 1")
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        bn = _load_net(args.net)
    except (ValueError, GraphError) as exc:
        raise DataError(f"malformed network: {exc}") from exc
    bn = tile(bn, args.copies, derive_seed(seed, "simulate", "tile", 0))
    if args.max_levels:
        bn = merge_states(bn, args.max_levels, derive_seed(seed, "simulate", "merge", 0))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for r in range(args.reps):
        suffix = "" if args.reps == 1 else f"_{r + 1:03d}"
        data = sample(bn, args.n, derive_seed(seed, "simulate", "sample", r))
        net = bn
        if args.permute:
            data, net, _ = permute_columns(data, bn, derive_seed(seed, "simulate", "permute", r))
        write_csv(data, out / f"data{suffix}.csv")
        net.save(out / f"net{suffix}.json")
    print(f"wrote {args.reps} dataset(s) with p={bn.p}, n={args.n} to {out}")
    return 0


def _oracle_case(dag: PDAG, rng: np.random.Generator) -> list[str]:
    """Oracle checks for one DAG; returns the names of failed checks."""
    p = dag.p
    truth = cpdag_of_dag(dag)
    k = int(rng.integers(1, p + 1))
    raw = rng.integers(0, k, size=p)
    relabel = {c: i for i, c in enumerate(sorted(set(raw.tolist())))}
    labels = [relabel[c] for c in raw.tolist()]
    failed = []
    res = ppc(OracleCi(dag), m=None, partition=Partition(labels, len(relabel), set()))
    if res.cpdag != truth:
        failed.append("ppc")
    ext = pdag_to_dag(truth)
    if ext is None or cpdag_of_dag(ext) != truth:
        failed.append("extension")
    return failed


def cmd_oracle_check(args) -> int:
    if args.reps < 0 or not 2 <= args.pmin <= args.pmax:
        raise ConfigError("--reps must be >= 0 and 2 <= --pmin <= --pmax")
    seed = args.seed if args.seed is not None else _default_seed()
    cases = []
    if args.net:
        try:
            cases.append(BayesNet.load(args.net).dag)
        except (OSError, ValueError, GraphError) as exc:
            raise DataError(f"malformed network: {exc}") from exc
    for r in range(args.reps):
        rng = np.random.default_rng(derive_seed(seed, "oracle", "dag", r))
        p = int(rng.integers(args.pmin, args.pmax + 1))
        cases.append(random_dag(p, args.edge_prob, rng))
    failures = []
    for r, dag in enumerate(cases):
        rng = np.random.default_rng(derive_seed(seed, "oracle", "partition", r))
        bad = _oracle_case(dag, rng)
        if bad:
            failures.append({"case": r, "failed": bad, "edges": dag.to_edgelist()})
    total = len(cases)
    passed = total - len(failures)
    rate = 1.0 if total == 0 else passed / total
    summary = {"cases": total, "passed": passed, "pass_rate": rate, "failures": failures}
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        _write(Path(args.out) / "oracle.json", _dump(summary))
    print(f"oracle-check: {passed}/{total} passed ({100 * rate:.1f}%)")
    return 0 if passed == total else 3


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="phgs", description="Partitioned hybrid structure learning for discrete data.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    lp = sub.add_parser("learn", help="learn a structure from a CSV dataset")
    lp.add_argument("--algo", choices=ALGOS, default="phgs")
    lp.add_argument("--data", required=True)
    lp.add_argument("--no-header", action="store_true", help="the CSV has no header row")
    lp.add_argument("--truth", help="true network JSON for evaluation")
    lp.add_argument("--out", required=True)
    lp.add_argument("--alpha", type=float, default=None,
                    help="test threshold (default 0.05 for hybrid methods, 0.1 for PC-type)")
    lp.add_argument("--m", type=int, default=3, help="maximum conditioning set size")
    lp.add_argument("--tau", type=int, default=10)
    lp.add_argument("--alpha-min", type=float, default=1e-5)
    lp.add_argument("--lambda", dest="lam", default="bic", help="'bic', 'fixed:<value>' or a number")
    lp.add_argument("--t0", type=int, default=100)
    lp.add_argument("--t1", type=int, default=100)
    lp.add_argument("--seed", type=int, default=None, help="defaults to $CS_SEED, then 0")
    lp.add_argument("--threads", type=int, default=1)
    lp.set_defaults(func=cmd_learn)

    sp = sub.add_parser("simulate", help="tile, merge and sample a network")
    sp.add_argument("--net", required=True, help="network JSON or built-in name (asia, cancer, random10)")
    sp.add_argument("--copies", type=int, default=1)
    sp.add_argument("--max-levels", type=int, default=8)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--reps", type=int, default=1)
    sp.add_argument("--permute", action="store_true", help="randomly permute columns")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_simulate)

    op = sub.add_parser("oracle-check", help="run the d-separation oracle suite")
    op.add_argument("--reps", type=int, default=200)
    op.add_argument("--pmin", type=int, default=4)
    op.add_argument("--pmax", type=int, default=8)
    op.add_argument("--edge-prob", type=float, default=0.3)
    op.add_argument("--net", help="also check this network JSON")
    op.add_argument("--seed", type=int, default=None)
    op.add_argument("--out")
    op.set_defaults(func=cmd_oracle_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"phgs: config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, FileNotFoundError) as exc:
        print(f"phgs: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
