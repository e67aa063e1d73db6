"""Command-line experiment runner.

Subcommands:

* ``run``: seeded replications of one algorithm on one benchmark, raw and
  aggregate CSV output plus a JSON config echo.
* ``nll``: held-out negative-log-likelihood comparison of the Kendall and
  Mallows surrogates across training sizes.
* ``solve-qap``: standalone multi-restart (or exact) solve of a QAPLIB file.

Benchmarks are addressed by URI: ``synthetic:d=6[,noise=0.1]``,
``qaplib:PATH``, ``tsplib:PATH[,subset=K]`` and, for ``nll`` only,
``gpdraw:d=10[,l=0.1][,noise=0.1]`` (data drawn jointly from a Mallows-GP
prior). Replications run in parallel under ``--jobs``; rows are always
emitted in replication order so outputs are reproducible byte-for-byte
apart from the timing column.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .benchmarks import (
    QapInstance,
    SyntheticObjective,
    TspInstance,
    parse_qaplib,
    parse_tsplib,
    qap_objective,
    synthetic_objective,
    tsp_tour_length,
)
from .engine import ALGORITHMS, BoConfig, run_algorithm
from .gp import fit, sample_gp_prior, test_nll
from .kernels import KENDALL, MALLOWS, KernelSpec
from .optimizers import BRUTE_FORCE_MAX_D, SearchBudget, brute_force_argmin, multi_restart_argmin
from .perm import Permutation, random_permutation

RAW_HEADER = ["rep", "phase", "iter", "permutation", "value", "best_so_far", "seconds"]
AGG_HEADER = ["iter", "mean_best", "stderr_best", "median_best"]
NLL_HEADER = ["kernel", "train_size", "replication", "nll"]


class BenchmarkError(ValueError):
    """Malformed or unknown benchmark URI (a usage error)."""


@dataclass(frozen=True)
class Benchmark:
    uri: str
    kind: str
    d: int
    synth: SyntheticObjective | None = None
    qap: QapInstance | None = None
    tsp: TspInstance | None = None
    gp_lengthscale: float = 0.1
    gp_noise_sd: float = 0.1


def _parse_options(rest: str) -> dict[str, str]:
    opts: dict[str, str] = {}
    for part in rest.split(","):
        if not part:
            continue
        key, sep, value = part.partition("=")
        if not sep:
            raise BenchmarkError(f"malformed benchmark option {part!r}")
        opts[key.strip()] = value.strip()
    return opts


def parse_benchmark(uri: str, seed: int) -> Benchmark:
    """Resolve a benchmark URI; the synthetic target is derived from the seed."""
    kind, sep, rest = uri.partition(":")
    if not sep:
        raise BenchmarkError(f"benchmark URI needs a scheme, got {uri!r}")
    if kind == "synthetic":
        opts = _parse_options(rest)
        try:
            d = int(opts["d"])
        except KeyError:
            raise BenchmarkError("synthetic benchmark needs d=<int>") from None
        noise = float(opts.get("noise", "0"))
        target = random_permutation(d, np.random.default_rng(np.random.SeedSequence([seed, 0x7A26])))
        synth = SyntheticObjective(target=target, weights=1.0, noise_sd=noise)
        return Benchmark(uri=uri, kind=kind, d=d, synth=synth)
    if kind == "qaplib":
        path, _, tail = rest.partition(",")
        if tail:
            raise BenchmarkError(f"unexpected qaplib options {tail!r}")
        inst = parse_qaplib(Path(path).read_text())
        return Benchmark(uri=uri, kind=kind, d=inst.n, qap=inst)
    if kind == "tsplib":
        path, _, tail = rest.partition(",")
        opts = _parse_options(tail) if tail else {}
        subset = int(opts["subset"]) if "subset" in opts else None
        inst = parse_tsplib(Path(path).read_text(), subset=subset)
        return Benchmark(uri=uri, kind=kind, d=inst.n, tsp=inst)
    if kind == "gpdraw":
        opts = _parse_options(rest)
        try:
            d = int(opts["d"])
        except KeyError:
            raise BenchmarkError("gpdraw benchmark needs d=<int>") from None
        return Benchmark(
            uri=uri,
            kind=kind,
            d=d,
            gp_lengthscale=float(opts.get("l", "0.1")),
            gp_noise_sd=float(opts.get("noise", "0.1")),
        )
    raise BenchmarkError(f"unknown benchmark scheme {kind!r}")


def make_objective(bench: Benchmark, rng: np.random.Generator):
    """Pointwise objective for a benchmark; rng feeds synthetic observation noise."""
    if bench.kind == "synthetic":
        return lambda p: synthetic_objective(bench.synth, p, rng)
    if bench.kind == "qaplib":
        return lambda p: qap_objective(bench.qap, p)
    if bench.kind == "tsplib":
        return lambda p: tsp_tour_length(bench.tsp, p)
    raise BenchmarkError(f"benchmark {bench.uri!r} has no pointwise objective")


# --- run ----------------------------------------------------------------------


def _rep_seeds(seed: int, rep: int) -> tuple[np.random.Generator, np.random.Generator]:
    algo_ss, obj_ss = np.random.SeedSequence([seed, rep]).spawn(2)
    return np.random.default_rng(algo_ss), np.random.default_rng(obj_ss)


def run_one_rep(
    uri: str,
    algo: str,
    d_check: int,
    n_iters: int,
    n_init: int,
    restarts: int,
    seed: int,
    rep: int,
) -> list[list]:
    """One replication -> raw CSV rows. Standalone so worker processes can call it."""
    bench = parse_benchmark(uri, seed)
    if bench.d != d_check:
        raise BenchmarkError(f"benchmark dimension changed between processes: {bench.d} vs {d_check}")
    algo_rng, obj_rng = _rep_seeds(seed, rep)
    cfg = BoConfig(
        algorithm=algo,
        d=bench.d,
        n_iters=n_iters,
        n_init=n_init,
        budget=SearchBudget(restarts=restarts),
        seed=seed,
    )
    trace = run_algorithm(cfg, make_objective(bench, obj_rng), algo_rng)
    return [
        [rep, r.phase, r.index, r.perm.serialize(), repr(r.value), repr(r.best), repr(r.seconds)]
        for r in trace.records
    ]


def run_experiment(
    uri: str,
    algo: str,
    n_iters: int,
    n_init: int,
    reps: int,
    restarts: int,
    seed: int,
    jobs: int = 1,
) -> tuple[list[list], list[list]]:
    """All replications -> (raw rows, aggregate rows), deterministic given seed."""
    bench = parse_benchmark(uri, seed)
    make_objective(bench, np.random.default_rng(0))  # fail fast on non-runnable URIs
    args = [
        (uri, algo, bench.d, n_iters, n_init, restarts, seed, rep) for rep in range(reps)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_rep = list(pool.map(run_one_rep, *zip(*args)))
    else:
        per_rep = [run_one_rep(*a) for a in args]

    raw = [row for rows in per_rep for row in rows]
    n_records = n_init + n_iters
    best = np.array(
        [[float(row[5]) for row in rows] for rows in per_rep]
    )  # (reps, n_records)
    agg = []
    for it in range(n_records):
        col = best[:, it]
        stderr = float(np.std(col, ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0
        agg.append([it, repr(float(np.mean(col))), repr(stderr), repr(float(np.median(col)))])
    return raw, agg


# --- nll ------------------------------------------------------------------------


def _nll_dataset(
    bench: Benchmark,
    train_size: int,
    n_test_sets: int,
    test_size: int,
    rng: np.random.Generator,
):
    total = train_size + n_test_sets * test_size
    perms = [random_permutation(bench.d, rng) for _ in range(total)]
    if bench.kind == "gpdraw":
        prior = KernelSpec(MALLOWS, lengthscale=bench.gp_lengthscale)
        latent = sample_gp_prior(prior, perms, rng)
        ys = latent + bench.gp_noise_sd * rng.standard_normal(total)
    else:
        objective = make_objective(bench, rng)
        ys = np.array([objective(p) for p in perms])
    train = perms[:train_size], ys[:train_size]
    tests = []
    for k in range(n_test_sets):
        lo = train_size + k * test_size
        tests.append((perms[lo : lo + test_size], ys[lo : lo + test_size]))
    return train, tests


def nll_experiment(
    uri: str,
    train_sizes: list[int],
    reps: int,
    seed: int,
    n_test_sets: int = 10,
    test_size: int = 50,
) -> list[list]:
    """Median held-out NLL rows: one per (train size, replication, kernel family)."""
    bench = parse_benchmark(uri, seed)
    rows = []
    for size in train_sizes:
        for rep in range(reps):
            rng = np.random.default_rng(np.random.SeedSequence([seed, size, rep]))
            (train_x, train_y), tests = _nll_dataset(
                bench, size, n_test_sets, test_size, rng
            )
            for family in (KENDALL, MALLOWS):
                model = fit(KernelSpec(family), train_x, train_y)
                nlls = [test_nll(model, tx, ty) for tx, ty in tests]
                rows.append([family, size, rep, repr(float(np.median(nlls)))])
    return rows


# --- output helpers ---------------------------------------------------------------


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_config(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- commands ----------------------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> int:
    raw, agg = run_experiment(
        args.benchmark,
        args.algo,
        args.iters,
        args.init,
        args.reps,
        args.restarts,
        args.seed,
        args.jobs,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "raw.csv", RAW_HEADER, raw)
    _write_csv(out / "aggregate.csv", AGG_HEADER, agg)
    _write_config(
        out / "config.json",
        {
            "command": "run",
            "benchmark": args.benchmark,
            "algo": args.algo,
            "iters": args.iters,
            "init": args.init,
            "reps": args.reps,
            "restarts": args.restarts,
            "seed": args.seed,
            "jobs": args.jobs,
        },
    )
    print(f"wrote {out / 'raw.csv'} ({len(raw)} rows) and {out / 'aggregate.csv'}")
    return 0


def cmd_nll(args: argparse.Namespace) -> int:
    train_sizes = [int(tok) for tok in args.train_sizes.split(",") if tok]
    if not train_sizes:
        raise BenchmarkError("need at least one training size")
    rows = nll_experiment(
        args.benchmark,
        train_sizes,
        args.reps,
        args.seed,
        n_test_sets=args.test_sets,
        test_size=args.test_size,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "nll.csv", NLL_HEADER, rows)
    _write_config(
        out / "config.json",
        {
            "command": "nll",
            "benchmark": args.benchmark,
            "train_sizes": train_sizes,
            "reps": args.reps,
            "test_sets": args.test_sets,
            "test_size": args.test_size,
            "seed": args.seed,
        },
    )
    print(f"wrote {out / 'nll.csv'} ({len(rows)} rows)")
    return 0


def cmd_solve_qap(args: argparse.Namespace) -> int:
    inst = parse_qaplib(Path(args.path).read_text())

    def objective(p: Permutation) -> float:
        return qap_objective(inst, p)

    if args.exact:
        if inst.n > BRUTE_FORCE_MAX_D:
            raise BenchmarkError(f"--exact requires n <= {BRUTE_FORCE_MAX_D}, instance has n={inst.n}")
        best, value = brute_force_argmin(objective, inst.n)
    else:
        rng = np.random.default_rng(args.seed)
        best, value = multi_restart_argmin(
            objective, inst.n, SearchBudget(restarts=args.restarts), rng
        )
    print(f"{best.serialize()} {value!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="permbo", description="Bayesian optimization over permutation spaces"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run seeded replications of one algorithm")
    p_run.add_argument("--benchmark", required=True, help="synthetic:d=N[,noise=S] | qaplib:PATH | tsplib:PATH[,subset=K]")
    p_run.add_argument("--algo", required=True, choices=ALGORITHMS)
    p_run.add_argument("--iters", type=int, required=True)
    p_run.add_argument("--init", type=int, default=20)
    p_run.add_argument("--reps", type=int, default=20)
    p_run.add_argument("--restarts", type=int, default=10)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--out", required=True)
    p_run.set_defaults(func=cmd_run)

    p_nll = sub.add_parser("nll", help="surrogate NLL comparison on held-out sets")
    p_nll.add_argument("--benchmark", required=True)
    p_nll.add_argument("--train-sizes", default="20,40,60")
    p_nll.add_argument("--reps", type=int, default=10)
    p_nll.add_argument("--test-sets", type=int, default=10)
    p_nll.add_argument("--test-size", type=int, default=50)
    p_nll.add_argument("--seed", type=int, default=0)
    p_nll.add_argument("--out", required=True)
    p_nll.set_defaults(func=cmd_nll)

    p_solve = sub.add_parser("solve-qap", help="solve one QAPLIB instance")
    p_solve.add_argument("path")
    p_solve.add_argument("--restarts", type=int, default=10)
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--exact", action="store_true")
    p_solve.set_defaults(func=cmd_solve_qap)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BenchmarkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
