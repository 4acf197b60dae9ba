"""Command-line front end: generate graphs, build factorizations, solve
systems, run verification suites, and benchmark.

The CLI is a thin client over the library: argument parsing and file I/O
only.  `eulerlu serve` starts the HTTP service wrapping the same core.

Exit codes: 0 ok, 2 usage, 3 validation failure, 4 numerical failure.
JSON outputs are deterministic for identical argv + seed; wall-clock
measurements live under the "timing" key.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import warnings

import numpy as np

from . import errors, graph_io, oracle
from .generate import GraphSpec, generate
from .laplacian import validate
from .lu import LUFactorization, SolverConfig, eulerian_lu
from .rcdd import find_rcdd_block, is_alpha_rcdd
from .solver import solve_eulerian
from .elimination import EliminationStar, elimination_error_norm, single_vertex_elim

VALIDATION_ERRORS = (
    errors.NotEulerianError, errors.InvalidSpecError, errors.NotLaplacianError,
    errors.NegativeWeightError, errors.IndexOutOfRangeError,
    errors.DimensionMismatchError, errors.BudgetExceededError,
    errors.TooLargeError, errors.NotPsdError, errors.KernelMismatchError,
)


def _seed_of(args):
    env = os.environ.get("EULERLU_SEED")
    if env is not None:
        return int(env)
    return args.seed


def _write_text(path, text):
    # build the full payload first so errors never leave partial files
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _dump_json(payload, path=None):
    text = json.dumps(payload, sort_keys=True, indent=1) + "\n"
    if path:
        _write_text(path, text)
    else:
        sys.stdout.write(text)


def _solver_config(args, n=None):
    delta = args.delta
    if delta is None:
        delta = 1.0 / (n * n) if n else 1e-4
    return SolverConfig(
        eps=args.eps, failure_prob=delta, alpha=args.alpha,
        samples_per_elim=args.samples, budget_per_vertex=args.budget_per_vertex,
        mode=args.mode, sparsifier=args.sparsifier,
        max_iters=args.max_iters, tol=args.tol,
        keep_snapshots=args.keep_snapshots)


def _add_factor_flags(p):
    p.add_argument("--eps", type=float, default=0.25,
                   help="factorization quality target in (0, 0.5)")
    p.add_argument("--delta", type=float, default=None,
                   help="failure budget; default 1/n^2")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--mode", choices=("sampled", "exact"), default="sampled")
    p.add_argument("--sparsifier", choices=("exact", "sampler"), default="exact")
    p.add_argument("--samples", type=int, default=32,
                   help="clique samples averaged per elimination")
    p.add_argument("--budget-per-vertex", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--keep-snapshots", action="store_true", default=None)


def _parser():
    parser = argparse.ArgumentParser(
        prog="eulerlu",
        description="Sparse approximate LU preconditioners for Eulerian "
                    "directed Laplacians")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an Eulerian graph file")
    g.add_argument("--kind", default="permutation-sum",
                   choices=("cycle", "permutation-sum", "grid-circulation"))
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--edges", type=int, default=None, help="edge count target")
    g.add_argument("--weight-low", type=float, default=0.5)
    g.add_argument("--weight-high", type=float, default=2.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="edge-list path (.mtx for Matrix Market)")
    g.add_argument("--json-out", default=None)

    f = sub.add_parser("factor", help="build an approximate LU factorization")
    f.add_argument("--graph", required=True)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", required=True, help="factorization JSON path")
    f.add_argument("--json-out", default=None, help="stats JSON path")
    _add_factor_flags(f)

    s = sub.add_parser("solve", help="solve L x = b")
    s.add_argument("--graph", required=True)
    s.add_argument("--rhs", required=True, help="right-hand side, one value per line")
    s.add_argument("--factor", default=None, help="reuse a stored factorization")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--eps-solve", type=float, default=1e-8)
    s.add_argument("--out", required=True, help="solution path, one value per line")
    s.add_argument("--json-out", default=None)
    _add_factor_flags(s)

    c = sub.add_parser("check", help="run verification and diagnostic suites")
    c.add_argument("--suite", default="all",
                   choices=("appendix", "sve", "rcdd", "schur", "factorization", "all"))
    c.add_argument("--graph", default=None,
                   help="instance for the factorization suite")
    c.add_argument("--trials", type=int, default=100)
    c.add_argument("--n-max", type=int, default=12)
    c.add_argument("--seed", type=int, default=1)
    c.add_argument("--json-out", default=None)
    _add_factor_flags(c)

    b = sub.add_parser("bench", help="sweep sizes; CSV of build time and nnz")
    b.add_argument("--sizes", default="1024,2048,4096",
                   help="comma-separated vertex counts")
    b.add_argument("--edges-per-vertex", type=float, default=10.0)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--csv", required=True)
    b.add_argument("--solve-iters", type=int, default=50,
                   help="iteration cap for the per-size solve column")
    _add_factor_flags(b)

    v = sub.add_parser("serve", help="run the HTTP service")
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--port", type=int, default=8377)
    return parser


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_gen(args):
    seed = _seed_of(args)
    spec = GraphSpec(kind=args.kind, n=args.n, edge_target=args.edges,
                     weight_low=args.weight_low, weight_high=args.weight_high,
                     seed=seed)
    L = generate(spec)
    graph_io.save_graph(L, args.out)
    report = validate(L)
    payload = {
        "graph": args.out, "kind": args.kind, "n": L.n, "edges": L.edge_count,
        "seed": seed, "eulerian": report.eulerian,
        "strongly_connected": report.strongly_connected,
    }
    _dump_json(payload, args.json_out)
    return 0


def _cmd_factor(args):
    seed = _seed_of(args)
    L = graph_io.load_graph(args.graph)
    cfg = _solver_config(args, n=L.n)
    t0 = time.perf_counter()
    fact = eulerian_lu(L, cfg, rng=seed)
    build_seconds = time.perf_counter() - t0
    fact.save(args.out)
    payload = {
        "graph": args.graph, "factorization": args.out, "n": L.n,
        "seed": seed, "nnz_lower": fact.nnz_lower, "nnz_upper": fact.nnz_upper,
        "phases": fact.stats.phases,
        "resparsify_count": fact.stats.resparsify_count,
        "max_eulerian_defect": fact.stats.max_eulerian_defect,
        "pool_sizes": list(fact.stats.pool_sizes),
        "timing": {"build_seconds": build_seconds},
    }
    _dump_json(payload, args.json_out)
    return 0


def _cmd_solve(args):
    seed = _seed_of(args)
    L = graph_io.load_graph(args.graph)
    b = graph_io.read_vector(args.rhs)
    cfg = _solver_config(args, n=L.n)
    fact = LUFactorization.load(args.factor) if args.factor else None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        x, report = solve_eulerian(L, b, eps_solve=args.eps_solve, cfg=cfg,
                                   rng=seed, factorization=fact)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    graph_io.write_vector(x, args.out)
    payload = {
        "graph": args.graph, "solution": args.out, "n": L.n, "seed": seed,
        "iterations": report.iterations, "converged": report.converged,
        "certified": report.certified, "projected_rhs": report.projected_rhs,
        "final_rel_error": report.final_rel_error,
        "contraction_median": report.contraction_median,
        "residual_l2": list(report.residual_l2),
        "timing": {"solve_seconds": report.wall_seconds},
    }
    _dump_json(payload, args.json_out)
    return 0


def _check_appendix(args):
    rep = oracle.verify_matrix_facts(trials=args.trials, n_max=args.n_max,
                                     seed=args.seed)
    return {
        "passed": rep.all_passed,
        "checks": {c.name: {"trials": c.trials, "failures": c.failures,
                            "worst": c.worst} for c in rep.checks},
    }


def _check_sve(args):
    rng = np.random.default_rng(args.seed)
    worst_norm = 0.0
    worst_row = 0.0
    trials = max(args.trials, 1)
    for _ in range(trials):
        k = int(rng.integers(2, 9))
        li = rng.uniform(0.1, 2.0, size=k)
        ro = rng.uniform(0.1, 2.0, size=k)
        ro *= li.sum() / ro.sum()
        star = EliminationStar.from_dicts(
            {i: float(w) for i, w in enumerate(li)},
            {i: float(w) for i, w in enumerate(ro)}, tol=1e-9)
        sample = single_vertex_elim(star, rng)
        a = sample.dense()
        worst_row = max(worst_row,
                        float(np.abs(a.sum(1) - star.in_weights).max()),
                        float(np.abs(a.sum(0) - star.out_weights).max()))
        worst_norm = max(worst_norm, elimination_error_norm(star, sample))
    return {
        "passed": worst_norm <= 4.0 + 1e-9 and worst_row <= 1e-9,
        "trials": trials, "worst_local_norm": worst_norm,
        "worst_marginal_defect": worst_row,
    }


def _check_rcdd(args):
    from .generate import random_eulerian
    rng = np.random.default_rng(args.seed)
    sizes = []
    ok = True
    trials = max(args.trials // 10, 3)
    for t in range(trials):
        n = int(rng.integers(32, 200))
        L = random_eulerian(n, edge_target=6 * n, seed=args.seed + t)
        block = find_rcdd_block(L, 0.1, rng)
        ok = ok and is_alpha_rcdd(L, block, 0.1) and len(block) >= n / (16 * 1.1)
        sizes.append(len(block) / n)
    return {"passed": ok, "trials": trials,
            "mean_block_fraction": float(np.mean(sizes))}


def _check_schur(args):
    from .generate import random_eulerian
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    trials = max(args.trials // 10, 3)
    for t in range(trials):
        n = int(rng.integers(20, 80))
        L = random_eulerian(n, edge_target=5 * n, seed=args.seed + 1000 + t)
        block = find_rcdd_block(L, 0.1, rng)
        ld = L.to_dense()
        half = oracle.pinv_sqrt((ld + ld.T) / 2.0)
        for _ in range(5):
            sub = rng.choice(block, size=int(rng.integers(1, len(block) + 1)),
                             replace=False)
            us = oracle.schur_complement(ld, sub)
            us = (us + us.T) / 2.0
            worst = max(worst, float(np.linalg.eigvalsh(half @ us @ half).max()))
    bound = 3.0 + 2.0 / 0.1
    return {"passed": worst <= bound + 1e-8, "trials": trials,
            "worst_blowup": worst, "bound": bound}


def _check_factorization(args, seed):
    if args.graph:
        L = graph_io.load_graph(args.graph)
    else:
        from .generate import random_eulerian
        L = random_eulerian(64, edge_target=8 * 64, seed=seed)
    cfg = _solver_config(args, n=L.n)
    fact = eulerian_lu(L, cfg, rng=seed)
    diag = oracle.diagnose_factorization(
        L.to_dense(), fact.product_dense(), fact.certificate_matrix())
    return {
        "passed": diag.eps <= 1.0 and diag.gamma > 0.0,
        "n": L.n, "eps": diag.eps, "gamma": diag.gamma,
        "ratio_lower": diag.ratio_lower, "ratio_upper": diag.ratio_upper,
        "max_eulerian_defect": fact.stats.max_eulerian_defect,
    }


def _cmd_check(args):
    seed = _seed_of(args)
    suites = {}
    wanted = ("appendix", "sve", "rcdd", "schur", "factorization") \
        if args.suite == "all" else (args.suite,)
    t0 = time.perf_counter()
    if "appendix" in wanted:
        suites["appendix"] = _check_appendix(args)
    if "sve" in wanted:
        suites["sve"] = _check_sve(args)
    if "rcdd" in wanted:
        suites["rcdd"] = _check_rcdd(args)
    if "schur" in wanted:
        suites["schur"] = _check_schur(args)
    if "factorization" in wanted:
        suites["factorization"] = _check_factorization(args, seed)
    payload = {
        "passed": all(s["passed"] for s in suites.values()),
        "suites": suites, "seed": seed,
        "timing": {"seconds": time.perf_counter() - t0},
    }
    _dump_json(payload, args.json_out)
    return 0 if payload["passed"] else 4


def _cmd_bench(args):
    from .generate import random_eulerian
    seed = _seed_of(args)
    sizes = [int(s) for s in args.sizes.split(",") if s]
    rows = ["n,m,build_seconds,nnz_lower,nnz_upper,phases,resparsifies,"
            "solve_iterations,solve_seconds"]
    for i, n in enumerate(sizes):
        L = random_eulerian(n, edge_target=int(args.edges_per_vertex * n),
                            seed=seed + i)
        cfg = _solver_config(args, n=n)
        t0 = time.perf_counter()
        fact = eulerian_lu(L, cfg, rng=seed + i)
        build = time.perf_counter() - t0
        rng = np.random.default_rng(seed + i)
        b = rng.normal(size=n)
        b -= b.mean()
        solve_cfg_fields = {**cfg.__dict__, "max_iters": args.solve_iters}
        solve_cfg = SolverConfig(**solve_cfg_fields)
        t0 = time.perf_counter()
        try:
            _, rep = solve_eulerian(L, b, eps_solve=1e-6, cfg=solve_cfg,
                                    factorization=fact)
            iters = rep.iterations
        except errors.NotConvergedError as exc:
            iters = exc.report.iterations
        solve_seconds = time.perf_counter() - t0
        rows.append(f"{n},{L.edge_count},{build:.6f},{fact.nnz_lower},"
                    f"{fact.nnz_upper},{fact.stats.phases},"
                    f"{fact.stats.resparsify_count},{iters},{solve_seconds:.6f}")
        print(f"n={n} build={build:.2f}s iters={iters}", file=sys.stderr)
    _write_text(args.csv, "\n".join(rows) + "\n")
    return 0


def _cmd_serve(args):
    import uvicorn
    from .service import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def main(argv=None):
    parser = _parser()
    args = parser.parse_args(argv)
    handlers = {
        "gen": _cmd_gen, "factor": _cmd_factor, "solve": _cmd_solve,
        "check": _cmd_check, "bench": _cmd_bench, "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except VALIDATION_ERRORS as exc:
        _dump_json({"error": type(exc).__name__, "detail": str(exc)})
        return 3
    except errors.EulerLUError as exc:
        _dump_json({"error": type(exc).__name__, "detail": str(exc)})
        return 4
    except FileNotFoundError as exc:
        _dump_json({"error": "FileNotFound", "detail": str(exc)})
        return 3
    except ValueError as exc:
        # bad parameter combinations (eps/delta ranges, modes)
        _dump_json({"error": "UsageError", "detail": str(exc)})
        return 2


if __name__ == "__main__":
    sys.exit(main())
