"""Command line interface.

    specpart --input graph.mtx --parts K [options]
    specpart gen grid2d 64 64 --out g.mtx
    specpart sweep --input graph.mtx --parts K --tolerances 1e-2,1e-3 --out table.csv

Exit codes: 0 success, 2 parse error, 3 solver breakdown, 4 infeasible config.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .eigensolver import Breakdown
from .graph import (
    MatrixMarketError,
    largest_connected_component,
    read_matrix_market,
    symmetrize,
    write_matrix_market,
    write_partition,
)
from .harness import GeneratorSpec, generate, run_sweep, sweep_configs, write_table
from .laplacian import DegenerateDegreeError
from .partitioner import InfeasiblePartsError
from .pipeline import RunConfig, run

log = logging.getLogger("specpart")

EXIT_OK, EXIT_PARSE, EXIT_BREAKDOWN, EXIT_INFEASIBLE = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _threads(value):
    if value is None:
        value = os.environ.get("SPECPART_THREADS")
    return int(value) if value else None


def _thread_limit(n):
    if not n:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _load_graph(path):
    """Read, symmetrize and keep the largest component."""
    G = symmetrize(read_matrix_market(path))
    H, ids = largest_connected_component(G)
    return H, ids, G.n - H.n


def _add_run_options(p):
    p.add_argument("--parts", "-k", type=int, required=True, help="number of parts K")
    p.add_argument("--problem", default="auto", choices=["auto", "combinatorial", "generalized", "normalized"])
    p.add_argument("--precond", default="auto", choices=["auto", "jacobi", "polynomial", "amg", "none"])
    p.add_argument("--tolerance", type=float, default=None, help="LOBPCG tolerance (default: by graph class)")
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.01, help="allowed imbalance")
    p.add_argument("--threads", type=int, default=None, help="BLAS threads (env SPECPART_THREADS)")
    p.add_argument("--doubled-cut", action="store_true", help="count each cut edge twice")
    p.add_argument("--init", default="auto", choices=["auto", "random", "piecewise"])
    p.add_argument("--poly-degree", type=int, default=25)


def run_parser():
    p = _Parser(prog="specpart", description="Spectral graph partitioning.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--input", "-i", required=True, help="Matrix Market graph")
    _add_run_options(p)
    p.add_argument("--initial-vectors", help="whitespace-delimited n x d starting block")
    p.add_argument("--output", "-o", help="partition file (default: stdout)")
    p.add_argument("--report", help="JSON run report")
    p.add_argument("--plot-dir", help="write embedding and convergence figures here")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def gen_parser():
    p = _Parser(prog="specpart gen", description="Write a synthetic graph as Matrix Market.")
    p.add_argument("kind", choices=["grid2d", "stencil3d", "ring", "path", "random-regular", "scale-free"])
    p.add_argument("dims", nargs="+", type=int)
    p.add_argument("--points", type=int, default=27, choices=[7, 27], help="stencil3d neighbourhood")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", "-o", help="output file (default: stdout)")
    return p


def sweep_parser():
    p = _Parser(prog="specpart sweep", description="Cross product of solver settings on one graph.")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--parts", "-k", type=int, required=True)
    p.add_argument("--tolerances", default="auto", help="comma list, e.g. 1e-2,1e-3")
    p.add_argument("--preconds", default="auto", help="comma list of auto,jacobi,polynomial,amg,none")
    p.add_argument("--problems", default="auto", help="comma list of auto,combinatorial,generalized,normalized")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--no-timings", action="store_true", help="omit timing columns")
    p.add_argument("--out", "-o", help="table file (default: stdout)")
    p.add_argument("--figure", help="trend figure (png/pdf)")
    return p


def _open_out(path):
    return open(path, "w", encoding="utf-8", newline="\n") if path else nullcontext(sys.stdout)


def cmd_run(args) -> int:
    G, ids, dropped = _load_graph(args.input)
    X0 = np.loadtxt(args.initial_vectors, ndmin=2) if args.initial_vectors else None
    cfg = RunConfig(
        K=args.parts,
        problem=args.problem,
        precond=args.precond,
        tol=args.tolerance,
        max_iters=args.max_iters,
        seed=args.seed,
        epsilon=args.epsilon,
        doubled_cut=args.doubled_cut,
        init=args.init,
        poly_degree=args.poly_degree,
        initial_vectors=X0,
    )
    threads = _threads(args.threads)
    with _thread_limit(threads):
        result = run(G, cfg)
    rep = result.report
    rep.dropped_vertices = dropped
    if dropped:
        rep.warnings.append(f"input disconnected: kept largest component, dropped {dropped} vertices")
    for w in rep.warnings:
        log.warning(w)

    with _open_out(args.output) as fh:
        write_partition(fh, result.partition.assignment, ids)
    if args.report:
        doc = rep.to_dict()
        doc["threads"] = threads
        doc["input"] = str(args.input)
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.plot_dir:
        from .plotting import plot_convergence, plot_embedding

        out = Path(args.plot_dir)
        plot_embedding(result.embedding.coords, result.partition.assignment, out / "embedding.png",
                       title=f"K={cfg.K}, cut={rep.cutsize:g}")
        plot_convergence(result.eigen.history, out / "convergence.png", result.eigen.threshold)
    log.info("cutsize %g, imbalance %.4f, %d iterations", rep.cutsize, rep.imbalance, rep.iterations)
    return EXIT_OK


def cmd_gen(args) -> int:
    kind = args.kind.replace("-", "_")
    G = generate(GeneratorSpec(kind, tuple(args.dims), points=args.points, seed=args.seed))
    with _open_out(args.out) as fh:
        write_matrix_market(G, fh)
    return EXIT_OK


def _csv(text, conv=str):
    return [conv(t) for t in text.split(",") if t]


def cmd_sweep(args) -> int:
    G, _, _ = _load_graph(args.input)
    tols = [None] if args.tolerances == "auto" else _csv(args.tolerances, float)
    configs = sweep_configs(
        args.parts,
        tolerances=tols,
        preconds=_csv(args.preconds),
        problems=_csv(args.problems),
        seed=args.seed,
        max_iters=args.max_iters,
    )
    with _thread_limit(_threads(args.threads)):
        rows = run_sweep({Path(args.input).stem: G}, configs)
    with _open_out(args.out) as fh:
        write_table(rows, fh, delimiter=args.delimiter, timings=not args.no_timings)
    if args.figure:
        from .plotting import plot_sweep

        plot_sweep(rows, args.figure)
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] in ("gen", "sweep"):
        parser = gen_parser() if argv[0] == "gen" else sweep_parser()
        command = cmd_gen if argv[0] == "gen" else cmd_sweep
        argv = argv[1:]
    else:
        parser, command = run_parser(), cmd_run
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return command(args)
    except (MatrixMarketError, OSError) as exc:
        print(f"specpart: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except Breakdown as exc:
        print(f"specpart: solver breakdown: {exc}", file=sys.stderr)
        return EXIT_BREAKDOWN
    except (InfeasiblePartsError, DegenerateDegreeError, ValueError) as exc:
        print(f"specpart: infeasible configuration: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
