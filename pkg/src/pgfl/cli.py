"""Command-line entry point.

Subcommands: simulate, denoise, estimate, segment, benchmark.
Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 I/O error.
Outputs are plot-ready CSV/JSON; rendering lives in the separate figure tool.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .admm import pgfl
from .bench import run_benchmark
from .errors import FileFormatError, InputError, NumericalError
from .graph import read_graph_file
from .graphons import get_graphon, knn_pgfl_estimate, sample_network
from .matrixio import read_matrix, write_matrix_csv
from .segmentation import segment_dyads

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def guarded(fn):
    """Map domain errors to stable exit codes with a message on stderr."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InputError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)
        except NumericalError as exc:
            click.echo(f"numerical error: {exc}", err=True)
            sys.exit(EXIT_NUMERICAL)
        except (FileFormatError, OSError) as exc:
            click.echo(f"i/o error: {exc}", err=True)
            sys.exit(EXIT_IO)

    return wrapper


def _prepare_outdir(out, params: dict) -> Path:
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "config.json", "w", encoding="utf-8") as fh:
        json.dump(params, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return outdir


@click.group()
@click.version_option(__version__, prog_name="pgfl")
def cli():
    """Graph total-variation denoising and graphon estimation toolkit."""


@cli.command()
@click.option("--model", required=True, help="built-in graphon name")
@click.option("--n", "n", required=True, type=int, help="number of vertices")
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="output directory")
@guarded
def simulate(model, n, seed, out):
    """Sample a network from a built-in graphon model."""
    gm = get_graphon(model)
    sample = sample_network(gm, n, seed)
    outdir = _prepare_outdir(out, {"command": "simulate", "model": model,
                                   "n": n, "seed": seed})
    write_matrix_csv(outdir / "A.csv", sample.A)
    write_matrix_csv(outdir / "P0.csv", sample.P0)
    np.savetxt(outdir / "xi.csv", sample.xi, delimiter=",")
    click.echo(f"wrote {outdir}/A.csv ({n}x{n}, density {sample.A.mean():.4f})")


@cli.command()
@click.option("--matrix", required=True, type=click.Path(), help="response matrix file")
@click.option("--graph", "graph_path", required=True, type=click.Path(), help="predictor graph file")
@click.option("--lambda", "lam", default=0.5, type=float, show_default=True)
@click.option("--eta", default=1.0, type=float, show_default=True)
@click.option("--stop-ratio", default=0.01, type=float, show_default=True)
@click.option("--max-iter", default=200, type=int, show_default=True)
@click.option("--estimate-mode", type=click.Choice(["p", "qt", "average"]),
              default="average", show_default=True)
@click.option("--threads", default=1, type=int, show_default=True)
@click.option("--out", required=True, type=click.Path())
@guarded
def denoise(matrix, graph_path, lam, eta, stop_ratio, max_iter, estimate_mode,
            threads, out):
    """Denoise a matrix over a known graph (power-graph fused lasso)."""
    A = read_matrix(matrix)
    g = read_graph_file(graph_path)
    if A.shape[0] != g.n:
        raise InputError(
            f"dimension mismatch: matrix is {A.shape[0]}x{A.shape[1]}, "
            f"graph has n={g.n}"
        )
    outdir = _prepare_outdir(out, {
        "command": "denoise", "matrix": str(matrix), "graph": str(graph_path),
        "lambda": lam, "eta": eta, "stop_ratio": stop_ratio,
        "max_iter": max_iter, "estimate_mode": estimate_mode,
        "threads": threads,
    })
    result = pgfl(A, g, lam, eta=eta, stop_ratio=stop_ratio,
                  max_iter=max_iter, estimate_mode=estimate_mode,
                  threads=threads)
    write_matrix_csv(outdir / "P_hat.csv", result.P_hat)
    with open(outdir / "residuals.csv", "w", encoding="utf-8") as fh:
        fh.write("iteration,residual,objective\n")
        for k, (res, obj) in enumerate(zip(result.residuals, result.objectives)):
            fh.write(f"{k},{res:.12g},{obj:.12g}\n")
    with open(outdir / "objective.json", "w", encoding="utf-8") as fh:
        json.dump({
            "objective": result.objective,
            "iterations": result.iterations,
            "converged": result.converged,
        }, fh, indent=2)
        fh.write("\n")
    click.echo(
        f"objective {result.objective:.6g} after {result.iterations} iterations"
        f" (converged={result.converged})"
    )


@cli.command()
@click.option("--adjacency", required=True, type=click.Path(), help="binary adjacency matrix file")
@click.option("--k", "k", default=2, type=int, show_default=True)
@click.option("--lambda", "lam", default=0.5, type=float, show_default=True)
@click.option("--eta", default=1.0, type=float, show_default=True)
@click.option("--stop-ratio", default=0.01, type=float, show_default=True)
@click.option("--max-iter", default=200, type=int, show_default=True)
@click.option("--eps", default=None, type=float, help="segment merge tolerance")
@click.option("--threads", default=1, type=int, show_default=True)
@click.option("--out", required=True, type=click.Path())
@guarded
def estimate(adjacency, k, lam, eta, stop_ratio, max_iter, eps, threads, out):
    """Estimate a probability matrix from one observed network."""
    A = read_matrix(adjacency)
    if not np.isin(A, (0.0, 1.0)).all():
        raise InputError("adjacency matrix must be binary (entries 0/1)")
    if not 1 <= k <= A.shape[0] - 1:
        raise InputError(f"K must be in [1, {A.shape[0] - 1}], got {k}")
    outdir = _prepare_outdir(out, {
        "command": "estimate", "adjacency": str(adjacency), "k": k,
        "lambda": lam, "eta": eta, "stop_ratio": stop_ratio,
        "max_iter": max_iter, "eps": eps, "threads": threads,
    })
    P_hat, partition, diag = knn_pgfl_estimate(
        A, K=k, lam=lam, eta=eta, stop_ratio=stop_ratio,
        max_iter=max_iter, eps=eps, threads=threads,
    )
    write_matrix_csv(outdir / "P_hat.csv", P_hat)
    partition.to_csv(outdir / "partition.csv")
    partition.to_summary_json(outdir / "segments.json")
    with open(outdir / "diagnostics.json", "w", encoding="utf-8") as fh:
        json.dump(diag, fh, indent=2)
        fh.write("\n")
    click.echo(
        f"q={diag['q_components']} components, {diag['iterations']} iterations,"
        f" {diag['num_segments']} segments"
    )


@cli.command()
@click.option("--matrix", required=True, type=click.Path(), help="estimate matrix file")
@click.option("--graph", "graph_path", required=True, type=click.Path())
@click.option("--eps", default=None, type=float, help="merge tolerance")
@click.option("--out", required=True, type=click.Path())
@guarded
def segment(matrix, graph_path, eps, out):
    """Partition dyads into constant regions of an estimate."""
    P = read_matrix(matrix)
    g = read_graph_file(graph_path)
    outdir = _prepare_outdir(out, {
        "command": "segment", "matrix": str(matrix), "graph": str(graph_path),
        "eps": eps,
    })
    partition = segment_dyads(P, g, eps=eps)
    partition.to_csv(outdir / "partition.csv")
    partition.to_summary_json(outdir / "segments.json")
    click.echo(f"{partition.num_segments} segments over {g.n * g.n} dyads")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="experiment config JSON")
@click.option("--out", default=None, type=click.Path(), help="override output directory")
@click.option("--threads", default=1, type=int, show_default=True)
@guarded
def benchmark(config_path, out, threads):
    """Run a (model x n x seed x estimator) grid and aggregate MSEs."""
    try:
        with open(config_path, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{config_path}: {exc}") from exc
    config["threads"] = threads
    outdir = out or config.get("output_dir")
    if not outdir:
        raise InputError("no output directory (pass --out or set output_dir)")
    rows = run_benchmark(config, outdir)
    failures = sum(1 for r in rows if r["error"])
    click.echo(f"{len(rows)} cells ({failures} failed) -> {outdir}/results.csv")
    if failures:
        sys.exit(EXIT_NUMERICAL)


def main():
    cli(prog_name="pgfl")


if __name__ == "__main__":
    main()
