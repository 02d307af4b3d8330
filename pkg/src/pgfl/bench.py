"""Benchmark grid: (model x n x seed x estimator) -> results and aggregate CSVs.

The aggregate table has one row per estimator and one column per
(model, n) cell, holding the mean MSE scaled by 1e4.
"""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path

import numpy as np

from .errors import InputError
from .graphons import (
    get_graphon,
    grand_mean_estimate,
    knn_pgfl_estimate,
    mse,
    ns_estimate,
    sample_network,
    sas_lite_estimate,
    usvt_estimate,
)

ESTIMATORS = ("knn_pgfl", "ns", "usvt", "sas", "grand_mean")

RESULT_FIELDS = [
    "model", "n", "seed", "estimator", "mse", "mse_x1e4",
    "runtime_ms", "iterations", "q_components", "num_segments", "error",
]


def _run_estimator(name, A, params):
    """Returns (P_hat, extras) for one cell."""
    if name == "knn_pgfl":
        P_hat, partition, diag = knn_pgfl_estimate(
            A,
            K=params.get("K", 2),
            lam=params.get("lambda", 0.5),
            eta=params.get("eta", 1.0),
            stop_ratio=params.get("stop_ratio", 0.01),
            max_iter=params.get("max_iter", 200),
            eps=params.get("eps"),
            threads=params.get("threads", 1),
        )
        return P_hat, {
            "iterations": diag["iterations"],
            "q_components": diag["q_components"],
            "num_segments": diag["num_segments"],
        }
    if name == "ns":
        return ns_estimate(A, h=params.get("ns_quantile")), {}
    if name == "usvt":
        return usvt_estimate(A, c=params.get("usvt_c", 2.02)), {}
    if name == "sas":
        P_hat = sas_lite_estimate(
            A,
            lam=params.get("lambda", 0.5),
            eta=params.get("eta", 1.0),
            stop_ratio=params.get("stop_ratio", 0.01),
            max_iter=params.get("max_iter", 200),
            threads=params.get("threads", 1),
        )
        return P_hat, {}
    if name == "grand_mean":
        return grand_mean_estimate(A), {}
    raise InputError(f"unknown estimator {name!r}; available: {', '.join(ESTIMATORS)}")


def validate_config(config: dict) -> dict:
    for key in ("models", "n", "seeds", "estimators"):
        if key not in config or not config[key]:
            raise InputError(f"benchmark config missing non-empty field {key!r}")
    for m in config["models"]:
        get_graphon(m)
    for e in config["estimators"]:
        if e not in ESTIMATORS:
            raise InputError(
                f"unknown estimator {e!r}; available: {', '.join(ESTIMATORS)}"
            )
    return config


def run_benchmark(config: dict, outdir, save_matrices: bool = True) -> list:
    """Run the grid, write results.csv and aggregate.csv under outdir.

    Per-cell failures are recorded in the error column and the run continues.
    For the first seed of each (model, n), the truth P0 and every estimate
    are saved under matrices/ so figures can be rendered from the artifacts.
    """
    validate_config(config)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "config.json", "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)
        fh.write("\n")

    rows = []
    first_seed = config["seeds"][0]
    for model_name in config["models"]:
        model = get_graphon(model_name)
        for n in config["n"]:
            for seed in config["seeds"]:
                sample = sample_network(model, int(n), int(seed))
                mat_dir = outdir / "matrices" / f"{model_name}_n{n}"
                if save_matrices and seed == first_seed:
                    mat_dir.mkdir(parents=True, exist_ok=True)
                    np.savetxt(mat_dir / "P0.csv", sample.P0, delimiter=",")
                for est in config["estimators"]:
                    row = {
                        "model": model_name, "n": int(n), "seed": int(seed),
                        "estimator": est, "mse": "", "mse_x1e4": "",
                        "runtime_ms": "", "iterations": "",
                        "q_components": "", "num_segments": "", "error": "",
                    }
                    t0 = time.perf_counter()
                    try:
                        P_hat, extras = _run_estimator(est, sample.A, config)
                        err = mse(P_hat, sample.P0)
                        row["mse"] = f"{err:.10g}"
                        row["mse_x1e4"] = f"{err * 1e4:.6g}"
                        row["runtime_ms"] = f"{(time.perf_counter() - t0) * 1e3:.1f}"
                        for key in ("iterations", "q_components", "num_segments"):
                            if key in extras and extras[key] is not None:
                                row[key] = extras[key]
                        if save_matrices and seed == first_seed:
                            np.savetxt(mat_dir / f"{est}.csv", P_hat, delimiter=",")
                    except Exception as exc:  # keep the grid going
                        row["error"] = str(exc)
                    rows.append(row)

    with open(outdir / "results.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
    write_aggregate(rows, outdir / "aggregate.csv")
    return rows


def write_aggregate(rows: list, path) -> None:
    """Mean mse_x1e4 per (estimator, model, n) cell; one column per cell."""
    cells = {}
    for row in rows:
        if row["error"] or row["mse"] == "":
            continue
        key = (row["estimator"], f"{row['model']}_n{row['n']}")
        cells.setdefault(key, []).append(float(row["mse_x1e4"]))
    estimators = sorted({k[0] for k in cells})
    columns = sorted({k[1] for k in cells})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["estimator"] + columns)
        for est in estimators:
            out = [est]
            for col in columns:
                vals = cells.get((est, col))
                out.append(f"{np.mean(vals):.6g}" if vals else "")
            writer.writerow(out)
