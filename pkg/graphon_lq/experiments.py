# This file is part of graphon-lq-control.
# Copyright (C) 2024 graphon-lq-control contributors
#
# graphon-lq-control is free software; you can redistribute it and/or
# modify it under the terms of the MIT License; see the
# LICENSE file for more details.

"""
Experiments behind the command-line subcommands.

Every ``run_*`` function takes an ``ExperimentConfig`` and returns an
``ExperimentResult``: a main CSV table, optional side tables and a JSON
friendly summary.
"""

import csv
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import ExperimentConfig
from .control import build_centralized_law, build_decentralized_law
from .exceptions import ValidationError
from .graphon import (
    LIMIT_GRAPHONS,
    StepGraphon,
    load_adjacency,
    named_limit_graphon,
    op_norm_distance,
    step_graphon_spectrum,
)
from .noise import (
    NAMED_CORRELATIONS,
    align_factorization,
    assumption2_discrepancy,
    correlation_operator_spectrum,
    factor_correlation,
    load_correlation,
    named_q_wiener,
)
from .riccati import limit_value, solve_all
from .sim import (
    cost_exact,
    cost_mc,
    initial_profile,
    initial_states,
    optimality_gap,
    simulate_replicas,
)

logger = logging.getLogger(__name__)

FLOAT_FORMAT = ".17g"
GAP_SLACK = 1e-12

Table = Tuple[List[str], List[Dict[str, Any]]]


@dataclass
class ExperimentResult:
    name: str
    fieldnames: List[str]
    rows: List[Dict[str, Any]]
    side_tables: Dict[str, Table] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)
    failure: Optional[str] = None


def _format(value):
    if isinstance(value, (float, np.floating)):
        return format(float(value), FLOAT_FORMAT)
    return value


def write_table(fieldnames: Sequence[str], rows: Sequence[Dict[str, Any]], stream) -> None:
    writer = csv.DictWriter(stream, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _format(value) for key, value in row.items()})


def side_table_path(output: Path, suffix: str) -> Path:
    """``out.csv`` plus suffix ``eigenvectors`` gives ``out.eigenvectors.csv``."""
    return output.with_name(f"{output.stem}.{suffix}{output.suffix or '.csv'}")


def write_result(result: ExperimentResult, output: str = "") -> List[Path]:
    """Write the main table to ``output`` (stdout when empty) plus side tables."""
    if not output:
        write_table(result.fieldnames, result.rows, sys.stdout)
        return []

    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    written = [path]
    with path.open("w", newline="", encoding="utf-8") as f:
        write_table(result.fieldnames, result.rows, f)
    for suffix, (fieldnames, rows) in result.side_tables.items():
        side = side_table_path(path, suffix)
        with side.open("w", newline="", encoding="utf-8") as f:
            write_table(fieldnames, rows, f)
        written.append(side)
    logger.info(f"Wrote {', '.join(str(p) for p in written)}")
    return written


def _node_count(source: str, names, n: int) -> Optional[int]:
    return n if source in names else None


def _adjacency(cfg: ExperimentConfig, n: int):
    return load_adjacency(cfg.graphon, _node_count(cfg.graphon, LIMIT_GRAPHONS, n))


def _correlation(cfg: ExperimentConfig, n: int):
    return load_correlation(cfg.correlation, _node_count(cfg.correlation, NAMED_CORRELATIONS, n))


def run_spectrum(cfg: ExperimentConfig) -> ExperimentResult:
    """Nonzero spectrum of the step graphon or of the correlation operator."""
    if cfg.spectrum_of == "graphon":
        spectrum = step_graphon_spectrum(StepGraphon(_adjacency(cfg, cfg.N)))
    else:
        spectrum = correlation_operator_spectrum(_correlation(cfg, cfg.N))

    rows = [
        {
            "index": j + 1,
            "eigenvalue": spectrum.eigenvalues[j],
            "matrix_eigenvalue": spectrum.matrix_eigenvalues[j],
        }
        for j in range(spectrum.rank)
    ]
    vector_fields = ["node"] + [f"v_{j + 1}" for j in range(spectrum.rank)]
    vector_rows = []
    for i in range(spectrum.n):
        row = {"node": i + 1}
        row.update({f"v_{j + 1}": spectrum.vectors[i, j] for j in range(spectrum.rank)})
        vector_rows.append(row)
    logger.info(f"{cfg.spectrum_of} spectrum: rank {spectrum.rank} on {spectrum.n} nodes")
    return ExperimentResult(
        name="spectrum",
        fieldnames=["index", "eigenvalue", "matrix_eigenvalue"],
        rows=rows,
        side_tables={"eigenvectors": (vector_fields, vector_rows)},
        summary={
            "source": cfg.spectrum_of,
            "N": spectrum.n,
            "rank": spectrum.rank,
            "eigenvalues": [float(v) for v in spectrum.eigenvalues],
        },
    )


def run_riccati(cfg: ExperimentConfig) -> ExperimentResult:
    """Pi_perp and every mode Riccati function of the step graphon on the grid."""
    spectrum = step_graphon_spectrum(StepGraphon(_adjacency(cfg, cfg.N)))
    sol = solve_all(cfg.params, spectrum, cfg.grid)
    mode_fields = [f"mode_{j + 1}" for j in range(sol.rank)]
    rows = []
    for k, t in enumerate(sol.grid.nodes):
        row = {"t": t, "perp": sol.perp[k]}
        row.update({name: sol.modes[j, k] for j, name in enumerate(mode_fields)})
        rows.append(row)
    return ExperimentResult(
        name="riccati",
        fieldnames=["t", "perp"] + mode_fields,
        rows=rows,
        summary={
            "N": spectrum.n,
            "rank": sol.rank,
            "eigenvalues": [float(v) for v in sol.eigenvalues],
            "perp_0": float(sol.perp[0]),
            "modes_0": [float(v) for v in sol.modes[:, 0]],
        },
    )


def _trajectory_table(bundle) -> Table:
    n = bundle.n
    fieldnames = ["t"] + [f"x_{i + 1}" for i in range(n)] + [f"u_{i + 1}" for i in range(n)]
    rows = []
    for k, t in enumerate(bundle.grid.nodes):
        row = {"t": t}
        row.update({f"x_{i + 1}": bundle.states[0, i, k] for i in range(n)})
        row.update({f"u_{i + 1}": bundle.controls[0, i, k] for i in range(n)})
        rows.append(row)
    return fieldnames, rows


def _keep_first(bundles, sink: list):
    for bundle in bundles:
        if not sink:
            sink.append(bundle)
        yield bundle


def run_simulate(cfg: ExperimentConfig) -> ExperimentResult:
    """Monte Carlo and exact costs of the selected laws at one N."""
    p, n, grid = cfg.params, cfg.N, cfg.grid
    m = _adjacency(cfg, n)
    n = m.n
    q = _correlation(cfg, n)
    limit_m = named_limit_graphon(cfg.limit_graphon)
    limit_q = named_q_wiener(cfg.limit_q, cfg.d)
    aligned = align_factorization(factor_correlation(q), limit_q)
    profile = initial_profile(cfg.x0_profile)
    x0 = initial_states(profile, n)

    laws = {}
    if cfg.law in ("centralized", "both"):
        laws["centralized"] = build_centralized_law(p, m, aligned, x0, grid)
    if cfg.law in ("decentralized", "both"):
        laws["decentralized"] = build_decentralized_law(p, limit_m, limit_q, n, profile, grid)

    rows, side_tables, summary = [], {}, {"N": n, "replicas": cfg.replicas, "seed": cfg.seed}
    for name, law in laws.items():
        first = []
        bundles = simulate_replicas(
            p, m, law, aligned, x0, grid, cfg.replicas, cfg.seed, cfg.batch_size
        )
        mc = cost_mc(_keep_first(bundles, first), p, m)
        exact = cost_exact(p, m, law, aligned, x0, grid)
        for report in (mc, exact):
            rows.append(
                {
                    "law": name,
                    "method": report.method,
                    "per_capita": report.per_capita,
                    "social": report.social,
                    "standard_error": report.standard_error,
                }
            )
        summary[name] = {
            "per_capita_mc": mc.per_capita,
            "standard_error": mc.standard_error,
            "per_capita_exact": exact.per_capita,
        }
        logger.info(
            f"{name}: MC {mc.per_capita:.8g} +/- {mc.standard_error:.2g}, "
            f"exact {exact.per_capita:.8g}"
        )
        if cfg.trajectories:
            side_tables[f"trajectories_{name}"] = _trajectory_table(first[0])

    return ExperimentResult(
        name="simulate",
        fieldnames=["law", "method", "per_capita", "social", "standard_error"],
        rows=rows,
        side_tables=side_tables,
        summary=summary,
    )


def run_converge(cfg: ExperimentConfig) -> ExperimentResult:
    """Graphon and noise discrepancies to the limit objects along the N ladder."""
    limit_m = named_limit_graphon(cfg.limit_graphon)
    limit_q = named_q_wiener(cfg.limit_q, cfg.d)
    rows = []
    for n in cfg.N_values:
        m = _adjacency(cfg, n)
        q = _correlation(cfg, n)
        distance = op_norm_distance(StepGraphon(m), limit_m)
        term1, term2 = assumption2_discrepancy(q, limit_q)
        logger.info(f"N={n}: op-norm {distance:.3e}, term1 {term1:.3e}, term2 {term2:.3e}")
        rows.append({"N": n, "op_norm_distance": distance, "term1": term1, "term2": term2})
    return ExperimentResult(
        name="converge",
        fieldnames=["N", "op_norm_distance", "term1", "term2"],
        rows=rows,
        summary={"N_values": list(cfg.N_values), "d": cfg.d},
    )


def gap_regression(gaps: Sequence[float], slack: float = GAP_SLACK) -> Optional[str]:
    """Describe the first increase of a gap sequence, None if non-increasing."""
    for k in range(1, len(gaps)):
        if gaps[k] > gaps[k - 1] + slack:
            return f"gap increased from {gaps[k - 1]:.6e} to {gaps[k]:.6e} at ladder entry {k + 1}"
    return None


def run_gap(cfg: ExperimentConfig) -> ExperimentResult:
    """Per-capita optimality gap of the decentralized law along the N ladder."""
    p, grid = cfg.params, cfg.grid
    limit_m = named_limit_graphon(cfg.limit_graphon)
    limit_q = named_q_wiener(cfg.limit_q, cfg.d)
    profile = initial_profile(cfg.x0_profile)

    rows = []
    for n in cfg.N_values:
        m = _adjacency(cfg, n)
        if m.n != n:
            raise ValidationError(f"Graphon source {cfg.graphon} cannot be resized to N={n}")
        result = optimality_gap(
            p,
            m,
            _correlation(cfg, n),
            limit_m,
            limit_q,
            profile,
            grid,
            seed=cfg.seed,
            method=cfg.method,
            replicas=cfg.replicas,
            batch_size=cfg.batch_size,
        )
        rows.append(
            {
                "N": n,
                "cost_centralized": result.per_capita_centralized,
                "cost_decentralized": result.per_capita_decentralized,
                "gap": result.gap,
            }
        )

    gaps = [row["gap"] for row in rows]
    limit_sol = solve_all(p, limit_m, grid.refine(2))
    rates = [
        float(np.log2(gaps[k - 1] / gaps[k]))
        for k in range(1, len(gaps))
        if gaps[k] > 0 and gaps[k - 1] > 0
    ]
    failure = gap_regression(gaps)
    if failure:
        logger.error(f"Gap regression: {failure}")
    return ExperimentResult(
        name="gap",
        fieldnames=["N", "cost_centralized", "cost_decentralized", "gap"],
        rows=rows,
        summary={
            "N_values": list(cfg.N_values),
            "gaps": gaps,
            "method": cfg.method,
            "limit_value": limit_value(p, limit_sol, limit_m, limit_q, profile),
            "empirical_rates": rates,
            "non_increasing": failure is None,
        },
        failure=failure,
    )


EXPERIMENTS = {
    "spectrum": run_spectrum,
    "riccati": run_riccati,
    "simulate": run_simulate,
    "converge": run_converge,
    "gap": run_gap,
}
