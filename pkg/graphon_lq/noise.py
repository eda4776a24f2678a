# This file is part of graphon-lq-control.
# Copyright (C) 2024 graphon-lq-control contributors
#
# graphon-lq-control is free software; you can redistribute it and/or
# modify it under the terms of the MIT License; see the
# LICENSE file for more details.

"""
Correlated Brownian noise.

A correlation matrix Q_N is factored as C1 C1^T through its eigendecomposition,
so N correlated Brownian motions are driven by d_N <= N independent ones.
Limit noise is a finite-rank Q-Wiener process on L2[0, 1].
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np
from scipy import linalg

from .exceptions import ValidationError
from .graphon import (
    POINTS_PER_CELL,
    AnalyticSpectrum,
    GraphonSpectrum,
    constant_one,
    sqrt2_cos,
    sqrt2_sin,
    read_matrix_file,
    sign_convention,
)
from .riccati import TimeGrid

logger = logging.getLogger(__name__)

PSD_TOLERANCE = 1e-10
CLUSTER_GAP = 1e-8


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric correlation matrix with unit diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 1:
            raise ValidationError(f"Correlation matrix must be square, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValidationError("Correlation matrix has non-finite entries")
        if not np.array_equal(entries, entries.T):
            raise ValidationError("Correlation matrix must be symmetric")
        if np.max(np.abs(np.diag(entries) - 1.0)) > 1e-12:
            raise ValidationError("Correlation matrix must have a unit diagonal")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class NoiseFactorization:
    """Q_N = C1 C1^T with C1 = [sqrt(lambda_j) v_j], eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        eigenvalues = np.array(self.eigenvalues, dtype=float).reshape(-1)
        eigenvectors = np.array(self.eigenvectors, dtype=float)
        if eigenvectors.ndim != 2 or eigenvectors.shape[1] != eigenvalues.shape[0]:
            raise ValidationError("Factorization needs one eigenvector per eigenvalue")
        if np.any(eigenvalues <= 0):
            raise ValidationError("Factorization eigenvalues must be positive")
        object.__setattr__(self, "eigenvalues", eigenvalues)
        object.__setattr__(self, "eigenvectors", eigenvectors)

    @property
    def n(self) -> int:
        return self.eigenvectors.shape[0]

    @property
    def rank(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def factor(self) -> np.ndarray:
        return self.eigenvectors * np.sqrt(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        c1 = self.factor
        return c1 @ c1.T


class QWienerSpec(AnalyticSpectrum):
    """Finite-rank covariance operator Q = sum_j lambda_j f_j (x) f_j."""

    def __init__(self, eigenvalues, functions):
        super().__init__(eigenvalues, functions)
        if np.any(self.eigenvalues <= 0):
            raise ValidationError("Q-Wiener eigenvalues must be positive")

    @property
    def trace(self) -> float:
        return float(np.sum(self.eigenvalues))


@dataclass(frozen=True)
class NoisePaths:
    """Sampled driver paths with a leading replica axis.

    ``independent`` has shape (replicas, d_N, K+1) and ``correlated`` has
    shape (replicas, n, K+1); both start at zero.
    """

    grid: TimeGrid
    independent: np.ndarray
    correlated: np.ndarray
    seed: int
    stream: int = 0

    @property
    def replicas(self) -> int:
        return self.independent.shape[0]

    def independent_increments(self) -> np.ndarray:
        return np.diff(self.independent, axis=-1)

    def correlated_increments(self) -> np.ndarray:
        return np.diff(self.correlated, axis=-1)


def factor_correlation(q: CorrelationMatrix) -> NoiseFactorization:
    """Eigendecomposition factor of a possibly rank-deficient correlation matrix."""
    w, v = linalg.eigh(q.entries)
    lam_max = float(np.max(w))
    tolerance = PSD_TOLERANCE * lam_max
    if w[0] < -tolerance:
        raise ValidationError(
            f"Correlation matrix is indefinite: smallest eigenvalue {w[0]:.3e}"
        )
    clipped = (w < 0).sum()
    if clipped:
        logger.warning(f"Clipping {clipped} slightly negative eigenvalue(s) of Q_N to zero")

    keep = w > tolerance
    w, v = w[keep][::-1], v[:, keep][:, ::-1]
    v = sign_convention(v)
    logger.debug(f"Correlation N={q.n}: {w.shape[0]} independent drivers")
    return NoiseFactorization(eigenvalues=w, eigenvectors=v)


def correlation_operator_spectrum(q: CorrelationMatrix) -> GraphonSpectrum:
    """Nonzero spectrum of the step operator Q^[N] built from Q_N."""
    f = factor_correlation(q)
    return GraphonSpectrum(
        eigenvalues=f.eigenvalues / q.n,
        vectors=f.eigenvectors,
        matrix_eigenvalues=f.eigenvalues,
    )


def _clusters(eigenvalues: np.ndarray):
    """Index ranges of eigenvalues equal up to a relative gap."""
    start = 0
    for k in range(1, eigenvalues.shape[0] + 1):
        if k == eigenvalues.shape[0] or (
            eigenvalues[k - 1] - eigenvalues[k] > CLUSTER_GAP * eigenvalues[k - 1]
        ):
            yield start, k
            start = k


def align_factorization(f: NoiseFactorization, spec: QWienerSpec) -> NoiseFactorization:
    """Rotate degenerate eigenvectors so driver j pairs with limit mode j.

    The j-th eigenpair of Q_N is paired with the j-th mode of ``spec``. Inside
    every cluster of equal eigenvalues the eigenvectors are replaced by the
    orthogonal combination that best matches the paired limit modes
    (orthogonal Procrustes), which also fixes their signs. Q_N = C1 C1^T is
    unaffected.
    """
    d = spec.rank
    if d > f.rank:
        raise ValidationError(
            f"Q-Wiener rank d={d} exceeds the {f.rank} drivers of the correlation matrix"
        )
    n = f.n
    limit_cells = spec.cell_values(n)
    vectors = f.eigenvectors.copy()

    for start, stop in _clusters(f.eigenvalues):
        if start >= d:
            break
        paired = min(stop, d) - start
        block = vectors[:, start:stop]
        paired_modes = slice(start, start + paired)
        target = np.sqrt(spec.eigenvalues[paired_modes]) * limit_cells[:, paired_modes]
        bmat = block.T @ target / n
        u, _, wt = linalg.svd(bmat, full_matrices=True)
        rotation = np.hstack([u[:, :paired] @ wt, u[:, paired:]])
        vectors[:, start:stop] = block @ rotation

    return NoiseFactorization(eigenvalues=f.eigenvalues, eigenvectors=vectors)


def sample_noise(
    f: NoiseFactorization,
    dt: float,
    T: float,
    seed: int,
    replicas: int = 1,
    stream: int = 0,
) -> NoisePaths:
    """Sample driver paths and the correlated paths C1 W.

    Driver j of replica batch ``stream`` draws from its own generator keyed
    by (seed, stream, j), so adding drivers leaves existing ones untouched.
    """
    grid = TimeGrid.from_step(T, dt)
    if replicas < 1:
        raise ValidationError(f"Need at least one replica, got {replicas}")

    independent = np.zeros((replicas, f.rank, grid.steps + 1))
    scale = np.sqrt(grid.dt)
    for j in range(f.rank):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, j)))
        increments = rng.normal(0.0, scale, size=(replicas, grid.steps))
        independent[:, j, 1:] = np.cumsum(increments, axis=-1)

    correlated = np.einsum("ij,rjk->rik", f.factor, independent)
    return NoisePaths(
        grid=grid, independent=independent, correlated=correlated, seed=seed, stream=stream
    )


def assumption2_discrepancy(q: CorrelationMatrix, spec: QWienerSpec) -> Tuple[float, float]:
    """Distance between the finite correlated noise and its Q-Wiener limit.

    Returns (term1, term2): the squared L2 mismatch of the first d scaled
    eigenfunctions after alignment, and (1/N) times the eigenvalue mass of
    Q_N beyond the first d.
    """
    n = q.n
    f = factor_correlation(q)
    d = spec.rank
    aligned = align_factorization(f, spec)

    total = n * POINTS_PER_CELL
    nodes = (np.arange(total) + 0.5) / total
    term1 = 0.0
    for j in range(d):
        limit = np.sqrt(spec.eigenvalues[j]) * spec.functions[j](nodes)
        cells = np.repeat(aligned.eigenvectors[:, j], POINTS_PER_CELL)
        step = np.sqrt(aligned.eigenvalues[j]) * cells
        term1 += float(np.mean((limit - step) ** 2))

    term2 = float(np.sum(aligned.eigenvalues[d:]) / n)
    return term1, term2


Q_WIENER_SPECS: Dict[str, Tuple[Tuple[float, ...], Tuple[Callable, ...]]] = {
    "cosine-kernel": ((0.5, 0.5), (sqrt2_cos, sqrt2_sin)),
    "constant-kernel": ((1.0,), (constant_one,)),
}

NAMED_CORRELATIONS = ("identity", "cosine", "double-constant")


def named_q_wiener(key: str, d: int = None) -> QWienerSpec:
    try:
        eigenvalues, functions = Q_WIENER_SPECS[key]
    except KeyError:
        raise ValidationError(
            f"Unknown Q-Wiener spec {key!r}; choose from {sorted(Q_WIENER_SPECS)}"
        ) from None
    spec = QWienerSpec(eigenvalues, functions)
    if d is not None and d != spec.rank:
        if d > spec.rank:
            raise ValidationError(f"d={d} exceeds the rank {spec.rank} of {key!r}")
        spec = spec.truncated(d)
    return spec


def named_correlation(key: str, n: int) -> CorrelationMatrix:
    """Built-in correlations: identity, cosine and double-constant."""
    if key == "identity":
        return CorrelationMatrix(np.eye(n))
    if key == "cosine":
        idx = np.arange(n)
        entries = np.cos(np.pi * (idx[:, None] - idx[None, :]) / n)
        entries = 0.5 * (entries + entries.T)
        np.fill_diagonal(entries, 1.0)
        return CorrelationMatrix(entries)
    if key == "double-constant":
        entries = np.full((n, n), 1.0 - 1.0 / (2 * n))
        np.fill_diagonal(entries, 1.0)
        return CorrelationMatrix(entries)
    raise ValidationError(f"Unknown correlation {key!r}; choose from {list(NAMED_CORRELATIONS)}")


def load_correlation(source: str, n: int = None) -> CorrelationMatrix:
    """Resolve a named correlation or a correlation matrix file."""
    if source in NAMED_CORRELATIONS:
        if n is None:
            raise ValidationError(f"Named correlation {source!r} needs a node count")
        return named_correlation(source, n)
    q = CorrelationMatrix(read_matrix_file(source))
    if n is not None and q.n != n:
        raise ValidationError(f"{source} holds a {q.n}-node correlation, expected {n}")
    return q
