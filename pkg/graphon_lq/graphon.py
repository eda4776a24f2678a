# This file is part of graphon-lq-control.
# Copyright (C) 2024 graphon-lq-control contributors
#
# graphon-lq-control is free software; you can redistribute it and/or
# modify it under the terms of the MIT License; see the
# LICENSE file for more details.

"""
Step graphons, finite-rank limit graphons and their spectra.

A step graphon built from an N x N adjacency matrix acts on step functions
over the uniform partition P_1..P_N of [0, 1]. Its nonzero spectrum is the
matrix spectrum divided by N, with eigenfunctions sqrt(N) times the step
interpolation of the unit matrix eigenvectors. Analytic eigenfunctions are
integrated per cell with a composite midpoint rule and globally with
Gauss-Legendre quadrature.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import linalg

from .exceptions import MatrixFileError, ValidationError

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-10
POINTS_PER_CELL = 64
GAUSS_NODES = 128
FINE_GRID = 1024

_gauss_x, _gauss_w = leggauss(GAUSS_NODES)
GAUSS_POINTS = 0.5 * (_gauss_x + 1.0)
GAUSS_WEIGHTS = 0.5 * _gauss_w


def cell_midpoints(n: int) -> np.ndarray:
    """Midpoints of the cells P_1..P_n."""
    return (np.arange(n) + 0.5) / n


def cell_averages(fn: Callable, n: int, points_per_cell: int = POINTS_PER_CELL) -> np.ndarray:
    """N * integral of fn over each P_i, by composite midpoint quadrature."""
    total = n * points_per_cell
    nodes = (np.arange(total) + 0.5) / total
    values = np.asarray(fn(nodes), dtype=float)
    return values.reshape(n, points_per_cell).mean(axis=1)


def l2_inner(f: Callable, g: Callable) -> float:
    """<f, g> in L2[0, 1] by Gauss-Legendre quadrature."""
    return float(np.sum(GAUSS_WEIGHTS * f(GAUSS_POINTS) * g(GAUSS_POINTS)))


def sign_convention(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so the first component of largest magnitude is positive."""
    if vectors.size == 0:
        return vectors
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def read_matrix_file(path) -> np.ndarray:
    """Read the plain-text matrix format: first line N, then N rows of N reals."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise MatrixFileError(path, 0, f"cannot read file: {e}") from e

    lines = [(no, line.split()) for no, line in enumerate(text.splitlines(), start=1)]
    lines = [(no, tokens) for no, tokens in lines if tokens]
    if not lines:
        raise MatrixFileError(path, 1, "empty matrix file")

    header_no, header = lines[0]
    if len(header) != 1:
        raise MatrixFileError(path, header_no, "first line must hold the single integer N")
    try:
        n = int(header[0])
    except ValueError:
        raise MatrixFileError(path, header_no, f"invalid size {header[0]!r}") from None
    if n < 1:
        raise MatrixFileError(path, header_no, f"size must be positive, got {n}")

    rows = lines[1:]
    if len(rows) != n:
        line = rows[-1][0] if rows else header_no
        raise MatrixFileError(path, line, f"expected {n} rows, found {len(rows)}")

    matrix = np.empty((n, n))
    for i, (no, tokens) in enumerate(rows):
        if len(tokens) != n:
            raise MatrixFileError(path, no, f"expected {n} entries, found {len(tokens)}")
        try:
            matrix[i] = [float(token) for token in tokens]
        except ValueError as e:
            raise MatrixFileError(path, no, str(e)) from None
    return matrix


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Symmetric weighted adjacency matrix M_N with entries in [-1, 1]."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 1:
            raise ValidationError(f"Adjacency matrix must be square, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValidationError("Adjacency matrix has non-finite entries")
        if not np.array_equal(entries, entries.T):
            raise ValidationError("Adjacency matrix must be symmetric")
        if np.any(np.abs(entries) > 1.0):
            raise ValidationError("Adjacency entries must lie in [-1, 1]")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class StepGraphon:
    """The step function graphon M^[N] over the uniform partition."""

    base: AdjacencyMatrix

    @property
    def partition_count(self) -> int:
        return self.base.n

    def evaluate(self, alpha, beta):
        n = self.partition_count
        i = np.minimum((np.asarray(alpha) * n).astype(int), n - 1)
        j = np.minimum((np.asarray(beta) * n).astype(int), n - 1)
        return self.base.entries[i, j]

    def apply(self, x: "StepVector") -> "StepVector":
        """Integrate the kernel against a step function: (1/N) M_N x."""
        if x.n != self.partition_count:
            raise ValidationError(
                f"Step vector has {x.n} cells, graphon has {self.partition_count}"
            )
        return StepVector(self.base.entries @ x.values / self.partition_count)


@dataclass(frozen=True)
class StepVector:
    """The step function sum_i values[i] * 1_{P_i}."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise ValidationError("Step vector values must be one-dimensional")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def inner(self, other: "StepVector") -> float:
        if other.n != self.n:
            raise ValidationError(f"Cannot pair step vectors of sizes {self.n} and {other.n}")
        return float(np.dot(self.values, other.values) / self.n)

    def norm(self) -> float:
        return float(np.sqrt(np.mean(self.values**2)))

    def evaluate(self, alpha):
        idx = np.minimum((np.asarray(alpha) * self.n).astype(int), self.n - 1)
        return self.values[idx]


def embed(values) -> StepVector:
    """Pack agent values into the step function sum_i values[i] 1_{P_i}."""
    return StepVector(values)


def project(fn: Callable, n: int) -> StepVector:
    """Cell averages of fn: N sum_i <fn, 1_{P_i}> 1_{P_i}."""
    if n < 1:
        raise ValidationError(f"Partition count must be positive, got {n}")
    return StepVector(cell_averages(fn, n))


def l2_distance(x: StepVector, fn: Callable, points_per_cell: int = POINTS_PER_CELL) -> float:
    """L2 distance between a step vector and a function."""
    total = x.n * points_per_cell
    nodes = (np.arange(total) + 0.5) / total
    diff = np.repeat(x.values, points_per_cell) - fn(nodes)
    return float(np.sqrt(np.mean(diff**2)))


@dataclass(frozen=True)
class GraphonSpectrum:
    """Nonzero spectrum of a step graphon with step eigenfunctions.

    ``vectors`` holds the unit matrix eigenvectors v_l as columns; the
    eigenfunction f_l takes the value sqrt(N) v_l(i) on P_i.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    matrix_eigenvalues: np.ndarray = field(default=None)

    def __post_init__(self):
        eigenvalues = np.array(self.eigenvalues, dtype=float).reshape(-1)
        vectors = np.array(self.vectors, dtype=float)
        if vectors.ndim != 2 or vectors.shape[1] != eigenvalues.shape[0]:
            raise ValidationError("Spectrum needs one eigenvector column per eigenvalue")
        matrix_eigenvalues = self.matrix_eigenvalues
        if matrix_eigenvalues is None:
            matrix_eigenvalues = eigenvalues * vectors.shape[0]
        object.__setattr__(self, "eigenvalues", eigenvalues)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "matrix_eigenvalues", np.asarray(matrix_eigenvalues, dtype=float))

    @property
    def rank(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    def cell_values(self, n: int) -> np.ndarray:
        """N <1_{P_i}, f_l> for every cell and mode, exactly sqrt(N) v_l(i)."""
        if n != self.n:
            raise ValidationError(f"Spectrum lives on {self.n} cells, requested {n}")
        return np.sqrt(n) * self.vectors

    def evaluate(self, alpha) -> np.ndarray:
        idx = np.minimum((np.asarray(alpha) * self.n).astype(int), self.n - 1)
        return np.sqrt(self.n) * self.vectors[idx]

    def gram(self) -> np.ndarray:
        values = self.cell_values(self.n)
        return values.T @ values / self.n

    def kernel_cells(self) -> np.ndarray:
        """Cell values of sum_l lambda_l f_l (x) f_l."""
        values = self.cell_values(self.n)
        return (values * self.eigenvalues) @ values.T


class AnalyticSpectrum:
    """Finite list of eigenpairs with analytic eigenfunctions on [0, 1]."""

    tolerance = 1e-8

    def __init__(self, eigenvalues: Sequence[float], functions: Sequence[Callable]):
        eigenvalues = np.array(eigenvalues, dtype=float).reshape(-1)
        functions = tuple(functions)
        if len(functions) != eigenvalues.shape[0]:
            raise ValidationError(
                f"{eigenvalues.shape[0]} eigenvalues but {len(functions)} eigenfunctions"
            )
        eigenvalues.setflags(write=False)
        self.eigenvalues = eigenvalues
        self.functions = functions
        gram = self.gram()
        if gram.size and np.max(np.abs(gram - np.eye(self.rank))) > self.tolerance:
            raise ValidationError("Eigenfunctions are not orthonormal in L2[0, 1]")

    def __repr__(self):
        return f"{type(self).__name__}(eigenvalues={self.eigenvalues.tolist()})"

    @property
    def rank(self) -> int:
        return self.eigenvalues.shape[0]

    def evaluate(self, alpha) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float)
        if not self.functions:
            return np.zeros(alpha.shape + (0,))
        return np.stack([np.broadcast_to(f(alpha), alpha.shape) for f in self.functions], axis=-1)

    def gram(self) -> np.ndarray:
        values = self.evaluate(GAUSS_POINTS)
        return (values * GAUSS_WEIGHTS[:, None]).T @ values

    def cell_values(self, n: int) -> np.ndarray:
        """N <1_{P_i}, f_l> by composite midpoint quadrature, shape (n, rank)."""
        if not self.functions:
            return np.zeros((n, 0))
        return np.column_stack([cell_averages(f, n) for f in self.functions])

    def inner_with(self, fn: Callable) -> np.ndarray:
        """<fn, f_l> for every mode."""
        return np.array([l2_inner(fn, f) for f in self.functions])

    def kernel(self, x, y) -> np.ndarray:
        fx = self.evaluate(x)
        fy = self.evaluate(y)
        return (fx * self.eigenvalues) @ fy.T

    def truncated(self, d: int):
        if d > self.rank:
            raise ValidationError(f"Cannot keep {d} modes of a rank-{self.rank} spectrum")
        return type(self)(self.eigenvalues[:d], self.functions[:d])


class FiniteRankGraphon(AnalyticSpectrum):
    """Limit graphon M = sum_l lambda_l f_l (x) f_l with finitely many modes."""

    def __init__(self, eigenvalues, functions):
        super().__init__(eigenvalues, functions)
        if np.any(np.abs(self.eigenvalues) > 1.0 + 1e-12):
            raise ValidationError("Graphon eigenvalues must satisfy |lambda| <= 1")


def step_graphon_spectrum(g: StepGraphon) -> GraphonSpectrum:
    """Exact nonzero spectrum of a step graphon."""
    n = g.partition_count
    w, v = linalg.eigh(g.base.entries)
    scale = max(1.0, float(np.max(np.abs(w))))
    keep = np.abs(w) > RANK_TOLERANCE * scale
    w, v = w[keep], v[:, keep]
    order = np.lexsort((-w, -np.abs(w)))
    w, v = w[order], sign_convention(v[:, order])
    logger.debug(f"Step graphon N={n}: rank {w.shape[0]} of {n}")

    eigenvalues = w / n
    if np.any(np.abs(eigenvalues) > 1.0 + 1e-12):
        raise ValidationError("Operator eigenvalue exceeds 1; adjacency out of range")
    return GraphonSpectrum(eigenvalues=eigenvalues, vectors=v, matrix_eigenvalues=w)


def apply_graphon(spec, x: StepVector) -> StepVector:
    """sum_l lambda_l <f_l, x> f_l, evaluated as a step vector."""
    n = x.n
    if isinstance(spec, GraphonSpectrum) and spec.n != n:
        raise ValidationError(f"Spectrum lives on {spec.n} cells, vector has {n}")
    values = spec.cell_values(n)
    coefficients = values.T @ x.values / n
    return StepVector(values @ (spec.eigenvalues * coefficients))


def step_graphon_from_limit(m: AnalyticSpectrum, n: int) -> StepGraphon:
    """Sample a limit kernel at cell midpoints."""
    mid = cell_midpoints(n)
    entries = m.kernel(mid, mid)
    entries = np.clip(0.5 * (entries + entries.T), -1.0, 1.0)
    return StepGraphon(AdjacencyMatrix(entries))


def op_norm_distance(g: StepGraphon, m: AnalyticSpectrum, grid_size: int = FINE_GRID) -> float:
    """Estimate of ||M^[N] - M||_op on a fine uniform discretization.

    Both kernels are evaluated at the midpoints of a grid_size x grid_size
    grid; the largest singular value of the difference divided by grid_size
    is the operator norm of the discretized difference.
    """
    mid = cell_midpoints(grid_size)
    diff = g.evaluate(mid[:, None], mid[None, :]) - m.kernel(mid, mid)
    if not np.any(diff):
        return 0.0
    return float(linalg.svdvals(diff)[0] / grid_size)


def sqrt2_cos(alpha):
    return np.sqrt(2.0) * np.cos(np.pi * alpha)


def sqrt2_sin(alpha):
    return np.sqrt(2.0) * np.sin(np.pi * alpha)


def constant_one(alpha):
    return np.ones_like(np.asarray(alpha, dtype=float))


LIMIT_GRAPHONS: Dict[str, Tuple[Tuple[float, ...], Tuple[Callable, ...]]] = {
    "constant": ((1.0,), (constant_one,)),
    "cosine": ((0.5, 0.5), (sqrt2_cos, sqrt2_sin)),
    "zero": ((), ()),
}


def named_limit_graphon(key: str) -> FiniteRankGraphon:
    try:
        eigenvalues, functions = LIMIT_GRAPHONS[key]
    except KeyError:
        raise ValidationError(
            f"Unknown graphon {key!r}; choose from {sorted(LIMIT_GRAPHONS)}"
        ) from None
    return FiniteRankGraphon(eigenvalues, functions)


def named_adjacency(key: str, n: int) -> AdjacencyMatrix:
    """Built-in graphons: constant, cosine (cos pi(x-y)) and zero."""
    if key == "cosine":
        idx = np.arange(n)
        entries = np.cos(np.pi * (idx[:, None] - idx[None, :]) / n)
        entries = 0.5 * (entries + entries.T)
        return AdjacencyMatrix(entries)
    if key == "constant":
        return AdjacencyMatrix(np.ones((n, n)))
    if key == "zero":
        return AdjacencyMatrix(np.zeros((n, n)))
    raise ValidationError(f"Unknown graphon {key!r}; choose from {sorted(LIMIT_GRAPHONS)}")


def load_adjacency(source: str, n: int = None) -> AdjacencyMatrix:
    """Resolve a named graphon or an adjacency matrix file."""
    if source in LIMIT_GRAPHONS:
        if n is None:
            raise ValidationError(f"Named graphon {source!r} needs a node count")
        return named_adjacency(source, n)
    matrix = AdjacencyMatrix(read_matrix_file(source))
    if n is not None and matrix.n != n:
        raise ValidationError(f"{source} holds a {matrix.n}-node graph, expected {n}")
    return matrix
