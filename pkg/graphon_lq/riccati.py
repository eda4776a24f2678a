# This file is part of graphon-lq-control.
# Copyright (C) 2024 graphon-lq-control contributors
#
# graphon-lq-control is free software; you can redistribute it and/or
# modify it under the terms of the MIT License; see the
# LICENSE file for more details.

"""
Backward Riccati equations of the graphon LQ problem.

The operator Riccati equation decouples along the graphon spectrum into
scalar equations

    dPi/dt + (2A + 2b*lam) Pi - (2B^2/R) Pi^2 + Q/2 (1 - Gamma*lam)^2 = 0,
    Pi(T) = Q_T/2,

one per eigenvalue lam, with lam = 0 for the kernel complement. All
equations are integrated backward with classical RK4 on s = T - t.
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import Callable, List

import numpy as np
from scipy.integrate import trapezoid

from .exceptions import GridMismatchError, RiccatiDivergenceError, ValidationError
from .graphon import AdjacencyMatrix, l2_inner

logger = logging.getLogger(__name__)

DEDUP_TOLERANCE = 1e-14
DIVERGENCE_FACTOR = 10.0


@dataclass(frozen=True)
class ModelParams:
    """Scalar coefficients of the dynamics and costs."""

    A: float = 1.0
    B: float = 1.0
    b: float = 0.5
    sigma: float = 0.3
    Q: float = 1.0
    Q_T: float = 1.0
    R: float = 1.0
    Gamma: float = 0.5
    T: float = 1.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = float(getattr(self, f.name))
            if not np.isfinite(value):
                raise ValidationError(f"Parameter {f.name} must be finite, got {value}")
            object.__setattr__(self, f.name, value)
        if self.R <= 0:
            raise ValidationError(f"R must be positive, got {self.R}")
        if self.Q < 0 or self.Q_T < 0:
            raise ValidationError("Cost weights Q and Q_T must be nonnegative")
        if self.T <= 0:
            raise ValidationError(f"Horizon T must be positive, got {self.T}")

    @property
    def gain_weight(self) -> float:
        """2B^2/R, the coefficient of the quadratic Riccati term."""
        return 2.0 * self.B**2 / self.R

    @property
    def feedback_weight(self) -> float:
        """2B/R, the factor in u = -(2B/R) Pi x."""
        return 2.0 * self.B / self.R

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k*dt, k = 0..steps, on [0, T]."""

    T: float
    steps: int

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValidationError(f"Grid needs a positive integer step count, got {self.steps}")
        if not self.T > 0:
            raise ValidationError(f"Grid horizon must be positive, got {self.T}")
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "T", float(self.T))

    @classmethod
    def from_step(cls, T: float, dt: float) -> "TimeGrid":
        if not dt > 0 or not T > 0:
            raise ValidationError(f"Invalid grid: T={T}, dt={dt}")
        steps = int(round(T / dt))
        if steps < 1 or abs(steps * dt - T) > 1e-9 * T:
            raise ValidationError(f"T={T} is not an integer multiple of dt={dt}")
        return cls(T, steps)

    @property
    def dt(self) -> float:
        return self.T / self.steps

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    def refine(self, factor: int) -> "TimeGrid":
        return TimeGrid(self.T, self.steps * factor)

    def subdivision(self, coarse: "TimeGrid") -> int:
        """Number of steps of this grid per step of ``coarse``."""
        if abs(self.T - coarse.T) > 1e-12 * self.T or self.steps % coarse.steps:
            raise GridMismatchError(
                f"Grid with {self.steps} steps on [0, {self.T}] does not subdivide "
                f"{coarse.steps} steps on [0, {coarse.T}]"
            )
        return self.steps // coarse.steps


@dataclass(frozen=True)
class RiccatiSolution:
    """Riccati values at every grid node.

    ``perp`` has shape (K+1,), ``modes`` has shape (r, K+1) and row l was
    solved with ``eigenvalues[l]``.
    """

    grid: TimeGrid
    perp: np.ndarray
    modes: np.ndarray
    eigenvalues: np.ndarray

    @property
    def rank(self) -> int:
        return self.modes.shape[0]

    def deltas(self, t_index: int) -> np.ndarray:
        """Pi_bar^l - Pi_perp at one node."""
        return self.modes[:, t_index] - self.perp[t_index]


def _drift(p: ModelParams, lams: np.ndarray):
    linear = 2.0 * p.A + 2.0 * p.b * lams
    source = 0.5 * p.Q * (1.0 - p.Gamma * lams) ** 2
    return linear, source


def comparison_bound(p: ModelParams, lam, grid: TimeGrid) -> np.ndarray:
    """Solution of the linear equation obtained by dropping the quadratic term."""
    lams = np.atleast_1d(np.asarray(lam, dtype=float))
    linear, source = _drift(p, lams)
    s = (grid.T - grid.nodes)[None, :]
    c = linear[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        growth = np.where(c != 0, np.expm1(c * s) / np.where(c != 0, c, 1.0), s)
    bound = 0.5 * p.Q_T * np.exp(c * s) + source[:, None] * growth
    return bound[0] if np.ndim(lam) == 0 else bound


def _integrate(p: ModelParams, lams: np.ndarray, grid: TimeGrid) -> np.ndarray:
    linear, source = _drift(p, lams)
    g = p.gain_weight
    h = grid.dt

    def rhs(pi):
        return linear * pi - g * pi**2 + source

    values = np.empty((lams.shape[0], grid.steps + 1))
    pi = np.full(lams.shape[0], 0.5 * p.Q_T)
    values[:, grid.steps] = pi
    for k in range(grid.steps - 1, -1, -1):
        k1 = rhs(pi)
        k2 = rhs(pi + 0.5 * h * k1)
        k3 = rhs(pi + 0.5 * h * k2)
        k4 = rhs(pi + h * k3)
        pi = pi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        values[:, k] = pi

    bound = comparison_bound(p, lams, grid)
    bad = ~np.isfinite(values) | (values > DIVERGENCE_FACTOR * bound + 1e-12)
    if np.any(bad):
        row, node = np.argwhere(bad)[0]
        logger.error(f"Riccati solve for lambda={lams[row]} left its bound at node {node}")
        raise RiccatiDivergenceError(
            f"Riccati solution for lambda={lams[row]} exceeds {DIVERGENCE_FACTOR:g}x "
            f"the comparison bound at node {node}"
        )
    return values


def solve_mode_riccati(p: ModelParams, lam: float, grid: TimeGrid) -> np.ndarray:
    """Backward RK4 solution of one mode equation; lam = 0 gives Pi_perp."""
    if abs(lam) > 1.0 + 1e-12:
        raise ValidationError(f"Mode eigenvalue must satisfy |lambda| <= 1, got {lam}")
    return _integrate(p, np.array([float(lam)]), grid)[0]


def solve_all(p: ModelParams, spec, grid: TimeGrid) -> RiccatiSolution:
    """Solve Pi_perp and every mode; equal eigenvalues share one solve."""
    eigenvalues = np.asarray(spec.eigenvalues, dtype=float)
    if np.any(np.abs(eigenvalues) > 1.0 + 1e-12):
        raise ValidationError("Mode eigenvalues must satisfy |lambda| <= 1")

    distinct: List[float] = [0.0]
    mapping = []
    for lam in eigenvalues:
        for idx, known in enumerate(distinct):
            if abs(lam - known) <= DEDUP_TOLERANCE:
                break
        else:
            idx = len(distinct)
            distinct.append(float(lam))
        mapping.append(idx)
    logger.debug(f"Solving {len(distinct)} Riccati equation(s) for {eigenvalues.shape[0]} mode(s)")

    values = _integrate(p, np.array(distinct), grid)
    modes = values[mapping] if mapping else np.zeros((0, grid.steps + 1))
    return RiccatiSolution(grid=grid, perp=values[0], modes=modes, eigenvalues=eigenvalues)


def assemble_matrix(sol: RiccatiSolution, spec, n: int, t_index: int) -> np.ndarray:
    """Agent-coordinate matrix of the operator Riccati solution at one node."""
    vectors = spec.vectors
    if vectors.shape[0] != n:
        raise ValidationError(f"Spectrum lives on {vectors.shape[0]} cells, requested {n}")
    if vectors.shape[1] != sol.rank:
        raise ValidationError(f"Spectrum has {vectors.shape[1]} modes, solution has {sol.rank}")
    if not 0 <= t_index <= sol.grid.steps:
        raise ValidationError(f"Node {t_index} outside grid of {sol.grid.steps} steps")
    perp = sol.perp[t_index]
    return perp * np.eye(n) + (vectors * sol.deltas(t_index)) @ vectors.T


def dense_riccati_oracle(p: ModelParams, m: AdjacencyMatrix, grid: TimeGrid) -> np.ndarray:
    """Backward RK4 on the N x N matrix Riccati equation, shape (K+1, N, N)."""
    n = m.n
    eye = np.eye(n)
    drift = p.A * eye + (p.b / n) * m.entries
    tracking = eye - (p.Gamma / n) * m.entries
    source = 0.5 * p.Q * tracking.T @ tracking
    g = p.gain_weight
    h = grid.dt

    def rhs(P):
        return P @ drift + drift.T @ P - g * P @ P + source

    values = np.empty((grid.steps + 1, n, n))
    P = 0.5 * p.Q_T * eye
    values[grid.steps] = P
    for k in range(grid.steps - 1, -1, -1):
        k1 = rhs(P)
        k2 = rhs(P + 0.5 * h * k1)
        k3 = rhs(P + 0.5 * h * k2)
        k4 = rhs(P + h * k3)
        P = P + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        values[k] = P
    return values


def centralized_value(p: ModelParams, sol: RiccatiSolution, spec, q, x0) -> float:
    """Optimal per-capita social cost (1/N)[x0' P(0) x0 + sigma^2 int tr(P Q_N) dt]."""
    x0 = np.asarray(x0, dtype=float)
    n = x0.shape[0]
    q_entries = np.asarray(getattr(q, "entries", q), dtype=float)
    vectors = spec.vectors

    initial = x0 @ assemble_matrix(sol, spec, n, 0) @ x0
    projected = np.einsum("il,ij,jl->l", vectors, q_entries, vectors)
    traces = sol.perp * np.trace(q_entries) + (sol.modes - sol.perp).T @ projected
    noise = p.sigma**2 * trapezoid(traces, dx=sol.grid.dt)
    return float((initial + noise) / n)


def limit_value(p: ModelParams, sol: RiccatiSolution, m, q_spec, x0_profile: Callable) -> float:
    """Per-capita optimal cost of the limit problem on L2[0, 1]."""
    coefficients = np.array([l2_inner(x0_profile, f) for f in m.functions])
    norm2 = l2_inner(x0_profile, x0_profile)
    deltas0 = sol.modes[:, 0] - sol.perp[0]
    initial = sol.perp[0] * norm2 + float(np.sum(deltas0 * coefficients**2))

    overlaps = np.array(
        [[l2_inner(fq, fm) for fm in m.functions] for fq in q_spec.functions]
    ).reshape(q_spec.rank, m.rank)
    weights = q_spec.eigenvalues @ overlaps**2
    traces = q_spec.trace * sol.perp + (sol.modes - sol.perp).T @ weights
    noise = p.sigma**2 * trapezoid(traces, dx=sol.grid.dt)
    return float(initial + noise)
