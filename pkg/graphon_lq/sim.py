# This file is part of graphon-lq-control.
# Copyright (C) 2024 graphon-lq-control contributors
#
# graphon-lq-control is free software; you can redistribute it and/or
# modify it under the terms of the MIT License; see the
# LICENSE file for more details.

"""
Closed-loop simulation and social cost evaluation.

Costs are available two ways: Monte Carlo over simulated replicas and exactly
by propagating the mean and covariance of the linear-Gaussian closed loop
(states stacked with the mode processes).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional

import numpy as np
from scipy.integrate import trapezoid

from .control import (
    CENTRALIZED,
    ControlLaw,
    ModeTrajectory,
    build_centralized_law,
    build_decentralized_law,
)
from .exceptions import (
    ConventionError,
    GridMismatchError,
    SimulationDivergenceError,
    ValidationError,
)
from .graphon import AdjacencyMatrix, FiniteRankGraphon, StepGraphon, cell_midpoints, embed
from .noise import (
    CorrelationMatrix,
    NoiseFactorization,
    NoisePaths,
    QWienerSpec,
    align_factorization,
    factor_correlation,
    sample_noise,
)
from .riccati import ModelParams, TimeGrid, assemble_matrix

logger = logging.getLogger(__name__)

GAP_TOLERANCE = 1e-9

INITIAL_PROFILES = {
    "zero": lambda alpha: np.zeros_like(np.asarray(alpha, dtype=float)),
    "constant": lambda alpha: np.ones_like(np.asarray(alpha, dtype=float)),
    "ramp": lambda alpha: np.asarray(alpha, dtype=float),
    "cosine": lambda alpha: np.cos(np.pi * np.asarray(alpha, dtype=float)),
}


def initial_profile(key: str) -> Callable:
    try:
        return INITIAL_PROFILES[key]
    except KeyError:
        raise ValidationError(
            f"Unknown initial profile {key!r}; choose from {sorted(INITIAL_PROFILES)}"
        ) from None


def initial_states(profile: Callable, n: int) -> np.ndarray:
    """x_0^i = x_0(midpoint of P_i)."""
    return np.asarray(profile(cell_midpoints(n)), dtype=float)


@dataclass(frozen=True)
class TrajectoryBundle:
    """Simulated replicas; states and controls have shape (replicas, N, K+1)."""

    grid: TimeGrid
    states: np.ndarray
    controls: np.ndarray
    modes: Optional[ModeTrajectory] = None
    noise: Optional[NoisePaths] = None
    kind: str = ""

    @property
    def replicas(self) -> int:
        return self.states.shape[0]

    @property
    def n(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True)
class CostReport:
    per_agent: np.ndarray
    social: float
    per_capita: float
    standard_error: float
    method: str
    replicas: int = 0


@dataclass(frozen=True)
class GapResult:
    per_capita_centralized: float
    per_capita_decentralized: float
    gap: float
    centralized: CostReport
    decentralized: CostReport


def simulate(
    p: ModelParams, m: AdjacencyMatrix, law: ControlLaw, noise: NoisePaths, x0
) -> TrajectoryBundle:
    """Euler-Maruyama closed loop, vectorized over the replicas of ``noise``."""
    grid = noise.grid
    n = m.n
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,) or law.n != n or noise.correlated.shape[1] != n:
        raise ValidationError(f"Network, law, noise and initial state disagree on N={n}")
    if law.drivers > noise.independent.shape[1]:
        raise ValidationError(
            f"Law needs {law.drivers} drivers, noise provides {noise.independent.shape[1]}"
        )
    ratio = law.riccati.grid.subdivision(grid)

    replicas, steps, dt = noise.replicas, grid.steps, grid.dt
    coupling = (p.b / n) * m.entries
    d_corr = noise.correlated_increments()
    d_ind = noise.independent_increments()[:, : law.drivers]

    states = np.empty((replicas, n, steps + 1))
    controls = np.empty_like(states)
    modes = np.empty((replicas, law.rank, steps + 1))
    x = np.broadcast_to(x0, (replicas, n)).copy()
    phi = np.broadcast_to(law.initial_modes, (replicas, law.rank)).copy()
    states[:, :, 0] = x
    modes[:, :, 0] = phi

    for k in range(steps):
        rk = k * ratio
        u = law.controls(rk, x, phi)
        controls[:, :, k] = u
        drift = p.A * x + p.B * u + x @ coupling.T
        x = x + drift * dt + p.sigma * d_corr[:, :, k]
        phi = law.mode_step(rk, phi, dt, d_ind[:, :, k] @ law.noise_coefficients.T)
        if not np.all(np.isfinite(x)):
            replica, agent = np.argwhere(~np.isfinite(x))[0]
            logger.error(f"Simulation diverged at node {k + 1}, agent {agent}, replica {replica}")
            raise SimulationDivergenceError(k + 1, int(agent), int(replica))
        states[:, :, k + 1] = x
        modes[:, :, k + 1] = phi
    controls[:, :, steps] = law.controls(steps * ratio, x, phi)

    return TrajectoryBundle(
        grid=grid,
        states=states,
        controls=controls,
        modes=ModeTrajectory(grid=grid, values=modes, coefficients=law.noise_coefficients),
        noise=noise,
        kind=law.kind,
    )


def simulate_replicas(
    p: ModelParams,
    m: AdjacencyMatrix,
    law: ControlLaw,
    f: NoiseFactorization,
    x0,
    grid: TimeGrid,
    replicas: int,
    seed: int,
    batch_size: int = 500,
) -> Iterator[TrajectoryBundle]:
    """Yield bundles of at most ``batch_size`` replicas; batch b uses noise stream b."""
    if replicas < 1 or batch_size < 1:
        raise ValidationError("Replica and batch counts must be positive")
    for stream, start in enumerate(range(0, replicas, batch_size)):
        count = min(batch_size, replicas - start)
        noise = sample_noise(f, grid.dt, grid.T, seed, replicas=count, stream=stream)
        yield simulate(p, m, law, noise, x0)


def _tracking(p: ModelParams, m: AdjacencyMatrix) -> np.ndarray:
    n = m.n
    return np.eye(n) - (p.Gamma / n) * m.entries


def _replica_costs(bundle: TrajectoryBundle, p: ModelParams, m: AdjacencyMatrix) -> np.ndarray:
    """Per-replica, per-agent costs, shape (replicas, N)."""
    tracked = np.einsum("ij,rjk->rik", _tracking(p, m), bundle.states)
    running = 0.5 * (p.Q * tracked**2 + p.R * bundle.controls**2)
    terminal = 0.5 * p.Q_T * bundle.states[:, :, -1] ** 2
    return trapezoid(running, dx=bundle.grid.dt, axis=-1) + terminal


def cost_mc(bundles: Iterable[TrajectoryBundle], p: ModelParams, m: AdjacencyMatrix) -> CostReport:
    """Sample-mean social cost over all replicas of all bundles."""
    samples = []
    for bundle in bundles:
        if bundle.n != m.n:
            raise ValidationError(f"Bundle has {bundle.n} agents, network has {m.n}")
        samples.append(_replica_costs(bundle, p, m))
    if not samples:
        raise ValidationError("cost_mc needs at least one bundle")

    costs = np.concatenate(samples, axis=0)
    replicas = costs.shape[0]
    per_agent = costs.mean(axis=0)
    social = float(per_agent.sum())
    per_capita_samples = costs.sum(axis=1) / m.n
    standard_error = (
        float(np.std(per_capita_samples, ddof=1) / np.sqrt(replicas))
        if replicas > 1
        else float("nan")
    )
    return CostReport(
        per_agent=per_agent,
        social=social,
        per_capita=social / m.n,
        standard_error=standard_error,
        method="mc",
        replicas=replicas,
    )


def embedded_cost(bundle: TrajectoryBundle, p: ModelParams, m: AdjacencyMatrix) -> float:
    """Per-capita cost written on L2[0, 1] through step vector norms."""
    graphon = StepGraphon(m)
    grid = bundle.grid
    totals = []
    for r in range(bundle.replicas):
        running = np.empty(grid.steps + 1)
        for k in range(grid.steps + 1):
            x = embed(bundle.states[r, :, k])
            u = embed(bundle.controls[r, :, k])
            tracked = embed(x.values - p.Gamma * graphon.apply(x).values)
            running[k] = 0.5 * (p.Q * tracked.norm() ** 2 + p.R * u.norm() ** 2)
        terminal = 0.5 * p.Q_T * embed(bundle.states[r, :, -1]).norm() ** 2
        totals.append(trapezoid(running, dx=grid.dt) + terminal)
    return float(np.mean(totals))


def _expected_squares(S: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """E[(S z)_i^2] = (S cov S^T)_ii + (S mean)_i^2 for every row of S."""
    return np.einsum("ij,jk,ik->i", S, cov, S) + (S @ mean) ** 2


def _propagate_moments(
    p: ModelParams,
    m: AdjacencyMatrix,
    law: ControlLaw,
    noise_f: NoiseFactorization,
    x0,
    grid: TimeGrid,
    integrand: Callable,
):
    """RK4 on the mean and covariance of z = (x, phi).

    ``integrand(k, rk, mean, cov)`` is evaluated at every node k of ``grid``
    (rk is the matching Riccati node); returns the stacked integrand values
    and the terminal mean and covariance.
    """
    n, r = m.n, law.rank
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,) or law.n != n or noise_f.n != n:
        raise ValidationError(f"Network, law, noise and initial state disagree on N={n}")
    if law.drivers > noise_f.rank:
        raise ValidationError(f"Law needs {law.drivers} drivers, factorization has {noise_f.rank}")
    ratio = law.riccati.grid.subdivision(grid)
    if ratio % 2:
        raise GridMismatchError(
            "Exact costs need Riccati values at half steps; refine the law's Riccati grid"
        )

    dim = n + r
    open_loop = p.A * np.eye(n) + (p.b / n) * m.entries
    diffusion = np.zeros((dim, noise_f.rank))
    diffusion[:n] = p.sigma * noise_f.factor
    diffusion[n:, : law.drivers] = law.noise_coefficients
    noise_cov = diffusion @ diffusion.T

    def drift(rk):
        state_gain, mode_gain = law.gains(rk)
        F = np.zeros((dim, dim))
        F[:n, :n] = open_loop + p.B * state_gain
        F[:n, n:] = p.B * mode_gain
        F[n:, n:] = np.diag(law.mode_drift(rk))
        return F

    def cov_rhs(F, S):
        return F @ S + S @ F.T + noise_cov

    mean = np.concatenate([x0, law.initial_modes])
    cov = np.zeros((dim, dim))
    h = grid.dt
    values = [integrand(0, 0, mean, cov)]
    for k in range(grid.steps):
        F0 = drift(k * ratio)
        Fh = drift(k * ratio + ratio // 2)
        F1 = drift((k + 1) * ratio)

        m1, c1 = F0 @ mean, cov_rhs(F0, cov)
        m2, c2 = Fh @ (mean + 0.5 * h * m1), cov_rhs(Fh, cov + 0.5 * h * c1)
        m3, c3 = Fh @ (mean + 0.5 * h * m2), cov_rhs(Fh, cov + 0.5 * h * c2)
        m4, c4 = F1 @ (mean + h * m3), cov_rhs(F1, cov + h * c3)
        mean = mean + h / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4)
        cov = cov + h / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
        cov = 0.5 * (cov + cov.T)
        values.append(integrand(k + 1, (k + 1) * ratio, mean, cov))
    return np.array(values), mean, cov


def cost_exact(
    p: ModelParams,
    m: AdjacencyMatrix,
    law: ControlLaw,
    noise_f: NoiseFactorization,
    x0,
    grid: TimeGrid,
) -> CostReport:
    """Expected social cost from the first two moments of (x, phi).

    The stacked state z = (x, phi) follows dz = F_t z dt + G dW with the
    driver vector W of ``noise_f``. Mean and covariance are advanced with RK4
    using Riccati values at half steps, so the law's Riccati grid must
    subdivide ``grid`` by an even factor.
    """
    n, r = m.n, law.rank
    tracking = np.zeros((n, n + r))
    tracking[:, :n] = _tracking(p, m)

    def running_cost(k, rk, mean, cov):
        gain = np.hstack(law.gains(rk))
        tracked = _expected_squares(tracking, mean, cov)
        effort = _expected_squares(gain, mean, cov)
        return 0.5 * (p.Q * tracked + p.R * effort)

    running, mean, cov = _propagate_moments(p, m, law, noise_f, x0, grid, running_cost)
    terminal = 0.5 * p.Q_T * (np.diag(cov)[:n] + mean[:n] ** 2)
    per_agent = trapezoid(running, dx=grid.dt, axis=0) + terminal
    social = float(per_agent.sum())
    return CostReport(
        per_agent=per_agent,
        social=social,
        per_capita=social / n,
        standard_error=0.0,
        method="exact",
    )


def regret_exact(
    p: ModelParams,
    m: AdjacencyMatrix,
    law: ControlLaw,
    optimal: ControlLaw,
    noise_f: NoiseFactorization,
    x0,
    grid: TimeGrid,
) -> float:
    """Per-capita excess cost of ``law`` over the centralized optimum.

    Completing the square in the value function gives
    J(u) - J(u*) = (R/2) E int ||u - u*(x)||^2 dt with u*(x) = -(2B/R) P x,
    evaluated here on the moments of the closed loop under ``law``.
    """
    if optimal.kind != CENTRALIZED or optimal.extra_gain is not None:
        raise ValidationError("Regret is measured against the unperturbed centralized law")
    n = m.n

    def squared_deviation(k, rk, mean, cov):
        P = assemble_matrix(optimal.riccati, optimal.spectrum, n, optimal.riccati_index(grid, k))
        state_gain, mode_gain = law.gains(rk)
        deviation = np.hstack([state_gain + p.feedback_weight * P, mode_gain])
        return float(np.sum(_expected_squares(deviation, mean, cov)))

    values, _, _ = _propagate_moments(p, m, law, noise_f, x0, grid, squared_deviation)
    return float(0.5 * p.R * trapezoid(values, dx=grid.dt) / n)


def optimality_gap(
    p: ModelParams,
    m: AdjacencyMatrix,
    q: CorrelationMatrix,
    limit_m: FiniteRankGraphon,
    limit_q: QWienerSpec,
    x0_profile: Callable,
    grid: TimeGrid,
    seed: int = 0,
    method: str = "exact",
    replicas: int = 1000,
    batch_size: int = 500,
    compare_law: ControlLaw = None,
) -> GapResult:
    """Per-capita cost of the decentralized law minus the centralized optimum.

    Both arms use the factorization of Q_N aligned to ``limit_q``: the
    centralized law sees all of its drivers, the decentralized law the first
    d. With method "mc" both arms consume identical noise paths; with
    "exact" the gap is evaluated by regret_exact.
    """
    n = m.n
    if q.n != n:
        raise ValidationError(f"Correlation has {q.n} agents, network has {n}")
    aligned = align_factorization(factor_correlation(q), limit_q)
    x0 = initial_states(x0_profile, n)

    centralized = build_centralized_law(p, m, aligned, x0, grid)
    decentralized = compare_law or build_decentralized_law(
        p, limit_m, limit_q, n, x0_profile, grid
    )

    if method == "exact":
        cen = cost_exact(p, m, centralized, aligned, x0, grid)
        dec = cost_exact(p, m, decentralized, aligned, x0, grid)
    elif method == "mc":

        def run(law):
            bundles = simulate_replicas(
                p, m, law, aligned, x0, grid, replicas, seed, batch_size
            )
            return cost_mc(bundles, p, m)

        cen, dec = run(centralized), run(decentralized)
    else:
        raise ValidationError(f"Unknown cost method {method!r}; use 'exact' or 'mc'")

    gap = dec.per_capita - cen.per_capita
    if method == "exact":
        if gap < -GAP_TOLERANCE:
            logger.error(
                f"N={n}: decentralized cost {dec.per_capita} beats centralized {cen.per_capita}"
            )
            raise ConventionError(
                f"Negative optimality gap {gap:.3e} at N={n}; the centralized law must be optimal"
            )
        # same quantity, written as a nonnegative integral
        gap = regret_exact(p, m, decentralized, centralized, aligned, x0, grid)
    logger.info(
        f"N={n}: centralized {cen.per_capita:.10g}, "
        f"decentralized {dec.per_capita:.10g}, gap {gap:.3e}"
    )
    return GapResult(
        per_capita_centralized=cen.per_capita,
        per_capita_decentralized=dec.per_capita,
        gap=gap,
        centralized=cen,
        decentralized=dec,
    )
