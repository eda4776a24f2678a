# This file is part of graphon-lq-control.
# Copyright (C) 2024 graphon-lq-control contributors
#
# graphon-lq-control is free software; you can redistribute it and/or
# modify it under the terms of the MIT License; see the
# LICENSE file for more details.

"""
Centralized and decentralized feedback laws.

Both laws share one shape,

    u_i = -(2B/R) [Pi_perp x_i + sum_l (Pi_bar^l - Pi_perp) phi^l a_il],

where a_il = N <1_{P_i}, f_l> and phi^l are scalar mode processes driven by
the independent noise drivers. The centralized law uses the spectrum of M_N
and all d_N drivers; the decentralized law only sees the limit graphon, the
limit Q-Wiener spectrum and the first d drivers.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import ValidationError
from .graphon import (
    AdjacencyMatrix,
    FiniteRankGraphon,
    GraphonSpectrum,
    StepGraphon,
    l2_inner,
    step_graphon_spectrum,
)
from .noise import NoiseFactorization, QWienerSpec
from .riccati import ModelParams, RiccatiSolution, TimeGrid, solve_all

logger = logging.getLogger(__name__)

CENTRALIZED = "centralized"
DECENTRALIZED = "decentralized"


@dataclass(frozen=True)
class ModeTrajectory:
    """Mode processes on a simulation grid, shape (replicas, r, K+1)."""

    grid: TimeGrid
    values: np.ndarray
    coefficients: np.ndarray

    @property
    def rank(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ControlLaw:
    """Linear feedback in the agent state and the mode processes.

    ``cell_values`` is the (n, r) matrix a_il, ``noise_coefficients`` the
    (r, d) matrix of mode diffusion coefficients per driver and
    ``extra_gain`` an optional (n, n) feedback added on top of the law.
    """

    kind: str
    params: ModelParams
    riccati: RiccatiSolution
    spectrum: object
    cell_values: np.ndarray
    noise_coefficients: np.ndarray
    initial_modes: np.ndarray
    extra_gain: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if self.kind not in (CENTRALIZED, DECENTRALIZED):
            raise ValidationError(f"Unknown law kind {self.kind!r}")
        if self.cell_values is None:
            raise ValidationError("Control law is missing its cell averages")
        r = self.riccati.rank
        if self.cell_values.shape[1] != r or self.noise_coefficients.shape[0] != r:
            raise ValidationError(
                f"Law has {r} Riccati modes but cell values {self.cell_values.shape} "
                f"and noise coefficients {self.noise_coefficients.shape}"
            )
        if self.initial_modes.shape != (r,):
            raise ValidationError(f"Expected {r} initial mode values")

    @property
    def n(self) -> int:
        return self.cell_values.shape[0]

    @property
    def rank(self) -> int:
        return self.riccati.rank

    @property
    def drivers(self) -> int:
        return self.noise_coefficients.shape[1]

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.riccati.eigenvalues

    def riccati_index(self, grid: TimeGrid, k: int) -> int:
        """Riccati node matching node k of a simulation grid."""
        return k * self.riccati.grid.subdivision(grid)

    def mode_drift(self, t_index: int) -> np.ndarray:
        p = self.params
        return p.A + p.b * self.eigenvalues - p.gain_weight * self.riccati.modes[:, t_index]

    def gains(self, t_index: int):
        """(Kx, Kphi) with u = Kx x + Kphi phi at one Riccati node."""
        weight = self.params.feedback_weight
        state_gain = -weight * self.riccati.perp[t_index] * np.eye(self.n)
        if self.extra_gain is not None:
            state_gain = state_gain + self.extra_gain
        mode_gain = -weight * self.cell_values * self.riccati.deltas(t_index)
        return state_gain, mode_gain

    def controls(self, t_index: int, x: np.ndarray, modes: np.ndarray) -> np.ndarray:
        """Controls of all agents; x is (..., n) and modes is (..., r)."""
        if not 0 <= t_index <= self.riccati.grid.steps:
            raise ValidationError(
                f"Node {t_index} outside Riccati grid of {self.riccati.grid.steps} steps"
            )
        weight = self.params.feedback_weight
        correction = (modes * self.riccati.deltas(t_index)) @ self.cell_values.T
        u = -weight * (self.riccati.perp[t_index] * x + correction)
        if self.extra_gain is not None:
            u = u + x @ self.extra_gain.T
        return u

    def mode_step(self, t_index: int, phi: np.ndarray, dt: float, noise_increment: np.ndarray):
        step = centralized_mode_step if self.kind == CENTRALIZED else decentralized_mode_step
        return step(
            self.params, self.eigenvalues, self.riccati.modes[:, t_index], phi, dt, noise_increment
        )

    def with_extra_gain(self, gain) -> "ControlLaw":
        gain = np.asarray(gain, dtype=float)
        if gain.ndim == 0:
            gain = gain * np.eye(self.n)
        if gain.shape != (self.n, self.n):
            raise ValidationError(f"Extra gain must be {self.n}x{self.n}, got {gain.shape}")
        return ControlLaw(
            kind=self.kind,
            params=self.params,
            riccati=self.riccati,
            spectrum=self.spectrum,
            cell_values=self.cell_values,
            noise_coefficients=self.noise_coefficients,
            initial_modes=self.initial_modes,
            extra_gain=gain,
        )


def mode_noise_coefficients(p: ModelParams, spectrum, noise) -> np.ndarray:
    """Diffusion of each mode process per independent driver.

    For a step spectrum and a factorization of Q_N this is
    sigma/sqrt(N) * <v_j, v_l> sqrt(lambda_j), shape (r, d_N). For a limit
    graphon and a Q-Wiener spec it is sigma sqrt(lambda_j^Q) <f_j^Q, f_l>,
    shape (L, d).
    """
    if isinstance(noise, NoiseFactorization):
        if not isinstance(spectrum, GraphonSpectrum) or spectrum.n != noise.n:
            raise ValidationError("Centralized modes need a step spectrum on the noise's nodes")
        return p.sigma / np.sqrt(noise.n) * spectrum.vectors.T @ noise.factor
    if isinstance(noise, QWienerSpec):
        overlaps = np.array(
            [[l2_inner(fq, fm) for fq in noise.functions] for fm in spectrum.functions]
        ).reshape(spectrum.rank, noise.rank)
        return p.sigma * overlaps * np.sqrt(noise.eigenvalues)
    raise ValidationError(f"Cannot derive mode noise from {type(noise).__name__}")


def centralized_mode_step(p: ModelParams, lam, pi_bar, phi, dt: float, noise_increment):
    """Euler-Maruyama step of phi^{Nl}; lam is the operator eigenvalue lambda^{M_N}/N."""
    return phi + (p.A + p.b * lam - p.gain_weight * pi_bar) * phi * dt + noise_increment


def decentralized_mode_step(p: ModelParams, lam, pi_bar, phi, dt: float, noise_increment):
    """Euler-Maruyama step of the limit mode phi^l."""
    return phi + (p.A - p.gain_weight * pi_bar + p.b * lam) * phi * dt + noise_increment


def build_centralized_law(
    p: ModelParams,
    m: AdjacencyMatrix,
    f: NoiseFactorization,
    x0,
    grid: TimeGrid,
    riccati_grid: TimeGrid = None,
) -> ControlLaw:
    """Optimal law from the full network and correlation data."""
    x0 = np.asarray(x0, dtype=float)
    n = m.n
    if x0.shape != (n,) or f.n != n:
        raise ValidationError(f"Initial state and factorization must have {n} agents")
    riccati_grid = riccati_grid or grid.refine(2)
    riccati_grid.subdivision(grid)

    spectrum = step_graphon_spectrum(StepGraphon(m))
    sol = solve_all(p, spectrum, riccati_grid)
    cells = spectrum.cell_values(n)
    logger.debug(f"Centralized law: N={n}, {spectrum.rank} mode(s), {f.rank} driver(s)")
    return ControlLaw(
        kind=CENTRALIZED,
        params=p,
        riccati=sol,
        spectrum=spectrum,
        cell_values=cells,
        noise_coefficients=mode_noise_coefficients(p, spectrum, f),
        initial_modes=cells.T @ x0 / n,
    )


def build_decentralized_law(
    p: ModelParams,
    limit_m: FiniteRankGraphon,
    limit_q: QWienerSpec,
    n: int,
    x0_profile: Callable,
    grid: TimeGrid,
    riccati_grid: TimeGrid = None,
) -> ControlLaw:
    """Privacy-preserving law built from limit objects only.

    Agent i needs its own state, the d common drivers, the cell averages of
    the limit eigenfunctions over P_i and the limit Riccati functions.
    """
    if not isinstance(limit_m, FiniteRankGraphon):
        raise ValidationError("Decentralized strategies need a finite-rank limit graphon")
    riccati_grid = riccati_grid or grid.refine(2)
    riccati_grid.subdivision(grid)

    sol = solve_all(p, limit_m, riccati_grid)
    logger.debug(f"Decentralized law: N={n}, {limit_m.rank} mode(s), {limit_q.rank} driver(s)")
    return ControlLaw(
        kind=DECENTRALIZED,
        params=p,
        riccati=sol,
        spectrum=limit_m,
        cell_values=limit_m.cell_values(n),
        noise_coefficients=mode_noise_coefficients(p, limit_m, limit_q),
        initial_modes=limit_m.inner_with(x0_profile),
    )


def _control_at(
    law: ControlLaw, t_index: int, i: int, x_i: float, modes: ModeTrajectory, replica: int
):
    if not 0 <= i < law.n:
        raise ValidationError(f"Agent {i} outside 0..{law.n - 1}")
    if not 0 <= t_index <= modes.grid.steps:
        raise ValidationError(f"Node {t_index} outside grid of {modes.grid.steps} steps")
    if law.extra_gain is not None:
        raise ValidationError("Per-agent evaluation is not defined for laws with an extra gain")
    rk = law.riccati_index(modes.grid, t_index)
    weight = law.params.feedback_weight
    phi = modes.values[replica, :, t_index]
    correction = float(np.sum(law.riccati.deltas(rk) * phi * law.cell_values[i]))
    u = -weight * (law.riccati.perp[rk] * x_i + correction)
    return float(u)


def centralized_control(
    law: ControlLaw, t_index: int, i: int, x_i: float, modes: ModeTrajectory, replica: int = 0
) -> float:
    """u_i = -(2B/R)[Pi_perp x_i + sqrt(N) sum_l (Pi_bar^{Nl} - Pi_perp) phi^{Nl} v_l(i)]."""
    if law.kind != CENTRALIZED:
        raise ValidationError("centralized_control needs a centralized law")
    return _control_at(law, t_index, i, x_i, modes, replica)


def decentralized_control(
    law: ControlLaw, t_index: int, x_hat_i: float, modes: ModeTrajectory, i: int, replica: int = 0
) -> float:
    """u_i from the agent's own state, the limit modes and its cell averages."""
    if law.kind != DECENTRALIZED:
        raise ValidationError("decentralized_control needs a decentralized law")
    return _control_at(law, t_index, i, x_hat_i, modes, replica)
