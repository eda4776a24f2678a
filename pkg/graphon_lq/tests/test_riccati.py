# This file is part of graphon-lq-control.
# Copyright (C) 2024 graphon-lq-control contributors
#
# graphon-lq-control is free software; you can redistribute it and/or
# modify it under the terms of the MIT License; see the
# LICENSE file for more details.

"""
Tests for the mode Riccati equations, their assembly and the dense oracle.
"""

import numpy as np
import pytest

from graphon_lq.exceptions import GridMismatchError, RiccatiDivergenceError, ValidationError
from graphon_lq.graphon import (
    AdjacencyMatrix,
    StepGraphon,
    named_adjacency,
    named_limit_graphon,
    step_graphon_spectrum,
)
from graphon_lq.noise import named_correlation, named_q_wiener
from graphon_lq.riccati import (
    ModelParams,
    RiccatiSolution,
    TimeGrid,
    assemble_matrix,
    centralized_value,
    comparison_bound,
    dense_riccati_oracle,
    limit_value,
    solve_all,
    solve_mode_riccati,
)
from graphon_lq.sim import initial_profile, initial_states


def _spectrum(key, n):
    return step_graphon_spectrum(StepGraphon(named_adjacency(key, n)))


class TestModelParams:
    """Parameter validation."""

    def test_defaults(self):
        p = ModelParams()
        assert (p.A, p.b, p.sigma, p.Gamma) == (1.0, 0.5, 0.3, 0.5)
        assert p.gain_weight == 2.0
        assert p.feedback_weight == 2.0

    @pytest.mark.parametrize("changes", [{"R": 0.0}, {"Q": -1.0}, {"T": 0.0}, {"A": np.nan}])
    def test_invalid(self, changes):
        with pytest.raises(ValidationError):
            ModelParams(**changes)

    def test_replace(self):
        assert ModelParams().replace(sigma=0).sigma == 0.0


class TestTimeGrid:
    """Uniform time grids."""

    def test_from_step(self):
        grid = TimeGrid.from_step(1.0, 1e-3)
        assert grid.steps == 1000
        assert grid.nodes[-1] == pytest.approx(1.0)

    def test_non_multiple(self):
        with pytest.raises(ValidationError):
            TimeGrid.from_step(1.0, 0.3)

    def test_subdivision(self):
        coarse = TimeGrid(1.0, 100)
        assert coarse.refine(4).subdivision(coarse) == 4
        with pytest.raises(GridMismatchError):
            TimeGrid(1.0, 150).subdivision(coarse)


class TestSolveModeRiccati:
    """Scalar Riccati equations."""

    def test_zero_weights(self):
        p = ModelParams(Q=0.0, Q_T=0.0)
        assert np.all(solve_mode_riccati(p, 0.5, TimeGrid(1.0, 50)) == 0)

    def test_linear_case(self):
        p = ModelParams(A=0.0, B=0.0, b=0.0, Q=2.0, Gamma=0.0, Q_T=0.0)
        grid = TimeGrid(1.0, 100)
        assert np.allclose(solve_mode_riccati(p, 0.3, grid), 1.0 - grid.nodes, atol=1e-12)

    def test_tanh_solution(self):
        p = ModelParams(A=0.0, b=0.0, B=1.0, R=1.0, Q=2.0, Gamma=0.0, Q_T=0.0)
        grid = TimeGrid.from_step(1.0, 1e-4)
        exact = np.tanh(np.sqrt(2.0) * (1.0 - grid.nodes)) / np.sqrt(2.0)
        assert np.max(np.abs(solve_mode_riccati(p, 0.0, grid) - exact)) <= 1e-8

    def test_terminal_value(self, params, coarse_grid):
        assert solve_mode_riccati(params, -0.7, coarse_grid)[-1] == 0.5 * params.Q_T

    def test_comparison_bound(self, params, coarse_grid):
        for lam in (-1.0, -0.3, 0.0, 0.5, 1.0):
            values = solve_mode_riccati(params, lam, coarse_grid)
            assert np.all(values >= 0)
            assert np.all(values <= comparison_bound(params, lam, coarse_grid) + 1e-12)

    def test_fourth_order(self, params):
        reference = solve_mode_riccati(params, 0.5, TimeGrid(1.0, 10000))
        errors = []
        for steps in (10, 20):
            values = solve_mode_riccati(params, 0.5, TimeGrid(1.0, steps))
            errors.append(np.max(np.abs(values - reference[:: 10000 // steps])))
        assert 10 < errors[0] / errors[1] < 22

    def test_eigenvalue_out_of_range(self, params, coarse_grid):
        with pytest.raises(ValidationError):
            solve_mode_riccati(params, 1.5, coarse_grid)

    def test_divergence_is_diagnosed(self, coarse_grid):
        p = ModelParams(B=0.0, A=1.0)
        with pytest.MonkeyPatch.context() as mp:
            mp.setattr("graphon_lq.riccati.DIVERGENCE_FACTOR", 0.5)
            with pytest.raises(RiccatiDivergenceError):
                solve_mode_riccati(p, 0.0, coarse_grid)


class TestSolveAll:
    """Riccati solutions for whole spectra."""

    def test_rank_zero(self, params, coarse_grid):
        sol = solve_all(params, _spectrum("zero", 4), coarse_grid)
        assert sol.rank == 0
        assert np.array_equal(sol.perp, solve_mode_riccati(params, 0.0, coarse_grid))

    def test_cosine_modes_identical(self, params, coarse_grid):
        sol = solve_all(params, _spectrum("cosine", 8), coarse_grid)
        assert sol.rank == 2
        assert np.array_equal(sol.modes[0], sol.modes[1])
        assert np.all(sol.modes[:, -1] == 0.5 * params.Q_T)
        assert sol.perp[-1] == 0.5 * params.Q_T

    def test_limit_graphon_spectrum(self, params, coarse_grid):
        sol = solve_all(params, named_limit_graphon("cosine"), coarse_grid)
        step = solve_all(params, _spectrum("cosine", 16), coarse_grid)
        assert np.allclose(sol.modes, step.modes, atol=1e-12)


class TestAssembleMatrix:
    """Agent-coordinate matrices of the operator Riccati solution."""

    def test_rank_zero(self, params, coarse_grid):
        spectrum = _spectrum("zero", 4)
        sol = solve_all(params, spectrum, coarse_grid)
        assert np.allclose(assemble_matrix(sol, spectrum, 4, 10), sol.perp[10] * np.eye(4))

    def test_terminal(self, params, coarse_grid):
        spectrum = _spectrum("cosine", 6)
        sol = solve_all(params, spectrum, coarse_grid)
        P = assemble_matrix(sol, spectrum, 6, coarse_grid.steps)
        assert np.allclose(P, 0.5 * params.Q_T * np.eye(6), atol=1e-14)

    def test_symmetric_psd(self, params, coarse_grid, rng):
        a = rng.uniform(-1, 1, size=(8, 8))
        spectrum = step_graphon_spectrum(StepGraphon(AdjacencyMatrix(np.triu(a) + np.triu(a, 1).T)))
        sol = solve_all(params, spectrum, coarse_grid)
        for k in range(0, coarse_grid.steps + 1, 10):
            P = assemble_matrix(sol, spectrum, 8, k)
            assert np.max(np.abs(P - P.T)) <= 1e-12
            assert np.min(np.linalg.eigvalsh(P)) >= -1e-9

    def test_wrong_size(self, params, coarse_grid):
        spectrum = _spectrum("cosine", 6)
        sol = solve_all(params, spectrum, coarse_grid)
        with pytest.raises(ValidationError):
            assemble_matrix(sol, spectrum, 7, 0)

    def test_matches_dense_oracle_n8(self, params, coarse_grid):
        m = named_adjacency("cosine", 8)
        spectrum = step_graphon_spectrum(StepGraphon(m))
        sol = solve_all(params, spectrum, coarse_grid)
        dense = dense_riccati_oracle(params, m, coarse_grid)
        for k in range(coarse_grid.steps + 1):
            assert np.max(np.abs(assemble_matrix(sol, spectrum, 8, k) - dense[k])) <= 1e-6

    @pytest.mark.slow
    @pytest.mark.acceptance
    def test_matches_dense_oracle_n32(self, params):
        grid = TimeGrid.from_step(1.0, 1e-3)
        m = named_adjacency("cosine", 32)
        spectrum = step_graphon_spectrum(StepGraphon(m))
        sol = solve_all(params, spectrum, grid)
        dense = dense_riccati_oracle(params, m, grid)
        deviation = max(
            np.max(np.abs(assemble_matrix(sol, spectrum, 32, k) - dense[k]))
            for k in range(grid.steps + 1)
        )
        assert deviation <= 1e-6

    def test_random_graphons_match_oracle(self, params, coarse_grid, rng):
        for n in (3, 10):
            a = rng.uniform(-1, 1, size=(n, n))
            m = AdjacencyMatrix(np.triu(a) + np.triu(a, 1).T)
            spectrum = step_graphon_spectrum(StepGraphon(m))
            sol = solve_all(params, spectrum, coarse_grid)
            dense = dense_riccati_oracle(params, m, coarse_grid)
            assert np.max(np.abs(assemble_matrix(sol, spectrum, n, 0) - dense[0])) <= 1e-6


class TestDenseOracle:
    """Dense matrix Riccati equation."""

    def test_zero_graph_is_diagonal(self, params, coarse_grid):
        dense = dense_riccati_oracle(params, named_adjacency("zero", 4), coarse_grid)
        perp = solve_mode_riccati(params, 0.0, coarse_grid)
        for k in (0, 50, 100):
            assert np.allclose(dense[k], perp[k] * np.eye(4), atol=1e-12)

    def test_single_node(self, params, coarse_grid):
        dense = dense_riccati_oracle(params, AdjacencyMatrix([[1.0]]), coarse_grid)
        assert np.allclose(dense[:, 0, 0], solve_mode_riccati(params, 1.0, coarse_grid), atol=1e-12)


class TestValues:
    """Closed-form optimal costs."""

    def test_centralized_value_without_noise(self, params, coarse_grid):
        p = params.replace(sigma=0.0)
        n = 8
        spectrum = _spectrum("cosine", n)
        sol = solve_all(p, spectrum, coarse_grid)
        x0 = initial_states(initial_profile("ramp"), n)
        value = centralized_value(p, sol, spectrum, named_correlation("cosine", n), x0)
        expected = x0 @ assemble_matrix(sol, spectrum, n, 0) @ x0 / n
        assert value == pytest.approx(expected, rel=1e-12)

    def test_centralized_value_approaches_limit(self, params, coarse_grid):
        profile = initial_profile("ramp")
        limit_m = named_limit_graphon("cosine")
        limit = limit_value(
            params,
            solve_all(params, limit_m, coarse_grid),
            limit_m,
            named_q_wiener("cosine-kernel"),
            profile,
        )
        differences = []
        for n in (8, 32):
            spectrum = _spectrum("cosine", n)
            sol = solve_all(params, spectrum, coarse_grid)
            value = centralized_value(
                params, sol, spectrum, named_correlation("cosine", n), initial_states(profile, n)
            )
            differences.append(abs(value - limit))
        assert differences[1] < differences[0]

    def test_solution_shapes(self, params, coarse_grid):
        sol = solve_all(params, _spectrum("cosine", 4), coarse_grid)
        assert isinstance(sol, RiccatiSolution)
        assert sol.modes.shape == (2, coarse_grid.steps + 1)
        assert sol.deltas(0).shape == (2,)
