# This file is part of graphon-lq-control.
# Copyright (C) 2024 graphon-lq-control contributors
#
# graphon-lq-control is free software; you can redistribute it and/or
# modify it under the terms of the MIT License; see the
# LICENSE file for more details.

"""
Pytest configuration and fixtures for graphon-lq-control tests.

Shared model parameters, grids and the cosine network used by most test
files live here.
"""

import numpy as np
import pytest

from graphon_lq.graphon import named_adjacency, named_limit_graphon
from graphon_lq.noise import (
    align_factorization,
    factor_correlation,
    named_correlation,
    named_q_wiener,
)
from graphon_lq.riccati import ModelParams, TimeGrid
from graphon_lq.sim import initial_profile, initial_states


@pytest.fixture
def params():
    """Default model parameters."""
    return ModelParams()


@pytest.fixture
def coarse_grid():
    """Simulation grid with dt = 0.01 on [0, 1]."""
    return TimeGrid(1.0, 100)


@pytest.fixture
def cosine_network():
    """Cosine graphon, cosine correlation and aligned drivers at N = 8."""
    n = 8
    m = named_adjacency("cosine", n)
    q = named_correlation("cosine", n)
    limit_q = named_q_wiener("cosine-kernel")
    aligned = align_factorization(factor_correlation(q), limit_q)
    profile = initial_profile("ramp")
    return {
        "n": n,
        "m": m,
        "q": q,
        "limit_m": named_limit_graphon("cosine"),
        "limit_q": limit_q,
        "aligned": aligned,
        "profile": profile,
        "x0": initial_states(profile, n),
    }


@pytest.fixture
def rng():
    """Deterministic generator for random test inputs."""
    return np.random.default_rng(20240101)


@pytest.fixture
def matrix_file(tmp_path):
    """Write a matrix in the plain-text format and return its path."""

    def write(entries, name="matrix.txt"):
        entries = np.asarray(entries, dtype=float)
        lines = [str(entries.shape[0])]
        lines += [" ".join(repr(float(v)) for v in row) for row in entries]
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return write


# Configuration for pytest
def pytest_configure(config):
    """Configure pytest."""
    config.addinivalue_line("markers", "slow: mark test as slow running")
    config.addinivalue_line(
        "markers", "acceptance: numerical acceptance check of the whole pipeline"
    )


def pytest_collection_modifyitems(config, items):
    """Modify test collection."""
    skip_slow = pytest.mark.skip(reason="slow test")
    for item in items:
        if "slow" in item.keywords and config.getoption("--skip-slow"):
            item.add_marker(skip_slow)


# Command line options
def pytest_addoption(parser):
    """Add command line options."""
    parser.addoption(
        "--skip-slow",
        action="store_true",
        default=False,
        help="Skip slow tests",
    )
