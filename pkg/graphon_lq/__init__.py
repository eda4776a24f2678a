# This file is part of graphon-lq-control.
# Copyright (C) 2024 graphon-lq-control contributors
#
# graphon-lq-control is free software; you can redistribute it and/or
# modify it under the terms of the MIT License; see the
# LICENSE file for more details.

"""Centralized and decentralized LQ control of agents on graphon networks."""

__version__ = "0.1.0"

from .control import ControlLaw, build_centralized_law, build_decentralized_law
from .exceptions import GraphonLQError, ValidationError
from .graphon import (
    AdjacencyMatrix,
    FiniteRankGraphon,
    StepGraphon,
    StepVector,
    load_adjacency,
    named_limit_graphon,
    step_graphon_spectrum,
)
from .noise import (
    CorrelationMatrix,
    QWienerSpec,
    align_factorization,
    factor_correlation,
    load_correlation,
    named_q_wiener,
    sample_noise,
)
from .riccati import ModelParams, TimeGrid, solve_all
from .sim import cost_exact, cost_mc, optimality_gap, simulate

__all__ = [
    "AdjacencyMatrix",
    "ControlLaw",
    "CorrelationMatrix",
    "FiniteRankGraphon",
    "GraphonLQError",
    "ModelParams",
    "QWienerSpec",
    "StepGraphon",
    "StepVector",
    "TimeGrid",
    "ValidationError",
    "align_factorization",
    "build_centralized_law",
    "build_decentralized_law",
    "cost_exact",
    "cost_mc",
    "factor_correlation",
    "load_adjacency",
    "load_correlation",
    "named_limit_graphon",
    "named_q_wiener",
    "optimality_gap",
    "sample_noise",
    "simulate",
    "solve_all",
    "step_graphon_spectrum",
]
