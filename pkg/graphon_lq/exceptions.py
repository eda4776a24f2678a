# This file is part of graphon-lq-control.
# Copyright (C) 2024 graphon-lq-control contributors
#
# graphon-lq-control is free software; you can redistribute it and/or
# modify it under the terms of the MIT License; see the
# LICENSE file for more details.

"""
Exception hierarchy for graphon-lq-control.

Input problems derive from ``ValidationError`` (the CLI maps them to exit
code 2), numerical diagnostics from ``DiagnosticError``.
"""


class GraphonLQError(Exception):
    """Base class for all errors raised by the package."""


class ValidationError(GraphonLQError, ValueError):
    """Malformed or inconsistent input."""


class MatrixFileError(ValidationError):
    """A matrix file could not be parsed."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        self.message = message
        super().__init__(f"{self.path}:{line}: {message}")


class ConfigError(ValidationError):
    """Invalid experiment configuration."""


class GridMismatchError(ValidationError):
    """Two time grids cannot be used together."""


class DiagnosticError(GraphonLQError, RuntimeError):
    """A numerical result violates a property it must satisfy."""


class RiccatiDivergenceError(DiagnosticError):
    """A Riccati solution left its comparison bound."""


class SimulationDivergenceError(DiagnosticError):
    """A simulated trajectory produced a non-finite value."""

    def __init__(self, node, agent, replica=0):
        self.node = node
        self.agent = agent
        self.replica = replica
        super().__init__(
            f"Non-finite state at node {node}, agent {agent}, replica {replica}"
        )


class ConventionError(DiagnosticError):
    """The centralized law was beaten, which means mismatched conventions."""


class AcceptanceRegressionError(GraphonLQError):
    """An experiment's regression gate failed."""
