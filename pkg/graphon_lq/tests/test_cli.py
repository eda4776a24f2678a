# This file is part of graphon-lq-control.
# Copyright (C) 2024 graphon-lq-control contributors
#
# graphon-lq-control is free software; you can redistribute it and/or
# modify it under the terms of the MIT License; see the
# LICENSE file for more details.

"""
End-to-end tests of the graphon-lq command.
"""

import csv
import io
import json

import pytest

from graphon_lq.cli import EXIT_DIAGNOSTIC, EXIT_INPUT, EXIT_OK, EXIT_REGRESSION, main
from graphon_lq.exceptions import RiccatiDivergenceError
from graphon_lq.experiments import EXPERIMENTS, ExperimentResult, gap_regression


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def config_file(tmp_path):
    def write(text):
        path = tmp_path / "run.cfg"
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write


class TestSpectrumCommand:
    def test_cosine_has_two_half_eigenvalues(self, capsys):
        assert main(["spectrum", "--N", "16"]) == EXIT_OK
        rows = _rows(capsys.readouterr().out)
        assert len(rows) == 2
        for row in rows:
            assert float(row["eigenvalue"]) == pytest.approx(0.5, rel=1e-10)

    def test_zero_graphon_gives_empty_table(self, capsys, config_file):
        path = config_file("graphon = zero\nN = 6\n")
        assert main(["spectrum", "--config", path]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.strip() == "index,eigenvalue,matrix_eigenvalue"

    def test_correlation_spectrum(self, capsys, config_file):
        path = config_file("spectrum_of = correlation\ncorrelation = identity\nN = 4\n")
        assert main(["spectrum", "--config", path]) == EXIT_OK
        rows = _rows(capsys.readouterr().out)
        assert [float(r["eigenvalue"]) for r in rows] == pytest.approx([0.25] * 4)

    def test_side_table_written(self, tmp_path):
        out = tmp_path / "spec.csv"
        assert main(["spectrum", "--N", "8", "--out", str(out)]) == EXIT_OK
        vectors = _rows((tmp_path / "spec.eigenvectors.csv").read_text(encoding="utf-8"))
        assert len(vectors) == 8
        assert set(vectors[0]) == {"node", "v_1", "v_2"}

    def test_malformed_matrix_file(self, tmp_path, config_file, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("2\n0 1\n1\n", encoding="utf-8")
        path = config_file(f"graphon = {bad}\n")
        assert main(["spectrum", "--config", path]) == EXIT_INPUT
        err = capsys.readouterr().err
        assert "graphon-lq: error:" in err
        assert f"{bad}:3:" in err

    def test_json_summary(self, capsys):
        assert main(["spectrum", "--N", "8", "--out", "", "--json"]) == EXIT_OK
        out = capsys.readouterr().out
        summary = json.loads(out.strip().splitlines()[-1])
        assert summary["rank"] == 2
        assert summary["source"] == "graphon"


class TestRiccatiCommand:
    def test_table_shape(self, capsys):
        assert main(["riccati", "--N", "8", "--dt", "0.01"]) == EXIT_OK
        rows = _rows(capsys.readouterr().out)
        assert len(rows) == 101
        assert set(rows[0]) == {"t", "perp", "mode_1", "mode_2"}
        assert float(rows[-1]["perp"]) == pytest.approx(0.5)


class TestSimulateCommand:
    ARGS = ["simulate", "--N", "4", "--dt", "0.02", "--replicas", "30", "--seed", "7"]

    def test_deterministic_output(self, tmp_path):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(self.ARGS + ["--out", str(first)]) == EXIT_OK
        assert main(self.ARGS + ["--out", str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

    def test_rows_per_law(self, capsys):
        assert main(self.ARGS + ["--law", "decentralized"]) == EXIT_OK
        rows = _rows(capsys.readouterr().out)
        assert [(r["law"], r["method"]) for r in rows] == [
            ("decentralized", "mc"),
            ("decentralized", "exact"),
        ]

    def test_trajectory_tables(self, tmp_path, config_file):
        path = config_file("trajectories = true\n")
        out = tmp_path / "sim.csv"
        assert main(self.ARGS + ["--config", path, "--out", str(out)]) == EXIT_OK
        for law in ("centralized", "decentralized"):
            rows = _rows((tmp_path / f"sim.trajectories_{law}.csv").read_text(encoding="utf-8"))
            assert len(rows) == 51
            assert float(rows[0]["x_1"]) == pytest.approx(0.125)


class TestConvergeCommand:
    def test_ladder(self, capsys, config_file):
        path = config_file("N_values = 8,16,32\n")
        assert main(["converge", "--config", path]) == EXIT_OK
        rows = _rows(capsys.readouterr().out)
        distances = [float(r["op_norm_distance"]) for r in rows]
        assert distances[2] < distances[1] < distances[0]

    def test_too_many_drivers(self, config_file):
        path = config_file("d = 3\n")
        assert main(["converge", "--config", path]) == EXIT_INPUT


class TestGapCommand:
    def test_zero_weights(self, capsys, config_file):
        path = config_file("Q = 0\nQ_T = 0\nN_values = 4,8\ndt = 0.01\n")
        assert main(["gap", "--config", path, "--json"]) == EXIT_OK
        out = capsys.readouterr().out.strip().splitlines()
        summary = json.loads(out[-1])
        assert summary["gaps"] == [0.0, 0.0]
        assert summary["non_increasing"] is True

    def test_single_ladder_entry(self, capsys, config_file):
        path = config_file("N_values = 8\ndt = 0.01\n")
        assert main(["gap", "--config", path]) == EXIT_OK
        rows = _rows(capsys.readouterr().out)
        assert len(rows) == 1
        assert float(rows[0]["gap"]) >= 0

    def test_regression_exit_code(self, monkeypatch, capsys):
        failing = ExperimentResult(
            name="gap", fieldnames=["N"], rows=[{"N": 8}], failure="gap increased"
        )
        monkeypatch.setitem(EXPERIMENTS, "gap", lambda cfg: failing)
        assert main(["gap"]) == EXIT_REGRESSION
        assert "graphon-lq: regression: gap increased" in capsys.readouterr().err

    def test_diagnostic_exit_code(self, monkeypatch):
        def diverge(cfg):
            raise RiccatiDivergenceError("mode 1 left its comparison bound")

        monkeypatch.setitem(EXPERIMENTS, "riccati", diverge)
        assert main(["riccati"]) == EXIT_DIAGNOSTIC


class TestGapRegression:
    def test_non_increasing(self):
        assert gap_regression([3e-4, 2e-5, 2e-5, 1e-7]) is None

    def test_increase_reported(self):
        message = gap_regression([3e-4, 2e-5, 4e-5])
        assert "ladder entry 3" in message


class TestParser:
    def test_command_required(self):
        with pytest.raises(SystemExit):
            main([])

    def test_unknown_law(self):
        with pytest.raises(SystemExit):
            main(["simulate", "--law", "random"])
