# This file is part of graphon-lq-control.
# Copyright (C) 2024 graphon-lq-control contributors
#
# graphon-lq-control is free software; you can redistribute it and/or
# modify it under the terms of the MIT License; see the
# LICENSE file for more details.

"""
Tests for the logging module.
"""

import logging

import pytest

from graphon_lq import logger as log_module
from graphon_lq.logger import LOG_DIR_ENV, ExperimentLogger, get_logger, setup_logging


@pytest.fixture(autouse=True)
def fresh_logger(monkeypatch):
    monkeypatch.delenv(LOG_DIR_ENV, raising=False)
    monkeypatch.setattr(log_module, "_logger_instance", None)
    yield
    logging.getLogger("graphon_lq").handlers.clear()


class TestExperimentLogger:
    def test_console_only_by_default(self):
        log = ExperimentLogger("graphon_lq_test")
        assert log.get_log_file_path() is None
        assert log.read_last_lines() == "Log file does not exist yet."
        assert len(log.logger.handlers) == 1

    def test_file_handler(self, tmp_path):
        log = ExperimentLogger("graphon_lq_test", log_dir=tmp_path / "logs")
        log.info("Testing logger module...")
        log.debug("Debug message test")
        path = log.get_log_file_path()
        assert path == tmp_path / "logs" / ExperimentLogger.LOG_FILE
        text = log.read_last_lines(5)
        assert "Testing logger module..." in text
        assert "DEBUG" in text

    def test_log_dir_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv(LOG_DIR_ENV, str(tmp_path))
        log = ExperimentLogger("graphon_lq_test")
        assert log.get_log_file_path() == tmp_path / ExperimentLogger.LOG_FILE

    def test_log_config_sorted(self, tmp_path):
        log = ExperimentLogger("graphon_lq_test", log_dir=tmp_path)
        log.log_config({"seed": 3, "N": 16}, "Test Configuration")
        text = log.read_last_lines(10)
        assert "=== Test Configuration ===" in text
        assert text.index("N: 16") < text.index("seed: 3")

    def test_read_last_lines_limit(self, tmp_path):
        log = ExperimentLogger("graphon_lq_test", log_dir=tmp_path)
        for i in range(20):
            log.info(f"line {i}")
        text = log.read_last_lines(3)
        assert "line 19" in text
        assert "line 16" not in text


class TestGlobalLogger:
    def test_get_logger_is_cached(self):
        assert get_logger() is get_logger()

    def test_setup_logging_rebuilds(self, tmp_path):
        first = get_logger()
        second = setup_logging(log_dir=tmp_path)
        assert second is not first
        assert get_logger() is second

    def test_verbose_console(self):
        log = setup_logging(verbose=True)
        assert all(h.level == logging.DEBUG for h in log.logger.handlers)

    def test_module_records_reach_log_file(self, tmp_path):
        setup_logging(log_dir=tmp_path)
        logging.getLogger("graphon_lq.noise").warning("Clipping eigenvalue")
        assert "Clipping eigenvalue" in log_module.read_last_lines(5)

    def test_experiment_banner(self, tmp_path):
        setup_logging(log_dir=tmp_path)
        log_module.log_experiment("gap", {"seed": 0})
        text = log_module.read_last_lines(5)
        assert "EXPERIMENT: gap" in text
        assert "seed: 0" in text
