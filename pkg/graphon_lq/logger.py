"""
Logging module for graphon-lq-control.
Console output for experiment progress and an optional rotating log file
for troubleshooting long runs.
"""

import logging
import logging.handlers
import os
import sys
from pathlib import Path

LOG_DIR_ENV = "GRAPHON_LQ_LOG_DIR"


class ExperimentLogger:
    """Logger for experiment runs."""

    LOG_FILE = "graphon-lq.log"

    def __init__(self, name="graphon_lq", log_dir=None):
        """Initialize logger.

        Args:
            name: Logger name (default: "graphon_lq", the package root)
            log_dir: Directory for the rotating log file; falls back to the
                GRAPHON_LQ_LOG_DIR environment variable, no file if neither is set
        """
        self.name = name
        if log_dir is None and os.environ.get(LOG_DIR_ENV):
            log_dir = os.environ[LOG_DIR_ENV]
        self.log_dir = Path(log_dir) if log_dir else None
        self.logger = None
        self._setup_logger()

    def _setup_logger(self):
        """Setup logger with console and optional file handlers."""
        self.logger = logging.getLogger(self.name)
        self.logger.setLevel(logging.DEBUG)

        # Clear any existing handlers
        self.logger.handlers.clear()

        detailed_formatter = logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )
        simple_formatter = logging.Formatter(
            "%(asctime)s - %(levelname)s - %(message)s", datefmt="%H:%M:%S"
        )

        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(logging.INFO)
        console_handler.setFormatter(simple_formatter)
        self.logger.addHandler(console_handler)

        if self.log_dir is not None:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            file_handler = logging.handlers.RotatingFileHandler(
                self.log_dir / self.LOG_FILE,
                maxBytes=10 * 1024 * 1024,  # 10 MB
                backupCount=5,
                encoding="utf-8",
            )
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(detailed_formatter)
            self.logger.addHandler(file_handler)
            self.logger.debug(f"Log file: {self.get_log_file_path()}")

        self.logger.debug(f"Python version: {sys.version}")
        self.logger.debug(f"Working directory: {os.getcwd()}")

    def debug(self, msg, *args, **kwargs):
        self.logger.debug(msg, *args, **kwargs)

    def info(self, msg, *args, **kwargs):
        self.logger.info(msg, *args, **kwargs)

    def warning(self, msg, *args, **kwargs):
        self.logger.warning(msg, *args, **kwargs)

    def error(self, msg, *args, **kwargs):
        self.logger.error(msg, *args, **kwargs)

    def exception(self, msg, *args, **kwargs):
        """Log exception with traceback."""
        self.logger.exception(msg, *args, **kwargs)

    def log_experiment(self, name, details):
        """Log the banner that opens an experiment run."""
        self.info("=" * 60)
        self.info(f"EXPERIMENT: {name}")
        for key, value in details.items():
            self.info(f"{key}: {value}")
        self.info("=" * 60)

    def log_config(self, config_dict, title="Configuration"):
        """Log a flat settings dictionary, one key per line."""
        self.info(f"=== {title} ===")
        for key in sorted(config_dict):
            self.info(f"  {key}: {config_dict[key]}")
        self.info("=" * 60)

    def get_log_file_path(self):
        """Get path to log file, or None when file logging is off."""
        if self.log_dir is None:
            return None
        return self.log_dir / self.LOG_FILE

    def read_last_lines(self, lines=50):
        """Read last N lines from log file."""
        log_path = self.get_log_file_path()
        if log_path is None or not log_path.exists():
            return "Log file does not exist yet."

        try:
            with open(log_path, "r", encoding="utf-8") as f:
                all_lines = f.readlines()
                return "".join(all_lines[-lines:])
        except OSError as e:
            return f"Error reading log file: {e}"


# Global logger instance
_logger_instance = None


def get_logger(name="graphon_lq", log_dir=None):
    """Get or create global logger instance."""
    global _logger_instance
    if _logger_instance is None:
        _logger_instance = ExperimentLogger(name, log_dir)
    return _logger_instance


def setup_logging(log_dir=None, verbose=False, name="graphon_lq"):
    """(Re)build the global logger and return it."""
    global _logger_instance
    _logger_instance = ExperimentLogger(name, log_dir)
    if verbose:
        for handler in _logger_instance.logger.handlers:
            handler.setLevel(logging.DEBUG)
    return _logger_instance


def debug(msg, *args, **kwargs):
    get_logger().debug(msg, *args, **kwargs)


def info(msg, *args, **kwargs):
    get_logger().info(msg, *args, **kwargs)


def warning(msg, *args, **kwargs):
    get_logger().warning(msg, *args, **kwargs)


def error(msg, *args, **kwargs):
    get_logger().error(msg, *args, **kwargs)


def exception(msg, *args, **kwargs):
    get_logger().exception(msg, *args, **kwargs)


def log_experiment(name, details):
    get_logger().log_experiment(name, details)


def log_config(config_dict, title="Configuration"):
    get_logger().log_config(config_dict, title)


def get_log_file_path():
    return get_logger().get_log_file_path()


def read_last_lines(lines=50):
    return get_logger().read_last_lines(lines)
