"""
Application facade for coopadmm.
Coordinates settings, scenario loading, experiment runs and report emission.
"""

import logging
import os
from pathlib import Path
from typing import List, Optional

from coopadmm.config.manager import ConfigManager, ScenarioConfig
from coopadmm.config.settings import RuntimeSettings
from coopadmm.core.base_service import BaseService
from coopadmm.core.constants import BACKENDS, DEFAULT_SETTINGS_FILE, EXIT_CONVERGED, EXIT_NOT_CONVERGED
from coopadmm.core.error_handler import get_error_details, handle_errors
from coopadmm.core.logger import LoggingProgressSink, setup_logging
from coopadmm.scenarios.presets import validate_scenario
from coopadmm.scenarios.report import emit_comparison, emit_outputs
from coopadmm.scenarios.runner import ExperimentReport, ExperimentRunner, median_iterations


class CoopAdmmApplication(BaseService):
    """Main application class that coordinates all components."""

    def __init__(self, settings_file: str | os.PathLike = DEFAULT_SETTINGS_FILE, verbose: bool = False):
        """Initialize the application.

        Args:
            settings_file: Path to the runtime settings INI file
            verbose: Log ADMM progress and solver detail
        """
        BaseService.__init__(self)
        self.settings_file = settings_file
        self.verbose = verbose
        self.settings = RuntimeSettings()
        self._is_initialized = False

    @handle_errors(default_return=False, log_errors=True)
    def initialize(self) -> bool:
        """Load runtime settings and configure logging.

        Returns:
            True if initialization succeeded, False otherwise
        """
        if self._is_initialized:
            return True
        try:
            self.settings = RuntimeSettings.load(self.settings_file)
        except Exception as e:
            setup_logging(logging.INFO)
            error_details = get_error_details(e)
            self.log_error(f"Failed to load runtime settings: {e} - details: {error_details}")
            raise
        setup_logging("DEBUG" if self.verbose else self.settings.log_level)
        self._is_initialized = True
        self.log_debug(f"Runtime settings: {self.settings}")
        return True

    def load_scenario(self, path: str | os.PathLike) -> ScenarioConfig:
        return ConfigManager(path).load_config()

    def _runner(self) -> ExperimentRunner:
        sink = LoggingProgressSink() if self.verbose else None
        return ExperimentRunner(threads=self.settings.threads, sink=sink)

    def _out_dir(self, out: Optional[str | os.PathLike]) -> Path:
        return Path(out if out is not None else self.settings.out_dir)

    def run(self, config_path: str | os.PathLike, backend: Optional[str] = None, seed: Optional[int] = None,
            out: Optional[str | os.PathLike] = None, trials: int = 1, plots: bool = True) -> int:
        """Run one scenario (or seeded trials) and write the reports.

        Returns:
            Exit code: 0 when every run converged, 2 otherwise

        Raises:
            CoopAdmmError: On invalid configuration or solver failure
        """
        config = self.load_scenario(config_path)
        out_dir = self._out_dir(out)
        reports = self._runner().run_trials(config, backend, seed, trials)
        if len(reports) == 1:
            emit_outputs(reports[0], out_dir, plots=plots)
        else:
            for report in reports:
                emit_outputs(report, out_dir / f"seed_{report.seed}", plots=plots)
            emit_comparison(reports, out_dir)
            self.log_info(f"Median iterations over {len(reports)} trials: {median_iterations(reports):g}")
        return self._exit_code(reports)

    def compare(self, config_path: str | os.PathLike, out: Optional[str | os.PathLike] = None,
                seed: Optional[int] = None, trials: int = 1) -> int:
        """Run every back-end on a scenario and write the summary table."""
        config = self.load_scenario(config_path)
        reports = self._runner().compare_backends(config, BACKENDS, seed, trials)
        emit_comparison(reports, self._out_dir(out))
        return self._exit_code(reports)

    def validate(self, config_path: str | os.PathLike) -> int:
        """Check a scenario's invariants without solving."""
        config = self.load_scenario(config_path)
        built = validate_scenario(config)
        self.log_info(f"Scenario {config.name!r} is valid: {built.problem.layout.N} vehicles, "
                      f"{len(built.problem.pairs)} constrained pairs, T={built.problem.T}")
        return EXIT_CONVERGED

    @staticmethod
    def _exit_code(reports: List[ExperimentReport]) -> int:
        return EXIT_CONVERGED if all(r.converged for r in reports) else EXIT_NOT_CONVERGED
