"""
Full scenario reproductions. These solve the 100-step junction and intersection
problems and take minutes; run them with ``pytest --runslow``.
"""

import os

import numpy as np
import pytest

from coopadmm.core.constants import EXIT_CONVERGED
from coopadmm.main import main
from coopadmm.scenarios.presets import intersection_config, junction_config
from coopadmm.scenarios.report import DISTANCES_FILE, TRAJECTORIES_FILE
from coopadmm.scenarios.runner import ExperimentRunner, median_iterations, run_experiment, single_vehicle_config

CONFIG_DIR = os.path.join(os.path.dirname(__file__), '..', 'configs')


@pytest.mark.slow
def test_junction_with_sdr():
    """Test the three-vehicle junction converges and stays separated."""
    report = run_experiment(junction_config(seed=7), "sdr")
    assert report.converged, f"stopped after {report.iterations} iterations, residual {report.residuals[-1]}"
    assert report.residuals[-1] <= 0.01
    assert report.iterations <= 100
    assert report.min_distance >= 2.99, f"min distance {report.min_distance}"
    assert report.distances.shape == (100, 3)
    print(f"  ✓ junction converged in {report.iterations} iterations: PASSED")


@pytest.mark.slow
def test_intersection_with_sdr():
    """Test the twelve-vehicle intersection converges collision-free."""
    report = run_experiment(intersection_config(seed=0), "sdr")
    assert report.converged
    assert np.all(report.min_distance_per_step >= 2.99)
    print(f"  ✓ intersection converged in {report.iterations} iterations: PASSED")


@pytest.mark.slow
def test_sdr_needs_no_more_iterations_than_miqp():
    """Test the median iteration count ordering over 20 seeded junction runs."""
    runner = ExperimentRunner()
    config = junction_config()
    sdr = runner.run_trials(config, "sdr", seed=0, trials=20)
    miqp = runner.run_trials(config, "miqp", seed=0, trials=20)
    assert median_iterations(sdr) <= median_iterations(miqp), \
        f"sdr {median_iterations(sdr)} vs miqp {median_iterations(miqp)}"


@pytest.mark.slow
def test_single_vehicle_run():
    """Test one vehicle alone converges with an empty distance series."""
    report = run_experiment(single_vehicle_config(junction_config(), 1), "sdr")
    assert report.converged
    assert report.pairs == []
    assert report.distances.shape == (100, 0)


@pytest.mark.slow
def test_cli_run_is_deterministic(tmp_path):
    """Test two seeded command-line runs write identical trajectory and distance files."""
    config = os.path.join(CONFIG_DIR, 's1.json')
    settings = str(tmp_path / "none.ini")
    for name in ("a", "b"):
        code = main(["--settings", settings, "run", "--config", config, "--backend", "sdr", "--seed", "7",
                     "--out", str(tmp_path / name), "--no-plots"])
        assert code == EXIT_CONVERGED
    for file_name in (TRAJECTORIES_FILE, DISTANCES_FILE):
        assert (tmp_path / "a" / file_name).read_bytes() == (tmp_path / "b" / file_name).read_bytes(), file_name
