"""
Tests for scenario configuration, runtime settings, presets and the command line.
"""

import json
import logging
import os

import numpy as np
import pytest
from numpy.testing import assert_allclose

from coopadmm.config.manager import ConfigManager, ScenarioConfig, validate_config
from coopadmm.config.settings import RuntimeSettings
from coopadmm.core.base_service import BaseService
from coopadmm.core.constants import EXIT_CONVERGED, EXIT_ERROR, THREADS_ENV_VAR
from coopadmm.core.error_handler import failure_context, format_error, get_error_details, handle_errors
from coopadmm.core.exceptions import BackendFailure, ConfigError
from coopadmm.main import main
from coopadmm.scenarios.presets import (
    build_problem, generate_reference, intersection_config, junction_config, preset, validate_scenario,
)

CONFIG_DIR = os.path.join(os.path.dirname(__file__), '..', 'configs')


def _junction_dict():
    return junction_config(seed=7).to_dict()


def test_shipped_configs_load():
    """Test both shipped scenario files parse and match the presets."""
    s1 = ConfigManager(os.path.join(CONFIG_DIR, 's1.json')).load_config()
    assert s1.layout == "junction"
    assert s1.seed == 7
    assert len(s1.vehicles) == 3
    assert s1.to_dict() == junction_config(seed=7).to_dict()

    s2 = ConfigManager(os.path.join(CONFIG_DIR, 's2.json')).load_config()
    assert s2.layout == "intersection"
    assert len(s2.vehicles) == len(intersection_config().vehicles)


def test_junction_margin_absorbs_stopping_residual():
    """Test a pair projected with the margin stays 2.99 m apart once the residual reaches eps."""
    p = junction_config(seed=7).params
    worst = p.d_safe + p.safety_margin - 2.0 * p.eps
    assert worst >= p.d_safe, f"separation at the stopping tolerance can drop to {worst}"
    assert worst >= 2.99


def test_unknown_keys_are_rejected():
    """Test strict parsing at every level of the document."""
    data = _junction_dict()
    data['colour'] = "red"
    with pytest.raises(ConfigError, match="colour"):
        ScenarioConfig.from_dict(data)

    data = _junction_dict()
    data['params']['rho'] = 1.0
    with pytest.raises(ConfigError, match="rho"):
        ScenarioConfig.from_dict(data)

    data = _junction_dict()
    data['vehicles'][0]['colour'] = "red"
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict(data)


@pytest.mark.parametrize("section, key, value", [
    ("params", "d_safe", -1.0),
    ("params", "T", 0),
    ("params", "sigma", 0.0),
    ("params", "eps", float('nan')),
    ("params", "R", [1.0, 0.0]),
    ("params", "d_cmu", 2.0),
    ("road", "lane_width", 0.0),
    (None, "backend", "gurobi"),
    (None, "layout", "roundabout"),
    (None, "seed", -3),
])
def test_invalid_values(section, key, value):
    """Test range checks on scenario fields."""
    data = _junction_dict()
    (data[section] if section else data)[key] = value
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict(data)


def test_maneuver_must_fit_road():
    """Test a turn exiting by a missing arm is rejected."""
    data = _junction_dict()
    data['vehicles'][1]['maneuver'] = "right"
    with pytest.raises(ConfigError, match="missing arm"):
        ScenarioConfig.from_dict(data)
    data = _junction_dict()
    data['vehicles'] = []
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict(data)


def test_save_load_and_reset(tmp_path):
    """Test save, reload and preset reset through the manager."""
    manager = ConfigManager(tmp_path / "nested" / "scenario.json")
    config = junction_config(seed=11)
    assert manager.save_config(config)
    assert manager.load_config().to_dict() == config.to_dict()

    reset = manager.reset_to_defaults("intersection")
    assert reset.layout == "intersection"
    assert manager.load_config().layout == "intersection"
    assert manager.get_config_path() == (tmp_path / "nested" / "scenario.json").resolve()


def test_load_errors(tmp_path):
    """Test missing files and malformed JSON."""
    with pytest.raises(ConfigError, match="not found"):
        ConfigManager(tmp_path / "absent.json").load_config()
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding='utf-8')
    with pytest.raises(ConfigError, match="Invalid JSON"):
        ConfigManager(bad).load_config()


def test_build_junction_problem():
    """Test references, starts and the constraint graph of the junction preset."""
    built = validate_scenario(junction_config(seed=7))
    problem = built.problem
    assert problem.layout.N == 3
    assert problem.T == 100
    assert problem.pairs == [(0, 1), (0, 2), (1, 2)]
    assert_allclose(built.initial_states[:, :2], [[-25.0, -2.0], [20.0, 2.0], [2.0, -24.0]])
    for ref in built.references:
        assert ref.shape == (100, 4)
        assert_allclose(ref[:, 3], 5.0)


def test_jitter_is_seeded():
    """Test initial jitter depends on the seed only."""
    config = junction_config()
    config.params.initial_jitter = 0.3
    a = build_problem(config, seed=4).initial_states
    b = build_problem(config, seed=4).initial_states
    c = build_problem(config, seed=5).initial_states
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_close_starts_are_rejected():
    """Test two vehicles queued too close together fail validation."""
    config = junction_config()
    config.vehicles[1].initial_state = [-23.5, -2.0, 0.0, 5.0]
    with pytest.raises(ConfigError, match="closer than d_safe"):
        validate_scenario(config)
    with pytest.raises(ConfigError):
        preset("roundabout")


def test_runtime_settings(tmp_path, monkeypatch):
    """Test INI values, defaults and the thread override from the environment."""
    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
    ini = tmp_path / "coopadmm.ini"
    ini.write_text("[runtime]\nthreads = 3\nlog_level = debug\nout_dir = results\n", encoding='utf-8')
    settings = RuntimeSettings.load(ini)
    assert (settings.threads, settings.log_level, settings.out_dir) == (3, "DEBUG", "results")

    assert RuntimeSettings.load(tmp_path / "missing.ini").threads == 0

    monkeypatch.setenv(THREADS_ENV_VAR, "6")
    assert RuntimeSettings.load(ini).threads == 6

    monkeypatch.setenv(THREADS_ENV_VAR, "-1")
    with pytest.raises(ConfigError):
        RuntimeSettings.load(ini)


def test_invalid_runtime_settings(tmp_path, monkeypatch):
    """Test bad thread counts and log levels."""
    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
    ini = tmp_path / "coopadmm.ini"
    ini.write_text("[runtime]\nthreads = lots\n", encoding='utf-8')
    with pytest.raises(ConfigError):
        RuntimeSettings.load(ini)
    ini.write_text("[runtime]\nlog_level = chatty\n", encoding='utf-8')
    with pytest.raises(ConfigError):
        RuntimeSettings.load(ini)


def test_cli_validate(tmp_path):
    """Test the validate subcommand exit codes."""
    settings = str(tmp_path / "none.ini")
    assert main(["--settings", settings, "validate", "--config", os.path.join(CONFIG_DIR, 's1.json')]) \
        == EXIT_CONVERGED
    assert main(["--settings", settings, "validate", "--config", str(tmp_path / "absent.json")]) == EXIT_ERROR

    broken = tmp_path / "broken.json"
    data = _junction_dict()
    data['params']['T'] = 10
    broken.write_text(json.dumps(data), encoding='utf-8')
    assert main(["--settings", settings, "validate", "--config", str(broken)]) == EXIT_ERROR


def test_cli_rejects_bad_arguments(tmp_path):
    """Test argument parsing errors exit through argparse."""
    with pytest.raises(SystemExit):
        main(["run", "--config", "s1.json", "--backend", "gurobi"])
    with pytest.raises(SystemExit):
        main(["run", "--config", "s1.json", "--seed", "-1"])


def test_format_error():
    """Test error rendering for the command line."""
    assert format_error(ConfigError("bad value")) == "[CFG001] bad value"
    assert format_error(ValueError("boom")) == "Unexpected error: boom"
    details = get_error_details(BackendFailure("stuck", details={'tau': 4}))
    assert details['type'] == "BackendFailure"
    assert details['details'] == {'tau': 4}


def test_handle_errors(caplog):
    """Test the decorator swallows and logs failures."""
    @handle_errors(default_return=-1)
    def failing():
        raise ConfigError("nope")

    with caplog.at_level(logging.ERROR):
        assert failing() == -1
    assert "nope" in caplog.text
    assert handle_errors(default_return=0)(lambda: 5)() == 5


def test_validate_config_accepts_presets():
    """Test both presets satisfy the schema checks."""
    validate_config(junction_config())
    validate_config(intersection_config())


def test_format_error_names_location():
    """Test agent, timestep and iteration are appended in a fixed order."""
    error = BackendFailure("sdr projection failed", details={'iteration': 3, 'tau': 17, 'backend': "sdr"})
    assert format_error(error) == "[PRJ001] sdr projection failed (backend=sdr, tau=17, iteration=3)"


def test_failure_context():
    """Test foreign package errors are wrapped and matching ones only gain location keys."""
    with pytest.raises(BackendFailure) as info:
        with failure_context(BackendFailure, "projection failed", tau=5):
            raise ConfigError("bad target", details={'size': 3})
    assert info.value.details == {'size': 3, 'tau': 5, 'cause': "CFG001"}
    assert "bad target" in info.value.message

    original = BackendFailure("stuck", details={'tau': 1})
    with pytest.raises(BackendFailure) as info:
        with failure_context(BackendFailure, "projection failed", tau=9, iteration=2):
            raise original
    assert info.value is original
    assert info.value.details == {'tau': 1, 'iteration': 2}

    with pytest.raises(ValueError):
        with failure_context(BackendFailure, "projection failed"):
            raise ValueError("not ours")


def test_timed_block(caplog):
    """Test the service timer measures a block and logs it at DEBUG."""
    class Sample(BaseService):
        pass

    service = Sample()
    assert service.logger.name == "coopadmm.Sample"
    with caplog.at_level(logging.DEBUG, logger="coopadmm.Sample"):
        with service.timed("sample block") as watch:
            sum(range(1000))
    assert watch.elapsed_ms >= 0.0
    assert "sample block took" in caplog.text


def test_generate_reference():
    """Test one reference per vehicle starting one step past the initial state."""
    references = generate_reference(junction_config())
    assert len(references) == 3
    assert_allclose(references[0][0], [-24.5, -2.0, 0.0, 5.0], atol=1e-12)
    assert_allclose(references[0][-1, :2], [25.0, -2.0], atol=1e-9)

    config = junction_config()
    config.params.T = 10
    with pytest.raises(ConfigError, match=r"vehicles\[1\]"):
        generate_reference(config)
