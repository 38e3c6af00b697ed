"""Config parsing: defaults, unit conversion, and error reporting."""

import math

import pytest

from atomreadout.config import (
    DEFAULTS,
    ConfigError,
    constraints_from,
    experiment_from,
    load_config,
    parse_config,
    requested_states,
    sweep_from,
)
from atomreadout.counts import BRIGHT, DARK
from atomreadout.physics import ATOMIC_MASS_UNIT


def test_empty_text_yields_all_defaults():
    settings = parse_config("")
    assert settings == DEFAULTS
    assert settings is not DEFAULTS
    assert len(settings) == 32


def test_comments_and_blank_lines_are_ignored():
    settings = parse_config(
        "# a full-line comment\n"
        "\n"
        "  trap.depth_mK = 0.5   # trailing comment\n"
        "probe.saturation=0.02\n")
    assert settings["trap.depth_mK"] == 0.5
    assert settings["probe.saturation"] == 0.02
    assert settings["probe.duration_ms"] == 1.5


def test_float_list_parsing():
    settings = parse_config("sweep.depths_mK = 0.2, 0.4,0.9\n")
    assert settings["sweep.depths_mK"] == (0.2, 0.4, 0.9)


@pytest.mark.parametrize("text, fragment, line", [
    ("trap.depth_mK 0.5", "expected 'key = value'", 1),
    ("= 3", "missing key", 1),
    ("trap.depth = 1", "unknown configuration key 'trap.depth'", 1),
    ("run.trials = 5\nrun.trials = 6", "duplicate configuration key", 2),
    ("trap.depth_mK =", "missing value for trap.depth_mK", 1),
    ("trap.depth_mK = abc", "expected a number", 1),
    ("trap.depth_mK = inf", "expected a finite number", 1),
    ("run.trials = 3.5", "expected an integer", 1),
    ("sweep.optimize = yes", "expected 'true' or 'false'", 1),
    ("run.prepared_state = glowing", "'bright', 'dark', or 'both'", 1),
    ("sweep.depths_mK = 1,,2", "comma-separated list", 1),
    ("sweep.depths_mK = 1, x", "comma-separated list", 1),
])
def test_parse_errors_carry_location(text, fragment, line):
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text)
    assert fragment in str(excinfo.value)
    assert excinfo.value.line == line
    assert f"line {line}" in str(excinfo.value)


def test_syntax_error_reports_column():
    with pytest.raises(ConfigError) as excinfo:
        parse_config("trap.depth_mK 0.5")
    assert excinfo.value.column == len("trap.depth_mK 0.5") + 1
    assert "column" in str(excinfo.value)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config file"):
        load_config(tmp_path / "absent.cfg")


def test_load_config_round_trip(tmp_path):
    path = tmp_path / "probe.cfg"
    path.write_text("run.trials = 250\nrun.prepared_state = dark\n")
    settings = load_config(path)
    assert settings["run.trials"] == 250
    assert requested_states(settings) == (DARK,)


def test_experiment_from_converts_units():
    config = experiment_from(parse_config(""))
    assert config.constants.gamma == pytest.approx(2 * math.pi * 6e6, rel=1e-15)
    assert config.constants.wavelength == pytest.approx(780e-9, rel=1e-15)
    assert config.constants.mass == pytest.approx(
        86.909180527 * ATOMIC_MASS_UNIT, rel=1e-15)
    assert config.trap.depth == pytest.approx(1.4e-3, rel=1e-15)
    assert config.trap.atom_temperature == pytest.approx(35e-6, rel=1e-15)
    assert config.probe.duration == pytest.approx(1.5e-3, rel=1e-15)
    assert config.detector.dark_count_rate == 130.0
    assert config.noise.sequence_wall_time == pytest.approx(92e-3, rel=1e-15)
    assert config.noise.vacuum_lifetime == 23.0
    assert config.prepared_state == BRIGHT
    assert config.trials == 10_000
    assert config.seed == 1


def test_requested_states():
    assert requested_states(parse_config("")) == (DARK, BRIGHT)
    assert requested_states(parse_config("run.prepared_state = bright")) \
        == (BRIGHT,)
    assert requested_states(parse_config("run.prepared_state = dark")) == (DARK,)


@pytest.mark.parametrize("text, key", [
    ("run.trials = 0", "run.trials"),
    ("run.seed = -1", "run.seed"),
])
def test_experiment_from_rejects_bad_counts(text, key):
    with pytest.raises(ConfigError, match=key):
        experiment_from(parse_config(text))


def test_sweep_from_defaults():
    spec = sweep_from(parse_config(""))
    assert spec.depths == pytest.approx(
        (0.24e-3, 0.36e-3, 0.7e-3, 1.1e-3, 1.4e-3), rel=1e-15)
    assert [p.duration for p in spec.schedule] == pytest.approx(
        [0.7e-3, 0.75e-3, 1.0e-3, 1.25e-3, 1.5e-3], rel=1e-15)
    assert [p.saturation for p in spec.schedule] \
        == [0.011, 0.019, 0.037, 0.049, 0.061]
    assert spec.trials_per_point == 5000
    assert spec.seed == 1
    assert spec.adiabatic_reference is None


def test_sweep_reference_requires_both_keys():
    with pytest.raises(ConfigError, match="must be set together"):
        sweep_from(parse_config("sweep.reference_temperature_uK = 35"))
    with pytest.raises(ConfigError, match="must be set together"):
        sweep_from(parse_config("sweep.reference_depth_mK = 2.2"))
    spec = sweep_from(parse_config(
        "sweep.reference_temperature_uK = 35\nsweep.reference_depth_mK = 2.2\n"))
    assert spec.adiabatic_reference.temperature == pytest.approx(35e-6, rel=1e-15)
    assert spec.adiabatic_reference.depth == pytest.approx(2.2e-3, rel=1e-15)


@pytest.mark.parametrize("text, key", [
    ("sweep.depths_mK = 0.5, 0.5\nsweep.durations_ms = 1, 1\n"
     "sweep.saturations = 0.1, 0.1", "sweep.depths_mK"),
    ("sweep.depths_mK = 0.9, 0.5\nsweep.durations_ms = 1, 1\n"
     "sweep.saturations = 0.1, 0.1", "sweep.depths_mK"),
    ("sweep.durations_ms = 1, 2", "sweep.durations_ms"),
    ("sweep.saturations = 0.1", "sweep.saturations"),
    ("sweep.trials_per_point = 0", "sweep.trials_per_point"),
])
def test_sweep_from_rejects_inconsistent_tables(text, key):
    with pytest.raises(ConfigError, match=key):
        sweep_from(parse_config(text))


def test_constraints_from_defaults():
    constraints = constraints_from(parse_config(""))
    assert constraints.max_probe_loss == 0.02
    assert constraints.max_saturation == 0.1
    assert constraints.duration_bounds == pytest.approx((1e-4, 1e-2), rel=1e-15)
