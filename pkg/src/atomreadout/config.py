"""Key-value configuration files for the command-line tools.

The format is a flat list of ``section.key = value`` lines with ``#``
comments.  Units are explicit in the key names (``trap.depth_mK``,
``probe.duration_ms``); parsing converts everything to SI before any
physics sees it.  Unknown keys are rejected rather than ignored, so a typo
cannot silently fall back to a default.
"""

from __future__ import annotations

import math
from pathlib import Path

from .physics import (
    ATOMIC_MASS_UNIT,
    DetectorConfig,
    PhysicalConstants,
    ProbeConfig,
    TrapConfig,
)
from .simulation import BRIGHT, DARK, ExperimentConfig, NoiseConfig
from .sweep import AdiabaticReference, OptimizationConstraints, SweepSpec

__all__ = [
    "ConfigError",
    "DEFAULTS",
    "parse_config",
    "load_config",
    "experiment_from",
    "requested_states",
    "sweep_from",
    "constraints_from",
]


class ConfigError(ValueError):
    """A configuration file could not be parsed or validated."""

    def __init__(self, message: str, *, line: int | None = None,
                 column: int | None = None, key: str | None = None):
        self.line = line
        self.column = column
        self.key = key
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where = f" ({where})"
        super().__init__(f"{message}{where}")


# Value kinds: how the raw string on the right of '=' is parsed.
_FLOAT = "float"
_INT = "int"
_BOOL = "bool"
_STATE = "state"
_FLOATS = "floats"

# key -> (kind, default).  Order defines the canonical snapshot order.
# A None default marks an optional key with no value unless the file sets one.
KEY_TABLE: dict[str, tuple[str, object]] = {
    "constants.linewidth_MHz": (_FLOAT, 6.0),
    "constants.saturation_intensity_W_m2": (_FLOAT, 16.7),
    "constants.wavelength_nm": (_FLOAT, 780.0),
    "constants.mass_amu": (_FLOAT, 86.909180527),
    "trap.depth_mK": (_FLOAT, 1.4),
    "trap.temperature_uK": (_FLOAT, 35.0),
    "trap.heating_per_scatter": (_FLOAT, 2.0),
    "probe.duration_ms": (_FLOAT, 1.5),
    "probe.saturation": (_FLOAT, 0.061),
    "detector.collection_efficiency": (_FLOAT, 0.006),
    "detector.dark_count_rate_per_s": (_FLOAT, 130.0),
    "noise.hyperfine_prep_fidelity": (_FLOAT, 0.9997),
    "noise.zeeman_prep_fidelity": (_FLOAT, 0.996),
    "noise.raman_flip_probability": (_FLOAT, 0.001),
    "noise.presence_test_error": (_FLOAT, 0.006),
    "noise.vacuum_lifetime_s": (_FLOAT, 23.0),
    "noise.sequence_wall_time_ms": (_FLOAT, 92.0),
    "noise.depump_probability_per_scatter": (_FLOAT, 0.001),
    "run.prepared_state": (_STATE, "both"),
    "run.trials": (_INT, 10_000),
    "run.seed": (_INT, 1),
    "sweep.depths_mK": (_FLOATS, (0.24, 0.36, 0.7, 1.1, 1.4)),
    "sweep.durations_ms": (_FLOATS, (0.7, 0.75, 1.0, 1.25, 1.5)),
    "sweep.saturations": (_FLOATS, (0.011, 0.019, 0.037, 0.049, 0.061)),
    "sweep.optimize": (_BOOL, False),
    "sweep.trials_per_point": (_INT, 5000),
    "sweep.reference_temperature_uK": (_FLOAT, None),
    "sweep.reference_depth_mK": (_FLOAT, None),
    "optimizer.max_probe_loss": (_FLOAT, 0.02),
    "optimizer.max_saturation": (_FLOAT, 0.1),
    "optimizer.duration_min_ms": (_FLOAT, 0.1),
    "optimizer.duration_max_ms": (_FLOAT, 10.0),
}

DEFAULTS: dict[str, object] = {key: default for key, (_, default) in KEY_TABLE.items()}


def _parse_value(kind: str, raw: str, key: str, line: int) -> object:
    def fail(expected: str):
        return ConfigError(
            f"invalid value {raw!r} for {key}: expected {expected}",
            line=line, key=key)

    if kind == _FLOAT:
        try:
            value = float(raw)
        except ValueError:
            raise fail("a number") from None
        if not math.isfinite(value):
            raise fail("a finite number")
        return value
    if kind == _INT:
        try:
            return int(raw, 10)
        except ValueError:
            raise fail("an integer") from None
    if kind == _BOOL:
        if raw == "true":
            return True
        if raw == "false":
            return False
        raise fail("'true' or 'false'")
    if kind == _STATE:
        if raw in (BRIGHT, DARK, "both"):
            return raw
        raise fail("'bright', 'dark', or 'both'")
    if kind == _FLOATS:
        parts = [part.strip() for part in raw.split(",")]
        if not parts or any(not part for part in parts):
            raise fail("a comma-separated list of numbers")
        values = []
        for part in parts:
            try:
                value = float(part)
            except ValueError:
                raise fail("a comma-separated list of numbers") from None
            if not math.isfinite(value):
                raise fail("finite numbers")
            values.append(value)
        return tuple(values)
    raise AssertionError(f"unhandled kind {kind!r}")


def parse_config(text: str) -> dict[str, object]:
    """Parse config text into the full canonical snapshot.

    Every known key appears in the result, file values overriding defaults.
    Raises :class:`ConfigError` with line (and column, for syntax errors)
    on anything malformed, unknown, or duplicated.
    """
    settings = dict(DEFAULTS)
    seen: set[str] = set()
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        content = raw_line.split("#", 1)[0]
        if not content.strip():
            continue
        if "=" not in content:
            raise ConfigError(
                "expected 'key = value'",
                line=lineno, column=len(content.rstrip()) + 1)
        key_part, _, value_part = content.partition("=")
        key = key_part.strip()
        value_raw = value_part.strip()
        if not key:
            raise ConfigError("missing key before '='", line=lineno, column=1)
        if key not in KEY_TABLE:
            raise ConfigError(
                f"unknown configuration key '{key}'",
                line=lineno, column=content.find(key) + 1, key=key)
        if key in seen:
            raise ConfigError(
                f"duplicate configuration key '{key}'", line=lineno, key=key)
        seen.add(key)
        if not value_raw:
            raise ConfigError(
                f"missing value for {key}",
                line=lineno, column=len(content.rstrip()) + 1, key=key)
        kind, _ = KEY_TABLE[key]
        settings[key] = _parse_value(kind, value_raw, key, lineno)
    return settings


def load_config(path: str | Path) -> dict[str, object]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text)


def _require_int_at_least(settings: dict[str, object], key: str, minimum: int) -> int:
    value = settings[key]
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError(f"{key} must be an integer >= {minimum}, got {value!r}",
                          key=key)
    return value


def experiment_from(settings: dict[str, object]) -> ExperimentConfig:
    """Build the SI experiment config from a parsed snapshot."""
    trials = _require_int_at_least(settings, "run.trials", 1)
    seed = _require_int_at_least(settings, "run.seed", 0)
    constants = PhysicalConstants(
        gamma=2.0 * math.pi * settings["constants.linewidth_MHz"] * 1e6,
        saturation_intensity=settings["constants.saturation_intensity_W_m2"],
        wavelength=settings["constants.wavelength_nm"] * 1e-9,
        mass=settings["constants.mass_amu"] * ATOMIC_MASS_UNIT,
    )
    trap = TrapConfig(
        depth=settings["trap.depth_mK"] * 1e-3,
        atom_temperature=settings["trap.temperature_uK"] * 1e-6,
        heating_per_scatter=settings["trap.heating_per_scatter"],
    )
    probe = ProbeConfig(
        saturation=settings["probe.saturation"],
        duration=settings["probe.duration_ms"] * 1e-3,
    )
    detector = DetectorConfig(
        collection_efficiency=settings["detector.collection_efficiency"],
        dark_count_rate=settings["detector.dark_count_rate_per_s"],
    )
    noise = NoiseConfig(
        hyperfine_prep_fidelity=settings["noise.hyperfine_prep_fidelity"],
        zeeman_prep_fidelity=settings["noise.zeeman_prep_fidelity"],
        raman_flip_probability=settings["noise.raman_flip_probability"],
        presence_test_error=settings["noise.presence_test_error"],
        vacuum_lifetime=settings["noise.vacuum_lifetime_s"],
        sequence_wall_time=settings["noise.sequence_wall_time_ms"] * 1e-3,
        depump_probability_per_scatter=settings["noise.depump_probability_per_scatter"],
    )
    state = settings["run.prepared_state"]
    return ExperimentConfig(
        constants=constants, trap=trap, probe=probe, detector=detector,
        noise=noise, prepared_state=BRIGHT if state == "both" else state,
        trials=trials, seed=seed)


def requested_states(settings: dict[str, object]) -> tuple[str, ...]:
    """Which prepared states a run should simulate, dark first."""
    state = settings["run.prepared_state"]
    return (DARK, BRIGHT) if state == "both" else (state,)


def sweep_from(settings: dict[str, object]) -> SweepSpec:
    """Build the sweep specification from a parsed snapshot."""
    depths_mK = settings["sweep.depths_mK"]
    durations_ms = settings["sweep.durations_ms"]
    saturations = settings["sweep.saturations"]
    for previous, current in zip(depths_mK, depths_mK[1:]):
        if not current > previous:
            raise ConfigError(
                f"sweep.depths_mK must be strictly increasing; "
                f"{current!r} follows {previous!r}", key="sweep.depths_mK")
    if len(durations_ms) != len(depths_mK):
        raise ConfigError(
            f"sweep.durations_ms has {len(durations_ms)} entries for "
            f"{len(depths_mK)} depths", key="sweep.durations_ms")
    if len(saturations) != len(depths_mK):
        raise ConfigError(
            f"sweep.saturations has {len(saturations)} entries for "
            f"{len(depths_mK)} depths", key="sweep.saturations")
    trials = _require_int_at_least(settings, "sweep.trials_per_point", 1)
    seed = _require_int_at_least(settings, "run.seed", 0)

    reference_t = settings["sweep.reference_temperature_uK"]
    reference_u = settings["sweep.reference_depth_mK"]
    if (reference_t is None) != (reference_u is None):
        raise ConfigError(
            "sweep.reference_temperature_uK and sweep.reference_depth_mK "
            "must be set together", key="sweep.reference_temperature_uK")
    reference = None
    if reference_t is not None:
        reference = AdiabaticReference(
            temperature=reference_t * 1e-6, depth=reference_u * 1e-3)

    schedule = tuple(
        ProbeConfig(saturation=s, duration=ms * 1e-3)
        for s, ms in zip(saturations, durations_ms))
    return SweepSpec(
        depths=tuple(d * 1e-3 for d in depths_mK),
        schedule=schedule,
        trials_per_point=trials,
        seed=seed,
        adiabatic_reference=reference,
    )


def constraints_from(settings: dict[str, object]) -> OptimizationConstraints:
    return OptimizationConstraints(
        max_probe_loss=settings["optimizer.max_probe_loss"],
        max_saturation=settings["optimizer.max_saturation"],
        duration_bounds=(settings["optimizer.duration_min_ms"] * 1e-3,
                         settings["optimizer.duration_max_ms"] * 1e-3),
    )
