"""Trap-depth sweeps and constrained optimisation of the probe settings.

A sweep reruns the full Monte Carlo at several trap depths, each with its
own probe settings, and reports how the discrimination evolves.  The
optimiser instead searches a probe-parameter grid for the settings that
maximise the analytic-model fidelity while keeping the predicted
probe-heating loss under a ceiling -- the trade between collecting more
photons and boiling the atom out of the trap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .counts import BRIGHT, DARK, NoDataError, PoissonCounts
from .discrimination import fit_poisson, threshold_scan
from .physics import (
    ParameterError,
    ProbeConfig,
    expected_counts,
)
from .simulation import ExperimentConfig, estimate_probe_loss, run_experiment

__all__ = [
    "InfeasibleSearchError",
    "AdiabaticReference",
    "SweepSpec",
    "SweepRow",
    "OptimizationConstraints",
    "OptimizationResult",
    "sweep_depths",
    "optimize_probe",
]


class InfeasibleSearchError(ValueError):
    """The requested sweep or search space is degenerate or empty."""


@dataclass(frozen=True)
class AdiabaticReference:
    """Known atom temperature at a reference depth.

    Ramping a harmonic trap adiabatically scales the temperature with the
    oscillation frequency, i.e. with the square root of the depth.  A sweep
    given this reference probes each depth at
    ``temperature * sqrt(depth / reference depth)`` instead of one fixed
    temperature, matching how a ramped experiment actually behaves.
    """

    temperature: float
    depth: float

    def __post_init__(self) -> None:
        if not self.temperature >= 0:
            raise ParameterError(
                f"reference temperature must be >= 0, got {self.temperature!r}")
        if not self.depth > 0:
            raise ParameterError(
                f"reference depth must be positive, got {self.depth!r}")

    def temperature_at(self, depth: float) -> float:
        return self.temperature * math.sqrt(depth / self.depth)


@dataclass(frozen=True)
class SweepSpec:
    """Which depths to visit and how to probe each of them."""

    depths: tuple[float, ...]
    schedule: tuple[ProbeConfig, ...]
    trials_per_point: int = 5000
    seed: int = 1
    adiabatic_reference: AdiabaticReference | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "depths", tuple(self.depths))
        object.__setattr__(self, "schedule", tuple(self.schedule))
        if not self.depths:
            raise ParameterError("sweep needs at least one depth")
        for previous, current in zip(self.depths, self.depths[1:]):
            if not current > previous:
                raise ParameterError(
                    f"depths must be strictly increasing; "
                    f"{current!r} follows {previous!r}")
        if len(self.schedule) != len(self.depths):
            raise ParameterError(
                f"schedule covers {len(self.schedule)} points for "
                f"{len(self.depths)} depths")
        if not isinstance(self.trials_per_point, int) or self.trials_per_point < 1:
            raise ParameterError(
                f"trials_per_point must be an int >= 1, got {self.trials_per_point!r}")


@dataclass(frozen=True)
class SweepRow:
    """Simulated discrimination at one depth of a sweep."""

    depth: float
    duration: float
    saturation: float
    mean_bright: float
    mean_dark: float
    threshold: int
    fidelity: float
    probe_loss: float


def sweep_depths(
    spec: SweepSpec,
    template: ExperimentConfig,
    workers: int = 1,
) -> tuple[SweepRow, ...]:
    """Run the Monte Carlo at every depth of the sweep.

    Each point reuses the template config with its own depth and probe
    settings and a seed offset by the point index, so a one-point sweep with
    the template's own settings reproduces ``run_experiment`` exactly.
    ``probe_loss`` is the fraction of fluorescing-side trials ejected by
    probe heating.
    """
    rows = []
    for index, (depth, probe) in enumerate(zip(spec.depths, spec.schedule)):
        trap = replace(template.trap, depth=depth)
        if spec.adiabatic_reference is not None:
            trap = replace(
                trap, atom_temperature=spec.adiabatic_reference.temperature_at(depth))
        config = replace(
            template, trap=trap, probe=probe,
            trials=spec.trials_per_point, seed=spec.seed + index)
        result = run_experiment(config, states=(DARK, BRIGHT), workers=workers)
        try:
            scan = threshold_scan(result.histograms[DARK],
                                  result.histograms[BRIGHT])
        except NoDataError as exc:
            raise NoDataError(
                f"sweep point {index} (depth {depth!r} K): {exc}") from exc
        bright_tally = result.losses[BRIGHT]
        rows.append(SweepRow(
            depth=depth,
            duration=probe.duration,
            saturation=probe.saturation,
            mean_bright=fit_poisson(result.histograms[BRIGHT]),
            mean_dark=fit_poisson(result.histograms[DARK]),
            threshold=scan.best.threshold,
            fidelity=scan.best.fidelity,
            probe_loss=bright_tally.probe_heating / bright_tally.trials,
        ))
    return tuple(rows)


@dataclass(frozen=True)
class OptimizationConstraints:
    """Feasible region for the probe search.

    ``max_probe_loss`` may be exactly zero: because the thermal starting
    energy is unbounded, any scattering at all carries a nonzero ejection
    probability, so a strictly zero ceiling admits only a probe that never
    scatters.
    """

    max_probe_loss: float = 0.02
    max_saturation: float = 0.1
    duration_bounds: tuple[float, float] = (1e-4, 1e-2)

    def __post_init__(self) -> None:
        if not 0.0 <= self.max_probe_loss < 1.0:
            raise InfeasibleSearchError(
                f"max_probe_loss must lie in [0, 1), got {self.max_probe_loss!r}")
        if not self.max_saturation > 0:
            raise InfeasibleSearchError(
                f"max_saturation must be positive, got {self.max_saturation!r}")
        low, high = self.duration_bounds
        if not (0.0 < low <= high) or not math.isfinite(high):
            raise InfeasibleSearchError(
                f"duration_bounds must satisfy 0 < low <= high, "
                f"got {self.duration_bounds!r}")


@dataclass(frozen=True)
class OptimizationResult:
    """Best feasible probe settings found on the grid."""

    duration: float
    saturation: float
    fidelity: float
    probe_loss: float
    threshold: int


def _model_operating_point(config_like, probe: ProbeConfig):
    mean_dark, mean_bright = expected_counts(
        config_like.constants, probe, config_like.detector)
    scan = threshold_scan(PoissonCounts(mean_dark), PoissonCounts(mean_bright))
    return scan.best


def optimize_probe(
    depth: float,
    constraints: OptimizationConstraints,
    template: ExperimentConfig,
    grid_shape: tuple[int, int] = (40, 40),
    loss_trials: int = 10_000,
) -> OptimizationResult:
    """Grid-search the probe settings that maximise model fidelity at a depth.

    Durations are log-spaced over ``duration_bounds`` and saturations
    log-spaced up to ``max_saturation`` with an explicit zero prepended
    (zero saturation never scatters, hence always meets the loss ceiling).
    The objective is the analytic threshold-model fidelity; feasibility uses
    a Monte Carlo estimate of the probe-heating loss with a deterministic
    per-candidate stream.  Ties are broken toward smaller saturation, then
    shorter duration, by scanning in that order and only accepting strict
    improvements.
    """
    durations_n, saturations_n = grid_shape
    if durations_n < 1 or saturations_n < 1:
        raise InfeasibleSearchError(f"grid_shape must be >= (1, 1), got {grid_shape!r}")
    low, high = constraints.duration_bounds
    durations = np.geomspace(low, high, durations_n)
    # Three decades of saturation reach well below any useful signal level.
    saturations = np.concatenate(
        ([0.0], np.geomspace(constraints.max_saturation * 1e-3,
                             constraints.max_saturation, saturations_n)))
    trap = replace(template.trap, depth=depth)

    best: OptimizationResult | None = None
    candidate_index = 0
    for saturation in saturations:
        for duration in durations:
            probe = ProbeConfig(saturation=float(saturation), duration=float(duration))
            scatters = saturation > 0 and trap.heating_per_scatter > 0
            if constraints.max_probe_loss == 0.0:
                feasible = not scatters
                loss = 0.0 if not scatters else math.inf
            else:
                loss = estimate_probe_loss(
                    template.constants, trap, probe, trials=loss_trials,
                    seed=template.seed + candidate_index) if scatters else 0.0
                feasible = loss <= constraints.max_probe_loss
            candidate_index += 1
            if not feasible:
                continue
            point = _model_operating_point(template, probe)
            if best is None or point.fidelity > best.fidelity:
                best = OptimizationResult(
                    duration=float(duration),
                    saturation=float(saturation),
                    fidelity=point.fidelity,
                    probe_loss=loss,
                    threshold=point.threshold,
                )
    assert best is not None  # the zero-saturation column is always feasible
    return best
