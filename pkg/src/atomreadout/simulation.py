"""Monte Carlo model of one state-readout sequence on a single trapped atom.

A trial walks through four stages:

1. preparation -- the intended internal state is corrupted by the finite
   hyperfine and Zeeman preparation fidelities (bright side) or by an
   off-resonant flip into the fluorescing manifold (dark side);
2. probe -- a fluorescing atom scatters a Poisson number of photons, each
   depositing a fixed recoil heat; it is ejected at the first event whose
   accumulated energy, on top of its thermal starting energy, exceeds the
   trap depth.  Imperfectly prepared (non-stretched) atoms may additionally
   fall into the non-fluorescing manifold at each event and stop scattering;
3. detection -- each scattered photon is collected with the detector
   efficiency, and Poissonian dark counts are added;
4. sequence bookkeeping -- background-gas collisions over the full sequence
   wall time and errors of the atom-presence check discard the trial.

Trials that lose the atom are excluded by post-selection, which is what
makes the readout lossless in the kept ensemble.

Every trial draws from its own random stream, derived from the experiment
seed and the trial index alone.  Results are therefore bit-identical no
matter how trials are batched or distributed over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .counts import BRIGHT, DARK, CountHistogram
from .physics import (
    DetectorConfig,
    ParameterError,
    PhysicalConstants,
    ProbeConfig,
    TrapConfig,
    recoil_energy,
    scattering_rate,
)

__all__ = [
    "BRIGHT",
    "DARK",
    "PROBE_HEATING",
    "VACUUM",
    "PRESENCE_TEST",
    "NoiseConfig",
    "ExperimentConfig",
    "TrialOutcome",
    "LossTally",
    "ExperimentResult",
    "trial_rng",
    "simulate_trial",
    "run_experiment",
    "estimate_probe_loss",
]

# Loss causes, in the order the sequence can trigger them.
PROBE_HEATING = "probe_heating"
VACUUM = "vacuum"
PRESENCE_TEST = "presence_test"


def _require_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ParameterError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class NoiseConfig:
    """Imperfections of the sequence surrounding the ideal probe.

    hyperfine_prep_fidelity:
        Probability that a bright-side preparation leaves the atom in the
        fluorescing hyperfine manifold at all.
    zeeman_prep_fidelity:
        Probability that, within that manifold, the atom sits in the
        stretched state whose cycling transition is closed.
    raman_flip_probability:
        Probability per sequence that trap light pumps a dark-prepared atom
        into the fluorescing manifold before or during the probe.
    presence_test_error:
        Probability per sequence that the atom-presence check gives a wrong
        verdict, discarding the trial.
    vacuum_lifetime / sequence_wall_time:
        Background-gas-limited trap lifetime and the wall-clock span of one
        sequence (both seconds); together they set the collisional loss
        probability per trial.
    depump_probability_per_scatter:
        Probability per scattering event that a non-stretched fluorescing
        atom decays into the non-fluorescing manifold and goes silent.
    """

    hyperfine_prep_fidelity: float = 0.9997
    zeeman_prep_fidelity: float = 0.996
    raman_flip_probability: float = 0.001
    presence_test_error: float = 0.006
    vacuum_lifetime: float = 23.0
    sequence_wall_time: float = 0.092
    depump_probability_per_scatter: float = 1e-3

    def __post_init__(self) -> None:
        _require_probability("noise.hyperfine_prep_fidelity", self.hyperfine_prep_fidelity)
        _require_probability("noise.zeeman_prep_fidelity", self.zeeman_prep_fidelity)
        _require_probability("noise.raman_flip_probability", self.raman_flip_probability)
        _require_probability("noise.presence_test_error", self.presence_test_error)
        _require_probability("noise.depump_probability_per_scatter",
                             self.depump_probability_per_scatter)
        if not self.vacuum_lifetime > 0:
            raise ParameterError(
                f"noise.vacuum_lifetime must be positive, got {self.vacuum_lifetime!r}")
        if self.sequence_wall_time < 0:
            raise ParameterError(
                f"noise.sequence_wall_time must be >= 0, got {self.sequence_wall_time!r}")

    @property
    def vacuum_loss_probability(self) -> float:
        """Per-trial probability of losing the atom to a collision."""
        return -math.expm1(-self.sequence_wall_time / self.vacuum_lifetime)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one repeated readout experiment needs."""

    constants: PhysicalConstants
    trap: TrapConfig
    probe: ProbeConfig
    detector: DetectorConfig
    noise: NoiseConfig
    prepared_state: str = BRIGHT
    trials: int = 10_000
    seed: int = 1

    def __post_init__(self) -> None:
        if self.prepared_state not in (BRIGHT, DARK):
            raise ParameterError(
                f"prepared_state must be {BRIGHT!r} or {DARK!r}, "
                f"got {self.prepared_state!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ParameterError(f"trials must be an int >= 1, got {self.trials!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ParameterError(f"seed must be an int >= 0, got {self.seed!r}")


@dataclass(frozen=True)
class TrialOutcome:
    """What one sequence produced."""

    prepared_state: str
    effective_state_at_probe: str
    scattered: int
    detected: int
    lost: bool
    loss_cause: str | None
    post_selected: bool

    def __post_init__(self) -> None:
        if self.post_selected is not (not self.lost):
            raise ParameterError("post_selected must be the negation of lost")
        if self.lost != (self.loss_cause is not None):
            raise ParameterError("loss_cause must be set exactly for lost trials")


@dataclass(frozen=True)
class LossTally:
    """Per-cause loss counts for one prepared state."""

    trials: int
    kept: int
    probe_heating: int
    vacuum: int
    presence_test: int

    def __post_init__(self) -> None:
        lost = self.probe_heating + self.vacuum + self.presence_test
        if self.kept + lost != self.trials:
            raise ParameterError(
                f"loss tally does not conserve trials: kept={self.kept} "
                f"lost={lost} trials={self.trials}")

    @property
    def lost(self) -> int:
        return self.probe_heating + self.vacuum + self.presence_test

    def merge(self, other: LossTally) -> LossTally:
        return LossTally(
            trials=self.trials + other.trials,
            kept=self.kept + other.kept,
            probe_heating=self.probe_heating + other.probe_heating,
            vacuum=self.vacuum + other.vacuum,
            presence_test=self.presence_test + other.presence_test,
        )


@dataclass(frozen=True)
class ExperimentResult:
    """Histograms of kept trials and loss tallies, keyed by prepared state."""

    histograms: dict[str, CountHistogram]
    losses: dict[str, LossTally]


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Independent random stream for one trial, fixed by (seed, index)."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(trial_index,)))


def simulate_trial(config: ExperimentConfig, trial_index: int) -> TrialOutcome:
    """Run one full sequence and report its outcome.

    Deterministic given ``(config, trial_index)``: the trial neither shares
    random state with other trials nor depends on execution order.
    """
    rng = trial_rng(config.seed, trial_index)
    noise = config.noise

    # --- preparation ------------------------------------------------------
    # probe_fraction is the fraction of the probe window the atom spends
    # fluorescing; a dark-side flip happens at a uniformly random time, so a
    # flipped atom fluoresces only for the remainder.
    stretched = True
    if config.prepared_state == BRIGHT:
        if rng.random() >= noise.hyperfine_prep_fidelity:
            effective, probe_fraction = DARK, 0.0
        else:
            effective, probe_fraction = BRIGHT, 1.0
            stretched = rng.random() < noise.zeeman_prep_fidelity
    else:
        if rng.random() < noise.raman_flip_probability:
            effective, probe_fraction = BRIGHT, float(rng.random())
            stretched = False
        else:
            effective, probe_fraction = DARK, 0.0

    # --- probe ------------------------------------------------------------
    scattered = 0
    lost = False
    cause: str | None = None
    if effective == BRIGHT and probe_fraction > 0.0:
        mean_events = (scattering_rate(config.constants, config.probe)
                       * config.probe.duration * probe_fraction)
        candidates = int(rng.poisson(mean_events)) if mean_events > 0 else 0
        if candidates > 0:
            start_energy = rng.gamma(3.0, config.constants.k_boltzmann
                                     * config.trap.atom_temperature) \
                if config.trap.atom_temperature > 0 else 0.0
            heat = config.trap.heating_per_scatter * recoil_energy(config.constants)
            if heat > 0.0:
                headroom = (config.constants.k_boltzmann * config.trap.depth
                            - start_energy)
                # First event whose cumulative heat strictly exceeds the
                # headroom; an atom already above the depth goes on event 1.
                events_to_loss = max(1, math.floor(headroom / heat) + 1)
            else:
                events_to_loss = None
            events_to_depump = None
            if not stretched and noise.depump_probability_per_scatter > 0.0:
                events_to_depump = int(rng.geometric(
                    noise.depump_probability_per_scatter))
            if (events_to_loss is not None and candidates >= events_to_loss
                    and (events_to_depump is None
                         or events_to_loss <= events_to_depump)):
                scattered = events_to_loss
                lost, cause = True, PROBE_HEATING
            elif events_to_depump is not None and candidates >= events_to_depump:
                scattered = events_to_depump
            else:
                scattered = candidates

    # --- detection --------------------------------------------------------
    detected = 0
    if scattered > 0 and config.detector.collection_efficiency > 0.0:
        detected += int(rng.binomial(scattered, config.detector.collection_efficiency))
    background = config.detector.dark_count_rate * config.probe.duration
    if background > 0.0:
        detected += int(rng.poisson(background))

    # --- sequence losses --------------------------------------------------
    if not lost and rng.random() < noise.vacuum_loss_probability:
        lost, cause = True, VACUUM
    if not lost and rng.random() < noise.presence_test_error:
        lost, cause = True, PRESENCE_TEST

    return TrialOutcome(
        prepared_state=config.prepared_state,
        effective_state_at_probe=effective,
        scattered=scattered,
        detected=detected,
        lost=lost,
        loss_cause=cause,
        post_selected=not lost,
    )


def _run_block(config: ExperimentConfig, start: int, stop: int):
    counts: dict[int, int] = {}
    kept = heating = vacuum = presence = 0
    for index in range(start, stop):
        outcome = simulate_trial(config, index)
        if outcome.post_selected:
            kept += 1
            counts[outcome.detected] = counts.get(outcome.detected, 0) + 1
        elif outcome.loss_cause == PROBE_HEATING:
            heating += 1
        elif outcome.loss_cause == VACUUM:
            vacuum += 1
        else:
            presence += 1
    tally = LossTally(trials=stop - start, kept=kept, probe_heating=heating,
                      vacuum=vacuum, presence_test=presence)
    return counts, tally


def run_experiment(
    config: ExperimentConfig,
    states: Sequence[str] | None = None,
    workers: int = 1,
) -> ExperimentResult:
    """Simulate ``config.trials`` sequences for each requested prepared state.

    ``states`` defaults to the single state named in the config; pass
    ``(DARK, BRIGHT)`` to collect both histograms in one run.  Trial indices
    are assigned globally (state ``k`` owns indices ``[k*trials, (k+1)*trials)``)
    so every trial keeps its own random stream and the result is independent
    of ``workers``.  All-lost runs return an empty histogram rather than fail.
    """
    requested = tuple(states) if states is not None else (config.prepared_state,)
    if not requested:
        raise ParameterError("states must name at least one prepared state")
    if workers < 1:
        raise ParameterError(f"workers must be >= 1, got {workers!r}")

    histograms: dict[str, CountHistogram] = {}
    losses: dict[str, LossTally] = {}
    for state_index, state in enumerate(requested):
        if state in histograms:
            raise ParameterError(f"state {state!r} requested twice")
        state_config = replace(config, prepared_state=state)
        start = state_index * config.trials
        stop = start + config.trials
        if workers == 1 or config.trials < 2 * workers:
            blocks = [_run_block(state_config, start, stop)]
        else:
            bounds = [int(b) for b in np.linspace(start, stop, workers + 1)]
            with ThreadPoolExecutor(max_workers=workers) as pool:
                blocks = list(pool.map(
                    lambda span: _run_block(state_config, span[0], span[1]),
                    zip(bounds[:-1], bounds[1:])))
        counts: dict[int, int] = {}
        tally = LossTally(trials=0, kept=0, probe_heating=0, vacuum=0, presence_test=0)
        for block_counts, block_tally in blocks:
            for value, freq in block_counts.items():
                counts[value] = counts.get(value, 0) + freq
            tally = tally.merge(block_tally)
        histograms[state] = CountHistogram(
            counts=counts, kept_trials=tally.kept, prepared_state=state)
        losses[state] = tally
    return ExperimentResult(histograms=histograms, losses=losses)


def estimate_probe_loss(
    constants: PhysicalConstants,
    trap: TrapConfig,
    probe: ProbeConfig,
    trials: int = 10_000,
    seed: int = 0,
) -> float:
    """Monte Carlo estimate of the probe-heating loss fraction.

    Uses the same heating rule as :func:`simulate_trial` -- thermal starting
    energy plus a fixed heat per scattering event, ejection when the total
    exceeds the depth -- for an ideally prepared fluorescing atom, vectorised
    for speed.  Depump-truncated scattering is ignored, which can only
    overestimate the loss of the rare non-stretched atoms.
    """
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials!r}")
    heat = trap.heating_per_scatter * recoil_energy(constants)
    mean_events = scattering_rate(constants, probe) * probe.duration
    if heat == 0.0 or mean_events == 0.0:
        return 0.0
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    events = rng.poisson(mean_events, trials)
    if trap.atom_temperature > 0:
        start = rng.gamma(3.0, constants.k_boltzmann * trap.atom_temperature, trials)
    else:
        start = np.zeros(trials)
    depth = constants.k_boltzmann * trap.depth
    lost = (events >= 1) & (start + events * heat > depth)
    return float(np.mean(lost))
