"""Command-line interface.

Four subcommands cover the workflow: ``run`` simulates one experiment and
reports its discrimination, ``scan-threshold`` tabulates the error at every
threshold, ``sweep`` reruns the experiment across trap depths (optionally
optimising the probe first), and ``budget`` prints the analytic error
budget.  Exit codes: 0 success, 2 invalid configuration or malformed input
file, 3 no usable data (every trial lost, or an empty histogram column).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import (
    ConfigError,
    constraints_from,
    experiment_from,
    load_config,
    requested_states,
    sweep_from,
)
from .counts import BRIGHT, DARK, NoDataError, PoissonCounts
from .discrimination import build_report, error_budget, threshold_scan
from .output import (
    DataFileError,
    RunManifest,
    plot_histograms,
    plot_scan,
    plot_sweep,
    read_histogram_csv,
    write_csv,
    write_json,
    write_manifest,
)
from .physics import ParameterError, expected_counts, scattering_rate
from .simulation import run_experiment
from .sweep import InfeasibleSearchError, SweepSpec, optimize_probe, sweep_depths

_log = logging.getLogger(__name__)

_EXIT_OK = 0
_EXIT_CONFIG = 2
_EXIT_DATA = 3


def _workers(threads: int) -> int:
    if threads < 0:
        raise ConfigError(f"--threads must be >= 0, got {threads}")
    if threads == 0:
        return os.cpu_count() or 1
    return threads


def _apply_overrides(settings: dict, args, trials_key: str) -> None:
    if getattr(args, "trials", None) is not None:
        settings[trials_key] = args.trials
    if getattr(args, "seed", None) is not None:
        settings["run.seed"] = args.seed


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, settings: dict, seed: int | None) -> RunManifest:
    return RunManifest(command=tuple(args.command_line), seed=seed,
                       config=settings)


def _tally_dict(tally) -> dict:
    return {
        "trials": tally.trials,
        "kept": tally.kept,
        "probe_heating": tally.probe_heating,
        "vacuum": tally.vacuum,
        "presence_test": tally.presence_test,
    }


def _budget_dict(budget) -> dict:
    return {
        "rows": [
            {"source": row.source, "contribution": row.contribution,
             "note": row.note}
            for row in budget.rows
        ],
        "total": budget.total,
    }


def _histogram_rows(histograms: dict) -> list[tuple[int, int, int]]:
    top = 0
    for histogram in histograms.values():
        if not histogram.is_empty:
            top = max(top, max(histogram.counts))
    rows = []
    for n in range(top + 1):
        rows.append((
            n,
            histograms[DARK].counts.get(n, 0) if DARK in histograms else 0,
            histograms[BRIGHT].counts.get(n, 0) if BRIGHT in histograms else 0,
        ))
    return rows


def cmd_run(args) -> int:
    settings = load_config(args.config)
    _apply_overrides(settings, args, "run.trials")
    config = experiment_from(settings)
    states = requested_states(settings)
    out = _out_dir(args)
    manifest = _manifest(args, settings, config.seed)

    result = run_experiment(config, states=states, workers=_workers(args.threads))

    rows = _histogram_rows(result.histograms)
    if args.format == "json":
        write_json(out / "histogram.json", {
            "rows": [{"n": n, "count_dark": d, "count_bright": b}
                     for n, d, b in rows],
            "manifest": manifest.as_dict(),
        })
    else:
        write_csv(out / "histogram.csv", ("n", "count_dark", "count_bright"),
                  rows, "run_manifest.json")
    write_manifest(out / "run_manifest.json", manifest)
    if args.plot:
        if DARK in result.histograms and BRIGHT in result.histograms:
            plot_histograms(out / "histogram.svg",
                            result.histograms[DARK], result.histograms[BRIGHT])
        else:
            _log.warning("plot skipped: need both prepared states")

    for state, tally in result.losses.items():
        print(f"{state}: kept {tally.kept}/{tally.trials} "
              f"(heating {tally.probe_heating}, vacuum {tally.vacuum}, "
              f"presence {tally.presence_test})")

    if DARK not in result.histograms or BRIGHT not in result.histograms:
        print("single prepared state simulated; no discrimination report")
        return _EXIT_OK

    # NoDataError from an all-lost histogram propagates as exit 3; the
    # histogram table and manifest above are already on disk by then.
    scattered_mean = scattering_rate(config.constants, config.probe) \
        * config.probe.duration
    report = build_report(result.histograms[DARK], result.histograms[BRIGHT],
                          config.noise, scattered_mean)
    write_json(out / "report.json", {
        "mean_dark": report.mean_dark,
        "mean_bright": report.mean_bright,
        "threshold": report.threshold,
        "eps_bright": report.eps_bright,
        "eps_dark": report.eps_dark,
        "fidelity": report.fidelity,
        "fidelity_sigma": report.fidelity_sigma,
        "budget": _budget_dict(report.budget),
        "losses": {state: _tally_dict(tally)
                   for state, tally in result.losses.items()},
        "manifest": manifest.as_dict(),
    })
    print(f"threshold {report.threshold}: fidelity "
          f"{report.fidelity:.5f} +/- {report.fidelity_sigma:.5f} "
          f"(mean_dark {report.mean_dark:.4f}, mean_bright {report.mean_bright:.3f})")
    return _EXIT_OK


def cmd_scan_threshold(args) -> int:
    if (args.histogram is None) == (args.config is None):
        raise ConfigError(
            "scan-threshold needs exactly one of --histogram or --config")
    out = _out_dir(args)
    if args.histogram is not None:
        dark, bright = read_histogram_csv(Path(args.histogram))
        settings = {"input.histogram": str(args.histogram)}
        manifest = _manifest(args, settings, None)
    else:
        settings = load_config(args.config)
        _apply_overrides(settings, args, "run.trials")
        config = experiment_from(settings)
        manifest = _manifest(args, settings, config.seed)
        result = run_experiment(config, states=(DARK, BRIGHT),
                                workers=_workers(args.threads))
        dark = result.histograms[DARK]
        bright = result.histograms[BRIGHT]

    scan = threshold_scan(dark, bright)
    rows = [
        (point.threshold, point.eps_bright, point.eps_dark, point.error,
         point.threshold == scan.best.threshold)
        for point in scan.points
    ]
    if args.format == "json":
        write_json(out / "threshold_scan.json", {
            "rows": [{"n_c": nc, "epsilon_B": eb, "epsilon_D": ed,
                      "epsilon": err, "is_optimal": opt}
                     for nc, eb, ed, err, opt in rows],
            "manifest": manifest.as_dict(),
        })
    else:
        write_csv(out / "threshold_scan.csv",
                  ("n_c", "epsilon_B", "epsilon_D", "epsilon", "is_optimal"),
                  rows, "scan_manifest.json")
    write_manifest(out / "scan_manifest.json", manifest)
    if args.plot:
        plot_scan(out / "threshold_scan.svg", scan.points)
    best = scan.best
    print(f"optimal threshold {best.threshold}: error {best.error:.5f} "
          f"(eps_B {best.eps_bright:.5f}, eps_D {best.eps_dark:.5f})")
    return _EXIT_OK


def cmd_sweep(args) -> int:
    settings = load_config(args.config)
    _apply_overrides(settings, args, "sweep.trials_per_point")
    spec = sweep_from(settings)
    template = experiment_from(settings)
    out = _out_dir(args)
    manifest = _manifest(args, settings, spec.seed)

    if settings["sweep.optimize"]:
        constraints = constraints_from(settings)
        schedule = []
        for depth in spec.depths:
            point_template = template
            if spec.adiabatic_reference is not None:
                trap = replace(
                    template.trap,
                    atom_temperature=spec.adiabatic_reference.temperature_at(depth))
                point_template = replace(template, trap=trap)
            found = optimize_probe(depth, constraints, point_template)
            _log.info("depth %.3g mK: optimised duration %.3g ms, saturation %.3g",
                      depth * 1e3, found.duration * 1e3, found.saturation)
            schedule.append(replace(template.probe,
                                    saturation=found.saturation,
                                    duration=found.duration))
        spec = replace(spec, schedule=tuple(schedule))

    rows = sweep_depths(spec, template, workers=_workers(args.threads))
    write_csv(
        out / "sweep.csv",
        ("depth_mK", "duration_ms", "saturation", "mean_bright", "mean_dark",
         "threshold", "fidelity", "probe_loss"),
        [(row.depth * 1e3, row.duration * 1e3, row.saturation,
          row.mean_bright, row.mean_dark, row.threshold, row.fidelity,
          row.probe_loss) for row in rows],
        "sweep_manifest.json")
    write_manifest(out / "sweep_manifest.json", manifest)
    if args.plot:
        plot_sweep(out / "sweep.svg", rows)
    for row in rows:
        print(f"depth {row.depth * 1e3:6.3f} mK: fidelity {row.fidelity:.5f} "
              f"at threshold {row.threshold} "
              f"(mean_bright {row.mean_bright:.3f}, loss {row.probe_loss:.4f})")
    return _EXIT_OK


def cmd_budget(args) -> int:
    settings = load_config(args.config)
    config = experiment_from(settings)
    out = _out_dir(args)
    manifest = _manifest(args, settings, config.seed)

    mean_dark, mean_bright = expected_counts(
        config.constants, config.probe, config.detector)
    scan = threshold_scan(PoissonCounts(mean_dark), PoissonCounts(mean_bright))
    scattered_mean = scattering_rate(config.constants, config.probe) \
        * config.probe.duration
    budget = error_budget(mean_dark, mean_bright, scattered_mean,
                          config.noise, scan.best.threshold)

    write_json(out / "budget.json", {
        "threshold": scan.best.threshold,
        "mean_dark": mean_dark,
        "mean_bright": mean_bright,
        "model_fidelity": scan.best.fidelity,
        "budget": _budget_dict(budget),
        "manifest": manifest.as_dict(),
    })
    width = max(len(row.source) for row in budget.rows)
    print(f"analytic operating point: threshold {scan.best.threshold}, "
          f"model fidelity {scan.best.fidelity:.5f}")
    for row in budget.rows:
        print(f"  {row.source:<{width}}  {row.contribution:9.6f}")
    print(f"  {'total':<{width}}  {budget.total:9.6f}")
    return _EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atomreadout",
        description="Simulate and analyse lossless fluorescence state "
                    "readout of a single trapped atom.")
    commands = parser.add_subparsers(dest="subcommand", required=True)

    def common(sub, config_required=True):
        if config_required:
            sub.add_argument("--config", required=True,
                             help="key-value configuration file")
        sub.add_argument("--out", default=".",
                         help="output directory (default: current)")
        sub.add_argument("--seed", type=int, default=None,
                         help="override run.seed")
        sub.add_argument("--trials", type=int, default=None,
                         help="override the trial count")
        sub.add_argument("--format", choices=("csv", "json"), default="csv",
                         help="table output format")
        sub.add_argument("--threads", type=int, default=1,
                         help="worker threads; 0 picks the CPU count")
        sub.add_argument("--plot", action="store_true",
                         help="also write SVG plots (best effort)")

    run = commands.add_parser("run", help="simulate one experiment")
    common(run)
    run.set_defaults(func=cmd_run)

    scan = commands.add_parser("scan-threshold",
                               help="tabulate error against threshold")
    scan.add_argument("--histogram", default=None,
                      help="histogram CSV from a previous run")
    common(scan, config_required=False)
    scan.add_argument("--config", default=None,
                      help="config file to simulate fresh histograms from")
    scan.set_defaults(func=cmd_scan_threshold)

    sweep = commands.add_parser("sweep", help="rerun across trap depths")
    common(sweep)
    sweep.set_defaults(func=cmd_sweep)

    budget = commands.add_parser("budget", help="print the analytic error budget")
    common(budget)
    budget.set_defaults(func=cmd_budget)

    return parser


def main(argv: list[str] | None = None) -> int:
    command_line = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="[%(levelname)s] %(message)s")
    parser = build_parser()
    args = parser.parse_args(command_line)
    args.command_line = command_line
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except (ParameterError, InfeasibleSearchError) as exc:
        print(f"invalid parameter: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except DataFileError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except NoDataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return _EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
