"""Result persistence: manifests, JSON and CSV writers, optional SVG plots.

Output files are deterministic for a fixed seed and command line: floats go
out with 17 significant digits in JSON (enough to round-trip an IEEE-754
double) and shortest-round-trip form in CSV, line endings are LF, and the
manifest embedded in result files carries no clock readings.  Wall-clock
timestamps live only in the sidecar manifest file, so result files from two
identical runs compare byte for byte.
"""

from __future__ import annotations

import datetime as _datetime
import json as _json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .counts import BRIGHT, DARK, CountHistogram

__all__ = [
    "DataFileError",
    "RunManifest",
    "json_dumps",
    "write_json",
    "write_csv",
    "write_manifest",
    "read_histogram_csv",
    "plot_histograms",
    "plot_scan",
    "plot_sweep",
]

TOOL_NAME = "atomreadout"

_log = logging.getLogger(__name__)


class DataFileError(ValueError):
    """An input data file is malformed or does not hold usable data."""


@dataclass(frozen=True)
class RunManifest:
    """Provenance of one command invocation.

    ``config`` is the fully resolved canonical snapshot (defaults overlaid
    with the file's values, in file units), so rerunning the recorded
    command against the recorded snapshot reproduces every output byte.
    """

    command: tuple[str, ...]
    seed: int | None
    config: dict[str, object]

    def as_dict(self) -> dict[str, object]:
        return {
            "tool": TOOL_NAME,
            "version": __version__,
            "command": list(self.command),
            "seed": self.seed,
            "config": dict(self.config),
        }


def _format_float(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"cannot serialise non-finite float {value!r}")
    return format(float(value), ".17g")


def _json_fragment(value: object, indent: int, out: list[str]) -> None:
    pad = " " * indent
    inner = " " * (indent + 2)
    if value is None:
        out.append("null")
    elif isinstance(value, bool):
        out.append("true" if value else "false")
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        out.append(_format_float(value))
    elif isinstance(value, str):
        out.append(_json.dumps(value))
    elif isinstance(value, dict):
        if not value:
            out.append("{}")
            return
        out.append("{\n")
        for position, (key, item) in enumerate(value.items()):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            out.append(f"{inner}{_json.dumps(key)}: ")
            _json_fragment(item, indent + 2, out)
            out.append(",\n" if position < len(value) - 1 else "\n")
        out.append(f"{pad}}}")
    elif isinstance(value, (list, tuple)):
        if not len(value):
            out.append("[]")
            return
        out.append("[\n")
        for position, item in enumerate(value):
            out.append(inner)
            _json_fragment(item, indent + 2, out)
            out.append(",\n" if position < len(value) - 1 else "\n")
        out.append(f"{pad}]")
    else:
        raise TypeError(f"cannot serialise {type(value).__name__} to JSON")


def json_dumps(doc: object) -> str:
    """Serialise to JSON with 17-significant-digit floats and LF endings."""
    out: list[str] = []
    _json_fragment(doc, 0, out)
    out.append("\n")
    return "".join(out)


def write_json(path: Path, doc: object) -> None:
    path.write_text(json_dumps(doc), encoding="utf-8", newline="\n")
    _log.info("wrote %s", path)


def _format_cell(value: object) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"cannot serialise non-finite float {value!r}")
        # float() strips numpy scalar subclasses whose repr is not bare digits
        return repr(float(value))
    if isinstance(value, str):
        if "," in value or "\n" in value:
            raise ValueError(f"cell value {value!r} would break the CSV")
        return value
    raise TypeError(f"cannot serialise {type(value).__name__} to CSV")


def write_csv(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Sequence[object]],
    manifest_name: str,
) -> None:
    """Write a comma-separated table with a leading manifest reference line."""
    lines = [f"# manifest: {manifest_name}", ",".join(header)]
    for row in rows:
        cells = [_format_cell(cell) for cell in row]
        if len(cells) != len(header):
            raise ValueError(
                f"row has {len(cells)} cells for {len(header)} columns")
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    _log.info("wrote %s", path)


def write_manifest(path: Path, manifest: RunManifest) -> None:
    """Write the sidecar manifest, the one output that carries timestamps."""
    doc = manifest.as_dict()
    doc["created_at"] = _datetime.datetime.now(_datetime.timezone.utc).isoformat()
    write_json(path, doc)


def read_histogram_csv(path: Path) -> tuple[CountHistogram, CountHistogram]:
    """Read a histogram table back into (dark, bright) histograms.

    Accepts exactly the schema ``n,count_dark,count_bright`` written by the
    run command, ignoring ``#`` comment lines.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFileError(f"cannot read histogram file {path}: {exc}") from exc
    rows = [line for line in text.splitlines()
            if line.strip() and not line.lstrip().startswith("#")]
    if not rows:
        raise DataFileError(f"{path}: no content")
    header = [cell.strip() for cell in rows[0].split(",")]
    if header != ["n", "count_dark", "count_bright"]:
        raise DataFileError(
            f"{path}: expected header 'n,count_dark,count_bright', "
            f"got {rows[0]!r}")
    dark: dict[int, int] = {}
    bright: dict[int, int] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        cells = row.split(",")
        if len(cells) != 3:
            raise DataFileError(f"{path}: line {lineno}: expected 3 cells")
        try:
            n, count_dark, count_bright = (int(cell.strip()) for cell in cells)
        except ValueError:
            raise DataFileError(
                f"{path}: line {lineno}: counts must be integers") from None
        if n < 0 or count_dark < 0 or count_bright < 0:
            raise DataFileError(f"{path}: line {lineno}: negative entry")
        if count_dark:
            dark[n] = dark.get(n, 0) + count_dark
        if count_bright:
            bright[n] = bright.get(n, 0) + count_bright
    return (
        CountHistogram(counts=dark, kept_trials=sum(dark.values()),
                       prepared_state=DARK),
        CountHistogram(counts=bright, kept_trials=sum(bright.values()),
                       prepared_state=BRIGHT),
    )


# --- plots (best effort; never let plotting break a run) -------------------

def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_histograms(path: Path, dark: CountHistogram, bright: CountHistogram) -> bool:
    try:
        plt = _pyplot()
        top = max([n for h in (dark, bright) if not h.is_empty
                   for n in h.counts] or [1])
        ns = list(range(top + 1))
        fig, ax = plt.subplots(figsize=(6, 4))
        for histogram, label, shift, color in (
                (dark, "dark prepared", -0.2, "tab:blue"),
                (bright, "bright prepared", 0.2, "tab:orange")):
            if histogram.is_empty:
                continue
            fractions = [histogram.counts.get(n, 0) / histogram.kept_trials
                         for n in ns]
            ax.bar([n + shift for n in ns], fractions, width=0.4,
                   label=label, color=color)
        ax.set_xlabel("detected photons")
        ax.set_ylabel("fraction of kept trials")
        ax.legend()
        fig.savefig(path, format="svg")
        plt.close(fig)
        _log.info("wrote %s", path)
        return True
    except Exception as exc:  # plotting is optional by design
        _log.warning("plot %s skipped: %s", path, exc)
        return False


def plot_scan(path: Path, points) -> bool:
    try:
        plt = _pyplot()
        fig, ax = plt.subplots(figsize=(6, 4))
        thresholds = [p.threshold for p in points]
        errors = [p.error for p in points]
        ax.semilogy(thresholds, errors, marker="o")
        best = min(points, key=lambda p: p.error)
        ax.axvline(best.threshold, linestyle="--", color="gray")
        ax.set_xlabel("threshold (counts)")
        ax.set_ylabel("readout error")
        fig.savefig(path, format="svg")
        plt.close(fig)
        _log.info("wrote %s", path)
        return True
    except Exception as exc:
        _log.warning("plot %s skipped: %s", path, exc)
        return False


def plot_sweep(path: Path, rows) -> bool:
    try:
        plt = _pyplot()
        fig, (top, bottom) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
        depths_mK = [row.depth * 1e3 for row in rows]
        top.plot(depths_mK, [row.fidelity for row in rows], marker="o")
        top.set_ylabel("fidelity")
        bottom.plot(depths_mK, [row.mean_bright for row in rows], marker="s")
        bottom.set_ylabel("mean bright counts")
        bottom.set_xlabel("trap depth (mK)")
        fig.savefig(path, format="svg")
        plt.close(fig)
        _log.info("wrote %s", path)
        return True
    except Exception as exc:
        _log.warning("plot %s skipped: %s", path, exc)
        return False
