# src/harness.py
# Runs a parsed configuration and renders the CSV report.

import logging
import os
import tempfile
import time
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

from .config import RunConfig
from .experiments import (
    EstimateRecord,
    ScenarioSpec,
    coverage_probability,
    mean_local_delay,
    outage_persistence,
    relay_outage,
    simo_joint_occurrence,
)
from .interference import CorrelationMode

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "experiment",
    "mode",
    "sweep_param",
    "sweep_value",
    "estimate",
    "std_error",
    "reps",
    "capped_fraction",
    "seed",
]

# sweeps that evaluate every value on one shared set of replications
GRID_SWEEPS = {"delay": "aloha_p", "relay": "relay_position"}


def _debug_block(title: str, obj: Any = None):
    if not log.isEnabledFor(logging.DEBUG):
        return
    log.debug("==== %s ====", title)
    if obj is not None:
        log.debug("%s", obj)
    log.debug("==== /%s ====", title)


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def _single(config: RunConfig, scenario: ScenarioSpec, mode: str, antennas: int) -> EstimateRecord:
    if config.experiment == "coverage":
        return coverage_probability(scenario, threads=config.threads)
    correlation = CorrelationMode.from_name(mode)
    if config.experiment == "simo":
        return simo_joint_occurrence(scenario, antennas, correlation, threads=config.threads)
    if config.experiment == "delay":
        return mean_local_delay(scenario, None, correlation, threads=config.threads)[0]
    return outage_persistence(scenario, correlation, threads=config.threads)


def _grid(config: RunConfig, mode: str, values: List[float]) -> List[EstimateRecord]:
    correlation = CorrelationMode.from_name(mode)
    if config.experiment == "delay":
        return mean_local_delay(config.scenario, values, correlation, threads=config.threads)
    return relay_outage(config.scenario, values, correlation, threads=config.threads)


def evaluate(config: RunConfig) -> List[Tuple[Optional[str], Optional[float], EstimateRecord]]:
    """All (sweep parameter, sweep value, record) rows, ordered by sweep value then mode."""
    sweep, values = config.sweep_axis()
    modes = ["marginal"] if config.experiment == "coverage" else list(config.modes)
    table: Dict[Tuple[int, int], EstimateRecord] = {}
    for m, mode in enumerate(modes):
        if sweep is not None and GRID_SWEEPS.get(config.experiment) == sweep:
            for i, record in enumerate(_grid(config, mode, values)):
                table[(i, m)] = record
        else:
            for i, value in enumerate(values):
                scenario, antennas = config.scenario_for(value)
                table[(i, m)] = _single(config, scenario, mode, antennas)
    return [(sweep, values[i], table[(i, m)]) for i, m in sorted(table)]


def to_csv(rows: List[Tuple[Optional[str], Optional[float], EstimateRecord]]) -> str:
    records = [
        {
            "experiment": record.experiment,
            "mode": record.mode,
            "sweep_param": sweep or "",
            "sweep_value": "" if value is None else _fmt(value),
            "estimate": _fmt(record.estimate),
            "std_error": _fmt(record.std_error),
            "reps": str(record.reps),
            "capped_fraction": _fmt(record.capped_fraction),
            "seed": str(record.seed),
        }
        for sweep, value, record in rows
    ]
    df = pd.DataFrame(records, columns=CSV_COLUMNS)
    return df.to_csv(index=False, lineterminator="\n")


def write_csv(text: str, path: str) -> str:
    """Write through a temporary file in the target directory, then rename over the target."""
    out_dir = os.path.dirname(os.path.abspath(path))
    os.makedirs(out_dir, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=".partial-", suffix=".csv", dir=out_dir)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    return path


def run(config: RunConfig) -> str:
    """Execute the configured experiment over its sweep and return the CSV document.

    When the config names an output path the document is also written there;
    nothing is written if any experiment fails.
    """
    started = time.perf_counter()
    log.info(
        "Running %s: modes=%s reps=%d seed=%d threads=%d",
        config.experiment,
        ",".join(config.modes),
        config.scenario.reps,
        config.scenario.seed,
        config.threads,
    )
    _debug_block("scenario", config.scenario.model_dump())
    rows = evaluate(config)
    text = to_csv(rows)
    _debug_block("csv preview", "\n".join(text.splitlines()[:3]))
    if config.out:
        write_csv(text, config.out)
        log.info("CSV saved to %s", config.out)
    log.info("Finished %s: %d rows in %.1fs", config.experiment, len(rows), time.perf_counter() - started)
    return text
