"""CSV and JSON readers/writers for run artifacts.

All CSV files are comma-separated with a header row, LF newlines and
round-trip float formatting.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from errors import ConfigError
from formatters import fmt_float
from sim import TimeSeries, Trajectory

log = logging.getLogger(__name__)


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return fmt_float(value)
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    log.debug("wrote %s", path)
    return path


def write_trajectory_csv(path, traj: Trajectory) -> Path:
    """Header ``t,<state names>``; one row per sample."""
    times = traj.times
    rows = ([float(t)] + [float(v) for v in row] for t, row in zip(times, traj.states))
    return write_csv(path, ("t",) + traj.state_names, rows)


def write_series_csv(path, series: TimeSeries) -> Path:
    rows = ((float(t), float(v)) for t, v in zip(series.times, series.values))
    return write_csv(path, ("t", series.name), rows)


def read_csv_columns(path) -> dict:
    """Read a numeric CSV into {column name: float array}."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty CSV") from None
        try:
            rows = [[float(v) for v in row] for row in reader if row]
        except ValueError as e:
            raise ConfigError(f"{path}: non-numeric cell ({e})") from None
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def read_series_csv(path, column: str = "V") -> TimeSeries:
    """Load one column of a ``t,...`` CSV as a uniformly sampled TimeSeries."""
    cols = read_csv_columns(path)
    if "t" not in cols:
        raise ConfigError(f"{path}: missing 't' column")
    if column not in cols:
        raise ConfigError(f"{path}: missing column {column!r} (have {sorted(cols)})")
    return TimeSeries.from_times(cols["t"], cols[column], column)


def read_trajectory_csv(path, model_id: str, state_names: Optional[Sequence[str]] = None) -> Trajectory:
    cols = read_csv_columns(path)
    if "t" not in cols:
        raise ConfigError(f"{path}: missing 't' column")
    names = tuple(state_names) if state_names else tuple(k for k in cols if k != "t")
    missing = [n for n in names if n not in cols]
    if missing:
        raise ConfigError(f"{path}: missing state column(s) {missing}")
    grid = TimeSeries.from_times(cols["t"], cols["t"], "t")
    states = np.column_stack([cols[n] for n in names])
    return Trajectory(grid.t0, grid.dt, states, model_id, names)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (set, tuple)):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def dumps(obj: Any, **kwargs) -> str:
    return json.dumps(obj, default=_json_default, **kwargs)


def write_json(path, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj, indent=2, sort_keys=True) + "\n")
    log.debug("wrote %s", path)
    return path


def read_json(path) -> Any:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from None
