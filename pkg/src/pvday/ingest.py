"""Raw CSV ingestion, physical-bounds cleaning and hourly resampling.

Reads plant-export-style CSVs (header row, one `timestamp` column, data
columns mapped to canonical names by a schema), clamps out-of-bounds
values, interpolates short gaps, and averages 5-minute power records to
hourly values. Cleaning is total: unfillable gaps flow through as missing
and are reported in the cleaning log.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from pvday.core import TimeSeries
from pvday.errors import MalformedTimestamp, MisalignedStart, MissingColumn

CANONICAL_COLUMNS = ("power", "ghi", "dhi", "temperature", "humidity", "rainfall",
                     "zenith", "azimuth")
UNITS = {"power": "kW", "ghi": "W/m2", "dhi": "W/m2", "temperature": "degC",
         "humidity": "%", "rainfall": "mm", "zenith": "deg", "azimuth": "deg"}

# interior gaps longer than this many samples are left missing
MAX_FILL_RUN = 6

_TS_FORMATS = ("%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%d")


@dataclass(frozen=True)
class PlantSpec:
    plant_id: str
    manufacturer: str
    array_rating: float  # kW
    pv_technology: str
    array_structure: str
    install_date: int  # year

    def __post_init__(self):
        if self.array_rating <= 0:
            raise ValueError("array_rating must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "PlantSpec":
        return cls(d["plant_id"], d["manufacturer"], float(d["array_rating"]),
                   d["pv_technology"], d["array_structure"], int(d["install_date"]))


def default_bounds(array_rating: float) -> "PhysicalBounds":
    return PhysicalBounds({
        "power": (0.0, array_rating),
        "ghi": (0.0, 1500.0),
        "dhi": (0.0, 1500.0),
        "temperature": (-10.0, 60.0),
        "humidity": (0.0, 100.0),
        "rainfall": (0.0, 500.0),
    })


@dataclass(frozen=True)
class PhysicalBounds:
    """Per-column (min, max) clamp limits in the column's unit."""

    limits: dict[str, tuple[float, float]]

    def __post_init__(self):
        for name, (lo, hi) in self.limits.items():
            if not lo < hi:
                raise ValueError(f"bounds for {name!r} must satisfy min < max")


@dataclass(frozen=True, eq=False)
class RawRecordSet:
    """Per-plant raw records on a strictly increasing timestamp axis."""

    plant_id: str
    timestamps: np.ndarray  # datetime64[s]
    data: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[s]")
        if ts.size > 1 and not np.all(ts[1:] > ts[:-1]):
            raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", ts)

    def __len__(self) -> int:
        return self.timestamps.size


def _parse_timestamp(cell: str) -> datetime:
    cell = cell.strip()
    for fmt in _TS_FORMATS:
        try:
            return datetime.strptime(cell, fmt)
        except ValueError:
            continue
    raise MalformedTimestamp(f"unparseable timestamp: {cell!r}")


def parse_csv(path: str | Path, schema: dict[str, str], plant_id: str = "") -> RawRecordSet:
    """Parse a raw export; schema maps raw header names to canonical names.

    Unparseable data cells become missing sentinels; a malformed or missing
    timestamp is an error since the axis is structural.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MissingColumn(f"{path}: empty file")
        header = [h.strip() for h in header]
        if "timestamp" not in header:
            raise MissingColumn(f"{path}: no 'timestamp' column")
        ts_idx = header.index("timestamp")
        col_idx: dict[str, int] = {}
        for raw_name, canon in schema.items():
            if canon not in CANONICAL_COLUMNS:
                raise MissingColumn(f"schema maps to unknown canonical column {canon!r}")
            if raw_name not in header:
                raise MissingColumn(f"{path}: required column {raw_name!r} not in header")
            col_idx[canon] = header.index(raw_name)

        times: list[datetime] = []
        cols: dict[str, list[float]] = {c: [] for c in col_idx}
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            times.append(_parse_timestamp(row[ts_idx]))
            for canon, j in col_idx.items():
                cell = row[j].strip() if j < len(row) else ""
                try:
                    cols[canon].append(float(cell))
                except ValueError:
                    cols[canon].append(np.nan)
    ts = np.array([np.datetime64(t, "s") for t in times])
    data = {c: np.asarray(v, dtype=np.float64) for c, v in cols.items()}
    return RawRecordSet(plant_id or path.stem, ts, data)


def _fill_short_gaps(values: np.ndarray, max_run: int) -> tuple[np.ndarray, int, int]:
    """Linear interpolation of interior missing runs of <= max_run samples.

    Returns (filled, n_filled, n_unfilled); boundary gaps stay missing.
    """
    out = values.copy()
    isnan = np.isnan(out)
    if not isnan.any():
        return out, 0, 0
    n = out.size
    filled = unfilled = 0
    i = 0
    while i < n:
        if not isnan[i]:
            i += 1
            continue
        j = i
        while j < n and isnan[j]:
            j += 1
        run = j - i
        if i > 0 and j < n and run <= max_run:
            left, right = out[i - 1], out[j]
            steps = np.arange(1, run + 1) / (run + 1)
            out[i:j] = left + steps * (right - left)
            filled += run
        else:
            unfilled += run
        i = j
    return out, filled, unfilled


def clean(records: RawRecordSet, bounds: PhysicalBounds) -> tuple[RawRecordSet, dict]:
    """Clamp to physical bounds, then fill short interior gaps.

    Idempotent and total; the log counts clamps and fills per column.
    """
    for name in records.data:
        if name in ("zenith", "azimuth"):
            continue
        if name not in bounds.limits:
            raise MissingColumn(f"bounds missing for column {name!r}")
    log: dict[str, dict[str, int]] = {}
    data: dict[str, np.ndarray] = {}
    for name, values in records.data.items():
        v = values.copy()
        entry = {"clamped_low": 0, "clamped_high": 0, "filled": 0, "unfilled": 0}
        if name in bounds.limits:
            lo, hi = bounds.limits[name]
            low_mask = v < lo
            high_mask = v > hi
            entry["clamped_low"] = int(np.count_nonzero(low_mask))
            entry["clamped_high"] = int(np.count_nonzero(high_mask))
            v[low_mask] = lo
            v[high_mask] = hi
        v, entry["filled"], entry["unfilled"] = _fill_short_gaps(v, MAX_FILL_RUN)
        data[name] = v
        log[name] = entry
    return RawRecordSet(records.plant_id, records.timestamps, data), log


def resample_hourly(series: TimeSeries) -> TimeSeries:
    """Average within-hour samples; hours over half missing become missing.

    Mean power in kW equals energy in kWh over the hour, so magnitudes
    stay comparable across resolutions.
    """
    res_s = int(series.resolution.total_seconds())
    if 3600 % res_s != 0:
        raise MisalignedStart(f"resolution {res_s}s does not divide one hour")
    if (series.start.minute * 60 + series.start.second) % 3600 != 0:
        raise MisalignedStart("series must start on an hour boundary")
    per_hour = 3600 // res_s
    if per_hour == 1:
        return series
    n_hours = int(np.ceil(len(series) / per_hour))
    padded = np.full(n_hours * per_hour, np.nan)
    padded[: len(series)] = series.values
    grid = padded.reshape(n_hours, per_hour)
    present = ~np.isnan(grid)
    n_present = present.sum(axis=1)
    sums = np.where(present, grid, 0.0).sum(axis=1)
    means = np.where(n_present > 0, sums / np.maximum(n_present, 1), np.nan)
    # ">50% missing" rule: for 12 samples, 7+ missing means a missing hour
    means[n_present * 2 < per_hour] = np.nan
    return TimeSeries(series.start, timedelta(hours=1), means, series.unit)


def flag_inconsistent(
    power: np.ndarray,
    ghi: np.ndarray,
    local_hours: np.ndarray,
    weather_codes: np.ndarray,
    array_rating: float,
    history: int = 3,
) -> tuple[np.ndarray, dict]:
    """Deterministic power/irradiance consistency screen.

    Flags hours where power exceeds 5% of rating while GHI is below
    5 W/m2, or (midday 10:00-14:00) where GHI exceeds 200 W/m2 while power
    stays under 5% of rating. Flagged hours are replaced by the mean of up
    to ``history`` most recent same-hour, same-weather values; hours with
    no usable history stay unreplaced but are counted.
    """
    power = np.asarray(power, dtype=np.float64)
    out = power.copy()
    p_thresh = 0.05 * array_rating
    dark = ghi < 5.0
    midday = (local_hours >= 10) & (local_hours < 14)
    bad = ((power > p_thresh) & dark) | (midday & (ghi > 200.0) & (power <= p_thresh) & ~np.isnan(power))
    replaced = unreplaced = 0
    for i in np.nonzero(bad)[0]:
        donors = []
        j = i - 24
        while j >= 0 and len(donors) < history:
            if (not bad[j] and not np.isnan(power[j])
                    and weather_codes[j] == weather_codes[i]):
                donors.append(out[j])
            j -= 24
        if donors:
            out[i] = float(np.mean(donors))
            replaced += 1
        else:
            unreplaced += 1
    return out, {"flagged": int(np.count_nonzero(bad)), "replaced": replaced,
                 "unreplaced": unreplaced}


def write_cleaning_log(log: dict, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(log, fh, indent=2)
