"""Engineered features: clearness index, weather classes, calendar
encodings, lags, min-max normalization and the tagged frame assembly.

The daily clearness index is the ratio of summed diffuse to summed global
irradiance; its value places each day in one of three weather classes.
Class boundaries are half-open upward so every index maps to exactly one
class.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from pvday.core import (
    STATIC_CAT,
    STATIC_REAL,
    TV_KNOWN_CAT,
    TV_KNOWN_REAL,
    TV_UNKNOWN_CAT,
    TV_UNKNOWN_REAL,
    Column,
    FeatureFrame,
    StaticField,
    TimeSeries,
)
from pvday.errors import (
    DegenerateColumn,
    Misaligned,
    OutOfRange,
    UnknownCategory,
    ZeroIrradiance,
)
from pvday.ingest import UNITS, PlantSpec

WEATHER_VOCAB = ["sunny", "partially_cloudy", "overcast_rainy"]
SUNNY, PARTIALLY_CLOUDY, OVERCAST_RAINY = 0, 1, 2

# southern-hemisphere seasons by calendar month
SEASON_VOCAB = ["summer", "autumn", "winter", "spring"]
_MONTH_TO_SEASON = {12: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1,
                    6: 2, 7: 2, 8: 2, 9: 3, 10: 3, 11: 3}

AVAILABLE = "available"
UNAVAILABLE = "unavailable"

MET_COLUMNS = ("ghi", "dhi", "temperature", "rainfall", "humidity")
ANGLE_COLUMNS = ("zenith", "azimuth")


@dataclass(frozen=True)
class DailyIrradiance:
    """Hourly GHI/DHI of one calendar day."""

    date: date
    ghi_hours: np.ndarray
    dhi_hours: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.ghi_hours, dtype=np.float64)
        d = np.asarray(self.dhi_hours, dtype=np.float64)
        if g.shape != d.shape:
            raise ValueError("ghi and dhi must cover the same hours")
        if np.nanmin(g, initial=0.0) < 0 or np.nanmin(d, initial=0.0) < 0:
            raise ValueError("irradiance must be non-negative")
        object.__setattr__(self, "ghi_hours", g)
        object.__setattr__(self, "dhi_hours", d)


def clearness_index(day: DailyIrradiance) -> float:
    """Daily diffuse fraction sum(DHI)/sum(GHI), clipped to [0, 1].

    Low on clear days, high under overcast skies. Days without measurable
    global irradiance raise ZeroIrradiance; callers classify those as
    overcast/rainy.
    """
    total_ghi = float(np.nansum(day.ghi_hours))
    if total_ghi <= 0.0:
        raise ZeroIrradiance(f"no global irradiance on {day.date}")
    k = float(np.nansum(day.dhi_hours)) / total_ghi
    return min(max(k, 0.0), 1.0)


def classify_weather(k_d: float) -> int:
    """Weather class from the clearness index.

    sunny for k <= 0.15, partially cloudy for 0.15 < k <= 0.45, overcast
    or rainy above; boundaries belong to the class on their left.
    """
    if not 0.0 <= k_d <= 1.0:
        raise OutOfRange(f"clearness index {k_d} outside [0, 1]")
    if k_d <= 0.15:
        return SUNNY
    if k_d <= 0.45:
        return PARTIALLY_CLOUDY
    return OVERCAST_RAINY


def daily_weather_codes(ghi: np.ndarray, dhi: np.ndarray, local_days: np.ndarray
                        ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-day weather classes broadcast to hours.

    Returns (hourly codes, unique days, per-day codes). Days without
    measurable global irradiance are overcast/rainy.
    """
    days, inverse = np.unique(local_days, return_inverse=True)
    day_codes = np.empty(days.size, dtype=np.int64)
    for i in range(days.size):
        mask = inverse == i
        total_g = float(np.nansum(ghi[mask]))
        if total_g <= 0.0:
            day_codes[i] = OVERCAST_RAINY
            continue
        k = float(np.nansum(dhi[mask])) / total_g
        day_codes[i] = classify_weather(min(max(k, 0.0), 1.0))
    return day_codes[inverse], days, day_codes


def month_cyclic(timestamp: datetime, utc_offset_minutes: int = 0) -> tuple[float, float]:
    """Sine/cosine encoding of the local-time month."""
    local = timestamp + timedelta(minutes=utc_offset_minutes)
    angle = 2.0 * math.pi * local.month / 12.0
    return math.sin(angle), math.cos(angle)


def _cyclic_from_months(months: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    angle = 2.0 * np.pi * months / 12.0
    return np.sin(angle), np.cos(angle)


def season_codes(months: np.ndarray) -> np.ndarray:
    return np.array([_MONTH_TO_SEASON[int(m)] for m in months], dtype=np.int64)


def make_lags(values: np.ndarray, lag_hours: int = 24) -> np.ndarray:
    """Shift the series forward by lag_hours; the warm-up is missing.

    Lagged observations are known at prediction time, hence the lag column
    is tagged time-varying known.
    """
    if lag_hours < 1:
        raise ValueError("lag_hours must be >= 1")
    v = np.asarray(values, dtype=np.float64)
    out = np.full(v.size, np.nan)
    if lag_hours < v.size:
        out[lag_hours:] = v[:-lag_hours]
    return out


def one_hot(codes: np.ndarray, vocab: list[str]) -> np.ndarray:
    """Indicator matrix (n, |vocab|) with exactly one 1 per row."""
    codes = np.asarray(codes, dtype=np.int64)
    n_vocab = len(vocab)
    if codes.size and (codes.min() < 0 or codes.max() >= n_vocab):
        bad = codes[(codes < 0) | (codes >= n_vocab)][0]
        raise UnknownCategory(f"code {bad} outside vocabulary of size {n_vocab}")
    out = np.zeros((codes.size, n_vocab))
    out[np.arange(codes.size), codes] = 1.0
    return out


@dataclass(frozen=True)
class NormalizationParams:
    """Per-column min-max ranges fitted on training rows only.

    apply maps x -> (x - min)/(max - min) without clipping, so test values
    may land outside [0, 1]; invert is exact on finite values. Constant
    columns are flagged and mapped to 0.
    """

    ranges: dict[str, tuple[float, float]]
    constant_columns: frozenset[str] = frozenset()

    def transform(self, name: str, values: np.ndarray) -> np.ndarray:
        lo, hi = self.ranges[name]
        if name in self.constant_columns:
            return np.zeros_like(np.asarray(values, dtype=np.float64))
        return (np.asarray(values, dtype=np.float64) - lo) / (hi - lo)

    def invert(self, name: str, values: np.ndarray) -> np.ndarray:
        lo, hi = self.ranges[name]
        if name in self.constant_columns:
            return np.full_like(np.asarray(values, dtype=np.float64), lo)
        return np.asarray(values, dtype=np.float64) * (hi - lo) + lo

    def as_dict(self) -> dict:
        return {"ranges": {k: list(v) for k, v in self.ranges.items()},
                "constant_columns": sorted(self.constant_columns)}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationParams":
        return cls({k: (float(v[0]), float(v[1])) for k, v in d["ranges"].items()},
                   frozenset(d["constant_columns"]))


def fit_normalizer(train: FeatureFrame, columns: list[str] | None = None,
                   on_constant: str = "flag") -> NormalizationParams:
    """Fit min-max ranges over the training frame's real columns.

    on_constant: 'flag' marks constant columns (transform -> 0), 'raise'
    rejects them with DegenerateColumn.
    """
    if columns is None:
        columns = [n for n, c in train.columns.items() if c.tag.kind == "real"]
    ranges: dict[str, tuple[float, float]] = {}
    constants: set[str] = set()
    for name in columns:
        v = train.values(name)
        finite = v[np.isfinite(v)]
        if finite.size == 0:
            raise DegenerateColumn(f"column {name!r} has no finite training values")
        lo, hi = float(finite.min()), float(finite.max())
        if lo == hi:
            if on_constant == "raise":
                raise DegenerateColumn(f"column {name!r} is constant on the training rows")
            constants.add(name)
        ranges[name] = (lo, hi)
    return NormalizationParams(ranges, frozenset(constants))


@dataclass(frozen=True)
class FeatureRecipe:
    """Declarative description of the feature build, persisted as JSON."""

    lags: tuple[int, ...] = (24,)
    meteorology_mode: str = UNAVAILABLE
    include_angles: bool = True

    def __post_init__(self):
        if self.meteorology_mode not in (AVAILABLE, UNAVAILABLE):
            raise ValueError(f"bad meteorology mode: {self.meteorology_mode!r}")

    def to_json(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump({"lags": list(self.lags), "meteorology_mode": self.meteorology_mode,
                       "include_angles": self.include_angles}, fh, indent=2)

    @classmethod
    def from_json(cls, path: str | Path) -> "FeatureRecipe":
        with open(path) as fh:
            d = json.load(fh)
        return cls(tuple(d["lags"]), d["meteorology_mode"], d.get("include_angles", True))


def build_frame(
    plant: PlantSpec,
    power: TimeSeries,
    met: dict[str, np.ndarray],
    angles: dict[str, np.ndarray] | None = None,
    mode: str = UNAVAILABLE,
    lags: tuple[int, ...] = (24,),
    utc_offset_minutes: int = 0,
) -> FeatureFrame:
    """Assemble the tagged feature frame for one plant.

    Meteorology columns and the derived weather class are tagged known
    when the mode says future weather is obtainable, unknown otherwise;
    solar angles and calendar features are always known; plant properties
    are static.
    """
    n = len(power)
    index = power.timestamps()
    met_tag = TV_KNOWN_REAL if mode == AVAILABLE else TV_UNKNOWN_REAL
    weather_tag = TV_KNOWN_CAT if mode == AVAILABLE else TV_UNKNOWN_CAT

    for name, v in {**met, **(angles or {})}.items():
        if np.asarray(v).size != n:
            raise Misaligned(f"column {name!r} length != power length {n}")
    for name in ("ghi", "dhi"):
        if name not in met:
            raise Misaligned(f"meteorology must include {name!r}")

    columns: dict[str, Column] = {"power": Column(TV_UNKNOWN_REAL, power.values, power.unit)}
    vocabs: dict[str, list[str]] = {}
    for lag in lags:
        columns[f"power_lag_{lag}"] = Column(TV_KNOWN_REAL, make_lags(power.values, lag),
                                             power.unit)
    local = index + np.timedelta64(utc_offset_minutes * 60, "s")
    months = (local.astype("datetime64[M]") - local.astype("datetime64[Y]")).astype(int) + 1
    sin_m, cos_m = _cyclic_from_months(months)
    columns["sin_month"] = Column(TV_KNOWN_REAL, sin_m)
    columns["cos_month"] = Column(TV_KNOWN_REAL, cos_m)
    columns["season"] = Column(TV_KNOWN_CAT, season_codes(months))
    vocabs["season"] = list(SEASON_VOCAB)

    for name in MET_COLUMNS:
        if name in met:
            columns[name] = Column(met_tag, np.asarray(met[name], dtype=np.float64),
                                   UNITS.get(name, ""))
    hourly_weather, _, _ = daily_weather_codes(
        np.asarray(met["ghi"], dtype=np.float64),
        np.asarray(met["dhi"], dtype=np.float64),
        local.astype("datetime64[D]"),
    )
    columns["weather"] = Column(weather_tag, hourly_weather)
    vocabs["weather"] = list(WEATHER_VOCAB)

    if angles:
        for name in ANGLE_COLUMNS:
            if name in angles:
                columns[name] = Column(TV_KNOWN_REAL, np.asarray(angles[name], dtype=np.float64),
                                       UNITS.get(name, ""))

    manufacturer_vocab = [plant.manufacturer]
    technology_vocab = [plant.pv_technology]
    structure_vocab = [plant.array_structure]
    statics = {
        "manufacturer": StaticField(STATIC_CAT, 0),
        "pv_technology": StaticField(STATIC_CAT, 0),
        "array_structure": StaticField(STATIC_CAT, 0),
        "array_rating": StaticField(STATIC_REAL, plant.array_rating),
        "install_date": StaticField(STATIC_REAL, float(plant.install_date)),
    }
    vocabs["manufacturer"] = manufacturer_vocab
    vocabs["pv_technology"] = technology_vocab
    vocabs["array_structure"] = structure_vocab

    return FeatureFrame(index, columns, statics, vocabs, power.resolution,
                        utc_offset_minutes)
