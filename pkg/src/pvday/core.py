"""Core time-series and tagged-feature data model.

All containers are immutable after construction and safe to share across
threads; operations on them are pure functions. Missing values are explicit
NaN entries (real columns) or -1 codes (categorical columns), never omitted
rows, so index arithmetic stays trivial for lag and decomposition code.

Timestamps are stored as naive UTC; the site's fixed local offset is carried
as frame metadata and used wherever local calendar structure (month, day
blocks, seasons) matters.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from pvday.errors import (
    DuplicateColumn,
    EmptyIntersection,
    SpanTooShort,
)

TIME_VARYING = "time_varying"
STATIC = "static"
KNOWN = "known"
UNKNOWN = "unknown"
REAL = "real"
CATEGORICAL = "categorical"

MISSING_CODE = -1  # sentinel for missing categorical entries


@dataclass(frozen=True)
class FeatureTag:
    """Three-axis feature tag: temporal x knowledge x kind.

    ``knowledge`` says whether the column is observable over a forecast
    horizon at prediction time. Static fields are always known.
    """

    temporal: str
    knowledge: str
    kind: str

    def __post_init__(self):
        if self.temporal not in (TIME_VARYING, STATIC):
            raise ValueError(f"bad temporal axis: {self.temporal!r}")
        if self.knowledge not in (KNOWN, UNKNOWN):
            raise ValueError(f"bad knowledge axis: {self.knowledge!r}")
        if self.kind not in (REAL, CATEGORICAL):
            raise ValueError(f"bad kind axis: {self.kind!r}")
        if self.temporal == STATIC and self.knowledge == UNKNOWN:
            raise ValueError("(static, unknown) tags are rejected")

    def as_dict(self) -> dict:
        return {"temporal": self.temporal, "knowledge": self.knowledge, "kind": self.kind}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureTag":
        return cls(d["temporal"], d["knowledge"], d["kind"])


TV_KNOWN_REAL = FeatureTag(TIME_VARYING, KNOWN, REAL)
TV_UNKNOWN_REAL = FeatureTag(TIME_VARYING, UNKNOWN, REAL)
TV_KNOWN_CAT = FeatureTag(TIME_VARYING, KNOWN, CATEGORICAL)
TV_UNKNOWN_CAT = FeatureTag(TIME_VARYING, UNKNOWN, CATEGORICAL)
STATIC_REAL = FeatureTag(STATIC, KNOWN, REAL)
STATIC_CAT = FeatureTag(STATIC, KNOWN, CATEGORICAL)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled real sequence with declared resolution and unit.

    Values are equally spaced by ``resolution`` starting at ``start``;
    missing values are NaN entries, never omitted indices.
    """

    start: datetime
    resolution: timedelta
    values: np.ndarray
    unit: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size < 1:
            raise ValueError("TimeSeries requires a 1-d sequence of length >= 1")
        if self.resolution <= timedelta(0):
            raise ValueError("resolution must be positive")
        object.__setattr__(self, "values", _freeze(vals))

    def __len__(self) -> int:
        return self.values.size

    def timestamps(self) -> np.ndarray:
        """Index as datetime64[s], derived from start and resolution."""
        start = np.datetime64(self.start.replace(tzinfo=None), "s")
        step = np.timedelta64(int(self.resolution.total_seconds()), "s")
        return start + step * np.arange(self.values.size)

    def with_values(self, values: np.ndarray) -> "TimeSeries":
        return TimeSeries(self.start, self.resolution, values, self.unit)


@dataclass(frozen=True, eq=False)
class Column:
    tag: FeatureTag
    values: np.ndarray
    unit: str = ""

    def __post_init__(self):
        dtype = np.float64 if self.tag.kind == REAL else np.int64
        object.__setattr__(self, "values", _freeze(np.asarray(self.values, dtype=dtype)))


@dataclass(frozen=True)
class StaticField:
    tag: FeatureTag
    value: float | int

    def __post_init__(self):
        if self.tag.temporal != STATIC:
            raise ValueError("StaticField requires a static tag")


@dataclass(frozen=True, eq=False)
class FeatureFrame:
    """Aligned tagged columns over a shared timestamp axis.

    The index is strictly increasing but need not be gap-free (split
    outputs are day subsets). ``resolution`` declares the nominal sampling
    step; ``utc_offset_minutes`` the site's fixed local offset.
    """

    index: np.ndarray  # datetime64[s], strictly increasing
    columns: dict[str, Column]
    static_fields: dict[str, StaticField] = field(default_factory=dict)
    vocabs: dict[str, list[str]] = field(default_factory=dict)
    resolution: timedelta = timedelta(hours=1)
    utc_offset_minutes: int = 0

    def __post_init__(self):
        idx = np.asarray(self.index, dtype="datetime64[s]")
        if idx.ndim != 1:
            raise ValueError("index must be 1-d")
        if idx.size > 1 and not np.all(idx[1:] > idx[:-1]):
            raise ValueError("index must be strictly increasing")
        object.__setattr__(self, "index", _freeze(idx))
        for name, col in self.columns.items():
            if col.tag.temporal != TIME_VARYING:
                raise ValueError(f"column {name!r} must carry a time-varying tag")
            if col.values.size != idx.size:
                raise ValueError(f"column {name!r} length {col.values.size} != index {idx.size}")
            if col.tag.kind == CATEGORICAL:
                if name not in self.vocabs:
                    raise ValueError(f"categorical column {name!r} lacks a registered vocabulary")
                codes = col.values
                n = len(self.vocabs[name])
                bad = (codes != MISSING_CODE) & ((codes < 0) | (codes >= n))
                if bad.any():
                    raise ValueError(f"column {name!r} has out-of-vocabulary codes")
        for name, f in self.static_fields.items():
            if f.tag.kind == CATEGORICAL and name not in self.vocabs:
                raise ValueError(f"static categorical {name!r} lacks a registered vocabulary")

    def __len__(self) -> int:
        return self.index.size

    @property
    def column_names(self) -> list[str]:
        return list(self.columns)

    def values(self, name: str) -> np.ndarray:
        return self.columns[name].values

    def tag(self, name: str) -> FeatureTag:
        return self.columns[name].tag

    def local_index(self) -> np.ndarray:
        """Index shifted to site-local time (datetime64[s])."""
        return self.index + np.timedelta64(self.utc_offset_minutes * 60, "s")

    def local_days(self) -> np.ndarray:
        return self.local_index().astype("datetime64[D]")

    def local_months(self) -> np.ndarray:
        """Local calendar month 1..12 for every row."""
        loc = self.local_index()
        return (loc.astype("datetime64[M]") - loc.astype("datetime64[Y]")).astype(int) + 1

    def select_rows(self, mask: np.ndarray) -> "FeatureFrame":
        cols = {n: Column(c.tag, c.values[mask], c.unit) for n, c in self.columns.items()}
        return FeatureFrame(
            self.index[mask], cols, dict(self.static_fields), dict(self.vocabs),
            self.resolution, self.utc_offset_minutes,
        )

    def with_column(self, name: str, column: Column, vocab: list[str] | None = None) -> "FeatureFrame":
        if name in self.columns:
            raise DuplicateColumn(f"column {name!r} already present")
        cols = dict(self.columns)
        cols[name] = column
        vocabs = dict(self.vocabs)
        if vocab is not None:
            vocabs[name] = list(vocab)
        return FeatureFrame(self.index, cols, dict(self.static_fields), vocabs,
                            self.resolution, self.utc_offset_minutes)


@dataclass(frozen=True)
class SplitSpec:
    """Monthly-stratified day-block split around a held-out test period.

    Validation days are drawn at random from every local calendar month of
    the non-test span, in proportion 1:(train_ratio) of that month's days
    (+-1 day). Selection is by whole days so no day-ahead forecast window
    straddles train and validation.
    """

    train_ratio: float = 3.0
    test_start: datetime = datetime(2020, 1, 1)
    test_end: datetime = datetime(2021, 1, 1)  # exclusive
    rng_seed: int = 0

    def __post_init__(self):
        if self.train_ratio <= 0:
            raise ValueError("train_ratio must be positive")
        if self.test_end <= self.test_start:
            raise ValueError("test period must be a non-empty range")

    @classmethod
    def for_test_year(cls, year: int, train_ratio: float = 3.0, rng_seed: int = 0) -> "SplitSpec":
        return cls(train_ratio, datetime(year, 1, 1), datetime(year + 1, 1, 1), rng_seed)


def day_assignments(frame: FeatureFrame, spec: SplitSpec) -> dict[np.datetime64, str]:
    """Assign every local day of the frame to 'train' | 'val' | 'test'.

    Deterministic given spec.rng_seed. Shared by split() and the window
    builders so both see the same day blocks.
    """
    test_start = np.datetime64(spec.test_start, "s")
    test_end = np.datetime64(spec.test_end, "s")
    idx = frame.index
    if idx[0] > test_start - np.timedelta64(28 * 86400, "s"):
        raise SpanTooShort(
            "frame must span at least one stratification month before the test period"
        )
    days = frame.local_days()
    in_test = (idx >= test_start) & (idx < test_end)

    assignment: dict[np.datetime64, str] = {}
    # A day is a test day if any of its rows fall in the test period.
    for d in np.unique(days[in_test]):
        assignment[d] = "test"
    nontest_days = np.unique(days[~in_test])
    nontest_days = np.array([d for d in nontest_days if d not in assignment])

    rng = np.random.default_rng(spec.rng_seed)
    months = nontest_days.astype("datetime64[M]")
    for m in np.unique(months):
        month_days = nontest_days[months == m]
        n = month_days.size
        n_val = int(round(n / (1.0 + spec.train_ratio)))
        order = rng.permutation(n)
        val_days = set(month_days[order[:n_val]].tolist())
        for d in month_days:
            assignment[d] = "val" if d.item() in val_days else "train"
    return assignment


def split(frame: FeatureFrame, spec: SplitSpec) -> tuple[FeatureFrame, FeatureFrame, FeatureFrame]:
    """Partition rows into (train, val, test) by whole local days."""
    assignment = day_assignments(frame, spec)
    days = frame.local_days()
    labels = np.array([assignment[d] for d in days])
    return (
        frame.select_rows(labels == "train"),
        frame.select_rows(labels == "val"),
        frame.select_rows(labels == "test"),
    )


def concat_rows(frames: list[FeatureFrame]) -> FeatureFrame:
    """Row-union of frames with identical columns (e.g. undo a split).

    Indices must be disjoint; rows come back in timestamp order.
    """
    first = frames[0]
    names = first.column_names
    for f in frames[1:]:
        if f.column_names != names:
            raise DuplicateColumn("frames must carry identical columns to concatenate")
    index = np.concatenate([f.index for f in frames])
    order = np.argsort(index, kind="stable")
    index = index[order]
    if index.size > 1 and not np.all(index[1:] > index[:-1]):
        raise ValueError("frames overlap; rows must be disjoint")
    cols = {
        n: Column(first.columns[n].tag,
                  np.concatenate([f.values(n) for f in frames])[order],
                  first.columns[n].unit)
        for n in names
    }
    return FeatureFrame(index, cols, dict(first.static_fields), dict(first.vocabs),
                        first.resolution, first.utc_offset_minutes)


def align(frames: list[FeatureFrame]) -> FeatureFrame:
    """Merge frames on the intersection of their indices.

    Column and static-field name collisions are rejected; all frames must
    share the declared resolution.
    """
    if not frames:
        raise ValueError("align requires at least one frame")
    first = frames[0]
    for f in frames[1:]:
        if f.resolution != first.resolution:
            raise ValueError("frames must share resolution")
        if f.utc_offset_minutes != first.utc_offset_minutes:
            raise ValueError("frames must share utc offset")
    common = frames[0].index
    for f in frames[1:]:
        common = np.intersect1d(common, f.index)
    if common.size == 0:
        raise EmptyIntersection("frames have no overlapping timestamps")

    columns: dict[str, Column] = {}
    statics: dict[str, StaticField] = {}
    vocabs: dict[str, list[str]] = {}
    for f in frames:
        pos = np.searchsorted(f.index, common)
        for name, col in f.columns.items():
            if name in columns:
                raise DuplicateColumn(f"column {name!r} appears in more than one frame")
            columns[name] = Column(col.tag, col.values[pos], col.unit)
        for name, sf in f.static_fields.items():
            if name in statics:
                raise DuplicateColumn(f"static field {name!r} appears in more than one frame")
            statics[name] = sf
        for name, v in f.vocabs.items():
            if name in vocabs and vocabs[name] != v:
                raise DuplicateColumn(f"vocabulary for {name!r} conflicts between frames")
            vocabs[name] = v
    return FeatureFrame(common, columns, statics, vocabs, first.resolution,
                        first.utc_offset_minutes)


# ---------------------------------------------------------------------------
# persistence: directory with index.csv, columns.csv, meta.json
# ---------------------------------------------------------------------------

def _fmt_real(v: float) -> str:
    if math.isnan(v):
        return ""
    return repr(float(v))  # shortest round-trip representation


def save_frame(frame: FeatureFrame, directory: str | Path) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "index.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp"])
        for ts in frame.index:
            w.writerow([np.datetime_as_string(ts, unit="s")])
    names = frame.column_names
    with open(d / "columns.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        cols = [frame.columns[n] for n in names]
        for i in range(len(frame)):
            row = []
            for c in cols:
                if c.tag.kind == REAL:
                    row.append(_fmt_real(c.values[i]))
                else:
                    row.append(str(int(c.values[i])))
            w.writerow(row)
    meta = {
        "resolution_seconds": int(frame.resolution.total_seconds()),
        "utc_offset_minutes": frame.utc_offset_minutes,
        "columns": {
            n: {"tag": c.tag.as_dict(), "unit": c.unit} for n, c in frame.columns.items()
        },
        "static_fields": {
            n: {"tag": f.tag.as_dict(),
                "value": f.value if f.tag.kind == CATEGORICAL else float(f.value)}
            for n, f in frame.static_fields.items()
        },
        "vocabs": frame.vocabs,
    }
    with open(d / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)


def load_frame(directory: str | Path) -> FeatureFrame:
    d = Path(directory)
    with open(d / "meta.json") as fh:
        meta = json.load(fh)
    with open(d / "index.csv", newline="") as fh:
        r = csv.reader(fh)
        next(r)
        index = np.array([np.datetime64(row[0], "s") for row in r])
    with open(d / "columns.csv", newline="") as fh:
        r = csv.reader(fh)
        names = next(r)
        raw_cols: list[list[str]] = [[] for _ in names]
        for row in r:
            for j, cell in enumerate(row):
                raw_cols[j].append(cell)
    columns: dict[str, Column] = {}
    for name, raw in zip(names, raw_cols):
        cmeta = meta["columns"][name]
        tag = FeatureTag.from_dict(cmeta["tag"])
        if tag.kind == REAL:
            vals = np.array([float(c) if c else np.nan for c in raw])
        else:
            vals = np.array([int(c) for c in raw], dtype=np.int64)
        columns[name] = Column(tag, vals, cmeta.get("unit", ""))
    statics = {
        n: StaticField(FeatureTag.from_dict(s["tag"]),
                       int(s["value"]) if s["tag"]["kind"] == CATEGORICAL else float(s["value"]))
        for n, s in meta["static_fields"].items()
    }
    return FeatureFrame(
        index, columns, statics, {k: list(v) for k, v in meta["vocabs"].items()},
        timedelta(seconds=meta["resolution_seconds"]), meta["utc_offset_minutes"],
    )
