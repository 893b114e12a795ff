"""Normalized forecast metrics and the case-study scoring harness.

Both metrics normalize by the maximum true power over the evaluation
window and are reported in percent, so scores are comparable across
plants and studies regardless of rating. Per-weather scoring keeps the
global window maximum fixed across classes so class scores stay on one
scale.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from pvday.errors import IncompleteGrid, Misaligned, UnlabeledDay, ZeroYMax

WEATHER_NAMES = ("sunny", "partially_cloudy", "overcast_rainy")
OVERALL = "overall"


@dataclass(frozen=True, eq=False)
class EvaluationInput:
    """Aligned truth/forecast pair plus the normalization maximum."""

    y: np.ndarray
    yhat: np.ndarray
    y_max: float
    plant_id: str = ""

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        yhat = np.asarray(self.yhat, dtype=np.float64)
        if y.shape != yhat.shape or y.ndim != 1:
            raise Misaligned(f"y {y.shape} and yhat {yhat.shape} must be equal-length 1-d")
        if not self.y_max > 0:
            raise ZeroYMax("y_max must be positive")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "yhat", yhat)

    @classmethod
    def from_series(cls, y: np.ndarray, yhat: np.ndarray, plant_id: str = "") -> "EvaluationInput":
        y = np.asarray(y, dtype=np.float64)
        y_max = float(np.nanmax(y)) if y.size else 0.0
        return cls(y, np.asarray(yhat, dtype=np.float64), y_max, plant_id)

    def subset(self, mask: np.ndarray) -> "EvaluationInput":
        return EvaluationInput(self.y[mask], self.yhat[mask], self.y_max, self.plant_id)


def nmae(inp: EvaluationInput) -> float:
    """Mean absolute error over the window, percent of the true maximum."""
    t = inp.y.size
    return 100.0 * float(np.sum(np.abs(inp.y - inp.yhat))) / (t * inp.y_max)


def nrmse(inp: EvaluationInput) -> float:
    """Root mean square error over the window, percent of the true maximum."""
    t = inp.y.size
    return 100.0 * float(np.sqrt(np.sum((inp.y - inp.yhat) ** 2) / (t * inp.y_max ** 2)))


def evaluate_by_weather(inp: EvaluationInput, hourly_labels: np.ndarray) -> dict[str, dict]:
    """Metrics per weather class over the class's hours.

    The normalization maximum stays the global window maximum so class
    scores are mutually comparable. Classes with no hours are absent from
    the result, not zero.
    """
    labels = np.asarray(hourly_labels)
    if labels.shape != inp.y.shape:
        raise Misaligned("labels must align with the evaluation series")
    if (labels < 0).any():
        raise UnlabeledDay("every evaluated hour needs a weather label")
    out: dict[str, dict] = {}
    for code, name in enumerate(WEATHER_NAMES):
        mask = labels == code
        if not mask.any():
            continue
        sub = inp.subset(mask)
        out[name] = {"nmae": nmae(sub), "nrmse": nrmse(sub),
                     "share": 100.0 * mask.mean()}
    return out


def site_aggregate(
    forecasts: dict[str, np.ndarray],
    truths: dict[str, np.ndarray],
    mode: str,
) -> EvaluationInput:
    """Combine per-plant series into one site-level evaluation input.

    'indiv' sums the per-plant forecasts and truths before scoring; 'sum'
    passes through a single pre-summed site series. Both normalize by the
    site-level maximum.
    """
    if set(forecasts) != set(truths):
        raise Misaligned("forecasts and truths must cover the same plants")
    lengths = {np.asarray(v).size for v in forecasts.values()}
    lengths |= {np.asarray(v).size for v in truths.values()}
    if len(lengths) != 1:
        raise Misaligned("plants must be aligned on timestamps")
    if mode == "indiv":
        yhat = np.sum([np.asarray(v, dtype=np.float64) for v in forecasts.values()], axis=0)
        y = np.sum([np.asarray(v, dtype=np.float64) for v in truths.values()], axis=0)
        return EvaluationInput.from_series(y, yhat, "Site-Indiv")
    if mode == "sum":
        if len(forecasts) != 1:
            raise Misaligned("'sum' mode expects the single pre-summed site series")
        (yhat,) = forecasts.values()
        (y,) = truths.values()
        return EvaluationInput.from_series(np.asarray(y, float), np.asarray(yhat, float),
                                           "Site-Sum")
    raise ValueError(f"unknown aggregation mode {mode!r}")


@dataclass
class ScoreRow:
    plant: str
    method: str
    mode: str
    weather: str
    metric: str
    value: float
    is_best: bool = False


@dataclass
class EvaluationReport:
    """Long-format score table with per-row best-method flags."""

    rows: list[ScoreRow] = field(default_factory=list)
    weather_shares: dict[str, dict[str, float]] = field(default_factory=dict)

    def mark_best(self) -> None:
        groups: dict[tuple, list[ScoreRow]] = {}
        for r in self.rows:
            groups.setdefault((r.plant, r.mode, r.weather, r.metric), []).append(r)
        for rows in groups.values():
            lo = min(r.value for r in rows)
            for r in rows:
                r.is_best = r.value == lo

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["plant", "method", "mode", "weather", "metric", "value", "is_best"])
            for r in self.rows:
                w.writerow([r.plant, r.method, r.mode, r.weather, r.metric,
                            f"{r.value:.2f}", int(r.is_best)])

    def to_json(self, path: str | Path) -> None:
        nested: dict = {"weather_shares": self.weather_shares, "scores": {}}
        for r in self.rows:
            nested["scores"].setdefault(r.plant, {}).setdefault(r.method, {}) \
                .setdefault(r.mode, {}).setdefault(r.weather, {})[r.metric] = round(r.value, 2)
        with open(path, "w") as fh:
            json.dump(nested, fh, indent=2)

    def value(self, plant: str, method: str, mode: str, weather: str, metric: str) -> float:
        for r in self.rows:
            if (r.plant, r.method, r.mode, r.weather, r.metric) == \
                    (plant, method, mode, weather, metric):
                return r.value
        raise KeyError((plant, method, mode, weather, metric))


def compare_methods(
    cells: dict[tuple[str, str, str], EvaluationInput],
    plants: list[str],
    methods: list[str],
    modes: list[str],
    hourly_labels: dict[str, np.ndarray] | None = None,
) -> EvaluationReport:
    """Cross-tabulate metric scores over the full (plant, method, mode) grid.

    Every expected cell must be present; missing ones are listed in the
    IncompleteGrid error. Per-weather rows are added for entities with
    labels (keyed by plant/site name).
    """
    missing = [(p, m, a) for p in plants for m in methods for a in modes
               if (p, m, a) not in cells]
    if missing:
        raise IncompleteGrid(f"missing grid cells: {missing}")
    report = EvaluationReport()
    for p in plants:
        for m in methods:
            for a in modes:
                inp = cells[(p, m, a)]
                report.rows.append(ScoreRow(p, m, a, OVERALL, "nmae", nmae(inp)))
                report.rows.append(ScoreRow(p, m, a, OVERALL, "nrmse", nrmse(inp)))
                if hourly_labels is None or p not in hourly_labels:
                    continue
                for weather, scores in evaluate_by_weather(inp, hourly_labels[p]).items():
                    report.rows.append(ScoreRow(p, m, a, weather, "nmae", scores["nmae"]))
                    report.rows.append(ScoreRow(p, m, a, weather, "nrmse", scores["nrmse"]))
                    report.weather_shares.setdefault(p, {})[weather] = scores["share"]
    report.mark_best()
    return report
