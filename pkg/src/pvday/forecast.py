"""Day-ahead quantile forecasting: task geometry, baselines, the trainable
quantile network, and the decompose-forecast-recompose strategy.

Supervised windows are built at day granularity: unknown features supply
the input-horizon history, known features span both horizons, static
fields join every window. A window belongs to the split of its target day.
Component models of a decomposition strategy share the same input features
and differ only in their targets; their forecasts are summed and the sum
is clipped to the plant's physical range.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from pvday import qnet
from pvday.core import (
    CATEGORICAL,
    KNOWN,
    REAL,
    FeatureFrame,
    TimeSeries,
    concat_rows,
)
from pvday.decomp import decompose
from pvday.errors import (
    MissingKnownFeatures,
    ModelFormatError,
    NoWindows,
    ShapeMismatch,
    TooShort,
)
from pvday.features import (
    AVAILABLE,
    UNAVAILABLE,
    NormalizationParams,
    fit_normalizer,
    one_hot,
)
from pvday.qnet import TrainConfig

DEFAULT_QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)


@dataclass(frozen=True)
class ForecastTask:
    """Geometry and feature availability of one forecasting problem."""

    input_horizon: int = 72
    forecast_horizon: int = 24
    quantiles: tuple[float, ...] = DEFAULT_QUANTILES
    meteorology_mode: str = UNAVAILABLE
    target: str = "power"

    def __post_init__(self):
        if self.input_horizon < self.forecast_horizon:
            raise ValueError("input_horizon must be >= forecast_horizon")
        q = self.quantiles
        if any(not 0.0 < v < 1.0 for v in q) or any(b <= a for a, b in zip(q, q[1:])):
            raise ValueError("quantiles must be strictly ascending inside (0, 1)")
        if 0.5 not in q:
            raise ValueError("the median quantile 0.5 is required")
        if self.meteorology_mode not in (AVAILABLE, UNAVAILABLE):
            raise ValueError(f"bad meteorology mode {self.meteorology_mode!r}")

    @property
    def median_index(self) -> int:
        return self.quantiles.index(0.5)

    def as_dict(self) -> dict:
        return {"input_horizon": self.input_horizon,
                "forecast_horizon": self.forecast_horizon,
                "quantiles": list(self.quantiles),
                "meteorology_mode": self.meteorology_mode,
                "target": self.target}

    @classmethod
    def from_dict(cls, d: dict) -> "ForecastTask":
        return cls(d["input_horizon"], d["forecast_horizon"], tuple(d["quantiles"]),
                   d["meteorology_mode"], d["target"])


@dataclass(frozen=True, eq=False)
class ForecastResult:
    """Per-quantile forecasts for one horizon; quantiles non-decreasing."""

    timestamps: np.ndarray
    quantiles: tuple[float, ...]
    values: np.ndarray  # (T, k)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape != (self.timestamps.size, len(self.quantiles)):
            raise ValueError("values must have shape (horizon, n_quantiles)")
        if np.any(np.diff(v, axis=1) < -1e-12):
            raise ValueError("quantile tracks must be non-decreasing")
        object.__setattr__(self, "values", v)

    @property
    def point(self) -> np.ndarray:
        """Median track, the point forecast."""
        return self.values[:, self.quantiles.index(0.5)]


def quantile_loss(y: np.ndarray, yhat: np.ndarray, quantiles) -> float:
    """Mean over points of the summed per-quantile pinball loss.

    y has shape (n,); yhat has shape (n, k) for the k quantiles.
    """
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    q = np.asarray(quantiles, dtype=np.float64)
    if y.ndim != 1 or yhat.shape != (y.size, q.size):
        raise ShapeMismatch(f"y {y.shape} vs yhat {yhat.shape} vs {q.size} quantiles")
    return qnet.pinball(y.reshape(-1, 1), yhat.reshape(-1, 1, q.size), q)


def seasonal_naive(history, period: int = 24, horizon: int = 24,
                   quantiles: tuple[float, ...] = DEFAULT_QUANTILES,
                   timestamps: np.ndarray | None = None,
                   clip_max: float | None = None) -> ForecastResult:
    """Repeat the last full period as a degenerate-band forecast."""
    values = history.values if isinstance(history, TimeSeries) else np.asarray(history, float)
    if values.size < period:
        raise TooShort(f"need at least {period} history samples")
    last = values[values.size - period:]
    point = np.array([last[i % period] for i in range(horizon)])
    point = np.clip(point, 0.0, clip_max) if clip_max is not None else np.maximum(point, 0.0)
    if timestamps is None:
        timestamps = np.arange(horizon)
    vals = np.repeat(point[:, None], len(quantiles), axis=1)
    return ForecastResult(np.asarray(timestamps), tuple(quantiles), vals)


# ---------------------------------------------------------------------------
# feature layout and supervised windows
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureSpec:
    """Ordered input layout of a trained model.

    Roles are frozen from the training frame's tags, so prediction uses
    the training-time knowledge assignment regardless of how the context
    frame tags its columns (future values of unknown columns are never
    read even when present).
    """

    unknown_real: tuple[str, ...]
    known_real: tuple[str, ...]
    unknown_cat: tuple[str, ...]
    known_cat: tuple[str, ...]
    static_real: tuple[str, ...]
    static_cat: tuple[str, ...]
    vocab_sizes: dict[str, int]

    @classmethod
    def from_frame(cls, frame: FeatureFrame) -> "FeatureSpec":
        unknown_real, known_real, unknown_cat, known_cat = [], [], [], []
        for name, col in frame.columns.items():
            if col.tag.kind == REAL:
                (known_real if col.tag.knowledge == KNOWN else unknown_real).append(name)
            else:
                (known_cat if col.tag.knowledge == KNOWN else unknown_cat).append(name)
        static_real = [n for n, f in frame.static_fields.items() if f.tag.kind == REAL]
        static_cat = [n for n, f in frame.static_fields.items() if f.tag.kind == CATEGORICAL]
        vocab_sizes = {n: len(frame.vocabs[n]) for n in (*unknown_cat, *known_cat, *static_cat)}
        return cls(tuple(unknown_real), tuple(known_real), tuple(unknown_cat),
                   tuple(known_cat), tuple(static_real), tuple(static_cat), vocab_sizes)

    def as_dict(self) -> dict:
        return {"unknown_real": list(self.unknown_real), "known_real": list(self.known_real),
                "unknown_cat": list(self.unknown_cat), "known_cat": list(self.known_cat),
                "static_real": list(self.static_real), "static_cat": list(self.static_cat),
                "vocab_sizes": self.vocab_sizes}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpec":
        return cls(tuple(d["unknown_real"]), tuple(d["known_real"]),
                   tuple(d["unknown_cat"]), tuple(d["known_cat"]),
                   tuple(d["static_real"]), tuple(d["static_cat"]),
                   {k: int(v) for k, v in d["vocab_sizes"].items()})


def recipe_hash(spec: FeatureSpec, task: ForecastTask) -> str:
    payload = json.dumps({"spec": spec.as_dict(), "task": task.as_dict()}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


_NAN_VECTOR = np.array([np.nan])


def _window_vector(frame: FeatureFrame, spec: FeatureSpec, norm: NormalizationParams,
                   hist: slice, fut: slice) -> np.ndarray:
    parts = []
    for name in spec.unknown_real:
        parts.append(norm.transform(name, frame.values(name)[hist]))
    for name in spec.unknown_cat:
        codes = frame.values(name)[hist]
        if (codes < 0).any():
            return _NAN_VECTOR  # missing category; window not constructible
        parts.append(one_hot(codes, [""] * spec.vocab_sizes[name]).ravel())
    for name in spec.known_real:
        both = np.concatenate((frame.values(name)[hist], frame.values(name)[fut]))
        parts.append(norm.transform(name, both))
    for name in spec.known_cat:
        codes = np.concatenate((frame.values(name)[hist], frame.values(name)[fut]))
        if (codes < 0).any():
            return _NAN_VECTOR
        parts.append(one_hot(codes, [""] * spec.vocab_sizes[name]).ravel())
    for name in spec.static_real:
        value = np.array([frame.static_fields[name].value], dtype=np.float64)
        parts.append(norm.transform(name, value) if name in norm.ranges else value)
    for name in spec.static_cat:
        parts.append(one_hot(np.array([frame.static_fields[name].value]),
                             [""] * spec.vocab_sizes[name]).ravel())
    return np.concatenate(parts)


def _day_start_rows(frame: FeatureFrame, task: ForecastTask) -> np.ndarray:
    """Rows opening a fully constructible window (local midnight anchors)."""
    local = frame.local_index()
    hours = (local - local.astype("datetime64[D]")).astype("timedelta64[h]").astype(int)
    starts = np.nonzero(hours == 0)[0]
    ok = (starts >= task.input_horizon) & (starts + task.forecast_horizon <= len(frame))
    return starts[ok]


def build_windows(
    frame: FeatureFrame,
    spec: FeatureSpec,
    norm: NormalizationParams,
    task: ForecastTask,
    target_values: np.ndarray,
    day_filter: set | None = None,
) -> tuple[np.ndarray, np.ndarray, list]:
    """Supervised (X, Y) windows anchored on local day starts.

    Windows containing missing values are dropped. Returns the window
    matrix, targets, and the local day of each window.
    """
    rows = _day_start_rows(frame, task)
    days = frame.local_days()
    step = np.timedelta64(int(frame.resolution.total_seconds()), "s")
    xs, ys, window_days = [], [], []
    for s in rows:
        day = days[s]
        if day_filter is not None and day.item() not in day_filter:
            continue
        hist = slice(s - task.input_horizon, s)
        fut = slice(s, s + task.forecast_horizon)
        # positional slices require a gap-free stretch of timestamps
        span = frame.index[s + task.forecast_horizon - 1] - frame.index[s - task.input_horizon]
        if span != step * (task.input_horizon + task.forecast_horizon - 1):
            continue
        y = target_values[fut]
        x = _window_vector(frame, spec, norm, hist, fut)
        if np.isnan(x).any() or np.isnan(y).any():
            continue
        xs.append(x)
        ys.append(y)
        window_days.append(day)
    if not xs:
        raise NoWindows("no constructible windows (too little history or all missing)")
    return np.asarray(xs), np.asarray(ys), window_days


# ---------------------------------------------------------------------------
# trainable model
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuantileModel:
    """A trained quantile network plus everything needed to replay it."""

    params: list
    feature_spec: FeatureSpec
    task: ForecastTask
    norm: NormalizationParams
    target_range: tuple[float, float]
    array_rating: float
    train_log: list = field(default_factory=list)

    @property
    def hash(self) -> str:
        return recipe_hash(self.feature_spec, self.task)

    def save(self, path: str | Path) -> None:
        meta = {
            "feature_spec": self.feature_spec.as_dict(),
            "task": self.task.as_dict(),
            "norm": self.norm.as_dict(),
            "target_range": list(self.target_range),
            "array_rating": self.array_rating,
            "train_log": self.train_log,
            "recipe_hash": self.hash,
            "n_layers": len(self.params),
        }
        arrays = {}
        for i, (w, b) in enumerate(self.params):
            arrays[f"w{i}"] = w
            arrays[f"b{i}"] = b
        np.savez_compressed(path, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
                            **arrays)

    @classmethod
    def load(cls, path: str | Path) -> "QuantileModel":
        with np.load(path) as data:
            meta = json.loads(bytes(data["meta"].tobytes()).decode())
            params = [(data[f"w{i}"], data[f"b{i}"]) for i in range(meta["n_layers"])]
        spec = FeatureSpec.from_dict(meta["feature_spec"])
        task = ForecastTask.from_dict(meta["task"])
        if recipe_hash(spec, task) != meta["recipe_hash"]:
            raise ModelFormatError("feature recipe hash mismatch; refusing to load")
        return cls(params, spec, task, NormalizationParams.from_dict(meta["norm"]),
                   tuple(meta["target_range"]), meta["array_rating"], meta["train_log"])


def _fit_target_range(values: np.ndarray) -> tuple[float, float]:
    finite = values[np.isfinite(values)]
    lo, hi = float(finite.min()), float(finite.max())
    if lo == hi:
        hi = lo + 1.0
    return lo, hi


def _train_model(
    merged: FeatureFrame,
    train_days: set,
    val_days: set,
    task: ForecastTask,
    cfg: TrainConfig,
    target_values: np.ndarray,
) -> QuantileModel:
    spec = FeatureSpec.from_frame(merged)
    if task.meteorology_mode == AVAILABLE and "ghi" in spec.unknown_real:
        raise MissingKnownFeatures(
            "task expects known meteorology but the frame tags it unknown; "
            "rebuild features in available mode"
        )
    train_mask = np.isin(merged.local_days(),
                         np.array(sorted(train_days), dtype="datetime64[D]"))
    norm = fit_normalizer(merged.select_rows(train_mask))
    # static reals ride through the same transform; a single plant's
    # statics are constants and map to zero rather than raw magnitudes
    ranges = dict(norm.ranges)
    constants = set(norm.constant_columns)
    for name in spec.static_real:
        v = float(merged.static_fields[name].value)
        ranges[name] = (v, v)
        constants.add(name)
    norm = NormalizationParams(ranges, frozenset(constants))
    lo, hi = _fit_target_range(target_values[train_mask])
    scaled_target = (target_values - lo) / (hi - lo)

    x_tr, y_tr, _ = build_windows(merged, spec, norm, task, scaled_target, train_days)
    x_va, y_va, _ = build_windows(merged, spec, norm, task, scaled_target, val_days)
    quantiles = np.asarray(task.quantiles)
    params, log = qnet.train(x_tr, y_tr, x_va, y_va, quantiles, cfg)
    rating = float(merged.static_fields["array_rating"].value) \
        if "array_rating" in merged.static_fields else np.inf
    return QuantileModel(params, spec, task, norm, (lo, hi), rating, log)


def train_qnet(train: FeatureFrame, val: FeatureFrame, task: ForecastTask,
               cfg: TrainConfig) -> QuantileModel:
    """Train the quantile network on split frames.

    The frames are re-united so windows can draw history across the day
    blocks; each window belongs to the split of its target day.
    """
    merged = concat_rows([train, val])
    train_days = {d.item() for d in np.unique(train.local_days())}
    val_days = {d.item() for d in np.unique(val.local_days())}
    target = merged.values(task.target)
    return _train_model(merged, train_days, val_days, task, cfg, target)


def predict_array(model: QuantileModel, context: FeatureFrame, start) -> np.ndarray:
    """Raw (T, k) forecast in target units, quantiles sorted, unclipped."""
    task = model.task
    start64 = np.datetime64(start, "s")
    i0 = int(np.searchsorted(context.index, start64))
    if i0 >= len(context) or context.index[i0] != start64 or i0 < task.input_horizon:
        raise MissingKnownFeatures(f"context lacks {task.input_horizon}h of history before {start}")
    if i0 + task.forecast_horizon > len(context):
        raise MissingKnownFeatures("context lacks known features over the forecast horizon")
    step = np.timedelta64(int(context.resolution.total_seconds()), "s")
    span = context.index[i0 + task.forecast_horizon - 1] - context.index[i0 - task.input_horizon]
    if span != step * (task.input_horizon + task.forecast_horizon - 1):
        raise MissingKnownFeatures("context rows around the forecast start are not contiguous")
    hist = slice(i0 - task.input_horizon, i0)
    fut = slice(i0, i0 + task.forecast_horizon)
    for name in (*model.feature_spec.known_real, *model.feature_spec.known_cat):
        fvals = context.values(name)[fut]
        if np.isnan(np.asarray(fvals, dtype=np.float64)).any():
            raise MissingKnownFeatures(f"known feature {name!r} missing over the horizon")
    x = _window_vector(context, model.feature_spec, model.norm, hist, fut)
    if np.isnan(x).any():
        raise MissingKnownFeatures("window contains missing history values")
    k = len(task.quantiles)
    out = qnet.predict_raw(model.params, x[None, :], task.forecast_horizon, k)[0]
    lo, hi = model.target_range
    return out * (hi - lo) + lo


def predict(model: QuantileModel, context: FeatureFrame, start,
            task: ForecastTask | None = None) -> ForecastResult:
    """One-pass multi-horizon forecast with monotone quantiles and clipping."""
    if task is not None and task != model.task:
        raise ValueError("task does not match the trained model")
    vals = predict_array(model, context, start)
    vals = np.clip(vals, 0.0, model.array_rating)
    start64 = np.datetime64(start, "s")
    step = np.timedelta64(int(context.resolution.total_seconds()), "s")
    ts = start64 + step * np.arange(model.task.forecast_horizon)
    return ForecastResult(ts, model.task.quantiles, np.sort(vals, axis=1))


# ---------------------------------------------------------------------------
# decompose-forecast-recompose
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StrategyBundle:
    """Per-component model ensembles sharing one set of input features.

    Ensemble members differ only in their training seed; their quantile
    tracks are averaged per quantile at prediction time, which damps the
    seed-to-seed variance of small-sample training.
    """

    method: str
    periods: tuple[int, ...]
    models: dict[str, list[QuantileModel]]
    array_rating: float
    task: ForecastTask

    def save(self, directory: str | Path) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        meta = {"method": self.method, "periods": list(self.periods),
                "components": {n: len(ms) for n, ms in self.models.items()},
                "array_rating": self.array_rating, "task": self.task.as_dict()}
        with open(d / "strategy.json", "w") as fh:
            json.dump(meta, fh, indent=2)
        for name, members in self.models.items():
            for i, model in enumerate(members):
                model.save(d / f"model_{name}_{i}.npz")

    @classmethod
    def load(cls, directory: str | Path) -> "StrategyBundle":
        d = Path(directory)
        with open(d / "strategy.json") as fh:
            meta = json.load(fh)
        models = {name: [QuantileModel.load(d / f"model_{name}_{i}.npz")
                         for i in range(count)]
                  for name, count in meta["components"].items()}
        return cls(meta["method"], tuple(meta["periods"]), models,
                   meta["array_rating"], ForecastTask.from_dict(meta["task"]))


def train_strategy(
    train: FeatureFrame,
    val: FeatureFrame,
    task: ForecastTask,
    cfg: TrainConfig,
    method: str = "raw",
    periods: tuple[int, ...] = (24,),
    ensemble: int = 1,
) -> StrategyBundle:
    """Decompose the training-period target and fit models per component.

    method='raw' degenerates to a single model on the undecomposed series.
    Component models share the frame's input features; only their training
    targets differ. ``ensemble`` members per component are trained with
    seeds derived from cfg.rng_seed.
    """
    merged = concat_rows([train, val])
    train_days = {d.item() for d in np.unique(train.local_days())}
    val_days = {d.item() for d in np.unique(val.local_days())}
    target = merged.values(task.target)
    result = decompose(target, method, periods=list(periods))
    models: dict[str, list[QuantileModel]] = {}
    for name, component in result.components.items():
        members = []
        for i in range(max(1, ensemble)):
            member_cfg = cfg if i == 0 else replace(cfg, rng_seed=cfg.rng_seed + 7919 * i)
            members.append(_train_model(merged, train_days, val_days, task,
                                        member_cfg, component))
        models[name] = members
    rating = float(merged.static_fields["array_rating"].value) \
        if "array_rating" in merged.static_fields else np.inf
    return StrategyBundle(method, tuple(periods), models, rating, task)


def predict_strategy(bundle: StrategyBundle, context: FeatureFrame, start) -> ForecastResult:
    """Forecast every component, sum the tracks, sort and clip the total.

    Ensemble members average per quantile before components are summed.
    Summing quantile tracks across components is an approximation
    (quantiles are not additive); the median track is the point forecast.
    """
    total = None
    for members in bundle.models.values():
        vals = np.mean([predict_array(m, context, start) for m in members], axis=0)
        total = vals if total is None else total + vals
    total = np.clip(np.sort(total, axis=1), 0.0, bundle.array_rating)
    start64 = np.datetime64(start, "s")
    step = np.timedelta64(int(context.resolution.total_seconds()), "s")
    ts = start64 + step * np.arange(bundle.task.forecast_horizon)
    return ForecastResult(ts, bundle.task.quantiles, total)
