"""End-to-end experiment runner: data, features, split, grid training,
rolling test forecasts, and the cross-tab report.

A grid cell is (plant, method, availability mode). Cells are independent
and deterministic: each derives its training seed from the global seed and
its own coordinates, so reports are byte-identical across reruns and
worker counts. The seasonal-naive baseline joins the report as method
'naive' for every mode.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from pvday.core import FeatureFrame, SplitSpec, TimeSeries, split
from pvday.eval import EvaluationInput, EvaluationReport, compare_methods
from pvday.features import AVAILABLE, UNAVAILABLE, build_frame
from pvday.forecast import (
    ForecastTask,
    StrategyBundle,
    predict_strategy,
    seasonal_naive,
    train_strategy,
)
from pvday.ingest import PlantSpec
from pvday.qnet import TrainConfig
from pvday.synth import SynthConfig, SynthData, generate

VERSION = "0.1.0"


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative experiment description (JSON-loadable)."""

    methods: tuple[str, ...] = ("raw", "mstl")
    modes: tuple[str, ...] = (UNAVAILABLE, AVAILABLE)
    aggregates: tuple[str, ...] = ()
    periods: tuple[int, ...] = (24,)
    n_plants: int = 1
    synth_days: int = 120
    test_days: int = 24
    start: datetime = datetime(2021, 1, 1)
    input_horizon: int = 72
    forecast_horizon: int = 24
    quantiles: tuple[float, ...] = (0.1, 0.25, 0.5, 0.75, 0.9)
    hidden: tuple[int, ...] = (64, 64)
    learning_rate: float = 1e-2
    batch_size: int = 16
    max_epochs: int = 400
    patience: int = 40
    weight_decay: float = 0.5
    ensemble: int = 3
    seed: int = 0
    jobs: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        kwargs = dict(d)
        for key in ("methods", "modes", "aggregates", "periods", "quantiles", "hidden"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        if "start" in kwargs and isinstance(kwargs["start"], str):
            kwargs["start"] = datetime.fromisoformat(kwargs["start"])
        return cls(**kwargs)

    def to_jsonable(self) -> dict:
        d = asdict(self)
        d["start"] = self.start.isoformat()
        for key in ("methods", "modes", "aggregates", "periods", "quantiles", "hidden"):
            d[key] = list(d[key])
        return d


def cell_seed(seed: int, *coords: str) -> int:
    """Stable per-cell seed independent of execution order."""
    digest = hashlib.sha256(":".join([str(seed), *coords]).encode()).digest()
    return int.from_bytes(digest[:4], "little")


@dataclass(frozen=True, eq=False)
class PlantData:
    """One plant's frames (per mode) plus its generated truth."""

    plant_id: str
    frames: dict[str, FeatureFrame]
    synth: SynthData


def _plant_frames(data: SynthData) -> dict[str, FeatureFrame]:
    met = {"ghi": data.ghi, "dhi": data.dhi, "temperature": data.temperature,
           "humidity": data.humidity, "rainfall": data.rainfall}
    return {
        mode: build_frame(data.plant, data.power, met, None, mode,
                          utc_offset_minutes=data.config.utc_offset_minutes)
        for mode in (AVAILABLE, UNAVAILABLE)
    }


def make_plants(cfg: ExperimentConfig) -> list[PlantData]:
    plants = []
    for i in range(cfg.n_plants):
        pid = f"SYN-{i + 1:02d}"
        synth_cfg = SynthConfig(n_days=cfg.synth_days, start=cfg.start,
                                rng_seed=cell_seed(cfg.seed, "synth", pid))
        data = generate(synth_cfg, pid)
        plants.append(PlantData(pid, _plant_frames(data), data))
    return plants


def make_site(plants: list[PlantData], cfg: ExperimentConfig) -> PlantData:
    """Pseudo-plant for direct site forecasting: summed power, mean met."""
    power = np.sum([p.synth.power.values for p in plants], axis=0)
    first = plants[0].synth
    met = {
        "ghi": np.mean([p.synth.ghi for p in plants], axis=0),
        "dhi": np.mean([p.synth.dhi for p in plants], axis=0),
        "temperature": np.mean([p.synth.temperature for p in plants], axis=0),
        "humidity": np.mean([p.synth.humidity for p in plants], axis=0),
        "rainfall": np.mean([p.synth.rainfall for p in plants], axis=0),
    }
    rating = float(sum(p.synth.plant.array_rating for p in plants))
    spec = PlantSpec("SITE", "SynthWorks", rating, "mixed", "Fixed", cfg.start.year)
    series = TimeSeries(first.power.start, first.power.resolution, power, "kW")
    frames = {
        mode: build_frame(spec, series, met, None, mode,
                          utc_offset_minutes=first.config.utc_offset_minutes)
        for mode in (AVAILABLE, UNAVAILABLE)
    }
    synth_like = SynthData(series, met["ghi"], met["dhi"], met["temperature"],
                           met["humidity"], met["rainfall"], first.weather_hourly,
                           first.weather_daily, first.days, spec, first.config)
    return PlantData("SITE", frames, synth_like)


def split_spec(cfg: ExperimentConfig, seed_tag: str = "split") -> SplitSpec:
    test_start = cfg.start + timedelta(days=cfg.synth_days - cfg.test_days)
    test_end = cfg.start + timedelta(days=cfg.synth_days)
    return SplitSpec(3.0, test_start, test_end, cell_seed(cfg.seed, seed_tag))


def _test_day_starts(frame: FeatureFrame, spec: SplitSpec, task: ForecastTask) -> list:
    idx = frame.index
    test_start = np.datetime64(spec.test_start, "s")
    test_end = np.datetime64(spec.test_end, "s")
    local = frame.local_index()
    hours = (local - local.astype("datetime64[D]")).astype("timedelta64[h]").astype(int)
    starts = np.nonzero((hours == 0) & (idx >= test_start) & (idx < test_end))[0]
    starts = starts[(starts >= task.input_horizon) &
                    (starts + task.forecast_horizon <= len(frame))]
    return [idx[s] for s in starts]


@dataclass(frozen=True, eq=False)
class CellResult:
    plant: str
    method: str
    mode: str
    truth: np.ndarray
    forecast: np.ndarray
    labels: np.ndarray  # weather class per evaluated hour
    bundle: StrategyBundle | None = None


def run_cell(plant: PlantData, method: str, mode: str, cfg: ExperimentConfig) -> CellResult:
    """Train a strategy on one grid cell and roll it over the test days."""
    frame = plant.frames[mode]
    spec = split_spec(cfg)
    task = ForecastTask(cfg.input_horizon, cfg.forecast_horizon, cfg.quantiles, mode)
    train_cfg = TrainConfig(cfg.hidden, cfg.learning_rate, cfg.batch_size,
                            cfg.max_epochs, cfg.patience, cfg.weight_decay,
                            cell_seed(cfg.seed, plant.plant_id, method, mode))
    tr, va, _ = split(frame, spec)
    starts = _test_day_starts(frame, spec, task)
    power = frame.values("power")
    weather = frame.values("weather")
    idx = frame.index

    truths, points, labels = [], [], []
    if method == "naive":
        for s64 in starts:
            i0 = int(np.searchsorted(idx, s64))
            res = seasonal_naive(power[:i0], 24, task.forecast_horizon, task.quantiles,
                                 clip_max=float(frame.static_fields["array_rating"].value))
            points.append(res.point)
            truths.append(power[i0: i0 + task.forecast_horizon])
            labels.append(weather[i0: i0 + task.forecast_horizon])
    else:
        bundle = train_strategy(tr, va, task, train_cfg, method, cfg.periods,
                                ensemble=cfg.ensemble)
        for s64 in starts:
            i0 = int(np.searchsorted(idx, s64))
            res = predict_strategy(bundle, frame, s64)
            points.append(res.point)
            truths.append(power[i0: i0 + task.forecast_horizon])
            labels.append(weather[i0: i0 + task.forecast_horizon])
    return CellResult(plant.plant_id, method, mode,
                      np.concatenate(truths), np.concatenate(points),
                      np.concatenate(labels).astype(np.int64),
                      None if method == "naive" else bundle)


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None
                   ) -> EvaluationReport:
    """Run the full grid and emit report.csv / report.json / manifest.json."""
    plants = make_plants(cfg)
    entities: list[PlantData] = list(plants)
    if "sum" in cfg.aggregates and len(plants) > 1:
        entities.append(make_site(plants, cfg))

    methods = [*cfg.methods, "naive"]
    jobs = max(1, cfg.jobs)
    cells_spec = [(e, m, a) for e in entities for m in methods for a in cfg.modes]

    def _run(args):
        e, m, a = args
        return run_cell(e, m, a, cfg)

    if jobs == 1:
        results = [_run(c) for c in cells_spec]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run, cells_spec))

    cells: dict[tuple[str, str, str], EvaluationInput] = {}
    labels: dict[str, np.ndarray] = {}
    per_plant: dict[tuple[str, str], dict[str, np.ndarray]] = {}
    for r in results:
        cells[(r.plant, r.method, r.mode)] = EvaluationInput.from_series(
            r.truth, r.forecast, r.plant)
        labels[r.plant] = r.labels
        per_plant.setdefault((r.method, r.mode), {})[r.plant] = r.forecast

    entity_names = [e.plant_id for e in entities]
    if "indiv" in cfg.aggregates and len(plants) > 1:
        pids = [p.plant_id for p in plants]
        for m in methods:
            for a in cfg.modes:
                f = {pid: per_plant[(m, a)][pid] for pid in pids}
                t = {pid: cells[(pid, m, a)].y for pid in pids}
                y = np.sum(list(t.values()), axis=0)
                yhat = np.sum(list(f.values()), axis=0)
                cells[("Site-Indiv", m, a)] = EvaluationInput.from_series(y, yhat, "Site-Indiv")
        labels["Site-Indiv"] = labels[plants[0].plant_id]
        entity_names.append("Site-Indiv")
    if "sum" in cfg.aggregates and len(plants) > 1:
        # rename the pseudo-plant rows for the report
        for m in methods:
            for a in cfg.modes:
                cells[("Site-Sum", m, a)] = cells.pop(("SITE", m, a))
        labels["Site-Sum"] = labels.pop("SITE")
        entity_names = [n for n in entity_names if n != "SITE"] + ["Site-Sum"]

    report = compare_methods(cells, entity_names, methods, list(cfg.modes), labels)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        report.to_csv(out / "report.csv")
        report.to_json(out / "report.json")
        manifest = {
            "version": VERSION,
            "config": cfg.to_jsonable(),
            "grid": {"entities": entity_names, "methods": methods,
                     "modes": list(cfg.modes)},
        }
        with open(out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2)
    return report
