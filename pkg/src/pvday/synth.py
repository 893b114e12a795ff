"""Deterministic synthetic PV plant data for desk-scale experiments.

Each day gets a weather class from a Markov chain, a clear-sky bell curve
modulated by seasonal day length, a per-class cloud attenuation process,
and a diffuse fraction drawn from the class's clearness-index band, so the
generated days classify back to their own labels by construction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from pvday.core import TimeSeries
from pvday.features import OVERCAST_RAINY, PARTIALLY_CLOUDY, SUNNY
from pvday.ingest import PlantSpec

# interior clearness-index bands per class, kept off the boundaries
_KD_BANDS = {SUNNY: (0.05, 0.13), PARTIALLY_CLOUDY: (0.20, 0.40),
             OVERCAST_RAINY: (0.50, 0.85)}
# per-class cloud attenuation: (day-level mean, day-level sd, hour-level sd).
# Hour-level transients dominate: a persistence forecast copies them
# verbatim while a smoothing forecaster averages them away.
_ATTENUATION = {SUNNY: (0.85, 0.04, 0.20), PARTIALLY_CLOUDY: (0.65, 0.08, 0.30),
                OVERCAST_RAINY: (0.45, 0.08, 0.38)}
_AR_PHI = 0.45  # day-to-day persistence of the cloud-level residual

DEFAULT_TRANSITION = (
    (0.65, 0.25, 0.10),
    (0.35, 0.45, 0.20),
    (0.25, 0.40, 0.35),
)


@dataclass(frozen=True)
class SynthConfig:
    n_days: int = 120
    start: datetime = datetime(2021, 1, 1)
    day_length_amplitude: float = 1.75  # hours around the 11.75 h mean
    transition: tuple = DEFAULT_TRANSITION
    cloud_noise: tuple[float, float, float] = (1.0, 1.0, 1.0)  # per-class scale
    array_rating: float = 5.0
    rng_seed: int = 0
    utc_offset_minutes: int = 0

    def __post_init__(self):
        if self.n_days < 14:
            raise ValueError("n_days must be >= 14")
        t = np.asarray(self.transition, dtype=np.float64)
        if t.shape != (3, 3) or not np.allclose(t.sum(axis=1), 1.0):
            raise ValueError("transition must be a 3x3 row-stochastic matrix")
        if any(s < 0 for s in self.cloud_noise):
            raise ValueError("cloud noise scales must be >= 0")


@dataclass(frozen=True, eq=False)
class SynthData:
    power: TimeSeries  # kW, hourly
    ghi: np.ndarray
    dhi: np.ndarray
    temperature: np.ndarray
    humidity: np.ndarray
    rainfall: np.ndarray
    weather_hourly: np.ndarray  # class code per hour
    weather_daily: np.ndarray  # class code per day
    days: np.ndarray  # datetime64[D]
    plant: PlantSpec
    config: SynthConfig = field(repr=False, default=None)
    day_levels: np.ndarray | None = None  # generator-truth cloud level per day


def generate(cfg: SynthConfig, plant_id: str = "SYN-01") -> SynthData:
    """Generate one plant's hourly series; fully deterministic per seed."""
    rng = np.random.default_rng(cfg.rng_seed)
    n_days = cfg.n_days
    hours = np.arange(24)
    transition = np.asarray(cfg.transition, dtype=np.float64)

    weather = np.empty(n_days, dtype=np.int64)
    state = SUNNY
    for d in range(n_days):
        weather[d] = state
        state = int(rng.choice(3, p=transition[state]))

    ghi = np.zeros(n_days * 24)
    dhi = np.zeros(n_days * 24)
    temperature = np.zeros(n_days * 24)
    humidity = np.zeros(n_days * 24)
    rainfall = np.zeros(n_days * 24)
    power = np.zeros(n_days * 24)

    start_doy = cfg.start.timetuple().tm_yday
    ar_residual = 0.0
    day_levels = np.zeros(n_days)
    for d in range(n_days):
        w = int(weather[d])
        doy = (start_doy + d - 1) % 365 + 1
        # longest day near the December solstice (southern hemisphere)
        day_len = 11.75 + cfg.day_length_amplitude * np.cos(2 * np.pi * (doy - 355) / 365.0)
        sunrise = 12.0 - day_len / 2.0
        elev = np.sin(np.pi * np.clip((hours + 0.5 - sunrise) / day_len, 0.0, 1.0))
        clear = 1000.0 * np.maximum(elev, 0.0) ** 1.3

        mean_att, day_sd, hour_sd = _ATTENUATION[w]
        day_sd = day_sd * cfg.cloud_noise[w]
        hour_sd = hour_sd * cfg.cloud_noise[w]
        # mean-reverting day level plus hour-level noise: repeating
        # yesterday copies both, a forecaster can shrink toward the mean
        ar_residual = _AR_PHI * ar_residual + rng.normal(0.0, day_sd)
        day_level = float(np.clip(mean_att + ar_residual, 0.05, 1.0))
        day_levels[d] = day_level
        cloud = np.clip(day_level * (1.0 + rng.normal(0.0, hour_sd, 24)), 0.03, 1.0)
        g = clear * cloud

        lo, hi = _KD_BANDS[w]
        k_d = rng.uniform(lo + 0.01, hi - 0.01)
        jitter = 1.0 + rng.normal(0.0, 0.02, 24)
        dh = k_d * g * jitter
        total_g = g.sum()
        if total_g > 0:
            dh *= k_d * total_g / dh.sum()  # daily ratio hits k_d exactly

        season_t = 8.0 * np.cos(2 * np.pi * (doy - 15) / 365.0)
        temp = 22.0 + season_t + 6.0 * elev + rng.normal(0.0, 0.8, 24)
        efficiency = 1.0 - 0.004 * np.maximum(temp - 25.0, 0.0)
        p = cfg.array_rating * (g / 1000.0) * efficiency
        p = np.clip(p, 0.0, cfg.array_rating)

        hum_base = {SUNNY: 30.0, PARTIALLY_CLOUDY: 55.0, OVERCAST_RAINY: 80.0}[w]
        hum = np.clip(hum_base + rng.normal(0.0, 5.0, 24), 0.0, 100.0)
        rain = np.full(24, float(rng.exponential(5.0)) if w == OVERCAST_RAINY else 0.0)

        sl = slice(d * 24, (d + 1) * 24)
        ghi[sl], dhi[sl], temperature[sl] = g, dh, temp
        humidity[sl], rainfall[sl], power[sl] = hum, rain, p

    plant = PlantSpec(plant_id, "SynthWorks", cfg.array_rating, "mono-Si", "Fixed",
                      cfg.start.year)
    series = TimeSeries(cfg.start, timedelta(hours=1), power, "kW")
    days = (np.datetime64(cfg.start, "D") + np.arange(n_days)).astype("datetime64[D]")
    return SynthData(series, ghi, dhi, temperature, humidity, rainfall,
                     np.repeat(weather, 24), weather, days, plant, cfg, day_levels)


def to_raw_csv(data: SynthData, path: str | Path, resolution_minutes: int = 60) -> None:
    """Write the generated series in the raw ingest CSV schema.

    Sub-hourly resolutions repeat each hourly value, which exercises the
    resampling path end to end.
    """
    if 60 % resolution_minutes != 0:
        raise ValueError("resolution must divide one hour")
    reps = 60 // resolution_minutes
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    start = data.power.start
    n = len(data.power)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "power", "ghi", "dhi", "temperature", "humidity",
                    "rainfall"])
        for i in range(n):
            for r in range(reps):
                ts = start + timedelta(hours=i, minutes=r * resolution_minutes)
                w.writerow([
                    ts.strftime("%Y-%m-%d %H:%M:%S"),
                    repr(float(data.power.values[i])),
                    repr(float(data.ghi[i])),
                    repr(float(data.dhi[i])),
                    repr(float(data.temperature[i])),
                    repr(float(data.humidity[i])),
                    repr(float(data.rainfall[i])),
                ])


RAW_SCHEMA = {name: name for name in
              ("power", "ghi", "dhi", "temperature", "humidity", "rainfall")}
