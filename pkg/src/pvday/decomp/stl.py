"""Seasonal-trend decomposition via LOESS, single and multi-seasonal.

The single-seasonal procedure is the classic two-loop design: an inner
loop alternating cycle-subseries smoothing with low-pass deseasonalizing
and trend smoothing, and an optional outer loop that re-weights points by
the bisquare of their remainders. The multi-seasonal variant back-fits one
seasonal component per requested period through repeated rounds of the
single-seasonal routine, so the additive identity holds by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pvday.core import TimeSeries
from pvday.decomp._backend import loess_fit
from pvday.decomp.result import DecompositionResult
from pvday.errors import PeriodsNotAscending, SeriesTooShort


def _next_odd(v: float) -> int:
    k = int(np.ceil(v))
    return k if k % 2 == 1 else k + 1


@dataclass(frozen=True)
class StlParams:
    """Smoothing windows and loop counts for one seasonal period.

    Window defaults follow the classic recommendations; the seasonal
    window defaults to 25 which suits hourly PV subseries.
    """

    period: int
    seasonal_window: int = 25
    trend_window: int | None = None
    low_pass_window: int | None = None
    inner_iterations: int = 2
    robust_iterations: int = 15
    seasonal_degree: int = 1
    trend_degree: int = 1
    low_pass_degree: int = 1

    def __post_init__(self):
        if self.period < 2:
            raise ValueError("period must be >= 2")
        if self.seasonal_window < 7 or self.seasonal_window % 2 == 0:
            raise ValueError("seasonal_window must be an odd integer >= 7")
        for w in (self.trend_window, self.low_pass_window):
            if w is not None and (w < 3 or w % 2 == 0):
                raise ValueError("windows must be odd integers >= 3")

    @property
    def effective_trend_window(self) -> int:
        if self.trend_window is not None:
            return self.trend_window
        return _next_odd(1.5 * self.period / (1.0 - 1.5 / self.seasonal_window))

    @property
    def effective_low_pass_window(self) -> int:
        if self.low_pass_window is not None:
            return self.low_pass_window
        return _next_odd(self.period)


def _moving_average(x: np.ndarray, length: int) -> np.ndarray:
    c = np.cumsum(np.concatenate(([0.0], x)))
    return (c[length:] - c[:-length]) / length


def _as_values(series) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return np.asarray(series.values, dtype=np.float64)
    return np.asarray(series, dtype=np.float64)


def _stl_arrays(y: np.ndarray, params: StlParams, robust: bool) -> tuple[np.ndarray, np.ndarray]:
    """Inner/outer STL loops; returns (trend, seasonal)."""
    n = y.size
    p = params.period
    n_s = params.seasonal_window
    n_t = params.effective_trend_window
    n_l = params.effective_low_pass_window
    outer = params.robust_iterations if robust else 1

    xs_full = np.arange(n, dtype=np.float64)
    trend = np.zeros(n)
    seasonal = np.zeros(n)
    rho = np.ones(n)

    for outer_it in range(outer):
        for _ in range(params.inner_iterations):
            detrended = y - trend
            # cycle-subseries smoothing, each extended one period both ways
            extended = np.empty(n + 2 * p)
            for j in range(p):
                sub = detrended[j::p]
                m = sub.size
                xs = np.arange(m, dtype=np.float64)
                ev = np.arange(-1, m + 1, dtype=np.float64)
                fitted = loess_fit(xs, sub, ev, n_s, params.seasonal_degree, rho[j::p])
                extended[j::p] = fitted
            # low-pass: two period-length moving averages, one of 3, then loess
            lp = _moving_average(_moving_average(extended, p), p)
            lp = _moving_average(lp, 3)
            lp = loess_fit(xs_full, lp, xs_full, n_l, params.low_pass_degree, None)
            seasonal = extended[p:p + n] - lp
            # trend from the deseasonalized series
            trend = loess_fit(xs_full, y - seasonal, xs_full, n_t, params.trend_degree, rho)
        if outer_it < outer - 1:
            remainder = y - trend - seasonal
            h = 6.0 * np.median(np.abs(remainder))
            if h <= 0:
                rho = np.ones(n)
            else:
                u = np.abs(remainder) / h
                w = 1.0 - u * u
                rho = np.where(u < 1.0, w * w, 0.0)
    return trend, seasonal


def stl(series, params: StlParams, robust: bool = False) -> DecompositionResult:
    """Single-seasonal decomposition into trend + seasonal + remainder.

    The remainder is defined by subtraction so the additive identity is
    exact. Missing values must be interpolated beforehand.
    """
    y = _as_values(series)
    if y.size < 2 * params.period:
        raise SeriesTooShort(f"need >= {2 * params.period} samples for period {params.period}")
    if np.isnan(y).any():
        raise ValueError("series contains missing values; interpolate before decomposing")
    trend, seasonal = _stl_arrays(y, params, robust)
    remainder = y - trend - seasonal
    components = {
        "trend": trend,
        f"seasonal_{params.period}": seasonal,
        "remainder": remainder,
    }
    return DecompositionResult("stl", components, y.size,
                               meta={"periods": [params.period], "robust": robust})


def mstl(
    series,
    periods: list[int],
    params: list[StlParams] | None = None,
    robust: bool = False,
    rounds: int = 2,
) -> DecompositionResult:
    """Multi-seasonal decomposition by iterated back-fitting.

    Each round re-estimates every period's seasonal on the series with all
    other current seasonals removed; the trend comes from the final pass
    and the remainder by subtraction. A single period reduces exactly to
    stl().
    """
    y = _as_values(series)
    periods = [int(p) for p in periods]
    if any(b <= a for a, b in zip(periods, periods[1:])):
        raise PeriodsNotAscending(f"periods must be strictly ascending: {periods}")
    if not periods:
        raise ValueError("at least one period required")
    if y.size < 2 * max(periods):
        raise SeriesTooShort(f"need >= {2 * max(periods)} samples for period {max(periods)}")
    if params is None:
        params = [StlParams(period=p) for p in periods]
    if len(params) != len(periods):
        raise ValueError("one StlParams per period required")
    for p, prm in zip(periods, params):
        if prm.period != p:
            raise ValueError("params periods must match the periods list")

    n = y.size
    seasonals = [np.zeros(n) for _ in periods]
    trend = np.zeros(n)
    for _ in range(max(1, rounds)):
        for i, prm in enumerate(params):
            others = np.zeros(n)
            for j, s in enumerate(seasonals):
                if j != i:
                    others = others + s
            res_trend, res_seasonal = _stl_arrays(y - others, prm, robust)
            seasonals[i] = res_seasonal
            trend = res_trend
    remainder = y - trend
    for s in seasonals:
        remainder = remainder - s
    components: dict[str, np.ndarray] = {"trend": trend}
    for p, s in zip(periods, seasonals):
        components[f"seasonal_{p}"] = s
    components["remainder"] = remainder
    return DecompositionResult("mstl", components, n,
                               meta={"periods": periods, "robust": robust, "rounds": rounds})
