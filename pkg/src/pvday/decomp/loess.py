"""Locally weighted polynomial regression (tricube weights).

Public span-based API over the kernel backends. The STL/MSTL machinery
calls the window-count form directly via ``loess_window``.
"""

from __future__ import annotations

import numpy as np

from pvday.decomp._backend import loess_fit


def loess(
    x: np.ndarray,
    y: np.ndarray,
    eval_points: np.ndarray | None = None,
    span: float = 0.5,
    degree: int = 1,
    robustness_weights: np.ndarray | None = None,
) -> np.ndarray:
    """Smooth y(x) at eval_points with a local weighted polynomial fit.

    Each eval point is fitted over its ceil(span*n) nearest neighbours with
    tricube weights (1 - (d/maxdist)^3)^3, multiplied by the robustness
    weights when given. Degenerate neighbourhoods fall back to the weighted
    mean.

    Parameters
    ----------
    x : strictly increasing abscissae, len n
    y : ordinates, len n
    eval_points : where to evaluate the fit (default: x itself)
    span : neighbourhood fraction in (0, 1]
    degree : local polynomial degree, 0, 1 or 2
    robustness_weights : optional per-point weights in [0, 1]
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("x and y must be 1-d and of equal length")
    if x.size >= 2 and not np.all(np.diff(x) > 0):
        raise ValueError("x must be strictly increasing")
    if not 0.0 < span <= 1.0:
        raise ValueError("span must be in (0, 1]")
    if degree not in (0, 1, 2):
        raise ValueError("degree must be 0, 1 or 2")
    if x.size < degree + 1:
        raise ValueError(f"need at least degree+1={degree + 1} points")
    if eval_points is None:
        eval_points = x
    q = int(np.ceil(span * x.size))
    return loess_fit(x, y, np.asarray(eval_points, dtype=np.float64), q,
                     degree, robustness_weights)


def loess_window(
    x: np.ndarray,
    y: np.ndarray,
    eval_points: np.ndarray,
    window: int,
    degree: int = 1,
    robustness_weights: np.ndarray | None = None,
) -> np.ndarray:
    """LOESS parameterized by neighbour count instead of span.

    For window > n all points are used and the tricube max distance is
    inflated by window/n (Cleveland's rule for wide smoothers).
    """
    return loess_fit(
        np.asarray(x, dtype=np.float64),
        np.asarray(y, dtype=np.float64),
        np.asarray(eval_points, dtype=np.float64),
        int(window), degree, robustness_weights,
    )
