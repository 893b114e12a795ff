"""Decomposition suite: LOESS, STL, MSTL, EMD/EEMD, VMD and VMD-EEMD."""

from pvday.decomp._backend import backend_name
from pvday.decomp.emd import EemdParams, eemd, emd
from pvday.decomp.loess import loess, loess_window
from pvday.decomp.result import DecompositionResult
from pvday.decomp.stl import StlParams, mstl, stl
from pvday.decomp.vmd import VmdParams, vmd, vmd_then_eemd

__all__ = [
    "DecompositionResult",
    "EemdParams",
    "StlParams",
    "VmdParams",
    "backend_name",
    "eemd",
    "emd",
    "loess",
    "loess_window",
    "mstl",
    "stl",
    "vmd",
    "vmd_then_eemd",
]


def decompose(series, method: str, periods=None, stl_params=None,
              vmd_params=None, eemd_params=None, robust: bool = False) -> DecompositionResult:
    """Dispatch a decomposition by method name.

    ``raw`` returns the identity decomposition (single component equal to
    the input), which lets forecasting strategies treat undecomposed
    training uniformly.
    """
    import numpy as np

    from pvday.core import TimeSeries

    if method == "raw":
        values = series.values if isinstance(series, TimeSeries) else np.asarray(series, float)
        return DecompositionResult("raw", {"raw": np.array(values, dtype=float)}, len(values))
    if method == "stl":
        p = (periods or [24])[0]
        params = stl_params[0] if stl_params else StlParams(period=p)
        return stl(series, params, robust)
    if method == "mstl":
        return mstl(series, periods or [24], stl_params, robust)
    if method == "emd":
        return emd(series)
    if method == "eemd":
        return eemd(series, eemd_params)
    if method == "vmd":
        return vmd(series, vmd_params)
    if method == "vmd-eemd":
        return vmd_then_eemd(series, vmd_params, eemd_params)
    raise ValueError(f"unknown decomposition method: {method!r}")
