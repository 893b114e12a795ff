"""Empirical mode decomposition and its noise-ensemble variant.

Sifting uses natural cubic-spline envelopes through the local extrema,
with two extrema mirrored beyond each end to anchor the splines, and the
S-number stopping rule. The ensemble variant averages sifted components
over antithetic white-noise pairs, which cancels the injected noise in the
reconstruction exactly for even ensemble sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pvday.core import TimeSeries
from pvday.decomp._backend import natural_cubic
from pvday.decomp.result import DecompositionResult
from pvday.errors import TooShort

_NBSYM = 2  # extrema mirrored per end
_MAX_SIFTS = 60


@dataclass(frozen=True)
class EemdParams:
    ensemble_size: int = 100
    noise_std: float = 0.2  # fraction of signal std
    max_imfs: int = 8
    s_number: int = 4
    amp_ratio: float | None = None  # alternative sift stop when set
    rng_seed: int = 0

    def __post_init__(self):
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")


def _local_extrema(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Interior maxima/minima indices; plateaus contribute their midpoint."""
    dy = np.diff(y)
    nz = np.nonzero(dy)[0]
    if nz.size < 2:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    signs = np.sign(dy[nz])
    flips = np.nonzero(signs[1:] != signs[:-1])[0]
    mid = (nz[flips] + 1 + nz[flips + 1]) // 2
    is_max = signs[flips] > 0
    return mid[is_max], mid[~is_max]


def _zero_crossings(y: np.ndarray) -> int:
    s = np.sign(y)
    s = s[s != 0]
    if s.size < 2:
        return 0
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _envelope(y: np.ndarray, pos: np.ndarray, upper: bool, x: np.ndarray) -> np.ndarray:
    """Natural-spline envelope through the extrema at ``pos``.

    Two extrema per end are reflected about the end samples to anchor the
    spline; an end sample lying outside the first/last extremum joins the
    knots so the envelope never cuts inside it there.
    """
    n = y.size
    fpos = pos.astype(np.float64)
    vals = y[pos]

    left_take = pos[:_NBSYM]
    left_x = (-left_take[::-1]).astype(np.float64)
    left_v = y[left_take[::-1]]
    if (y[0] >= vals[0]) if upper else (y[0] <= vals[0]):
        left_x = np.concatenate((left_x, [0.0]))
        left_v = np.concatenate((left_v, [y[0]]))

    right_take = pos[-_NBSYM:]
    right_x = (2.0 * (n - 1) - right_take[::-1]).astype(np.float64)
    right_v = y[right_take[::-1]]
    if (y[n - 1] >= vals[-1]) if upper else (y[n - 1] <= vals[-1]):
        right_x = np.concatenate(([float(n - 1)], right_x))
        right_v = np.concatenate(([y[n - 1]], right_v))

    knots_x = np.concatenate((left_x, fpos, right_x))
    knots_v = np.concatenate((left_v, vals, right_v))
    keep = np.concatenate(([True], np.diff(knots_x) > 0))
    return natural_cubic(knots_x[keep], knots_v[keep], x)


def _sift_stop_s(h: np.ndarray, counts: list[tuple[int, int]], s_number: int) -> bool:
    mx, mn = _local_extrema(h)
    n_ext = mx.size + mn.size
    n_zc = _zero_crossings(h)
    counts.append((n_ext, n_zc))
    if len(counts) < s_number:
        return False
    recent = counts[-s_number:]
    if any(abs(e - z) > 1 for e, z in recent):
        return False
    return all(c == recent[0] for c in recent[1:])


def emd(series, max_imfs: int | None = None, s_number: int = 4,
        amp_ratio: float | None = None) -> DecompositionResult:
    """Standard sifting decomposition into IMFs plus a monotone residue.

    Extraction stops when the residue has fewer than two maxima or two
    minima (monotone-like) or when max_imfs is reached. The component sum
    reconstructs the input to float accuracy.
    """
    y = _as_values(series)
    if y.size < 8:
        raise TooShort("emd requires at least 8 samples")
    x = np.arange(y.size, dtype=np.float64)
    imfs: list[np.ndarray] = []
    residue = y.copy()
    while max_imfs is None or len(imfs) < max_imfs:
        mx, mn = _local_extrema(residue)
        if mx.size < 2 or mn.size < 2:
            break
        h = residue.copy()
        counts: list[tuple[int, int]] = []
        for _ in range(_MAX_SIFTS):
            hmx, hmn = _local_extrema(h)
            if hmx.size < 2 or hmn.size < 2:
                break
            upper = _envelope(h, hmx, True, x)
            lower = _envelope(h, hmn, False, x)
            mean = 0.5 * (upper + lower)
            h = h - mean
            if amp_ratio is not None:
                amp = 0.5 * (upper - lower)
                scale = np.mean(np.abs(amp))
                if scale <= 0 or np.mean(np.abs(mean)) / scale < amp_ratio:
                    break
            elif _sift_stop_s(h, counts, s_number):
                break
        imfs.append(h)
        residue = residue - h
    components = {f"imf_{i + 1}": imf for i, imf in enumerate(imfs)}
    components["residue"] = residue
    return DecompositionResult("emd", components, y.size, meta={"n_imfs": len(imfs)})


def eemd(series, params: EemdParams | None = None) -> DecompositionResult:
    """Ensemble EMD: average sifting over antithetic noise pairs.

    Member seeds derive from (rng_seed, pair index) so results are
    schedule-independent; IMFs are aligned by extraction order and padded
    with zeros where members produced fewer.
    """
    if params is None:
        params = EemdParams()
    y = _as_values(series)
    if y.size < 8:
        raise TooShort("eemd requires at least 8 samples")
    sigma = float(np.std(y))
    scale = params.noise_std * sigma
    if params.ensemble_size == 1 or scale == 0.0:
        base = emd(y, params.max_imfs, params.s_number, params.amp_ratio)
        return DecompositionResult("eemd", dict(base.components), y.size,
                                   meta={**base.meta, "ensemble_size": params.ensemble_size,
                                         "noise_std": params.noise_std})
    member_results: list[dict[str, np.ndarray]] = []
    n_pairs = (params.ensemble_size + 1) // 2
    for j in range(n_pairs):
        rng = np.random.default_rng([params.rng_seed, j])
        noise = rng.normal(0.0, scale, y.size)
        signs = (1.0, -1.0) if 2 * j + 1 < params.ensemble_size else (1.0,)
        for s in signs:
            r = emd(y + s * noise, params.max_imfs, params.s_number, params.amp_ratio)
            member_results.append(r.components)
    k_max = max(len(c) - 1 for c in member_results)
    n_members = len(member_results)
    components: dict[str, np.ndarray] = {}
    for k in range(k_max):
        acc = np.zeros(y.size)
        for c in member_results:
            name = f"imf_{k + 1}"
            if name in c:
                acc += c[name]
        components[f"imf_{k + 1}"] = acc / n_members
    residue = np.zeros(y.size)
    for c in member_results:
        residue += c["residue"]
    components["residue"] = residue / n_members
    return DecompositionResult("eemd", components, y.size,
                               meta={"n_imfs": k_max, "ensemble_size": params.ensemble_size,
                                     "noise_std": params.noise_std, "rng_seed": params.rng_seed})


def _as_values(series) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return np.asarray(series.values, dtype=np.float64)
    return np.asarray(series, dtype=np.float64)
