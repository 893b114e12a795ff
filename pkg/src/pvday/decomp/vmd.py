"""Variational mode decomposition via ADMM in the frequency domain.

Modes are extracted as Wiener-filtered bands around adaptively updated
center frequencies; the input is mirror-extended to even length for
spectral processing and the extension is dropped on output. The chained
variant feeds the variational residual to the noise-ensemble sifter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pvday.core import TimeSeries
from pvday.decomp.emd import EemdParams, eemd
from pvday.decomp.result import DecompositionResult
from pvday.errors import TooShort


@dataclass(frozen=True)
class VmdParams:
    k: int = 3
    alpha: float = 2000.0  # bandwidth penalty
    tau: float = 0.0  # dual ascent step; 0 = noise-slack
    tol: float = 1e-7
    max_iterations: int = 500

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("mode count k must be >= 1")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")


def vmd(series, params: VmdParams | None = None) -> DecompositionResult:
    """Decompose into k band-limited modes with center frequencies.

    Returns modes sorted by ascending center frequency (cycles/sample).
    Hitting the iteration cap is reported via meta['converged'] = False
    rather than raised; the best iterate is returned.
    """
    if params is None:
        params = VmdParams()
    y = _as_values(series)
    n = y.size
    k_modes = params.k
    if n < 2 * k_modes:
        raise TooShort(f"vmd requires at least {2 * k_modes} samples for k={k_modes}")

    # mirror-extend to even length 2n
    h1 = n // 2
    h2 = n - h1
    ext = np.concatenate((y[:h1][::-1], y, y[n - h2:][::-1]))
    big_t = ext.size

    freqs = np.arange(1, big_t + 1) / big_t - 0.5 - 1.0 / big_t
    f_hat = np.fft.fftshift(np.fft.fft(ext))
    f_hat_plus = f_hat.copy()
    f_hat_plus[: big_t // 2] = 0.0

    # center frequencies start uniformly spaced inside (0, half Nyquist)
    omega = 0.25 * (np.arange(k_modes) + 1.0) / (k_modes + 1.0)
    u_hat = np.zeros((k_modes, big_t), dtype=complex)
    lam = np.zeros(big_t, dtype=complex)
    half = slice(big_t // 2, big_t)

    converged = False
    it = 0
    for it in range(1, params.max_iterations + 1):
        u_prev = u_hat.copy()
        for k in range(k_modes):
            others = u_hat.sum(axis=0) - u_hat[k]
            u_hat[k] = (f_hat_plus - others - lam / 2.0) / (
                1.0 + 2.0 * params.alpha * (freqs - omega[k]) ** 2
            )
            power = np.abs(u_hat[k, half]) ** 2
            denom = power.sum()
            if denom > 0:
                omega[k] = float(np.dot(freqs[half], power) / denom)
        if params.tau > 0:
            lam = lam + params.tau * (u_hat.sum(axis=0) - f_hat_plus)
        diff = 0.0
        for k in range(k_modes):
            num = np.sum(np.abs(u_hat[k] - u_prev[k]) ** 2)
            den = np.sum(np.abs(u_prev[k]) ** 2)
            if den > 0:
                diff += num / den
            elif num > 0:
                diff += np.inf
        if diff < params.tol:
            converged = True
            break

    order = np.argsort(omega)
    omega = omega[order]
    u_hat = u_hat[order]

    # back to time domain: conjugate-mirror the half spectrum per mode
    components: dict[str, np.ndarray] = {}
    for k in range(k_modes):
        full = np.zeros(big_t, dtype=complex)
        full[big_t // 2:] = u_hat[k, big_t // 2:]
        full[1: big_t // 2 + 1] = np.conj(u_hat[k, big_t // 2:][::-1])
        full[0] = np.conj(full[-1])
        mode = np.real(np.fft.ifft(np.fft.ifftshift(full)))
        components[f"mode_{k + 1}"] = mode[h1: h1 + n]
    return DecompositionResult(
        "vmd", components, n,
        meta={"omegas": omega.tolist(), "converged": converged, "iterations": it,
              "k": k_modes, "alpha": params.alpha, "tau": params.tau},
    )


def vmd_then_eemd(series, vmd_params: VmdParams | None = None,
                  eemd_params: EemdParams | None = None) -> DecompositionResult:
    """Variational modes first, then ensemble sifting of their residual."""
    y = _as_values(series)
    v = vmd(y, vmd_params)
    residual = y - v.reconstruction()
    e = eemd(residual, eemd_params)
    components = dict(v.components)
    for name, c in e.components.items():
        components[name] = c
    return DecompositionResult(
        "vmd-eemd", components, y.size,
        meta={"vmd": v.meta, "eemd": e.meta},
    )


def _as_values(series) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return np.asarray(series.values, dtype=np.float64)
    return np.asarray(series, dtype=np.float64)
