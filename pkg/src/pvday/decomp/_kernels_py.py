"""Pure-numpy kernels: tricube local regression and natural cubic splines.

Reference implementations of the hot inner loops; the compiled twin in
``_kernels.pyx`` performs the same arithmetic. Selected via
``pvday.decomp._backend``.
"""

from __future__ import annotations

import numpy as np

IMPL = "python"

_SINGULAR_REL = 1e-12


def _tricube(u: np.ndarray) -> np.ndarray:
    w = 1.0 - u * u * u
    w = np.where(w > 0.0, w, 0.0)
    return w * w * w


def _fit_window(dx, wy, w, maxd, degree):
    """Weighted polynomial fit on eval-centered abscissae; value at 0.

    dx, w may be (m, q) batches or (q,) single windows; maxd is the window
    radius used to rescale abscissae (conditioning). The fit is recentred
    at the weighted mean abscissa, which keeps the normal equations well
    conditioned even for one-sided windows. Falls back to the weighted
    mean when the normal matrix is singular.
    """
    s0 = w.sum(axis=-1)
    t0 = (w * wy).sum(axis=-1)
    # guard: all-zero weights degenerate to a plain mean
    nz = s0 > 0.0
    mean = np.where(nz, t0 / np.where(nz, s0, 1.0), wy.mean(axis=-1))
    if degree == 0:
        return mean
    scale = np.where(np.asarray(maxd) > 0.0, maxd, 1.0)
    batched = np.ndim(dx) == 2
    u = dx / (scale[:, None] if batched else scale)
    cu = np.where(nz, (w * u).sum(axis=-1) / np.where(nz, s0, 1.0), 0.0)
    v = u - (cu[:, None] if batched else cu)
    s1 = (w * v).sum(axis=-1)
    s2 = (w * v * v).sum(axis=-1)
    t1 = (w * v * wy).sum(axis=-1)
    if degree == 1:
        det = s0 * s2 - s1 * s1
        ok = nz & (det > _SINGULAR_REL * s0 * s2)
        safe = np.where(ok, det, 1.0)
        a = (s2 * t0 - s1 * t1) / safe
        b = (s0 * t1 - s1 * t0) / safe
        # one iterative-refinement step against the normal equations
        r0 = t0 - (s0 * a + s1 * b)
        r1 = t1 - (s1 * a + s2 * b)
        a = a + (s2 * r0 - s1 * r1) / safe
        b = b + (s0 * r1 - s1 * r0) / safe
        return np.where(ok, a + b * (-cu), mean)
    # degree 2: Cramer's rule on the 3x3 moment matrix of v
    v2 = v * v
    s3 = (w * v2 * v).sum(axis=-1)
    s4 = (w * v2 * v2).sum(axis=-1)
    t2 = (w * v2 * wy).sum(axis=-1)
    det = s0 * (s2 * s4 - s3 * s3) - s1 * (s1 * s4 - s3 * s2) + s2 * (s1 * s3 - s2 * s2)
    dscale = s0 * s2 * s4
    ok = nz & (dscale > 0.0) & (det > _SINGULAR_REL * dscale)
    safe = np.where(ok, det, 1.0)
    c00 = s2 * s4 - s3 * s3
    c01 = s1 * s4 - s3 * s2
    c02 = s1 * s3 - s2 * s2
    c11 = s0 * s4 - s2 * s2
    c12 = s0 * s3 - s1 * s2
    c22 = s0 * s2 - s1 * s1

    def _solve3(r0, r1, r2):
        da = (r0 * c00 - r1 * c01 + r2 * c02) / safe
        db = (-r0 * c01 + r1 * c11 - r2 * c12) / safe
        dc = (r0 * c02 - r1 * c12 + r2 * c22) / safe
        return da, db, dc

    a, b, c = _solve3(t0, t1, t2)
    r0 = t0 - (s0 * a + s1 * b + s2 * c)
    r1 = t1 - (s1 * a + s2 * b + s3 * c)
    r2 = t2 - (s2 * a + s3 * b + s4 * c)
    da, db, dc = _solve3(r0, r1, r2)
    a, b, c = a + da, b + db, c + dc
    return np.where(ok, a + b * (-cu) + c * cu * cu, mean)


def _window_bounds(x: np.ndarray, x0: float, q: int) -> tuple[int, int]:
    """Contiguous q-nearest window [lo, hi) around x0; left wins ties."""
    n = x.size
    if q >= n:
        return 0, n
    right = int(np.searchsorted(x, x0, side="left"))
    left = right - 1
    for _ in range(q):
        d_left = x0 - x[left] if left >= 0 else np.inf
        d_right = x[right] - x0 if right < n else np.inf
        if d_left <= d_right:
            left -= 1
        else:
            right += 1
    return left + 1, right


def _loess_uniform(x, y, eval_x, q, degree, rho):
    """Vectorized path for lattice-aligned x and eval_x (the STL case)."""
    n = x.size
    h = x[1] - x[0]
    pos = np.rint((eval_x - x[0]) / h).astype(np.int64)
    if q >= n:
        dx = x[None, :] - eval_x[:, None]
        maxd = np.abs(dx).max(axis=1) * (q / n)
        w = _tricube(np.abs(dx) / np.where(maxd > 0, maxd, 1.0)[:, None])
        if rho is not None:
            w = w * rho[None, :]
        wy = np.broadcast_to(y, dx.shape)
        return _fit_window(dx, wy, w, maxd, degree)
    lo = np.clip(pos - q // 2, 0, n - q)
    xw = np.lib.stride_tricks.sliding_window_view(x, q)[lo]
    yw = np.lib.stride_tricks.sliding_window_view(y, q)[lo]
    dx = xw - eval_x[:, None]
    ad = np.abs(dx)
    maxd = ad.max(axis=1)
    w = _tricube(ad / np.where(maxd > 0, maxd, 1.0)[:, None])
    if rho is not None:
        w = w * np.lib.stride_tricks.sliding_window_view(rho, q)[lo]
    return _fit_window(dx, yw, w, maxd, degree)


def loess_fit(x, y, eval_x, q, degree=1, rho=None):
    """Tricube-weighted local polynomial regression.

    Fits a degree-``degree`` polynomial over the ``q`` nearest neighbours of
    each eval point (Cleveland weights; for q > n the max distance is
    inflated by q/n) and returns the fitted values.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    eval_x = np.ascontiguousarray(eval_x, dtype=np.float64)
    if rho is not None:
        rho = np.ascontiguousarray(rho, dtype=np.float64)
    n = x.size
    q = max(int(q), 1)

    if n >= 2 and eval_x.size >= 1:
        h = x[1] - x[0]
        if h > 0 and np.all(np.diff(x) == h):
            pos = (eval_x - x[0]) / h
            if np.all(pos == np.rint(pos)):
                return _loess_uniform(x, y, eval_x, q, degree, rho)

    out = np.empty(eval_x.size)
    for k in range(eval_x.size):
        x0 = eval_x[k]
        lo, hi = _window_bounds(x, x0, q)
        dx = x[lo:hi] - x0
        ad = np.abs(dx)
        maxd = ad.max()
        if q > n:
            maxd *= q / n
        w = _tricube(ad / maxd) if maxd > 0 else np.ones_like(ad)
        if rho is not None:
            w = w * rho[lo:hi]
        out[k] = _fit_window(dx, y[lo:hi], w, maxd, degree)
    return out


def natural_cubic(knot_x, knot_y, eval_x):
    """Natural cubic spline through the knots, evaluated at eval_x.

    Two knots degrade to linear interpolation, one knot to a constant.
    Points outside the knot range use the end-interval cubic.
    """
    t = np.ascontiguousarray(knot_x, dtype=np.float64)
    z = np.ascontiguousarray(knot_y, dtype=np.float64)
    xe = np.ascontiguousarray(eval_x, dtype=np.float64)
    m = t.size
    if m == 0:
        raise ValueError("spline requires at least one knot")
    if m == 1:
        return np.full(xe.size, z[0])
    if m == 2:
        s = (z[1] - z[0]) / (t[1] - t[0])
        return z[0] + s * (xe - t[0])

    h = np.diff(t)
    # Thomas solve for interior second derivatives, natural ends
    rhs = 6.0 * ((z[2:] - z[1:-1]) / h[1:] - (z[1:-1] - z[:-2]) / h[:-1])
    diag = 2.0 * (h[:-1] + h[1:])
    sub = h[1:-1].copy()
    k = m - 2
    c_prime = np.empty(k)
    d_prime = np.empty(k)
    c_prime[0] = sub[0] / diag[0] if k > 1 else 0.0
    d_prime[0] = rhs[0] / diag[0]
    for i in range(1, k):
        denom = diag[i] - sub[i - 1] * c_prime[i - 1]
        c_prime[i] = sub[i] / denom if i < k - 1 else 0.0
        d_prime[i] = (rhs[i] - sub[i - 1] * d_prime[i - 1]) / denom
    second = np.zeros(m)
    second[k] = d_prime[k - 1]
    for i in range(k - 2, -1, -1):
        second[i + 1] = d_prime[i] - c_prime[i] * second[i + 2]

    idx = np.clip(np.searchsorted(t, xe, side="right") - 1, 0, m - 2)
    hi_ = h[idx]
    a = t[idx + 1] - xe
    b = xe - t[idx]
    m0 = second[idx]
    m1 = second[idx + 1]
    return (m0 * a * a * a / (6.0 * hi_) + m1 * b * b * b / (6.0 * hi_)
            + (z[idx] / hi_ - m0 * hi_ / 6.0) * a
            + (z[idx + 1] / hi_ - m1 * hi_ / 6.0) * b)
