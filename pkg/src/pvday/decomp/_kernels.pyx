# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: tricube local regression and natural cubic splines.

Same arithmetic as the pure-numpy twin in ``_kernels_py``; selected via
``pvday.decomp._backend`` when the extension built.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs

cnp.import_array()

IMPL = "cython"

cdef double SINGULAR_REL = 1e-12


cdef inline double _tricube(double u) nogil:
    cdef double w = 1.0 - u * u * u
    if w <= 0.0:
        return 0.0
    return w * w * w


cdef double _fit_point(const double[::1] x, const double[::1] y,
                       const double[::1] rho, bint has_rho,
                       double x0, int lo, int hi, double maxd, int degree) nogil:
    """Weighted polynomial fit centered at x0; returns the value at x0.

    Abscissae are rescaled by the window radius and the fit recentred at
    the weighted mean, keeping the normal equations well conditioned even
    for one-sided windows.
    """
    cdef Py_ssize_t i
    cdef double w, u, v, v2
    cdef double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0
    cdef double t0 = 0, t1 = 0, t2 = 0
    cdef double su = 0, cu, scale
    cdef double det, dscale, a, b, c, mean
    cdef Py_ssize_t cnt = hi - lo

    scale = maxd if maxd > 0.0 else 1.0
    for i in range(lo, hi):
        u = (x[i] - x0) / scale
        if maxd > 0.0:
            w = _tricube(fabs(u))
        else:
            w = 1.0
        if has_rho:
            w *= rho[i]
        s0 += w
        su += w * u
        t0 += w * y[i]

    if s0 > 0.0:
        mean = t0 / s0
    else:
        # all-zero weights degenerate to a plain mean
        mean = 0.0
        for i in range(lo, hi):
            mean += y[i]
        mean /= cnt
        return mean
    if degree == 0:
        return mean

    cu = su / s0
    for i in range(lo, hi):
        u = (x[i] - x0) / scale
        if maxd > 0.0:
            w = _tricube(fabs(u))
        else:
            w = 1.0
        if has_rho:
            w *= rho[i]
        v = u - cu
        s1 += w * v
        t1 += w * v * y[i]
        v2 = v * v
        s2 += w * v2
        if degree == 2:
            s3 += w * v2 * v
            s4 += w * v2 * v2
            t2 += w * v2 * y[i]

    cdef double r0, r1, r2, c00, c01, c02, c11, c12, c22, da, db, dc
    if degree == 1:
        det = s0 * s2 - s1 * s1
        if det > SINGULAR_REL * s0 * s2:
            a = (s2 * t0 - s1 * t1) / det
            b = (s0 * t1 - s1 * t0) / det
            # one iterative-refinement step against the normal equations
            r0 = t0 - (s0 * a + s1 * b)
            r1 = t1 - (s1 * a + s2 * b)
            a += (s2 * r0 - s1 * r1) / det
            b += (s0 * r1 - s1 * r0) / det
            return a - b * cu
        return mean
    det = s0 * (s2 * s4 - s3 * s3) - s1 * (s1 * s4 - s3 * s2) + s2 * (s1 * s3 - s2 * s2)
    dscale = s0 * s2 * s4
    if dscale > 0.0 and det > SINGULAR_REL * dscale:
        c00 = s2 * s4 - s3 * s3
        c01 = s1 * s4 - s3 * s2
        c02 = s1 * s3 - s2 * s2
        c11 = s0 * s4 - s2 * s2
        c12 = s0 * s3 - s1 * s2
        c22 = s0 * s2 - s1 * s1
        a = (t0 * c00 - t1 * c01 + t2 * c02) / det
        b = (-t0 * c01 + t1 * c11 - t2 * c12) / det
        c = (t0 * c02 - t1 * c12 + t2 * c22) / det
        r0 = t0 - (s0 * a + s1 * b + s2 * c)
        r1 = t1 - (s1 * a + s2 * b + s3 * c)
        r2 = t2 - (s2 * a + s3 * b + s4 * c)
        da = (r0 * c00 - r1 * c01 + r2 * c02) / det
        db = (-r0 * c01 + r1 * c11 - r2 * c12) / det
        dc = (r0 * c02 - r1 * c12 + r2 * c22) / det
        a += da
        b += db
        c += dc
        return a - b * cu + c * cu * cu
    return mean


def loess_fit(x, y, eval_x, q, degree=1, rho=None):
    """Tricube-weighted local polynomial regression (compiled path).

    Fits a degree-``degree`` polynomial over the ``q`` nearest neighbours of
    each eval point (Cleveland weights; for q > n the max distance is
    inflated by q/n) and returns the fitted values.
    """
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] ev = np.ascontiguousarray(eval_x, dtype=np.float64)
    cdef const double[::1] rv
    cdef bint has_rho = rho is not None
    if has_rho:
        rv = np.ascontiguousarray(rho, dtype=np.float64)
    else:
        rv = xv  # placeholder, unused
    cdef int qi = max(int(q), 1)
    cdef int deg = int(degree)
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t m = ev.shape[0]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr

    cdef Py_ssize_t k, left, right, j, lo_b, hi_b, mid_b
    cdef double x0, d_left, d_right, maxd

    with nogil:
        for k in range(m):
            x0 = ev[k]
            if qi >= n:
                left = -1
                right = n
            else:
                # contiguous q-nearest window; left wins ties
                lo_b = 0
                hi_b = n
                while lo_b < hi_b:
                    mid_b = (lo_b + hi_b) // 2
                    if xv[mid_b] < x0:
                        lo_b = mid_b + 1
                    else:
                        hi_b = mid_b
                right = lo_b
                left = right - 1
                for j in range(qi):
                    d_left = (x0 - xv[left]) if left >= 0 else INFINITY
                    d_right = (xv[right] - x0) if right < n else INFINITY
                    if d_left <= d_right:
                        left -= 1
                    else:
                        right += 1
            maxd = fabs(xv[left + 1] - x0)
            if fabs(xv[right - 1] - x0) > maxd:
                maxd = fabs(xv[right - 1] - x0)
            if qi > n:
                maxd *= (<double> qi) / (<double> n)
            out[k] = _fit_point(xv, yv, rv, has_rho, x0, left + 1, right, maxd, deg)
    return out_arr


def natural_cubic(knot_x, knot_y, eval_x):
    """Natural cubic spline through the knots, evaluated at eval_x.

    Two knots degrade to linear interpolation, one knot to a constant.
    Points outside the knot range use the end-interval cubic.
    """
    cdef const double[::1] t = np.ascontiguousarray(knot_x, dtype=np.float64)
    cdef const double[::1] z = np.ascontiguousarray(knot_y, dtype=np.float64)
    cdef const double[::1] xe = np.ascontiguousarray(eval_x, dtype=np.float64)
    cdef Py_ssize_t m = t.shape[0]
    cdef Py_ssize_t ne = xe.shape[0]
    out_arr = np.empty(ne, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, k, lo, hi, mid
    cdef double s, denom, hi_, a, b, m0, m1

    if m == 0:
        raise ValueError("spline requires at least one knot")
    if m == 1:
        out_arr[:] = z[0]
        return out_arr
    if m == 2:
        s = (z[1] - z[0]) / (t[1] - t[0])
        for i in range(ne):
            out[i] = z[0] + s * (xe[i] - t[0])
        return out_arr

    cdef Py_ssize_t kk = m - 2
    h_arr = np.empty(m - 1, dtype=np.float64)
    cp_arr = np.empty(kk, dtype=np.float64)
    dp_arr = np.empty(kk, dtype=np.float64)
    sec_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] h = h_arr
    cdef double[::1] c_prime = cp_arr
    cdef double[::1] d_prime = dp_arr
    cdef double[::1] second = sec_arr

    with nogil:
        for i in range(m - 1):
            h[i] = t[i + 1] - t[i]
        # Thomas solve for interior second derivatives, natural ends
        denom = 2.0 * (h[0] + h[1])
        c_prime[0] = h[1] / denom if kk > 1 else 0.0
        d_prime[0] = 6.0 * ((z[2] - z[1]) / h[1] - (z[1] - z[0]) / h[0]) / denom
        for i in range(1, kk):
            denom = 2.0 * (h[i] + h[i + 1]) - h[i] * c_prime[i - 1]
            c_prime[i] = h[i + 1] / denom if i < kk - 1 else 0.0
            d_prime[i] = (6.0 * ((z[i + 2] - z[i + 1]) / h[i + 1] - (z[i + 1] - z[i]) / h[i])
                          - h[i] * d_prime[i - 1]) / denom
        second[kk] = d_prime[kk - 1]
        for i in range(kk - 2, -1, -1):
            second[i + 1] = d_prime[i] - c_prime[i] * second[i + 2]

        for k in range(ne):
            # rightmost interval start with t[lo] <= xe[k], clipped to ends
            lo = 0
            hi = m
            while lo < hi:
                mid = (lo + hi) // 2
                if t[mid] <= xe[k]:
                    lo = mid + 1
                else:
                    hi = mid
            lo = lo - 1
            if lo < 0:
                lo = 0
            if lo > m - 2:
                lo = m - 2
            hi_ = h[lo]
            a = t[lo + 1] - xe[k]
            b = xe[k] - t[lo]
            m0 = second[lo]
            m1 = second[lo + 1]
            out[k] = (m0 * a * a * a / (6.0 * hi_) + m1 * b * b * b / (6.0 * hi_)
                      + (z[lo] / hi_ - m0 * hi_ / 6.0) * a
                      + (z[lo + 1] / hi_ - m1 * hi_ / 6.0) * b)
    return out_arr
