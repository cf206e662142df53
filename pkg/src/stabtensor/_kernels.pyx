# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: piecewise evaluation, Gauss-Legendre panels, MC means.

Mirrors ``_kernels_py`` exactly in signature and semantics.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, exp, sqrt, M_PI

cnp.import_array()


def pp_eval(const double[::1] breaks, const double[:, ::1] coeffs, const double[::1] t):
    """Evaluate a piecewise polynomial (local coordinates) at ``t``; 0 off-support."""
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t npieces = coeffs.shape[0]
    cdef Py_ssize_t width = coeffs.shape[1]
    cdef Py_ssize_t i, k, lo, hi, mid
    cdef double x, s, acc
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] res = out
    if npieces == 0:
        return out
    for i in range(n):
        x = t[i]
        if x < breaks[0] or x > breaks[npieces]:
            continue
        lo = 0
        hi = npieces
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if breaks[mid] <= x:
                lo = mid
            else:
                hi = mid
        s = x - breaks[lo]
        acc = 0.0
        for k in range(width - 1, -1, -1):
            acc = acc * s + coeffs[lo, k]
        res[i] = acc
    return out


def gl_panels(const double[:, ::1] coeffs, const double[::1] origin,
              const double[::1] left, const double[::1] right,
              double omega, double sigma,
              const double[::1] nodes, const double[::1] weights):
    """Per-panel Gauss-Legendre sums of p(t - origin) e^{i omega t} w(t).

    ``w`` is the centred normal density with scale ``sigma`` when sigma > 0,
    Lebesgue measure otherwise.  Returns (real, imag) arrays per panel.
    """
    cdef Py_ssize_t npan = coeffs.shape[0]
    cdef Py_ssize_t width = coeffs.shape[1]
    cdef Py_ssize_t nn = nodes.shape[0]
    cdef Py_ssize_t p, j, k
    cdef double half, mid, t, s, acc, wt, sre, sim, norm
    re_out = np.zeros(npan, dtype=np.float64)
    im_out = np.zeros(npan, dtype=np.float64)
    cdef double[::1] re = re_out
    cdef double[::1] im = im_out
    norm = 0.0
    if sigma > 0:
        norm = 1.0 / (sigma * sqrt(2.0 * M_PI))
    for p in range(npan):
        half = 0.5 * (right[p] - left[p])
        mid = 0.5 * (right[p] + left[p])
        sre = 0.0
        sim = 0.0
        for j in range(nn):
            t = mid + half * nodes[j]
            s = t - origin[p]
            acc = 0.0
            for k in range(width - 1, -1, -1):
                acc = acc * s + coeffs[p, k]
            wt = weights[j] * acc
            if sigma > 0:
                wt = wt * norm * exp(-0.5 * (t / sigma) * (t / sigma))
            sre += wt * cos(omega * t)
            sim += wt * sin(omega * t)
        re[p] = half * sre
        im[p] = half * sim
    return re_out, im_out


def mc_char_mean(const double[:, ::1] samples, const long[::1] idx, const double[::1] val):
    """Mean of exp(i <x, Y>) over the rows Y, x given sparsely by (idx, val)."""
    cdef Py_ssize_t m = samples.shape[0]
    cdef Py_ssize_t nz = idx.shape[0]
    cdef Py_ssize_t r, j
    cdef double theta, sre = 0.0, sim = 0.0
    for r in range(m):
        theta = 0.0
        for j in range(nz):
            theta += samples[r, idx[j]] * val[j]
        sre += cos(theta)
        sim += sin(theta)
    if m == 0:
        return 0.0, 0.0
    return sre / m, sim / m


def pp_canonicalize(const double[::1] b, const double[:, ::1] c, double clean_rel, double break_tol,
                    double coef_tol):
    """Canonical (breaks, coeffs): cleaned, thin cells dropped, equal neighbours merged, ends trimmed."""
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t w = c.shape[1]
    cdef Py_ssize_t i, j, k, r, nk, nm, first, last, width
    cdef double scale = 0.0, h, d, mag, diff, v
    for i in range(b.shape[0] - 1):
        if b[i + 1] <= b[i]:
            raise ValueError("breakpoints must be strictly increasing")
    if n == 0 or w == 0 or b.shape[0] < 2:
        return np.zeros(0), np.zeros((0, 1))
    for i in range(n):
        for k in range(w):
            if abs(c[i, k]) > scale:
                scale = abs(c[i, k])
    work_arr = np.empty((n, w), dtype=np.float64)
    cdef double[:, ::1] cw = work_arr
    for i in range(n):
        for k in range(w):
            v = c[i, k]
            cw[i, k] = 0.0 if abs(v) <= clean_rel * scale else v
    # rows surviving the width filter
    kept_arr = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] kept = kept_arr
    nk = 0
    for i in range(n):
        if b[i + 1] - b[i] > break_tol:
            kept[nk] = i
            nk += 1
    if nk == 0:
        return np.zeros(0), np.zeros((0, 1))
    # merge: row kept[r] continues kept[r-1] when the shifted rows agree
    merged_arr = np.empty(nk, dtype=np.intp)
    cdef Py_ssize_t[::1] merged = merged_arr
    tmp_arr = np.empty(w, dtype=np.float64)
    cdef double[::1] tmp = tmp_arr
    merged[0] = 0
    nm = 1
    for r in range(1, nk):
        h = b[kept[r]] - b[kept[r - 1]]
        for k in range(w):
            tmp[k] = cw[kept[r - 1], k]
        for i in range(w - 1):
            for j in range(w - 2, i - 1, -1):
                tmp[j] += h * tmp[j + 1]
        diff = 0.0
        mag = 1.0
        for k in range(w):
            d = abs(tmp[k] - cw[kept[r], k])
            if d > diff:
                diff = d
            if abs(tmp[k]) > mag:
                mag = abs(tmp[k])
            if abs(cw[kept[r], k]) > mag:
                mag = abs(cw[kept[r], k])
        if diff > coef_tol * mag:
            merged[nm] = r
            nm += 1
    # trim zero rows at both ends
    first = -1
    last = -1
    for r in range(nm):
        for k in range(w):
            if cw[kept[merged[r]], k] != 0.0:
                if first < 0:
                    first = r
                last = r
                break
    if first < 0:
        return np.zeros(0), np.zeros((0, 1))
    width = 1
    for r in range(first, last + 1):
        for k in range(w - 1, 0, -1):
            if cw[kept[merged[r]], k] != 0.0:
                if k + 1 > width:
                    width = k + 1
                break
    out_b = np.empty(last - first + 2, dtype=np.float64)
    out_c = np.empty((last - first + 1, width), dtype=np.float64)
    cdef double[::1] ob = out_b
    cdef double[:, ::1] oc = out_c
    for r in range(first, last + 1):
        ob[r - first] = b[kept[merged[r]]]
        for k in range(width):
            oc[r - first, k] = cw[kept[merged[r]], k]
    ob[last - first + 1] = b[kept[merged[last + 1]]] if last + 1 < nm else b[n]
    return out_b, out_c


cdef Py_ssize_t _merge_breaks(const double[::1] a, const double[::1] b, double lo, double hi,
                              double tol, double[::1] out):
    """Sorted union of a and b clipped to [lo, hi], points closer than tol merged."""
    cdef Py_ssize_t i = 0, j = 0, n = 0
    cdef double x
    while i < a.shape[0] or j < b.shape[0]:
        if j >= b.shape[0] or (i < a.shape[0] and a[i] <= b[j]):
            x = a[i]
            i += 1
        else:
            x = b[j]
            j += 1
        if x < lo - tol or x > hi + tol:
            continue
        if n == 0 or x - out[n - 1] > tol:
            out[n] = x
            n += 1
    return n


cdef void _restrict_into(const double[::1] br, const double complex[:, ::1] rows, const double[::1] nb,
                         Py_ssize_t ncell, double complex[:, ::1] out) noexcept:
    """Re-expand piecewise rows on the first ncell cells of nb (zero off-support)."""
    cdef Py_ssize_t npieces = br.shape[0] - 1
    cdef Py_ssize_t w = rows.shape[1]
    cdef Py_ssize_t c, p = 0, i, j, k
    cdef double mid, h
    for c in range(ncell):
        for k in range(out.shape[1]):
            out[c, k] = 0
        if npieces <= 0:
            continue
        mid = 0.5 * (nb[c] + nb[c + 1])
        if mid < br[0] or mid > br[npieces]:
            continue
        while p + 1 < npieces and br[p + 1] <= mid:
            p += 1
        h = nb[c] - br[p]
        for k in range(w):
            out[c, k] = rows[p, k]
        if h != 0.0:
            for i in range(w - 1):
                for j in range(w - 2, i - 1, -1):
                    out[c, j] = out[c, j] + h * out[c, j + 1]


def env_mul(const double[::1] b1, const double complex[:, ::1] c1,
            const double[::1] b2, const double complex[:, ::1] c2, double tol):
    """Product of two complex piecewise envelopes on their common grid; None if supports miss."""
    cdef double lo = max(b1[0], b2[0])
    cdef double hi = min(b1[b1.shape[0] - 1], b2[b2.shape[0] - 1])
    if hi - lo <= tol:
        return None
    grid = np.empty(b1.shape[0] + b2.shape[0], dtype=np.float64)
    cdef double[::1] g = grid
    cdef Py_ssize_t n = _merge_breaks(b1, b2, lo, hi, tol, g)
    cdef Py_ssize_t ncell = n - 1
    if ncell <= 0:
        return None
    cdef Py_ssize_t w1 = c1.shape[1], w2 = c2.shape[1], r, i, j
    ra = np.empty((ncell, w1), dtype=np.complex128)
    rb = np.empty((ncell, w2), dtype=np.complex128)
    cdef double complex[:, ::1] A = ra
    cdef double complex[:, ::1] B = rb
    _restrict_into(b1, c1, g, ncell, A)
    _restrict_into(b2, c2, g, ncell, B)
    out = np.zeros((ncell, w1 + w2 - 1), dtype=np.complex128)
    cdef double complex[:, ::1] O = out
    for r in range(ncell):
        for i in range(w1):
            for j in range(w2):
                O[r, i + j] = O[r, i + j] + A[r, i] * B[r, j]
    return grid[:n].copy(), out


def env_sum(list pieces, double tol):
    """Sum of complex piecewise envelopes [(breaks, rows), ...] on the union grid."""
    cdef Py_ssize_t total = 0, width = 1, n, m, r, k
    cdef const double[::1] br
    cdef const double complex[:, ::1] rows
    for b, c in pieces:
        total += b.shape[0]
        if c.shape[1] > width:
            width = c.shape[1]
    grid = np.empty(0, dtype=np.float64)
    empty = np.empty(0, dtype=np.float64)
    cdef double[::1] g
    for b, c in pieces:
        nxt = np.empty(grid.shape[0] + b.shape[0], dtype=np.float64)
        g = nxt
        m = _merge_breaks(grid, b, -1e308, 1e308, tol, g)
        grid = nxt[:m]
    n = grid.shape[0]
    if n < 2:
        return empty, np.zeros((0, width), dtype=np.complex128)
    g = grid
    acc = np.zeros((n - 1, width), dtype=np.complex128)
    cdef double complex[:, ::1] A = acc
    cdef double complex[:, ::1] T
    for b, c in pieces:
        br = b
        rows = c
        tmp = np.empty((n - 1, rows.shape[1]), dtype=np.complex128)
        T = tmp
        _restrict_into(br, rows, g, n - 1, T)
        for r in range(n - 1):
            for k in range(rows.shape[1]):
                A[r, k] = A[r, k] + T[r, k]
    return np.ascontiguousarray(grid), acc
