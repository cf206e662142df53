"""Pure numpy fallback for the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def pp_eval(breaks, coeffs, t):
    breaks = np.asarray(breaks, dtype=np.float64)
    coeffs = np.asarray(coeffs, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros(t.shape[0])
    npieces = coeffs.shape[0]
    if npieces == 0:
        return out
    inside = (t >= breaks[0]) & (t <= breaks[npieces])
    ti = t[inside]
    idx = np.clip(np.searchsorted(breaks, ti, side="right") - 1, 0, npieces - 1)
    s = ti - breaks[idx]
    acc = np.zeros_like(ti)
    for k in range(coeffs.shape[1] - 1, -1, -1):
        acc = acc * s + coeffs[idx, k]
    out[inside] = acc
    return out


def gl_panels(coeffs, origin, left, right, omega, sigma, nodes, weights):
    coeffs = np.asarray(coeffs, dtype=np.float64)
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    origin = np.asarray(origin, dtype=np.float64)
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    t = mid[:, None] + half[:, None] * np.asarray(nodes)[None, :]
    s = t - origin[:, None]
    acc = np.zeros_like(t)
    for k in range(coeffs.shape[1] - 1, -1, -1):
        acc = acc * s + coeffs[:, k][:, None]
    w = acc * np.asarray(weights)[None, :]
    if sigma > 0:
        w = w * np.exp(-0.5 * (t / sigma) ** 2) / (sigma * np.sqrt(2.0 * np.pi))
    re = half * np.sum(w * np.cos(omega * t), axis=1)
    im = half * np.sum(w * np.sin(omega * t), axis=1)
    return re, im


def mc_char_mean(samples, idx, val):
    samples = np.asarray(samples, dtype=np.float64)
    m = samples.shape[0]
    if m == 0:
        return 0.0, 0.0
    theta = samples[:, np.asarray(idx)] @ np.asarray(val, dtype=np.float64)
    return float(np.mean(np.cos(theta))), float(np.mean(np.sin(theta)))


def _shift_rows(c, h):
    c = np.array(c, dtype=np.float64, copy=True)
    d = c.shape[1] - 1
    for i in range(d):
        for j in range(d - 1, i - 1, -1):
            c[:, j] += h * c[:, j + 1]
    return c


def pp_canonicalize(b, c, clean_rel, break_tol, coef_tol):
    b = np.asarray(b, dtype=np.float64)
    if b.size > 1 and np.any(np.diff(b) <= 0):
        raise ValueError("breakpoints must be strictly increasing")
    if b.size < 2 or c.size == 0:
        return np.zeros(0), np.zeros((0, 1))
    c = np.array(c, dtype=np.float64, copy=True)
    scale = float(np.max(np.abs(c)))
    c[np.abs(c) <= clean_rel * scale] = 0.0
    keep = np.diff(b) > break_tol
    if not np.all(keep):
        b = np.concatenate([b[:-1][keep], b[-1:]])
        c = c[keep]
        if c.shape[0] == 0:
            return np.zeros(0), np.zeros((0, 1))
    if c.shape[0] > 1:
        shifted = _shift_rows(c[:-1], np.diff(b)[:-1])
        diff = np.abs(shifted - c[1:]).max(axis=1)
        mag = np.maximum(1.0, np.maximum(np.abs(shifted).max(axis=1), np.abs(c[1:]).max(axis=1)))
        keep = np.concatenate([[True], diff > coef_tol * mag])
        if not np.all(keep):
            b = np.concatenate([b[:-1][keep], b[-1:]])
            c = c[keep]
    nz = np.any(c != 0.0, axis=1)
    if not np.any(nz):
        return np.zeros(0), np.zeros((0, 1))
    first = int(np.argmax(nz))
    last = int(len(nz) - 1 - np.argmax(nz[::-1]))
    c = c[first:last + 1]
    b = b[first:last + 2]
    width = c.shape[1]
    while width > 1 and np.all(c[:, width - 1] == 0.0):
        width -= 1
    return np.array(b), np.ascontiguousarray(c[:, :width])


def _merge_breaks(arrays, lo, hi, tol):
    pts = np.sort(np.concatenate([np.asarray(a, dtype=np.float64) for a in arrays]))
    pts = pts[(pts >= lo - tol) & (pts <= hi + tol)]
    keep = []
    for x in pts:
        if not keep or x - keep[-1] > tol:
            keep.append(x)
    return np.asarray(keep, dtype=np.float64)


def _restrict(br, rows, nb):
    ncell = max(nb.size - 1, 0)
    out = np.zeros((ncell, rows.shape[1]), dtype=np.complex128)
    npieces = br.size - 1
    if ncell == 0 or npieces <= 0:
        return out
    mid = 0.5 * (nb[:-1] + nb[1:])
    idx = np.searchsorted(br, mid, side="right") - 1
    idx = np.minimum(idx, npieces - 1)
    ok = (mid >= br[0]) & (mid <= br[-1])
    if np.any(ok):
        out[ok] = _shift_rows_c(rows[idx[ok]], nb[:-1][ok] - br[idx[ok]])
    return out


def _shift_rows_c(c, h):
    c = np.array(c, dtype=np.complex128, copy=True)
    d = c.shape[1] - 1
    for i in range(d):
        for j in range(d - 1, i - 1, -1):
            c[:, j] += h * c[:, j + 1]
    return c


def env_mul(b1, c1, b2, c2, tol):
    lo, hi = max(b1[0], b2[0]), min(b1[-1], b2[-1])
    if hi - lo <= tol:
        return None
    nb = _merge_breaks([b1, b2], lo, hi, tol)
    if nb.size < 2:
        return None
    a, b = _restrict(b1, c1, nb), _restrict(b2, c2, nb)
    out = np.zeros((a.shape[0], a.shape[1] + b.shape[1] - 1), dtype=np.complex128)
    for i in range(a.shape[1]):
        out[:, i:i + b.shape[1]] += a[:, i:i + 1] * b
    return nb, out


def env_sum(pieces, tol):
    width = max([1] + [c.shape[1] for _, c in pieces])
    nb = _merge_breaks([b for b, _ in pieces] or [np.zeros(0)], -np.inf, np.inf, tol)
    if nb.size < 2:
        return np.zeros(0), np.zeros((0, width), dtype=np.complex128)
    acc = np.zeros((nb.size - 1, width), dtype=np.complex128)
    for b, c in pieces:
        r = _restrict(b, c, nb)
        acc[:, :r.shape[1]] += r
    return nb, acc
