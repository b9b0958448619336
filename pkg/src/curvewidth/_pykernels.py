"""Numpy implementations of the compiled kernels.

Same signatures and results as ``_ckernels``; rows are processed in blocks so
the intermediate chord matrices stay small.
"""
import numpy as np

_BLOCK = 1 << 20  # target entries per intermediate matrix


def _chords(kind, P, C):
    diff = P[:, None, :] - C[None, :, :]
    sq = diff * diff
    if kind == 2:
        return sq[..., 1:].sum(axis=-1) - sq[..., 0]
    return sq.sum(axis=-1)


def _rows(m, n):
    step = max(1, _BLOCK // max(n, 1))
    for lo in range(0, m, step):
        yield lo, min(m, lo + step)


def chord_min(kind, P, C, threads=1):
    out = np.empty(P.shape[0])
    for lo, hi in _rows(P.shape[0], C.shape[0]):
        out[lo:hi] = _chords(kind, P[lo:hi], C).min(axis=1)
    return out


def chord_max(kind, P, C, threads=1):
    out = np.empty(P.shape[0])
    for lo, hi in _rows(P.shape[0], C.shape[0]):
        out[lo:hi] = _chords(kind, P[lo:hi], C).max(axis=1)
    return out


def chord_pair_max(kind, P, threads=1):
    m = P.shape[0]
    vals = np.full(m, -np.inf)
    args = np.full(m, -1, dtype=np.int64)
    for lo, hi in _rows(m, m):
        Q = _chords(kind, P[lo:hi], P)
        # only pairs i < j count, matching the compiled loop
        cols = np.arange(m)[None, :]
        Q[cols <= np.arange(lo, hi)[:, None]] = -np.inf
        if m:
            j = Q.argmax(axis=1)
            vals[lo:hi] = Q[np.arange(hi - lo), j]
            args[lo:hi] = np.where(np.isfinite(vals[lo:hi]), j, -1)
    return vals, args


def ball_exit(kind, z, U, C, radius, threads=1):
    out = np.empty(U.shape[0])
    args = np.empty(U.shape[0], dtype=np.int64)
    for lo, hi in _rows(U.shape[0], C.shape[0]):
        u = U[lo:hi]
        if kind == 0:
            w = z[None, :] - C
            b = u @ w.T
            cc = (w * w).sum(axis=1) - radius * radius
            t = -b + np.sqrt(np.maximum(b * b - cc[None, :], 0.0))
        elif kind == 1:
            a = (C @ z)[None, :]
            b = u @ C.T
            amp = np.sqrt(a * a + b * b)
            t = np.arctan2(b, a) + np.arccos(np.minimum(np.cos(radius) / amp, 1.0))
        else:
            J = np.ones(z.shape[0])
            J[1:] = -1.0
            a = (C @ (J * z))[None, :]
            b = u @ (J[:, None] * C.T)
            ch = np.cosh(radius)
            disc = np.maximum(ch * ch - a * a + b * b, 0.0)
            t = np.log((ch + np.sqrt(disc)) / (a + b))
        j = t.argmin(axis=1)
        out[lo:hi] = np.maximum(t[np.arange(hi - lo), j], 0.0)
        args[lo:hi] = j
    return out, args
