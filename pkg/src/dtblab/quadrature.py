"""Gauss-Legendre helpers shared by the kernel and forward modules."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def fixed_panels(f, breaks, n=16):
    """Composite Gauss-Legendre rule with `n` nodes on every panel.

    `breaks` may be 1D (shared panels) or 2D with shape (m, nbreaks) for
    a batch of m integrals whose panels differ; `f` must then accept an
    array of shape (m, k) and return the same shape.
    """
    x, w = gauss_legendre(n)
    b = np.asarray(breaks, dtype=float)
    lo, hi = b[..., :-1], b[..., 1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[..., None] + half[..., None] * x
    vals = f(nodes.reshape(*b.shape[:-1], -1)).reshape(nodes.shape)
    return np.sum(vals * (w * half[..., None]), axis=(-1, -2))


def adaptive_panels(f, breaks, n=16, tol=1e-10, max_splits=10):
    """Composite Gauss-Legendre integral refined by panel halving.

    Every panel is bisected until two successive refinements differ by
    less than `tol` (absolute, elementwise for batched input).
    """
    b = np.asarray(breaks, dtype=float)
    prev = fixed_panels(f, b, n)
    for _ in range(max_splits):
        mids = 0.5 * (b[..., :-1] + b[..., 1:])
        nb = np.empty(b.shape[:-1] + (2 * b.shape[-1] - 1,))
        nb[..., 0::2] = b
        nb[..., 1::2] = mids
        b = nb
        cur = fixed_panels(f, b, n)
        if np.all(np.abs(cur - prev) < tol):
            return cur
        prev = cur
    raise RuntimeError("quadrature did not reach the requested tolerance")
