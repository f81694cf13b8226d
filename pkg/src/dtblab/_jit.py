"""Compiled inner loops (numba).  Callers own argument validation."""

from __future__ import annotations

import math
import os

import numpy as np
from numba import config, njit, prange

# try OpenMP before TBB: an outdated TBB makes numba warn at first use
if "NUMBA_THREADING_LAYER" not in os.environ:
    config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]

# 4-point Gauss-Legendre on [-1, 1]; exact for the degree-7 shell integrands
_GL4_X = np.array([-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526])
_GL4_W = np.array([0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538])


@njit(cache=True)
def h_eps_scalar(kind, par, theta, eps):
    if kind == 0:
        return 0.0
    if kind == 1:
        return eps * par[0]
    if kind == 2:
        return par[1] * eps * math.cos(par[2] * theta / math.sqrt(eps))
    if kind == 3:
        s = theta / math.sqrt(eps)
        r, g = par[3], par[4]
        acc = 0.0
        for n in range(int(par[5]), int(par[6]) + 1):
            acc += r ** (-g * n) * math.sin(r**n * s)
        return eps * par[1] * acc
    s = (theta - par[7]) / math.sqrt(eps)
    acc = 0.0
    for n in range(int(par[6]) + 1):
        x = s * 2.0**n
        fl = math.floor(x)
        acc += (fl + (x - fl) ** par[4]) / 3.0**n
    return eps * acc


@njit(cache=True)
def aperture(u):
    if u <= -1.0 or u >= 1.0:
        return 0.0
    v = 1.0 - u * u
    return 1.09375 * v * v * v


@njit(cache=True)
def h_on_grid(kind, par, theta, eps, out):
    for i in range(theta.size):
        out[i] = h_eps_scalar(kind, par, theta[i], eps)


@njit(parallel=True, cache=True)
def shell_splat(alpha, eps, j0, cx, cy, R, theta, hv, dtheta, out):
    """Add the aperture-weighted shell integral to every sinogram entry.

    Polar cells of width `dtheta` at angles `theta` carry the radial
    segment [R, R + hv]; the radial integral is exact (4-point GL on the
    part inside the aperture band), the angular one is the midpoint rule.
    """
    nk, ncol = out.shape
    for k in prange(nk):
        ca = math.cos(alpha[k])
        sa = math.sin(alpha[k])
        c0 = ca * cx + sa * cy
        for i in range(theta.size):
            h = hv[i]
            if h == 0.0:
                continue
            lo = R if h > 0 else R + h
            hi = R + h if h > 0 else R
            sgn = 1.0 if h > 0 else -1.0
            cs = math.cos(theta[i] - alpha[k])
            pa = c0 + lo * cs
            pb = c0 + hi * cs
            pmin = min(pa, pb) - eps
            pmax = max(pa, pb) + eps
            jlo = int(math.ceil(pmin / eps)) + j0
            jhi = int(math.floor(pmax / eps)) + j0
            if jlo < 0:
                jlo = 0
            if jhi > ncol - 1:
                jhi = ncol - 1
            for col in range(jlo, jhi + 1):
                c = (col - j0) * eps - c0
                a, b = lo, hi
                if abs(cs) > 1e-14:
                    r1 = (c - eps) / cs
                    r2 = (c + eps) / cs
                    if r1 > r2:
                        r1, r2 = r2, r1
                    if r1 > a:
                        a = r1
                    if r2 < b:
                        b = r2
                elif abs(c) >= eps:
                    continue
                if b <= a:
                    continue
                half = 0.5 * (b - a)
                mid = 0.5 * (b + a)
                acc = 0.0
                for q in range(4):
                    rho = mid + half * _GL4_X[q]
                    acc += _GL4_W[q] * aperture((c - rho * cs) / eps) * rho
                out[k, col] += sgn * dtheta / eps * acc * half


@njit(parallel=True, cache=True)
def filter_rows(fhat, col_lo, col_hi, j0, table, n_min, os, m0, out):
    """out[k, m] = sum_col table[(m0[k] + m) - os * (col - j0) - n_min] * fhat[k, col]."""
    nk, nq = out.shape
    for k in prange(nk):
        for m in range(nq):
            base = m0[k] + m - n_min + os * j0
            acc = 0.0
            for col in range(col_lo[k], col_hi[k]):
                acc += table[base - os * col] * fhat[k, col]
            out[k, m] = acc


@njit(cache=True)
def _lagrange4(row, st, x):
    """Cubic through row[st:st+4] at local abscissa x (nodes 0, 1, 2, 3)."""
    return (-row[st] * (x - 1) * (x - 2) * (x - 3) / 6
            + row[st + 1] * x * (x - 2) * (x - 3) / 2
            - row[st + 2] * x * (x - 1) * (x - 3) / 2
            + row[st + 3] * x * (x - 1) * (x - 2) / 6)


@njit(cache=True)
def _lagrange4_row(row, u):
    st = int(math.floor(u)) - 1
    if st < 0:
        st = 0
    if st > row.size - 4:
        st = row.size - 4
    return _lagrange4(row, st, u - st)


@njit(parallel=True, cache=True)
def log_coefficients(fhat, j0, c1, c2, b0, n_first, a1, a2):
    """a[k, i] = sum_b c[b] fhat(k, j = n - b) for integers n = n_first[k] + i."""
    nk, ncol = fhat.shape
    nb = c1.size
    for k in prange(nk):
        for i in range(a1.shape[1]):
            n = n_first[k] + i
            s1 = 0.0
            s2 = 0.0
            for ib in range(nb):
                col = n - (b0 + ib) + j0
                if 0 <= col < ncol:
                    s1 += c1[ib] * fhat[k, col]
                    s2 += c2[ib] * fhat[k, col]
            a1[k, i] = s1
            a2[k, i] = s2


@njit(cache=True)
def _log_part(a1, a2, y):
    if y == 0.0:
        return 0.0
    return y * (a1 + a2 * y) * math.log(abs(y))


@njit(parallel=True, cache=True)
def remove_log_part(Q, os, m0, n_first, a1, a2, out):
    """Subtract the two endpoint log terms of each unit interval from Q.

    Inside ``[n, n + 1]`` what is left is analytic; at integer nodes both
    terms vanish, so the result is one consistent table.
    """
    nk, nq = Q.shape
    for k in prange(nk):
        for m in range(nq):
            mm = m0[k] + m
            n = mm // os
            r = mm - n * os
            if r == 0:
                out[k, m] = Q[k, m]
                continue
            u = r / os
            i = n - n_first[k]
            out[k, m] = Q[k, m] - _log_part(a1[k, i], a2[k, i], u) - _log_part(a1[k, i + 1], a2[k, i + 1], u - 1.0)


@njit(cache=True)
def _lagrange6(row, st, x):
    """Quintic through row[st:st+6] at local abscissa x (nodes 0..5)."""
    d0 = x
    d1 = x - 1
    d2 = x - 2
    d3 = x - 3
    d4 = x - 4
    d5 = x - 5
    return (-row[st] * (d1 * d2 * d3 * d4 * d5 / 120)
            + row[st + 1] * (d0 * d2 * d3 * d4 * d5 / 24)
            - row[st + 2] * (d0 * d1 * d3 * d4 * d5 / 12)
            + row[st + 3] * (d0 * d1 * d2 * d4 * d5 / 12)
            - row[st + 4] * (d0 * d1 * d2 * d3 * d5 / 24)
            + row[st + 5] * (d0 * d1 * d2 * d3 * d4 / 120))


@njit(cache=True)
def read_q(Qr, os, m0k, nfk, a1k, a2k, q):
    """Q(q) from the smooth remainder plus the exact endpoint log terms.

    The remainder is read with a 6-point stencil kept inside the unit
    interval, since its nearest singularities are one unit away.
    """
    n = int(math.floor(q))
    u = q - n
    base = n * os - m0k
    pos = u * os
    st = int(pos) - 2
    if st < 0:
        st = 0
    if st > os - 5:
        st = os - 5
    v = _lagrange6(Qr, base + st, pos - st)
    i = n - nfk
    return v + _log_part(a1k[i], a2k[i], u) + _log_part(a1k[i + 1], a2k[i + 1], u - 1.0)


@njit(parallel=True, cache=True)
def backproject(px, py, cosa, sina, inv_eps, os, m0, n_first, Qr, a1, a2, scale, out):
    """out[i] = scale * sum_k Q_k(alpha_k . x_i / eps)."""
    nk = cosa.size
    for i in prange(px.size):
        acc = 0.0
        for k in range(nk):
            q = (cosa[k] * px[i] + sina[k] * py[i]) * inv_eps
            acc += read_q(Qr[k], os, m0[k], n_first[k], a1[k], a2[k], q)
        out[i] = scale * acc


@njit(cache=True)
def _table_eval(samples, step, x):
    u = x / step
    if u >= samples.size - 1:
        return 0.0
    return _lagrange4_row(samples, u)


@njit(cache=True)
def _inside(kind, par, cx, cy, R, eps, x, y):
    dx = x - cx
    dy = y - cy
    rho = math.sqrt(dx * dx + dy * dy)
    return rho <= R + h_eps_scalar(kind, par, math.atan2(dy, dx), eps)


@njit(cache=True)
def lattice_value(kind, par, cx, cy, R, eps, f_in, f_out, shell, x, y):
    ins = _inside(kind, par, cx, cy, R, eps, x, y)
    if shell:
        dx = x - cx
        dy = y - cy
        disc = math.sqrt(dx * dx + dy * dy) <= R
        return (f_in - f_out) * ((1.0 if ins else 0.0) - (1.0 if disc else 0.0))
    return f_in if ins else f_out


@njit(parallel=True, cache=True)
def kernel_convolve(px, py, x0, y0, step, nx, ny, kind, par, cx, cy, R, eps,
                    f_in, f_out, shell, ksamples, kstep, support, out):
    """Midpoint tensor-grid value of (1/eps^2) int K(|x - y|/eps) f(y) dy.

    Lattice cell centers are ``(x0 + (i + 1/2) step, y0 + (j + 1/2) step)``;
    phantom values are computed once per cell on demand.
    """
    cache = np.full((nx, ny), np.nan)
    reach = support * eps
    w = step * step / (eps * eps)
    # phantom values first (parallel), then the weighted sums
    need = np.zeros((nx, ny), dtype=np.bool_)
    for n in range(px.size):
        i0 = max(int(math.floor((px[n] - reach - x0) / step)), 0)
        i1 = min(int(math.ceil((px[n] + reach - x0) / step)), nx - 1)
        j0 = max(int(math.floor((py[n] - reach - y0) / step)), 0)
        j1 = min(int(math.ceil((py[n] + reach - y0) / step)), ny - 1)
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                need[i, j] = True
    for i in prange(nx):
        xi = x0 + (i + 0.5) * step
        for j in range(ny):
            if need[i, j]:
                cache[i, j] = lattice_value(kind, par, cx, cy, R, eps, f_in, f_out, shell,
                                            xi, y0 + (j + 0.5) * step)
    for n in prange(px.size):
        i0 = max(int(math.floor((px[n] - reach - x0) / step)), 0)
        i1 = min(int(math.ceil((px[n] + reach - x0) / step)), nx - 1)
        j0 = max(int(math.floor((py[n] - reach - y0) / step)), 0)
        j1 = min(int(math.ceil((py[n] + reach - y0) / step)), ny - 1)
        acc = 0.0
        for i in range(i0, i1 + 1):
            dx = x0 + (i + 0.5) * step - px[n]
            for j in range(j0, j1 + 1):
                dy = y0 + (j + 0.5) * step - py[n]
                r = math.sqrt(dx * dx + dy * dy) / eps
                if r < support:
                    v = cache[i, j]
                    if v != 0.0:
                        acc += _table_eval(ksamples, kstep, r) * v
        out[n] = acc * w


# 8-point Gauss-Legendre for the radial K integrals
_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


@njit(parallel=True, cache=True)
def shell_convolve(px, py, cx, cy, R, eps, theta0, dtheta, hv, ksamples, kstep, support, out):
    """(1/eps^2) int K(|x - y| / eps) s(y) dy for the signed shell s.

    Polar cells ``theta0 + (i + 1/2) dtheta`` carry the radial segment
    [R, R + hv[i]]; per cell the radial integral, clipped to the kernel
    support, uses 8-point Gauss-Legendre.
    """
    n = hv.size
    reach = support * eps
    for p in prange(px.size):
        dx = px[p] - cx
        dy = py[p] - cy
        d = math.sqrt(dx * dx + dy * dy)
        tx = math.atan2(dy, dx)
        half = math.pi if d <= reach else math.asin(reach / d)
        i0 = int(math.floor((tx - half - theta0) / dtheta))
        i1 = int(math.ceil((tx + half - theta0) / dtheta))
        if i1 - i0 >= n:
            i0 = 0
            i1 = n - 1
        acc = 0.0
        for ii in range(i0, i1 + 1):
            i = ii % n
            h = hv[i]
            if h == 0.0:
                continue
            c = math.cos(theta0 + (ii + 0.5) * dtheta - tx)
            disc = reach * reach - d * d * (1.0 - c * c)
            if disc <= 0.0:
                continue
            sq = math.sqrt(disc)
            lo = R if h > 0 else R + h
            hi = R + h if h > 0 else R
            a = max(lo, d * c - sq)
            b = min(hi, d * c + sq)
            if b <= a:
                continue
            mid = 0.5 * (a + b)
            hw = 0.5 * (b - a)
            s = 0.0
            for q in range(8):
                rho = mid + hw * _GL8_X[q]
                r = math.sqrt(max(d * d + rho * rho - 2.0 * d * rho * c, 0.0)) / eps
                s += _GL8_W[q] * _table_eval(ksamples, kstep, r) * rho
            acc += (1.0 if h > 0 else -1.0) * s * hw
        out[p] = acc * dtheta / (eps * eps)
