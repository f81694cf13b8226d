"""One-dimensional reconstruction kernels and the radial kernel K.

Everything here is built from two ingredients: the Keys interpolation
kernel ``ik`` (a piecewise cubic assembled from cardinal B-splines) and a
fixed detector aperture ``w(t) = 35/32 (1 - t^2)^3`` on [-1, 1].  Derived
quantities:

* ``lambda``   Hilbert transform of ik' (closed form),
* ``ik * w``   and its running integral, the edge response E,
* ``K``        radial 2D kernel whose Radon transform is ik * w.

Hilbert transforms use the classical convention
``(H g)(t) = (1/pi) p.v. int g(s) / (t - s) ds``.  With it the filtered
backprojection carries a plus sign and ``K = +(1/2pi) int_0^pi
(lambda * w)(alpha . z) d alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial

from .quadrature import adaptive_panels, fixed_panels

TABLE_STEP = 1.0 / 512
IK_SUPPORT = 2.0
W_SUPPORT = 1.0
CONV_SUPPORT = IK_SUPPORT + W_SUPPORT
W_NORM = 35.0 / 32.0


# ---------------------------------------------------------------------------
# tabulated functions


@dataclass(frozen=True)
class Zero:
    """Outside the table the function vanishes."""


@dataclass(frozen=True)
class TailPowerLaw:
    """Outside the table the function is ``coefficient * |t|**exponent``."""

    coefficient: float
    exponent: float


OutsideRule = Union[Zero, TailPowerLaw]


@dataclass(frozen=True, eq=False)
class TabulatedFunction:
    """Uniformly sampled function with local cubic (4-point Lagrange) interpolation.

    Evaluation at a node returns the stored sample exactly.
    """

    grid_start: float
    grid_step: float
    samples: np.ndarray
    outside_rule: OutsideRule = field(default_factory=Zero)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if not self.grid_step > 0:
            raise ValueError("grid_step must be positive")
        if samples.ndim != 1 or samples.size < 4:
            raise ValueError("need at least 4 samples")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def grid_end(self) -> float:
        return self.grid_start + self.grid_step * (self.samples.size - 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid_start + self.grid_step * np.arange(self.samples.size)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = _lagrange4(self.samples, (t - self.grid_start) / self.grid_step)
        outside = (t < self.grid_start) | (t > self.grid_end)
        if isinstance(self.outside_rule, TailPowerLaw):
            tail = self.outside_rule.coefficient * np.abs(t) ** self.outside_rule.exponent
            out = np.where(outside, tail, out)
        else:
            out = np.where(outside, 0.0, out)
        return out if out.ndim else float(out)

    def to_csv(self, path, name: str) -> None:
        with open(path, "w") as fh:
            fh.write(f"# kernel,{name},step,{self.grid_step:.15g}\n")
            for t, v in zip(self.nodes, self.samples):
                fh.write(f"{t:.15g},{v:.15g}\n")


def _lagrange4(samples: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Cubic Lagrange interpolation of `samples` at fractional index `u`."""
    n = samples.size
    u = np.clip(u, 0.0, n - 1.0)
    # snap abscissae that are nodes up to rounding so stored samples come back exactly
    r = np.rint(u)
    u = np.where(np.abs(u - r) < 1e-9, r, u)
    i = np.floor(u).astype(np.int64)
    # stencil i-1..i+2, shifted inward at the ends
    start = np.clip(i - 1, 0, n - 4)
    x = u - start
    y0 = samples[start]
    y1 = samples[start + 1]
    y2 = samples[start + 2]
    y3 = samples[start + 3]
    return (
        -y0 * ((x - 1) * (x - 2) * (x - 3) / 6)
        + y1 * (x * (x - 2) * (x - 3) / 2)
        - y2 * (x * (x - 1) * (x - 3) / 2)
        + y3 * (x * (x - 1) * (x - 2) / 6)
    )


def read_table_csv(path) -> tuple[str, TabulatedFunction]:
    with open(path) as fh:
        header = fh.readline().strip().lstrip("#").strip().split(",")
        name, step = header[1], float(header[3])
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return name, TabulatedFunction(float(data[0, 0]), step, data[:, 1])


# ---------------------------------------------------------------------------
# B-splines, Keys kernel, aperture


def bspline_eval(degree: int, t):
    """Cardinal B-spline of degree 2 or 3, supported on [0, degree + 1]."""
    t = np.asarray(t, dtype=float)
    if degree == 2:
        out = np.where(
            (t >= 0) & (t < 1),
            0.5 * t**2,
            np.where(
                (t >= 1) & (t < 2),
                0.75 - (t - 1.5) ** 2,
                np.where((t >= 2) & (t <= 3), 0.5 * (3 - t) ** 2, 0.0),
            ),
        )
    elif degree == 3:
        a = np.abs(t - 2)
        out = np.where(
            a <= 1,
            2.0 / 3 - a**2 + 0.5 * a**3,
            np.where(a <= 2, (2 - a) ** 3 / 6, 0.0),
        )
    else:
        raise ValueError(f"unsupported B-spline degree {degree}")
    return out if out.ndim else float(out)


def keys_eval(t):
    """Keys interpolation kernel, ``3 B3(t+2) - (B2(t+2) + B2(t+1))``.

    Evaluated through the equivalent piecewise cubic in |t| so that the
    integers come out as exact zeros.
    """
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    out = np.where(
        a <= 1,
        (1.5 * a - 2.5) * a * a + 1,
        np.where(a < 2, ((-0.5 * a + 2.5) * a - 4) * a + 2, 0.0),
    )
    return out if out.ndim else float(out)


def aperture_eval(t):
    t = np.asarray(t, dtype=float)
    out = np.where(np.abs(t) <= 1, W_NORM * (1 - t * t) ** 3, 0.0)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# piecewise polynomials


class PiecewisePolynomial:
    """Compactly supported piecewise polynomial.

    Piece ``i`` lives on ``[breaks[i], breaks[i+1]]`` and is stored as a
    polynomial in the local variable ``t - breaks[i]``.
    """

    def __init__(self, breaks, pieces):
        self.breaks = np.asarray(breaks, dtype=float)
        self.pieces = [Polynomial(p.coef) for p in pieces]
        if len(self.pieces) != self.breaks.size - 1:
            raise ValueError("need one piece per interval")

    @classmethod
    def from_global(cls, breaks, pieces):
        """Build from polynomials written in the global variable."""
        breaks = np.asarray(breaks, dtype=float)
        local = [p(Polynomial([a, 1.0])) for p, a in zip(pieces, breaks[:-1])]
        return cls(breaks, local)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for a, b, p in zip(self.breaks[:-1], self.breaks[1:], self.pieces):
            m = (t >= a) & (t < b)
            out[m] = p(t[m] - a)
        out[t == self.breaks[-1]] = self.pieces[-1](self.breaks[-1] - self.breaks[-2])
        return out

    def deriv(self) -> "PiecewisePolynomial":
        return PiecewisePolynomial(self.breaks, [p.deriv() for p in self.pieces])

    def antideriv(self) -> "PiecewisePolynomial":
        """Running integral from the left end of the support."""
        pieces, acc = [], 0.0
        for a, b, p in zip(self.breaks[:-1], self.breaks[1:], self.pieces):
            q = p.integ()
            q = q - q(0.0) + acc
            pieces.append(q)
            acc = q(b - a)
        return PiecewisePolynomial(self.breaks, pieces)

    def integral(self) -> float:
        return float(sum(p.integ()(b - a) - p.integ()(0.0)
                         for a, b, p in zip(self.breaks[:-1], self.breaks[1:], self.pieces)))

    def moment(self, n: int) -> float:
        """``int t**n g(t) dt``."""
        total = 0.0
        for a, b, p in zip(self.breaks[:-1], self.breaks[1:], self.pieces):
            q = (p * Polynomial([a, 1.0]) ** n).integ()
            total += q(b - a) - q(0.0)
        return total

    def hilbert(self, t):
        """Closed-form ``(1/pi) p.v. int g(s) / (t - s) ds``.

        Uses ``int_a^b P(s)/(t-s) ds = P(t) ln|t-a|/|t-b| - int_a^b (P(s)-P(t))/(s-t) ds``;
        the logarithms are grouped per breakpoint so that a continuous g
        yields coefficients vanishing at the breakpoint (finite limit).
        """
        t = np.asarray(t, dtype=float)
        acc = np.zeros_like(t)
        nb = self.breaks.size
        for k in range(nb):
            b = self.breaks[k]
            right = self._shifted(k, b) if k < nb - 1 else Polynomial([0.0])
            left = self._shifted(k - 1, b) if k > 0 else Polynomial([0.0])
            d = right - left
            y = t - b
            ay = np.abs(y)
            safe = np.where(ay > 0, ay, 1.0)
            acc += np.where(ay > 0, d(y) * np.log(safe), 0.0)
        for a, b, p in zip(self.breaks[:-1], self.breaks[1:], self.pieces):
            acc -= _difference_quotient_integral(p, b - a)(t - a)
        return acc / np.pi

    def _shifted(self, i, origin):
        """Piece i re-expressed in the variable ``t - origin``."""
        return self.pieces[i](Polynomial([origin - self.breaks[i], 1.0]))


def _difference_quotient_integral(p: Polynomial, h: float) -> Polynomial:
    """Polynomial in y equal to ``int_0^h (p(x) - p(y)) / (x - y) dx``."""
    c = p.coef
    out = np.zeros(max(len(c) - 1, 1))
    for n in range(1, len(c)):
        for m in range(n):
            out[n - 1 - m] += c[n] * h ** (m + 1) / (m + 1)
    return Polynomial(out)


def _keys_pieces() -> PiecewisePolynomial:
    return PiecewisePolynomial.from_global(
        np.arange(-2.0, 3.0),
        [
            Polynomial([2.0, 4.0, 2.5, 0.5]),
            Polynomial([1.0, 0.0, -2.5, -1.5]),
            Polynomial([1.0, 0.0, -2.5, 1.5]),
            Polynomial([2.0, -4.0, 2.5, -0.5]),
        ],
    )


def _aperture_poly() -> Polynomial:
    return W_NORM * Polynomial([1.0, 0.0, -1.0]) ** 3


def _ik_conv_w_direct(t, ik_pp=None):
    """Exact ``(ik * w)(t)`` by Gauss-Legendre over the polynomial pieces."""
    ik_pp = ik_pp or _keys_pieces()
    t = np.atleast_1d(np.asarray(t, dtype=float))
    # kinks of ik(t - s) sit at s = t - b for integer b
    kinks = t[:, None] - np.arange(-2.0, 3.0)[None, :]
    br = np.sort(np.clip(np.concatenate([np.full((t.size, 1), -1.0), kinks,
                                         np.full((t.size, 1), 1.0)], axis=1), -1, 1), axis=1)
    wpoly = _aperture_poly()

    def integrand(s):
        return ik_pp(t[:, None] - s) * wpoly(s)

    return fixed_panels(integrand, br, n=8)


def _ik_conv_w_pieces() -> PiecewisePolynomial:
    # on each unit interval ik * w is a polynomial of degree <= 10
    ik_pp = _keys_pieces()
    breaks = np.arange(-3.0, 4.0)
    pieces = []
    x = 0.5 - 0.5 * np.cos(np.pi * (np.arange(15) + 0.5) / 15)
    for a in breaks[:-1]:
        vals = _ik_conv_w_direct(a + x, ik_pp)
        cheb = Chebyshev.fit(x, vals, 10, domain=[0, 1])
        pieces.append(cheb.convert(kind=Polynomial, domain=[0, 1], window=[0, 1]))
    return PiecewisePolynomial(breaks, pieces)


def _laurent(moments: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``(1/pi) sum_n moments[n] t**(-n-1)`` by Horner in 1/t."""
    z = 1.0 / t
    acc = np.zeros_like(t)
    for mu in moments[::-1]:
        acc = acc * z + mu
    return acc * z / np.pi


class _HilbertEvaluator:
    """Closed form inside ``|t| < switch``, convergent Laurent series outside."""

    def __init__(self, g: PiecewisePolynomial, switch: float, nterms: int):
        self.g = g
        self.switch = switch
        self.moments = np.array([g.moment(n) for n in range(nterms)])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        near = np.abs(t) < self.switch
        out = np.empty_like(t)
        if np.any(near):
            out[near] = self.g.hilbert(t[near])
        if not np.all(near):
            out[~near] = _laurent(self.moments, t[~near])
        return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def _lambda_evaluator() -> _HilbertEvaluator:
    # |s/t| <= 1/4 beyond the switch: 30 terms reach machine precision
    return _HilbertEvaluator(_keys_pieces().deriv(), switch=8.0, nterms=30)


@lru_cache(maxsize=None)
def _lambda_conv_w_evaluator() -> _HilbertEvaluator:
    # |s/t| <= 2/3 beyond the switch
    return _HilbertEvaluator(_ik_conv_w_pieces().deriv(), switch=4.5, nterms=100)


@lru_cache(maxsize=None)
def lambda_log_coefficients() -> tuple[np.ndarray, np.ndarray]:
    """Breakpoints b and coefficients (c1, c2) with
    ``Lambda(t) = sum_b (c1 y + c2 y^2) ln|y|``, ``y = t - b``.

    The polynomial remainder of the closed form cancels for the Keys
    kernel, so this is an exact representation of Lambda (best used only
    near the breakpoints: for large |t| the terms cancel catastrophically).
    """
    g = _keys_pieces().deriv()
    nb = g.breaks.size
    coef = np.zeros((nb, 2))
    for k, b in enumerate(g.breaks):
        right = g._shifted(k, b) if k < nb - 1 else Polynomial([0.0])
        left = g._shifted(k - 1, b) if k > 0 else Polynomial([0.0])
        c = np.pad((right - left).coef, (0, 3))[:3]
        coef[k] = c[1:] / np.pi
    coef.setflags(write=False)
    return g.breaks.copy(), coef


def hilbert_keys_deriv(t):
    """Lambda(t) = Hilbert transform of ik'; even, decays like -1/(pi t^2)."""
    return _lambda_evaluator()(t)


def lambda_conv_w(t):
    """(Lambda * w)(t), the Hilbert transform of (ik * w)'."""
    return _lambda_conv_w_evaluator()(t)


# ---------------------------------------------------------------------------
# radial kernel K


def kernel_K(rho, tol=1e-10):
    """K(rho) = (1/2pi) int_0^pi (Lambda * w)(rho cos u) du, by quadrature."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("rho must be nonnegative")
    r = np.atleast_1d(rho)
    # integrand is even in cos u; panels end where rho cos u crosses an integer
    m = np.arange(3, 0, -1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        kinks = np.where(m[None, :] < r[:, None], np.arccos(m[None, :] / np.maximum(r[:, None], 1e-300)), 0.0)
    br = np.concatenate([np.zeros((r.size, 1)), kinks, np.full((r.size, 1), np.pi / 2)], axis=1)

    def integrand(u):
        return lambda_conv_w(r[:, None] * np.cos(u))

    out = adaptive_panels(integrand, br, n=12, tol=tol) / np.pi
    return out.reshape(rho.shape) if rho.ndim else float(out[0])


def radon_of_radial(profile, t, tol=1e-10):
    """Line integral ``int profile(sqrt(t^2 + u^2)) du`` of a radial function.

    `profile` is a TabulatedFunction with the Zero outside rule (its
    support ends at ``profile.grid_end``) or any callable together with a
    ``grid_end`` attribute.
    """
    t = np.atleast_1d(np.abs(np.asarray(t, dtype=float)))
    rmax = profile.grid_end
    umax = np.sqrt(np.maximum(rmax**2 - t**2, 0.0))
    # substitute u = umax sin(phi) to smooth the square-root edge of the chord
    br = np.stack([np.zeros_like(t), np.full_like(t, np.pi / 4), np.full_like(t, np.pi / 2)], axis=1)

    def integrand(phi):
        u = umax[:, None] * np.sin(phi)
        return profile(np.sqrt(t[:, None] ** 2 + u * u)) * umax[:, None] * np.cos(phi)

    return 2.0 * adaptive_panels(integrand, br, n=16, tol=tol)


# ---------------------------------------------------------------------------
# kernel set


@dataclass(frozen=True, eq=False)
class KernelSet:
    ik_conv_w: TabulatedFunction
    edge: TabulatedFunction
    k_radial: TabulatedFunction

    @staticmethod
    def ik(t):
        return keys_eval(t)

    @staticmethod
    def w(t):
        return aperture_eval(t)

    @staticmethod
    def lam(t):
        return hilbert_keys_deriv(t)

    def edge_response(self, h):
        h = np.asarray(h, dtype=float)
        out = np.where(h >= CONV_SUPPORT, 1.0, self.edge(h))
        return out if out.ndim else float(out)

    def band_response(self, h, H):
        h = np.asarray(h, dtype=float)
        out = np.asarray(self.edge_response(h) - self.edge_response(h - np.asarray(H, dtype=float)))
        return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def default_kernels() -> KernelSet:
    """Tables on step 1/512: ik*w and E on [-3, 3], K on [0, 3]."""
    conv = _ik_conv_w_pieces()
    n = int(round(2 * CONV_SUPPORT / TABLE_STEP))
    t = -CONV_SUPPORT + TABLE_STEP * np.arange(n + 1)
    vals, prim = conv(t), conv.antideriv()(t)
    # support ends are exact zeros of ik * w; drop the polynomial round-off there
    vals[[0, -1]] = 0.0
    prim[0], prim[-1] = 0.0, 1.0
    ikw = TabulatedFunction(-CONV_SUPPORT, TABLE_STEP, vals)
    edge = TabulatedFunction(-CONV_SUPPORT, TABLE_STEP, prim)
    rho = TABLE_STEP * np.arange(int(round(CONV_SUPPORT / TABLE_STEP)) + 1)
    k = kernel_K(rho)
    k[-1] = 0.0
    return KernelSet(ikw, edge, TabulatedFunction(0.0, TABLE_STEP, k))


def edge_response(h):
    """E(h) = int_{-inf}^h (ik * w)."""
    return default_kernels().edge_response(h)


def band_response(h, H):
    """(ik * w * chi_H)(h) = E(h) - E(h - H) for either sign of H."""
    return default_kernels().band_response(h, H)
