"""Boundary perturbations H_eps, their normalized form H0, and roughness diagnostics."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

TAIL_TOL = 1e-8
SCHWARZ_TERMS = 60
THETA_MIN = -math.pi  # polar angles live in (-pi, pi]


class Kind(enum.IntEnum):
    ZERO = 0
    CONSTANT = 1
    SINUSOID = 2
    WEIERSTRASS = 3
    SCHWARZ = 4


@dataclass(frozen=True)
class PerturbationSpec:
    """Radial boundary perturbation.

    Use the named constructors; the meaning of the numeric fields depends on
    `kind`.  For the Weierstrass-type series ``start`` defaults to
    ``floor(log_r pi)`` and ``n_max`` to the shortest truncation whose
    geometric tail is below 1e-8.
    """

    kind: Kind
    H: float = 0.0
    amplitude: float = 0.0
    frequency: float = 0.0
    ratio: float = 0.0
    gamma: float = 1.0
    start: int = 0
    n_max: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.WEIERSTRASS:
            if not self.ratio > 1:
                raise ValueError("Weierstrass ratio must exceed 1")
            if not 0 < self.gamma < 1:
                raise ValueError("Weierstrass gamma must lie in (0, 1)")
            need = _weierstrass_terms(self.amplitude, self.ratio, self.gamma, self.start)
            if self.n_max < need:
                raise ValueError(f"n_max={self.n_max} leaves a tail above {TAIL_TOL}; need >= {need}")
        elif self.kind is Kind.SCHWARZ and not 0 < self.gamma < 1:
            raise ValueError("Schwarz gamma must lie in (0, 1)")

    @classmethod
    def zero(cls):
        return cls(Kind.ZERO)

    @classmethod
    def constant(cls, H: float):
        return cls(Kind.CONSTANT, H=float(H), gamma=1.0)

    @classmethod
    def sinusoid(cls, amplitude: float = 2.0, frequency: float = 0.71):
        return cls(Kind.SINUSOID, amplitude=float(amplitude), frequency=float(frequency), gamma=1.0)

    @classmethod
    def weierstrass(cls, gamma: float = 0.5, amplitude: float = 5.0, ratio: float = math.sqrt(12.0),
                    start: int | None = None, n_max: int | None = None):
        if start is None:
            start = math.floor(math.log(math.pi) / math.log(ratio))
        if n_max is None:
            n_max = _weierstrass_terms(amplitude, ratio, gamma, start)
        return cls(Kind.WEIERSTRASS, amplitude=float(amplitude), ratio=float(ratio), gamma=float(gamma),
                   start=int(start), n_max=int(n_max))

    @classmethod
    def schwarz(cls, gamma: float):
        return cls(Kind.SCHWARZ, gamma=float(gamma), n_max=SCHWARZ_TERMS)

    def packed(self) -> tuple[int, np.ndarray]:
        """(kind code, parameter vector) for the compiled kernels."""
        return int(self.kind), np.array(
            [self.H, self.amplitude, self.frequency, self.ratio, self.gamma,
             float(self.start), float(self.n_max), THETA_MIN], dtype=float)


def _weierstrass_terms(amplitude, ratio, gamma, start):
    q = ratio ** (-gamma)
    n = start
    while abs(amplitude) * q ** (n + 1) / (1 - q) >= TAIL_TOL:
        n += 1
    return n


def _schwarz(s, gamma, n_max=SCHWARZ_TERMS):
    s = np.asarray(s, dtype=float)
    acc = np.zeros_like(s)
    for n in range(n_max + 1):
        x = s * 2.0**n
        fl = np.floor(x)
        acc += (fl + (x - fl) ** gamma) / 3.0**n
    return acc


def h0_eval(s, spec: PerturbationSpec):
    """Normalized perturbation H0(s) for the Weierstrass-type and Schwarz kinds."""
    s = np.asarray(s, dtype=float)
    if spec.kind is Kind.WEIERSTRASS:
        n = np.arange(spec.start, spec.n_max + 1, dtype=float)
        scale = spec.ratio**n
        out = spec.amplitude * np.sin(s[..., None] * scale) @ (spec.ratio ** (-spec.gamma * n))
    elif spec.kind is Kind.SCHWARZ:
        if np.any(s < 0):
            raise ValueError("the Schwarz function is defined on [0, inf)")
        out = _schwarz(s, spec.gamma, spec.n_max)
    else:
        raise ValueError(f"h0_eval is not defined for {spec.kind.name}")
    return out if np.ndim(out) else float(out)


def h_eps(theta, spec: PerturbationSpec, eps: float):
    """Radial perturbation at polar angle `theta` (radians), in length units."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    theta = np.asarray(theta, dtype=float)
    k = spec.kind
    if k is Kind.ZERO:
        out = np.zeros_like(theta)
    elif k is Kind.CONSTANT:
        out = np.full_like(theta, eps * spec.H)
    elif k is Kind.SINUSOID:
        out = spec.amplitude * eps * np.cos(spec.frequency * theta / math.sqrt(eps))
    elif k is Kind.WEIERSTRASS:
        out = eps * np.asarray(h0_eval(theta / math.sqrt(eps), spec))
    else:
        out = eps * np.asarray(h0_eval((theta - THETA_MIN) / math.sqrt(eps), spec))
    return out if out.ndim else float(out)


def sup_abs_h0(spec: PerturbationSpec, eps: float | None = None) -> float:
    """Bound on |H0| (condition H1).  Schwarz needs `eps` to fix the angular range."""
    k = spec.kind
    if k is Kind.ZERO:
        return 0.0
    if k is Kind.CONSTANT:
        return abs(spec.H)
    if k is Kind.SINUSOID:
        return abs(spec.amplitude)
    if k is Kind.WEIERSTRASS:
        q = spec.ratio ** (-spec.gamma)
        nterms = spec.n_max - spec.start + 1
        return abs(spec.amplitude) * q**spec.start * (1 - q**nterms) / (1 - q)
    if eps is None:
        raise ValueError("Schwarz perturbation needs eps to bound H0")
    return float(_schwarz(2 * math.pi / math.sqrt(eps), spec.gamma, spec.n_max))


def holder_ratio_scan(fn, gamma, interval, h_values, n_points=1000, points=None) -> float:
    """Largest sampled ``|fn(s+h) - fn(s)| / h**gamma``.

    Base points are `n_points` equispaced samples of `interval` unless
    `points` is given.  The result is an empirical lower bound on the
    Hoelder constant.
    """
    if points is None:
        lo, hi = interval
        if not hi > lo:
            raise ValueError("empty interval")
        points = np.linspace(lo, hi, n_points)
    s = np.asarray(points, dtype=float)
    f0 = np.asarray(fn(s), dtype=float)
    best = 0.0
    for h in np.atleast_1d(h_values):
        if not h > 0:
            raise ValueError("h values must be positive")
        d = np.abs(np.asarray(fn(s + h), dtype=float) - f0)
        best = max(best, float(np.max(d)) / h**gamma)
    return best


def level_set_count(fn, t_hat, interval, grid_step) -> int:
    """Sign changes of ``fn - t_hat`` on a uniform grid strictly inside `interval`.

    A lower bound on the number of level-set points: a tangential root
    (even multiplicity) does not change sign and is missed.  Samples that
    hit the level exactly are skipped.
    """
    if not grid_step > 0:
        raise ValueError("grid_step must be positive")
    lo, hi = interval
    n = int(math.ceil((hi - lo) / grid_step))
    s = lo + grid_step * np.arange(1, n)
    s = s[s < hi]
    sg = np.sign(np.asarray(fn(s), dtype=float) - t_hat)
    sg = sg[sg != 0]
    return int(np.count_nonzero(sg[1:] != sg[:-1]))
