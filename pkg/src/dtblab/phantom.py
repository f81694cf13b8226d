"""Perturbed-disc phantoms.

A phantom is the disc of radius R around ``center`` whose boundary is
pushed radially by ``h_eps(theta)``.  In ``Mode.FULL`` it takes ``f_in``
inside the perturbed boundary and ``f_out`` outside.  ``Mode.SHELL`` keeps
only the difference (perturbed minus unperturbed object): ``+df`` where the
boundary moved outward, ``-df`` where it receded, zero elsewhere.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .boundary import Kind, PerturbationSpec, h_eps, sup_abs_h0


class Mode(enum.Enum):
    FULL = "full"
    SHELL = "shell"


def wrap_angle(a):
    """Map angles to (-pi, pi], matching ``atan2``."""
    out = np.pi - np.mod(np.pi - np.asarray(a, dtype=float), 2 * np.pi)
    return out if np.ndim(out) else float(out)


def polar_base_angle(alpha: float) -> float:
    """Polar angle of ``x_c - R (cos alpha, sin alpha)``."""
    return wrap_angle(alpha + math.pi)


@dataclass(frozen=True)
class PhantomSpec:
    center: tuple = (0.1, 0.2)
    radius: float = 0.3
    f_in: float = 1.0
    f_out: float = 0.0
    perturbation: PerturbationSpec = field(default_factory=PerturbationSpec.zero)
    eps: float = 1.2 / 500
    mode: Mode = Mode.FULL

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "mode", Mode(self.mode))
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if not self.eps > 0:
            out.append("eps must be positive")
            return out
        if not self.radius > 0:
            out.append("radius must be positive")
        bound = 3 * self.eps * (1 + self.sup_h0)
        if not self.radius > bound:
            out.append(f"radius {self.radius} must exceed 3 eps (1 + sup|H0|) = {bound:.6g}")
        if self.mode is Mode.SHELL and self.delta_f == 0:
            out.append("shell mode needs f_in != f_out")
        return out

    @property
    def delta_f(self) -> float:
        return self.f_in - self.f_out

    @property
    def sup_h0(self) -> float:
        return sup_abs_h0(self.perturbation, self.eps)

    @property
    def shell_halfwidth(self) -> float:
        """Radial half-width ``eps (sup|H0| + 1)`` of the annulus holding the boundary."""
        return self.eps * (self.sup_h0 + 1)

    def with_(self, **changes) -> "PhantomSpec":
        kw = dict(center=self.center, radius=self.radius, f_in=self.f_in, f_out=self.f_out,
                  perturbation=self.perturbation, eps=self.eps, mode=self.mode)
        kw.update(changes)
        return PhantomSpec(**kw)


@dataclass(frozen=True)
class LocalFrame:
    base_angle: float
    x0: tuple
    outward_unit: tuple
    H0_local: float


def boundary_radius(theta, spec: PhantomSpec):
    out = spec.radius + np.asarray(h_eps(theta, spec.perturbation, spec.eps))
    return out if out.ndim else float(out)


def eval_f(y, spec: PhantomSpec):
    """Phantom value at points `y` (array of shape (..., 2))."""
    y = np.asarray(y, dtype=float)
    dx = y[..., 0] - spec.center[0]
    dy = y[..., 1] - spec.center[1]
    rho = np.hypot(dx, dy)
    inside = rho <= boundary_radius(np.arctan2(dy, dx), spec)
    if spec.mode is Mode.FULL:
        out = np.where(inside, spec.f_in, spec.f_out)
    else:
        out = spec.delta_f * (inside.astype(float) - (rho <= spec.radius))
    return out if out.ndim else float(out)


def local_frame(a: float, spec: PhantomSpec) -> LocalFrame:
    """Frame at the point of the unperturbed circle with polar angle `a`."""
    a = wrap_angle(a)
    u = (math.cos(a), math.sin(a))
    x0 = (spec.center[0] + spec.radius * u[0], spec.center[1] + spec.radius * u[1])
    return LocalFrame(a, x0, u, float(h_eps(a, spec.perturbation, spec.eps)) / spec.eps)


__all__ = [
    "Kind", "Mode", "PhantomSpec", "LocalFrame", "boundary_radius", "eval_f",
    "local_frame", "polar_base_angle", "wrap_angle",
]
