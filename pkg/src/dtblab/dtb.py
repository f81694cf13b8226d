"""Edge-profile predictors (DTB) and radial profile extraction.

``dtb_original`` is the closed-form limit: the straight-edge response E
shifted by the local normalized perturbation.  ``dtb_new`` smooths the
phantom itself with the radial kernel K at scale eps, so it sees the
boundary shape within 3 eps of the point and not only its offset at the
base point.

Profiles are parametrized by ``s_hat`` along the outward unit normal of
the unperturbed circle, in units of eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _jit
from .kernels import CONV_SUPPORT, default_kernels
from .forward import shell_cells
from .phantom import LocalFrame, Mode, PhantomSpec
from .quadrature import gauss_legendre
from .recon import FilteredProjections, reconstruct_points

TENSOR_STEP = 1.0 / 64  # lattice step of the reference quadrature, in eps units


@dataclass(frozen=True)
class ProfileSpec:
    frame: LocalFrame
    s_hat_range: tuple = (-25.0, 25.0)
    step: float = 0.25

    def __post_init__(self):
        lo, hi = self.s_hat_range
        if not lo < hi:
            raise ValueError(f"empty profile range {self.s_hat_range}")
        if not self.step > 0:
            raise ValueError("profile step must be positive")

    def s_hat(self) -> np.ndarray:
        lo, hi = self.s_hat_range
        n = int(math.ceil((hi - lo) / self.step - 1e-9)) + 1
        return lo + self.step * np.arange(n)

    def points(self, eps: float) -> np.ndarray:
        s = self.s_hat()
        return np.asarray(self.frame.x0) + eps * s[:, None] * np.asarray(self.frame.outward_unit)


@dataclass(frozen=True, eq=False)
class ProfileSeries:
    s_hat: np.ndarray
    recon: np.ndarray
    dtb_original: np.ndarray
    dtb_new: np.ndarray
    ideal: np.ndarray

    COLUMNS = ("s_hat", "recon", "dtb_original", "dtb_new", "ideal")

    def __post_init__(self):
        cols = [np.asarray(getattr(self, c), dtype=float) for c in self.COLUMNS]
        if len({c.shape for c in cols}) != 1 or cols[0].ndim != 1:
            raise ValueError("profile series must be 1D arrays of equal length")
        if not all(np.all(np.isfinite(c)) for c in cols):
            raise ValueError("profile series must be finite")
        for name, c in zip(self.COLUMNS, cols):
            object.__setattr__(self, name, c)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(self.COLUMNS) + "\n")
            for row in zip(*(getattr(self, c) for c in self.COLUMNS)):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "ProfileSeries":
        with open(path) as fh:
            head = fh.readline().strip()
            if head != ",".join(cls.COLUMNS):
                raise ValueError(f"{path}: unexpected header {head!r}")
            data = np.array([[float(v) for v in ln.split(",")] for ln in fh if ln.strip()])
        data = data.reshape(-1, len(cls.COLUMNS))
        return cls(*data.T)


def dtb_original(s_hat, frame: LocalFrame, phantom: PhantomSpec):
    """Straight-edge response shifted by the local perturbation ``H0_local``."""
    kern = default_kernels()
    s = np.asarray(s_hat, dtype=float)
    H = frame.H0_local
    if phantom.mode is Mode.FULL:
        out = phantom.f_out + phantom.delta_f * (1 - kern.edge_response(s - H))
    else:
        out = phantom.delta_f * kern.band_response(s, H)
    out = np.asarray(out)
    return out if out.ndim else float(out)


def ideal_profile(s_hat, frame: LocalFrame, phantom: PhantomSpec):
    """The phantom itself along the profile, treating the boundary as the
    straight line through the perturbed base point."""
    s = np.asarray(s_hat, dtype=float)
    inside = (s <= frame.H0_local).astype(float)
    if phantom.mode is Mode.FULL:
        return phantom.f_out + phantom.delta_f * inside
    return phantom.delta_f * (inside - (s <= 0))


def _disc_part(points, phantom, nodes=24):
    """(1/eps^2) int K(|x - y| / eps) 1_disc(y) dy for the unperturbed disc.

    With ``r = eps rho`` this is ``int_0^3 K(rho) rho A(eps rho) drho``
    where A(r) is the angle of the circle |y - x| = r lying in the disc.
    Panels break at the tangency radius and at the integers; a cosine
    substitution tames the square-root ends of A.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    eps, R = phantom.eps, phantom.radius
    kern = default_kernels()
    d = np.hypot(pts[:, 0] - phantom.center[0], pts[:, 1] - phantom.center[1])
    x, w = gauss_legendre(nodes)
    v = 0.5 * (x + 1)
    u = 0.5 * (1 - np.cos(np.pi * v))
    du = 0.25 * np.pi * np.sin(np.pi * v) * w
    out = np.empty(len(pts))
    for i, di in enumerate(d):
        cuts = [0.0, 1.0, 2.0, CONV_SUPPORT]
        for r in (abs(di - R) / eps, (di + R) / eps):
            if 0 < r < CONV_SUPPORT:
                cuts.append(r)
        br = np.unique(cuts)
        total = 0.0
        for a, b in zip(br[:-1], br[1:]):
            rho = a + (b - a) * u
            r = eps * rho
            if di == 0:
                ang = np.where(r <= R, 2 * np.pi, 0.0)
            else:
                cosang = (di * di + r * r - R * R) / (2 * di * r)
                ang = 2 * np.arccos(np.clip(cosang, -1, 1))
            total += (b - a) * float(np.sum(du * kern.k_radial(rho) * rho * ang))
        out[i] = total
    return out.reshape(np.shape(points)[:-1])


def _shell_part(points, phantom, fine_step):
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    cells = shell_cells(phantom, fine_step)
    k = default_kernels().k_radial
    out = np.empty(len(pts))
    _jit.shell_convolve(np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]),
                        phantom.center[0], phantom.center[1], phantom.radius, phantom.eps,
                        cells.theta0, cells.dtheta, cells.h,
                        np.ascontiguousarray(k.samples), k.grid_step, CONV_SUPPORT, out)
    return out.reshape(np.shape(points)[:-1])


def dtb_new(x, phantom: PhantomSpec, fine_step: float | None = None):
    """``(1/eps^2) int K(|x - y| / eps) f(y) dy`` at points `x` (shape (..., 2)).

    Split as unperturbed disc (1D radial integral) plus signed shell.  The
    shell uses the same polar cells as `simulate_sinogram` (arc length
    `fine_step`, default eps/16) with Gauss-Legendre in radius, so for a
    given step both describe one and the same object.  The kernel has unit
    mass, so a constant f_out passes through.
    """
    x = np.asarray(x, dtype=float)
    if fine_step is None:
        fine_step = phantom.eps / 16
    shell = _shell_part(x, phantom, fine_step)
    if phantom.mode is Mode.SHELL:
        out = phantom.delta_f * shell
    else:
        out = phantom.f_out + phantom.delta_f * (_disc_part(x, phantom) + shell)
    out = np.asarray(out)
    return out if out.ndim else float(out)


def dtb_new_tensor(x, phantom: PhantomSpec, step: float = TENSOR_STEP):
    """Reference for `dtb_new`: midpoint rule on the axis-aligned lattice of
    step ``step * eps`` over the kernel support."""
    pts = np.asarray(x, dtype=float).reshape(-1, 2)
    eps = phantom.eps
    h = step * eps
    reach = CONV_SUPPORT * eps
    lo = np.floor((pts.min(axis=0) - reach) / h) * h
    hi = pts.max(axis=0) + reach
    nx, ny = (np.ceil((hi - lo) / h).astype(int) + 1)
    kind, par = phantom.perturbation.packed()
    k = default_kernels().k_radial
    out = np.empty(len(pts))
    _jit.kernel_convolve(np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]),
                         lo[0], lo[1], h, int(nx), int(ny), kind, par,
                         phantom.center[0], phantom.center[1], phantom.radius, eps,
                         phantom.f_in, phantom.f_out, phantom.mode is Mode.SHELL,
                         np.ascontiguousarray(k.samples), k.grid_step, CONV_SUPPORT, out)
    return out.reshape(np.shape(x)[:-1])


def extract_profiles(spec: ProfileSpec, phantom: PhantomSpec, fp: FilteredProjections,
                     fine_step: float | None = None) -> ProfileSeries:
    """Sample reconstruction and predictors at ``x0 + eps s_hat n``.

    `fine_step` must match the one used to simulate the data.
    """
    eps = phantom.eps
    if not math.isclose(eps, fp.geometry.eps, rel_tol=1e-12):
        raise ValueError("phantom and filtered projections use different eps")
    s = spec.s_hat()
    pts = spec.points(eps)
    return ProfileSeries(
        s_hat=s,
        recon=reconstruct_points(pts, fp),
        dtb_original=dtb_original(s, spec.frame, phantom),
        dtb_new=dtb_new(pts, phantom, fine_step),
        ideal=ideal_profile(s, spec.frame, phantom),
    )


__all__ = [
    "ProfileSpec", "ProfileSeries", "dtb_original", "dtb_new", "dtb_new_tensor",
    "extract_profiles", "ideal_profile",
]
