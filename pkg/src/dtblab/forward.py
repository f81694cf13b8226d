"""Smoothed discrete Radon data of perturbed-disc phantoms.

Two evaluation routes are provided.  `line_integral` and
`smoothed_projection` follow the definition literally (chord integral,
then aperture smoothing by Gauss-Legendre) and serve as the reference.
`simulate_sinogram` splits the phantom into the unperturbed disc, whose
smoothed projection is a smooth 1D integral, and the thin shell between
the circle and the perturbed boundary, which is splatted cell by cell in
polar coordinates with the radial integral done exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _jit
from .kernels import aperture_eval
from .phantom import Mode, PhantomSpec, boundary_radius
from .quadrature import gauss_legendre

FIELD_OF_VIEW = 1.2
KAPPA = math.pi / FIELD_OF_VIEW


@dataclass(frozen=True)
class ScanGeometry:
    """Parallel-beam scan with ``n_p`` detectors and ``n_p - 1`` angles over a half turn."""

    n_p: int

    def __post_init__(self):
        if int(self.n_p) != self.n_p or self.n_p < 3 or self.n_p % 2 == 0:
            raise ValueError(f"n_p must be an odd integer >= 3, got {self.n_p}")
        object.__setattr__(self, "n_p", int(self.n_p))

    @property
    def n_theta(self) -> int:
        return self.n_p - 1

    @property
    def eps(self) -> float:
        return FIELD_OF_VIEW / (self.n_p - 1)

    @property
    def delta_alpha(self) -> float:
        return math.pi / self.n_theta

    @property
    def kappa(self) -> float:
        return self.delta_alpha / self.eps

    @property
    def j_max(self) -> int:
        return (self.n_p - 1) // 2

    @property
    def j(self) -> np.ndarray:
        return np.arange(-self.j_max, self.j_max + 1)

    @property
    def k(self) -> np.ndarray:
        return np.arange(-self.n_theta // 2, self.n_theta // 2)

    @property
    def p(self) -> np.ndarray:
        return self.j * self.eps

    @property
    def alpha(self) -> np.ndarray:
        return self.k * self.delta_alpha

    def row(self, k: int) -> int:
        if not -self.n_theta // 2 <= k < self.n_theta // 2:
            raise IndexError(f"angle index {k} out of range")
        return k + self.n_theta // 2

    def col(self, j: int) -> int:
        if abs(j) > self.j_max:
            raise IndexError(f"detector index {j} out of range")
        return j + self.j_max


@dataclass(frozen=True, eq=False)
class Sinogram:
    geometry: ScanGeometry
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        g = self.geometry
        if v.shape != (g.n_theta, g.n_p):
            raise ValueError(f"values have shape {v.shape}, geometry needs {(g.n_theta, g.n_p)}")
        if not np.all(np.isfinite(v)):
            raise ValueError("sinogram values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __sub__(self, other: "Sinogram") -> "Sinogram":
        if other.geometry != self.geometry:
            raise ValueError("geometries differ")
        return Sinogram(self.geometry, self.values - other.values)


def _check_fine_step(fine_step, eps):
    if not 0 < fine_step <= eps / 8 * (1 + 1e-12):
        raise ValueError(f"fine_step must lie in (0, eps/8] = (0, {eps / 8:.6g}], got {fine_step}")


def _annulus_windows(d, lo_r, hi_r):
    """Parameter intervals ``t`` along a line at distance `d` from the center
    where ``lo_r <= |point - center| <= hi_r``."""
    if d >= hi_r:
        return []
    outer = math.sqrt(hi_r * hi_r - d * d)
    if d >= lo_r:
        return [(-outer, outer)]  # near-tangent: one window covers both crossings
    inner = math.sqrt(lo_r * lo_r - d * d)
    return [(-outer, -inner), (inner, outer)]


def _fraction_inside(phi):
    """Fraction of each cell where the linear interpolant of `phi` is >= 0."""
    a, b = phi[:-1], phi[1:]
    both = (a >= 0) & (b >= 0)
    mixed = (a >= 0) != (b >= 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = np.where(a >= 0, a / (a - b), b / (b - a))
    return np.where(both, 1.0, np.where(mixed, cross, 0.0))


def line_integral(alpha: float, s: float, phantom: PhantomSpec, fine_step: float) -> float:
    """Integral of the phantom along the line ``{x : alpha_vec . x = s}``.

    The unperturbed disc contributes its analytic chord; the effect of the
    perturbation is integrated numerically only inside the annulus
    ``| |y - x_c| - R | <= eps (sup|H0| + 1)``.  Cells of width `fine_step`
    are classified by linear interpolation of the signed boundary distance.
    """
    eps = phantom.eps
    _check_fine_step(fine_step, eps)
    if phantom.mode is Mode.FULL and phantom.f_out != 0:
        raise ValueError("line integrals of a full phantom need f_out = 0")
    R = phantom.radius
    ca, sa = math.cos(alpha), math.sin(alpha)
    cx, cy = phantom.center
    d_signed = s - (ca * cx + sa * cy)
    d = abs(d_signed)
    chord = 2 * math.sqrt(R * R - d * d) if d < R else 0.0

    m = phantom.shell_halfwidth
    numeric = 0.0
    for lo, hi in _annulus_windows(d, max(R - m, 0.0), R + m):
        n = max(int(math.ceil((hi - lo) / fine_step)), 1)
        t = np.linspace(lo, hi, n + 1)
        # points on the line, relative to the disc center
        ux = d_signed * ca - t * sa
        uy = d_signed * sa + t * ca
        rho = np.hypot(ux, uy)
        phi = boundary_radius(np.arctan2(uy, ux), phantom) - rho
        phi0 = R - rho
        dt = (hi - lo) / n
        numeric += dt * float(np.sum(_fraction_inside(phi) - _fraction_inside(phi0)))

    if phantom.mode is Mode.FULL:
        return phantom.f_in * (chord + numeric)
    return phantom.delta_f * numeric


def tangent_offsets(alpha: float, phantom: PhantomSpec, lo: float, hi: float,
                    fine_step: float | None = None) -> np.ndarray:
    """Offsets ``s`` in (lo, hi) of lines with direction normal `alpha` that touch
    the circle or the perturbed boundary tangentially.

    Line integrals have square-root kinks there.  Perturbed tangencies are
    the local extrema of the support function sampled on a polar grid.
    """
    R = phantom.radius
    base = math.cos(alpha) * phantom.center[0] + math.sin(alpha) * phantom.center[1]
    cand = [base - R, base + R]
    if phantom.perturbation.kind != 0:
        step = (fine_step or phantom.eps / 16) / R
        theta = np.arange(-math.pi, math.pi, step)
        g = base + boundary_radius(theta, phantom) * np.cos(theta - alpha)
        ext = (np.diff(np.sign(np.diff(np.r_[g[-1], g, g[0]]))) != 0)
        cand.extend(g[ext])
    cand = np.asarray(cand)
    return np.unique(cand[(cand > lo) & (cand < hi)])


def smoothed_projection(k: int, j: int, phantom: PhantomSpec, geometry: ScanGeometry,
                        fine_step: float | None = None, nodes: int = 16) -> float:
    """Aperture-smoothed line integral at ``(alpha_k, p_j)``, by direct quadrature.

    Each half of the aperture support is split at tangent offsets; on every
    panel a cosine substitution removes the square-root endpoint behavior
    before `nodes`-point Gauss-Legendre.
    """
    geometry.row(k)
    geometry.col(j)
    eps = geometry.eps
    if fine_step is None:
        fine_step = eps / 16
    alpha = k * geometry.delta_alpha
    p = j * eps
    c = p - (math.cos(alpha) * phantom.center[0] + math.sin(alpha) * phantom.center[1])
    if abs(c) > phantom.radius + phantom.shell_halfwidth + eps:
        return 0.0
    x, w = gauss_legendre(nodes)
    v = 0.5 * (x + 1)
    u = 0.5 * (1 - np.cos(np.pi * v))
    du = 0.5 * np.pi * np.sin(np.pi * v) * 0.5 * w
    cuts = tangent_offsets(alpha, phantom, p - eps, p + eps, fine_step)
    breaks = np.unique(np.r_[p - eps, p, p + eps, cuts])
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        s = a + (b - a) * u
        vals = np.array([line_integral(alpha, si, phantom, fine_step) for si in s])
        total += (b - a) * float(np.sum(du * aperture_eval((p - s) / eps) * vals))
    return total / eps


def smoothed_chord(c, radius, eps, nodes=32):
    """Aperture-smoothed chord length of a disc, for line offsets `c` from its center.

    Exact up to Gauss-Legendre error: substituting ``s = R sin(phi)``
    gives ``(2 R^2 / eps) int w((c - R sin phi) / eps) cos(phi)^2 dphi``,
    whose integrand is analytic on the clipped interval.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    out = np.zeros_like(c)
    hit = np.abs(c) < radius + eps
    if np.any(hit):
        ch = c[hit]
        lo = np.arcsin(np.clip((ch - eps) / radius, -1, 1))
        hi = np.arcsin(np.clip((ch + eps) / radius, -1, 1))
        x, w = gauss_legendre(nodes)
        half = 0.5 * (hi - lo)
        phi = 0.5 * (hi + lo)[:, None] + half[:, None] * x
        vals = aperture_eval((ch[:, None] - radius * np.sin(phi)) / eps) * np.cos(phi) ** 2
        out[hit] = 2 * radius**2 / eps * half * (vals @ w)
    return out


@dataclass(frozen=True, eq=False)
class ShellCells:
    """Polar cells ``theta0 + (i + 1/2) dtheta`` with radial offsets ``h[i]``.

    The forward model and the kernel-K predictor both replace the shell by
    this cellular approximation (exact for each cell's radial segment), so
    they describe the same object.
    """

    theta0: float
    dtheta: float
    h: np.ndarray

    @property
    def theta(self) -> np.ndarray:
        return self.theta0 + (np.arange(self.h.size) + 0.5) * self.dtheta


def shell_cells(phantom: PhantomSpec, fine_step: float) -> ShellCells:
    """Cells of arc length about `fine_step` on the unperturbed circle."""
    n = int(math.ceil(2 * math.pi * phantom.radius / fine_step * (1 - 1e-12)))
    dtheta = 2 * math.pi / n
    theta0 = -math.pi
    kind, par = phantom.perturbation.packed()
    hv = np.empty(n)
    _jit.h_on_grid(kind, par, theta0 + (np.arange(n) + 0.5) * dtheta, phantom.eps, hv)
    hv.setflags(write=False)
    return ShellCells(theta0, dtheta, hv)


def shell_sinogram(phantom: PhantomSpec, geometry: ScanGeometry, fine_step: float) -> np.ndarray:
    """Smoothed projections of the signed shell (+1 gained, -1 lost) by polar splatting."""
    cells = shell_cells(phantom, fine_step)
    out = np.zeros((geometry.n_theta, geometry.n_p))
    _jit.shell_splat(geometry.alpha.astype(float), geometry.eps, geometry.j_max,
                     phantom.center[0], phantom.center[1], phantom.radius,
                     cells.theta, cells.h, cells.dtheta, out)
    return out


def simulate_sinogram(phantom: PhantomSpec, geometry: ScanGeometry,
                      fine_step: float | None = None) -> Sinogram:
    """Full sinogram; `fine_step` (default eps/16) is the arc length of a shell cell."""
    eps = geometry.eps
    if not math.isclose(phantom.eps, eps, rel_tol=1e-12):
        raise ValueError(f"phantom eps {phantom.eps} does not match geometry eps {eps}")
    if fine_step is None:
        fine_step = eps / 16
    _check_fine_step(fine_step, eps)
    if phantom.mode is Mode.FULL and phantom.f_out != 0:
        raise ValueError("a full phantom needs f_out = 0 (a constant background has no Radon transform)")

    shell = shell_sinogram(phantom, geometry, fine_step)
    if phantom.mode is Mode.SHELL:
        return Sinogram(geometry, phantom.delta_f * shell)
    proj = np.cos(geometry.alpha) * phantom.center[0] + np.sin(geometry.alpha) * phantom.center[1]
    c = geometry.p[None, :] - proj[:, None]
    disc = smoothed_chord(c.ravel(), phantom.radius, eps).reshape(c.shape)
    return Sinogram(geometry, phantom.f_in * (disc + shell))


def write_sinogram(path, sino: Sinogram) -> None:
    g = sino.geometry
    with open(path, "w") as fh:
        fh.write("# sinogram v1\n")
        fh.write(f"# N_p={g.n_p} N_theta={g.n_theta} eps={g.eps:.17g}\n")
        for row in sino.values:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_sinogram(path) -> Sinogram:
    lines = Path(path).read_text().splitlines()
    if len(lines) < 2 or lines[0].strip() != "# sinogram v1":
        raise ValueError(f"{path}: not a sinogram v1 file")
    try:
        fields = dict(item.split("=") for item in lines[1].lstrip("# ").split())
        geometry = ScanGeometry(int(fields["N_p"]))
        n_theta = int(fields["N_theta"])
        eps = float(fields["eps"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: malformed sinogram header") from exc
    if n_theta != geometry.n_theta or not math.isclose(eps, geometry.eps, rel_tol=1e-15):
        raise ValueError(f"{path}: header is inconsistent with N_p={geometry.n_p}")
    values = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:] if ln.strip()])
    return Sinogram(geometry, values.reshape(-1, geometry.n_p) if values.size else values)
