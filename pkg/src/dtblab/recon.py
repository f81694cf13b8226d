"""Filtered backprojection with the Hilbert-filtered Keys interpolation kernel.

    f_rec(x) = (dalpha / (2 pi eps)) sum_k Q_k(alpha_k . x / eps),
    Q_k(q)   = sum_j Lambda(q - j) fhat(alpha_k, p_j).

Q_k is tabulated once per angle on the oversampled grid ``q = m / os``
covering the requested region.  Lambda is exactly a sum of terms
``(c1 y + c2 y^2) ln|y|`` centered at the integers, so Q_k has logarithmic
kinks at every integer q with coefficients that are short convolutions of
the data.  Reading Q_k off-grid subtracts the two log terms belonging to
the enclosing unit interval, interpolates the analytic remainder with a
6-point Lagrange stencil kept inside that interval, and adds the terms
back.  `reconstruct_direct` evaluates the double sum exactly and is kept
as the reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _jit
from .forward import FIELD_OF_VIEW, Sinogram
from .kernels import hilbert_keys_deriv, lambda_log_coefficients

OVERSAMPLE = 16
_FOV_HALF = FIELD_OF_VIEW / 2


@dataclass(frozen=True)
class Region:
    """Axis-aligned box ``[xmin, xmax] x [ymin, ymax]``."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax >= self.xmin and self.ymax >= self.ymin):
            raise ValueError(f"empty region {self}")

    @classmethod
    def around(cls, points, pad: float = 0.0) -> "Region":
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        lo = pts.min(axis=0) - pad
        hi = pts.max(axis=0) + pad
        return cls(lo[0], hi[0], lo[1], hi[1])

    @classmethod
    def field_of_view(cls) -> "Region":
        return cls(-_FOV_HALF, _FOV_HALF, -_FOV_HALF, _FOV_HALF)

    def contains(self, pts, tol=1e-12) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return ((pts[..., 0] >= self.xmin - tol) & (pts[..., 0] <= self.xmax + tol)
                & (pts[..., 1] >= self.ymin - tol) & (pts[..., 1] <= self.ymax + tol))

    def corners(self) -> np.ndarray:
        return np.array([[self.xmin, self.ymin], [self.xmin, self.ymax],
                         [self.xmax, self.ymin], [self.xmax, self.ymax]])


@dataclass(frozen=True, eq=False)
class FilteredProjections:
    """Q_k on the grids ``(m0[k] + arange(nq)) / oversample``, one row per angle.

    `smooth` holds Q_k minus the log terms of each unit interval and
    `log_c1`, `log_c2` the log coefficients at the integers
    ``n_first[k] + i``; together they give Q_k at any covered q.
    """

    geometry: object
    region: Region
    oversample: int
    m0: np.ndarray
    values: np.ndarray
    smooth: np.ndarray
    n_first: np.ndarray
    log_c1: np.ndarray
    log_c2: np.ndarray

    def q_grid(self, k_row: int) -> np.ndarray:
        return (self.m0[k_row] + np.arange(self.values.shape[1])) / self.oversample

    @property
    def q_grids(self) -> list[np.ndarray]:
        return [self.q_grid(r) for r in range(self.values.shape[0])]

    def q_range(self, k_row: int) -> tuple[float, float]:
        """Interval of q at which row `k_row` can be read."""
        g = self.q_grid(k_row)
        return float(g[0]), float(g[-1]) - 1.0

    def evaluate(self, k_row: int, q) -> np.ndarray:
        """Q_k at arbitrary q inside `q_range`."""
        q = np.atleast_1d(np.asarray(q, dtype=float))
        lo, hi = self.q_range(k_row)
        if np.any((q < lo) | (q >= hi)):
            raise ValueError("q outside the filtered range")
        args = (self.smooth[k_row], self.oversample, int(self.m0[k_row]), int(self.n_first[k_row]),
                self.log_c1[k_row], self.log_c2[k_row])
        return np.array([_jit.read_q(*args, float(v)) for v in q])


@dataclass(frozen=True, eq=False)
class ImageGrid:
    """Pixel ``values[iy, ix]`` sits at ``origin + spacing * (ix, iy)``."""

    origin: tuple
    spacing: float
    values: np.ndarray

    def __post_init__(self):
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if self.values.ndim != 2 or 0 in self.values.shape:
            raise ValueError("image must be a nonempty 2D array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("image values must be finite")

    @property
    def nx(self) -> int:
        return self.values.shape[1]

    @property
    def ny(self) -> int:
        return self.values.shape[0]

    def centers(self) -> np.ndarray:
        return pixel_centers(self.origin, self.spacing, self.nx, self.ny)


def pixel_centers(origin, spacing, nx, ny) -> np.ndarray:
    """Array of shape (ny, nx, 2)."""
    x = origin[0] + spacing * np.arange(nx)
    y = origin[1] + spacing * np.arange(ny)
    return np.stack(np.meshgrid(x, y), axis=-1)


def _lambda_table(n_min, n_max, os):
    return hilbert_keys_deriv(np.arange(n_min, n_max + 1) / os)


def filter_projections(sino: Sinogram, region: Region, oversample: int = OVERSAMPLE) -> FilteredProjections:
    """Tabulate Q_k on the oversampled grid covering `region` (no truncation in j).

    Each row spans whole unit intervals with one spare interval on either
    side, so at least `oversample` samples of margin.
    """
    fov = Region.field_of_view()
    if not np.all(fov.contains(region.corners(), tol=1e-9)):
        raise ValueError(f"region {region} leaves the field of view {fov}")
    g = sino.geometry
    os = int(oversample)
    if os < 4:
        raise ValueError("oversample must be an integer >= 4")
    ca, sa = np.cos(g.alpha), np.sin(g.alpha)
    proj = (region.corners() @ np.stack([ca, sa])) / g.eps  # (4, nk)
    n_first = np.floor(proj.min(axis=0)).astype(np.int64) - 1
    n_last = np.ceil(proj.max(axis=0)).astype(np.int64) + 1
    n_units = int(np.max(n_last - n_first))
    m0 = n_first * os
    nq = n_units * os + 1

    f = np.ascontiguousarray(sino.values)
    nz = f != 0
    any_nz = nz.any(axis=1)
    col_lo = np.where(any_nz, nz.argmax(axis=1), 0).astype(np.int64)
    col_hi = np.where(any_nz, f.shape[1] - nz[:, ::-1].argmax(axis=1), 0).astype(np.int64)

    n_min = int(m0.min()) - os * g.j_max
    n_max = int(m0.max()) + nq - 1 + os * g.j_max
    table = _lambda_table(n_min, n_max, os)
    values = np.zeros((g.n_theta, nq))
    _jit.filter_rows(f, col_lo, col_hi, g.j_max, table, n_min, os, m0, values)

    breaks, coef = lambda_log_coefficients()
    c1 = np.ascontiguousarray(coef[:, 0])
    c2 = np.ascontiguousarray(coef[:, 1])
    a1 = np.zeros((g.n_theta, n_units + 1))
    a2 = np.zeros_like(a1)
    _jit.log_coefficients(f, g.j_max, c1, c2, int(breaks[0]), n_first, a1, a2)
    smooth = np.empty_like(values)
    _jit.remove_log_part(values, os, m0, n_first, a1, a2, smooth)
    for arr in (values, smooth, m0, n_first, a1, a2):
        arr.setflags(write=False)
    return FilteredProjections(g, region, os, m0, values, smooth, n_first, a1, a2)


def _prefactor(g):
    return g.delta_alpha / (2 * math.pi * g.eps)


def reconstruct_points(points, fp: FilteredProjections) -> np.ndarray:
    """Vectorized `reconstruct_point` over an array of shape (..., 2)."""
    pts = np.asarray(points, dtype=float)
    if not np.all(fp.region.contains(pts, tol=1e-9)):
        raise ValueError("points outside the filtered region")
    flat = pts.reshape(-1, 2)
    g = fp.geometry
    out = np.empty(flat.shape[0])
    _jit.backproject(np.ascontiguousarray(flat[:, 0]), np.ascontiguousarray(flat[:, 1]),
                     np.cos(g.alpha), np.sin(g.alpha), 1.0 / g.eps, fp.oversample,
                     fp.m0, fp.n_first, fp.smooth, fp.log_c1, fp.log_c2, _prefactor(g), out)
    return out.reshape(pts.shape[:-1])


def reconstruct_point(x, fp: FilteredProjections) -> float:
    return float(reconstruct_points(np.asarray(x, dtype=float)[None, :], fp)[0])


def reconstruct_grid(origin, spacing, nx, ny, fp: FilteredProjections) -> ImageGrid:
    if nx < 1 or ny < 1:
        raise ValueError("grid dimensions must be positive")
    values = reconstruct_points(pixel_centers(origin, spacing, nx, ny), fp)
    return ImageGrid(tuple(float(o) for o in origin), float(spacing), values)


def reconstruct_direct(points, sino: Sinogram) -> np.ndarray:
    """Reference: the exact double sum over (k, j) with closed-form Lambda."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    g = sino.geometry
    ca, sa = np.cos(g.alpha), np.sin(g.alpha)
    out = np.empty(len(pts))
    for i, (x, y) in enumerate(pts):
        q = (ca * x + sa * y) / g.eps
        out[i] = np.sum(hilbert_keys_deriv(q[:, None] - g.j[None, :]) * sino.values)
    return _prefactor(g) * out.reshape(np.asarray(points).shape[:-1])


def to_gray(values) -> np.ndarray:
    """Gray level ``round(255 clamp((v + 1) / 2, 0, 1))``: -1 black, 0 mid-gray, 1 white."""
    v = np.clip((np.asarray(values, dtype=float) + 1) / 2, 0, 1)
    return np.round(255 * v).astype(np.uint8)


def write_pgm(path, image: ImageGrid) -> None:
    """Binary PGM; the top row is the largest y."""
    gray = to_gray(image.values[::-1])
    with open(path, "wb") as fh:
        fh.write(f"P5\n{image.nx} {image.ny}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())


def write_image_csv(path, image: ImageGrid) -> None:
    with open(path, "w") as fh:
        fh.write(f"# image origin_x={image.origin[0]:.17g} origin_y={image.origin[1]:.17g} "
                 f"spacing={image.spacing:.17g} nx={image.nx} ny={image.ny}\n")
        for row in image.values:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_image_csv(path) -> ImageGrid:
    with open(path) as fh:
        head = fh.readline()
        if not head.startswith("# image"):
            raise ValueError(f"{path}: not an image CSV")
        fields = dict(item.split("=") for item in head[len("# image"):].split())
        values = np.array([[float(v) for v in ln.split(",")] for ln in fh if ln.strip()])
    image = ImageGrid((float(fields["origin_x"]), float(fields["origin_y"])),
                      float(fields["spacing"]), values)
    if (image.nx, image.ny) != (int(fields["nx"]), int(fields["ny"])):
        raise ValueError(f"{path}: dimensions do not match the header")
    return image
