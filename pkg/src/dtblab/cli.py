"""Experiment configs, the scenario pipeline and the ``dtblab`` command.

Configs are sectioned ``key = value`` files::

    [geometry]
    n_p = 501
    fine_step = 0.0625        # shell cell arc length, eps units

    [phantom]
    center = 0.1, 0.2
    radius = 0.3
    f_in = 1
    f_out = 0
    mode = full               # or shell

    [perturbation]
    kind = weierstrass        # zero | constant | sinusoid | weierstrass
    gamma = 0.5

    [profiles]
    angles = 0.33, 0.49       # alpha / pi, base point x_c - R (cos alpha, sin alpha)
    window = -25, 25
    step = 0.25

    [convergence]
    n_p = 251, 501, 1001
    window = -15, 15

    [output]
    directory = out
    artifacts = sinogram, roi, profiles, metrics
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .boundary import PerturbationSpec
from .dtb import ProfileSeries, ProfileSpec, dtb_new, dtb_original, extract_profiles, ideal_profile
from .forward import ScanGeometry, Sinogram, read_sinogram, simulate_sinogram, write_sinogram
from .phantom import Mode, PhantomSpec, local_frame, polar_base_angle
from .recon import (
    Region, filter_projections, read_image_csv, reconstruct_grid, write_image_csv, write_pgm,
)

ARTIFACTS = ("sinogram", "image", "roi", "profiles", "metrics")
METRICS_HEADER = "eps,angle,rms_orig,rms_new,sup_orig,sup_new"
ROI_HALF = 50  # ROI is (2 * ROI_HALF + 1)^2 pixels of size eps around the base point
EXIT_CONFIG = 2
EXIT_IO = 3


class ConfigError(ValueError):
    """Invalid experiment configuration; `problems` lists every violation."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def _floats(text, name, problems, count=None):
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        problems.append(f"{name}: expected numbers, got {text!r}")
        return None
    if count is not None and len(vals) != count:
        problems.append(f"{name}: expected {count} values, got {len(vals)}")
        return None
    return vals


def _fmt(v) -> str:
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class ExperimentConfig:
    n_p: int = 501
    fine_step: float = 1 / 16
    center: tuple = (0.1, 0.2)
    radius: float = 0.3
    f_in: float = 1.0
    f_out: float = 0.0
    mode: str = "full"
    perturbation: dict = field(default_factory=lambda: {"kind": "zero"})
    angles: tuple = (0.32,)
    profile_window: tuple = (-25.0, 25.0)
    profile_step: float = 0.25
    convergence_n_p: tuple = ()
    metric_window: tuple = (-15.0, 15.0)
    output_dir: str = "out"
    artifacts: tuple = ("sinogram", "profiles", "metrics")

    # --- construction -----------------------------------------------------

    @classmethod
    def parse(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError([f"syntax: {exc}"]) from exc
        problems = []
        known = {"geometry", "phantom", "perturbation", "profiles", "convergence", "output"}
        for sec in cp.sections():
            if sec not in known:
                problems.append(f"unknown section [{sec}]")
        kw = {}

        def get(sec, key):
            return cp.get(sec, key, fallback=None)

        if (v := get("geometry", "n_p")) is not None:
            try:
                kw["n_p"] = int(v)
            except ValueError:
                problems.append(f"geometry.n_p: expected an integer, got {v!r}")
        if (v := get("geometry", "fine_step")) is not None:
            if (f := _floats(v, "geometry.fine_step", problems, 1)) is not None:
                kw["fine_step"] = f[0]
        if (v := get("phantom", "center")) is not None:
            if (f := _floats(v, "phantom.center", problems, 2)) is not None:
                kw["center"] = tuple(f)
        for key in ("radius", "f_in", "f_out"):
            if (v := get("phantom", key)) is not None:
                if (f := _floats(v, f"phantom.{key}", problems, 1)) is not None:
                    kw[key] = f[0]
        if (v := get("phantom", "mode")) is not None:
            kw["mode"] = v.strip().lower()
        if cp.has_section("perturbation"):
            kw["perturbation"] = {k: v.strip() for k, v in cp.items("perturbation")}
        if (v := get("profiles", "angles")) is not None:
            if (f := _floats(v, "profiles.angles", problems)) is not None:
                kw["angles"] = tuple(f)
        if (v := get("profiles", "window")) is not None:
            if (f := _floats(v, "profiles.window", problems, 2)) is not None:
                kw["profile_window"] = tuple(f)
        if (v := get("profiles", "step")) is not None:
            if (f := _floats(v, "profiles.step", problems, 1)) is not None:
                kw["profile_step"] = f[0]
        if (v := get("convergence", "n_p")) is not None:
            try:
                kw["convergence_n_p"] = tuple(int(x) for x in v.split(",") if x.strip())
            except ValueError:
                problems.append(f"convergence.n_p: expected integers, got {v!r}")
        if (v := get("convergence", "window")) is not None:
            if (f := _floats(v, "convergence.window", problems, 2)) is not None:
                kw["metric_window"] = tuple(f)
        if (v := get("output", "directory")) is not None:
            kw["output_dir"] = v.strip()
        if (v := get("output", "artifacts")) is not None:
            kw["artifacts"] = tuple(a.strip().lower() for a in v.split(",") if a.strip())
        if problems:
            raise ConfigError(problems)
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.parse(Path(path).read_text())

    def dumps(self) -> str:
        sections = {
            "geometry": {"n_p": self.n_p, "fine_step": self.fine_step},
            "phantom": {"center": list(self.center), "radius": self.radius, "f_in": self.f_in,
                        "f_out": self.f_out, "mode": self.mode},
            "perturbation": dict(self.perturbation),
            "profiles": {"angles": list(self.angles), "window": list(self.profile_window),
                         "step": self.profile_step},
            "convergence": {"n_p": list(self.convergence_n_p), "window": list(self.metric_window)},
            "output": {"directory": self.output_dir, "artifacts": list(self.artifacts)},
        }
        lines = []
        for sec, items in sections.items():
            lines.append(f"[{sec}]")
            lines.extend(f"{k} = {_fmt(v)}" for k, v in items.items())
            lines.append("")
        return "\n".join(lines)

    def with_n_p(self, n_p: int) -> "ExperimentConfig":
        cfg = replace(self, n_p=int(n_p))
        cfg.validate()
        return cfg

    # --- validation -------------------------------------------------------

    def _coverage_problems(self, n_values) -> list[str]:
        """Profiles (and the ROI at the main N_p) must stay inside the field of view."""
        out = []
        fov = Region.field_of_view()
        for name, n in n_values:
            phantom = self.phantom_spec(n)
            for a in self.angles:
                frame = base_frame(a, phantom)
                pts = ProfileSpec(frame, self.profile_window, self.profile_step).points(phantom.eps)
                boxes = [("profile", Region.around(pts[[0, -1]], 2 * phantom.eps))]
                if name == "geometry.n_p" and "roi" in self.artifacts:
                    boxes.append(("roi", _roi_region(frame, phantom.eps)))
                for what, box in boxes:
                    if not np.all(fov.contains(box.corners(), tol=1e-9)):
                        out.append(f"{what} at alpha={a:g}pi leaves the field of view at {name}={n}")
        return out

    def perturbation_spec(self) -> PerturbationSpec:
        p = dict(self.perturbation)
        kind = p.pop("kind", "zero").lower()
        num = {}
        for k, v in p.items():
            try:
                num[k] = float(v)
            except ValueError as exc:
                raise ValueError(f"perturbation.{k}: expected a number, got {v!r}") from exc
        allowed = {
            "zero": set(), "constant": {"h"}, "sinusoid": {"amplitude", "frequency"},
            "weierstrass": {"gamma", "amplitude", "ratio", "start", "n_max"},
        }
        if kind not in allowed:
            raise ValueError(f"perturbation.kind: unknown kind {kind!r} (use {', '.join(allowed)})")
        extra = set(num) - allowed[kind]
        if extra:
            raise ValueError(f"perturbation: keys {sorted(extra)} do not apply to {kind}")
        if kind == "zero":
            return PerturbationSpec.zero()
        if kind == "constant":
            if "h" not in num:
                raise ValueError("perturbation.h is required for kind constant")
            return PerturbationSpec.constant(num["h"])
        if kind == "sinusoid":
            return PerturbationSpec.sinusoid(**num)
        for k in ("start", "n_max"):
            if k in num:
                if num[k] != int(num[k]):
                    raise ValueError(f"perturbation.{k} must be an integer")
                num[k] = int(num[k])
        return PerturbationSpec.weierstrass(**num)

    def phantom_spec(self, n_p: int | None = None) -> PhantomSpec:
        g = ScanGeometry(self.n_p if n_p is None else n_p)
        return PhantomSpec(center=self.center, radius=self.radius, f_in=self.f_in, f_out=self.f_out,
                           perturbation=self.perturbation_spec(), eps=g.eps, mode=Mode(self.mode))

    def validate(self) -> None:
        problems = []
        n_values = [("geometry.n_p", self.n_p)] + [("convergence.n_p", n) for n in self.convergence_n_p]
        for name, n in n_values:
            try:
                ScanGeometry(n)
            except ValueError as exc:
                problems.append(f"{name}: {exc}")
        if not 0 < self.fine_step <= 1 / 8:
            problems.append(f"geometry.fine_step must lie in (0, 1/8], got {self.fine_step}")
        if self.mode not in ("full", "shell"):
            problems.append(f"phantom.mode must be 'full' or 'shell', got {self.mode!r}")
        elif self.mode == "full" and self.f_out != 0:
            problems.append("phantom.f_out must be 0 in full mode (a constant background has no Radon transform)")
        try:
            pert = self.perturbation_spec()
        except ValueError as exc:
            problems.append(str(exc))
            pert = None
        if pert is not None and self.mode in ("full", "shell"):
            for name, n in n_values:
                try:
                    self.phantom_spec(n)
                except ValueError as exc:
                    problems.append(f"phantom at {name}={n}: {exc}")
        if not self.angles:
            problems.append("profiles.angles: at least one base angle is required")
        lo, hi = self.profile_window
        if not lo < hi:
            problems.append(f"profiles.window must be increasing, got {self.profile_window}")
        if not self.profile_step > 0:
            problems.append("profiles.step must be positive")
        if not problems:
            problems.extend(self._coverage_problems(n_values))
        mlo, mhi = self.metric_window
        if not (lo <= mlo < mhi <= hi):
            problems.append(f"convergence.window {self.metric_window} must be a nonempty part of "
                            f"profiles.window {self.profile_window}")
        if self.convergence_n_p and len(self.convergence_n_p) < 3:
            problems.append("convergence.n_p needs at least 3 values")
        if not self.artifacts:
            problems.append("output.artifacts: request at least one artifact")
        for a in self.artifacts:
            if a not in ARTIFACTS:
                problems.append(f"output.artifacts: unknown artifact {a!r} (use {', '.join(ARTIFACTS)})")
        if problems:
            raise ConfigError(problems)


# ---------------------------------------------------------------------------
# pipeline


def angle_tag(alpha_pi: float) -> str:
    return f"a{alpha_pi:g}pi"


def base_frame(alpha_pi: float, phantom: PhantomSpec):
    """Frame at ``x_c - R (cos alpha, sin alpha)``, alpha given in units of pi."""
    return local_frame(polar_base_angle(alpha_pi * math.pi), phantom)


def compute_metrics(profile: ProfileSeries, window=(-15.0, 15.0)) -> dict:
    """RMS and sup of recon minus each predictor over ``window[0] <= s_hat <= window[1]``."""
    lo, hi = window
    s = profile.s_hat
    if not lo < hi:
        raise ValueError(f"empty metric window {window}")
    if lo < s[0] - 1e-12 or hi > s[-1] + 1e-12:
        raise ValueError(f"metric window {window} exceeds the profile range [{s[0]}, {s[-1]}]")
    m = (s >= lo - 1e-12) & (s <= hi + 1e-12)
    if not m.any():
        raise ValueError(f"no profile samples in window {window}")
    d_orig = (profile.recon - profile.dtb_original)[m]
    d_new = (profile.recon - profile.dtb_new)[m]
    return {
        "rms_orig": float(np.sqrt(np.mean(d_orig**2))),
        "rms_new": float(np.sqrt(np.mean(d_new**2))),
        "sup_orig": float(np.max(np.abs(d_orig))),
        "sup_new": float(np.max(np.abs(d_new))),
    }


@dataclass
class ScenarioRun:
    """Everything one N_p of a config produces, kept in memory."""

    geometry: ScanGeometry
    phantom: PhantomSpec
    sinogram: Sinogram
    profiles: dict
    rois: dict


def _roi_region(frame, eps):
    x0 = np.asarray(frame.x0)
    return Region.around(x0[None], ROI_HALF * eps)


def run_pipeline(cfg: ExperimentConfig, n_p: int | None = None, sinogram: Sinogram | None = None,
                 want_roi: bool = False) -> ScenarioRun:
    n_p = cfg.n_p if n_p is None else n_p
    geometry = ScanGeometry(n_p)
    phantom = cfg.phantom_spec(n_p)
    fine_step = cfg.fine_step * geometry.eps
    if sinogram is None:
        sinogram = simulate_sinogram(phantom, geometry, fine_step)
    elif sinogram.geometry != geometry:
        raise ConfigError([f"sinogram has N_p={sinogram.geometry.n_p}, config asks for {n_p}"])
    profiles, rois = {}, {}
    for a in cfg.angles:
        frame = base_frame(a, phantom)
        spec = ProfileSpec(frame, cfg.profile_window, cfg.profile_step)
        pts = spec.points(geometry.eps)
        region = Region.around(pts, 2 * geometry.eps)
        if want_roi:
            r = _roi_region(frame, geometry.eps)
            region = Region(min(region.xmin, r.xmin), max(region.xmax, r.xmax),
                            min(region.ymin, r.ymin), max(region.ymax, r.ymax))
        fp = filter_projections(sinogram, region)
        profiles[a] = extract_profiles(spec, phantom, fp, fine_step)
        if want_roi:
            origin = np.asarray(frame.x0) - ROI_HALF * geometry.eps
            rois[a] = reconstruct_grid(origin, geometry.eps, 2 * ROI_HALF + 1, 2 * ROI_HALF + 1, fp)
    return ScenarioRun(geometry, phantom, sinogram, profiles, rois)


def metrics_rows(cfg: ExperimentConfig, run: ScenarioRun) -> list[tuple]:
    rows = []
    for a, prof in run.profiles.items():
        m = compute_metrics(prof, cfg.metric_window)
        rows.append((run.geometry.eps, a * math.pi, m["rms_orig"], m["rms_new"], m["sup_orig"], m["sup_new"]))
    return rows


def write_metrics(path, rows) -> None:
    with open(path, "w") as fh:
        fh.write(METRICS_HEADER + "\n")
        for r in rows:
            fh.write(",".join(f"{v:.17g}" for v in r) + "\n")


def read_metrics(path) -> list[tuple]:
    with open(path) as fh:
        if fh.readline().strip() != METRICS_HEADER:
            raise ValueError(f"{path}: not a metrics file")
        return [tuple(float(v) for v in ln.split(",")) for ln in fh if ln.strip()]


def full_image(run: ScenarioRun):
    g = run.geometry
    fp = filter_projections(run.sinogram, Region.field_of_view())
    return reconstruct_grid((-0.6, -0.6), g.eps, g.n_p, g.n_p, fp)


def run_scenario(cfg: ExperimentConfig) -> list[Path]:
    """Execute the pipeline and write the requested artifacts.

    Returns the manifest: every file written, in order, ending with
    ``manifest.txt`` itself.
    """
    cfg.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    arts = set(cfg.artifacts)
    run = run_pipeline(cfg, want_roi="roi" in arts)
    written = []

    def emit(name, writer, *args):
        path = out / name
        writer(path, *args)
        written.append(path)

    emit("config.ini", lambda p: p.write_text(cfg.dumps()))
    if "sinogram" in arts:
        emit("sinogram.csv", write_sinogram, run.sinogram)
    if "profiles" in arts:
        for a, prof in run.profiles.items():
            emit(f"profile_{angle_tag(a)}.csv", prof.to_csv)
    if "roi" in arts:
        for a, img in run.rois.items():
            emit(f"roi_{angle_tag(a)}.csv", write_image_csv, img)
            emit(f"roi_{angle_tag(a)}.pgm", write_pgm, img)
    if "image" in arts:
        img = full_image(run)
        emit("image.csv", write_image_csv, img)
        emit("image.pgm", write_pgm, img)
    if "metrics" in arts:
        emit("metrics.csv", write_metrics, metrics_rows(cfg, run))
    manifest = out / "manifest.txt"
    written.append(manifest)
    manifest.write_text("".join(f"{p.name}\n" for p in written))
    return written


# ---------------------------------------------------------------------------
# convergence


@dataclass(frozen=True)
class SlopeFit:
    angle: float
    slope_orig: float
    residual_orig: float
    slope_new: float
    residual_new: float


@dataclass(frozen=True)
class ConvergenceResult:
    rows: list  # metrics rows, see METRICS_HEADER
    slopes: list


def _loglog_fit(eps, vals):
    x, y = np.log(eps), np.log(vals)
    coef = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((np.polyval(coef, x) - y) ** 2)))
    return float(coef[0]), resid


def convergence_study(cfg: ExperimentConfig, n_values=None) -> ConvergenceResult:
    """Metrics at each N_p and least-squares slopes of log(rms) against log(eps)."""
    n_values = tuple(cfg.convergence_n_p if n_values is None else n_values)
    if len(n_values) < 3:
        raise ValueError(f"a convergence study needs at least 3 N_p values, got {len(n_values)}")
    rows = []
    for n in n_values:
        rows.extend(metrics_rows(cfg, run_pipeline(cfg, n)))
    slopes = []
    for a in cfg.angles:
        sel = [r for r in rows if math.isclose(r[1], a * math.pi)]
        eps = np.array([r[0] for r in sel])
        so, ro = _loglog_fit(eps, [r[2] for r in sel])
        sn, rn = _loglog_fit(eps, [r[3] for r in sel])
        slopes.append(SlopeFit(a * math.pi, so, ro, sn, rn))
    return ConvergenceResult(rows, slopes)


# ---------------------------------------------------------------------------
# command line


def _dtb_only_csv(path, cfg, a, phantom):
    frame = base_frame(a, phantom)
    spec = ProfileSpec(frame, cfg.profile_window, cfg.profile_step)
    s = spec.s_hat()
    cols = (s, dtb_original(s, frame, phantom),
            dtb_new(spec.points(phantom.eps), phantom, cfg.fine_step * phantom.eps),
            ideal_profile(s, frame, phantom))
    with open(path, "w") as fh:
        fh.write("s_hat,dtb_original,dtb_new,ideal\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _read(reader, path):
    """Run a file reader, reporting malformed content as an I/O error."""
    try:
        return reader(path)
    except ValueError as exc:
        raise OSError(None, str(exc), str(path)) from exc


def _load_sinogram_if_any(out: Path, n_p: int):
    path = out / "sinogram.csv"
    if path.exists():
        sino = _read(read_sinogram, path)
        if sino.geometry.n_p == n_p:
            return sino
    return None


def _cmd(args, cfg: ExperimentConfig) -> list[Path]:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    cmd = args.command
    if cmd == "run":
        return run_scenario(cfg)
    if cmd == "simulate":
        g = ScanGeometry(cfg.n_p)
        sino = simulate_sinogram(cfg.phantom_spec(), g, cfg.fine_step * g.eps)
        write_sinogram(out / "sinogram.csv", sino)
        written.append(out / "sinogram.csv")
    elif cmd == "reconstruct":
        run = run_pipeline(cfg, sinogram=_load_sinogram_if_any(out, cfg.n_p), want_roi=True)
        for a, img in run.rois.items():
            write_image_csv(out / f"roi_{angle_tag(a)}.csv", img)
            written.append(out / f"roi_{angle_tag(a)}.csv")
        if args.full:
            write_image_csv(out / "image.csv", full_image(run))
            written.append(out / "image.csv")
    elif cmd == "dtb":
        phantom = cfg.phantom_spec()
        for a in cfg.angles:
            path = out / f"dtb_{angle_tag(a)}.csv"
            _dtb_only_csv(path, cfg, a, phantom)
            written.append(path)
    elif cmd == "profile":
        run = run_pipeline(cfg, sinogram=_load_sinogram_if_any(out, cfg.n_p))
        for a, prof in run.profiles.items():
            path = out / f"profile_{angle_tag(a)}.csv"
            prof.to_csv(path)
            written.append(path)
    elif cmd == "metrics":
        eps = ScanGeometry(cfg.n_p).eps
        rows = []
        for a in cfg.angles:
            path = out / f"profile_{angle_tag(a)}.csv"
            if not path.exists():
                raise FileNotFoundError(f"{path}: run 'dtblab profile' first")
            m = compute_metrics(_read(ProfileSeries.from_csv, path), cfg.metric_window)
            rows.append((eps, a * math.pi, m["rms_orig"], m["rms_new"], m["sup_orig"], m["sup_new"]))
        write_metrics(out / "metrics.csv", rows)
        written.append(out / "metrics.csv")
    elif cmd == "convergence":
        if len(cfg.convergence_n_p) < 3:
            raise ConfigError(["convergence.n_p needs at least 3 values"])
        res = convergence_study(cfg)
        write_metrics(out / "convergence.csv", res.rows)
        with open(out / "slopes.csv", "w") as fh:
            fh.write("angle,slope_orig,residual_orig,slope_new,residual_new\n")
            for s in res.slopes:
                fh.write(f"{s.angle:.17g},{s.slope_orig:.17g},{s.residual_orig:.17g},"
                         f"{s.slope_new:.17g},{s.residual_new:.17g}\n")
                print(f"alpha={s.angle / math.pi:g}pi  slope_orig={s.slope_orig:.3f} "
                      f"(resid {s.residual_orig:.3f})  slope_new={s.slope_new:.3f} (resid {s.residual_new:.3f})")
        written += [out / "convergence.csv", out / "slopes.csv"]
    elif cmd == "render":
        sources = sorted(out.glob("*.csv"))
        for src in sources:
            with open(src) as fh:
                if not fh.readline().startswith("# image"):
                    continue
            dst = src.with_suffix(".pgm")
            write_pgm(dst, _read(read_image_csv, src))
            written.append(dst)
        if not written:
            raise FileNotFoundError(f"{out}: no image CSV files to render")
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dtblab", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "run": "full pipeline with every requested artifact and a manifest",
        "simulate": "write sinogram.csv",
        "reconstruct": "write ROI images (and the full image with --full)",
        "dtb": "write both predictors along each profile",
        "profile": "write profile CSVs (reuses sinogram.csv when present)",
        "metrics": "summarize profile CSVs into metrics.csv",
        "convergence": "metrics over convergence.n_p and log-log slopes",
        "render": "convert image CSVs in the output directory to PGM",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=name != "render", help="experiment config file")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        p.add_argument("--threads", type=int, default=0, help="worker threads, 0 = all cores")
        p.add_argument("--np", dest="n_p", type=int, help="override geometry.n_p")
        if name == "reconstruct":
            p.add_argument("--full", action="store_true", help="also reconstruct the whole field of view")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
        if args.out:
            cfg = replace(cfg, output_dir=args.out)
        if args.n_p is not None:
            cfg = cfg.with_n_p(args.n_p)
        if args.threads:
            import numba

            numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
        written = _cmd(args, cfg)
    except ConfigError as exc:
        print("config error:", file=sys.stderr)
        for p in exc.problems:
            print(f"  - {p}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        where = f" ({exc.filename})" if getattr(exc, "filename", None) else ""
        print(f"i/o error{where}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    for p in written:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
