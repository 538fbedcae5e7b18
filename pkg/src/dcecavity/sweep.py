"""Parameter sweeps, figure presets and CSV output."""

from __future__ import annotations

import csv
import dataclasses
import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DCEError, MarginalStabilityError
from .lyapunov import solve_steady
from .model import ModelParams, build_diffusion, build_drift, occupations
from .spectral import COHERENT_THRESHOLD, coherent_ratio, find_stability_boundary, regime_report
from .svgplot import emit_plot

__all__ = [
    "Control",
    "SweepSpec",
    "SweepRow",
    "SweepTable",
    "FigurePreset",
    "PRESETS",
    "preset",
    "preset_comments",
    "run_preset",
    "resolve_params",
    "run_sweep",
    "emit_csv",
    "emit_plot",
    "read_csv",
    "CSV_HEADER",
    "default_workers",
]

CSV_HEADER = (
    "control",
    "n_photon",
    "n_phonon_m",
    "n_phonon_d",
    "max_re_eig",
    "residual",
    "coherent_ratio",
    "regime",
    "stable",
)
RELATIVE_CAP = 0.99


class Control(str, enum.Enum):
    XI_M_REL = "xi_m_rel"
    XI_D_REL = "xi_d_rel"
    LAMBDA_M = "lambda_m"
    LAMBDA_D = "lambda_d"
    G_SMALL = "g"
    G_BIG = "G"

    @property
    def relative(self):
        return self in (Control.XI_M_REL, Control.XI_D_REL)


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional sweep over a control parameter.

    For relative controls the value is ``xi / xi_max`` of the swept channel,
    with the partner channel held at ``fixed_partner_xi`` (or at the
    amplitude already in ``base`` when that is ``None``).  ``xi_max`` is the
    closed-form bound (``xi_max_method="formula"``) or the numerically
    located loss of stability (``"eigen"``).
    """

    base: ModelParams
    control: Control
    start: float
    stop: float
    points: int
    fixed_partner_xi: float | None = None
    omega_band: tuple | None = None
    coherent_threshold: float = COHERENT_THRESHOLD
    xi_max_method: str = "formula"

    def __post_init__(self):
        object.__setattr__(self, "control", Control(self.control))
        if int(self.points) != self.points or self.points < 2:
            raise ValueError(f"points: must be an integer >= 2, got {self.points!r}")
        object.__setattr__(self, "points", int(self.points))
        if not self.start < self.stop:
            raise ValueError(f"start must be < stop, got {self.start!r} >= {self.stop!r}")
        if self.control.relative and not (self.start >= 0 and self.stop < 1):
            raise ValueError("relative sweeps need 0 <= start < stop < 1 (xi_max is excluded)")
        if self.xi_max_method not in ("formula", "eigen"):
            raise ValueError(f"xi_max_method: expected 'formula' or 'eigen', got {self.xi_max_method!r}")
        if self.omega_band is not None:
            object.__setattr__(self, "omega_band", tuple(float(w) for w in self.omega_band))

    def grid(self):
        return np.linspace(self.start, self.stop, self.points)


@dataclass
class SweepRow:
    control_value: float
    n_photon: float | None
    n_phonon_m: float | None
    n_phonon_d: float | None
    max_re_eig: float
    residual: float | None
    coherent_ratio: float
    regime: str
    stable: bool
    error: str | None = field(default=None, compare=False)
    v: np.ndarray | None = field(default=None, compare=False, repr=False)

    def occupations(self):
        return (self.n_photon, self.n_phonon_m, self.n_phonon_d)


@dataclass
class SweepTable:
    rows: list
    label: str = ""
    comments: tuple = ()

    def column(self, name):
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.rows],
                        dtype=float)


@dataclass(frozen=True)
class FigurePreset:
    name: str
    spec: SweepSpec
    caption: str
    columns: tuple = ("n_photon", "n_phonon_m", "n_phonon_d")


def _partner_params(spec):
    p = spec.base
    xi = spec.fixed_partner_xi
    if xi is None:
        return p
    if spec.control in (Control.XI_M_REL, Control.LAMBDA_M):
        return p.with_xi(xi_d=xi)
    if spec.control in (Control.XI_D_REL, Control.LAMBDA_D):
        return p.with_xi(xi_m=xi)
    return p


def _xi_max(spec, p):
    mech = spec.control is Control.XI_M_REL
    if spec.xi_max_method == "formula":
        rep = regime_report(p, omega_band=spec.omega_band or None)
        return rep.xi_m_max if mech else rep.xi_d_max
    bound = find_stability_boundary(p, "mechanical" if mech else "atomic")
    gamma = p.gamma_m if mech else p.gamma_d
    return 2 * bound.lambda_critical / gamma


def resolve_params(spec: SweepSpec, value, xi_max=None) -> ModelParams:
    """Model parameters at one grid value of ``spec``."""
    p = _partner_params(spec)
    c = spec.control
    if c.relative:
        if xi_max is None:
            xi_max = _xi_max(spec, p)
        xi = value * xi_max
        return p.with_xi(xi_m=xi) if c is Control.XI_M_REL else p.with_xi(xi_d=xi)
    return p.replace(**{c.value: value})


def _solve_row(spec, value, p):
    band = spec.omega_band
    try:
        ratio, regime = coherent_ratio(p, band, spec.coherent_threshold)
        regime = regime.value
    except DCEError:
        ratio, regime = math.nan, "indeterminate"
    try:
        ss = solve_steady(build_drift(p), build_diffusion(p))
    except MarginalStabilityError as exc:
        return SweepRow(value, None, None, None, exc.max_re_eig, None, ratio, regime, False, str(exc))
    if not ss.stable:
        return SweepRow(value, None, None, None, ss.max_re_eig, None, ratio, regime, False, "unstable")
    try:
        n = occupations(ss.v)
    except DCEError as exc:
        return SweepRow(value, None, None, None, ss.max_re_eig, ss.residual, ratio, regime, False, str(exc))
    return SweepRow(value, n[0], n[1], n[2], ss.max_re_eig, ss.residual, ratio, regime, True, v=ss.v)


def default_workers():
    env = os.environ.get("DCE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"DCE_THREADS: expected an integer, got {env!r}") from None
    return min(8, os.cpu_count() or 1)


def run_sweep(spec: SweepSpec, workers=None, label="", comments=()) -> SweepTable:
    """Steady-state occupations and diagnostics at every grid point of ``spec``.

    Per-point failures (instability, marginal stability, non-physical
    covariance) are recorded in the row and never abort the sweep.  Points
    are independent and are mapped in order, so the output does not depend
    on ``workers`` (default: ``$DCE_THREADS`` or the CPU count, at most 8).
    """
    grid = spec.grid()
    xi_max = _xi_max(spec, _partner_params(spec)) if spec.control.relative else None
    params = [resolve_params(spec, float(x), xi_max) for x in grid]
    workers = default_workers() if workers is None else max(1, int(workers))

    def job(i):
        return _solve_row(spec, float(grid[i]), params[i])

    if workers == 1:
        rows = [job(i) for i in range(len(grid))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(job, range(len(grid))))
    return SweepTable(rows, label=label, comments=tuple(comments))


# --- figure presets --------------------------------------------------------

def _fig(name, caption, control, g, G, gamma, partner_xi=0.0, columns=None, points=200):
    base = ModelParams(kappa=1.0, gamma_m=gamma, gamma_d=gamma, g=g, G=G)
    spec = SweepSpec(base, control, 0.0, RELATIVE_CAP, points, fixed_partner_xi=partner_xi)
    kw = {} if columns is None else {"columns": columns}
    return FigurePreset(name, spec, caption, **kw)


def _build_presets():
    m, d = Control.XI_M_REL, Control.XI_D_REL
    no_bec = ("n_photon", "n_phonon_m")
    presets = [
        _fig("fig3a_weak", "no BEC (G=0), g/kappa=0.05, C0=100, kappa/gamma_m=1e4; sweep xi_m/xi_m_max",
             m, 0.05, 0.0, 1e-4, columns=no_bec),
        _fig("fig3a_strong", "no BEC (G=0), g/kappa=0.25, C0=2500, kappa/gamma_m=1e4; sweep xi_m/xi_m_max",
             m, 0.25, 0.0, 1e-4, columns=no_bec),
        _fig("fig4a", "xi_m=0, equal couplings g=G=0.05 kappa, gamma_m=gamma_d=1e-3 kappa; sweep xi_d/xi_d_max",
             d, 0.05, 0.05, 1e-3),
        _fig("fig4b", "xi_m=0, G=20g=0.1 kappa, gamma_m=gamma_d=1e-3 kappa; sweep xi_d/xi_d_max",
             d, 0.005, 0.1, 1e-3),
        _fig("fig5_equal", "xi_m=0, equal couplings g=G=0.05 kappa, gamma_m=gamma_d=1e-4 kappa; sweep xi_d/xi_d_max",
             d, 0.05, 0.05, 1e-4),
        _fig("fig5_diff", "xi_m=0, G=250g=0.25 kappa, gamma_m=gamma_d=1e-4 kappa; sweep xi_d/xi_d_max",
             d, 0.001, 0.25, 1e-4),
        _fig("fig6_equal_xm0", "xi_m=0, g=G=0.05 kappa, gamma_m=gamma_d=1e-4 kappa; sweep xi_d/xi_d_max",
             d, 0.05, 0.05, 1e-4, partner_xi=0.0),
        _fig("fig6_equal_xm02", "xi_m=0.2, g=G=0.05 kappa, gamma_m=gamma_d=1e-4 kappa; sweep xi_d/xi_d_max",
             d, 0.05, 0.05, 1e-4, partner_xi=0.2),
        _fig("fig6_diff_xm0", "xi_m=0, G=50g=0.05 kappa, gamma_m=gamma_d=1e-4 kappa; sweep xi_d/xi_d_max",
             d, 0.001, 0.05, 1e-4, partner_xi=0.0),
        _fig("fig6_diff_xm02", "xi_m=0.2, G=50g=0.05 kappa, gamma_m=gamma_d=1e-4 kappa; sweep xi_d/xi_d_max",
             d, 0.001, 0.05, 1e-4, partner_xi=0.2),
    ]
    return {p.name: p for p in presets}


PRESETS = _build_presets()


def preset(name, points=None) -> FigurePreset:
    """Look up a figure preset, optionally with a different grid size."""
    try:
        fp = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}") from None
    if points is not None:
        fp = dataclasses.replace(fp, spec=dataclasses.replace(fp.spec, points=points))
    return fp


def preset_comments(fp: FigurePreset):
    b = fp.spec.base
    return (
        f"preset: {fp.name}",
        f"caption: {fp.caption}",
        f"params: kappa={b.kappa!r} gamma_m={b.gamma_m!r} gamma_d={b.gamma_d!r} g={b.g!r} G={b.G!r} "
        f"C0={b.c0!r} C1={b.c1!r} fixed_partner_xi={fp.spec.fixed_partner_xi!r}",
        f"control: {fp.spec.control.value} in [{fp.spec.start!r}, {fp.spec.stop!r}], {fp.spec.points} points",
    )


def run_preset(name, points=None, workers=None) -> SweepTable:
    fp = preset(name, points)
    return run_sweep(fp.spec, workers=workers, label=fp.name, comments=preset_comments(fp))


# --- CSV -------------------------------------------------------------------

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def emit_csv(table: SweepTable, path):
    """Write ``table`` as UTF-8 CSV with LF line endings.

    ``#``-prefixed comment lines from ``table.comments`` precede the header.
    Floats use ``repr`` so the file round-trips exactly through
    :func:`read_csv`; missing values are empty fields.
    """
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for line in table.comments:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in table.rows:
                w.writerow([
                    _fmt(float(r.control_value)),
                    _fmt(r.n_photon),
                    _fmt(r.n_phonon_m),
                    _fmt(r.n_phonon_d),
                    _fmt(float(r.max_re_eig)),
                    _fmt(r.residual),
                    _fmt(float(r.coherent_ratio)),
                    r.regime,
                    _fmt(bool(r.stable)),
                ])
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path!s}: {exc.strerror or exc}") from exc


def _opt(s):
    return None if s == "" else float(s)


def read_csv(path) -> SweepTable:
    """Parse a file written by :func:`emit_csv`."""
    comments, body = [], []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                comments.append(line[1:].strip())
            else:
                body.append(line)
    reader = csv.reader(body)
    header = next(reader, None)
    if header is None or tuple(header) != CSV_HEADER:
        raise ValueError(f"{path!s}: unexpected CSV header {header!r}")
    rows = []
    for rec in reader:
        rows.append(SweepRow(
            control_value=float(rec[0]),
            n_photon=_opt(rec[1]),
            n_phonon_m=_opt(rec[2]),
            n_phonon_d=_opt(rec[3]),
            max_re_eig=float(rec[4]),
            residual=_opt(rec[5]),
            coherent_ratio=float(rec[6]),
            regime=rec[7],
            stable=rec[8] == "true",
        ))
    return SweepTable(rows, comments=tuple(comments))
