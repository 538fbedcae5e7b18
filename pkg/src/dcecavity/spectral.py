"""Frequency-domain kernels, cooperativities and stability/regime diagnostics.

Kernels are written with the Fourier convention ``O(t) ~ int O(w) e^{-i w t}``,
so every coefficient is a real rational function of ``-i w`` when the
modulation amplitudes are real.  For the self-energies this means
``i Sigma(-w) = conj(i Sigma(w))``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import BoundaryNotFoundError, IndeterminateRegimeError, PoleError
from .lyapunov import spectral_abscissa
from .model import ModelParams, build_drift

__all__ = [
    "SpectralPoint",
    "spectral_point",
    "Regime",
    "RegimeReport",
    "collective_cooperativities",
    "coherent_ratio",
    "regime_report",
    "StabilityBoundary",
    "find_stability_boundary",
    "default_band",
    "POLE_TOL",
    "COHERENT_THRESHOLD",
]

POLE_TOL = 1e-14
COHERENT_THRESHOLD = 0.1
KERNELS = (
    "sigma_a",
    "sigma_b",
    "sigma_d",
    "sigma_s",
    "sigma_m_aux",
    "lam_bar_s",
    "lam_m_aux",
    "lam_tilde_a",
    "lam_tilde_b",
    "lam_tilde_d",
)


def default_band():
    """201 equispaced frequencies on ``[-kappa, kappa]``."""
    return np.linspace(-1.0, 1.0, 201)


@dataclass(frozen=True)
class SpectralPoint:
    """All kernels at one frequency (or an array of frequencies)."""

    omega: float | np.ndarray
    sigma_a: complex | np.ndarray
    sigma_b: complex | np.ndarray
    sigma_d: complex | np.ndarray
    sigma_s: complex | np.ndarray
    sigma_m_aux: complex | np.ndarray
    lam_bar_s: complex | np.ndarray
    lam_m_aux: complex | np.ndarray
    lam_tilde_a: complex | np.ndarray
    lam_tilde_b: complex | np.ndarray
    lam_tilde_d: complex | np.ndarray


def _guard(den, name, omega):
    bad = np.abs(den) < POLE_TOL
    if np.any(bad):
        w = np.asarray(omega)[bad] if np.ndim(omega) else omega
        raise PoleError(name, float(np.ravel(w)[0]))
    return den


def spectral_point(p: ModelParams, omega) -> SpectralPoint:
    """Evaluate self-energies and induced gain factors at ``omega``.

    ``omega`` may be a scalar or an array; fields then have matching shape.

    Raises
    ------
    PoleError
        If any denominator has modulus below ``1e-14``.
    """
    w = np.asarray(omega, dtype=float)
    s = -1j * w
    g2, G2 = p.g**2, p.G**2
    lm, ld = p.lambda_m, p.lambda_d

    zm = p.gamma_m / 2 + s
    zd = p.gamma_d / 2 + s
    den_m = _guard(zm**2 - lm**2, "mechanical response", omega)
    den_d = _guard(zd**2 - ld**2, "Bogoliubov response", omega)

    i_sigma_m = g2 * zm / den_m
    i_sigma_s = G2 * zd / den_d
    lam_m_aux = lm * g2 / den_m
    lam_bar_s = ld * G2 / den_d
    sigma_m = -1j * i_sigma_m
    sigma_s = -1j * i_sigma_s

    i_sigma_a = i_sigma_m + i_sigma_s
    lam_tilde_a = lam_m_aux + lam_bar_s

    # kappa/2 - i(w - Sigma) = kappa/2 - i w + i Sigma
    zb = p.kappa / 2 + s + i_sigma_s
    den_b = _guard(zb**2 - lam_bar_s**2, "dressed cavity (BEC branch)", omega)
    i_sigma_b = g2 * zb / den_b
    lam_tilde_b = lm + g2 * lam_bar_s / den_b

    zdd = p.kappa / 2 + s + i_sigma_m
    den_dd = _guard(zdd**2 - lam_m_aux**2, "dressed cavity (mirror branch)", omega)
    i_sigma_d = G2 * zdd / den_dd
    lam_tilde_d = ld + G2 * lam_m_aux / den_dd

    def out(x):
        return complex(x) if np.ndim(x) == 0 else x

    return SpectralPoint(
        omega=float(w) if w.ndim == 0 else w,
        sigma_a=out(-1j * i_sigma_a),
        sigma_b=out(-1j * i_sigma_b),
        sigma_d=out(-1j * i_sigma_d),
        sigma_s=out(sigma_s),
        sigma_m_aux=out(sigma_m),
        lam_bar_s=out(lam_bar_s),
        lam_m_aux=out(lam_m_aux),
        lam_tilde_a=out(lam_tilde_a),
        lam_tilde_b=out(lam_tilde_b),
        lam_tilde_d=out(lam_tilde_d),
    )


class Regime(str, enum.Enum):
    COHERENT = "coherent"
    DISSIPATIVE = "dissipative"
    UNMODULATED = "unmodulated"
    INDETERMINATE = "indeterminate"


def coherent_ratio(p: ModelParams, omega_band=None, threshold=COHERENT_THRESHOLD):
    """Largest ``|Im lam_tilde_a / Re lam_tilde_a|`` over a frequency band.

    Points with ``|Re lam_tilde_a| <= 1e-14`` are skipped.  The regime is
    coherent when the ratio is below ``threshold``.

    Returns
    -------
    ratio : float
    regime : Regime
    """
    if p.lambda_m + p.lambda_d == 0:
        return 0.0, Regime.UNMODULATED
    band = default_band() if omega_band is None else np.atleast_1d(np.asarray(omega_band, float))
    if band.size == 0:
        raise IndeterminateRegimeError("empty frequency band")
    lam = spectral_point(p, band).lam_tilde_a
    lam = np.atleast_1d(lam)
    ok = np.abs(lam.real) > 1e-14
    if not np.any(ok):
        raise IndeterminateRegimeError("Re lam_tilde_a vanishes on the whole band")
    ratio = float(np.max(np.abs(lam.imag[ok] / lam.real[ok])))
    return ratio, (Regime.COHERENT if ratio < threshold else Regime.DISSIPATIVE)


def collective_cooperativities(c0, c1, xi_m, xi_d):
    """Collective cooperativities ``(C_m, C_d)`` from the on-resonance self-energies.

    ``C_m = C0 (1 - xi_d^2)(1 + C1 - xi_d^2) / ((1 + C1 - xi_d^2)^2 - xi_d^2 C1^2)``
    and symmetrically for ``C_d``; this equals ``-2 Im Sigma_b(0) / gamma_m``.
    Both reduce to ``C0 / (1 + C1)`` (resp. ``C1 / (1 + C0)``) without
    partner modulation.
    """

    def one(c_self, c_other, xi_other):
        u = 1.0 + c_other - xi_other**2
        den = u**2 - xi_other**2 * c_other**2
        if den == 0:
            return math.inf
        return c_self * (1.0 - xi_other**2) * u / den

    return one(c0, c1, xi_d), one(c1, c0, xi_m)


@dataclass(frozen=True)
class RegimeReport:
    """Closed-form figures of merit for one parameter set.

    ``kappa_opt`` is signed (negative above ``xi = 1``);
    ``kappa_opt_divergent`` flags ``xi_m`` or ``xi_d`` within 1e-12 of 1.
    """

    cooperativity_c0: float
    cooperativity_c1: float
    collective_cm: float
    collective_cd: float
    xi_m: float
    xi_d: float
    xi_m_max: float
    xi_d_max: float
    gamma_eff_m: float
    gamma_eff_d: float
    kappa_opt: float
    kappa_eff: float
    cooperativity_ca: float
    coherent_ratio: float
    regime: Regime
    kappa_opt_divergent: bool = False

    def as_dict(self):
        d = dict(self.__dict__)
        d["regime"] = self.regime.value
        return d


def _pole_term(c, xi):
    den = 1.0 - xi**2
    if abs(den) < 1e-12:
        return math.copysign(math.inf, c) if c else 0.0, True
    return c / den, False


def regime_report(p: ModelParams, omega_band=None, threshold=COHERENT_THRESHOLD) -> RegimeReport:
    """Cooperativities, effective dampings, modulation bounds and regime of ``p``.

    ``xi_max = 1 + C_collective`` for each channel, evaluated with the partner
    channel's ``xi`` frozen at its configured value.
    """
    c0, c1 = p.c0, p.c1
    xi_m, xi_d = p.xi_m, p.xi_d
    cm, cd = collective_cooperativities(c0, c1, xi_m, xi_d)
    tm, div_m = _pole_term(c0, xi_m)
    td, div_d = _pole_term(c1, xi_d)
    ca = tm + td
    try:
        ratio, regime = coherent_ratio(p, omega_band, threshold)
    except (IndeterminateRegimeError, PoleError):
        ratio, regime = math.nan, Regime.INDETERMINATE
    return RegimeReport(
        cooperativity_c0=c0,
        cooperativity_c1=c1,
        collective_cm=cm,
        collective_cd=cd,
        xi_m=xi_m,
        xi_d=xi_d,
        xi_m_max=1.0 + cm,
        xi_d_max=1.0 + cd,
        gamma_eff_m=p.gamma_m * (1.0 + cm),
        gamma_eff_d=p.gamma_d * (1.0 + cd),
        kappa_opt=p.kappa * ca,
        kappa_eff=p.kappa * (1.0 + ca),
        cooperativity_ca=ca,
        coherent_ratio=ratio,
        regime=regime,
        kappa_opt_divergent=div_m or div_d,
    )


@dataclass(frozen=True)
class StabilityBoundary:
    channel: str
    lambda_critical: float
    lambda_predicted: float
    max_re_eig: float

    @property
    def relative_gap(self):
        return abs(self.lambda_critical - self.lambda_predicted) / self.lambda_predicted


def find_stability_boundary(p: ModelParams, which="mechanical", *, abscissa_tol=1e-10):
    """Locate the modulation amplitude where the drift loses stability.

    Bisects the chosen ``lambda`` on ``[0, 10 lambda_max]`` (``lambda_max``
    from the closed-form bound) for a sign change of the spectral abscissa,
    with the other channel held at its configured amplitude.

    Raises
    ------
    BoundaryNotFoundError
        If the system is unstable at zero amplitude or stays stable up to the
        end of the bracket.
    """
    if which not in ("mechanical", "atomic"):
        raise ValueError(f"which must be 'mechanical' or 'atomic', got {which!r}")
    field, gamma = ("lambda_m", p.gamma_m) if which == "mechanical" else ("lambda_d", p.gamma_d)
    cm, cd = collective_cooperativities(p.c0, p.c1, p.xi_m, p.xi_d)
    c_coll = cm if which == "mechanical" else cd
    predicted = gamma / 2 * (1.0 + c_coll)

    def f(lam):
        return spectral_abscissa(build_drift(p.replace(**{field: lam})))

    lo = 0.0
    if f(lo) >= 0:
        raise BoundaryNotFoundError(f"{which} channel already unstable at zero modulation")
    hi = 10.0 * predicted if predicted > 0 and math.isfinite(predicted) else 10.0 * gamma / 2
    if f(hi) <= 0:
        raise BoundaryNotFoundError(f"no {which} stability boundary below {hi:.6g}")
    lam_c = scipy.optimize.bisect(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=2000)
    abscissa = f(lam_c)
    if abs(abscissa) > abscissa_tol:
        raise BoundaryNotFoundError(
            f"bisection ended at lambda={lam_c:.17g} with max Re eig {abscissa:.3e}"
        )
    return StabilityBoundary(which, float(lam_c), float(predicted), float(abscissa))
