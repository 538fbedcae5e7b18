"""Steady-state and time-dependent covariance dynamics.

The covariance of the linear quadrature dynamics obeys
``dV/dt = A V + V A^T + D``; its stationary point solves the Lyapunov
equation ``A V + V A^T = -D``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, IntegrationCancelled, MarginalStabilityError, StepSizeError
from .model import ModelParams, build_diffusion, build_drift, occupations

__all__ = [
    "SteadyState",
    "spectral_abscissa",
    "solve_steady",
    "integrate_covariance",
    "TimeDependentParams",
    "build_drift_time_dependent",
    "RWAComparison",
    "rwa_validate",
]

MARGINAL_TOL = 1e-12
VACUUM_NOISE = 1e-12


@dataclass(frozen=True)
class SteadyState:
    """Result of a steady-state solve.

    ``v`` is ``None`` when the drift is unstable.  ``residual`` is
    ``||A V + V A^T + D||_2 / ||D||_2`` (``nan`` without a solution).
    """

    v: np.ndarray | None
    residual: float
    stable: bool
    max_re_eig: float


def spectral_abscissa(a) -> float:
    """Largest real part of the eigenvalues of ``a``."""
    return float(np.max(np.linalg.eigvals(np.asarray(a, dtype=float)).real))


def _lyapunov_residual(a, v, d):
    r = a @ v + v @ a.T + d
    dn = np.linalg.norm(d, 2)
    return float(np.linalg.norm(r, 2) / (dn if dn > 0 else 1.0))


def solve_steady(a, d, *, marginal_tol=MARGINAL_TOL) -> SteadyState:
    """Solve ``A V + V A^T = -D`` by vectorization.

    The ``n^2 x n^2`` system ``(A kron I + I kron A) vec(V) = -vec(D)`` (row-major
    ``vec``) is solved densely; for the 6-mode problem this is a 36x36 solve.
    Stability is diagnosed from the spectral abscissa of ``a`` first.

    Raises
    ------
    MarginalStabilityError
        If ``|max Re eig(A)| < marginal_tol``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    d = np.atleast_2d(np.asarray(d, dtype=float))
    n = a.shape[0]
    if a.shape != (n, n) or d.shape != (n, n):
        raise ValueError(f"incompatible shapes {a.shape} and {d.shape}")
    abscissa = spectral_abscissa(a)
    if abs(abscissa) < marginal_tol:
        raise MarginalStabilityError(abscissa)
    if abscissa > 0:
        return SteadyState(v=None, residual=math.nan, stable=False, max_re_eig=abscissa)

    eye = np.eye(n)
    m = np.kron(a, eye) + np.kron(eye, a)
    lu = scipy.linalg.lu_factor(m)
    v = scipy.linalg.lu_solve(lu, -d.reshape(-1)).reshape(n, n)
    v = 0.5 * (v + v.T)
    residual = _lyapunov_residual(a, v, d)
    if residual > 1e-13:
        # one step of iterative refinement
        r = a @ v + v @ a.T + d
        v = v + scipy.linalg.lu_solve(lu, -r.reshape(-1)).reshape(n, n)
        v = 0.5 * (v + v.T)
        residual = _lyapunov_residual(a, v, d)
    return SteadyState(v=v, residual=residual, stable=True, max_re_eig=abscissa)


def _rk4_step(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + (h / 2) * k1)
    k3 = rhs(t + h / 2, y + (h / 2) * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_covariance(a, d, v0, t_final, dt, *, tol=1e-9, cancel=None) -> np.ndarray:
    """Propagate ``dV/dt = A V + V A^T + D`` from ``v0`` over ``[0, t_final]``.

    Classical fixed-step RK4.  Every step is also taken as two half steps;
    the Richardson estimate ``|V_full - V_half| / 15`` (relative to
    ``max(|V|, 1)``) must stay below ``tol`` and the half-step result is kept.
    ``dt`` is shrunk so an integer number of steps lands on ``t_final``.

    Parameters
    ----------
    cancel : object with ``is_set()``, optional
        Cooperative cancellation token (e.g. ``threading.Event``), polled
        every 256 steps.
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    v = 0.5 * (np.asarray(v0, dtype=float) + np.asarray(v0, dtype=float).T)
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    if t_final < 0:
        raise ValueError(f"t_final must be >= 0, got {t_final!r}")
    if t_final == 0:
        return v
    steps = max(1, math.ceil(t_final / dt - 1e-12))
    h = t_final / steps

    def rhs(_t, y):
        ay = a @ y
        return ay + ay.T + d

    for i in range(steps):
        if cancel is not None and i % 256 == 0 and cancel.is_set():
            raise IntegrationCancelled(f"cancelled after {i} of {steps} steps")
        full = _rk4_step(rhs, 0.0, v, h)
        half = _rk4_step(rhs, 0.0, _rk4_step(rhs, 0.0, v, h / 2), h / 2)
        err = np.max(np.abs(full - half)) / 15.0 / max(np.max(np.abs(half)), 1.0)
        if err > tol:
            raise StepSizeError(f"local error {err:.2e} > tol {tol:.1e} at step {i} (dt={h:.3e})")
        v = 0.5 * (half + half.T)
    return v


@dataclass(frozen=True)
class TimeDependentParams:
    """Lab-frame (laser-rotating) parameters for the non-RWA linear dynamics.

    Frequencies are in units of ``kappa`` like everything in ``base``.

    ``full_modulation`` keeps the counter-rotating parts of the parametric
    drives: the mirror sees the bare spring modulation ``k(t) x^2`` and the
    condensate the bare collision modulation ``omega_sw(t) (d^2 + d^dag^2)``,
    with phases chosen so that their resonant parts reproduce real
    ``lambda_m``, ``lambda_d``.  Otherwise only the resonant
    ``lambda e^{-2 i omega t} o^dag`` drive is kept.
    """

    base: ModelParams
    delta0: float
    omega_m: float
    omega_d: float
    full_modulation: bool = False

    def __post_init__(self):
        for name in ("delta0", "omega_m", "omega_d"):
            value = float(getattr(self, name))
            if not value > 0:
                raise ValueError(f"{name}: must be > 0, got {value!r}")
            object.__setattr__(self, name, value)

    @property
    def good_cavity(self):
        return self.omega_m / self.base.kappa >= 10.0

    @property
    def period(self):
        """Modulation period ``pi / omega_m``."""
        return math.pi / self.omega_m


def _rotation(w):
    return np.array([[0.0, w], [-w, 0.0]])


def _modulation_block(lam, w, t, full, spring):
    if lam == 0.0:
        return np.zeros((2, 2))
    c, s = math.cos(2 * w * t), math.sin(2 * w * t)
    if not full:
        return lam * np.array([[c, -s], [-s, -c]])
    if spring:
        # H/hbar = 2 lam sin(2wt) X^2
        return np.array([[0.0, 0.0], [-4.0 * lam * s, 0.0]])
    # H/hbar = lam sin(2wt) (X^2 - P^2)
    return np.array([[0.0, -2.0 * lam * s], [-2.0 * lam * s, 0.0]])


def build_drift_time_dependent(tp: TimeDependentParams, t) -> np.ndarray:
    """Drift matrix ``A(t)`` of the linearized equations before the RWA.

    Free rotation blocks ``[[0, w], [-w, 0]]`` at ``delta0``, ``omega_m`` and
    ``omega_d``; position-position couplings ``2g X_a X_b`` and ``-2G X_a X_d``
    entering the momentum rows; parametric drive blocks at ``2 omega``.
    """
    p = tp.base
    a = np.zeros((6, 6))
    a[0:2, 0:2] = _rotation(tp.delta0) - (p.kappa / 2) * np.eye(2)
    a[2:4, 2:4] = _rotation(tp.omega_m) - (p.gamma_m / 2) * np.eye(2)
    a[4:6, 4:6] = _rotation(tp.omega_d) - (p.gamma_d / 2) * np.eye(2)
    a[1, 2] = a[3, 0] = 2.0 * p.g
    a[1, 4] = a[5, 0] = -2.0 * p.G
    a[2:4, 2:4] += _modulation_block(p.lambda_m, tp.omega_m, t, tp.full_modulation, spring=True)
    a[4:6, 4:6] += _modulation_block(p.lambda_d, tp.omega_d, t, tp.full_modulation, spring=False)
    return a


class RWAComparison(NamedTuple):
    occupations_time_avg: tuple[float, float, float]
    occupations_rwa: tuple[float, float, float]
    relative_gap: float
    cycles_used: int


def _corotating_drift(tp, t):
    """``A(t)`` seen from a frame rotating at ``omega_m`` on every mode.

    The free rotation is removed exactly, so the integrator only resolves
    detunings, couplings and drives.  The frame returns to itself up to a
    sign after one period, which keeps the transformed drift periodic.
    """
    w = tp.omega_m
    c, s = math.cos(w * t), math.sin(w * t)
    r = np.kron(np.eye(3), np.array([[c, s], [-s, c]]))
    free = np.kron(np.eye(3), _rotation(w))
    return r.T @ (build_drift_time_dependent(tp, t) - free) @ r


def _one_period_map(tp, steps):
    """Monodromy ``Phi`` and accumulated noise ``Q`` over one modulation period."""
    h = tp.period / steps
    d = build_diffusion(tp.base)

    def rhs_phi(t, y):
        return _corotating_drift(tp, t) @ y

    def rhs_cov(t, y):
        ay = _corotating_drift(tp, t) @ y
        return ay + ay.T + d

    phi, q = np.eye(6), np.zeros((6, 6))
    for i in range(steps):
        t = i * h
        phi = _rk4_step(rhs_phi, t, phi, h)
        q = _rk4_step(rhs_cov, t, q, h)
        q = 0.5 * (q + q.T)
    return phi, q, rhs_cov, h


def rwa_validate(tp: TimeDependentParams, cycles=2**50, samples_per_cycle=512, *, tol=1e-11):
    """Compare period-averaged occupations of ``A(t)`` with the RWA steady state.

    The time-dependent covariance equation is integrated over one modulation
    period with RK4 (``samples_per_cycle`` steps) to obtain the flow map
    ``V -> Phi V Phi^T + Q``.  Composing that map with itself by repeated
    squaring advances the vacuum initial state by ``2^k`` whole periods until
    the stroboscopic covariance stops changing.  Occupations are then averaged
    over one more period.  The integration runs in a frame co-rotating at
    ``omega_m``; occupations are invariant under the local phase rotations
    relating that frame to the lab frame.

    The relative gap is ``max_i |n_avg_i - n_rwa_i| / max(max_i n_rwa_i, 1e-12)``,
    with absolute differences up to ``1e-12`` (rounding noise around vacuum)
    counted as zero.

    Raises
    ------
    ConvergenceError
        If the stroboscopic state has not converged within ``cycles`` periods.
    """
    p = tp.base
    if not tp.good_cavity:
        raise ValueError(f"RWA comparison needs omega_m/kappa >= 10, got {tp.omega_m / p.kappa:g}")
    if p.lambda_d > 0 and not math.isclose(tp.omega_d, tp.omega_m, rel_tol=1e-12):
        raise ValueError("both channels modulated at different frequencies: A(t) is not periodic")
    rwa = solve_steady(build_drift(p), build_diffusion(p))
    if not rwa.stable:
        raise ValueError(f"RWA drift is unstable (max Re eig = {rwa.max_re_eig:.3e})")
    n_rwa = occupations(rwa.v)

    phi, q, rhs_cov, h = _one_period_map(tp, samples_per_cycle)
    v0 = 0.5 * np.eye(6)
    v_prev = v0
    used = 1
    while True:
        v = phi @ v0 @ phi.T + q
        change = np.max(np.abs(v - v_prev)) / max(np.max(np.abs(v)), 1.0)
        if change <= tol and np.linalg.norm(phi, 2) < 1e-6:
            break
        if 2 * used > cycles:
            raise ConvergenceError(
                f"stroboscopic covariance not converged after {used} periods (change {change:.2e})"
            )
        q = phi @ q @ phi.T + q
        q = 0.5 * (q + q.T)
        phi = phi @ phi
        used *= 2
        v_prev = v
        if not np.all(np.isfinite(phi)):
            raise ConvergenceError("stroboscopic map diverges: Floquet-unstable dynamics")

    v = 0.5 * (v + v.T)
    samples = []
    with warnings.catch_warnings():
        # integrator noise on undriven vacuum modes hits the small-negative clamp
        warnings.simplefilter("ignore", RuntimeWarning)
        for i in range(samples_per_cycle):
            samples.append(occupations(v))
            v = _rk4_step(rhs_cov, i * h, v, h)
            v = 0.5 * (v + v.T)
    n_avg = tuple(float(x) for x in np.mean(np.array(samples), axis=0))
    diff = max(abs(x - y) for x, y in zip(n_avg, n_rwa))
    if diff <= VACUUM_NOISE:
        diff = 0.0
    gap = diff / max(max(n_rwa), 1e-12)
    return RWAComparison(n_avg, n_rwa, gap, used)
