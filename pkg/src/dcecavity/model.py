"""Linearized three-mode model: parameters, drift/diffusion matrices and occupations.

Quadrature ordering throughout the package is ``(X_a, P_a, X_b, P_b, X_d, P_d)``
with ``X = (o + o^dag)/sqrt(2)`` and ``P = (o - o^dag)/(i sqrt(2))`` for the
cavity field ``a``, the mirror ``b`` and the Bogoliubov mode ``d``.  In this
convention the vacuum covariance is ``identity/2``.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PhysicalityError

__all__ = [
    "ModelParams",
    "build_drift",
    "build_diffusion",
    "symplectic_form",
    "symplectic_eigenvalues",
    "occupations",
    "collective_mode_occupation",
    "MODE_NAMES",
]

MODE_NAMES = ("photon", "phonon_m", "phonon_d")

# below -CLAMP_ATOL an occupation is an error; in between it is clamped to zero
CLAMP_ATOL = 1e-9
# clamps smaller than this are float noise around vacuum and are not reported
_SILENT_CLAMP = 1e-12
PHYSICALITY_ATOL = 1e-6

_RATE_FIELDS = ("kappa", "gamma_m", "gamma_d", "g", "G", "lambda_m", "lambda_d")


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless parameters of one system instance.

    All rates are rescaled by ``kappa`` on construction, so a stored instance
    always has ``kappa == 1``.  Rescaling an already normalized instance is a
    no-op.  ``lambda_m`` and ``lambda_d`` are the real, non-negative
    modulation amplitudes (modulation phases are absorbed).
    """

    kappa: float = 1.0
    gamma_m: float = 1e-4
    gamma_d: float = 1e-4
    g: float = 0.0
    G: float = 0.0
    lambda_m: float = 0.0
    lambda_d: float = 0.0
    nbar_m: float = 0.0
    nbar_d: float = 0.0
    nbar_ph: float = 0.0

    def __post_init__(self):
        for name in _RATE_FIELDS + ("nbar_m", "nbar_d", "nbar_ph"):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ValueError(f"{name}: expected a real number, got {value!r}") from None
            if not math.isfinite(value):
                raise ValueError(f"{name}: must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        for name in ("kappa", "gamma_m", "gamma_d"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name}: must be > 0, got {getattr(self, name)!r}")
        for name in ("g", "G", "lambda_m", "lambda_d", "nbar_m", "nbar_d", "nbar_ph"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name}: must be >= 0, got {getattr(self, name)!r}")
        scale = self.kappa
        if scale != 1.0:
            for name in _RATE_FIELDS:
                object.__setattr__(self, name, getattr(self, name) / scale)
            object.__setattr__(self, "kappa", 1.0)

    @property
    def xi_m(self):
        """Mechanical modulation parameter ``2 lambda_m / gamma_m``."""
        return 2.0 * self.lambda_m / self.gamma_m

    @property
    def xi_d(self):
        """Atomic modulation parameter ``2 lambda_d / gamma_d``."""
        return 2.0 * self.lambda_d / self.gamma_d

    @property
    def c0(self):
        """Optomechanical cooperativity ``4 g^2 / (kappa gamma_m)``."""
        return 4.0 * self.g**2 / (self.kappa * self.gamma_m)

    @property
    def c1(self):
        """Opto-atomic cooperativity ``4 G^2 / (kappa gamma_d)``."""
        return 4.0 * self.G**2 / (self.kappa * self.gamma_d)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def with_xi(self, xi_m=None, xi_d=None):
        """Copy with modulation amplitudes set from the ``xi`` parameters."""
        changes = {}
        if xi_m is not None:
            changes["lambda_m"] = xi_m * self.gamma_m / 2.0
        if xi_d is not None:
            changes["lambda_d"] = xi_d * self.gamma_d / 2.0
        return self.replace(**changes)

    def as_dict(self):
        return dataclasses.asdict(self)


def build_drift(p: ModelParams) -> np.ndarray:
    """Time-independent 6x6 drift matrix of the resonant beam-splitter dynamics."""
    k2 = p.kappa / 2.0
    g, G, lm, ld = p.g, p.G, p.lambda_m, p.lambda_d
    return np.array(
        [
            [-k2, 0.0, 0.0, -g, 0.0, G],
            [0.0, -k2, g, 0.0, -G, 0.0],
            [0.0, -g, lm - p.gamma_m / 2.0, 0.0, 0.0, 0.0],
            [g, 0.0, 0.0, -(lm + p.gamma_m / 2.0), 0.0, 0.0],
            [0.0, G, 0.0, 0.0, ld - p.gamma_d / 2.0, 0.0],
            [-G, 0.0, 0.0, 0.0, 0.0, -(ld + p.gamma_d / 2.0)],
        ]
    )


def build_diffusion(p: ModelParams) -> np.ndarray:
    """Diagonal diffusion matrix for Markovian thermal input noise.

    Each mode contributes ``(rate/2) (2 nbar + 1)`` on both of its quadratures.
    """
    da = p.kappa / 2.0 * (2.0 * p.nbar_ph + 1.0)
    db = p.gamma_m / 2.0 * (2.0 * p.nbar_m + 1.0)
    dd = p.gamma_d / 2.0 * (2.0 * p.nbar_d + 1.0)
    return np.diag([da, da, db, db, dd, dd])


def symplectic_form(n_modes):
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_eigenvalues(v) -> np.ndarray:
    """Symplectic eigenvalues of a ``2n x 2n`` covariance matrix, ascending.

    The eigenvalues of ``Omega V`` come in pairs ``+/- i nu_k``.
    """
    v = np.asarray(v, dtype=float)
    n = v.shape[0] // 2
    ev = np.linalg.eigvals(symplectic_form(n) @ v)
    nu = np.sort(np.abs(ev.imag))
    return nu[::2]


def _check_physical(v, atol=PHYSICALITY_ATOL):
    nu = symplectic_eigenvalues(v)
    if nu[0] < 0.5 - atol:
        raise PhysicalityError(
            f"smallest symplectic eigenvalue {nu[0]:.6g} < 1/2 (tolerance {atol:g})"
        )


def _clamp(n, label):
    if n >= 0.0:
        return n
    if n < -CLAMP_ATOL:
        raise PhysicalityError(f"{label} occupation {n:.3e} is negative")
    if n < -_SILENT_CLAMP:
        warnings.warn(f"clamping {label} occupation {n:.3e} to zero", RuntimeWarning, stacklevel=3)
    return 0.0


def _mode_occupation(block):
    return float((block[0, 0] + block[1, 1] - 1.0) / 2.0)


def occupations(v) -> tuple[float, float, float]:
    """Mean excitation numbers ``(n_photon, n_phonon_m, n_phonon_d)`` of a 6x6 covariance."""
    v = np.asarray(v, dtype=float)
    if v.shape != (6, 6):
        raise ValueError(f"expected a 6x6 covariance matrix, got shape {v.shape}")
    _check_physical(v)
    return tuple(
        _clamp(_mode_occupation(v[2 * i : 2 * i + 2, 2 * i : 2 * i + 2]), MODE_NAMES[i])
        for i in range(3)
    )


def collective_mode_occupation(v, p: ModelParams) -> tuple[float, float]:
    """Occupation of the collective phonon mode and its squeezing parameter.

    The collective mode is ``B = cosh(r) b - sinh(r) d^dag`` with
    ``r = artanh(g/G)``; its covariance is the congruence of the ``(b, d)``
    block with the corresponding symplectic map.

    Returns
    -------
    n_B, r : float
    """
    if p.g >= p.G:
        raise DomainError(
            f"collective mode undefined for g >= G (g={p.g!r}, G={p.G!r}); "
            "the collective mode decouples from the cavity at g = G"
        )
    v = np.asarray(v, dtype=float)
    _check_physical(v)
    r = math.atanh(p.g / p.G)
    ch, sh = math.cosh(r), math.sinh(r)
    # X_B = ch X_b - sh X_d,  P_B = ch P_b + sh P_d
    s = np.array([[ch, 0.0, -sh, 0.0], [0.0, ch, 0.0, sh]])
    vb = s @ v[2:6, 2:6] @ s.T
    return _clamp(_mode_occupation(vb), "collective"), r
