"""Map laboratory (SI) parameters onto dimensionless :class:`ModelParams`."""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field

from scipy import constants

from .errors import InfeasibleResonanceError
from .model import ModelParams

__all__ = ["PhysicalParams", "Derived", "derive_rates", "resonance_tuning", "swave_frequency"]

HBAR = constants.hbar
C_LIGHT = constants.c
K_B = constants.k

_POSITIVE = (
    "cavity_length",
    "mirror_mass",
    "mirror_freq",
    "cavity_freq",
    "laser_freq",
    "cavity_decay",
    "mech_damping",
    "bogoliubov_damping",
    "atom_number",
    "atom_mass",
    "mode_waist",
    "atom_detuning",
)
_NONNEGATIVE = (
    "laser_power",
    "scattering_length",
    "rabi_coupling",
    "spring_mod_depth",
    "temperature",
)


@dataclass(frozen=True)
class PhysicalParams:
    """SI description of the hybrid cavity.  Angular frequencies in rad/s."""

    cavity_length: float
    mirror_mass: float
    mirror_freq: float
    cavity_freq: float
    laser_freq: float
    laser_power: float
    cavity_decay: float
    mech_damping: float
    bogoliubov_damping: float
    atom_number: float
    atom_mass: float
    scattering_length: float
    mode_waist: float
    atom_detuning: float
    rabi_coupling: float
    spring_mod_depth: float = 0.0
    collision_mod_depth: float = 0.0
    detuning: float = 0.0
    temperature: float = 0.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ValueError(f"{f.name}: expected a real number, got {value!r}") from None
            if not math.isfinite(value):
                raise ValueError(f"{f.name}: must be finite")
            object.__setattr__(self, f.name, value)
        for name in _POSITIVE:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name}: must be > 0, got {getattr(self, name)!r}")
        for name in _NONNEGATIVE:
            if getattr(self, name) < 0:
                raise ValueError(f"{name}: must be >= 0, got {getattr(self, name)!r}")
        if not 0.0 <= self.collision_mod_depth <= 1.0:
            raise ValueError(f"collision_mod_depth: must lie in [0, 1], got {self.collision_mod_depth!r}")

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"{sorted(unknown)[0]}: unknown physical parameter")
        missing = [f.name for f in dataclasses.fields(cls)
                   if f.default is dataclasses.MISSING and f.name not in d]
        if missing:
            raise ValueError(f"{missing[0]}: missing physical parameter")
        return cls(**d)


def swave_frequency(atom_number, scattering_length, atom_mass, cavity_length, mode_waist):
    """``omega_sw = 8 pi hbar N a_s / (m_a L w^2)``."""
    return 8 * math.pi * HBAR * atom_number * scattering_length / (
        atom_mass * cavity_length * mode_waist**2
    )


def _recoil(pp):
    k0 = pp.laser_freq / C_LIGHT
    return HBAR * k0**2 / (2 * pp.atom_mass)


def _bose(omega, temperature):
    if temperature == 0:
        return 0.0
    x = HBAR * omega / (K_B * temperature)
    # e^{-x} / (1 - e^{-x}) stays finite for optical frequencies
    return math.exp(-x) / -math.expm1(-x)


@dataclass(frozen=True)
class Derived:
    """Output of :func:`derive_rates`: model parameters plus intermediates (SI)."""

    params: ModelParams
    quantities: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    warnings: tuple = ()

    def as_dict(self):
        return {
            "model": self.params.as_dict(),
            "derived": dict(self.quantities),
            "diagnostics": dict(self.diagnostics),
            "warnings": list(self.warnings),
        }


def derive_rates(pp: PhysicalParams) -> Derived:
    """Semiclassical mean field, enhanced couplings and modulation amplitudes.

    The mean intracavity amplitude uses the bare Stark-shifted detuning,
    ``a = E_L / (kappa/2 + i Delta_0)``, without iterating the mirror and
    condensate displacements.  Sign conventions are absorbed so that
    ``g``, ``G``, ``lambda_m`` and ``lambda_d`` come out non-negative.

    Validity checks (weak atom-atom interaction, red-detuned resonance,
    good-cavity limit, 1D condensate density) are reported as warnings.
    """
    x_zp = math.sqrt(HBAR / (2 * pp.mirror_mass * pp.mirror_freq))
    g0 = x_zp * pp.cavity_freq / pp.cavity_length
    u0 = -pp.rabi_coupling**2 / pp.atom_detuning
    n = pp.atom_number
    big_g0 = math.sqrt(2 * n) * u0 / 4
    omega_r = _recoil(pp)
    omega_sw = swave_frequency(n, pp.scattering_length, pp.atom_mass, pp.cavity_length, pp.mode_waist)
    omega_d = 4 * omega_r + omega_sw
    delta_stark = n * u0 / 2
    delta0 = pp.detuning + delta_stark
    e_l = math.sqrt(pp.cavity_decay * pp.laser_power / (HBAR * pp.laser_freq))
    alpha = e_l / complex(pp.cavity_decay / 2, delta0)
    amp = abs(alpha)
    g = g0 * amp
    big_g = abs(big_g0) * amp
    lam_m = pp.spring_mod_depth * x_zp**2 / (2 * HBAR)
    lam_d = pp.collision_mod_depth * omega_sw / 4

    for name, value in (("mirror zero-point scale", x_zp), ("omega_d", omega_d)):
        if not value > 0:
            raise ValueError(f"{name}: derived rate must be > 0, got {value!r}")

    kappa = pp.cavity_decay
    params = ModelParams(
        kappa=kappa,
        gamma_m=pp.mech_damping,
        gamma_d=pp.bogoliubov_damping,
        g=g,
        G=big_g,
        lambda_m=lam_m,
        lambda_d=lam_d,
        nbar_m=_bose(pp.mirror_freq, pp.temperature),
        nbar_d=_bose(omega_d, pp.temperature),
        nbar_ph=_bose(pp.cavity_freq, pp.temperature),
    )

    photons = amp**2
    diagnostics = {
        "weak_interaction_ratio": abs(u0) * photons / (10 * omega_r),
        "resonance_gap_cavity": abs(delta0 - pp.mirror_freq) / pp.mirror_freq,
        "resonance_gap_bogoliubov": abs(omega_d - pp.mirror_freq) / pp.mirror_freq,
        "good_cavity_ratio": pp.mirror_freq / kappa,
        "linear_density_ratio": (n / pp.cavity_length) * 2 * pp.scattering_length,
    }
    issues = []
    if diagnostics["weak_interaction_ratio"] > 1:
        issues.append("weak-interaction condition U0 <a^dag a> <= 10 omega_R violated")
    if diagnostics["resonance_gap_cavity"] > 0.1:
        issues.append("cavity detuning more than 10% away from the mirror frequency")
    if diagnostics["resonance_gap_bogoliubov"] > 0.1:
        issues.append("Bogoliubov frequency more than 10% away from the mirror frequency")
    if diagnostics["good_cavity_ratio"] < 10:
        issues.append("not in the good-cavity limit (omega_m / kappa < 10)")
    if diagnostics["linear_density_ratio"] >= 1:
        issues.append("1D condensate linear density exceeds 1/(2 a_s)")
    for msg in issues:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)

    quantities = {
        "x_zp": x_zp,
        "g0": g0,
        "U0": u0,
        "G0": big_g0,
        "omega_R": omega_r,
        "omega_sw": omega_sw,
        "omega_d": omega_d,
        "delta_stark": delta_stark,
        "Delta0": delta0,
        "E_L": e_l,
        "mean_field_re": alpha.real,
        "mean_field_im": alpha.imag,
        "intracavity_photons": photons,
    }
    return Derived(params, quantities, diagnostics, tuple(issues))


def resonance_tuning(pp: PhysicalParams) -> float:
    """Scattering length that puts the Bogoliubov mode on the mirror resonance.

    Inverts ``omega_d = 4 omega_R + omega_sw(a_s) = omega_m``.

    Raises
    ------
    InfeasibleResonanceError
        If ``omega_m < 4 omega_R`` (would need a negative scattering length).
    """
    four_recoil = 4 * _recoil(pp)
    target = pp.mirror_freq - four_recoil
    if target < 0:
        raise InfeasibleResonanceError(
            f"mirror frequency {pp.mirror_freq:.6g} below 4 omega_R = {four_recoil:.6g}"
        )
    per_length = swave_frequency(pp.atom_number, 1.0, pp.atom_mass, pp.cavity_length, pp.mode_waist)
    return target / per_length
