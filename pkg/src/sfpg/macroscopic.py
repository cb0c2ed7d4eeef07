"""Gas/waveguide dispersion, phase matching, and per-shot pair yields.

The refractive index combines three contributions around unity:
  * neutral gas (Cauchy fit, pressure- and neutral-fraction-scaled), applied
    below an IR/UV crossover only -- neutral dispersion in the XUV is weak
    and is deliberately left out (largest declared model uncertainty),
  * free-electron plasma, -omega_p^2 / (2 omega^2),
  * hollow-waveguide mode, -u11^2 c^2 / (2 a^2 omega^2).
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .constants import BOHR_M, C_AU, HARTREE_EV, number_density_au
from .errors import BandMismatch, PhaseMatchDomainError
from .spectra import PairSpectrum

U11 = 2.405  # first zero of J0: EH11 mode constant

# Cauchy fits n - 1 = A + B / lambda_um^2 at 1 atm, 293 K (IR/visible)
_CAUCHY = {
    "helium": (3.48e-5, 2.3e-6),
    "neon": (6.66e-5, 2.4e-6),
    "argon": (2.78e-4, 5.6e-6),
}

# neutral term is applied below this photon energy; above it only plasma and
# waveguide terms survive
NEUTRAL_CROSSOVER_AU = 0.25


def _wavelength_um(omega: float) -> float:
    lam_au = 2.0 * np.pi * C_AU / omega
    return lam_au * BOHR_M * 1e6


@dataclass(frozen=True)
class DispersionModel:
    gas: str
    pressure_atm: float
    ionization_fraction: float
    radius: float            # waveguide radius, a.u.
    pump_omega0: float       # a.u.
    temperature_k: float = 293.0
    include_waveguide: bool = True

    def __post_init__(self):
        if self.gas not in _CAUCHY:
            raise ValueError(f"unknown gas {self.gas!r}; "
                             f"choose from {sorted(_CAUCHY)}")
        if not 0.0 <= self.ionization_fraction <= 1.0:
            raise ValueError("ionization_fraction must lie in [0, 1]")
        if self.pressure_atm < 0 or self.radius <= 0:
            raise ValueError("pressure must be >= 0 and radius > 0")

    @property
    def atom_density(self) -> float:
        """Number density in bohr^-3."""
        return number_density_au(self.pressure_atm, self.temperature_k)

    def refractive_index(self, omega):
        """n(omega); accepts scalars or arrays, vectorized."""
        omega = np.asarray(omega, dtype=float)
        if np.any(omega <= 0):
            raise ValueError("omega must be positive")
        n = np.ones_like(omega)
        a_c, b_c = _CAUCHY[self.gas]
        neutral_scale = self.pressure_atm * (1.0 - self.ionization_fraction)
        ir = omega < NEUTRAL_CROSSOVER_AU
        if np.any(ir):
            lam_um = 2.0 * np.pi * C_AU / omega[ir] * BOHR_M * 1e6
            n[ir] += neutral_scale * (a_c + b_c / lam_um**2)
        electron_density = self.ionization_fraction * self.atom_density
        omega_p_sq = 4.0 * np.pi * electron_density
        n -= omega_p_sq / (2.0 * omega**2)
        if self.include_waveguide:
            n -= U11**2 * C_AU**2 / (2.0 * self.radius**2 * omega**2)
        return n if n.ndim else float(n)

    @property
    def pump_index(self) -> float:
        return float(self.refractive_index(self.pump_omega0))


@dataclass(frozen=True)
class InteractionGeometry:
    length: float            # a.u.
    radius: float            # a.u.
    pressure_atm: float
    temperature_k: float = 293.0
    pump_photon_number: float = 1e17

    def __post_init__(self):
        if self.length <= 0 or self.radius <= 0:
            raise ValueError("length and radius must be positive")

    @property
    def atom_density(self) -> float:
        return number_density_au(self.pressure_atm, self.temperature_k)

    @property
    def volume(self) -> float:
        return math.pi * self.radius**2 * self.length


@dataclass(frozen=True)
class AngularYieldMap:
    thetas: np.ndarray       # rad
    omegas: np.ndarray       # a.u.
    dn_domega_dtheta: np.ndarray        # (n_theta, n_omega)
    per_q: dict[int, np.ndarray] = field(default_factory=dict)
    omega0: float = 0.0

    @property
    def energies_ev(self) -> np.ndarray:
        return self.omegas * HARTREE_EV


def emission_angle(q: int, omega: float, model: DispersionModel):
    """Angle theta of the photon at omega for a pair with omega+omega' = q w0.

    Uses the equal-index approximation n(omega) for both photons. Returns
    None when the configuration is not phase-matchable (|cos theta| > 1).
    """
    omega0 = model.pump_omega0
    if q < 2 or q % 2 != 0:
        raise ValueError("q must be an even integer >= 2 for the symmetric case")
    if not 0.0 < omega < q * omega0:
        raise ValueError("omega must lie in (0, q*omega0)")
    n = model.refractive_index(omega)
    n0 = model.pump_index
    cos_theta = (2.0 * n**2 * omega - n**2 * q * omega0
                 + n0**2 * q * omega0) / (2.0 * n * n0 * omega)
    if not -1.0 <= cos_theta <= 1.0:
        return None
    return float(np.arccos(cos_theta))


def phase_mismatch(q: int, omega: float, theta: float,
                   model: DispersionModel, theta_prime: float | None = None):
    """Wavevector mismatch (dk_z, dk_perp) of q k0 z - k(omega) - k(omega').

    When theta_prime is None it is chosen to balance the transverse momentum
    (photons on opposite sides of the axis); PhaseMatchDomainError if no such
    angle exists.
    """
    omega0 = model.pump_omega0
    omega_prime = q * omega0 - omega
    if omega_prime <= 0:
        raise ValueError("omega must be below q*omega0")
    n = model.refractive_index(omega)
    n_p = model.refractive_index(omega_prime)
    k = n * omega / C_AU
    k_p = n_p * omega_prime / C_AU
    k0z = q * model.pump_index * omega0 / C_AU
    if theta_prime is None:
        s = k * math.sin(theta) / k_p
        if abs(s) > 1.0:
            raise PhaseMatchDomainError(
                "no partner angle balances the transverse momentum")
        theta_prime = math.asin(s)
    dk_z = k0z - k * math.cos(theta) - k_p * math.cos(theta_prime)
    dk_perp = k * math.sin(theta) - k_p * math.sin(theta_prime)
    return dk_z, dk_perp


def coherence_factor(dk_z, length):
    """Longitudinal coherence sinc^2(dk_z L / 2) (sinc(0) = 1)."""
    return np.sinc(np.asarray(dk_z) * length / (2.0 * np.pi)) ** 2


def hhg_suppression_ratio(model: DispersionModel, geom: InteractionGeometry,
                          omega: float) -> float:
    """sinc^2 coherence of collinear HHG at omega for this operating point."""
    dk_z = omega * (model.pump_index - model.refractive_index(omega)) / C_AU
    return float(coherence_factor(dk_z, geom.length))


def angular_yield(pair_spec: PairSpectrum, geom: InteractionGeometry,
                  model: DispersionModel, thetas: np.ndarray,
                  omegas: np.ndarray, calibration: float = 1.0,
                  include_phase_matching: bool = True,
                  density_override: float | None = None) -> AngularYieldMap:
    """Phase-matched per-shot yield map dN/(domega dtheta).

    Assembly (documented reconstruction): for each even q the single-atom
    dP/(dw dw') is evaluated along the stripe w' = q w0 - w and reweighted by
    rho^2 (coherent density scaling), the longitudinal coherence
    sinc^2(dk_z L/2) with transverse balance, and the ring factor
    2 pi sin(theta). `calibration` absorbs the remaining proportionality and
    lives in configuration, not code.
    """
    omega0 = pair_spec.omega0
    w_axis = pair_spec.omegas
    if omegas[0] < w_axis[0] or omegas[-1] > w_axis[-1]:
        raise BandMismatch("requested band exceeds the pair-spectrum coverage")
    interp = RegularGridInterpolator(
        (w_axis, w_axis), pair_spec.dp, bounds_error=False, fill_value=0.0)
    rho = geom.atom_density if density_override is None else density_override
    q_max = int((2.0 * w_axis[-1]) / omega0)
    total = np.zeros((len(thetas), len(omegas)))
    per_q: dict[int, np.ndarray] = {}
    sin_t = np.sin(thetas)
    for q in range(2, q_max + 1, 2):
        omega_partner = q * omega0 - omegas
        valid = (omega_partner > w_axis[0]) & (omega_partner < w_axis[-1]) \
            & (omegas < q * omega0)
        if not np.any(valid):
            continue
        dp_line = np.zeros(len(omegas))
        pts = np.column_stack([omegas[valid], omega_partner[valid]])
        dp_line[valid] = interp(pts)
        if include_phase_matching:
            # vectorized transverse-balanced mismatch over (theta, omega)
            coh = np.zeros((len(thetas), len(omegas)))
            wv = omegas[valid]
            wp = omega_partner[valid]
            k = model.refractive_index(wv) * wv / C_AU
            k_p = model.refractive_index(wp) * wp / C_AU
            k0z = q * model.pump_index * omega0 / C_AU
            s = np.outer(sin_t, k / k_p)
            balanced = np.abs(s) <= 1.0
            cos_tp = np.sqrt(1.0 - np.minimum(s**2, 1.0))
            dk_z = (k0z - np.outer(np.cos(thetas), k) - k_p[None, :] * cos_tp)
            c_full = coherence_factor(dk_z, geom.length)
            c_full[~balanced] = 0.0
            coh[:, valid] = c_full
        else:
            coh = 1.0
        contrib = (calibration * rho**2 * geom.volume**2
                   * dp_line[None, :] * coh
                   * 2.0 * np.pi * sin_t[:, None])
        per_q[q] = contrib
        total += contrib
    return AngularYieldMap(thetas=thetas, omegas=omegas,
                           dn_domega_dtheta=total, per_q=per_q,
                           omega0=omega0)
