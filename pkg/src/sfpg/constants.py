"""Physical constants and unit conversions (Hartree atomic units internally)."""

import math

# speed of light in atomic units; fine structure constant is its inverse
C_AU = 137.035999084
ALPHA = 1.0 / C_AU

HARTREE_EV = 27.211386245988
BOHR_M = 5.29177210903e-11
BOHR_NM = BOHR_M * 1e9

# 1 a.u. of time in seconds / attoseconds / femtoseconds
AU_TIME_S = 2.4188843265857e-17
AU_TIME_AS = AU_TIME_S * 1e18
AU_TIME_FS = AU_TIME_S * 1e15

# intensity corresponding to E = 1 a.u.
INTENSITY_AU_WCM2 = 3.50944758e16

K_BOLTZMANN_J = 1.380649e-23
ATM_PA = 101325.0


def omega0_from_wavelength_nm(wavelength_nm: float) -> float:
    """Angular carrier frequency (a.u.) of light with the given vacuum wavelength."""
    lam_au = wavelength_nm / BOHR_NM
    return 2.0 * math.pi * C_AU / lam_au


def field_from_intensity(intensity_w_cm2: float) -> float:
    """Peak electric field (a.u.) for a given intensity in W/cm^2."""
    return math.sqrt(intensity_w_cm2 / INTENSITY_AU_WCM2)


def number_density_au(pressure_atm: float, temperature_k: float = 293.0) -> float:
    """Ideal-gas number density in bohr^-3."""
    n_m3 = pressure_atm * ATM_PA / (K_BOLTZMANN_J * temperature_k)
    return n_m3 * BOHR_M**3


def ev_to_au(energy_ev: float) -> float:
    return energy_ev / HARTREE_EV


def au_to_ev(energy_au: float) -> float:
    return energy_au * HARTREE_EV
