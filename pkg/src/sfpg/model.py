"""Domain types: spatial grid, model atom, drive pulse, propagation settings."""

from dataclasses import dataclass, field
import math

import numpy as np

from . import constants as const


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform symmetric 1D grid, FFT-ready (n_points a power of two).

    Points run from x_min inclusive to x_max exclusive so that the FFT
    periodic cell has length x_max - x_min.
    """

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 8:
            raise ValueError("n_points must be >= 8")
        if not _is_power_of_two(self.n_points):
            raise ValueError("n_points must be a power of two (FFT grid); "
                             f"got {self.n_points}")
        if not (self.x_max > 0 and math.isclose(self.x_max, -self.x_min)):
            raise ValueError("grid must be symmetric: x_max = -x_min > 0")

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.spacing * np.arange(self.n_points)

    @property
    def k(self) -> np.ndarray:
        """Momentum grid matching numpy FFT ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)


def soft_core_potential(x: np.ndarray, softening: float) -> np.ndarray:
    """Regularized 1D Coulomb potential -1/sqrt(x^2 + a^2)."""
    return -1.0 / np.sqrt(x * x + softening * softening)


@dataclass(frozen=True)
class AtomModel:
    """1D single-active-electron atom defined on a grid.

    ground_state is L2-normalized with the grid measure:
    sum(|psi|^2) * spacing == 1.
    """

    grid: SpatialGrid
    softening: float
    ground_state: np.ndarray
    ground_energy: float

    @property
    def potential(self) -> np.ndarray:
        return soft_core_potential(self.grid.x, self.softening)

    @property
    def ionization_energy_au(self) -> float:
        return -self.ground_energy

    @property
    def ionization_energy_ev(self) -> float:
        return const.au_to_ev(-self.ground_energy)


@dataclass(frozen=True)
class LaserPulse:
    """Linearly polarized drive pulse.

    E(t) = E0 * f(t) * cos(omega0 * t + cep) for t in [0, duration],
    zero outside. f is the envelope selected by envelope_kind.
    """

    wavelength_nm: float
    peak_intensity_w_cm2: float
    n_cycles: float
    envelope_kind: str = "sin2"  # sin2 | trapezoidal | flat
    carrier_envelope_phase: float = 0.0
    ramp_cycles: float = 1.0  # trapezoidal only

    def __post_init__(self):
        if self.envelope_kind not in ("sin2", "trapezoidal", "flat"):
            raise ValueError(f"unknown envelope_kind {self.envelope_kind!r}")
        if self.wavelength_nm <= 0 or self.peak_intensity_w_cm2 <= 0:
            raise ValueError("wavelength and intensity must be positive")
        if self.n_cycles <= 0:
            raise ValueError("n_cycles must be positive")
        if self.envelope_kind == "trapezoidal" and 2 * self.ramp_cycles > self.n_cycles:
            raise ValueError("trapezoidal ramps exceed pulse duration")

    @property
    def omega0(self) -> float:
        return const.omega0_from_wavelength_nm(self.wavelength_nm)

    @property
    def e0(self) -> float:
        return const.field_from_intensity(self.peak_intensity_w_cm2)

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega0

    @property
    def duration(self) -> float:
        return self.n_cycles * self.period

    @property
    def up(self) -> float:
        """Cycle-averaged ponderomotive energy E0^2 / (4 omega0^2) in a.u."""
        return self.e0**2 / (4.0 * self.omega0**2)

    @property
    def up_ev(self) -> float:
        return const.au_to_ev(self.up)

    @property
    def up_peak_convention(self) -> float:
        """Alternative E0^2 / (2 omega0^2) convention, logged for comparison."""
        return self.e0**2 / (2.0 * self.omega0**2)

    def envelope(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        T = self.duration
        f = np.zeros_like(t)
        inside = (t >= 0.0) & (t <= T)
        if self.envelope_kind == "sin2":
            f[inside] = np.sin(np.pi * t[inside] / T) ** 2
        elif self.envelope_kind == "flat":
            f[inside] = 1.0
        else:  # trapezoidal with sin^2 ramps
            t_ramp = self.ramp_cycles * self.period
            ti = t[inside]
            fi = np.ones_like(ti)
            up_ramp = ti < t_ramp
            fi[up_ramp] = np.sin(0.5 * np.pi * ti[up_ramp] / t_ramp) ** 2
            down = ti > T - t_ramp
            fi[down] = np.sin(0.5 * np.pi * (T - ti[down]) / t_ramp) ** 2
            f[inside] = fi
        return f

    def field(self, t):
        """Electric field E(t) in a.u.; accepts scalars or arrays."""
        scalar = np.isscalar(t)
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        e = self.e0 * self.envelope(t_arr) * np.cos(self.omega0 * t_arr
                                                    + self.carrier_envelope_phase)
        return float(e[0]) if scalar else e


@dataclass(frozen=True)
class PropagationSettings:
    """Split-operator numerics: step size, absorber, and storage stride."""

    dt: float = 0.05
    absorber_fraction: float = 0.125
    absorber_exponent: float = 0.125
    store_stride: int = 5

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not (0.0 <= self.absorber_fraction < 0.5):
            raise ValueError("absorber_fraction must lie in [0, 0.5)")
        if self.store_stride < 1:
            raise ValueError("store_stride must be >= 1")


def absorber_mask(grid: SpatialGrid, fraction: float, exponent: float) -> np.ndarray:
    """Multiplicative cos^exponent mask over the outer `fraction` of each side."""
    mask = np.ones(grid.n_points)
    if fraction <= 0.0:
        return mask
    width = fraction * (grid.x_max - grid.x_min) / 2.0
    x = grid.x
    edge = grid.x_max - width
    s = (np.abs(x) - edge) / width
    region = s > 0.0
    mask[region] = np.cos(0.5 * np.pi * np.minimum(s[region], 1.0)) ** exponent
    return mask
