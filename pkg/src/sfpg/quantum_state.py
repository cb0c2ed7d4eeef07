"""Biphoton state observables: JSA, HOM interference, Schmidt modes, heralding.

The JSA is assembled from the complex pair amplitude C(w, w') (same Fourier
convention as the spectra module), the longitudinal coherence of the
waveguide, and an angular-acceptance mask for two collection arms at a fixed
angle off axis. The complex phase of C is carried through; HOM fringes
depend on it.
"""

from dataclasses import dataclass

import numpy as np

from .constants import AU_TIME_AS, C_AU
from .errors import EmptyAcceptance, EmptyHerald, SvdFailure
from .macroscopic import DispersionModel, InteractionGeometry
from .spectra import PairAmplitude


@dataclass(frozen=True)
class JointSpectralAmplitude:
    """Normalized exchange-symmetric biphoton amplitude on a square grid."""

    omegas: np.ndarray
    values: np.ndarray  # complex (n, n)
    omega0: float

    @property
    def domega(self) -> float:
        return float(self.omegas[1] - self.omegas[0])

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.domega**2)


@dataclass(frozen=True)
class HomCurve:
    delays: np.ndarray       # a.u.
    coincidence: np.ndarray  # P(dt) in [0, 1]

    @property
    def delays_as(self) -> np.ndarray:
        return self.delays * AU_TIME_AS

    def dip_fwhm(self) -> float:
        """Full width (a.u.) of 1/2 - P at half its central maximum."""
        depth = 0.5 - self.coincidence
        center = np.argmin(np.abs(self.delays))
        half = 0.5 * depth[center]
        above = depth >= half
        if not above[center]:
            return 0.0
        left = center
        while left > 0 and above[left - 1]:
            left -= 1
        right = center
        while right < len(above) - 1 and above[right + 1]:
            right += 1
        return float(self.delays[right] - self.delays[left])


@dataclass(frozen=True)
class SchmidtReport:
    coefficients: np.ndarray      # descending, sums to 1
    schmidt_number: float
    entropy: float
    signal_modes: np.ndarray      # leading columns (n, k)
    idler_modes: np.ndarray

    @property
    def sum_rule(self) -> float:
        return float(self.coefficients.sum())


def _resample_square(omegas, values, n_target):
    """Bilinear resampling of a square complex grid to n_target points."""
    if len(omegas) <= n_target:
        return omegas, values
    new = np.linspace(omegas[0], omegas[-1], n_target)
    idx = np.clip(np.searchsorted(omegas, new) - 1, 0, len(omegas) - 2)
    frac = (new - omegas[idx]) / (omegas[idx + 1] - omegas[idx])

    def interp_axis(arr, idx, frac, axis):
        a = np.take(arr, idx, axis=axis)
        b = np.take(arr, idx + 1, axis=axis)
        shape = [1, 1]
        shape[axis] = -1
        f = frac.reshape(shape)
        return a * (1 - f) + b * f

    out = interp_axis(values, idx, frac, 0)
    out = interp_axis(out, idx, frac, 1)
    return new, out


def build_jsa(amp: PairAmplitude, model: DispersionModel,
              geom: InteractionGeometry, collection_angle: float,
              acceptance_halfwidth: float,
              band: tuple[float, float] | None = None,
              grid_size: int = 512) -> JointSpectralAmplitude:
    """Assemble J ~ (w w')^{3/2} C(w,w') sinc(dk_z L/2) mask, symmetrized.

    Both photons are collected in arms at `collection_angle` off axis
    (opposite sides). The mask keeps pairs whose ideal emission angles fall
    within +/- acceptance_halfwidth of the arms; dk_z is evaluated at the arm
    angle for both photons.
    """
    omegas = amp.omegas
    if band is not None:
        sel = (omegas >= band[0]) & (omegas <= band[1])
        if not np.any(sel):
            raise EmptyAcceptance("band selects no frequency samples")
        omegas = omegas[sel]
        values = amp.values[np.ix_(sel, sel)]
    else:
        values = amp.values
    omegas, values = _resample_square(omegas, values, grid_size)

    omega0 = model.pump_omega0
    n_w = model.refractive_index(omegas)
    k = n_w * omegas / C_AU
    kz = k * np.cos(collection_angle)
    sum_grid = np.add.outer(omegas, omegas)
    dk_z = model.pump_index * sum_grid / C_AU - np.add.outer(kz, kz)
    sinc_amp = np.sinc(dk_z * geom.length / (2.0 * np.pi))

    # angular acceptance: ideal per-q emission angle within the arm aperture
    q_grid = np.rint(sum_grid / omega0).astype(int)
    mask = np.zeros_like(sum_grid)
    n0 = model.pump_index
    for q in np.unique(q_grid):
        if q < 2 or q % 2 != 0:
            continue
        in_stripe = np.abs(sum_grid - q * omega0) <= 0.5 * omega0
        cos_theta = (2.0 * n_w**2 * omegas - n_w**2 * q * omega0
                     + n0**2 * q * omega0) / (2.0 * n_w * n0 * omegas)
        ok = np.abs(cos_theta) <= 1.0
        theta = np.where(ok, np.arccos(np.clip(cos_theta, -1.0, 1.0)), np.inf)
        within = np.abs(theta - collection_angle) <= acceptance_halfwidth
        pair_ok = np.logical_and.outer(within, within)
        mask[in_stripe & pair_ok] = 1.0

    j = np.outer(omegas, omegas) ** 1.5 * values * sinc_amp * mask
    j = 0.5 * (j + j.T)
    norm2 = np.sum(np.abs(j) ** 2) * (omegas[1] - omegas[0]) ** 2
    if norm2 <= 0.0 or not np.isfinite(norm2):
        raise EmptyAcceptance("acceptance mask removed all amplitude")
    j /= np.sqrt(norm2)
    return JointSpectralAmplitude(omegas=omegas, values=j, omega0=omega0)


def hom_curve(jsa: JointSpectralAmplitude,
              delays: np.ndarray | None = None) -> HomCurve:
    """Coincidence probability of the two collected arms versus delay.

    P(dt) = 1/2 [1 - Re sum J(w,w') J*(w',w) e^{i(w-w')dt} dw dw'].
    """
    if delays is None:
        delays = np.arange(-4000.0, 4000.0 + 1e-9, 10.0) / AU_TIME_AS
    j = jsa.values
    cell = jsa.domega**2
    w = j * np.conj(j.T) * cell
    n = j.shape[0]
    # bin the exchange overlap by the frequency difference w_i - w_j
    diffs = np.zeros(2 * n - 1, dtype=complex)
    for d in range(-(n - 1), n):
        diffs[d + n - 1] = np.trace(w, offset=-d)  # rows i = cols j + d
    delta = np.arange(-(n - 1), n) * jsa.domega
    phases = np.exp(1j * np.outer(delays, delta))
    overlap = np.real(phases @ diffs)
    p = 0.5 * (1.0 - overlap)
    return HomCurve(delays=np.asarray(delays), coincidence=p)


def schmidt_decompose(jsa: JointSpectralAmplitude,
                      n_modes: int = 8) -> SchmidtReport:
    """SVD of the discretized amplitude; lambda_k are squared singular values."""
    m = jsa.values * jsa.domega
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from exc
    lam = s**2
    total = lam.sum()
    if total <= 0:
        raise SvdFailure("zero-amplitude state")
    lam = lam / total
    k_number = 1.0 / np.sum(lam**2)
    nz = lam[lam > 1e-300]
    entropy = float(-np.sum(nz * np.log(nz)))
    return SchmidtReport(coefficients=lam, schmidt_number=float(k_number),
                         entropy=entropy,
                         signal_modes=u[:, :n_modes],
                         idler_modes=vh[:n_modes].T.conj())


def heralded_pulse(jsa: JointSpectralAmplitude, herald_omega: float,
                   bandwidth: float, n_time: int = 4096):
    """Temporal intensity of the partner photon after heralding.

    The herald arm is filtered by a Gaussian of standard deviation
    `bandwidth` centered at herald_omega; the conditional amplitude
    a(w') = sum_w f(w) J(w, w') dw is Fourier transformed to time.
    Returns (times, intensity).
    """
    omegas = jsa.omegas
    if not omegas[0] <= herald_omega <= omegas[-1]:
        raise EmptyHerald("herald frequency outside the JSA band")
    f = np.exp(-0.5 * ((omegas - herald_omega) / bandwidth) ** 2)
    a = (f[:, None] * jsa.values).sum(axis=0) * jsa.domega
    if np.sum(np.abs(a) ** 2) * jsa.domega <= 1e-300:
        raise EmptyHerald("herald filter selects no amplitude")
    dw = jsa.domega
    # a(t) = sum a(w') e^{-i w' t} dw on a zero-padded grid
    spec = np.zeros(n_time, dtype=complex)
    i0 = int(round(omegas[0] / dw))
    spec[i0:i0 + len(a)] = a
    at = np.fft.fft(spec) * dw
    times = 2.0 * np.pi * np.arange(n_time) / (n_time * dw)
    return times, np.abs(at) ** 2
