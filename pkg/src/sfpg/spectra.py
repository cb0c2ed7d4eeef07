"""Emission observables from dipole records and correlation matrices.

Fourier convention (shared with the biphoton module):
    x(omega)      = sum_n x(t_n) exp(+i omega t_n) dt
    C(omega, omega') = sum_{n,m} C(t_n, t_m) exp(+i omega t_n + i omega' t_m) dt^2
realized as numpy inverse FFTs scaled by N*dt per axis.
"""

from dataclasses import dataclass

import numpy as np

from .constants import ALPHA, C_AU, HARTREE_EV
from .errors import (NoPlateauDetected, NotConnected, TooShortRecord,
                     WindowTooNarrow)
from .tdse import CorrelationMatrix, DipoleRecord

_WINDOWS = {
    "hann": np.hanning,
    "boxcar": np.ones,
}


def _window(kind: str, n: int) -> np.ndarray:
    try:
        return _WINDOWS[kind](n)
    except KeyError:
        raise ValueError(f"unknown window {kind!r}") from None


def fourier_1d(signal: np.ndarray, dt: float, pad_factor: int = 1):
    """Analysis transform sum x e^{+i w t} dt; returns (omegas>0, values)."""
    n = len(signal) * pad_factor
    x_w = np.fft.ifft(signal, n=n) * n * dt
    omegas = 2.0 * np.pi * np.fft.fftfreq(n, d=dt)
    pos = omegas > 0
    return omegas[pos], x_w[pos]


@dataclass(frozen=True)
class HhgSpectrum:
    """Single-photon emission probability per unit frequency."""

    omegas: np.ndarray
    dp_domega: np.ndarray
    omega0: float
    window_kind: str = "hann"

    @property
    def harmonics(self) -> np.ndarray:
        return self.omegas / self.omega0

    @property
    def energies_ev(self) -> np.ndarray:
        return self.omegas * HARTREE_EV


@dataclass(frozen=True)
class PairSpectrum:
    """Differential pair emission probability dP/(domega domega')."""

    omegas: np.ndarray
    omegas_prime: np.ndarray
    dp: np.ndarray
    omega0: float
    window_kind: str = "hann"

    @property
    def amplitude(self):
        raise AttributeError("use pair_amplitude() for the complex transform")


@dataclass(frozen=True)
class PairAmplitude:
    """Complex 2D transform of the connected correlator (positive quadrant)."""

    omegas: np.ndarray
    values: np.ndarray  # C(omega, omega'), complex
    omega0: float
    window_kind: str = "hann"


@dataclass(frozen=True)
class CutoffReport:
    q_c: float
    predicted_q_c: float
    plateau_level: float
    plateau_range: tuple[float, float]
    omega0: float
    # pair-spectrum extras (None for 1D spectra)
    primary_intensity: float | None = None
    interband_intensity: float | None = None
    beyond_box_level: float | None = None
    stripe_level: float | None = None

    @property
    def primary_cutoff_omega_sum(self) -> float:
        return self.q_c * self.omega0

    @property
    def secondary_cutoff_omega(self) -> float:
        return self.q_c * self.omega0


@dataclass(frozen=True)
class TimeFrequencyMap:
    """Gabor content of C(t,t') binned over the sum frequency omega+omega'."""

    window_centers: np.ndarray
    omega_sum: np.ndarray
    amplitude: np.ndarray  # (n_centers, n_centers, n_omega_sum)
    window_width: float


def hhg_spectrum(record: DipoleRecord, omega0: float,
                 window: str = "hann", pad_factor: int = 8) -> HhgSpectrum:
    """dP/domega = (2 alpha / 3 pi) omega^3 |x(omega)|^2 / c^2."""
    duration = record.times[-1] - record.times[0]
    if duration < 2.0 * (2.0 * np.pi / omega0):
        raise TooShortRecord(
            f"record covers {duration * omega0 / (2 * np.pi):.2f} cycles; "
            "need at least 2")
    w = _window(window, len(record.dipole))
    omegas, x_w = fourier_1d(record.dipole * w, record.dt_stored, pad_factor)
    dp = (2.0 * ALPHA / (3.0 * np.pi)) * omegas**3 * np.abs(x_w) ** 2 / C_AU**2
    return HhgSpectrum(omegas=omegas, dp_domega=dp, omega0=omega0,
                       window_kind=window)


def pair_amplitude(corr: CorrelationMatrix, omega0: float,
                   window: str = "hann", pad_factor: int = 2) -> PairAmplitude:
    """Windowed 2D transform of the connected correlator, positive quadrant."""
    if not corr.connected_flag:
        raise NotConnected("pair spectra require the connected correlator")
    n = len(corr.times)
    w = _window(window, n)
    cw = corr.values * np.outer(w, w)
    m = n * pad_factor
    c_hat = np.fft.ifft2(cw, s=(m, m)) * (m * corr.dt_stored) ** 2
    omegas = 2.0 * np.pi * np.fft.fftfreq(m, d=corr.dt_stored)
    pos = omegas > 0
    return PairAmplitude(omegas=omegas[pos], values=c_hat[np.ix_(pos, pos)],
                         omega0=omega0, window_kind=window)


def pair_spectrum(corr: CorrelationMatrix, omega0: float,
                  window: str = "hann", pad_factor: int = 2) -> PairSpectrum:
    """dP/(dw dw') = (2 alpha^2 / 9 pi^2) (w w')^3 |C(w, w')|^2 / c^4."""
    amp = pair_amplitude(corr, omega0, window, pad_factor)
    ww = np.outer(amp.omegas, amp.omegas)
    dp = (2.0 * ALPHA**2 / (9.0 * np.pi**2)) * ww**3 \
        * np.abs(amp.values) ** 2 / C_AU**4
    return PairSpectrum(omegas=amp.omegas, omegas_prime=amp.omegas.copy(),
                        dp=dp, omega0=omega0, window_kind=window)


def _odd_harmonic_envelope(omegas, values, omega0, q_max):
    """Band maxima of `values` around odd harmonics up to q_max."""
    qs = np.arange(3, q_max + 1, 2)
    env = np.empty(len(qs))
    h = omegas / omega0
    for i, q in enumerate(qs):
        band = (h > q - 0.5) & (h < q + 0.5)
        if not np.any(band):
            raise NoPlateauDetected(f"spectrum does not cover harmonic {q}")
        env[i] = values[band].max()
    return qs, env


def _rolling_median(values: np.ndarray, half_window: int = 1) -> np.ndarray:
    return np.array([np.median(values[max(0, i - half_window):
                                      i + half_window + 1])
                     for i in range(len(values))])


def _estimate_cutoff(qs, env, q_threshold):
    """Knee of the plateau: last harmonic within a factor 2 of its local
    plateau level, confirmed by a subsequent drop of two decades.

    The local plateau level at candidate k is the median of the
    median-smoothed envelope over the five harmonics up to and including k.
    """
    rm = _rolling_median(env, 1)
    candidates = [i for i, q in enumerate(qs) if q >= q_threshold and i >= 1]
    if not candidates:
        raise NoPlateauDetected("no harmonics above the ionization threshold")
    floor = rm.max() * 1e-3  # reject knees found on the noise tail
    best = None
    for i in candidates:
        lo = max(0, i - 4)
        plateau = np.median(rm[lo:i + 1])
        at_plateau = rm[i] >= 0.5 * plateau and plateau >= floor
        tail = rm[i + 1:].min() if i + 1 < len(rm) else np.inf
        if at_plateau and tail <= plateau * 1e-2:
            best = (float(qs[i]), float(plateau))
    if best is None:
        raise NoPlateauDetected(
            "no plateau knee with a confirmed two-decade drop")
    return best


def cutoff_report(spec: HhgSpectrum | PairSpectrum, ionization_energy: float,
                  up: float,
                  band: tuple[float, float] | None = None) -> CutoffReport:
    """Locate the cutoff harmonic and compare with (I_p + 3.17 U_p)/omega0.

    For pair spectra `band` restricts both frequency axes before the
    analysis; the top edge should stay below ~3/4 of the stored-grid Nyquist
    frequency, where the undersampled equal-time ridge aliases in.
    """
    omega0 = spec.omega0
    predicted = (ionization_energy + 3.17 * up) / omega0
    if isinstance(spec, HhgSpectrum):
        if spec.omegas[-1] < 1.5 * predicted * omega0:
            raise NoPlateauDetected(
                "spectrum band narrower than 1.5x the predicted cutoff")
        q_max = int(spec.omegas[-1] / omega0)
        q_thr = int(np.ceil(ionization_energy / omega0))
        qs, env = _odd_harmonic_envelope(spec.omegas, spec.dp_domega,
                                         omega0, q_max)
        q_c, plateau = _estimate_cutoff(qs, env, q_thr)
        return CutoffReport(q_c=q_c, predicted_q_c=predicted,
                            plateau_level=plateau,
                            plateau_range=(float(q_thr), q_c), omega0=omega0)

    # pair spectrum: estimate on the anti-diagonal (sum-frequency) profile
    if band is not None:
        sel = (spec.omegas >= band[0]) & (spec.omegas <= band[1])
        if not np.any(sel):
            raise NoPlateauDetected("band selects no frequency samples")
        spec = PairSpectrum(omegas=spec.omegas[sel],
                            omegas_prime=spec.omegas_prime[sel],
                            dp=spec.dp[np.ix_(sel, sel)], omega0=omega0,
                            window_kind=spec.window_kind)
    if spec.omegas[-1] + spec.omegas_prime[-1] < 1.5 * predicted * omega0:
        raise NoPlateauDetected(
            "pair spectrum band narrower than 1.5x the predicted cutoff")
    s_axis, profile = sum_frequency_profile(spec)
    h = s_axis / omega0
    q_max = int(h[-1])
    q_min = 2 * int(np.ceil((h[0] + 0.5) / 2.0))
    qs = np.arange(max(2, q_min), q_max + 1, 2)
    env = np.empty(len(qs))
    for i, q in enumerate(qs):
        band = (h > q - 0.5) & (h < q + 0.5)
        env[i] = profile[band].max()
    q_thr = int(np.ceil(ionization_energy / omega0))
    q_c, plateau = _estimate_cutoff(qs, env, q_thr)

    ww, wwp = np.meshgrid(spec.omegas, spec.omegas_prime, indexing="ij")
    total_sum = ww + wwp
    cell = ((spec.omegas[1] - spec.omegas[0])
            * (spec.omegas_prime[1] - spec.omegas_prime[0]))
    inside_box = (ww <= q_c * omega0) & (wwp <= q_c * omega0)
    primary = float(spec.dp[inside_box
                            & (total_sum <= q_c * omega0)].sum() * cell)
    inter = float(spec.dp[inside_box
                          & (total_sum > q_c * omega0)].sum() * cell)
    beyond_level = float(spec.dp[~inside_box].max()) \
        if np.any(~inside_box) else 0.0
    stripe_levels = []
    for q in np.arange(q_thr + q_thr % 2, q_c + 1, 2):
        on_stripe = np.abs(total_sum - q * omega0) <= 0.25 * omega0
        if np.any(on_stripe):
            stripe_levels.append(spec.dp[on_stripe].max())
    stripe_level = float(np.max(stripe_levels)) if stripe_levels else 0.0
    return CutoffReport(q_c=q_c, predicted_q_c=predicted,
                        plateau_level=plateau,
                        plateau_range=(float(q_thr), q_c), omega0=omega0,
                        primary_intensity=primary, interband_intensity=inter,
                        beyond_box_level=beyond_level,
                        stripe_level=stripe_level)


def sum_frequency_profile(spec: PairSpectrum):
    """Integrate dP over anti-diagonals; returns (omega_sum axis, profile)."""
    dw = spec.omegas[1] - spec.omegas[0]
    n = len(spec.omegas)
    sums = np.arange(2 * n - 1)
    profile = np.zeros(2 * n - 1)
    flipped = spec.dp[:, ::-1]
    for k in range(2 * n - 1):
        profile[k] = np.trace(flipped, offset=n - 1 - k)
    s_axis = spec.omegas[0] + spec.omegas_prime[0] + sums * dw
    return s_axis, profile * dw


def time_frequency_map(corr: CorrelationMatrix, window_width: float,
                       n_centers: int = 24,
                       n_freq: int = 256) -> TimeFrequencyMap:
    """Localized 2D Fourier content for Gaussian windows at center pairs.

    For each pair of window centers (tau, tau'), the correlator is windowed
    by exp(-(t-tau)^2 / 2 s^2) on each axis (s = window_width), transformed,
    and |C_loc|^2 integrated along anti-diagonals of the sum frequency.
    """
    dt = corr.dt_stored
    if window_width < 4.0 * dt:
        raise WindowTooNarrow(
            f"window_width {window_width:.3f} < 4 stored steps ({4 * dt:.3f})")
    times = corr.times
    n_t = len(times)
    centers = np.linspace(times[0], times[-1], n_centers)
    half = int(np.ceil(3.0 * window_width / dt))
    omegas = 2.0 * np.pi * np.fft.fftfreq(n_freq, d=dt)
    pos = omegas >= 0
    om_pos = omegas[pos]
    n_pos = pos.sum()
    # sum-frequency bins
    n_sum = n_pos
    dsum = om_pos[1] - om_pos[0]
    sum_axis = np.arange(n_sum) * dsum
    amplitude = np.zeros((n_centers, n_centers, n_sum))

    idx = np.arange(n_t)
    windows = []
    spans = []
    for c in centers:
        i0 = int(round((c - times[0]) / dt))
        lo, hi = max(0, i0 - half), min(n_t, i0 + half + 1)
        g = np.exp(-0.5 * ((times[lo:hi] - c) / window_width) ** 2)
        windows.append(g)
        spans.append((lo, hi))
    del idx

    pair_index = (np.add.outer(np.arange(n_pos), np.arange(n_pos))
                  .ravel())
    pair_index = np.minimum(pair_index, n_sum - 1)
    for a in range(n_centers):
        lo_a, hi_a = spans[a]
        for b in range(a + 1):
            lo_b, hi_b = spans[b]
            block = (corr.values[lo_a:hi_a, lo_b:hi_b]
                     * np.outer(windows[a], windows[b]))
            c_hat = np.fft.ifft2(block, s=(n_freq, n_freq)) \
                * (n_freq * dt) ** 2
            power = np.abs(c_hat[np.ix_(pos, pos)]) ** 2
            prof = np.bincount(pair_index, weights=power.ravel(),
                               minlength=n_sum)
            amplitude[a, b] = prof
            amplitude[b, a] = prof
    return TimeFrequencyMap(window_centers=centers, omega_sum=sum_axis,
                            amplitude=amplitude, window_width=window_width)
