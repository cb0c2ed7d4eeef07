"""Acceptance suite: one test per primary criterion, one printed verdict each.

Expensive pipeline products (the two-time correlation matrices) are cached on
disk under a shared directory, so the first run takes several minutes and
subsequent runs are fast.
"""

import dataclasses
import json
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest

from sfpg.config import load_preset
from sfpg.constants import C_AU
from sfpg.macroscopic import (DispersionModel, InteractionGeometry,
                              angular_yield, emission_angle, phase_mismatch)
from sfpg.pipeline import Pipeline
from sfpg.quantum_state import JointSpectralAmplitude, schmidt_decompose
from sfpg.spectra import fourier_1d

ACCEPT_ROOT = Path(os.environ.get(
    "SFPG_ACCEPT_DIR", os.path.join(tempfile.gettempdir(),
                                    "sfpg_acceptance")))

_SEED_CACHES = [Path("/tmp/runs/fig2_neon_out/cache/correlation.bin")]


def _report(name: str, ok: bool, detail: str):
    verdict = "PASS" if ok else "FAIL"
    print(f"[{verdict}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def _seed_cache(out_dir: Path, sources=()):
    """Copy a previously computed correlation matrix into a run directory.

    The binary carries a parameter hash, so a stale or mismatched seed is
    detected on read and simply recomputed.
    """
    target = out_dir / "cache" / "correlation.bin"
    if target.exists():
        return
    for src in list(sources) + _SEED_CACHES:
        src = Path(src)
        if src.exists():
            target.parent.mkdir(parents=True, exist_ok=True)
            shutil.copy(src, target)
            return


def _run(config, stages, seed_from=()):
    pipe = Pipeline(config)
    pipe.out_dir.mkdir(parents=True, exist_ok=True)
    _seed_cache(pipe.out_dir, seed_from)
    results = {}
    pipe.run_ground()
    if "hhg" in stages:
        results["hhg_spec"], results["hhg_report"] = pipe.run_hhg()
    if "pairs" in stages:
        results["pair_report"] = pipe.run_pairs()
    if "macro" in stages:
        results["ymap"], results["macro_total"] = pipe.run_macro()
    if "jsa" in stages:
        pipe.run_jsa()
    if "hom" in stages:
        results["hom"] = pipe.run_hom()
    if "schmidt" in stages:
        results["schmidt"] = pipe.run_schmidt()
    if "herald" in stages:
        results["herald"] = pipe.run_herald()
    from sfpg import io as sfpg_io
    from sfpg._version import __version__
    from sfpg.pipeline import config_hash
    sfpg_io.write_manifest(pipe.out_dir / "manifest.json",
                           config_hash(pipe.config), __version__,
                           pipe.manifest_entries)
    results["pipe"] = pipe
    return results


@pytest.fixture(scope="session")
def fig2():
    config = dataclasses.replace(load_preset("fig2_neon"),
                                 output_dir=ACCEPT_ROOT / "fig2")
    return _run(config, ["hhg", "pairs", "jsa", "schmidt", "herald"])


@pytest.fixture(scope="session")
def fig3(fig2):
    config = dataclasses.replace(load_preset("fig3_waveguide"),
                                 output_dir=ACCEPT_ROOT / "fig3")
    seed = [fig2["pipe"].out_dir / "cache" / "correlation.bin"]
    return _run(config, ["pairs", "macro"], seed_from=seed)


@pytest.fixture(scope="session")
def hom_runs(fig2):
    runs = {}
    seed = [fig2["pipe"].out_dir / "cache" / "correlation.bin"]
    for intensity in (1.5e14, 2.0e14, 2.5e14):
        config = load_preset("fig4_hom")
        pulse = dataclasses.replace(config.pulse,
                                    peak_intensity_w_cm2=intensity)
        config = dataclasses.replace(
            config, pulse=pulse,
            output_dir=ACCEPT_ROOT / f"hom_{intensity:.1e}")
        runs[intensity] = _run(config, ["pairs", "jsa", "hom"],
                               seed_from=seed if intensity == 2.0e14 else ())
    return runs


@pytest.fixture(scope="session")
def selection_run():
    """Long flat-top pulse for clean odd/even selection-rule contrast."""
    config = load_preset("fig2_neon")
    pulse = dataclasses.replace(config.pulse, n_cycles=32.0, ramp_cycles=2.0)
    config = dataclasses.replace(config, pulse=pulse,
                                 output_dir=ACCEPT_ROOT / "selection")
    return _run(config, ["hhg"])


def _harmonic_peaks(spec, qs, halfwidth=0.25):
    h = spec.omegas / spec.omega0
    return np.array([spec.dp_domega[np.abs(h - q) <= halfwidth].max()
                     for q in qs])


def test_cutoff_law(fig2):
    report = fig2["hhg_report"]
    ok = 35 <= report.q_c <= 43 \
        and abs(report.q_c - report.predicted_q_c) <= 3.0
    _report("cutoff law", ok,
            f"q_c = {report.q_c}, predicted {report.predicted_q_c:.1f}")


def test_selection_rules(selection_run, fig2):
    spec = selection_run["hhg_spec"]
    odd = _harmonic_peaks(spec, np.arange(15, 36, 2))
    # even harmonics at the exact bin: a +/- w0/4 band max would only report
    # the pedestal wings of the neighboring odd peaks
    h = spec.omegas / spec.omega0
    even = np.array([spec.dp_domega[np.argmin(np.abs(h - q))]
                     for q in np.arange(16, 37, 2)])
    contrast = float(np.median(odd) / np.median(even))

    pair = fig2["pipe"].pair_spec
    w = pair.omegas
    lo = fig2["pipe"].config.analysis.band[0]
    hi = (2.0 / 3.0) * w[-1]
    sel = (w >= lo) & (w <= hi)
    dp = pair.dp[np.ix_(sel, sel)]
    s = np.add.outer(w[sel], w[sel])
    w0 = pair.omega0
    near_even = np.abs(s / (2 * w0) - np.rint(s / (2 * w0))) * 2 * w0 \
        <= w0 / 4
    residency = float(dp[near_even].sum() / dp.sum())

    ok = contrast >= 1e4 and residency >= 0.90
    _report("selection rules", ok,
            f"odd/even contrast = {contrast:.2e}, "
            f"even-stripe residency = {residency:.3f}")


def test_two_cutoff_structure(fig2):
    report = fig2["pair_report"]
    primary_dominant = report.primary_intensity > report.interband_intensity
    interband_nonzero = report.interband_intensity > 0
    beyond_ok = report.beyond_box_level <= 1e-2 * report.stripe_level
    ok = primary_dominant and interband_nonzero and beyond_ok
    _report("two-cutoff structure", ok,
            f"primary/inter = {report.primary_intensity:.3e}/"
            f"{report.interband_intensity:.3e}, beyond-box level "
            f"{report.beyond_box_level:.3e} vs stripe "
            f"{report.stripe_level:.3e}")


def test_oracle_equivalence(small_atom):
    from test_correlation import _dense_correlation, _pulse
    from sfpg.model import PropagationSettings
    from sfpg.tdse import snap_dt, two_time_correlation
    from test_correlation import _dense_step_factors

    # field-free vs eigendecomposition of the dense one-step operator
    pulse = _pulse(intensity=1e-4)
    dt = snap_dt(pulse, 0.5, store_stride=8)
    settings = PropagationSettings(dt=dt, absorber_fraction=0.0,
                                   store_stride=8)
    corr = two_time_correlation(small_atom, pulse, settings)
    grid = small_atom.grid
    dx = grid.spacing
    kin = _dense_step_factors(small_atom, dt)
    half = np.exp(-0.5j * dt * small_atom.potential)
    u = (half[:, None] * kin) * half[None, :]
    vals, vecs = np.linalg.eig(u)
    n_t = len(corr.times)
    stride = int(round((corr.times[1] - corr.times[0]) / dt))
    coeff = np.linalg.solve(vecs, small_atom.ground_state.astype(complex))
    psi_t = (vals[None, :] ** (stride * np.arange(n_t)[:, None])
             * coeff[None, :]) @ vecs.T
    d = np.einsum("ix,x,ix->i", np.conj(psi_t), grid.x, psi_t).real * dx
    oracle = np.zeros((n_t, n_t), dtype=complex)
    for j in range(n_t):
        phi_coeff = np.linalg.solve(vecs, grid.x * psi_t[j])
        for i in range(j, n_t):
            phi = vecs @ (phi_coeff * vals ** (stride * (i - j)))
            val = np.sum(np.conj(psi_t[i]) * grid.x * phi) * dx
            oracle[i, j] = val
            oracle[j, i] = val
    oracle -= np.outer(d, d)
    err_free = float(np.max(np.abs(corr.values - oracle))
                     / np.max(np.abs(oracle)))

    # driven weak field vs the dense reference propagator
    pulse = _pulse(intensity=1e13, cycles=1.0)
    dt = snap_dt(pulse, 0.4, store_stride=8)
    settings = PropagationSettings(dt=dt, absorber_fraction=0.0,
                                   store_stride=8)
    corr = two_time_correlation(small_atom, pulse, settings)
    dense = _dense_correlation(small_atom, pulse, corr.times, dt)
    err_driven = float(np.max(np.abs(corr.values - dense))
                       / np.max(np.abs(dense)))

    ok = err_free < 1e-8 and err_driven < 1e-6
    _report("oracle equivalence", ok,
            f"field-free err = {err_free:.2e} (< 1e-8), "
            f"driven err = {err_driven:.2e} (< 1e-6)")


def test_emission_angle_algebra():
    um = 1e-6 / 5.29177210903e-11
    mm = 1e-3 / 5.29177210903e-11
    omega0 = 0.056954
    model = DispersionModel(gas="neon", pressure_atm=1.0,
                            ionization_fraction=0.1, radius=400 * um,
                            pump_omega0=omega0)
    # degenerate pair at the pump frequency: n = n0 exactly, theta = 0
    theta_triv = emission_angle(2, omega0, model)
    # nontrivial degenerate case: Cherenkov-type cos(theta0) = n0 / n
    q = 20
    omega = q * omega0 / 2.0
    theta0 = emission_angle(q, omega, model)
    n = model.refractive_index(omega)
    cherenkov_err = abs(np.cos(theta0) - model.pump_index / n)
    dk_z, dk_perp = phase_mismatch(q, omega, theta0, model,
                                   theta_prime=theta0)
    k_scale = q * omega0 / C_AU
    ok = (theta_triv == pytest.approx(0.0, abs=1e-12)
          and cherenkov_err < 1e-12
          and abs(dk_z) < 1e-12 * k_scale
          and abs(dk_perp) < 1e-12 * k_scale)
    _report("emission-angle algebra", ok,
            f"theta(n=n0) = {theta_triv:.2e}, |cos t0 - n0/n| = "
            f"{cherenkov_err:.2e}, |dk| = ({abs(dk_z):.2e}, "
            f"{abs(dk_perp):.2e})")


def test_macroscopic_structure(fig2, fig3):
    ymap = fig3["ymap"]
    total = fig3["macro_total"]
    pipe = fig3["pipe"]
    model = pipe.dispersion
    w0 = pipe.config.pulse.omega0
    dtheta = ymap.thetas[1] - ymap.thetas[0]

    q_c = fig3["pair_report"].q_c

    # discrete rings: each plateau even-q layer peaks at its predicted angle
    rings_ok = True
    checked = 0
    for q, contrib in sorted(ymap.per_q.items()):
        wq = q * w0 / 2.0
        if q > q_c or not ymap.omegas[0] <= wq <= ymap.omegas[-1]:
            continue
        th_q = emission_angle(q, wq, model)
        if th_q is None or not ymap.thetas[0] < th_q < ymap.thetas[-1]:
            continue
        iw = int(np.argmin(np.abs(ymap.omegas - wq)))
        profile = contrib[:, iw]
        if profile.max() <= 0:
            continue
        peak = ymap.thetas[int(np.argmax(profile))]
        checked += 1
        if abs(peak - th_q) > 2 * dtheta:
            rings_ok = False
    rings_ok = rings_ok and checked >= 5

    # degeneracy-angle comb efficient out to the pair cutoff, then collapse
    comb = np.loadtxt(pipe.out_dir / "degenerate_comb.csv", delimiter=",",
                      skiprows=1)
    qs, dn = comb[:, 0], comb[:, 2]
    plateau = np.median(dn[(qs >= 20) & (qs <= q_c - 2)])
    plateau_qs = (qs >= 16) & (qs <= q_c - 2)
    eff_until = qs[dn >= 1e-2 * plateau].max()
    comb_ok = np.all(dn[plateau_qs] >= 1e-2 * plateau) \
        and eff_until >= q_c - 4
    tail = dn[qs >= q_c + 10]
    comb_ok = comb_ok and len(tail) > 0 \
        and np.median(tail) < 1e-2 * plateau

    counts_ok = 1e2 <= total <= 1e6  # within +/- 2 decades of "thousands"

    # doubling pressure at dk = 0 with fixed ionization fraction: x4 yield
    spec = pipe.pair_spec
    q = int(round(q_c / 2) * 2) - 4
    wq = q * w0 / 2.0
    y = []
    for pressure in (1.0, 2.0):
        m = DispersionModel(gas="neon", pressure_atm=pressure,
                            ionization_fraction=0.1,
                            radius=pipe.config.macroscopic.radius,
                            pump_omega0=w0)
        g = InteractionGeometry(length=pipe.config.macroscopic.length,
                                radius=pipe.config.macroscopic.radius,
                                pressure_atm=pressure)
        th = emission_angle(q, wq, m)
        ym = angular_yield(spec, g, m, np.array([th]),
                           np.array([wq - 1e-4, wq, wq + 1e-4]))
        y.append(ym.per_q[q][0, 1] / np.sin(th))
    scaling = y[1] / y[0]
    scaling_ok = abs(scaling - 4.0) <= 0.04

    ok = rings_ok and comb_ok and counts_ok and scaling_ok
    _report("macroscopic structure", ok,
            f"rings on-angle for {checked} harmonics: {rings_ok}, comb "
            f"efficient to q = {eff_until:.0f} (q_c = {q_c}), total = "
            f"{total:.2e} per shot, P^2 scaling = {scaling:.4f}")


def test_hom(hom_runs):
    period = 2.0 * np.pi / 0.056954  # pump optical cycle, a.u.
    all_ok = True
    details = []
    for intensity, run in sorted(hom_runs.items()):
        curve = run["hom"]
        i0 = int(np.argmin(np.abs(curve.delays)))
        p0 = curve.coincidence[i0]
        fwhm_as = curve.dip_fwhm() * 24.188843265857
        # window T0/2 +/- 10%, padded by one delay-grid step so an extremum
        # on the window edge is not lost to discretization
        step = curve.delays[1] - curve.delays[0]
        lo, hi = 0.45 * period - step, 0.55 * period + step
        window = (curve.delays >= lo) & (curve.delays <= hi)
        idx = np.where(window)[0]
        fringe = False
        for i in idx:
            if 0 < i < len(curve.delays) - 1:
                left = curve.coincidence[i] - curve.coincidence[i - 1]
                right = curve.coincidence[i + 1] - curve.coincidence[i]
                if left * right < 0 \
                        and abs(curve.coincidence[i] - 0.5) > 0.01:
                    fringe = True
                    break
        run_ok = p0 < 0.01 and 30.0 <= fwhm_as <= 300.0 and fringe
        all_ok = all_ok and run_ok
        details.append(f"I={intensity:.1e}: P(0)={p0:.1e}, "
                       f"FWHM={fwhm_as:.0f} as, fringe@T0/2={fringe}")
    _report("hom", all_ok, "; ".join(details))


def test_schmidt_suite(fig2):
    # rank-1 synthetic
    n = 96
    omegas = np.linspace(0.4, 0.8, n)
    dw = omegas[1] - omegas[0]
    f = np.exp(-0.5 * ((omegas - 0.6) / 0.02) ** 2)
    v1 = np.outer(f, f).astype(complex)
    v1 /= np.sqrt(np.sum(np.abs(v1) ** 2) * dw * dw)
    r1 = schmidt_decompose(JointSpectralAmplitude(omegas=omegas, values=v1,
                                                  omega0=0.057))
    rank1_ok = abs(r1.schmidt_number - 1.0) < 1e-6 and r1.entropy < 1e-6

    # m equally weighted orthogonal terms
    m = 5
    vm = np.zeros((n, n), dtype=complex)
    for k in range(m):
        e = np.zeros(n)
        e[5 + 12 * k] = 1.0
        vm += np.outer(e, e)
    vm /= np.sqrt(np.sum(np.abs(vm) ** 2) * dw * dw)
    rm = schmidt_decompose(JointSpectralAmplitude(omegas=omegas, values=vm,
                                                  omega0=0.057))
    m_ok = abs(rm.schmidt_number - m) < 1e-6 \
        and abs(rm.entropy - np.log(m)) < 1e-6

    # full computed JSA vs its single-stripe restrictions: the collection
    # band cropped around each degenerate energy q w0 / 2 so exactly one
    # stripe survives
    jsa = fig2["pipe"].jsa
    full = schmidt_decompose(jsa)
    w0 = jsa.omega0
    w = jsa.omegas
    stripes_ok = True
    n_stripes = 0
    for q in range(2 * int(np.ceil(w[0] / w0)), int(2 * w[-1] / w0) + 1, 2):
        sel = np.abs(w - q * w0 / 2.0) <= 0.5 * w0
        if np.count_nonzero(sel) < 4:
            continue
        sub = jsa.values[np.ix_(sel, sel)]
        norm2 = np.sum(np.abs(sub) ** 2) * jsa.domega**2
        if norm2 < 1e-6:  # stripe carries no appreciable weight
            continue
        restricted = schmidt_decompose(JointSpectralAmplitude(
            omegas=w[sel], values=sub / np.sqrt(norm2), omega0=w0))
        n_stripes += 1
        if not (full.schmidt_number > restricted.schmidt_number
                and full.entropy > restricted.entropy):
            stripes_ok = False
    stripes_ok = stripes_ok and n_stripes >= 2

    ok = rank1_ok and m_ok and stripes_ok
    _report("schmidt suite", ok,
            f"rank-1 K = {r1.schmidt_number:.8f}, m-term K = "
            f"{rm.schmidt_number:.8f} (m = {m}), full K = "
            f"{full.schmidt_number:.2f} exceeds {n_stripes} "
            f"single-stripe restrictions: {stripes_ok}")


def test_numerics(small_atom, fig2):
    from sfpg.model import PropagationSettings
    from sfpg.tdse import _SplitOperator, propagate
    from test_correlation import _pulse

    # Richardson ratio of the Strang step
    pulse = _pulse(intensity=5e13, cycles=1.0)
    duration = pulse.duration

    def final_state(n_steps):
        settings = PropagationSettings(dt=duration / n_steps,
                                       absorber_fraction=0.0,
                                       store_stride=n_steps)
        op = _SplitOperator(small_atom, pulse, settings)
        psi = small_atom.ground_state.astype(complex)
        for k in range(n_steps):
            psi = op.step(psi, k * settings.dt)
        return psi

    p1, p2, p4 = (final_state(n) for n in (400, 800, 1600))
    ratio = float(np.linalg.norm(p1 - p2) / np.linalg.norm(p2 - p4))
    richardson_ok = abs(ratio - 4.0) <= 0.5

    # unitarity over 1000 steps without absorber
    pulse = _pulse(intensity=1e13, cycles=1.0)
    settings = PropagationSettings(dt=pulse.duration / 1000,
                                   absorber_fraction=0.0, store_stride=1000)
    record = propagate(small_atom, pulse, settings)
    unitarity = float(abs(record.norm_loss[-1]))
    unitarity_ok = unitarity < 1e-10

    # Parseval identity of the spectral transform
    rng = np.random.default_rng(17)
    n, dt = 512, 0.25
    x = rng.normal(size=n)
    omegas, x_w = fourier_1d(x, dt)
    x_full = np.fft.ifft(x) * n * dt
    domega = 2.0 * np.pi / (n * dt)
    lhs = np.sum(x**2) * dt
    rhs = np.sum(np.abs(x_full) ** 2) * domega / (2.0 * np.pi)
    parseval = abs(lhs - rhs) / lhs
    parseval_ok = parseval < 1e-10

    # determinism: re-running a stage reproduces artifacts bit-exactly
    pipe = fig2["pipe"]
    config = dataclasses.replace(pipe.config,
                                 output_dir=ACCEPT_ROOT / "det_check")
    rerun = _run(config, ["hhg"])
    same = (rerun["pipe"].out_dir / "hhg.csv").read_bytes() \
        == (pipe.out_dir / "hhg.csv").read_bytes() \
        and (rerun["pipe"].out_dir / "dipole.csv").read_bytes() \
        == (pipe.out_dir / "dipole.csv").read_bytes()

    ok = richardson_ok and unitarity_ok and parseval_ok and same
    _report("numerics", ok,
            f"Richardson ratio = {ratio:.3f}, unitarity = {unitarity:.1e}, "
            f"Parseval = {parseval:.1e}, deterministic re-run bit-exact: "
            f"{same}")
