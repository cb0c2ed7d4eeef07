"""Stage orchestration: ground -> {hhg, pairs} -> {macro, jsa} -> {hom, ...}.

Each stage writes its artifacts into the configured output directory and
registers them in a JSON manifest. The correlation matrix, the dominant
cost, is cached on disk keyed by a hash of every parameter that influences
it; a corrupt or stale cache triggers recomputation.
"""

import dataclasses
import hashlib
import json
import logging
import os
from pathlib import Path

import numpy as np

from . import io as sfpg_io
from ._version import __version__
from .config import RunConfig
from .constants import HARTREE_EV
from .errors import CacheMismatch, SfpgError, StageDependencyMissing
from .macroscopic import (DispersionModel, InteractionGeometry, angular_yield,
                          emission_angle)
from .model import AtomModel
from .quantum_state import (build_jsa, heralded_pulse, hom_curve,
                            schmidt_decompose)
from .spectra import (cutoff_report, hhg_spectrum, pair_amplitude,
                      pair_spectrum, sum_frequency_profile)
from .tdse import find_ground_state, propagate, snap_dt, two_time_correlation

log = logging.getLogger("sfpg")

STAGES = ("ground", "hhg", "pairs", "macro", "jsa", "hom", "schmidt",
          "herald")

_DEPS = {
    "ground": (),
    "hhg": ("ground",),
    "pairs": ("ground",),
    "macro": ("pairs",),
    "jsa": ("pairs",),
    "hom": ("jsa",),
    "schmidt": ("jsa",),
    "herald": ("jsa",),
}


def resolve_stages(requested) -> list:
    """Requested stages plus their transitive dependencies, in DAG order."""
    unknown = set(requested) - set(STAGES)
    if unknown:
        raise ValueError(f"unknown stage(s): {sorted(unknown)}")
    needed = set()

    def visit(s):
        if s in needed:
            return
        for d in _DEPS[s]:
            visit(d)
        needed.add(s)

    for s in requested:
        visit(s)
    return [s for s in STAGES if s in needed]


def config_hash(config: RunConfig) -> str:
    blob = json.dumps(dataclasses.asdict(config), sort_keys=True,
                      default=str).encode()
    return hashlib.sha256(blob).hexdigest()


class _Lock:
    """One pipeline instance per output directory."""

    def __init__(self, out_dir: Path):
        self.path = out_dir / ".sfpg.lock"

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise CacheMismatch(
                f"output directory is locked by another run: {self.path}; "
                "remove the lock file if no pipeline is active") from None
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)
        return False


class Pipeline:
    """Executes stages against one RunConfig, sharing intermediate state."""

    def __init__(self, config: RunConfig, use_cache: bool | None = None):
        # snap dt so the pulse spans an integer number of stored intervals
        dt = snap_dt(config.pulse, config.settings.dt,
                     config.settings.store_stride, config.coarse_stride)
        settings = dataclasses.replace(config.settings, dt=dt)
        self.config = dataclasses.replace(config, settings=settings)
        self.use_cache = config.cache if use_cache is None else use_cache
        self.out_dir = Path(self.config.output_dir)
        self.atom: AtomModel | None = None
        self.correlation = None
        self.pair_amp = None
        self.pair_spec = None
        self.jsa = None
        self.manifest_entries: dict = {}

    # -- shared state ------------------------------------------------------

    def _register(self, name, path, cached=False):
        self.manifest_entries[name] = {"path": path, "cached": cached}

    def _require(self, attr, stage, needed_by):
        value = getattr(self, attr)
        if value is None:
            raise StageDependencyMissing(
                f"stage {needed_by!r} needs {stage!r} to run first")
        return value

    @property
    def dispersion(self) -> DispersionModel:
        m = self.config.macroscopic
        return DispersionModel(gas=m.gas, pressure_atm=m.pressure_atm,
                               ionization_fraction=m.ionization_fraction,
                               radius=m.radius,
                               pump_omega0=self.config.pulse.omega0,
                               temperature_k=m.temperature_k)

    @property
    def geometry(self) -> InteractionGeometry:
        m = self.config.macroscopic
        return InteractionGeometry(length=m.length, radius=m.radius,
                                   pressure_atm=m.pressure_atm,
                                   temperature_k=m.temperature_k,
                                   pump_photon_number=m.pump_photon_number)

    # -- stages ------------------------------------------------------------

    def run_ground(self):
        cfg = self.config.atom
        if cfg.softening is not None:
            self.atom = find_ground_state(cfg.grid, softening=cfg.softening)
        else:
            self.atom = find_ground_state(cfg.grid,
                                          target_ip=cfg.ionization_energy_au)
        log.info("ground state: E0 = %.8f a.u. (Ip = %.4f eV)",
                 self.atom.ground_energy, self.atom.ionization_energy_ev)
        path = self.out_dir / "ground.csv"
        x = self.atom.grid.x
        sfpg_io._write_csv(path, "x_au,psi,potential_au",
                           (x, self.atom.ground_state.real,
                            self.atom.potential))
        self._register("ground", path)
        report = {
            "ground_energy_au": self.atom.ground_energy,
            "ionization_energy_ev": self.atom.ionization_energy_ev,
            "softening": self.atom.softening,
        }
        rpath = self.out_dir / "ground.json"
        with open(rpath, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self._register("ground_report", rpath)

    def run_hhg(self):
        atom = self._require("atom", "ground", "hhg")
        pulse, settings = self.config.pulse, self.config.settings
        record = propagate(atom, pulse, settings)
        spec = hhg_spectrum(record, pulse.omega0,
                            window=self.config.analysis.window)
        report = cutoff_report(spec, atom.ionization_energy_au, pulse.up)
        log.info("hhg: q_c = %.0f (predicted %.1f)", report.q_c,
                 report.predicted_q_c)
        dpath = self.out_dir / "dipole.csv"
        sfpg_io.write_dipole_csv(dpath, record)
        self._register("dipole", dpath)
        spath = self.out_dir / "hhg.csv"
        sfpg_io.write_hhg_csv(spath, spec)
        self._register("hhg", spath)
        cpath = self.out_dir / "hhg_cutoff.json"
        with open(cpath, "w") as fh:
            json.dump({"q_c": report.q_c,
                       "predicted_q_c": report.predicted_q_c,
                       "plateau_level": report.plateau_level}, fh,
                      indent=2, sort_keys=True)
            fh.write("\n")
        self._register("hhg_cutoff", cpath)
        return spec, report

    def _correlation_cache_path(self) -> Path:
        return self.out_dir / "cache" / "correlation.bin"

    def run_pairs(self):
        atom = self._require("atom", "ground", "pairs")
        cfg = self.config
        params = cfg.correlation_params()
        cache_path = self._correlation_cache_path()
        cached = False
        corr = None
        if self.use_cache and cache_path.exists():
            try:
                corr = sfpg_io.read_correlation(cache_path, params)
                cached = True
                log.info("pairs: correlation cache hit (%s)", cache_path)
            except CacheMismatch as exc:
                log.warning("pairs: %s; recomputing", exc)
        if corr is None:
            log.info("pairs: computing two-time correlation "
                     "(n_x=%d, dt=%.4f)", atom.grid.n_points,
                     cfg.settings.dt)
            corr = two_time_correlation(atom, cfg.pulse, cfg.settings,
                                        coarse_stride=cfg.coarse_stride)
            if self.use_cache:
                cache_path.parent.mkdir(parents=True, exist_ok=True)
                sfpg_io.write_correlation(cache_path, corr, params)
        self.correlation = corr
        self._register("correlation_cache", cache_path, cached=cached) \
            if self.use_cache else None

        analysis = cfg.analysis
        self.pair_amp = pair_amplitude(corr, cfg.pulse.omega0,
                                       window=analysis.window,
                                       pad_factor=analysis.pad_factor)
        self.pair_spec = pair_spectrum(corr, cfg.pulse.omega0,
                                       window=analysis.window,
                                       pad_factor=analysis.pad_factor)
        # trust only frequencies well below the stored-grid Nyquist, where
        # the undersampled equal-time ridge has not aliased in yet
        trust = (cfg.analysis.band[0],
                 (2.0 / 3.0) * self.pair_spec.omegas[-1])
        report = cutoff_report(self.pair_spec, atom.ionization_energy_au,
                               cfg.pulse.up, band=trust)
        log.info("pairs: q_c = %.0f, primary/inter = %.3e/%.3e, "
                 "beyond-box level %.3e vs stripe %.3e", report.q_c,
                 report.primary_intensity, report.interband_intensity,
                 report.beyond_box_level, report.stripe_level)

        # export the band of interest at full resolution
        lo, hi = analysis.band
        sel = (self.pair_spec.omegas >= lo) & (self.pair_spec.omegas <= hi)
        band_spec = dataclasses.replace(
            self.pair_spec, omegas=self.pair_spec.omegas[sel],
            omegas_prime=self.pair_spec.omegas[sel],
            dp=self.pair_spec.dp[np.ix_(sel, sel)])
        ppath = self.out_dir / "pair_spectrum.csv"
        sfpg_io.write_pair_csv(ppath, band_spec)
        self._register("pair_spectrum", ppath)
        bpath = self.out_dir / "cache" / "pair_spectrum.bin"
        if self.use_cache:
            bpath.parent.mkdir(parents=True, exist_ok=True)
            sfpg_io.write_pair_spectrum(bpath, self.pair_spec, params)
            self._register("pair_spectrum_cache", bpath)
        s_axis, profile = sum_frequency_profile(band_spec)
        fpath = self.out_dir / "sum_frequency.csv"
        sfpg_io._write_csv(fpath, "omega_sum_au,harmonic,profile",
                           (s_axis, s_axis / cfg.pulse.omega0, profile))
        self._register("sum_frequency", fpath)
        cpath = self.out_dir / "pair_cutoff.json"
        with open(cpath, "w") as fh:
            json.dump({"q_c": report.q_c,
                       "predicted_q_c": report.predicted_q_c,
                       "primary_intensity": report.primary_intensity,
                       "interband_intensity": report.interband_intensity,
                       "beyond_box_level": report.beyond_box_level,
                       "stripe_level": report.stripe_level},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
        self._register("pair_cutoff", cpath)
        return report

    def run_macro(self):
        spec = self._require("pair_spec", "pairs", "macro")
        cfg = self.config
        analysis = cfg.analysis
        model = self.dispersion
        geom = self.geometry
        thetas = np.linspace(1e-4, 0.1, analysis.n_theta)
        omegas = np.linspace(analysis.band[0], analysis.band[1],
                             analysis.n_omega)
        ymap = angular_yield(spec, geom, model, thetas, omegas,
                             calibration=cfg.macroscopic.calibration)
        total = float(np.trapezoid(np.trapezoid(ymap.dn_domega_dtheta,
                                                omegas, axis=1), thetas))
        log.info("macro: integrated per-shot count = %.3e", total)
        apath = self.out_dir / "angular_yield.csv"
        sfpg_io.write_angular_csv(apath, ymap)
        self._register("angular_yield", apath)

        # per-harmonic comb at the degeneracy angle
        q_deg = []
        w0 = cfg.pulse.omega0
        theta0 = emission_angle(2 * max(1, int(round(
            (analysis.band[0] + analysis.band[1]) / (2 * w0)))),
            (analysis.band[0] + analysis.band[1]) / 2.0, model)
        for q, contrib in sorted(ymap.per_q.items()):
            wq = q * w0 / 2.0
            th_q = emission_angle(q, wq, model)
            if th_q is None or not omegas[0] <= wq <= omegas[-1]:
                continue
            it = int(np.argmin(np.abs(thetas - th_q)))
            iw = int(np.argmin(np.abs(omegas - wq)))
            q_deg.append((q, th_q, contrib[it, iw]))
        dpath = self.out_dir / "degenerate_comb.csv"
        qs = np.array([r[0] for r in q_deg], dtype=float)
        sfpg_io._write_csv(dpath, "q,theta_mrad,dn",
                           (qs, np.array([r[1] for r in q_deg]) * 1e3,
                            np.array([r[2] for r in q_deg])))
        self._register("degenerate_comb", dpath)
        mpath = self.out_dir / "macro.json"
        with open(mpath, "w") as fh:
            json.dump({"total_per_shot": total,
                       "pump_index_minus_1": model.pump_index - 1.0,
                       "degeneracy_angle_mrad":
                           (theta0 * 1e3 if theta0 is not None else None)},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
        self._register("macro_report", mpath)
        return ymap, total

    def run_jsa(self):
        amp = self._require("pair_amp", "pairs", "jsa")
        cfg = self.config
        analysis = cfg.analysis
        self.jsa = build_jsa(amp, self.dispersion, self.geometry,
                             collection_angle=analysis.collection_angle,
                             acceptance_halfwidth=analysis.acceptance_halfwidth,
                             band=analysis.band,
                             grid_size=analysis.jsa_grid_size)
        log.info("jsa: %d x %d grid, norm %.6f", len(self.jsa.omegas),
                 len(self.jsa.omegas), self.jsa.norm)
        jpath = self.out_dir / "jsa.bin"
        sfpg_io.write_jsa(jpath, self.jsa, cfg.correlation_params())
        self._register("jsa", jpath)
        # magnitude export for plotting
        mpath = self.out_dir / "jsa_abs.csv"
        w = self.jsa.omegas
        ww, wwp = np.meshgrid(w, w, indexing="ij")
        stride = max(1, len(w) // 256)
        sfpg_io._write_csv(
            mpath, "omega_au,omega_prime_au,abs_j",
            (ww[::stride, ::stride].ravel(), wwp[::stride, ::stride].ravel(),
             np.abs(self.jsa.values[::stride, ::stride]).ravel()))
        self._register("jsa_abs", mpath)

    def run_hom(self):
        jsa = self._require("jsa", "jsa", "hom")
        analysis = self.config.analysis
        delays = np.arange(-analysis.delay_max,
                           analysis.delay_max + 0.5 * analysis.delay_step,
                           analysis.delay_step)
        curve = hom_curve(jsa, delays)
        i0 = int(np.argmin(np.abs(curve.delays)))
        log.info("hom: P(0) = %.3e, dip FWHM = %.1f as",
                 curve.coincidence[i0], curve.dip_fwhm() * 24.188843265857)
        path = self.out_dir / "hom.csv"
        sfpg_io.write_hom_csv(path, curve)
        self._register("hom", path)
        return curve

    def run_schmidt(self):
        jsa = self._require("jsa", "jsa", "schmidt")
        report = schmidt_decompose(jsa)
        log.info("schmidt: K = %.3f, S = %.3f", report.schmidt_number,
                 report.entropy)
        path = self.out_dir / "schmidt.csv"
        sfpg_io.write_schmidt_csv(path, report)
        self._register("schmidt", path)
        spath = self.out_dir / "schmidt.json"
        with open(spath, "w") as fh:
            json.dump({"schmidt_number": report.schmidt_number,
                       "entropy": report.entropy}, fh, indent=2,
                      sort_keys=True)
            fh.write("\n")
        self._register("schmidt_report", spath)
        return report

    def run_herald(self):
        jsa = self._require("jsa", "jsa", "herald")
        analysis = self.config.analysis
        times, intensity = heralded_pulse(jsa, analysis.herald_omega,
                                          analysis.herald_bandwidth)
        path = self.out_dir / "herald.csv"
        sfpg_io.write_herald_csv(path, times, intensity)
        self._register("herald", path)
        return times, intensity

    # -- driver ------------------------------------------------------------

    def run(self, stages) -> Path:
        order = resolve_stages(stages)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        with _Lock(self.out_dir):
            for stage in order:
                log.info("stage: %s", stage)
                try:
                    getattr(self, f"run_{stage}")()
                except SfpgError as exc:
                    exc.stage = stage
                    raise
            mpath = self.out_dir / "manifest.json"
            sfpg_io.write_manifest(mpath, config_hash(self.config),
                                   __version__, self.manifest_entries)
        return mpath


def run_pipeline(config: RunConfig, stages, use_cache: bool | None = None):
    """Convenience wrapper; returns the manifest path."""
    return Pipeline(config, use_cache=use_cache).run(stages)
