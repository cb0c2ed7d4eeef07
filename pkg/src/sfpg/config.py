"""Run configuration: TOML with mandatory unit suffixes on physical values.

Quantities are written as strings like "800 nm" or "2e14 W/cm^2" and
converted to atomic units on load. Unknown keys are rejected with the full
key path so typos fail loudly instead of silently using defaults.
"""

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

import numpy as np

from . import constants as const
from .errors import ConfigParseError
from .model import LaserPulse, PropagationSettings, SpatialGrid

# multiplicative conversion to atomic units, keyed by unit token
_UNIT_TO_AU = {
    "au": 1.0,
    "bohr": 1.0,
    "nm": 1.0 / (const.BOHR_M * 1e9),
    "um": 1e-6 / const.BOHR_M,
    "mm": 1e-3 / const.BOHR_M,
    "ev": 1.0 / const.HARTREE_EV,
    "as": 1.0 / const.AU_TIME_AS,
    "fs": 1.0 / const.AU_TIME_FS,
    "rad": 1.0,
    "mrad": 1e-3,
    "w/cm^2": 1.0 / const.INTENSITY_AU_WCM2,
    "atm": 1.0,   # pressures stay in atm (density helper converts)
    "k": 1.0,     # temperatures stay in kelvin
}

_SPECIES = {
    # softening tuned so the soft-core ground state matches the ionization
    # energy on a converged grid
    "neon": {"ionization_energy_au": 21.5645 / const.HARTREE_EV,
             "softening": 0.8163},
    "argon": {"ionization_energy_au": 15.7596 / const.HARTREE_EV,
              "softening": 1.1893},
    "hydrogen": {"ionization_energy_au": 0.5, "softening": 1.4142},
}

PRESETS = ("fig2_neon", "fig3_waveguide", "fig4_hom")


def parse_quantity(text, key: str, expect: str) -> float:
    """Parse "value unit" into atomic units (or atm/K passthrough)."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        raise ConfigParseError(
            f"{key}: bare number {text!r}; write a unit, e.g. \"{text} {expect}\"")
    if not isinstance(text, str):
        raise ConfigParseError(f"{key}: expected a quantity string")
    parts = text.split()
    if len(parts) != 2:
        raise ConfigParseError(
            f"{key}: expected \"<value> <unit>\", got {text!r}")
    try:
        value = float(parts[0])
    except ValueError:
        raise ConfigParseError(f"{key}: bad number {parts[0]!r}") from None
    unit = parts[1].lower()
    if unit not in _UNIT_TO_AU:
        raise ConfigParseError(f"{key}: unknown unit {parts[1]!r}")
    return value * _UNIT_TO_AU[unit]


def _take(table: dict, key_path: str, key: str, default=None, required=False):
    if key in table:
        return table.pop(key)
    if required:
        raise ConfigParseError(f"missing required key {key_path}.{key}")
    return default


def _reject_unknown(table: dict, key_path: str):
    if table:
        bad = ", ".join(f"{key_path}.{k}" for k in sorted(table))
        raise ConfigParseError(f"unknown key(s): {bad}")


@dataclass(frozen=True)
class AtomConfig:
    species: str | None
    ionization_energy_au: float
    softening: float | None
    grid: SpatialGrid


@dataclass(frozen=True)
class MacroscopicConfig:
    gas: str
    pressure_atm: float
    ionization_fraction: float
    length: float
    radius: float
    temperature_k: float
    calibration: float
    pump_photon_number: float


@dataclass(frozen=True)
class AnalysisConfig:
    band: tuple[float, float]
    collection_angle: float
    acceptance_halfwidth: float
    delay_max: float
    delay_step: float
    herald_omega: float
    herald_bandwidth: float
    n_theta: int
    n_omega: int
    window: str
    pad_factor: int
    jsa_grid_size: int


@dataclass(frozen=True)
class RunConfig:
    atom: AtomConfig
    pulse: LaserPulse
    settings: PropagationSettings
    macroscopic: MacroscopicConfig
    analysis: AnalysisConfig
    output_dir: Path
    cache: bool = True
    deterministic: bool = True
    coarse_stride: int = 1

    def correlation_params(self) -> dict:
        """Parameters that determine the correlation matrix (cache key)."""
        return {
            "ip": self.atom.ionization_energy_au,
            "softening": self.atom.softening,
            "grid": [self.atom.grid.x_min, self.atom.grid.x_max,
                     self.atom.grid.n_points],
            "wavelength_nm": self.pulse.wavelength_nm,
            "intensity": self.pulse.peak_intensity_w_cm2,
            "cycles": self.pulse.n_cycles,
            "envelope": self.pulse.envelope_kind,
            "cep": self.pulse.carrier_envelope_phase,
            "ramp_cycles": self.pulse.ramp_cycles,
            "dt": self.settings.dt,
            "absorber": [self.settings.absorber_fraction,
                         self.settings.absorber_exponent],
            "store_stride": self.settings.store_stride,
            "coarse_stride": self.coarse_stride,
        }


def _parse_atom(table: dict) -> AtomConfig:
    species = _take(table, "atom", "species")
    softening = _take(table, "atom", "softening")
    ip_raw = _take(table, "atom", "ionization_energy")
    if species is not None:
        if species not in _SPECIES:
            raise ConfigParseError(
                f"atom.species: unknown species {species!r}; "
                f"choose from {sorted(_SPECIES)}")
        preset = _SPECIES[species]
        ip = preset["ionization_energy_au"]
        if softening is None:
            softening = preset["softening"]
    elif ip_raw is not None:
        ip = parse_quantity(ip_raw, "atom.ionization_energy", "eV")
    else:
        raise ConfigParseError(
            "atom: give either species or ionization_energy")
    n_points = _take(table, "atom", "grid_points", required=True)
    half = parse_quantity(_take(table, "atom", "grid_half_width",
                                required=True),
                          "atom.grid_half_width", "bohr")
    _reject_unknown(table, "atom")
    try:
        grid = SpatialGrid(x_min=-half, x_max=half, n_points=int(n_points))
    except ValueError as exc:
        raise ConfigParseError(f"atom grid: {exc}") from exc
    return AtomConfig(species=species, ionization_energy_au=ip,
                      softening=softening, grid=grid)


def _parse_pulse(table: dict) -> LaserPulse:
    wavelength = parse_quantity(_take(table, "pulse", "wavelength",
                                      required=True),
                                "pulse.wavelength", "nm")
    intensity = parse_quantity(_take(table, "pulse", "intensity",
                                     required=True),
                               "pulse.intensity", "W/cm^2")
    cycles = _take(table, "pulse", "cycles", required=True)
    envelope = _take(table, "pulse", "envelope", default="sin2")
    cep = _take(table, "pulse", "cep", default=0.0)
    ramp = _take(table, "pulse", "ramp_cycles", default=1.0)
    _reject_unknown(table, "pulse")
    try:
        return LaserPulse(
            wavelength_nm=wavelength * const.BOHR_M * 1e9,
            peak_intensity_w_cm2=intensity * const.INTENSITY_AU_WCM2,
            n_cycles=float(cycles), envelope_kind=envelope,
            carrier_envelope_phase=float(cep), ramp_cycles=float(ramp))
    except ValueError as exc:
        raise ConfigParseError(f"pulse: {exc}") from exc


def _parse_numerics(table: dict):
    dt = parse_quantity(_take(table, "numerics", "dt", default="0.05 au"),
                        "numerics.dt", "au")
    stride = int(_take(table, "numerics", "store_stride", default=5))
    coarse = int(_take(table, "numerics", "coarse_stride", default=1))
    frac = float(_take(table, "numerics", "absorber_fraction", default=0.125))
    expo = float(_take(table, "numerics", "absorber_exponent", default=0.125))
    _reject_unknown(table, "numerics")
    try:
        settings = PropagationSettings(dt=dt, absorber_fraction=frac,
                                       absorber_exponent=expo,
                                       store_stride=stride)
    except ValueError as exc:
        raise ConfigParseError(f"numerics: {exc}") from exc
    return settings, coarse


def _parse_macroscopic(table: dict) -> MacroscopicConfig:
    gas = _take(table, "macroscopic", "gas", default="neon")
    pressure = parse_quantity(_take(table, "macroscopic", "pressure",
                                    default="1 atm"),
                              "macroscopic.pressure", "atm")
    eta = float(_take(table, "macroscopic", "ionization_fraction",
                      default=0.1))
    length = parse_quantity(_take(table, "macroscopic", "length",
                                  default="1 mm"),
                            "macroscopic.length", "mm")
    radius = parse_quantity(_take(table, "macroscopic", "radius",
                                  default="400 um"),
                            "macroscopic.radius", "um")
    temp = parse_quantity(_take(table, "macroscopic", "temperature",
                                default="293 K"),
                          "macroscopic.temperature", "K")
    calibration = float(_take(table, "macroscopic", "calibration",
                              default=1.0))
    photons = float(_take(table, "macroscopic", "pump_photon_number",
                          default=1e17))
    _reject_unknown(table, "macroscopic")
    if pressure < 0 or length <= 0 or radius <= 0 or temp <= 0:
        raise ConfigParseError("macroscopic: non-physical geometry value")
    return MacroscopicConfig(gas=gas, pressure_atm=pressure,
                             ionization_fraction=eta, length=length,
                             radius=radius, temperature_k=temp,
                             calibration=calibration,
                             pump_photon_number=photons)


def _parse_analysis(table: dict) -> AnalysisConfig:
    band_raw = _take(table, "analysis", "band",
                     default=["10 eV", "70 eV"])
    if not (isinstance(band_raw, list) and len(band_raw) == 2):
        raise ConfigParseError("analysis.band: expected [low, high]")
    band = (parse_quantity(band_raw[0], "analysis.band[0]", "eV"),
            parse_quantity(band_raw[1], "analysis.band[1]", "eV"))
    if band[0] >= band[1] or band[0] <= 0:
        raise ConfigParseError("analysis.band: need 0 < low < high")
    angle = parse_quantity(_take(table, "analysis", "collection_angle",
                                 default="36 mrad"),
                           "analysis.collection_angle", "mrad")
    halfw = parse_quantity(_take(table, "analysis", "acceptance_halfwidth",
                                 default="15 mrad"),
                           "analysis.acceptance_halfwidth", "mrad")
    delay_max = parse_quantity(_take(table, "analysis", "delay_max",
                                     default="4 fs"),
                               "analysis.delay_max", "fs")
    delay_step = parse_quantity(_take(table, "analysis", "delay_step",
                                      default="10 as"),
                                "analysis.delay_step", "as")
    herald = parse_quantity(_take(table, "analysis", "herald_energy",
                                  default="31 eV"),
                            "analysis.herald_energy", "eV")
    herald_bw = parse_quantity(_take(table, "analysis", "herald_bandwidth",
                                     default="0.3 eV"),
                               "analysis.herald_bandwidth", "eV")
    n_theta = int(_take(table, "analysis", "n_theta", default=121))
    n_omega = int(_take(table, "analysis", "n_omega", default=241))
    window = _take(table, "analysis", "window", default="hann")
    pad = int(_take(table, "analysis", "pad_factor", default=2))
    jsa_n = int(_take(table, "analysis", "jsa_grid_size", default=512))
    _reject_unknown(table, "analysis")
    return AnalysisConfig(band=band, collection_angle=angle,
                          acceptance_halfwidth=halfw, delay_max=delay_max,
                          delay_step=delay_step, herald_omega=herald,
                          herald_bandwidth=herald_bw, n_theta=n_theta,
                          n_omega=n_omega, window=window, pad_factor=pad,
                          jsa_grid_size=jsa_n)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigParseError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError(f"{path}: {exc}") from exc
    return parse_config(raw, base_dir=path.parent)


def parse_config(raw: dict, base_dir: Path = Path(".")) -> RunConfig:
    raw = {k: (dict(v) if isinstance(v, dict) else v) for k, v in raw.items()}
    atom = _parse_atom(_take(raw, "", "atom", required=True))
    pulse = _parse_pulse(_take(raw, "", "pulse", required=True))
    settings, coarse = _parse_numerics(_take(raw, "", "numerics", default={}))
    macro = _parse_macroscopic(_take(raw, "", "macroscopic", default={}))
    analysis = _parse_analysis(_take(raw, "", "analysis", default={}))
    out_tbl = _take(raw, "", "output", default={})
    out_dir = Path(_take(out_tbl, "output", "directory", default="sfpg_out"))
    cache = bool(_take(out_tbl, "output", "cache", default=True))
    _reject_unknown(out_tbl, "output")
    deterministic = bool(_take(raw, "", "deterministic", default=True))
    _reject_unknown(raw, "<root>")
    if not out_dir.is_absolute():
        out_dir = base_dir / out_dir
    return RunConfig(atom=atom, pulse=pulse, settings=settings,
                     macroscopic=macro, analysis=analysis,
                     output_dir=out_dir, cache=cache,
                     deterministic=deterministic, coarse_stride=coarse)


def load_preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigParseError(f"unknown preset {name!r}; "
                               f"choose from {PRESETS}")
    ref = resources.files("sfpg") / "presets" / f"{name}.toml"
    raw = tomllib.loads(ref.read_text())
    # preset outputs land under the caller's working directory
    return parse_config(raw, base_dir=Path.cwd())


def preset_path(name: str) -> Path:
    ref = resources.files("sfpg") / "presets" / f"{name}.toml"
    with resources.as_file(ref) as p:
        return Path(p)
