"""Binary cache formats, CSV exports, and run-manifest helpers.

Binary layout (all little-endian):
    8-byte magic | u32 version | u64 n | f64 axis step | 32-byte sha256 of
    the producing parameter string | payload rows (complex128 or float64).
Integrity is checked on read: wrong magic/version or a parameter-hash
mismatch raises CacheMismatch so callers can recompute.
"""

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import CacheMismatch
from .quantum_state import JointSpectralAmplitude
from .spectra import HhgSpectrum, PairSpectrum
from .tdse import CorrelationMatrix, DipoleRecord

MAGIC_CORR = b"SFPGCORR"
MAGIC_PAIR = b"SFPGPAIR"
MAGIC_JSA = b"SFPGJSA0"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<8sIQd32s")


def param_hash(params: dict) -> bytes:
    """sha256 of a canonical JSON rendering of the parameter dict."""
    text = json.dumps(params, sort_keys=True, separators=(",", ":"),
                      default=float)
    return hashlib.sha256(text.encode()).digest()


def _write_header(fh, magic: bytes, n: int, step: float, phash: bytes):
    fh.write(_HEADER.pack(magic, FORMAT_VERSION, n, step, phash))


def _read_header(fh, magic: bytes, path):
    raw = fh.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise CacheMismatch(f"{path}: truncated header")
    got_magic, version, n, step, phash = _HEADER.unpack(raw)
    if got_magic != magic:
        raise CacheMismatch(f"{path}: bad magic {got_magic!r}")
    if version != FORMAT_VERSION:
        raise CacheMismatch(f"{path}: format version {version} unsupported")
    return n, step, phash


def _read_payload(fh, count, dtype, path):
    data = np.fromfile(fh, dtype=dtype, count=count)
    if len(data) != count:
        raise CacheMismatch(f"{path}: truncated payload")
    return data


def write_correlation(path, corr: CorrelationMatrix, params: dict):
    path = Path(path)
    n = len(corr.times)
    with open(path, "wb") as fh:
        _write_header(fh, MAGIC_CORR, n, corr.dt_stored, param_hash(params))
        fh.write(struct.pack("<dB", float(corr.times[0]),
                             1 if corr.connected_flag else 0))
        np.ascontiguousarray(corr.values,
                             dtype="<c16").tofile(fh)


def read_correlation(path, params: dict) -> CorrelationMatrix:
    path = Path(path)
    with open(path, "rb") as fh:
        n, dt, phash = _read_header(fh, MAGIC_CORR, path)
        if phash != param_hash(params):
            raise CacheMismatch(f"{path}: parameter hash mismatch")
        t0, connected = struct.unpack("<dB", fh.read(9))
        values = _read_payload(fh, n * n, "<c16", path).reshape(n, n)
    times = t0 + dt * np.arange(n)
    return CorrelationMatrix(times=times, values=values,
                             connected_flag=bool(connected))


def write_pair_spectrum(path, spec: PairSpectrum, params: dict):
    path = Path(path)
    n = len(spec.omegas)
    domega = float(spec.omegas[1] - spec.omegas[0])
    with open(path, "wb") as fh:
        _write_header(fh, MAGIC_PAIR, n, domega, param_hash(params))
        fh.write(struct.pack("<dd", float(spec.omegas[0]), spec.omega0))
        np.ascontiguousarray(spec.dp, dtype="<f8").tofile(fh)


def read_pair_spectrum(path, params: dict) -> PairSpectrum:
    path = Path(path)
    with open(path, "rb") as fh:
        n, domega, phash = _read_header(fh, MAGIC_PAIR, path)
        if phash != param_hash(params):
            raise CacheMismatch(f"{path}: parameter hash mismatch")
        w0_axis, omega0 = struct.unpack("<dd", fh.read(16))
        dp = _read_payload(fh, n * n, "<f8", path).reshape(n, n)
    omegas = w0_axis + domega * np.arange(n)
    return PairSpectrum(omegas=omegas, omegas_prime=omegas.copy(), dp=dp,
                        omega0=omega0)


def write_jsa(path, jsa: JointSpectralAmplitude, params: dict):
    path = Path(path)
    n = len(jsa.omegas)
    with open(path, "wb") as fh:
        _write_header(fh, MAGIC_JSA, n, jsa.domega, param_hash(params))
        fh.write(struct.pack("<dd", float(jsa.omegas[0]), jsa.omega0))
        np.ascontiguousarray(jsa.values, dtype="<c16").tofile(fh)


def read_jsa(path, params: dict) -> JointSpectralAmplitude:
    path = Path(path)
    with open(path, "rb") as fh:
        n, domega, phash = _read_header(fh, MAGIC_JSA, path)
        if phash != param_hash(params):
            raise CacheMismatch(f"{path}: parameter hash mismatch")
        w0_axis, omega0 = struct.unpack("<dd", fh.read(16))
        values = _read_payload(fh, n * n, "<c16", path).reshape(n, n)
    omegas = w0_axis + domega * np.arange(n)
    return JointSpectralAmplitude(omegas=omegas, values=values, omega0=omega0)


# CSV exports: fixed %.17g formatting so outputs are bit-identical between
# runs of the same configuration.

def _write_csv(path, header: str, columns):
    path = Path(path)
    rows = np.column_stack(columns)
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def write_dipole_csv(path, record: DipoleRecord):
    _write_csv(path, "t_au,dipole_au,norm_loss",
               (record.times, record.dipole, record.norm_loss))


def write_hhg_csv(path, spec: HhgSpectrum):
    _write_csv(path, "omega_au,harmonic,energy_ev,dp_domega",
               (spec.omegas, spec.harmonics, spec.energies_ev,
                spec.dp_domega))


def write_pair_csv(path, spec: PairSpectrum, stride: int = 1):
    """Long-format (omega, omega', value) table, optionally strided."""
    w = spec.omegas[::stride]
    dp = spec.dp[::stride, ::stride]
    ww, wwp = np.meshgrid(w, w, indexing="ij")
    _write_csv(path, "omega_au,omega_prime_au,dp",
               (ww.ravel(), wwp.ravel(), dp.ravel()))


def write_angular_csv(path, yield_map):
    th, om = np.meshgrid(yield_map.thetas, yield_map.omegas, indexing="ij")
    _write_csv(path, "omega_ev,theta_mrad,dn",
               ((om * 27.211386245988).ravel(), (th * 1e3).ravel(),
                yield_map.dn_domega_dtheta.ravel()))


def write_hom_csv(path, curve):
    _write_csv(path, "delay_as,coincidence",
               (curve.delays_as, curve.coincidence))


def write_schmidt_csv(path, report, n_max: int = 64):
    lam = report.coefficients[:n_max]
    _write_csv(path, "mode_index,lambda",
               (np.arange(len(lam), dtype=float), lam))


def write_herald_csv(path, times, intensity):
    _write_csv(path, "t_au,intensity", (times, intensity))


def file_checksum(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, config_hash: str, version: str, entries: dict):
    """entries: name -> {path, cached: bool}; checksums added here."""
    manifest = {
        "config_hash": config_hash,
        "code_version": version,
        "artifacts": {},
    }
    for name, info in entries.items():
        p = Path(info["path"])
        manifest["artifacts"][name] = {
            "path": p.name,
            "sha256": file_checksum(p),
            "cached": bool(info.get("cached", False)),
        }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
