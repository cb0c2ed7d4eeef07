import hashlib
import json

import numpy as np
import pytest

from sfpg_figures import (ChecksumMismatch, FigureRecipe, MissingInput,
                          PANELS, RunManifest, guide_line_offsets,
                          pump_omega0, render)
from sfpg_figures.cli import main

OMEGA0 = pump_omega0(800.0)


def _csv(path, header, columns):
    rows = np.column_stack(columns)
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def _sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture
def run_dir(tmp_path):
    """Synthetic pipeline output with stripes at known even harmonics."""
    w0 = OMEGA0

    # hhg.csv: odd-harmonic comb with a cutoff knee
    omegas = np.linspace(0.02, 3.5, 600)
    h = omegas / w0
    dp = 1e-8 + np.exp(-0.5 * ((h[:, None] - np.arange(3, 60, 2)[None, :])
                               / 0.1) ** 2).sum(axis=1) \
        * np.where(h <= 41, 1.0, 10.0 ** (-(h - 41) / 2))
    _csv(tmp_path / "hhg.csv", "omega_au,harmonic,energy_ev,dp_domega",
         (omegas, h, omegas * 27.211386245988, dp))

    # pair_spectrum.csv: even-q anti-diagonal stripes
    n = 160
    w = np.linspace(0.35, 1.45, n)
    s = np.add.outer(w, w)
    pair = np.zeros((n, n))
    for q in (18, 20, 22, 24):
        pair += np.exp(-0.5 * ((s - q * w0) / (0.04 * w0)) ** 2)
    ww, wwp = np.meshgrid(w, w, indexing="ij")
    _csv(tmp_path / "pair_spectrum.csv", "omega_au,omega_prime_au,dp",
         (ww.ravel(), wwp.ravel(), pair.ravel()))

    # angular_yield.csv
    thetas = np.linspace(0.1, 80.0, 60)  # mrad
    energies = np.linspace(12.0, 38.0, 50)  # eV
    th, om = np.meshgrid(thetas, energies, indexing="ij")
    dn = np.exp(-0.5 * ((th - 36.0) / 4.0) ** 2) \
        * np.exp(-0.5 * ((om - 31.0) / 3.0) ** 2)
    _csv(tmp_path / "angular_yield.csv", "omega_ev,theta_mrad,dn",
         (om.ravel(), th.ravel(), dn.ravel()))

    # sum_frequency.csv
    s_axis = np.linspace(15 * w0, 30 * w0, 300)
    prof = 1e-10 + sum(np.exp(-0.5 * ((s_axis - q * w0) / (0.05 * w0)) ** 2)
                       for q in (18, 20, 22, 24))
    _csv(tmp_path / "sum_frequency.csv", "omega_sum_au,harmonic,profile",
         (s_axis, s_axis / w0, prof))

    # degenerate_comb.csv
    qs = np.arange(16, 45, 2, dtype=float)
    comb = np.where(qs <= 40, 1.0, 1e-4)
    _csv(tmp_path / "degenerate_comb.csv", "q,theta_mrad,dn",
         (qs, np.full_like(qs, 36.0), comb))

    # jsa_abs.csv: reuse the pair stripes as a magnitude
    _csv(tmp_path / "jsa_abs.csv", "omega_au,omega_prime_au,abs_j",
         (ww.ravel(), wwp.ravel(), np.sqrt(pair).ravel()))

    # hom.csv
    delays = np.linspace(-4000, 4000, 401)
    coincidence = 0.5 * (1 - np.exp(-0.5 * (delays / 120.0) ** 2))
    _csv(tmp_path / "hom.csv", "delay_as,coincidence",
         (delays, coincidence))

    artifacts = {}
    for name in ("hhg", "pair_spectrum", "angular_yield", "sum_frequency",
                 "degenerate_comb", "jsa_abs", "hom"):
        p = tmp_path / f"{name}.csv"
        artifacts[name] = {"path": p.name, "sha256": _sha256(p),
                           "cached": False}
    manifest = {"config_hash": "deadbeef", "code_version": "0.1.0",
                "artifacts": artifacts}
    mpath = tmp_path / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return tmp_path


def test_all_panels_render(run_dir, tmp_path):
    for panel in PANELS:
        out = render(FigureRecipe(manifest=run_dir / "manifest.json",
                                  panel=panel,
                                  output=tmp_path / f"img_{panel}.png"))
        assert out.exists()
        assert out.stat().st_size > 1000


def test_guide_lines_land_on_stripes(run_dir):
    offsets = guide_line_offsets(run_dir / "manifest.json")
    present = {q: off for q, off in offsets.items() if q in (18, 20, 22, 24)}
    assert set(present) == {18, 20, 22, 24}
    assert all(off <= 2 for off in present.values())


def test_rendering_is_deterministic(run_dir, tmp_path):
    a = render(FigureRecipe(manifest=run_dir / "manifest.json",
                            panel="fig2b", output=tmp_path / "a.png"))
    b = render(FigureRecipe(manifest=run_dir / "manifest.json",
                            panel="fig2b", output=tmp_path / "b.png"))
    assert a.read_bytes() == b.read_bytes()


def test_rendering_is_read_only(run_dir, tmp_path):
    before = {p.name: _sha256(p) for p in run_dir.iterdir() if p.is_file()}
    render(FigureRecipe(manifest=run_dir / "manifest.json", panel="fig3d",
                        output=tmp_path / "imgs" / "img.png"))
    after = {p.name: _sha256(p) for p in run_dir.iterdir() if p.is_file()}
    assert before == after


def test_checksum_mismatch(run_dir, tmp_path):
    p = run_dir / "hhg.csv"
    p.write_text(p.read_text() + "# tampered\n")
    with pytest.raises(ChecksumMismatch):
        render(FigureRecipe(manifest=run_dir / "manifest.json",
                            panel="fig2a", output=tmp_path / "img.png"))


def test_missing_artifact(run_dir, tmp_path):
    (run_dir / "hom.csv").unlink()
    with pytest.raises(MissingInput):
        render(FigureRecipe(manifest=run_dir / "manifest.json",
                            panel="fig4c", output=tmp_path / "img.png"))


def test_artifact_not_in_manifest(run_dir):
    manifest = RunManifest(run_dir / "manifest.json")
    with pytest.raises(MissingInput, match="not in manifest"):
        manifest.artifact_path("nonexistent")


def test_missing_manifest():
    with pytest.raises(MissingInput):
        RunManifest("/no/such/manifest.json")


def test_hom_overlay(run_dir, tmp_path):
    out = render(FigureRecipe(
        manifest=run_dir / "manifest.json", panel="fig4c",
        output=tmp_path / "overlay.png",
        extra_manifests=(run_dir / "manifest.json",)))
    assert out.exists()


def test_cli_renders(run_dir, tmp_path):
    out = tmp_path / "cli.png"
    rc = main(["fig2a", "--manifest", str(run_dir / "manifest.json"),
               "--out", str(out)])
    assert rc == 0
    assert out.exists()


def test_cli_empty_selector_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code != 0


def test_cli_unknown_panel_usage_error(run_dir):
    with pytest.raises(SystemExit) as exc:
        main(["fig9z", "--manifest", str(run_dir / "manifest.json")])
    assert exc.value.code != 0


def test_cli_reports_missing_manifest(tmp_path):
    rc = main(["fig2a", "--manifest", str(tmp_path / "none.json")])
    assert rc == 1
