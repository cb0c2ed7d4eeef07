"""Panel renderers for the sfpg pipeline exports.

Each panel reads one or more CSV artifacts through the run manifest
(checksum-validated) and writes a deterministic PNG/SVG. Harmonic-order
guide lines are computed from the configured pump wavelength, never fitted
from the data, so a misplaced stripe exposes a simulation error rather than
being papered over.
"""

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import MissingInput  # noqa: E402
from .manifest import RunManifest  # noqa: E402

BOHR_M = 5.29177210903e-11
C_AU = 137.035999084

PANELS = ("fig2a", "fig2b", "fig3b", "fig3c", "fig3d", "fig4b", "fig4c")

_CMAP = "viridis"
_FLOOR_DECADES = 12  # log-map dynamic range below the maximum


def pump_omega0(wavelength_nm: float) -> float:
    """Pump angular frequency in atomic units."""
    lam_au = wavelength_nm * 1e-9 / BOHR_M
    return 2.0 * np.pi * C_AU / lam_au


@dataclass(frozen=True)
class FigureRecipe:
    manifest: Path
    panel: str
    output: Path
    wavelength_nm: float = 800.0
    extra_manifests: tuple = field(default_factory=tuple)
    dpi: int = 150

    @property
    def omega0(self) -> float:
        return pump_omega0(self.wavelength_nm)


def _square_from_long(table):
    """(omega, omega', value) rows in row-major order back to a 2D grid."""
    n = int(round(np.sqrt(table.shape[0])))
    if n * n != table.shape[0]:
        raise MissingInput("pair table is not a square grid")
    omegas = table[:n, 1]  # the fast axis of the meshgrid
    values = table[:, 2].reshape(n, n)
    return omegas, values


def _log_map(ax, x, y, values, label):
    peak = values.max()
    floor = peak * 10.0 ** (-_FLOOR_DECADES) if peak > 0 else 1e-300
    img = ax.pcolormesh(x, y, np.log10(np.maximum(values, floor)).T,
                        cmap=_CMAP, shading="auto", rasterized=True)
    plt.colorbar(img, ax=ax, label=label)


def _even_q_antidiagonals(ax, h_lo, h_hi):
    for q in range(2 * int(np.ceil(h_lo)), 2 * int(h_hi) + 1, 2):
        if not 2 * h_lo <= q <= 2 * h_hi:
            continue
        ax.plot([max(h_lo, q - h_hi), min(h_hi, q - h_lo)],
                [min(h_hi, q - h_lo), max(h_lo, q - h_hi)],
                color="white", lw=0.5, ls="--", alpha=0.6)


def _render_fig2a(ax, run: RunManifest, recipe: FigureRecipe):
    table = run.load_csv("hhg")
    harmonic, dp = table[:, 1], table[:, 3]
    ax.semilogy(harmonic, np.maximum(dp, dp.max() * 1e-16), color="C0",
                lw=0.8)
    ax.set_xlim(0, min(harmonic.max(), 80))
    ax.set_xlabel("harmonic order $\\omega/\\omega_0$")
    ax.set_ylabel("$dP/d\\omega$ (arb. u.)")
    ax.set_title("single-atom HHG spectrum")


def _render_fig2b(ax, run: RunManifest, recipe: FigureRecipe):
    omegas, dp = _square_from_long(run.load_csv("pair_spectrum"))
    h = omegas / recipe.omega0
    _log_map(ax, h, h, dp, "$\\log_{10} d^2P/d\\omega\\,d\\omega'$")
    _even_q_antidiagonals(ax, h[0], h[-1])
    ax.set_xlabel("$\\omega/\\omega_0$")
    ax.set_ylabel("$\\omega'/\\omega_0$")
    ax.set_title("pair spectrum with even-$q$ guides")


def _render_fig3b(ax, run: RunManifest, recipe: FigureRecipe):
    table = run.load_csv("angular_yield")
    energies = np.unique(table[:, 0])
    thetas = np.unique(table[:, 1])
    dn = table[:, 2].reshape(len(thetas), len(energies))
    peak = dn.max()
    floor = peak * 1e-8 if peak > 0 else 1e-300
    img = ax.pcolormesh(energies, thetas,
                        np.log10(np.maximum(dn, floor)), cmap=_CMAP,
                        shading="auto", rasterized=True)
    plt.colorbar(img, ax=ax, label="$\\log_{10} dN/d\\omega\\,d\\theta$")
    # degenerate-photon energies q w0 / 2 for even q, from the config value
    ev = recipe.omega0 * 27.211386245988
    for q in range(2, int(2 * energies.max() / ev) + 1, 2):
        e_q = q * ev / 2.0
        if energies[0] <= e_q <= energies[-1]:
            ax.axvline(e_q, color="white", lw=0.5, ls="--", alpha=0.5)
    ax.set_xlabel("photon energy (eV)")
    ax.set_ylabel("emission angle (mrad)")
    ax.set_title("angular ring structure")


def _render_fig3c(ax, run: RunManifest, recipe: FigureRecipe):
    table = run.load_csv("sum_frequency")
    harmonic, profile = table[:, 1], table[:, 2]
    ax.semilogy(harmonic, np.maximum(profile, profile.max() * 1e-16),
                color="C0", lw=0.8)
    for q in range(2 * int(np.ceil(harmonic[0] / 2)),
                   int(harmonic[-1]) + 1, 2):
        ax.axvline(q, color="0.7", lw=0.5, ls="--")
    ax.set_xlabel("sum frequency $(\\omega+\\omega')/\\omega_0$")
    ax.set_ylabel("integrated intensity (arb. u.)")
    ax.set_title("sum-frequency comb")


def _render_fig3d(ax, run: RunManifest, recipe: FigureRecipe):
    table = run.load_csv("degenerate_comb")
    qs, dn = table[:, 0], table[:, 2]
    positive = dn > 0
    ax.semilogy(qs[positive], dn[positive], "o-", color="C0", ms=4, lw=0.8)
    ax.set_xlabel("harmonic order $q$")
    ax.set_ylabel("$dN/d\\omega\\,d\\theta$ at $\\theta_0$")
    ax.set_title("degenerate pair comb")


def _render_fig4b(ax, run: RunManifest, recipe: FigureRecipe):
    omegas, absj = _square_from_long(run.load_csv("jsa_abs"))
    h = omegas / recipe.omega0
    img = ax.pcolormesh(h, h, absj.T, cmap=_CMAP, shading="auto",
                        rasterized=True)
    plt.colorbar(img, ax=ax, label="$|J(\\omega,\\omega')|$")
    for q in range(2 * int(np.ceil(h[0])), 2 * int(h[-1]) + 1, 2):
        ax.plot([max(h[0], q - h[-1]), min(h[-1], q - h[0])],
                [min(h[-1], q - h[0]), max(h[0], q - h[-1])],
                color="white", lw=0.5, ls="--", alpha=0.6)
    ax.set_xlabel("$\\omega/\\omega_0$")
    ax.set_ylabel("$\\omega'/\\omega_0$")
    ax.set_title("joint spectral amplitude")


def _render_fig4c(ax, run: RunManifest, recipe: FigureRecipe):
    runs = [run] + [RunManifest(p) for p in recipe.extra_manifests]
    for i, r in enumerate(runs):
        table = r.load_csv("hom")
        ax.plot(table[:, 0], table[:, 1], lw=0.9, color=f"C{i}",
                label=r.base_dir.name)
    ax.axhline(0.5, color="0.6", lw=0.6, ls=":")
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("delay (as)")
    ax.set_ylabel("coincidence probability")
    ax.set_title("Hong-Ou-Mandel interference")
    ax.legend(fontsize=7)


_RENDERERS = {
    "fig2a": _render_fig2a,
    "fig2b": _render_fig2b,
    "fig3b": _render_fig3b,
    "fig3c": _render_fig3c,
    "fig3d": _render_fig3d,
    "fig4b": _render_fig4b,
    "fig4c": _render_fig4c,
}


def render(recipe: FigureRecipe) -> Path:
    """Render one panel to the recipe's output path and return it."""
    if recipe.panel not in _RENDERERS:
        raise MissingInput(f"unknown panel {recipe.panel!r}; "
                           f"choose from {PANELS}")
    run = RunManifest(recipe.manifest)
    fig, ax = plt.subplots(figsize=(4.2, 3.4), constrained_layout=True)
    try:
        _RENDERERS[recipe.panel](ax, run, recipe)
        out = Path(recipe.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, dpi=recipe.dpi, metadata={"Software": "sfpg-render"})
    finally:
        plt.close(fig)
    return out


def guide_line_offsets(manifest_path, wavelength_nm: float = 800.0) -> dict:
    """Bins between each even-q guide line and the nearest data maximum.

    Collapses the pair spectrum onto the sum-frequency axis and, for every
    even harmonic inside the band, measures how far (in axis bins) the local
    intensity maximum sits from the predicted q * omega0 line. Used by the
    automated guide-line acceptance check.
    """
    run = RunManifest(manifest_path)
    omegas, dp = _square_from_long(run.load_csv("pair_spectrum"))
    omega0 = pump_omega0(wavelength_nm)
    n = len(omegas)
    dw = omegas[1] - omegas[0]
    s_axis = 2 * omegas[0] + dw * np.arange(2 * n - 1)
    profile = np.zeros(2 * n - 1)
    for k in range(2 * n - 1):
        profile[k] = np.trace(dp[:, ::-1], offset=n - 1 - k)
    offsets = {}
    for q in range(2 * int(np.ceil(s_axis[0] / (2 * omega0))),
                   int(s_axis[-1] / omega0) + 1, 2):
        target = q * omega0
        window = np.abs(s_axis - target) <= 0.5 * omega0
        if not np.any(window):
            continue
        idx = np.where(window)[0]
        local = idx[np.argmax(profile[idx])]
        nearest = int(np.argmin(np.abs(s_axis - target)))
        offsets[q] = abs(local - nearest)
    return offsets
