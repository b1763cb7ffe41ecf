"""Figure rendering: pure passthrough of CSV values onto log-eps axes.

Output files are vector (SVG/PDF by extension) and byte-deterministic for
fixed input bytes: the SVG hash salt is pinned and date metadata dropped.
"""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .io import CurveFile, SchemaError, SweepFile

__all__ = ["plot_fig1", "plot_sweep", "FIG1_CURVES"]

matplotlib.rcParams["svg.hashsalt"] = "photonkey-plots"

FIG1_CURVES = ("quantum", "coh_z_exact", "coh_ppm")

LN2 = math.log(2.0)

_CURVE_STYLE = {
    "quantum": dict(color="black", linestyle="-"),
    "coh_z_exact": dict(color="tab:blue", linestyle="--"),
    "coh_ppm": dict(color="tab:red", linestyle="-."),
}


def _save(fig, out_path: str | Path) -> None:
    fig.savefig(out_path, metadata={"Date": None})
    plt.close(fig)


def _unit(bits: bool) -> tuple[str, float]:
    return ("bits/photon", 1.0 / LN2) if bits else ("nats/photon", 1.0)


def plot_fig1(curve_csv: str | Path, out_image: str | Path, bits: bool = False) -> dict:
    """Render the three-curve efficiency comparison at eta = 1.

    Raises SchemaError when any of the required curves is missing.  Returns
    the plotted series per curve (after the optional nats->bits scaling
    only) so callers can verify the passthrough.
    """
    data = CurveFile.load(curve_csv)
    unit, scale = _unit(bits)
    series: dict[str, tuple[list[float], list[float]]] = {}
    for curve in FIG1_CURVES:
        eps, values = data.series(curve, eta=1.0)
        if not eps:
            raise SchemaError(f"{curve_csv}: curve {curve!r} at eta=1 is missing")
        series[curve] = (eps, [v * scale for v in values])

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for curve in FIG1_CURVES:
        eps, values = series[curve]
        ax.plot(eps, values, label=curve, **_CURVE_STYLE[curve])
    ax.set_xscale("log")
    ax.set_xlabel("mean photon number per use")
    ax.set_ylabel(f"photon efficiency ({unit})")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, out_image)
    return series


def plot_sweep(sweep_csv: str | Path, out_image: str | Path, bits: bool = False) -> dict:
    """Render empirical efficiencies with CI bars against analytic references.

    Missing CI values plot as bare points; exact/asymptote columns draw as
    reference lines per scheme.
    """
    data = SweepFile.load(sweep_csv)
    unit, scale = _unit(bits)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    plotted: dict[str, dict[str, list[float]]] = {}
    for i, scheme in enumerate(data.schemes()):
        rows = sorted(
            (r for r in data.rows if r["scheme"] == scheme), key=lambda r: r["eps"]
        )
        eps = [float(r["eps"]) for r in rows]
        emp = [float(r["empirical_nats"]) * scale for r in rows]
        ci = [float(r["empirical_ci95_nats"]) * scale for r in rows]
        exact = [float(r["exact_nats"]) * scale for r in rows]
        asym = [float(r["asymptote_nats"]) * scale for r in rows]
        color = f"C{i}"
        has_ci = all(not math.isnan(c) for c in ci)
        if has_ci:
            ax.errorbar(eps, emp, yerr=ci, fmt="o", color=color, label=f"{scheme} empirical")
        else:
            ax.plot(eps, emp, "o", color=color, label=f"{scheme} empirical")
        if all(not math.isnan(v) for v in exact):
            ax.plot(eps, exact, "-", color=color, alpha=0.7, label=f"{scheme} exact")
        if all(not math.isnan(v) for v in asym):
            ax.plot(eps, asym, ":", color=color, alpha=0.7, label=f"{scheme} asymptote")
        plotted[scheme] = {"eps": eps, "empirical": emp, "exact": exact, "asymptote": asym}
    ax.set_xscale("log")
    ax.set_xlabel("mean photon number per use")
    ax.set_ylabel(f"photon efficiency ({unit})")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, out_image)
    return plotted
