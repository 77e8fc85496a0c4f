"""Figures rendered next to the CSV outputs.

Agg backend only, and PNG metadata is stripped so that identical data give
identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .delta_star import DeltaStarProfile, curve  # noqa: E402
from .grid import BiasField  # noqa: E402

_RC = {
    "figure.figsize": (5.0, 4.0),
    "figure.dpi": 100,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}
_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def _extent(field: BiasField):
    d, r = field.deltas, field.rmaxes
    return [r[0], r[-1], d[0], d[-1]]


def region_map(field: BiasField, path: Path, title: str = "") -> Path:
    """URR (one real root) against NURR (three real roots) over the lattice."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        cmap = matplotlib.colors.ListedColormap(["#d95f02", "#1b9e77"])
        ax.imshow(field.urr.astype(float), origin="lower", aspect="auto",
                  extent=_extent(field), cmap=cmap, vmin=0, vmax=1, interpolation="nearest")
        if not field.in_box.all():
            rows = np.flatnonzero(field.in_box.any(axis=1))
            for k in (rows[0], rows[-1]):
                ax.axhline(field.deltas[k], color="k", lw=0.8, ls="--")
        handles = [matplotlib.patches.Patch(color="#1b9e77", label="URR"),
                   matplotlib.patches.Patch(color="#d95f02", label="NURR")]
        ax.legend(handles=handles, loc="upper right", frameon=False)
        ax.set_xlabel(r"$R_{max}$")
        ax.set_ylabel(r"$\delta$")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def bias_contour(field: BiasField, path: Path, title: str = "") -> Path:
    """Filled contours of the selected bias."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        R, D = np.meshgrid(field.rmaxes, field.deltas)
        z = field.selected
        if np.nanmax(z) - np.nanmin(z) > 0:
            cs = ax.contourf(R, D, z, levels=12, cmap="viridis")
            fig.colorbar(cs, ax=ax, label=r"bias $\nu$")
        else:
            ax.text(0.5, 0.5, f"constant bias {float(z.flat[0]):.3g}", transform=ax.transAxes, ha="center")
        ax.set_xlabel(r"$R_{max}$")
        ax.set_ylabel(r"$\delta$")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def delta_star_curve(prof: DeltaStarProfile, path: Path, marks=()) -> Path:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        xs, ys = curve(prof)
        ax.plot(xs, ys, color="k", lw=1.2)
        if prof.r_star is not None and prof.discontinuity_in_domain:
            ax.axvline(prof.r_star, color="r", lw=0.8, ls=":")
        for rm, ds in marks:
            if ds is not None:
                ax.plot([rm], [ds], "o", color="#1b9e77", ms=4)
        finite = ys[np.isfinite(ys)]
        if finite.size:
            lo, hi = np.percentile(finite, [2, 98])
            pad = 0.1 * (hi - lo) or 1.0
            ax.set_ylim(lo - pad, hi + pad)
        ax.set_xlabel(r"$R_{max}$")
        ax.set_ylabel(r"$\delta^*$")
        ax.set_title(f"slope: {prof.slope.value}")
        fig.tight_layout()
        return _save(fig, path)
