"""Heatmap and metric-curve emission: CSV alongside vector (SVG) images.

Figures are a rendering of the CSVs, never the other way around; the CSV is
the authoritative artifact.  A sidecar legend JSON records the color scale so
related maps can share one scale.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "rootdiag"
import matplotlib.pyplot as plt
import numpy as np

from .errors import ConfigurationError
from .models import EvalRecord, FAMILIES


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_heatmap(
    values: np.ndarray,
    mask_ids: Optional[Sequence[int]],
    out_base: Path,
    title: str = "",
    vmin: Optional[float] = None,
    vmax: Optional[float] = None,
    cmap: str = "viridis",
    extent: Optional[tuple[float, float, float, float]] = None,
) -> list[Path]:
    """Write <out_base>.csv, <out_base>.svg and <out_base>.legend.json.

    `values` is an (n_alpha, n_beta) matrix; cells listed in `mask_ids`
    (flat row-major ids) render blank/white and are empty in the CSV.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ConfigurationError("heatmap values must be a 2-d matrix")
    n_i, n_j = values.shape
    masked = np.zeros(values.shape, dtype=bool)
    if mask_ids is not None:
        for flat in mask_ids:
            flat = int(flat)
            if not (0 <= flat < n_i * n_j):
                raise ConfigurationError(f"mask id {flat} outside grid")
            masked[flat // n_j, flat % n_j] = True

    shown = np.where(masked | ~np.isfinite(values), np.nan, values)
    finite = shown[np.isfinite(shown)]
    if vmin is None:
        vmin = float(finite.min()) if finite.size else 0.0
    if vmax is None:
        vmax = float(finite.max()) if finite.size else 1.0

    out_base = Path(out_base)
    out_base.parent.mkdir(parents=True, exist_ok=True)
    csv_path = out_base.with_suffix(".csv")
    with open(csv_path, "w") as fh:
        for i in range(n_i):
            fh.write(
                ",".join(
                    "" if not math.isfinite(shown[i, j]) else _fmt(shown[i, j])
                    for j in range(n_j)
                )
                + "\n"
            )

    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    cm = matplotlib.colormaps[cmap].copy()
    cm.set_bad("white")
    im = ax.imshow(
        np.ma.masked_invalid(shown).T,
        origin="lower",
        aspect="auto",
        cmap=cm,
        vmin=vmin,
        vmax=vmax,
        extent=extent,
        interpolation="nearest",
    )
    ax.set_xlabel("alpha")
    ax.set_ylabel("beta")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    svg_path = out_base.with_suffix(".svg")
    fig.savefig(svg_path, metadata={"Date": None})
    plt.close(fig)

    legend_path = Path(str(out_base) + ".legend.json")
    legend_path.write_text(
        json.dumps(
            {"vmin": vmin, "vmax": vmax, "cmap": cmap, "masked_cells": int(masked.sum())},
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    return [csv_path, svg_path, legend_path]


def emit_curves(
    records: Sequence[EvalRecord],
    t_min_marker: int,
    out_base: Path,
    title_prefix: str = "",
) -> list[Path]:
    """Per evaluation metric, a family-vs-horizon curve CSV and SVG.

    Curves are truncated at 3 * t_min_marker; the marker and its triple are
    drawn as dashed/dotted vertical lines.  The r2 panel is clipped below at
    -0.1 for readability (CSV keeps raw values).
    """
    if not records:
        raise ConfigurationError("no evaluation records to plot")
    out_base = Path(out_base)
    out_base.parent.mkdir(parents=True, exist_ok=True)
    cutoff = 3 * t_min_marker
    horizons = sorted({r.horizon for r in records if r.horizon <= cutoff})
    families = [f for f in FAMILIES if any(r.family == f for r in records)]
    table = {
        (r.family, r.horizon): r for r in records if r.horizon <= cutoff
    }

    written = []
    for metric in ("mae", "rmse", "r2"):
        csv_path = Path(f"{out_base}_{metric}.csv")
        with open(csv_path, "w") as fh:
            fh.write("T," + ",".join(families) + "\n")
            for T in horizons:
                row = [str(T)]
                for fam in families:
                    rec = table.get((fam, T))
                    row.append("" if rec is None else _fmt(getattr(rec, metric)))
                fh.write(",".join(row) + "\n")

        fig, ax = plt.subplots(figsize=(5.2, 3.8))
        for fam in families:
            ys = [getattr(table[(fam, T)], metric) for T in horizons if (fam, T) in table]
            xs = [T for T in horizons if (fam, T) in table]
            ax.plot(xs, ys, marker="o", markersize=3, label=fam)
        ax.axvline(t_min_marker, linestyle="--", color="gray")
        ax.axvline(cutoff, linestyle=":", color="gray")
        ax.set_xlabel("prefix length T")
        ax.set_ylabel(metric)
        if metric == "r2":
            lo, hi = ax.get_ylim()
            ax.set_ylim(max(lo, -0.1), min(hi, 1.05))
        if title_prefix:
            ax.set_title(f"{title_prefix} {metric} vs T")
        ax.legend(fontsize=8)
        fig.tight_layout()
        svg_path = Path(f"{out_base}_{metric}.svg")
        fig.savefig(svg_path, metadata={"Date": None})
        plt.close(fig)
        written += [csv_path, svg_path]
    return written
