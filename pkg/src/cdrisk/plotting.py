"""Static figure rendering for report outputs.

Risk maps draw one circle per antenna, area proportional to the resident
population and color on a yellow-to-red ramp over the vulnerable
fraction, mirroring the GeoJSON styling.  Figures are written next to the
delimited artifacts; PNG metadata is pinned so repeated runs produce the
same bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import LinearSegmentedColormap, Normalize

from .classify import midrank_auc, roc_points
from .riskmap import RiskMap

VULNERABILITY_CMAP = LinearSegmentedColormap.from_list("vulnerability", ["#FFFF00", "#FF0000"])
PNG_METADATA = {"Software": "cdrisk"}
MAX_MARKER_PT2 = 320.0


def render_risk_map(risk: RiskMap, path: str | Path, zone_coords: list[tuple[float, float]] | None = None) -> None:
    """Render a risk map to an image file.

    ``zone_coords`` optionally marks the endemic antennas as crosses
    (lon, lat pairs) for orientation.
    """
    stats = sorted(risk.stats, key=lambda s: s.antenna_id)
    fig, ax = plt.subplots(figsize=(8.0, 7.0))
    if stats:
        lons = np.array([s.lon for s in stats])
        lats = np.array([s.lat for s in stats])
        pops = np.array([s.residents for s in stats], dtype=float)
        fracs = np.array([s.frac_vulnerable for s in stats])
        scale = MAX_MARKER_PT2 / pops.max() if pops.max() > 0 else 1.0
        sc = ax.scatter(
            lons,
            lats,
            s=np.maximum(pops * scale, 4.0),
            c=fracs,
            cmap=VULNERABILITY_CMAP,
            norm=Normalize(vmin=0.0, vmax=risk.color_max, clip=True),
            edgecolors="black",
            linewidths=0.4,
            alpha=0.85,
            zorder=3,
        )
        fig.colorbar(sc, ax=ax, label="vulnerable fraction")
    if zone_coords:
        zlons = [c[0] for c in zone_coords]
        zlats = [c[1] for c in zone_coords]
        ax.scatter(zlons, zlats, marker="x", c="black", s=18, linewidths=0.8,
                   label="endemic zone antenna", zorder=2)
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel("longitude")
    ax.set_ylabel("latitude")
    ax.set_title(
        f"{risk.zone_name}: vulnerable population by antenna\n"
        f"(beta={risk.beta:g}, min population={risk.min_population}, {len(stats)} antennas)"
    )
    ax.set_aspect("equal", adjustable="datalim")
    ax.grid(True, linewidth=0.3, alpha=0.5)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=PNG_METADATA)
    plt.close(fig)


def render_roc(y_true, scores, path: str | Path, title: str = "ROC") -> None:
    """Render the ROC curve for a scored test set."""
    fpr, tpr = roc_points(y_true, scores)
    auc = midrank_auc(y_true, scores)
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.plot(fpr, tpr, drawstyle="steps-post", color="#C02020", linewidth=1.5)
    ax.plot([0, 1], [0, 1], linestyle="--", color="gray", linewidth=0.8)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title(f"{title} (AUC = {auc:.4f})")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, linewidth=0.3, alpha=0.5)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=PNG_METADATA)
    plt.close(fig)
