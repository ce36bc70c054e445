"""Optional figure rendering for sweep results (matplotlib, file output only)."""
from __future__ import annotations

from pathlib import Path
from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

SERIES = {
    "nlc": ("nlc_expected_bps", "NLC"),
    "llc": ("llc_expected_bps", "LLC"),
}

AXIS_LABELS = {
    "D": "primary data volume D (Mbit)",
    "r_PCR": "PU-related link rate (Mbps)",
    "r_CR": "CR link rate (Mbps)",
    "T_common": "session length T (s)",
    "alpha": "incentive parameter alpha",
    "rho": "PU activity probability rho",
    "budget": "MIS budget per search",
}
SCALE = {"D": 1e-6, "r_PCR": 1e-6, "r_CR": 1e-6}


def render_sweep(rows: Sequence[Dict], path: Path | str, title: Optional[str] = None) -> Path:
    """Line plot of throughput (and completion time when present) against the swept value."""
    rows = [r for r in rows if r.get("status") == "ok"]
    if not rows:
        raise ValueError("no successful rows to plot")
    var = rows[0]["sweep"]
    xs = [r["value"] * SCALE.get(var, 1.0) for r in rows]
    comp_cols = sorted({k for r in rows for k in r if "completion_s[" in k})
    ncols = 2 if comp_cols else 1
    fig, axes = plt.subplots(1, ncols, figsize=(5.5 * ncols, 4), squeeze=False)
    ax = axes[0][0]
    for col, name in SERIES.values():
        if col in rows[0]:
            ax.plot(xs, [r[col] / 1e6 for r in rows], marker="o", label=name)
    ax.set_xlabel(AXIS_LABELS.get(var, var))
    ax.set_ylabel("throughput (Mbps)")
    ax.grid(alpha=0.3)
    ax.legend()
    if comp_cols:
        ax2 = axes[0][1]
        for col in comp_cols:
            ys = [r.get(col) for r in rows]
            if all(isinstance(y, float) for y in ys):
                ax2.plot(xs, ys, marker=".", label=col.replace("_completion_s", ""))
        ax2.set_xlabel(AXIS_LABELS.get(var, var))
        ax2.set_ylabel("completion time (s)")
        ax2.grid(alpha=0.3)
        ax2.legend(fontsize="small")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
