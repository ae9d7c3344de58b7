"""Figures written next to benchmark CSV output."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402


def plot_subpacketization(rows: list[dict], path: str | Path) -> Path:
    """Subpacketization L against N, one line per demand size, with N-1 for reference."""
    by_d: dict[int, dict[int, int]] = defaultdict(dict)
    for r in rows:
        by_d[int(r["D"])][int(r["N"])] = int(r["L"])
    fig, ax = plt.subplots(figsize=(6, 3.8))
    Ns = sorted({int(r["N"]) for r in rows})
    ax.plot(Ns, [n - 1 for n in Ns], "k--", lw=1, label="SPIR x D (N-1)")
    for D in sorted(by_d):
        pts = sorted(by_d[D].items())
        ax.plot([n for n, _ in pts], [l for _, l in pts], marker="o", ms=3, lw=1, label=f"D={D}")
    ax.set_xlabel("servers N")
    ax.set_ylabel("subpacketization L")
    ax.xaxis.set_major_locator(MaxNLocator(integer=True))
    ax.yaxis.set_major_locator(MaxNLocator(integer=True))
    ax.legend(fontsize=7, ncol=2, frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_round_time(rows: list[dict], path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.8))
    x = [int(r["M"]) * int(r["K"]) * int(r["L"]) for r in rows]
    y = [float(r["round_time_ms"]) for r in rows]
    ax.scatter(x, y, s=8)
    ax.set_xlabel("query bits per server (M*K*L)")
    ax.set_ylabel("mean round time [ms]")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path
