"""Optional figures for CLI reports. Needs the ``plot`` extra (matplotlib)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .errors import ParameterError


def _pyplot():
    try:
        import matplotlib
    except ImportError:
        raise ParameterError("figures need matplotlib: pip install 'twsum[plot]'") from None
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    # fixed metadata keeps PNG bytes stable across runs
    fig.savefig(path, dpi=100, metadata={"Software": None} if path.suffix == ".png" else None)
    return path


def hash_stats_figure(rows: Sequence[dict], path: str | Path) -> Path:
    """Mean max load (and bound, where it is a load bound) against |S|, one line per family."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    families = sorted({r["family"] for r in rows})
    for fam in families:
        pts = [r for r in rows if r["family"] == fam and r["mean_max_load"] != ""]
        if not pts:
            continue
        xs = [r["|S|"] for r in pts]
        line, = ax.plot(xs, [r["mean_max_load"] for r in pts], marker="o", label=fam)
        if fam in ("gf2", "concat"):
            ax.plot(xs, [r["bound"] for r in pts], ls="--", color=line.get_color(),
                    label=f"{fam} envelope")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("|S|")
    ax.set_ylabel("mean max load")
    if ax.lines:
        ax.legend()
    fig.tight_layout()
    out = _save(fig, path)
    plt.close(fig)
    return out


def trial_figure(labels: Sequence[str], completeness: Sequence[float | None],
                 false_positive: Sequence[float | None], path: str | Path) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    xs = range(len(labels))
    ax.bar([x - 0.2 for x in xs], [c or 0.0 for c in completeness], width=0.4,
           label="completeness")
    ax.bar([x + 0.2 for x in xs], [f or 0.0 for f in false_positive], width=0.4,
           label="false-positive rate")
    ax.set_xticks(list(xs), labels, rotation=15, fontsize=7)
    ax.set_ylim(0, 1.05)
    ax.legend()
    fig.tight_layout()
    out = _save(fig, path)
    plt.close(fig)
    return out
