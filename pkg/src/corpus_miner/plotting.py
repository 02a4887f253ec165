"""Figure rendering for CLI report paths.

Every chart goes straight to a file next to the delimited output; no
interactive backend is ever required.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_time_series(series: dict[str, list[dict]], path: str | Path,
                     title: str = "", ylabel: str = "count") -> Path:
    """Line chart of one or more bucketed series ({label: rows})."""
    fig, ax = plt.subplots(figsize=(9, 4.5))
    for label, rows in series.items():
        ax.plot([r["bucket"] for r in rows], [r["value"] for r in rows],
                marker="o", markersize=3, linewidth=1.2, label=label)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    if series:
        ax.legend(fontsize=8)
    n_ticks = max(len(rows) for rows in series.values()) if series else 0
    if n_ticks > 12:
        step = max(1, n_ticks // 12)
        for i, tick in enumerate(ax.get_xticklabels()):
            tick.set_visible(i % step == 0)
    fig.autofmt_xdate(rotation=45)
    return _finish(fig, path)


def plot_volatility(series: dict[str, list[dict]], path: str | Path,
                    title: str = "context volatility") -> Path:
    fig, ax = plt.subplots(figsize=(9, 4.5))
    for term, rows in series.items():
        ax.plot([r["slice"] for r in rows], [r["volatility"] for r in rows],
                marker="s", markersize=3, linewidth=1.2, label=term)
    ax.set_ylim(-0.02, 1.02)
    ax.set_ylabel("volatility")
    ax.grid(True, alpha=0.3)
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.autofmt_xdate(rotation=45)
    return _finish(fig, path)


def plot_topic_map(payload: dict, path: str | Path) -> Path:
    """Topic scatter from an ldavis payload: MDS coords, size = share."""
    coords = payload["topic_coordinates"]
    proportions = payload["topic_proportions"]
    fig, ax = plt.subplots(figsize=(6, 6))
    xs = [c[0] for c in coords]
    ys = [c[1] for c in coords]
    sizes = [max(40.0, 4000.0 * p) for p in proportions]
    ax.scatter(xs, ys, s=sizes, alpha=0.5, edgecolors="black", linewidths=0.8)
    for i, (x, y) in enumerate(coords):
        ax.annotate(str(i), (x, y), ha="center", va="center", fontsize=9)
    ax.axhline(0, color="gray", linewidth=0.5)
    ax.axvline(0, color="gray", linewidth=0.5)
    ax.set_title("topic map (multidimensional scaling)")
    return _finish(fig, path)


def plot_pair_bars(pairs: list[dict], path: str | Path, top_n: int = 25,
                   title: str = "strongest co-occurrences") -> Path:
    rows = pairs[:top_n]
    fig, ax = plt.subplots(figsize=(8, max(3, 0.3 * len(rows))))
    labels = [f"{r['term_a']} + {r['term_b']}" for r in rows][::-1]
    values = [r["score"] for r in rows][::-1]
    ax.barh(labels, values)
    ax.set_xlabel("score")
    ax.set_title(title)
    return _finish(fig, path)
