"""Figure rendering for scenario and evaluation reports.

Every report directory gets PNG figures next to its CSV output.  The
renderers only consume data already written to the report, keep a fixed
style, and pin the PNG metadata so repeated runs produce identical
bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

PNG_METADATA = {"Software": "polka-te"}
FIGSIZE = (8.0, 4.5)
DPI = 120


def _save(fig, path: Path) -> Path:
    fig.savefig(path, dpi=DPI, metadata=PNG_METADATA)
    plt.close(fig)
    return path


def _sorted_flow_keys(series: dict, suffix: str) -> "list[str]":
    keys = [k for k in series if k.startswith("flow:") and k.endswith(suffix)]
    return sorted(keys, key=lambda k: int(k.split(":")[1]))


def scenario_figures(series: "dict[str, list[tuple[float, float]]]",
                     out_dir: Path) -> "list[Path]":
    """Per-flow throughput (with the aggregate) and per-flow latency."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    throughput_keys = _sorted_flow_keys(series, ":throughput")
    if throughput_keys:
        fig, ax = plt.subplots(figsize=FIGSIZE)
        times = [t for t, _ in series[throughput_keys[0]]]
        total = [0.0] * len(times)
        for key in throughput_keys:
            values = [v for _, v in series[key]]
            ax.plot(times, values, label=key.split(":")[0] + " " + key.split(":")[1])
            total = [a + b for a, b in zip(total, values)]
        ax.plot(times, total, "k--", label="aggregate")
        ax.set_xlabel("time (s)")
        ax.set_ylabel("throughput (Mbps)")
        ax.set_ylim(bottom=0)
        ax.legend(loc="upper left")
        ax.grid(True, alpha=0.3)
        written.append(_save(fig, out_dir / "throughput.png"))

    latency_keys = _sorted_flow_keys(series, ":latency")
    if latency_keys:
        fig, ax = plt.subplots(figsize=FIGSIZE)
        for key in latency_keys:
            ax.plot([t for t, _ in series[key]], [v for _, v in series[key]],
                    label="flow " + key.split(":")[1])
        ax.set_xlabel("time (s)")
        ax.set_ylabel("path latency (ms)")
        ax.set_ylim(bottom=0)
        ax.legend(loc="upper right")
        ax.grid(True, alpha=0.3)
        written.append(_save(fig, out_dir / "latency.png"))

    return written


def eval_figures(report, out_dir: Path) -> "list[Path]":
    """RMSE scatter over the two paths plus observed-vs-predicted views."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    table = report.rmse_table()
    path_keys = [pe.series_key for pe in report.paths]
    if len(path_keys) == 2:
        fig, ax = plt.subplots(figsize=(5.5, 5.5))
        for kind in sorted(table):
            x = table[kind][path_keys[0]]
            y = table[kind][path_keys[1]]
            marker = "*" if kind == report.chosen_model else "o"
            ax.scatter([x], [y], marker=marker, s=90)
            ax.annotate(kind, (x, y), textcoords="offset points", xytext=(6, 4),
                        fontsize=8)
        ax.set_xlabel(f"RMSE {path_keys[0]} (Mbps)")
        ax.set_ylabel(f"RMSE {path_keys[1]} (Mbps)")
        ax.set_xlim(left=0)
        ax.set_ylim(bottom=0)
        ax.grid(True, alpha=0.3)
        written.append(_save(fig, out_dir / "rmse_scatter.png"))

    for pe in report.paths:
        fig, ax = plt.subplots(figsize=FIGSIZE)
        idx = range(len(pe.observed))
        ax.plot(idx, pe.observed, label="observed")
        ax.plot(idx, pe.predictions[report.chosen_model],
                label=f"predicted ({report.chosen_model})")
        ax.set_xlabel("test sample")
        ax.set_ylabel("bandwidth (Mbps)")
        ax.legend(loc="best")
        ax.grid(True, alpha=0.3)
        written.append(_save(fig, out_dir / f"forecast_{pe.series_key}.png"))

    return written
