"""Report figures written next to the CSV outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_frames(result, path, title: str = "") -> Path:
    """Per-frame timings and counter operations for one replay."""
    path = Path(path)
    frames = result.frames
    idx = np.arange(len(frames))
    fig, (ax_t, ax_n) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    ax_t.plot(idx, [f.t_update * 1e3 for f in frames], label="update")
    ax_t.plot(idx, [f.t_inflate * 1e3 for f in frames], label="inflate")
    ax_t.plot(idx, [f.t_tot * 1e3 for f in frames], label="total", lw=0.8, color="k")
    ax_t.set_ylabel("ms")
    ax_t.legend(loc="upper right", fontsize="small")
    ax_n.plot(idx, [f.n_inf for f in frames], color="C3")
    ax_n.set_ylabel("n_inf")
    ax_n.set_xlabel("frame")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_bench(summaries, path) -> Path:
    """Bar chart of mean per-frame metrics, averaged over repetitions per backend."""
    path = Path(path)
    names = list(dict.fromkeys(s.backend for s in summaries))
    cols = [("t_tot", 1e3, "t_tot [ms]"), ("t_inflate", 1e3, "t_inf [ms]"),
            ("n_inf", 1.0, "n_inf"), ("mem_bytes", 1e-6, "m [MB]")]
    fig, axes = plt.subplots(1, len(cols), figsize=(3 * len(cols), 3.2))
    for ax, (attr, scale, label) in zip(axes, cols):
        vals = [np.mean([getattr(s, attr) for s in summaries if s.backend == n]) * scale for n in names]
        ax.bar(range(len(names)), vals, color=[f"C{i}" for i in range(len(names))])
        ax.set_xticks(range(len(names)), names, rotation=30, ha="right", fontsize="small")
        ax.set_title(label, fontsize="medium")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
