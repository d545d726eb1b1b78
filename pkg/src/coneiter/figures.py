"""Figure rendering for comparison tables.

SVG output is kept deterministic: a fixed hash salt for element ids and
no creation date in the metadata, so identical inputs produce identical
bytes. Text is rendered as paths, which keeps the files self-contained.
"""

from __future__ import annotations


def render_comparison_svg(table, path, title: str | None = None,
                          ylabel: str = "distance to reference") -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with plt.rc_context({"svg.hashsalt": "coneiter", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(7.0, 4.2))
        for label, col in table.columns.items():
            ns = [n for n, v in zip(table.n_values, col) if v is not None]
            vs = [v for v in col if v is not None]
            ax.plot(ns, vs, marker="o", markersize=3.5, linewidth=1.2, label=label)
        ax.set_xlabel("iteration n")
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.grid(alpha=0.3)
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
