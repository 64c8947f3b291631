"""Rendered matplotlib figures for the report paths (headless Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .fields import VectorField  # noqa: E402
from .metrics import ErrorReport  # noqa: E402

__all__ = ["render_field_panels", "render_ablation_chart"]

# no version stamp in the PNG text chunks: outputs must be byte-stable
_PNG_META = {"Software": None}
_DPI = 110


def render_field_panels(path: str, u: VectorField, report: ErrorReport | None = None,
                        title: str = "displacement") -> None:
    """Component maps side by side, plus absolute error maps when a report is given."""
    cols = 2 if report is None else 4
    fig, axes = plt.subplots(1, cols, figsize=(3.4 * cols, 3.2), constrained_layout=True)
    panels = [(u.u1, "u1 (lateral, px)"), (u.u2, "u2 (axial, px)")]
    if report is not None:
        panels += [(report.abs_u1.values, "|u1 error| (px)"),
                   (report.abs_u2.values, "|u2 error| (px)")]
    for ax, (vals, label) in zip(axes, panels):
        im = ax.imshow(vals, cmap="viridis", interpolation="nearest")
        ax.set_title(label, fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
        fig.colorbar(im, ax=ax, fraction=0.046)
    fig.suptitle(title, fontsize=10)
    fig.savefig(path, dpi=_DPI, metadata=_PNG_META)
    plt.close(fig)


def render_ablation_chart(path: str, labels: list[str], e_rel_u: list[float]) -> None:
    """Bar chart of whole-field relative errors across the ablation runs."""
    fig, ax = plt.subplots(figsize=(5.4, 3.4), constrained_layout=True)
    xs = range(len(labels))
    ax.bar(xs, e_rel_u, color="#3b6ea5")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, fontsize=9)
    ax.set_ylabel("relative error e_rel(u) [%]")
    for x, v in zip(xs, e_rel_u):
        ax.text(x, v, f"{v:.2f}", ha="center", va="bottom", fontsize=8)
    fig.savefig(path, dpi=_DPI, metadata=_PNG_META)
    plt.close(fig)
