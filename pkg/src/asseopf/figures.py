"""Figure rendering for run and sweep reports (PNG files next to the CSVs)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_COLORS = {"MC": "tab:blue", "ASSE": "tab:red", "SPCE": "tab:green"}
_DPI = 150


def _color(method: str):
    return _COLORS.get(method)


def cdf_figure(path, response: str, reports) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for rep in reports:
        ax.plot(rep.cdf_x, rep.cdf_y, label=rep.method, color=_color(rep.method), lw=1.4)
    ax.set_xlabel(response)
    ax.set_ylabel("CDF")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def pdf_figure(path, response: str, reports) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for rep in reports:
        ax.plot(rep.pdf_x, rep.pdf_y, label=rep.method, color=_color(rep.method), lw=1.4)
    ax.set_xlabel(response)
    ax.set_ylabel("density")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def sweep_figure(path, response: str, rows) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    methods = sorted({r["method"] for r in rows if r["response"] == response})
    for method in methods:
        pts = [(r["n_ed"], r["e_val"]) for r in rows if r["response"] == response and r["method"] == method]
        pts.sort()
        ax.semilogy([p[0] for p in pts], [p[1] for p in pts], marker="o", ms=3,
                    label=method, color=_color(method), lw=1.2)
    ax.set_xlabel("training samples")
    ax.set_ylabel("validation error")
    ax.set_title(response)
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
