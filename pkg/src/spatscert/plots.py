"""Figure rendering for datasets, reconstructions, scans, and certificates.

All functions write a file and return nothing; the Agg backend keeps them
usable in headless runs.  They take plain data so the analysis modules stay
import-independent of matplotlib.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

_LABEL_COLORS = {
    "detected-by-baselines": "#d9e8f5",
    "detected-only-by-phase-space-inequality": "#e06c00",
    "undetected": "#555555",
}


def save_sample_plot(ds, dist, path) -> None:
    """Sampled quadrature histogram against the analytic density."""
    from .homodyne import quad_pdf

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(ds.x, bins=128, density=True, alpha=0.6, label="samples")
    grid = np.linspace(-ds.x_max, ds.x_max, 600)
    ax.plot(grid, quad_pdf(dist, grid), "k-", lw=1.2, label="analytic pdf")
    ax.set_xlabel("quadrature x")
    ax.set_ylabel("density")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_distribution_plot(probs, path, truth=None, title=None) -> None:
    """Bar plot of a photon-number distribution, optionally against a truth."""
    probs = np.asarray(probs, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(np.arange(probs.size), probs, width=0.8, label="reconstruction")
    if truth is not None:
        truth = np.asarray(truth, dtype=float)
        ax.plot(np.arange(truth.size), truth, "k_", markersize=12, label="model")
        ax.legend(frameon=False)
    ax.set_xlabel("photon number n")
    ax.set_ylabel("p_n")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_region_map(rows, path) -> None:
    """Detection-region map over the (nbar, eta) plane from scan rows."""
    nbars = sorted({r.nbar for r in rows})
    etas = sorted({r.eta for r in rows})
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for label, color in _LABEL_COLORS.items():
        pts = [(r.nbar, r.eta) for r in rows if r.label == label]
        if pts:
            arr = np.asarray(pts)
            ax.scatter(arr[:, 0], arr[:, 1], s=14, marker="s", color=color, label=label)
    ax.set_xlabel("thermal mean photon number")
    ax.set_ylabel("efficiency")
    if len(nbars) > 1:
        ax.set_xlim(min(nbars), max(nbars))
    if len(etas) > 1:
        ax.set_ylim(min(etas), max(etas))
    ax.legend(frameon=False, fontsize=7, loc="upper right")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_threshold_plot(result, path) -> None:
    """Certifier value against efficiency with the bisected threshold marked."""
    scan = np.asarray(result.scan, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(scan[:, 0], scan[:, 1], "o-", ms=3)
    ax.axhline(0.0, color="k", lw=0.8)
    if result.eta is not None:
        ax.axvline(result.eta, color="r", ls="--", lw=1.0, label=f"eta = {result.eta:.4f}")
        ax.legend(frameon=False)
    ax.set_xlabel("efficiency")
    ax.set_ylabel(f"{result.kind.value} value")
    ax.set_title(f"nbar = {result.nbar} ({result.status})")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_certificate_plot(reports, path, profile=None) -> None:
    """Certifier values with k-sigma error bars; optional radial profiles.

    Args:
        reports: Sequence of CertificateReport.
        path: Output file.
        profile: Optional (r, wigner, husimi_bound) arrays giving W(r) and
            2 pi Q(r)^2 along the radial axis.
    """
    if profile is not None:
        fig, (ax0, ax) = plt.subplots(1, 2, figsize=(9, 4))
        r, w, q2 = profile
        ax0.plot(r, w, label="W")
        ax0.plot(r, q2, "--", label="2 pi Q^2")
        ax0.axhline(0.0, color="k", lw=0.8)
        ax0.set_xlabel("|alpha|")
        ax0.legend(frameon=False)
    else:
        fig, ax = plt.subplots(figsize=(6, 4))
    names = [rep.kind.value for rep in reports]
    values = [rep.value for rep in reports]
    errs = [rep.confidence_k * rep.sigma for rep in reports]
    colors = ["tab:red" if rep.detected else "tab:gray" for rep in reports]
    pos = np.arange(len(reports))
    ax.errorbar(pos, values, yerr=errs, fmt="none", ecolor="k", capsize=4)
    ax.scatter(pos, values, c=colors, zorder=3)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xticks(pos)
    ax.set_xticklabels(names, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("certifier value")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
