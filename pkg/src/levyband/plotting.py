"""PNG rendering of estimates, bands, bandwidth profiles and coverage reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _finish(fig, ax, path, title=None):
    if title:
        ax.set_title(title, fontsize=10)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _gaps_to_nan(x, *ys):
    """Insert NaNs between disjoint intervals so lines are not drawn across gaps."""
    x = np.asarray(x, dtype=float)
    dx = np.diff(x)
    if dx.size == 0:
        return (x,) + tuple(np.asarray(y, float) for y in ys)
    cut = np.flatnonzero(dx > 2 * np.median(dx)) + 1
    xs = np.insert(x, cut, np.nan)
    return (xs,) + tuple(np.insert(np.asarray(y, float), cut, np.nan) for y in ys)


def plot_estimate(x, rho_hat, rho_true, path, title=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    xs, est, tru = _gaps_to_nan(x, rho_hat, rho_true)
    ax.plot(xs, tru, "k--", lw=1.2, label="true density")
    ax.plot(xs, est, color="C0", lw=1.5, label="estimate")
    ax.set_xlabel("x")
    ax.set_ylabel("Levy density")
    ax.legend(fontsize=8)
    return _finish(fig, ax, path, title)


def plot_band(band, rho_true, path, title=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    xs, lo, hi, est, tru = _gaps_to_nan(band.x, band.lower, band.upper, band.rho_hat, rho_true)
    ax.fill_between(xs, lo, hi, color="C0", alpha=0.25, label=f"{band.level:.0%} {band.method.upper()} band")
    ax.plot(xs, est, color="C0", lw=1.5, label="estimate")
    ax.plot(xs, tru, "k--", lw=1.2, label="true density")
    ax.set_xlabel("x")
    ax.set_ylabel("Levy density")
    ax.legend(fontsize=8)
    return _finish(fig, ax, path, title)


def plot_profile(h, d, selected_h, path, title=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(h, d, "o-", color="C0", ms=3)
    ax.axvline(selected_h, color="C3", ls=":", label=f"selected h = {selected_h:.4g}")
    ax.set_yscale("log")
    ax.set_xlabel("h")
    ax.set_ylabel("adjacent sup distance")
    ax.legend(fontsize=8)
    return _finish(fig, ax, path, title)


def plot_series(kind: str, series: dict, path, title=None):
    """Generic renderer for the long-format figure data."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for sid, (x, v) in series.items():
        if kind == "bandwidth-profile":
            ax.plot(x, v, "-", lw=1, alpha=0.8)
            ax.set_yscale("log")
            continue
        xs, vs = _gaps_to_nan(x, v)
        if sid == "truth":
            ax.plot(xs, vs, "k--", lw=1.6, zorder=5)
        elif sid in ("lower", "upper"):
            ax.plot(xs, vs, color="C0", lw=1, ls="-.")
        else:
            ax.plot(xs, vs, lw=0.8, alpha=0.6 if kind == "estimates-overlay" else 1.0)
    ax.set_xlabel("h" if kind == "bandwidth-profile" else "x")
    return _finish(fig, ax, path, title or kind)


def plot_coverage(report, path):
    """Empirical coverage (with binomial SE) against nominal level, and mean widths."""
    rows = report.rows
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    labels = sorted({(r.n, r.delta, r.method) for r in rows})
    for i, key in enumerate(labels):
        sel = sorted((r for r in rows if (r.n, r.delta, r.method) == key), key=lambda r: r.tau)
        nominal = [1 - r.tau for r in sel]
        tag = f"n={key[0]}, delta={key[1]:g}, {key[2].upper()}"
        ax1.errorbar(nominal, [r.coverage for r in sel], yerr=[r.coverage_se for r in sel],
                     fmt="o", color=f"C{i}", capsize=3, label=tag)
        ax2.plot(nominal, [r.mean_width for r in sel], "o-", color=f"C{i}", label=tag)
    lim = [min(0.5, *(1 - r.tau for r in rows)) - 0.02, 1.01]
    ax1.plot(lim, lim, "k:", lw=1)
    ax1.set_xlabel("nominal level")
    ax1.set_ylabel("empirical coverage")
    ax1.legend(fontsize=7)
    ax1.grid(alpha=0.3)
    ax2.set_xlabel("nominal level")
    ax2.set_ylabel("mean width")
    ax2.grid(alpha=0.3)
    fig.suptitle(report.config.model.label(), fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
