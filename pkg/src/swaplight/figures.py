"""Matplotlib renderers for the figure-equivalent products.

Figures are rendered to files next to the CSV data they visualize; the CSVs
remain the machine-readable interface. All rendering runs on the Agg
backend so the pipeline works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_mean_decay(path, t, mean_x, mean_p, fit_x: dict, fit_p: dict) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.2))
    ms = 1e3 * np.asarray(t)
    ax.plot(ms, mean_x, lw=1.2, label="$\\langle x_L(t)\\rangle$")
    ax.plot(ms, mean_p, lw=1.2, ls="-.", label="$\\langle p_L(t)\\rangle$")
    for fit, color in ((fit_x, "C0"), (fit_p, "C1")):
        ax.plot(
            ms,
            fit["sign"] * fit["amplitude"] * np.exp(-fit["rate_per_s"] * np.asarray(t)),
            color=color, ls=":", lw=1.0,
            label=f"fit: rate {fit['rate_per_s']:.1f}/s",
        )
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("ensemble mean (shot-noise units)")
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)


def render_spectrum(path, spec, oracle_db) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.2))
    ax.plot(spec.freq_offset_Hz, spec.power_db, lw=1.0, label="signal / shot noise")
    if not np.all(np.isnan(oracle_db)):
        ax.plot(spec.freq_offset_Hz, oracle_db, lw=1.0, ls="--", label="analytic")
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_xlabel("offset from Larmor frequency (Hz)")
    ax.set_ylabel("noise power (dB rel. shot noise)")
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)


def render_mode_spectrum(path, spectrum, significant, k) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.2))
    idx = np.arange(k)
    colors = ["C3" if i in significant else "C0" for i in idx]
    ax.bar(idx + 1, spectrum.db[:k], color=colors, width=0.7)
    if spectrum.bootstrap_sd is not None:
        err = 10.0 * np.log10(
            1.0 + spectrum.bootstrap_sd[:k] / spectrum.variances[:k]
        )
        ax.errorbar(idx + 1, spectrum.db[:k], yerr=err, fmt="none",
                    ecolor="0.3", capsize=2, lw=0.8)
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_xlabel("mode number (most squeezed first)")
    ax.set_ylabel("noise change (dB rel. shot noise)")
    _save(fig, path)


def render_mode_functions(path, t, mode_columns, leading_fit) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.2))
    ms = 1e3 * np.asarray(t)
    styles = ["-", "--", ":"]
    for i, u in enumerate(mode_columns):
        ax.plot(ms, u, styles[i % 3], lw=1.2, label=f"mode {i + 1}")
    if leading_fit is not None and not leading_fit.rising:
        ax.plot(
            ms,
            leading_fit.amplitude * np.exp(-leading_fit.rate_per_s * np.asarray(t)),
            "-.", color="C3", lw=1.0,
            label=f"exp fit {leading_fit.rate_per_s:.0f}/s",
        )
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("mode amplitude (1/$\\sqrt{s}$)")
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)


def render_mode_shape(path, t, gamma, mode) -> None:
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    ms = 1e3 * np.asarray(t)
    ax1.plot(ms, gamma, lw=1.2)
    ax1.set_ylabel("swap rate (1/s)")
    ax2.plot(ms, mode, lw=1.2, color="C1")
    ax2.set_ylabel("output mode (1/$\\sqrt{s}$)")
    ax2.set_xlabel("time (ms)")
    _save(fig, path)
