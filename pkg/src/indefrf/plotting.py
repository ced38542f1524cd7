"""Static figures written next to the CSV reports (Agg backend, no display)."""

import json

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path, config):
    meta = {"Description": json.dumps(config, sort_keys=True)} if config is not None else None
    fig.savefig(path, dpi=120, metadata=meta)
    plt.close(fig)


def plot_spectrum(omega, density, path, title="", config=None):
    """Signed radial density with the negative part shaded."""
    omega = np.asarray(omega)
    density = np.asarray(density)
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.plot(omega, density, color="k", lw=1.2)
    ax.fill_between(omega, density, 0, where=density > 0, color="tab:blue", alpha=0.3,
                    label=r"$\mu_+$")
    ax.fill_between(omega, density, 0, where=density < 0, color="tab:red", alpha=0.3,
                    label=r"$\mu_-$")
    ax.axhline(0, color="0.5", lw=0.6)
    ax.set_xlabel(r"$\omega$")
    ax.set_ylabel(r"$\mu(\omega)$")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    _save(fig, path, config)


def plot_error_curve(curve, path, config=None):
    """Median relative Frobenius error against s, one line per (kernel, scheme)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    groups = {}
    for row in curve:
        groups.setdefault((row["kernel"], row["scheme"]), []).append(row)
    for (kern, scheme), rows in groups.items():
        rows = sorted(rows, key=lambda r: r["s"])
        s = [r["s"] for r in rows]
        ax.plot(s, [r["median_err"] for r in rows], marker="o", label=f"{kern} [{scheme}]")
        ax.fill_between(s, [r["q25"] for r in rows], [r["q75"] for r in rows], alpha=0.2)
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("number of random features s")
    ax.set_ylabel(r"$\|K-\tilde K\|_F / \|K\|_F$")
    ax.legend(fontsize=7, frameon=False)
    fig.tight_layout()
    _save(fig, path, config)
