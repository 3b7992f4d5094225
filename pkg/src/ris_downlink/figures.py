"""Render experiment CSV rows to matplotlib figures saved next to the CSV."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["render_user_sweep", "render_atom_sweep", "render_snr_scaling"]

_RHO_COLORS = plt.cm.viridis


def _series_by_rho(rows):
    rhos = sorted({r["rho_db"] for r in rows})
    for i, rho in enumerate(rhos):
        sub = [r for r in rows if r["rho_db"] == rho]
        color = _RHO_COLORS(i / max(1, len(rhos) - 1))
        yield rho, sub, color


def render_user_sweep(rows, png_path):
    """Capacity gain over the unaided downlink versus the number of users."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for rho, sub, color in _series_by_rho(rows):
        k = [r["k"] for r in sub]
        ax.errorbar(
            k,
            [r["mc_delta"] for r in sub],
            yerr=[3.0 * r["mc_stderr"] for r in sub],
            fmt="o",
            ms=4,
            color=color,
            capsize=2,
            lw=1,
        )
        ax.plot(
            k,
            [r["analytic_delta"] for r in sub],
            "-",
            color=color,
            label=f"$\\varrho$ = {rho:g} dB",
        )
    ax.set_xscale("log")
    ax.set_xlabel("number of users $K$")
    ax.set_ylabel("capacity gain over unaided downlink (bits/s/Hz)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def render_atom_sweep(rows, png_path):
    """Average sum rate versus the number of meta-atoms, with the unaided
    reference level."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for rho, sub, color in _series_by_rho(rows):
        q = [r["q"] for r in sub]
        ax.errorbar(
            q,
            [r["mc_csum"] for r in sub],
            yerr=[3.0 * r["mc_stderr"] for r in sub],
            fmt="o",
            ms=4,
            color=color,
            capsize=2,
            lw=1,
        )
        ax.plot(
            q,
            [r["analytic_csum"] for r in sub],
            "-",
            color=color,
            label=f"$\\varrho$ = {rho:g} dB",
        )
    ax.axhline(rows[0]["no_ris_mc"], color="k", ls="--", lw=1, label="without RIS")
    ax.set_xlabel("number of meta-atoms $Q$")
    ax.set_ylabel("average sum rate (bits/s/Hz)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def render_snr_scaling(rows, png_path):
    """Normalized average receive SNR versus K with the predicted limit."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    k = [r["k"] for r in rows]
    ax.plot(k, [r["normalized"] for r in rows], "o-", label="normalized mean SNR")
    ax.plot(k, [r["predicted_limit"] for r in rows], "k--", label="predicted limit")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("number of users $K$")
    ax.set_ylabel("normalized average receive SNR")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
