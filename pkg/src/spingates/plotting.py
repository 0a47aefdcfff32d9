"""PNG figures rendered next to the tables written by the CLI.

matplotlib is imported lazily and forced onto the Agg backend, so the rest
of the package never needs a display.  PNG metadata is stripped to keep
repeated runs byte-identical.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

_STYLE = {
    "figure.figsize": (6.4, 4.0),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 120,
}
_PNG_META = {"Software": None}


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, metadata=_PNG_META)
    _pyplot().close(fig)
    return path


def plot_waveform(path, waveform, title=None) -> Path:
    """Amplitude (MHz) and phase (rad) against time (ns)."""
    plt = _pyplot()
    with plt.rc_context(_STYLE):
        fig, (ax_a, ax_p) = plt.subplots(2, 1, sharex=True)
        t_ns = waveform.times * 1e3
        ax_a.plot(t_ns, waveform.omega_mhz, lw=0.8)
        ax_a.set_ylabel("Omega / 2pi (MHz)")
        ax_p.plot(t_ns, waveform.phases, lw=0.8, color="C1")
        ax_p.set_ylabel("phase (rad)")
        ax_p.set_xlabel("t (ns)")
        if title:
            ax_a.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def plot_convergence(path, trace, title=None) -> Path:
    """Best FoM against cumulative evaluations; superiteration boundaries dashed."""
    plt = _pyplot()
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        offset = 0
        for entry in trace:
            hist = np.array(entry.history, dtype=float).reshape(-1, 2)
            ax.plot(offset + hist[:, 0], hist[:, 1], color="C0", lw=0.9)
            offset += entry.n_evals
            ax.axvline(offset, color="0.6", ls="--", lw=0.6)
        ax.set_yscale("log")
        ax.set_xlabel("FoM evaluations")
        ax.set_ylabel("best FoM")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def plot_populations(path, t_ns, p_e_up, p_n_up, title=None) -> Path:
    plt = _pyplot()
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(t_ns, p_e_up, label="electron up", lw=0.9)
        ax.plot(t_ns, p_n_up, label="nucleus up", lw=0.9)
        ax.set_ylim(-0.02, 1.02)
        ax.set_xlabel("t (ns)")
        ax.set_ylabel("population")
        ax.legend(loc="best")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def plot_sweep(path, records, title=None) -> Path:
    """Fresh-seed FoM (mean with std bars) against duration, one curve per Larmor frequency."""
    plt = _pyplot()
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        groups = {}
        for rec in records:
            if rec.ok:
                groups.setdefault(rec.omega_i, []).append(rec)
        for omega_i, recs in sorted(groups.items()):
            recs.sort(key=lambda r: r.t_f)
            ax.errorbar([r.t_f for r in recs], [r.fom_eval_mean for r in recs],
                        yerr=[r.fom_eval_std for r in recs], marker="o", ms=3, capsize=2,
                        label=f"omega_I / 2pi = {omega_i / (2 * np.pi):.3g} MHz")
        ax.set_yscale("log")
        ax.set_xlabel("gate duration (us)")
        ax.set_ylabel("FoM")
        if groups:
            ax.legend(loc="best")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def plot_noise_stats(path, lags_us, empirical, theory, title=None) -> Path:
    plt = _pyplot()
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(lags_us, empirical, "o", ms=3, label="ensemble")
        ax.plot(lags_us, theory, "-", lw=0.9, label="stationary OU")
        ax.set_xlabel("lag (us)")
        ax.set_ylabel("autocovariance (rad/us)^2")
        ax.legend(loc="best")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)
