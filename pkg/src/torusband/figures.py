"""Figure rendering for the report pipeline.

Every report stage drops a PNG next to its delimited table so a run can be
eyeballed without postprocessing.  The Agg backend is forced here since the
tool runs headless.
"""

import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

golden = (math.sqrt(5.0) - 1.0) / 2.0

params = {
    "axes.labelsize": 10,
    "axes.titlesize": 10,
    "font.size": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (6.0, 6.0 * golden),
    "savefig.dpi": 150,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def _new_axes():
    plt.rcParams.update(params)
    fig, ax = plt.subplots()
    return fig, ax


def classical_figure(path, angles, averages, torus_mins, torus_maxs, segments):
    """Torus-average curve over the momentum angle with the pointwise
    min/max envelopes and one vertical segment per rational direction."""
    fig, ax = _new_axes()
    ax.plot(angles, torus_maxs, color="0.6", lw=0.8, label="torus max")
    ax.plot(angles, torus_mins, color="0.6", lw=0.8, ls="--", label="torus min")
    ax.plot(angles, averages, color="C0", lw=1.2, label="torus average")
    first = True
    for angle, q_inf, q_sup in segments:
        ax.plot([angle, angle], [q_inf, q_sup], color="C3", lw=2.0,
                label="limit interval" if first else None)
        first = False
    ax.set_xlabel("momentum angle")
    ax.set_ylabel("orbit-average value")
    ax.legend(loc="best")
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def spectrum_figure(path, record, band=None):
    """Eigenvalue cloud, rescaled to (Re z, Im z / eps) when eps > 0."""
    fig, ax = _new_axes()
    w = record.eigenvalues
    if record.epsilon > 0.0:
        ax.plot(w.real, w.imag / record.epsilon, ".", ms=2.5, color="C0")
        ax.set_ylabel("Im z / eps")
    else:
        ax.plot(w.real, w.imag, ".", ms=2.5, color="C0")
        ax.set_ylabel("Im z")
    if band is not None:
        ax.axhline(band[0], color="C3", lw=0.8)
        ax.axhline(band[1], color="C3", lw=0.8)
    ax.set_xlabel("Re z")
    ax.set_title(f"h = {record.h:g}, eps = {record.epsilon:g}")
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def compare_figure(path, predicted, computed, pairs, h, epsilon):
    """Overlay of predicted lattice points and the computed leg."""
    fig, ax = _new_axes()
    predicted = np.asarray(predicted, dtype=complex)
    computed = np.asarray(computed, dtype=complex)
    if len(computed):
        ax.plot(computed.real, computed.imag / epsilon, "x", ms=5.0,
                color="C0", label="computed")
    if len(predicted):
        ax.plot(predicted.real, predicted.imag / epsilon, "+", ms=6.0,
                color="C3", label="predicted")
    for p, c, _ in pairs:
        ax.plot([p.real, c.real], [p.imag / epsilon, c.imag / epsilon],
                color="0.7", lw=0.5)
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z / eps")
    ax.set_title(f"lattice match, h = {h:g}, eps = {epsilon:g}")
    ax.legend(loc="best")
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def resolvent_figure(path, probe, c_fit):
    """sigma_min against |z| per imaginary offset, with the fitted bound."""
    fig, ax = _new_axes()
    ims = sorted(set(np.round(probe.z_values.imag, 12)))
    for i, im in enumerate(ims):
        sel = np.isclose(probe.z_values.imag, im)
        mags = np.abs(probe.z_values[sel])
        order = np.argsort(mags)
        ax.loglog(mags[order], probe.sigma_values[sel][order], "o-",
                  ms=3.0, lw=0.8, color=f"C{i}", label=f"Im z = {im:g}")
    mags = np.abs(probe.z_values)
    grid = np.linspace(np.min(mags), np.max(mags), 200)
    ax.loglog(grid, c_fit * probe.h_tilde ** (2.0 / 3.0) * grid ** (1.0 / 3.0),
              color="C3", ls="--", lw=1.0,
              label=f"c h~^(2/3) |z|^(1/3), c = {c_fit:.3g}")
    ax.set_xlabel("|z|")
    ax.set_ylabel("smallest singular value")
    ax.legend(loc="best")
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def ladder_figure(path, eigenvalues, reference):
    """Low-lying 1-d eigenvalues against the predicted harmonic rungs."""
    fig, ax = _new_axes()
    w = np.asarray(eigenvalues, dtype=complex)
    r = np.asarray(reference, dtype=complex)
    ax.plot(w.real, w.imag, "o", ms=4.0, color="C0", label="computed")
    ax.plot(r.real, r.imag, "+", ms=8.0, color="C3", label="ladder")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.legend(loc="best")
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path
