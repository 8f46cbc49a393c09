"""One-dimensional damped models on the circle and their resolvent probes.

The operator is g(hD) (hD)^2 + i eps V(x) on Fourier modes h(j + theta),
|j| <= J_max, optionally with mixed position-frequency terms
i eps k(x, xi) cut off smoothly at |xi| ~ eps^delta.  Low-lying eigenvalues
near i eps min V form a ladder with slope pi/4; away from the ladder the
rescaled operator P/eps - z obeys a lower bound
sigma_min >= c * h_tilde^(2/3) |z|^(1/3) with h_tilde = h / sqrt(eps),
which resolvent_bound_scan probes on a grid.
"""

from dataclasses import dataclass, field

import math
import numpy as np

from . import eig
from .classical import trig_extrema, _trig_eval
from .errors import (DegenerateMinimum, RegionViolatesHypotheses,
                     TruncationTooSmall)


def _potential_array(potential):
    """{nu: coeff} -> dense coefficient array for trig_extrema."""
    if not potential:
        return np.zeros(1, dtype=complex)
    mm = max(abs(int(nu)) for nu in potential)
    c = np.zeros(2 * mm + 1, dtype=complex)
    for nu, val in potential.items():
        c[int(nu) + mm] = val
    return c


def check_hermitian(potential, tol=1e-12):
    """Require vhat(-nu) == conj(vhat(nu)) so V is real-valued."""
    scale = max(1.0, sum(abs(v) for v in potential.values()))
    for nu, val in potential.items():
        other = potential.get(-nu, 0.0)
        if abs(np.conj(val) - other) > tol * scale:
            raise ValueError(
                f"potential is not Hermitian-symmetric at nu={nu}: "
                f"conj({val}) != {other}")


@dataclass
class Model1D:
    """Parameters of a truncated 1-d model.

    potential maps integer frequencies to Fourier coefficients of V.
    g_multiplier (None means g == 1) must stay >= 1 with |xi g'(xi)| <= 0.1
    on the lattice.  mixed_term maps (nu, degree) to the coefficient of
    e^(i nu x) xi^degree, applied at column frequencies and cut off beyond
    |xi| ~ eps^mixed_delta.  target_abs_z is the largest |z| the caller
    intends to probe; it enters the tail ellipticity check.
    """

    h: float
    epsilon: float
    theta: float = 0.0
    potential: dict = field(default_factory=dict)
    g_multiplier: object = None
    mixed_term: dict | None = None
    j_max: int = 0
    mixed_delta: float = 0.25
    target_abs_z: float = 0.0


def _phi_cutoff(s):
    """Smooth plateau: 1 on |s| <= 1, 0 on |s| >= 2."""
    s = abs(s)
    if s <= 1.0:
        return 1.0
    if s >= 2.0:
        return 0.0

    def f(t):
        return math.exp(-1.0 / t) if t > 0.0 else 0.0

    a = f(2.0 - s)
    return a / (a + f(s - 1.0))


def potential_range(potential):
    """(min V, argmin, V''(argmin), max V) of the real trig polynomial."""
    c = _potential_array(potential)
    t_min, v_min, d2, _, v_max = trig_extrema(c)
    return v_min, t_min, d2, v_max


def suggest_j_max(h, epsilon, theta=0.0, potential=None, target_abs_z=0.0,
                  headroom=1.05):
    """Smallest truncation passing the tail ellipticity rule, plus slack."""
    v_max = potential_range(potential or {})[3]
    need = 10.0 * (target_abs_z + abs(epsilon) * max(v_max, 0.0))
    j = math.sqrt(max(need, 0.0)) / h - theta
    return int(math.ceil(max(j, 8) * headroom))


def assemble_1d(model):
    """Dense matrix of the truncated model; validates the model first.

    Diagonal g(xi_j) xi_j^2 with xi_j = h (j + theta); the potential adds
    i eps vhat(j - j~) on the (j, j~) entry; a mixed term adds
    i eps khat(nu, d) xi_j~^d phi(xi_j~ / eps^delta) on entries with
    j - j~ = nu.  Raises TruncationTooSmall when the tail of the diagonal
    cannot dominate the requested spectral region.
    """
    h, eps, theta = model.h, model.epsilon, model.theta
    jm = int(model.j_max)
    if not (h > 0.0):
        raise ValueError("h must be positive")
    if jm < 1:
        raise ValueError("j_max must be at least 1")
    check_hermitian(model.potential)
    v_min, _, _, v_max = potential_range(model.potential)

    tail = (h * (jm + theta)) ** 2
    need = 10.0 * (model.target_abs_z + abs(eps) * max(v_max, 0.0))
    if tail < need:
        raise TruncationTooSmall(
            f"h^2 (J+theta)^2 = {tail:.4g} < {need:.4g}; raise j_max")

    j = np.arange(-jm, jm + 1)
    x_freq = h * (j + theta)
    if model.g_multiplier is None:
        g = np.ones_like(x_freq)
    else:
        g = np.array([float(model.g_multiplier(x)) for x in x_freq])
        step = 1e-6 * np.maximum(1.0, np.abs(x_freq))
        gp = np.array([(model.g_multiplier(x + s) - model.g_multiplier(x - s))
                       / (2.0 * s) for x, s in zip(x_freq, step)])
        if np.min(g) < 1.0 - 1e-12:
            raise ValueError(f"g dips to {np.min(g):.6g} < 1 on the lattice")
        bad = np.max(np.abs(x_freq * gp))
        if bad > 0.1 + 1e-9:
            raise ValueError(f"|xi g'(xi)| reaches {bad:.4g} > 0.1")

    n = 2 * jm + 1
    a = np.zeros((n, n), dtype=complex)
    a[np.arange(n), np.arange(n)] = g * x_freq ** 2
    for nu, vhat in model.potential.items():
        nu = int(nu)
        if vhat == 0.0:
            continue
        lo = max(0, nu)
        hi = min(n, n + nu)
        rows = np.arange(lo, hi)
        a[rows, rows - nu] += 1j * eps * vhat
    if model.mixed_term:
        if eps <= 0.0:
            raise ValueError("mixed terms need eps > 0 for their cutoff scale")
        cut = eps ** model.mixed_delta
        for (nu, deg), khat in model.mixed_term.items():
            nu, deg = int(nu), int(deg)
            if deg < 1:
                raise ValueError("mixed-term degree must be >= 1 "
                                 "(no pure-position part)")
            if khat == 0.0:
                continue
            lo = max(0, nu)
            hi = min(n, n + nu)
            rows = np.arange(lo, hi)
            cols = rows - nu
            xi_col = x_freq[cols]
            damp = np.array([_phi_cutoff(x / cut) for x in xi_col])
            a[rows, cols] += 1j * eps * khat * xi_col ** deg * damp
    return a


def low_lying_spectrum(model, count, backend="auto"):
    """The `count` eigenvalues nearest i eps min V.

    Requires the potential to have a unique nondegenerate minimum; ties in
    the distance are broken by argument.  Returned in increasing distance.
    """
    c = _potential_array(model.potential)
    v_min, x0, d2, _ = _unique_min(c)
    if d2 < 1e-9:
        raise DegenerateMinimum(
            f"V''(x0) = {d2:.3e} at the minimum; the low-lying ladder "
            "needs a nondegenerate well")
    a = assemble_1d(model)
    w = eig.eigenvalues(a, backend=backend).eigenvalues
    anchor = 1j * model.epsilon * v_min
    d = np.abs(w - anchor)
    order = np.lexsort((np.angle(w - anchor), d))
    return w[order][:count]


def _unique_min(c, n_grid=8192):
    """Global minimum of the trig polynomial plus a uniqueness check."""
    t_min, v_min, d2, _, _ = trig_extrema(c, n_grid)
    ts = np.linspace(0.0, 2.0 * math.pi, n_grid, endpoint=False)
    vals = _trig_eval(c, ts)
    scale = max(1.0, float(np.sum(np.abs(c))))
    near = ts[vals <= v_min + 1e-9 * scale]
    if len(near) > 1:
        spacing = 2.0 * math.pi / n_grid
        cyc = np.append(np.diff(near), 2.0 * math.pi - (near[-1] - near[0]))
        # one connected arc of near-minimal points has a single large cyclic
        # gap; a second well adds another
        if np.count_nonzero(cyc > 64 * spacing) >= 2:
            raise DegenerateMinimum("the potential minimum is not unique")
    return v_min, t_min, d2, None


def smallest_singular_value(a, z, tol=1e-6):
    """sigma_min(A - zI) via the verified in-house routine."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    return eig.singular_min(a - complex(z) * np.eye(n), tol=tol)


@dataclass
class ZRegion:
    """Rectangle of probe points: n_re real parts spanning
    [re_min, re_max] at each imaginary offset in im_values."""

    re_min: float
    re_max: float
    n_re: int
    im_values: tuple


@dataclass
class ResolventProbe:
    h_tilde: float
    z_values: np.ndarray
    sigma_values: np.ndarray
    bound_values: np.ndarray


def resolvent_bound_scan(model, region, cutoff_c=1.0, c1=1.0):
    """Probe sigma_min(P/eps - z) against c h_tilde^(2/3) |z|^(1/3).

    The claim only holds for Im z <= c1 h_tilde, |z| >= cutoff_c h_tilde,
    and h_tilde sqrt|z| small; points outside that regime raise
    RegionViolatesHypotheses.  Returns the probe data and the fitted
    c = min sigma / bound over the grid; raising cutoff_c shrinks the grid
    toward larger |z| and can only increase the fit.
    """
    if model.epsilon <= 0.0:
        raise ValueError("the rescaled operator needs eps > 0")
    h_tilde = model.h / math.sqrt(model.epsilon)
    res = np.linspace(region.re_min, region.re_max, int(region.n_re))
    zs = np.array([complex(r, im) for im in region.im_values for r in res])
    mags = np.abs(zs)
    slack = 1.0 + 1e-12
    if np.any(zs.imag > c1 * h_tilde * slack):
        raise RegionViolatesHypotheses(
            f"Im z up to {np.max(zs.imag):.4g} exceeds c1*h_tilde = "
            f"{c1 * h_tilde:.4g}")
    if np.any(mags < cutoff_c * h_tilde / slack):
        raise RegionViolatesHypotheses(
            f"|z| down to {np.min(mags):.4g} under the cutoff "
            f"{cutoff_c * h_tilde:.4g}")
    if np.any(h_tilde * np.sqrt(mags) > 0.2) or np.any(mags > 0.6):
        raise RegionViolatesHypotheses(
            "the grid leaves the small-|z| regime of the bound")

    probe_model = Model1D(
        h=model.h, epsilon=model.epsilon, theta=model.theta,
        potential=model.potential, g_multiplier=model.g_multiplier,
        mixed_term=model.mixed_term, j_max=model.j_max,
        mixed_delta=model.mixed_delta,
        target_abs_z=max(model.target_abs_z,
                         model.epsilon * float(np.max(mags))))
    p = assemble_1d(probe_model)
    b0 = p / model.epsilon
    ident = np.eye(b0.shape[0])
    sigmas = np.array([eig.singular_min(b0 - z * ident) for z in zs])
    bounds = h_tilde ** (2.0 / 3.0) * mags ** (1.0 / 3.0)
    c_fit = float(np.min(sigmas / bounds))
    return ResolventProbe(h_tilde, zs, sigmas, bounds), c_fit


def write_probe(path, probe, c_fit):
    """Probe table with the fitted constant in the header."""
    lines = ["# torusband resolvent probe"]
    lines.append("# h_tilde = %.17g" % probe.h_tilde)
    lines.append("# fitted_c = %.17g" % c_fit)
    lines.append("# columns: re_z im_z sigma_min bound_value")
    for z, s, b in zip(probe.z_values, probe.sigma_values, probe.bound_values):
        lines.append("%.17g %.17g %.17g %.17g" % (z.real, z.imag, s, b))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_probe(path):
    """Read a probe file; returns (probe, c_fit)."""
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    meta[key.strip()] = val.strip()
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"bad probe row: {line!r}")
            rows.append([float(p) for p in parts])
    arr = np.array(rows) if rows else np.zeros((0, 4))
    probe = ResolventProbe(
        float(meta["h_tilde"]),
        arr[:, 0] + 1j * arr[:, 1],
        arr[:, 2],
        arr[:, 3],
    )
    return probe, float(meta["fitted_c"])
