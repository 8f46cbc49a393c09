"""Classical averages of a symbol along the torus geodesic flow.

The flow of p = xi^2 + eta^2 moves points in straight lines: a momentum
proportional to (-n, m) with coprime integers (m, n) closes up, and the
infinite-time average of a band-limited symbol along such an orbit keeps
exactly the Fourier modes on the lattice line mu*(m, n).  That average is a
trig polynomial in the orbit label t = m*x + n*y; its range over t is the
limiting interval attached to the direction, and the union of those
intervals over all directions (plus the torus averages of the irrational
tori) bounds the imaginary band of the perturbed operator.
"""

from dataclasses import dataclass

import math
import numpy as np

from .errors import DegenerateMinimum

_TAU = 2.0 * math.pi


@dataclass(frozen=True)
class RationalDirection:
    """A primitive lattice covector (m, n), canonically oriented.

    Canonical means m > 0, or m == 0 and n == 1.  The closed orbits with
    conserved label t = m*x + n*y have momentum along (-n, m).
    """

    m: int
    n: int

    def __post_init__(self):
        m, n = int(self.m), int(self.n)
        if (m, n) == (0, 0):
            raise ValueError("direction cannot be (0, 0)")
        if math.gcd(m, n) != 1:
            raise ValueError(f"({m}, {n}) is not primitive")
        if not (m > 0 or (m == 0 and n == 1)):
            raise ValueError(f"({m}, {n}) is not canonically oriented")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)

    @property
    def length(self):
        return math.hypot(self.m, self.n)

    def momentum(self, energy=1.0, orientation=1):
        """The unit-speed momentum on the energy-`energy` circle."""
        scale = orientation * math.sqrt(energy) / self.length
        return (-self.n * scale, self.m * scale)


def rational_directions(degree_F):
    """All canonical primitive directions with |m|, |n| <= F, sorted."""
    f = int(degree_F)
    if f < 1:
        raise ValueError("degree_F must be at least 1")
    out = set()
    for m in range(-f, f + 1):
        for n in range(-f, f + 1):
            if (m, n) == (0, 0) or math.gcd(m, n) != 1:
                continue
            if m < 0 or (m == 0 and n == -1):
                m2, n2 = -m, -n
            else:
                m2, n2 = m, n
            out.add((m2, n2))
    return [RationalDirection(m, n) for (m, n) in sorted(out)]


def line_coefficients(sym, direction, xi, eta):
    """Fourier coefficients c_mu of the orbit average, mu in [-M, M].

    M = F // max(|m|, |n|); the returned array has length 2M+1 and the
    average is g(t) = sum_mu c_mu exp(i mu t).
    """
    f = sym.degree_F
    m, n = direction.m, direction.n
    big = max(abs(m), abs(n))
    mm = f // big
    q = sym.combined(xi, eta)
    c = np.zeros(2 * mm + 1, dtype=complex)
    for mu in range(-mm, mm + 1):
        c[mu + mm] = q[mu * m + f, mu * n + f]
    return c


def secular_average(sym, direction, t, energy=1.0):
    """The infinite-time orbit average at orbit label t (scalar or array)."""
    xi, eta = direction.momentum(energy)
    c = line_coefficients(sym, direction, xi, eta)
    out = _trig_eval(c, np.asarray(t, dtype=float))
    return float(out) if out.ndim == 0 else out


def _trig_eval(c, t):
    mm = (len(c) - 1) // 2
    total = np.zeros(np.shape(t), dtype=complex)
    for mu in range(-mm, mm + 1):
        total = total + c[mu + mm] * np.exp(1j * mu * np.asarray(t))
    return total.real


def _trig_derivs(c, t):
    """(g, g', g'') of the real trig polynomial at scalar t."""
    mm = (len(c) - 1) // 2
    g = gp = gpp = 0.0
    for mu in range(-mm, mm + 1):
        e = c[mu + mm] * np.exp(1j * mu * t)
        g += e.real
        gp += (1j * mu * e).real
        gpp += (-mu * mu * e).real
    return g, gp, gpp


def trig_extrema(c, n_grid=8192):
    """Locate the extrema of g(t) = Re sum c_mu e^(i mu t) on [0, 2*pi).

    Returns (t_min, g_min, g''(t_min), t_max, g_max).  Dense sampling
    followed by Newton refinement on g'; a constant polynomial comes back
    with t_min = t_max = 0 and zero curvature.
    """
    c = np.asarray(c, dtype=complex)
    mm = (len(c) - 1) // 2
    scale = float(np.sum(np.abs(c)))
    osc = float(np.sum(np.abs(np.delete(c, mm)))) if mm > 0 else 0.0
    const = c[mm].real
    if mm == 0 or osc <= 1e-15 * max(1.0, scale):
        return 0.0, const, 0.0, 0.0, const

    ts = np.linspace(0.0, _TAU, n_grid, endpoint=False)
    vals = _trig_eval(c, ts)
    spacing = _TAU / n_grid

    def refine(i, sign):
        # Newton from grid candidate i toward a critical point; sign=+1
        # refines a minimum of g, sign=-1 a maximum.
        t = float(ts[i])
        tol = 1e-12 * max(1.0, scale)
        for _ in range(60):
            _, gp, gpp = _trig_derivs(c, t)
            if abs(gp) <= tol:
                break
            if abs(gpp) <= 1e-8 * max(1.0, scale):
                # nearly flat: fall back to a local fine sweep
                window = np.linspace(t - 2 * spacing, t + 2 * spacing, 4001)
                wv = _trig_eval(c, window)
                t = float(window[np.argmin(sign * wv)])
                break
            step = gp / gpp
            if abs(step) > spacing:
                step = math.copysign(spacing, step)
            t -= step
        g, _, gpp = _trig_derivs(c, t)
        return t % _TAU, g, gpp

    prev = np.roll(vals, 1)
    nxt = np.roll(vals, -1)
    min_idx = np.nonzero((vals <= prev) & (vals <= nxt))[0]
    max_idx = np.nonzero((vals >= prev) & (vals >= nxt))[0]
    mins = [refine(i, +1.0) for i in min_idx]
    maxs = [refine(i, -1.0) for i in max_idx]
    t_min, g_min, d2_min = min(mins, key=lambda r: r[1])
    t_max, g_max, _ = max(maxs, key=lambda r: r[1])
    return t_min, g_min, d2_min, t_max, g_max


@dataclass
class QInfinityInterval:
    """Range of the infinite-time orbit average along one direction."""

    direction: RationalDirection
    torus_average: float
    q_inf: float
    q_sup: float
    t_min: float
    second_derivative_at_min: float
    torus_min_q: float
    torus_max_q: float


def q_infinity_interval(sym, direction, energy=1.0):
    """The limiting interval of orbit averages for one rational direction.

    The endpoints come from dense sampling plus Newton refinement of the
    secular trig polynomial; a nonconstant polynomial whose located minimum
    has second derivative below 1e-9 raises DegenerateMinimum.  Directions
    whose lattice line carries no nonzero mode (in particular any direction
    with max(|m|, |n|) > F) give a degenerate one-point interval.
    """
    xi, eta = direction.momentum(energy)
    c = line_coefficients(sym, direction, xi, eta)
    mm = (len(c) - 1) // 2
    t_min, g_min, d2_min, _, g_max = trig_extrema(c)
    osc = float(np.sum(np.abs(np.delete(c, mm)))) if mm > 0 else 0.0
    degenerate_line = mm == 0 or osc <= 1e-15 * max(1.0, float(np.sum(np.abs(c))))
    if not degenerate_line and d2_min < 1e-9:
        raise DegenerateMinimum(
            f"orbit average along ({direction.m}, {direction.n}) has a flat "
            f"minimum (second derivative {d2_min:.3e})")
    tmin_q, tmax_q = torus_extrema(sym, xi, eta)
    return QInfinityInterval(
        direction=direction,
        torus_average=float(c[mm].real),
        q_inf=float(g_min),
        q_sup=float(g_max),
        t_min=float(t_min),
        second_derivative_at_min=float(d2_min),
        torus_min_q=float(tmin_q),
        torus_max_q=float(tmax_q),
    )


def torus_extrema(sym, xi, eta, grid=512):
    """Min and max of q(., .; xi, eta) over the torus.

    Exact evaluation on a grid x grid lattice through a zero-padded inverse
    FFT, then Newton refinement on the gradient from the best candidates.
    """
    f = sym.degree_F
    q = sym.combined(xi, eta)
    const = float(q[f, f].real)
    mass = float(np.sum(np.abs(q)))
    if mass - abs(q[f, f]) <= 1e-15 * max(1.0, mass):
        return const, const

    g = np.zeros((grid, grid), dtype=complex)
    for j in range(-f, f + 1):
        for k in range(-f, f + 1):
            g[j % grid, k % grid] += q[j + f, k + f]
    vals = (np.fft.ifft2(g) * grid * grid).real

    js = np.arange(-f, f + 1)
    jj, kk = np.meshgrid(js, js, indexing="ij")

    def value_grad_hess(x, y):
        ph = q * np.exp(1j * (jj * x + kk * y))
        val = float(np.sum(ph).real)
        gx = float(np.sum(1j * jj * ph).real)
        gy = float(np.sum(1j * kk * ph).real)
        hxx = float(np.sum(-jj * jj * ph).real)
        hxy = float(np.sum(-jj * kk * ph).real)
        hyy = float(np.sum(-kk * kk * ph).real)
        return val, np.array([gx, gy]), np.array([[hxx, hxy], [hxy, hyy]])

    spacing = _TAU / grid

    def refine(idx, sign):
        x = idx[0] * spacing
        y = idx[1] * spacing
        tol = 1e-9 * max(1.0, mass)
        for _ in range(50):
            val, grad, hess = value_grad_hess(x, y)
            if np.hypot(*grad) <= tol:
                return val
            det = hess[0, 0] * hess[1, 1] - hess[0, 1] ** 2
            if abs(det) <= 1e-10 * max(1.0, mass) ** 2:
                break
            step = np.linalg.solve(hess, grad)
            norm = np.hypot(*step)
            if norm > spacing:
                step *= spacing / norm
            x -= step[0]
            y -= step[1]
        # degenerate Hessian or stalled Newton: two rounds of local grids
        half = spacing
        for _ in range(2):
            xs = np.linspace(x - half, x + half, 33)
            ys = np.linspace(y - half, y + half, 33)
            xg, yg = np.meshgrid(xs, ys, indexing="ij")
            vv = sign * _eval_grid(q, f, xg, yg)
            best = np.unravel_index(np.argmin(vv), vv.shape)
            x, y = xs[best[0]], ys[best[1]]
            half /= 16.0
        return value_grad_hess(x, y)[0]

    imin = np.unravel_index(np.argmin(vals), vals.shape)
    imax = np.unravel_index(np.argmax(vals), vals.shape)
    vmin = refine(imin, +1.0)
    vmax = refine(imax, -1.0)
    return min(vmin, float(vals[imin])), max(vmax, float(vals[imax]))


def _eval_grid(q, f, x, y):
    total = np.zeros(np.shape(x), dtype=complex)
    for j in range(-f, f + 1):
        for k in range(-f, f + 1):
            cc = q[j + f, k + f]
            if cc != 0.0:
                total += cc * np.exp(1j * (j * x + k * y))
    return total.real


def finite_time_average(sym, point, horizon):
    """Sliding time average of q along the flow, via the closed form.

    Averaging e^(i k.x(s)) over s in [-T/2, T/2] multiplies the mode by
    sin(T k.xi) / (T k.xi), so the average is the symbol with each
    coefficient damped by that factor.
    """
    if horizon <= 0.0:
        raise ValueError("averaging time must be positive")
    f = sym.degree_F
    q = sym.combined(point.xi, point.eta)
    js = np.arange(-f, f + 1)
    jj, kk = np.meshgrid(js, js, indexing="ij")
    speed = jj * point.xi + kk * point.eta
    damp = np.sinc(horizon * speed / math.pi)
    total = np.sum(q * damp * np.exp(1j * (jj * point.x + kk * point.y)))
    return float(total.real)


def band_bounds(sym, energy=1.0, n_samples=256):
    """Extremes of all infinite-time averages on the energy-E momentum circle.

    Rational directions contribute their limiting intervals (both
    orientations of each primitive covector see a different affine-momentum
    weight, so both are included); the remaining, irrational tori only
    contribute their torus averages, sampled at n_samples angles offset by
    half a step so none of them is an exact rational angle.
    """
    if n_samples < 64:
        raise ValueError("n_samples must be at least 64")
    f = sym.degree_F
    c0 = sym.coeff(0, 0, 0).real
    c1 = sym.coeff(1, 0, 0).real
    c2 = sym.coeff(2, 0, 0).real
    root_e = math.sqrt(energy)
    angles = _TAU * (np.arange(n_samples) + 0.5) / n_samples
    averages = c0 + root_e * (c1 * np.cos(angles) + c2 * np.sin(angles))
    lo = float(np.min(averages))
    hi = float(np.max(averages))
    if f >= 1:
        for direction in rational_directions(f):
            for orientation in (1, -1):
                xi, eta = direction.momentum(energy, orientation)
                c = line_coefficients(sym, direction, xi, eta)
                _, g_min, _, _, g_max = trig_extrema(c)
                lo = min(lo, g_min)
                hi = max(hi, g_max)
    return float(lo), float(hi)


def cohomological_solve(v):
    """Split v = mean2 + d/dx2(u0) in Fourier coefficients.

    v maps (j, k) to the coefficient of e^(i(j x1 + k x2)).  mean2 keeps
    the k = 0 modes (a series in x1 alone, returned as {j: coeff}) and u0
    divides the k != 0 modes by ik, hence has zero mean in x2.
    """
    mean2 = {}
    u0 = {}
    for (j, k), val in v.items():
        if k == 0:
            mean2[j] = mean2.get(j, 0.0) + val
        else:
            u0[(j, k)] = val / (1j * k)
    return u0, mean2
