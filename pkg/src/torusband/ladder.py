"""Eigenvalue lattice asymptotics near the edge of the spectral band.

Near a nondegenerate minimum b of the orbit-averaged symbol along a closed
direction, eigenvalues organize into a two-parameter lattice: one index
walks the quantized transverse momenta xi2 (spacing h / |(m, n)|) through
the slowly varying pair (a(xi2), b(xi2)), and the other climbs a complex
harmonic ladder with slope pi/4 and rung spacing sqrt(eps) h sqrt(2 b'').
"""

from dataclasses import dataclass

import cmath
import math
import warnings

import numpy as np

from .classical import line_coefficients, q_infinity_interval, trig_extrema
from .errors import DegenerateMinimum

ROOT_I = cmath.exp(1j * math.pi / 4.0)


def harmonic_ladder(second_derivative_b, curvature_p, k_max):
    """Rescaled ladder points e^(i pi/4) sqrt(curvature_p * b'') (k + 1/2).

    These are the eigenvalues, in units of sqrt(eps) h, of the quadratic
    model (1/2) curvature_p D^2 + (i/2) b'' x^2.
    """
    if not second_derivative_b > 0.0:
        raise ValueError("second_derivative_b must be positive")
    if not curvature_p > 0.0:
        raise ValueError("curvature_p must be positive")
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    k = np.arange(k_max + 1)
    return ROOT_I * math.sqrt(curvature_p * second_derivative_b) * (k + 0.5)


@dataclass
class LatticePrediction:
    direction: object
    energy: float
    h: float
    epsilon: float
    xi2_values: np.ndarray
    predictions: dict
    ladder_prefactor: complex

    def values(self):
        """Predicted eigenvalues in deterministic (jj, k) key order."""
        return np.array([self.predictions[key]
                         for key in sorted(self.predictions)])


def predict_lattice(sym, direction, energy, h, epsilon, j_range, k_max,
                    window_exponent=0.25):
    """Predicted eigenvalue lattice at the lower band edge of one direction.

    For each transverse index jj in [-j_range, j_range], the momentum
    radius sqrt(E) + h jj / |(m,n)| fixes a torus; the orbit average along
    the direction on that torus contributes its minimum b and curvature b''
    and the flat energy a = radius^2, and the rungs are
    a + i eps b + sqrt(eps) h * ladder_k.  Outside the window
    h^(1+eta) <= eps <= h^(1-eta) the expansion is uncontrolled and a
    warning is issued (eta = window_exponent).
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    lo = h ** (1.0 + window_exponent)
    hi = h ** (1.0 - window_exponent)
    if not (lo <= epsilon <= hi):
        warnings.warn(
            f"eps = {epsilon:g} is outside the asymptotic window "
            f"[{lo:.3g}, {hi:.3g}] for h = {h:g}; the lattice prediction "
            "may be inaccurate", stacklevel=2)
    interval = q_infinity_interval(sym, direction, energy)
    if interval.second_derivative_at_min < 1e-9:
        raise DegenerateMinimum(
            f"direction ({direction.m}, {direction.n}) has no nondegenerate "
            "orbit-average minimum to anchor a ladder")
    length = direction.length
    root_e = math.sqrt(energy)
    scale = math.sqrt(epsilon) * h
    xi2 = h * np.arange(-j_range, j_range + 1) / length
    predictions = {}
    for jj, x2 in zip(range(-j_range, j_range + 1), xi2):
        radius = root_e + x2
        mom = (-direction.n * radius / length, direction.m * radius / length)
        c = line_coefficients(sym, direction, mom[0], mom[1])
        _, b_min, d2, _, _ = trig_extrema(c)
        if d2 < 1e-9:
            raise DegenerateMinimum(
                f"orbit-average minimum degenerates at xi2 = {x2:.6g}")
        rungs = harmonic_ladder(d2, 2.0, k_max)
        a_val = radius * radius
        for k in range(k_max + 1):
            predictions[(jj, k)] = a_val + 1j * epsilon * b_min + scale * rungs[k]
    prefactor = scale * ROOT_I * math.sqrt(
        2.0 * _curvature_at_center(sym, direction, energy))
    return LatticePrediction(direction, float(energy), float(h),
                             float(epsilon), xi2, predictions, prefactor)


def _curvature_at_center(sym, direction, energy):
    xi, eta = direction.momentum(energy)
    c = line_coefficients(sym, direction, xi, eta)
    return trig_extrema(c)[2]


def extract_leg(record, band, side="below", margin=0.0):
    """Eigenvalues protruding from the imaginary band, sorted by Im z / eps.

    band is the (inf, sup) pair of band_bounds; side 'below' keeps
    Im z / eps < inf - margin, side 'above' keeps Im z / eps > sup + margin.
    """
    if record.epsilon <= 0.0:
        raise ValueError("leg extraction needs eps > 0")
    ratios = record.eigenvalues.imag / record.epsilon
    if side == "below":
        sel = ratios < band[0] - margin
    elif side == "above":
        sel = ratios > band[1] + margin
    else:
        raise ValueError(f"side must be 'below' or 'above', got {side!r}")
    leg = record.eigenvalues[sel]
    return leg[np.argsort(leg.imag / record.epsilon)]


@dataclass
class MatchedPair:
    pred_index: int
    comp_index: int
    predicted: complex
    computed: complex
    distance: float


@dataclass
class MatchReport:
    pairs: list
    unmatched_predicted: list
    unmatched_computed: list
    rms_rescaled_error: float


def match_spectra(predicted, computed, h, epsilon, cap=2.0):
    """Greedy nearest-neighbour pairing in the rescaled metric.

    The distance between a predicted and computed eigenvalue is
    (|dRe| + |dIm|) / (sqrt(eps) h); pairs are consumed globally nearest
    first, never exceeding the cap, and each point is used at most once.
    """
    if hasattr(predicted, "values") and not isinstance(predicted, np.ndarray):
        pvals = np.asarray(predicted.values(), dtype=complex)
    else:
        pvals = np.asarray(list(predicted), dtype=complex)
    cvals = np.asarray(list(computed), dtype=complex)
    scale = math.sqrt(epsilon) * h
    if scale <= 0.0:
        raise ValueError("h and epsilon must be positive")
    if len(pvals) == 0 or len(cvals) == 0:
        return MatchReport([], list(pvals), list(cvals), 0.0)
    diff = pvals[:, None] - cvals[None, :]
    dist = (np.abs(diff.real) + np.abs(diff.imag)) / scale
    free_p = np.ones(len(pvals), dtype=bool)
    free_c = np.ones(len(cvals), dtype=bool)
    pairs = []
    work = dist.copy()
    while True:
        i, j = np.unravel_index(np.argmin(work), work.shape)
        d = work[i, j]
        if not np.isfinite(d) or d > cap:
            break
        pairs.append(MatchedPair(int(i), int(j), complex(pvals[i]),
                                 complex(cvals[j]), float(d)))
        free_p[i] = False
        free_c[j] = False
        work[i, :] = np.inf
        work[:, j] = np.inf
    rms = math.sqrt(sum(p.distance ** 2 for p in pairs) / len(pairs)) \
        if pairs else 0.0
    return MatchReport(pairs,
                       [complex(v) for v in pvals[free_p]],
                       [complex(v) for v in cvals[free_c]],
                       rms)
