"""Band-limited random symbols on the phase space of the 2-torus.

A symbol here is a trigonometric polynomial in position with an affine
momentum dependence,

    q(x, y; xi, eta) = q0(x, y) + q1(x, y) * xi + q2(x, y) * eta,

each q_l carrying Fourier coefficients on the square [-F, F]^2.  Reality of
q is equivalent to the Hermitian symmetry qhat_l(-j, -k) == conj(qhat_l(j, k)).

The random draw damps coefficients away from the lattice diagonal by
exp(-kappa*|j-k|) and symmetrizes, so every generated symbol is real-valued
by construction.
"""

from dataclasses import dataclass, field

import math
import numpy as np

from .rng import SplitMix64

MAX_DEGREE = 8


@dataclass(frozen=True)
class PhasePoint:
    """A point (x, y; xi, eta) on the phase space T^2 x R^2.

    Positions are normalized into [0, 2*pi) on construction; momenta are
    kept as given.
    """

    x: float
    y: float
    xi: float
    eta: float

    def __post_init__(self):
        tau = 2.0 * math.pi
        object.__setattr__(self, "x", float(self.x) % tau)
        object.__setattr__(self, "y", float(self.y) % tau)
        object.__setattr__(self, "xi", float(self.xi))
        object.__setattr__(self, "eta", float(self.eta))


@dataclass
class SymbolCoefficients:
    """Fourier data of a band-limited symbol.

    coeffs is a complex array of shape (3, 2F+1, 2F+1) indexed as
    coeffs[l, j + F, k + F]; slot l = 0 is the position-only part and
    slots 1, 2 multiply xi and eta.  decay_kappa and seed are provenance
    metadata carried through output files.
    """

    degree_F: int
    decay_kappa: float
    coeffs: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        f = int(self.degree_F)
        if f < 0 or f > MAX_DEGREE:
            raise ValueError(f"degree_F must be in [0, {MAX_DEGREE}], got {f}")
        if not self.decay_kappa > 0.0:
            raise ValueError("decay_kappa must be positive")
        want = (3, 2 * f + 1, 2 * f + 1)
        arr = np.asarray(self.coeffs, dtype=complex)
        if arr.shape != want:
            raise ValueError(f"coeffs shape {arr.shape}, expected {want}")
        self.degree_F = f
        self.decay_kappa = float(self.decay_kappa)
        self.coeffs = arr

    @classmethod
    def from_terms(cls, degree_F, terms, decay_kappa=1.0, seed=None):
        """Build a symbol from a sparse {(l, j, k): value} mapping."""
        f = int(degree_F)
        arr = np.zeros((3, 2 * f + 1, 2 * f + 1), dtype=complex)
        for (l, j, k), val in terms.items():
            if abs(j) > f or abs(k) > f:
                raise ValueError(f"lattice index ({j}, {k}) outside [-{f}, {f}]^2")
            arr[l, j + f, k + f] = val
        return cls(f, decay_kappa, arr, seed)

    def coeff(self, l, j, k):
        f = self.degree_F
        return complex(self.coeffs[l, j + f, k + f])

    def sum_abs(self):
        return float(np.sum(np.abs(self.coeffs)))

    def combined(self, xi, eta):
        """Coefficients of the position-space polynomial at frozen momentum,
        qhat(j, k; xi, eta), as a (2F+1, 2F+1) array."""
        return self.coeffs[0] + xi * self.coeffs[1] + eta * self.coeffs[2]


def generate_random_symbol(degree_F, decay_kappa, seed):
    """Draw a random real band-limited symbol.

    For each slot l in (0, 1, 2) and each (j, k) traversed in row order over
    [-F, F]^2, an independent standard normal alpha is drawn from a seeded
    splitmix64/Box-Muller stream and damped to
    A_l(j,k) = exp(-kappa*|j-k|) * alpha.  The coefficient is the Hermitian
    symmetrization (A_l(j,k) + conj(A_l(-j,-k))) / 2, which makes the symbol
    real-valued.  The draw order is fixed, so a seed pins the symbol exactly.
    """
    f = int(degree_F)
    if f < 0 or f > MAX_DEGREE:
        raise ValueError(f"degree_F must be in [0, {MAX_DEGREE}], got {f}")
    if not decay_kappa > 0.0:
        raise ValueError("decay_kappa must be positive")
    stream = SplitMix64(seed)
    side = 2 * f + 1
    a = np.empty((3, side, side))
    for l in range(3):
        for j in range(-f, f + 1):
            for k in range(-f, f + 1):
                a[l, j + f, k + f] = math.exp(-decay_kappa * abs(j - k)) * stream.gaussian()
    coeffs = (a + np.conj(a[:, ::-1, ::-1])) / 2.0
    return SymbolCoefficients(f, decay_kappa, coeffs.astype(complex), int(seed))


def evaluate_raw(sym, point):
    """The unreduced coefficient sum at a phase point, as a complex number.

    For a Hermitian-symmetric symbol the imaginary part is pure roundoff,
    bounded by 1e-12 times the total coefficient mass.
    """
    f = sym.degree_F
    js = np.arange(-f, f + 1)
    phase = np.exp(1j * (np.outer(js, np.ones(2 * f + 1)) * point.x
                         + np.outer(np.ones(2 * f + 1), js) * point.y))
    q = sym.combined(point.xi, point.eta)
    return complex(np.sum(q * phase))


def evaluate_symbol(sym, point):
    """Evaluate the (real) symbol at a phase point."""
    return evaluate_raw(sym, point).real


def evaluate_position_grid(sym, x, y, xi, eta):
    """Evaluate on the outer grid of 1-d position arrays at a frozen momentum.

    Returns a real array of shape (len(x), len(y)).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))[:, None]
    y = np.atleast_1d(np.asarray(y, dtype=float))[None, :]
    f = sym.degree_F
    q = sym.combined(xi, eta)
    total = np.zeros((x.shape[0], y.shape[1]), dtype=complex)
    for j in range(-f, f + 1):
        for k in range(-f, f + 1):
            c = q[j + f, k + f]
            if c != 0.0:
                total = total + c * np.exp(1j * (j * x + k * y))
    return total.real


def write_symbol(path, sym):
    """Serialize a symbol to a plain text file (17 significant digits)."""
    f = sym.degree_F
    lines = ["# torusband symbol coefficients"]
    lines.append(f"# F = {f}")
    lines.append("# kappa = %.17g" % sym.decay_kappa)
    lines.append("# seed = %s" % ("none" if sym.seed is None else int(sym.seed)))
    lines.append("# columns: l j k re im")
    for l in range(3):
        for j in range(-f, f + 1):
            for k in range(-f, f + 1):
                c = sym.coeffs[l, j + f, k + f]
                lines.append("%d %d %d %.17g %.17g" % (l, j, k, c.real, c.imag))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_symbol(path):
    """Read a symbol file written by write_symbol; round-trips bit-exactly."""
    f = kappa = seed = None
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    key = key.strip()
                    val = val.strip()
                    if key == "F":
                        f = int(val)
                    elif key == "kappa":
                        kappa = float(val)
                    elif key == "seed":
                        seed = None if val == "none" else int(val)
                continue
            parts = line.split()
            if len(parts) != 5:
                raise ValueError(f"bad symbol record: {line!r}")
            l, j, k = int(parts[0]), int(parts[1]), int(parts[2])
            records.append((l, j, k, complex(float(parts[3]), float(parts[4]))))
    if f is None or kappa is None:
        raise ValueError(f"symbol file {path} is missing F or kappa header")
    arr = np.zeros((3, 2 * f + 1, 2 * f + 1), dtype=complex)
    for l, j, k, c in records:
        arr[l, j + f, k + f] = c
    return SymbolCoefficients(f, kappa, arr, seed)
