"""Fourier lattice shells and the perturbed torus operator on them.

The operator -h^2 Lap + i eps Op(q) acts diagonally in frequency for eps = 0
and couples lattice modes (j, k) and (j - dj, k - dk) through the symbol
coefficient qhat(dj, dk; .) for eps > 0, the momentum slots of the symbol
evaluated at the column frequencies (h j~, h k~).  Restricting to the modes
whose unperturbed energy h^2 (j^2 + k^2) lies in an annulus [E1, E2] gives a
finite matrix whose spectrum clusters in a band of width O(eps) around the
energy window.
"""

from dataclasses import dataclass

import numpy as np

from . import eig
from .errors import ConvergenceFailure, EmptyShell


@dataclass
class ModeShell:
    """The lattice modes with h^2 (j^2 + k^2) in [e1, e2], in lexicographic
    (j, k) order."""

    h: float
    e1: float
    e2: float
    modes: np.ndarray

    @property
    def count(self):
        return int(self.modes.shape[0])


def build_mode_shell(h, e1, e2):
    """Enumerate the shell exactly; raises EmptyShell when no mode fits."""
    if not (h > 0.0):
        raise ValueError("h must be positive")
    if not (0.0 <= e1 <= e2):
        raise ValueError("need 0 <= E1 <= E2")
    jmax = int(np.floor(np.sqrt(e2) / h))
    js = np.arange(-jmax, jmax + 1)
    jj, kk = np.meshgrid(js, js, indexing="ij")
    energy = h * h * (jj * jj + kk * kk)
    mask = (energy >= e1) & (energy <= e2)
    modes = np.column_stack([jj[mask], kk[mask]])
    if modes.shape[0] == 0:
        raise EmptyShell(f"no lattice modes with h^2|j|^2 in [{e1}, {e2}] at h={h}")
    order = np.lexsort((modes[:, 1], modes[:, 0]))
    return ModeShell(float(h), float(e1), float(e2), modes[order])


@dataclass
class ShellMatrix:
    shell: ModeShell
    epsilon: float
    entries: np.ndarray


def assemble_matrix(sym, shell, epsilon):
    """The dense operator matrix on a mode shell.

    Row (j, k), column (j~, k~) holds i*eps times
    qhat0(j-j~, k-k~) + qhat1(...) h j~ + qhat2(...) h k~ whenever the
    offset lies in the symbol's band, plus the diagonal h^2 (j^2 + k^2).
    """
    h = shell.h
    modes = shell.modes
    n = shell.count
    f = sym.degree_F
    a = np.zeros((n, n), dtype=complex)
    diag = h * h * (modes[:, 0] ** 2 + modes[:, 1] ** 2).astype(float)
    a[np.arange(n), np.arange(n)] = diag
    if epsilon == 0.0:
        return ShellMatrix(shell, float(epsilon), a)

    # dense lookup from lattice coordinates to shell index
    jmax = int(np.max(np.abs(modes))) if n else 0
    span = 2 * (jmax + f) + 1
    offset = jmax + f
    table = np.full((span, span), -1, dtype=int)
    table[modes[:, 0] + offset, modes[:, 1] + offset] = np.arange(n)

    rows = np.arange(n)
    for dj in range(-f, f + 1):
        for dk in range(-f, f + 1):
            c0 = sym.coeff(0, dj, dk)
            c1 = sym.coeff(1, dj, dk)
            c2 = sym.coeff(2, dj, dk)
            if c0 == 0.0 and c1 == 0.0 and c2 == 0.0:
                continue
            tj = modes[:, 0] - dj
            tk = modes[:, 1] - dk
            cols = table[tj + offset, tk + offset]
            ok = cols >= 0
            if not np.any(ok):
                continue
            r = rows[ok]
            c = cols[ok]
            vals = c0 + c1 * (h * tj[ok]) + c2 * (h * tk[ok])
            a[r, c] += 1j * epsilon * vals
    return ShellMatrix(shell, float(epsilon), a)


@dataclass
class SpectrumRecord:
    h: float
    epsilon: float
    eigenvalues: np.ndarray
    residual_bound: float
    rescaled: np.ndarray | None


def compute_spectrum(mat, backend="auto", residual_probes=3, tol=1e-12):
    """Eigenvalues of a shell matrix, sorted by (Re, Im), with diagnostics.

    A trace identity guards the solve: the eigenvalue sum must match the
    matrix trace to 1e-8 * n * max|entry|, else ConvergenceFailure.  Up to
    residual_probes eigenpair residuals are estimated by single-shift
    inverse iteration and their maximum is reported.
    """
    a = mat.entries
    n = a.shape[0]
    result = eig.eigenvalues(a, backend=backend, tol=tol)
    w = result.eigenvalues
    order = np.lexsort((w.imag, w.real))
    w = w[order]
    max_entry = float(np.max(np.abs(a))) if n else 0.0
    trace_gap = abs(np.sum(w) - np.trace(a))
    if n and trace_gap > 1e-8 * n * max(max_entry, 1e-300):
        raise ConvergenceFailure(
            f"eigenvalue sum misses the trace by {trace_gap:.3e} "
            f"(allowed {1e-8 * n * max_entry:.3e})")
    resid = float("nan")
    if residual_probes > 0 and n > 0:
        scale = float(np.linalg.norm(a))
        idx = np.unique(np.linspace(0, n - 1, min(residual_probes, n)).astype(int))
        worst = 0.0
        ident = np.eye(n)
        for i in idx:
            lam = w[i]
            # one inverse-iteration solve from a fixed start vector gives an
            # eigenvector estimate good to roundoff for a simple eigenvalue
            v = np.full(n, 1.0 + 0.0j) / np.sqrt(n)
            shift = lam * (1.0 + 1e-12) + (1e-14 + 1e-14j) * max(scale, 1.0)
            for _ in range(2):
                try:
                    v = np.linalg.solve(a - shift * ident, v)
                except np.linalg.LinAlgError:
                    shift = lam * (1.0 + 1e-10) + (1e-12 + 1e-12j) * max(scale, 1.0)
                    v = np.linalg.solve(a - shift * ident, v)
                v /= np.linalg.norm(v)
            worst = max(worst, float(np.linalg.norm(a @ v - lam * v) /
                                     max(scale, 1e-300)))
        resid = worst
    rescaled = None
    if mat.epsilon > 0.0:
        rescaled = np.column_stack([w.real, w.imag / mat.epsilon])
    return SpectrumRecord(mat.shell.h, mat.epsilon, w, resid, rescaled)


def write_spectrum(path, record, sym=None, shell=None):
    """Spectrum table: '#' headers with the run parameters, then one
    (re, im, im_over_eps) row per eigenvalue at 17 significant digits."""
    lines = ["# torusband spectrum"]
    lines.append("# h = %.17g" % record.h)
    lines.append("# eps = %.17g" % record.epsilon)
    if shell is not None:
        lines.append("# E1 = %.17g" % shell.e1)
        lines.append("# E2 = %.17g" % shell.e2)
    if sym is not None:
        lines.append("# F = %d" % sym.degree_F)
        lines.append("# kappa = %.17g" % sym.decay_kappa)
        lines.append("# seed = %s" % ("none" if sym.seed is None else int(sym.seed)))
    lines.append("# residual_bound = %.17g" % record.residual_bound)
    lines.append("# columns: re im im_over_eps")
    eps = record.epsilon
    for z in record.eigenvalues:
        ratio = z.imag / eps if eps > 0.0 else float("nan")
        lines.append("%.17g %.17g %.17g" % (z.real, z.imag, ratio))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_spectrum(path):
    """Read a file written by write_spectrum.

    Returns (record, meta) where meta holds any E1/E2/F/kappa/seed headers.
    """
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
            if len(parts) != 3:
                raise ValueError(f"bad spectrum row: {line!r}")
            rows.append([float(p) for p in parts])
    if "h" not in meta or "eps" not in meta:
        raise ValueError(f"spectrum file {path} is missing h or eps header")
    h = float(meta["h"])
    eps = float(meta["eps"])
    w = np.array([complex(r[0], r[1]) for r in rows], dtype=complex)
    rescaled = None
    if eps > 0.0:
        rescaled = np.column_stack([w.real, w.imag / eps])
    resid = float(meta.get("residual_bound", "nan"))
    return SpectrumRecord(h, eps, w, resid, rescaled), meta
