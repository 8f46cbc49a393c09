"""Dense complex eigenvalue and singular value kernels.

The in-house path reduces to upper Hessenberg form with Householder
reflectors and runs an implicit single-shift QR iteration with Wilkinson
shifts and subdiagonal deflation.  The smallest singular value comes from
inverse iteration on B*B driven by an in-house Householder QR factorization,
with a residual certificate that bounds the distance to the true value.

For large matrices a dispatcher can hand the eigenvalue work to LAPACK
(numpy) behind the same interface; every unit test of the kernels runs
against the in-house path.
"""

from dataclasses import dataclass

import math
import numpy as np

from .errors import ConvergenceFailure
from .rng import SplitMix64


@dataclass
class EigResult:
    eigenvalues: np.ndarray
    iterations: int
    max_residual: float


def hessenberg_reduce(a):
    """Unitary reduction to upper Hessenberg form.

    Returns (h, q) with a = q @ h @ q*.  The similarity transform q is the
    accumulated product of the Householder reflectors, kept so callers can
    verify the reduction.
    """
    h = np.array(a, dtype=complex)
    n = h.shape[0]
    if h.shape != (n, n):
        raise ValueError("matrix must be square")
    q = np.eye(n, dtype=complex)
    for k in range(n - 2):
        x = h[k + 1:, k]
        nx = np.linalg.norm(x)
        if nx == 0.0:
            continue
        alpha = -nx if x[0] == 0.0 else -np.exp(1j * np.angle(x[0])) * nx
        v = x.copy()
        v[0] -= alpha
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        v /= nv
        h[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return h, q


def _wilkinson_shift(a, b, c, d):
    # eigenvalue of [[a, b], [c, d]] closest to d
    half = (a - d) / 2.0
    disc = np.sqrt(half * half + b * c)
    e1 = d + half + disc
    e2 = d + half - disc
    return e1 if abs(e1 - d) <= abs(e2 - d) else e2


def qr_eigenvalues(hess, tol=1e-12, max_iter=None):
    """Eigenvalues of an upper Hessenberg matrix by implicit shifted QR.

    A subdiagonal entry deflates when it drops below tol times the sum of
    the magnitudes of its diagonal neighbours.  max_iter caps the total
    number of QR sweeps (default 100 per dimension); exceeding it raises
    ConvergenceFailure.  Iteration and deflation-residual counts are
    reported on the result.
    """
    h = np.array(hess, dtype=complex)
    n = h.shape[0]
    if n == 0:
        return EigResult(np.zeros(0, dtype=complex), 0, 0.0)
    if max_iter is None:
        max_iter = 100 * n
    fro = float(np.linalg.norm(h))
    sweeps = 0
    since_deflation = 0
    max_resid = 0.0

    def negligible(i):
        d = abs(h[i - 1, i - 1]) + abs(h[i, i])
        if d == 0.0:
            d = fro if fro > 0.0 else 1.0
        return abs(h[i, i - 1]) <= tol * d, abs(h[i, i - 1]) / d

    m = n - 1
    while m > 0:
        # find the start of the trailing unreduced block [l..m]
        l = m
        split = False
        while l > 0:
            small, ratio = negligible(l)
            if small:
                max_resid = max(max_resid, ratio)
                h[l, l - 1] = 0.0
                split = True
                break
            l -= 1
        if split and l == m:
            m -= 1
            since_deflation = 0
            continue
        if sweeps >= max_iter:
            raise ConvergenceFailure(
                f"QR iteration did not deflate within {max_iter} sweeps "
                f"(block [{l}, {m}])")
        sweeps += 1
        since_deflation += 1
        if since_deflation % 12 == 0:
            # exceptional shift to break a stuck cycle
            mu = h[m, m] + 0.75 * abs(h[m, m - 1])
        else:
            mu = _wilkinson_shift(h[m - 1, m - 1], h[m - 1, m],
                                  h[m, m - 1], h[m, m])
        # implicit single-shift bulge chase over the active block
        x = h[l, l] - mu
        y = h[l + 1, l]
        for k in range(l, m):
            r = math.hypot(abs(x), abs(y))
            if r != 0.0:
                cx = x / r
                cy = y / r
                lo = max(0, k - 1)
                hi = min(n, k + 3)
                rk = h[k, lo:].copy()
                rk1 = h[k + 1, lo:].copy()
                h[k, lo:] = np.conj(cx) * rk + np.conj(cy) * rk1
                h[k + 1, lo:] = -cy * rk + cx * rk1
                ck = h[:hi, k].copy()
                ck1 = h[:hi, k + 1].copy()
                h[:hi, k] = cx * ck + cy * ck1
                h[:hi, k + 1] = -np.conj(cy) * ck + np.conj(cx) * ck1
            if k < m - 1:
                x = h[k + 1, k]
                y = h[k + 2, k]
    return EigResult(np.diag(h).copy(), sweeps, max_resid)


def eigenvalues(a, backend="auto", tol=1e-12, max_iter=None):
    """All eigenvalues of a dense complex matrix.

    backend 'qr' runs the in-house Hessenberg + shifted-QR pair, 'lapack'
    defers to numpy, and 'auto' picks the in-house path for small matrices.
    The returned EigResult carries iteration diagnostics only for the
    in-house path (nan residual otherwise).
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if backend == "auto":
        backend = "qr" if n <= 150 else "lapack"
    if backend == "qr":
        h, _ = hessenberg_reduce(a)
        return qr_eigenvalues(h, tol=tol, max_iter=max_iter)
    if backend == "lapack":
        try:
            w = np.linalg.eigvals(a)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceFailure(f"eigenvalue backend failed: {exc}")
        return EigResult(w, 0, float("nan"))
    raise ValueError(f"unknown backend {backend!r}")


def householder_qr(a):
    """QR factorization; returns (reflectors, r) with a = Q r.

    Q is held implicitly as the list of unit Householder vectors; see
    apply_q / apply_q_star.
    """
    r = np.array(a, dtype=complex)
    m, n = r.shape
    vs = []
    for k in range(min(m, n)):
        x = r[k:, k]
        nx = np.linalg.norm(x)
        if nx == 0.0:
            vs.append(None)
            continue
        alpha = -nx if x[0] == 0.0 else -np.exp(1j * np.angle(x[0])) * nx
        v = x.copy()
        v[0] -= alpha
        nv = np.linalg.norm(v)
        if nv == 0.0:
            vs.append(None)
            continue
        v /= nv
        r[k:, k:] -= 2.0 * np.outer(v, v.conj() @ r[k:, k:])
        r[k + 1:, k] = 0.0
        vs.append(v)
    return vs, r


def apply_q_star(vs, b):
    """Q* b for the implicit Q of householder_qr."""
    y = np.array(b, dtype=complex)
    for k, v in enumerate(vs):
        if v is not None:
            y[k:] -= 2.0 * v * (v.conj() @ y[k:])
    return y


def apply_q(vs, b):
    """Q b for the implicit Q of householder_qr."""
    y = np.array(b, dtype=complex)
    for k in range(len(vs) - 1, -1, -1):
        v = vs[k]
        if v is not None:
            y[k:] -= 2.0 * v * (v.conj() @ y[k:])
    return y


def solve_upper(r, b):
    """Back substitution with an upper triangular matrix."""
    n = r.shape[0]
    x = np.zeros(n, dtype=complex)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - r[i, i + 1:] @ x[i + 1:]) / r[i, i]
    return x


def solve_lower(l, b):
    """Forward substitution with a lower triangular matrix."""
    n = l.shape[0]
    x = np.zeros(n, dtype=complex)
    for i in range(n):
        x[i] = (b[i] - l[i, :i] @ x[:i]) / l[i, i]
    return x


def singular_min(a, tol=1e-6, max_iter=500):
    """Smallest singular value of a dense complex matrix, verified.

    Inverse iteration on B*B through an in-house QR factorization of B.
    The iterate is accepted once the normal-matrix residual certifies the
    Rayleigh quotient to relative accuracy tol; if plain inverse iteration
    stalls (clustered singular values), a few Rayleigh-quotient iterations
    on the explicit normal matrix finish the job.
    """
    b = np.asarray(a, dtype=complex)
    n = b.shape[0]
    if b.shape != (n, n):
        raise ValueError("matrix must be square")
    if n == 0:
        raise ValueError("matrix must be nonempty")
    scale = float(np.linalg.norm(b))
    if scale == 0.0:
        return 0.0
    vs, r = householder_qr(b)
    diag = np.abs(np.diag(r))
    if np.min(diag) == 0.0:
        # exactly rank deficient
        return 0.0

    stream = SplitMix64(0x5EED)
    v = np.array([complex(stream.gaussian(), stream.gaussian())
                  for _ in range(n)])
    v /= np.linalg.norm(v)
    bh = b.conj().T
    sigma2 = None
    for _ in range(max_iter):
        # w = (B* B)^{-1} v  via  B* y = v,  B w = y
        y = apply_q(vs, solve_lower(r.conj().T, v))
        w = solve_upper(r, apply_q_star(vs, y))
        nw = np.linalg.norm(w)
        if nw == 0.0 or not np.isfinite(nw):
            break
        v = w / nw
        bv = b @ v
        sigma2 = float(np.real(bv.conj() @ bv))
        resid = float(np.linalg.norm(bh @ bv - sigma2 * v))
        if resid <= tol * sigma2:
            return math.sqrt(sigma2)
    # stalled: Rayleigh quotient iteration on the explicit normal matrix
    m = bh @ b
    lam = sigma2 if sigma2 is not None else float(np.min(diag)) ** 2
    for _ in range(60):
        shift = lam * (1.0 + 1e-14) + 1e-300
        try:
            w = np.linalg.solve(m - shift * np.eye(n), v)
        except np.linalg.LinAlgError:
            w = np.linalg.solve(m - shift * (1.0 + 1e-10) * np.eye(n), v)
        nw = np.linalg.norm(w)
        if nw == 0.0 or not np.isfinite(nw):
            break
        v = w / nw
        lam = float(np.real(v.conj() @ (m @ v)))
        resid = float(np.linalg.norm(m @ v - lam * v))
        if lam > 0.0 and resid <= tol * lam:
            return math.sqrt(lam)
    raise ConvergenceFailure(
        "inverse iteration for the smallest singular value did not certify "
        f"within {max_iter} steps")
