"""Tests for mode shells, matrix assembly, and the 2-d spectrum path."""

import math

import numpy as np
import pytest

from torusband.errors import ConvergenceFailure, EmptyShell
from torusband.shell import (
    ModeShell,
    ShellMatrix,
    assemble_matrix,
    build_mode_shell,
    compute_spectrum,
    read_spectrum,
    write_spectrum,
)
from torusband.symbols import SymbolCoefficients, generate_random_symbol


def cosine_x_symbol():
    coeffs = np.zeros((3, 3, 3), dtype=complex)
    coeffs[0, 2, 1] = 0.5
    coeffs[0, 0, 1] = 0.5
    return SymbolCoefficients(1, 2.0, coeffs)


def brute_force_modes(h, e1, e2, span=40):
    out = []
    for j in range(-span, span + 1):
        for k in range(-span, span + 1):
            val = h * h * (j * j + k * k)
            if e1 <= val <= e2:
                out.append((j, k))
    out.sort()
    return out


def test_unit_circle_shell():
    shell = build_mode_shell(1.0, 0.5, 1.5)
    assert [tuple(m) for m in shell.modes] == [(-1, 0), (0, -1), (0, 1), (1, 0)]
    assert shell.count == 4


def test_shell_matches_brute_force():
    shell = build_mode_shell(1.0 / 20.0, 0.85, 1.0)
    got = [tuple(m) for m in shell.modes]
    assert got == brute_force_modes(1.0 / 20.0, 0.85, 1.0)


def test_shell_ordering_and_membership():
    rng = np.random.default_rng(2)
    for _ in range(5):
        h = float(rng.uniform(0.1, 0.5))
        e1 = float(rng.uniform(0.2, 0.6))
        e2 = e1 + float(rng.uniform(0.3, 0.8))
        shell = build_mode_shell(h, e1, e2)
        modes = [tuple(m) for m in shell.modes]
        assert modes == sorted(modes)
        assert len(set(modes)) == len(modes)
        for (j, k) in modes:
            assert e1 <= h * h * (j * j + k * k) <= e2
        assert modes == brute_force_modes(h, e1, e2)


def test_empty_shell_raises():
    with pytest.raises(EmptyShell):
        build_mode_shell(1.0, 0.1, 0.2)
    with pytest.raises(ValueError):
        build_mode_shell(-0.5, 0.5, 1.5)
    with pytest.raises(ValueError):
        build_mode_shell(0.5, 1.5, 0.5)


def test_assembly_epsilon_zero_is_real_diagonal():
    sym = generate_random_symbol(2, 2.0, 3)
    shell = build_mode_shell(0.25, 0.5, 2.0)
    mat = assemble_matrix(sym, shell, 0.0)
    a = mat.entries
    assert np.array_equal(a, np.diag(np.diag(a)))
    assert np.all(a.imag == 0.0)
    want = [0.25 ** 2 * (j * j + k * k) for (j, k) in shell.modes]
    assert np.allclose(np.diag(a).real, want, rtol=0.0, atol=0.0)


def test_assembly_single_mode_coupling():
    # cos x couples modes differing by (+-1, 0) with weight i eps / 2
    sym = cosine_x_symbol()
    shell = build_mode_shell(1.0, 0.5, 2.5)
    modes = [tuple(m) for m in shell.modes]
    eps = 0.3
    a = assemble_matrix(sym, shell, eps).entries
    for r, (j, k) in enumerate(modes):
        for c, (jt, kt) in enumerate(modes):
            diff = (j - jt, k - kt)
            want = 0.0 + 0.0j
            if r == c:
                want += j * j + k * k
            if diff in ((1, 0), (-1, 0)):
                want += 1j * eps * 0.5
            assert a[r, c] == pytest.approx(want, abs=1e-15)


def test_assembly_trace_formula():
    sym = generate_random_symbol(2, 2.0, 4)
    h = 1.0 / 10.0
    shell = build_mode_shell(h, 0.7, 1.2)
    eps = 0.05
    a = assemble_matrix(sym, shell, eps).entries
    q00 = sym.coeff(0, 0, 0)
    q10 = sym.coeff(1, 0, 0)
    q20 = sym.coeff(2, 0, 0)
    want = sum(h * h * (j * j + k * k)
               + 1j * eps * (q00 + q10 * h * j + q20 * h * k)
               for (j, k) in shell.modes)
    assert np.trace(a) == pytest.approx(want, rel=1e-13)


def test_assembly_entry_formula():
    # spot-check the full entry rule: symbol coefficients are taken at the
    # index difference and momentum terms use the column frequencies
    sym = generate_random_symbol(2, 2.0, 5)
    h = 1.0 / 6.0
    shell = build_mode_shell(h, 0.5, 1.5)
    eps = 0.2
    a = assemble_matrix(sym, shell, eps).entries
    modes = [tuple(m) for m in shell.modes]
    rng = np.random.default_rng(6)
    for _ in range(60):
        r, c = rng.integers(0, len(modes), size=2)
        j, k = modes[r]
        jt, kt = modes[c]
        dj, dk = j - jt, k - kt
        want = h * h * (j * j + k * k) if r == c else 0.0 + 0.0j
        if max(abs(dj), abs(dk)) <= sym.degree_F:
            want += 1j * eps * (sym.coeff(0, dj, dk)
                                + sym.coeff(1, dj, dk) * h * jt
                                + sym.coeff(2, dj, dk) * h * kt)
        assert a[r, c] == pytest.approx(want, abs=1e-15)


def test_assembly_beyond_band_limit_is_zero():
    sym = generate_random_symbol(1, 2.0, 7)
    shell = build_mode_shell(0.5, 0.25, 4.0)
    a = assemble_matrix(sym, shell, 0.1).entries
    modes = [tuple(m) for m in shell.modes]
    for r, (j, k) in enumerate(modes):
        for c, (jt, kt) in enumerate(modes):
            if r != c and max(abs(j - jt), abs(k - kt)) > 1:
                assert a[r, c] == 0.0


def test_spectrum_epsilon_zero_multiset():
    sym = generate_random_symbol(2, 2.0, 8)
    h = 1.0 / 20.0
    shell = build_mode_shell(h, 0.85, 1.0)
    mat = assemble_matrix(sym, shell, 0.0)
    rec = compute_spectrum(mat, backend="auto")
    want = np.sort([h * h * (j * j + k * k) for (j, k) in shell.modes])
    got = np.sort(rec.eigenvalues.real)
    assert np.max(np.abs(rec.eigenvalues.imag)) <= 1e-10 * want.max()
    assert np.max(np.abs(got - want)) <= 1e-10 * want.max()
    assert rec.rescaled is None


def test_spectrum_synthetic_two_by_two():
    # [[0, 1], [i eps, 0]] has eigenvalues +- sqrt(i eps)
    eps = 0.09
    shell = ModeShell(1.0, 0.5, 1.5, [(0, 1), (1, 0)])
    entries = np.array([[0.0, 1.0], [1j * eps, 0.0]], dtype=complex)
    mat = ShellMatrix(shell, eps, entries)
    rec = compute_spectrum(mat, backend="qr")
    root = np.sqrt(1j * eps)
    want = np.array(sorted([-root, root], key=lambda z: (z.real, z.imag)))
    assert np.allclose(rec.eigenvalues, want, atol=1e-12)


def test_spectrum_permutation_invariance():
    # the sorted spectrum may not depend on how the shell was ordered
    sym = generate_random_symbol(2, 2.0, 9)
    shell = build_mode_shell(1.0 / 5.0, 0.5, 1.5)
    assert shell.count >= 50
    mat = assemble_matrix(sym, shell, 0.1)
    rng = np.random.default_rng(10)
    perm = rng.permutation(shell.count)
    shuffled = ShellMatrix(shell, 0.1, mat.entries[np.ix_(perm, perm)])
    w1 = compute_spectrum(mat, backend="auto").eigenvalues
    w2 = compute_spectrum(shuffled, backend="auto").eigenvalues
    assert np.max(np.abs(w1 - w2)) <= 1e-8


def test_spectrum_trace_identity_random_symbols():
    h = 1.0 / 8.0
    shell = build_mode_shell(h, 0.6, 1.3)
    for seed in range(5):
        sym = generate_random_symbol(2, 2.0, 100 + seed)
        for eps in (h, 4 * h):
            mat = assemble_matrix(sym, shell, eps)
            rec = compute_spectrum(mat, backend="auto")
            gap = abs(np.sum(rec.eigenvalues) - np.trace(mat.entries))
            assert gap <= 1e-8 * shell.count * np.max(np.abs(mat.entries))


def test_spectrum_rescaled_and_residual():
    sym = generate_random_symbol(2, 2.0, 11)
    shell = build_mode_shell(1.0 / 6.0, 0.6, 1.4)
    eps = 0.07
    rec = compute_spectrum(assemble_matrix(sym, shell, eps))
    assert rec.eigenvalues.size == shell.count
    assert rec.rescaled.shape == (shell.count, 2)
    assert np.allclose(rec.rescaled[:, 0], rec.eigenvalues.real)
    assert np.allclose(rec.rescaled[:, 1], rec.eigenvalues.imag / eps)
    assert rec.residual_bound <= 1e-8


def test_spectrum_trace_guard_fires(monkeypatch):
    # the guard must reject a backend that returns a wrong eigenvalue set
    import torusband.shell as shell_mod
    from torusband.eig import EigResult

    def broken(a, backend="auto", tol=1e-12, max_iter=None):
        return EigResult(np.ones(a.shape[0], dtype=complex) * 123.0, 1, 0.0)

    monkeypatch.setattr(shell_mod.eig, "eigenvalues", broken)
    shell = ModeShell(1.0, 0.5, 1.5, [(0, 1), (1, 0)])
    mat = ShellMatrix(shell, 0.0, np.eye(2, dtype=complex))
    with pytest.raises(ConvergenceFailure):
        compute_spectrum(mat)


def test_spectrum_file_round_trip(tmp_path):
    sym = generate_random_symbol(2, 2.0, 12)
    h = 1.0 / 6.0
    shell = build_mode_shell(h, 0.6, 1.4)
    eps = h
    rec = compute_spectrum(assemble_matrix(sym, shell, eps))
    path = tmp_path / "spec.txt"
    write_spectrum(path, rec, sym=sym, shell=shell)
    back, meta = read_spectrum(path)
    assert back.h == rec.h and back.epsilon == rec.epsilon
    assert np.array_equal(back.eigenvalues, rec.eigenvalues)
    assert np.allclose(back.rescaled, rec.rescaled)
    assert meta["E1"] == "0.59999999999999998"
    assert meta["F"] == "2"
    assert meta["seed"] == "12"
    # rewriting the reread record reproduces the file byte for byte
    path2 = tmp_path / "spec2.txt"
    write_spectrum(path2, back, sym=sym, shell=shell)
    assert path.read_bytes() == path2.read_bytes()


def test_spectrum_file_epsilon_zero(tmp_path):
    sym = generate_random_symbol(1, 2.0, 13)
    shell = build_mode_shell(0.5, 0.25, 1.0)
    rec = compute_spectrum(assemble_matrix(sym, shell, 0.0))
    path = tmp_path / "real.txt"
    write_spectrum(path, rec)
    back, _ = read_spectrum(path)
    assert back.rescaled is None
    assert np.array_equal(back.eigenvalues, rec.eigenvalues)
