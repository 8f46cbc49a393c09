"""Tests for ladder predictions, leg extraction, and spectrum matching."""

import math

import numpy as np
import pytest

from torusband.classical import RationalDirection
from torusband.errors import DegenerateMinimum
from torusband.ladder import (
    ROOT_I,
    LatticePrediction,
    extract_leg,
    harmonic_ladder,
    match_spectra,
    predict_lattice,
)
from torusband.model1d import Model1D, low_lying_spectrum, suggest_j_max
from torusband.shell import SpectrumRecord
from torusband.symbols import SymbolCoefficients, generate_random_symbol


def cosine_x_symbol():
    coeffs = np.zeros((3, 3, 3), dtype=complex)
    coeffs[0, 2, 1] = 0.5
    coeffs[0, 0, 1] = 0.5
    return SymbolCoefficients(1, 2.0, coeffs)


def record_from(eigs, h, eps):
    w = np.asarray(eigs, dtype=complex)
    resc = np.column_stack([w.real, w.imag / eps]) if eps > 0 else None
    return SpectrumRecord(h, eps, w, 0.0, resc)


def test_harmonic_ladder_base_rung():
    rungs = harmonic_ladder(2.0, 2.0, 0)
    assert len(rungs) == 1
    assert rungs[0] == pytest.approx(ROOT_I, abs=1e-15)
    assert rungs[0].real == pytest.approx(math.sqrt(0.5), rel=1e-14)
    assert rungs[0].imag == pytest.approx(math.sqrt(0.5), rel=1e-14)


def test_harmonic_ladder_gaps_are_constant():
    rungs = harmonic_ladder(3.7, 1.9, 6)
    gaps = np.diff(rungs)
    want = ROOT_I * math.sqrt(1.9 * 3.7)
    assert np.allclose(gaps, want, rtol=1e-14, atol=0.0)


def test_harmonic_ladder_rotated_oscillator():
    # the canonical damped oscillator D^2 + i x^2 quantizes at
    # e^{i pi/4} (2k+1): curvature 2 from the kinetic part, b = 2 from x^2
    rungs = harmonic_ladder(2.0, 2.0, 3)
    for k, r in enumerate(rungs):
        assert r == pytest.approx(ROOT_I * (2 * k + 1), rel=1e-14)


def test_harmonic_ladder_curvature_scaling():
    # halving the kinetic curvature costs exactly sqrt(2) in every rung
    full = np.asarray(harmonic_ladder(1.0, 2.0, 4))
    half = np.asarray(harmonic_ladder(1.0, 1.0, 4))
    assert np.allclose(full, math.sqrt(2.0) * half, rtol=1e-15, atol=0.0)


def test_harmonic_ladder_validates():
    with pytest.raises(ValueError):
        harmonic_ladder(0.0, 2.0, 3)
    with pytest.raises(ValueError):
        harmonic_ladder(1.0, -2.0, 3)
    with pytest.raises(ValueError):
        harmonic_ladder(1.0, 2.0, -1)


def test_harmonic_ladder_against_1d_truncation():
    # rescaled low-lying values of (hD)^2 + i(1 - cos x) approach
    # h * harmonicLadder(V''(0), 2): the 1-d solve is the oracle
    h = 0.005
    jm = suggest_j_max(h, 1.0, potential={0: 1.0, 1: -0.5, -1: -0.5},
                       target_abs_z=0.05)
    model = Model1D(h=h, epsilon=1.0,
                    potential={0: 1.0, 1: -0.5, -1: -0.5}, j_max=jm,
                    target_abs_z=0.05)
    z = low_lying_spectrum(model, 4, backend="lapack")
    z = z[np.argsort(z.imag)]
    rungs = harmonic_ladder(1.0, 2.0, 3)
    for k in range(4):
        assert abs(z[k] / h - rungs[k]) <= 10.0 * h * (2 * k + 1) ** 2


def test_predict_cosine_line():
    sym = cosine_x_symbol()
    d = RationalDirection(1, 0)
    h, eps = 0.05, 0.1
    pred = predict_lattice(sym, d, 1.0, h, eps, j_range=1, k_max=2)
    scale = math.sqrt(eps) * h
    # the t = pi minimum of cos t contributes b = -1 with curvature 1
    want00 = 1.0 - 1j * eps + scale * ROOT_I * math.sqrt(2.0) * 0.5
    assert pred.predictions[(0, 0)] == pytest.approx(want00, abs=1e-12)
    assert pred.ladder_prefactor == pytest.approx(scale * ROOT_I * math.sqrt(2.0),
                                                  abs=1e-12)
    # radius shifts by h jj and the flat energy is its square; the base rung
    # adds scale * Re(e^{i pi/4} sqrt(2)/2) = scale / 2 on the real axis
    for jj in (-1, 0, 1):
        a_val = (1.0 + h * jj) ** 2
        got = pred.predictions[(jj, 0)]
        assert got.real == pytest.approx(a_val + scale * 0.5, abs=1e-12)


def test_predict_rungs_increase_in_k():
    sym = cosine_x_symbol()
    pred = predict_lattice(sym, RationalDirection(1, 0), 1.0, 0.05, 0.1,
                           j_range=2, k_max=3)
    for jj in range(-2, 3):
        ims = [pred.predictions[(jj, k)].imag for k in range(4)]
        assert all(b > a for a, b in zip(ims, ims[1:]))
        gaps = np.diff([pred.predictions[(jj, k)] for k in range(4)])
        assert np.allclose(gaps, gaps[0], rtol=1e-12)
        # every rung leaves the anchor at 45 degrees exactly
        anchor = pred.predictions[(jj, 0)] - math.sqrt(0.1) * 0.05 \
            * ROOT_I * math.sqrt(2.0) * 0.5
        for k in range(4):
            offset = pred.predictions[(jj, k)] - anchor
            assert np.angle(offset) == pytest.approx(math.pi / 4.0, abs=1e-12)


def test_predict_scaling_identity():
    sym = cosine_x_symbol()
    d = RationalDirection(1, 0)
    p1 = predict_lattice(sym, d, 1.0, 0.05, 0.1, j_range=1, k_max=1)
    p2 = predict_lattice(sym, d, 1.0, 0.025, 0.05, j_range=1, k_max=1)
    ratio = p2.ladder_prefactor / p1.ladder_prefactor
    assert ratio == pytest.approx(0.5 ** 1.5, rel=1e-14)


def test_predict_warns_outside_window():
    sym = cosine_x_symbol()
    d = RationalDirection(1, 0)
    with pytest.warns(UserWarning):
        predict_lattice(sym, d, 1.0, 0.05, 1.0, j_range=1, k_max=1)
    with pytest.warns(UserWarning):
        predict_lattice(sym, d, 1.0, 0.05, 0.05 ** 2, j_range=1, k_max=1)


def test_predict_degenerate_direction_rejected():
    sym = cosine_x_symbol()
    # along (0, 1) the orbit average of cos x is constant: no well at all
    with pytest.raises(DegenerateMinimum):
        predict_lattice(sym, RationalDirection(0, 1), 1.0, 0.05, 0.1,
                        j_range=1, k_max=1)


def test_predict_values_ordering():
    sym = generate_random_symbol(2, 2.0, 14)
    pred = predict_lattice(sym, RationalDirection(1, 0), 1.0, 0.05, 0.1,
                           j_range=2, k_max=2)
    assert isinstance(pred, LatticePrediction)
    keys = sorted(pred.predictions.keys())
    vals = pred.values()
    assert np.array_equal(vals, [pred.predictions[k] for k in keys])


def test_extract_leg_empty_when_inside():
    eps = 0.1
    eigs = [1.0 + 1j * eps * y for y in (-0.5, 0.0, 0.7)]
    rec = record_from(eigs, 0.05, eps)
    assert extract_leg(rec, (-1.0, 1.0)).size == 0


def test_extract_leg_planted_outliers():
    eps = 0.1
    body = [0.9 + 1j * eps * y for y in np.linspace(-0.9, 0.9, 20)]
    out = [0.95 - 1.7j * eps, 1.0 - 1.4j * eps, 1.05 - 1.2j * eps]
    rec = record_from(body + out, 0.05, eps)
    leg = extract_leg(rec, (-1.0, 1.0))
    assert np.allclose(sorted(leg, key=lambda z: z.imag), sorted(out, key=lambda z: z.imag))
    assert list(np.round(leg.imag / eps, 6)) == [-1.7, -1.4, -1.2]
    # margin pushes the threshold outward
    assert extract_leg(rec, (-1.0, 1.0), margin=0.3).size == 2
    # upper side is symmetric
    up = [1.0 + 1.3j * eps]
    rec2 = record_from(body + up, 0.05, eps)
    assert np.allclose(extract_leg(rec2, (-1.0, 1.0), side="above"), up)


def test_extract_leg_needs_eps():
    rec = record_from([1.0 + 0.0j], 0.05, 0.0)
    with pytest.raises(ValueError):
        extract_leg(rec, (-1.0, 1.0))
    rec3 = record_from([1.0], 0.05, 0.1)
    with pytest.raises(ValueError):
        extract_leg(rec3, (-1.0, 1.0), side="left")


def test_match_identity():
    pts = np.array([1.0 + 0.1j, 1.1 + 0.2j, 1.2 + 0.05j])
    rep = match_spectra(pts, pts.copy(), h=0.05, epsilon=0.1)
    assert len(rep.pairs) == 3
    assert all(p.distance == 0.0 for p in rep.pairs)
    assert rep.rms_rescaled_error == 0.0
    assert rep.unmatched_predicted == [] and rep.unmatched_computed == []


def test_match_uniform_shift():
    h, eps = 0.05, 0.1
    scale = math.sqrt(eps) * h
    pts = np.array([1.0 + 0.1j, 1.1 + 0.2j, 1.3 + 0.4j])
    shifted = pts + 0.1 * scale * (1.0 + 1.0j)
    rep = match_spectra(pts, shifted, h=h, epsilon=eps)
    assert len(rep.pairs) == 3
    for p in rep.pairs:
        assert p.distance == pytest.approx(0.2, rel=1e-12)
    assert rep.rms_rescaled_error == pytest.approx(0.2, rel=1e-12)


def test_match_missing_point():
    h, eps = 0.05, 0.1
    pts = np.array([1.0 + 0.1j, 1.1 + 0.2j, 1.3 + 0.4j])
    rep = match_spectra(pts, pts[:-1].copy(), h=h, epsilon=eps)
    assert len(rep.pairs) == 2
    assert rep.unmatched_predicted == [complex(pts[-1])]
    assert rep.unmatched_computed == []


def test_match_respects_cap():
    h, eps = 0.05, 0.1
    scale = math.sqrt(eps) * h
    pts = np.array([1.0 + 0.0j])
    far = np.array([1.0 + 10.0 * scale * 1j])
    rep = match_spectra(pts, far, h=h, epsilon=eps, cap=2.0)
    assert rep.pairs == []
    assert len(rep.unmatched_predicted) == 1
    assert len(rep.unmatched_computed) == 1
    # a generous cap pairs them after all
    rep2 = match_spectra(pts, far, h=h, epsilon=eps, cap=20.0)
    assert len(rep2.pairs) == 1
    assert rep2.pairs[0].distance == pytest.approx(10.0, rel=1e-12)


def test_match_pairing_is_injective():
    rng = np.random.default_rng(15)
    h, eps = 0.05, 0.1
    scale = math.sqrt(eps) * h
    pts = rng.normal(size=12) + 1j * rng.normal(size=12)
    jitter = 0.05 * scale * (rng.normal(size=12) + 1j * rng.normal(size=12))
    rep = match_spectra(pts, (pts + jitter)[rng.permutation(12)], h=h,
                        epsilon=eps)
    pi = [p.pred_index for p in rep.pairs]
    ci = [p.comp_index for p in rep.pairs]
    assert len(set(pi)) == len(pi)
    assert len(set(ci)) == len(ci)
    assert len(rep.pairs) == 12
    assert all(p.distance >= 0.0 for p in rep.pairs)


def test_match_accepts_prediction_object():
    sym = cosine_x_symbol()
    pred = predict_lattice(sym, RationalDirection(1, 0), 1.0, 0.05, 0.1,
                           j_range=1, k_max=1)
    vals = pred.values()
    rep = match_spectra(pred, vals, h=0.05, epsilon=0.1)
    assert len(rep.pairs) == len(vals)
    assert rep.rms_rescaled_error == 0.0
