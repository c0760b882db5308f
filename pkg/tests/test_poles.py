import cmath

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh_tridiagonal

from siegert.poles import (NormalizationError, Parity, PoleClass, PoleSearchError, Rect, WindingMismatch,
                           classify, collect_poles, find_poles, make_pole, normalize_siegert, verify_count)
from siegert.potentials import PRESETS, DoubleBarrier, SquareWell, Tabulated
from siegert.scattering import SlicedModel

WELL = PRESETS["fig1"]
A = WELL.width / 2


def even_condition(k):
    q = cmath.sqrt(k * k - 2 * WELL.depth)
    return q * cmath.sin(q * A) + 1j * k * cmath.cos(q * A)


def odd_condition(k):
    q = cmath.sqrt(k * k - 2 * WELL.depth)
    return q * cmath.cos(q * A) - 1j * k * cmath.sin(q * A)


def analytic_roots(radius):
    """Square-well poles straight from the matching conditions, via mpmath."""
    out = []
    for cond in (even_condition, odd_condition):
        f = lambda z: cond(complex(z))
        for re in np.arange(-radius, radius + 0.01, 0.35):
            for im in np.arange(-radius, radius + 0.01, 0.35):
                try:
                    z = complex(mpmath.findroot(lambda t: mpmath.mpc(f(complex(t))), mpmath.mpc(re, im), tol=1e-24))
                except (ValueError, ZeroDivisionError):
                    continue
                if abs(z) <= radius and abs(f(z)) < 1e-9 * (1 + abs(z)) ** 2 and abs(z) > 1e-6:
                    if all(abs(z - w) > 1e-7 for w in out):
                        out.append(z)
    return np.array(out)


@pytest.fixture(scope="module")
def well_set():
    return collect_poles(WELL, 12.0)


def test_square_well_against_matching_conditions(well_set):
    for p in well_set:
        cond = even_condition if p.parity is Parity.EVEN else odd_condition
        other = odd_condition if p.parity is Parity.EVEN else even_condition
        scale = (1 + abs(p.k)) * abs(cmath.exp(-1j * cmath.sqrt(p.k**2 + 26) * A)) + 1
        assert abs(cond(p.k)) < 1e-9 * scale
        assert abs(other(p.k)) > 1e-3 * scale


def test_square_well_complete_set(well_set):
    ref = analytic_roots(8.0)
    found = well_set.k[np.abs(well_set.k) <= 8.0]
    assert len(found) == len(ref)
    for z in ref:
        assert np.min(np.abs(found - z)) < 1e-8


def test_square_well_bound_levels(well_set):
    kap = sorted(p.k.imag for p in well_set.of_class(PoleClass.BOUND))
    assert np.allclose(kap, [2.13336589, 3.66080397, 4.50455480, 4.95573757], atol=1e-7)
    anti = sorted(p.k.imag for p in well_set.of_class(PoleClass.ANTIBOUND))
    assert np.allclose(anti, [-4.79840670, -3.69614943], atol=1e-7)


def _grid_levels(n_inside):
    # well edges fall halfway between nodes, which keeps the scheme second order
    h = WELL.width / n_inside
    m = int(12.0 / h)
    x = (np.arange(-m, m) + 0.5) * h
    v = np.where(np.abs(x) < A, WELL.depth, 0.0)
    return np.sort(eigh_tridiagonal(1 / h**2 + v, -0.5 / h**2 * np.ones(x.size - 1),
                                    select="v", select_range=(WELL.depth, -1e-3))[0])


def test_bound_energies_against_hermitian_grid(well_set):
    coarse, fine = _grid_levels(2000), _grid_levels(4000)
    levels = (4 * fine - coarse) / 3
    E = np.sort([p.E.real for p in well_set.of_class(PoleClass.BOUND)])
    assert len(E) == len(levels)
    assert np.max(np.abs(E - levels)) < 1e-6


def test_mirror_symmetry(well_set):
    ks = well_set.k
    for k in ks:
        assert np.min(np.abs(ks + np.conj(k))) < 1e-9 * (1 + abs(k))
    for p in well_set.of_class(PoleClass.RESONANCE):
        m = [q for q in well_set if abs(q.k + np.conj(p.k)) < 1e-9][0]
        assert m.cls is PoleClass.ANTIRESONANCE and m.parity is p.parity
        assert m.residue == pytest.approx(np.conj(p.residue))


def test_normalization_residuals(well_set):
    assert max(p.norm_residual for p in well_set) < 1e-8
    db = find_poles(PRESETS["fig2"], Rect(-2, 2, -1.5, -0.002), n_grid=12)
    assert max(p.norm_residual for p in db) < 1e-8


def test_winding_certificate(well_set):
    assert well_set.winding_verified
    for box, n in well_set.counts:
        assert int(np.sum(box.contains(well_set.k))) == n


def test_normalize_siegert_sampled_state():
    m = SlicedModel(WELL, L=A)
    p = [q for q in collect_poles(WELL, 6.0) if q.cls is PoleClass.RESONANCE][0]
    # resample the state finely on [-L, L] inside the flat well
    x = np.linspace(-A, A, 4001)
    q = cmath.sqrt(p.k**2 + 26)
    psi = np.cos(q * x) if p.parity is Parity.EVEN else np.sin(q * x)
    out, res = normalize_siegert(psi, x, p.k)
    assert res < 1e-10
    # surface values agree with the transfer-matrix normalization up to the global sign
    assert abs(out[-1] * out[0]) == pytest.approx(abs(p.residue), rel=1e-8)
    assert m.L == pytest.approx(A)


def test_normalize_siegert_rejects_zero():
    with pytest.raises(NormalizationError):
        normalize_siegert(np.zeros(11), np.linspace(-1, 1, 11), 1 - 1j)


def test_double_barrier_first_resonance():
    ps = find_poles(PRESETS["fig2"], Rect(0.01, 1.0, -0.6, -0.002), n_grid=8)
    r = ps.resonances()[0]
    assert r.k == pytest.approx(0.413843 - 0.127553j, abs=2e-6)
    assert r.parity is Parity.EVEN
    # mirror completion
    assert any(abs(p.k - (-r.k.real + 1j * r.k.imag)) < 1e-12 for p in ps)


def test_fig3_classes():
    b = find_poles(PRESETS["fig3b"], Rect(0.01, 1.0, -0.6, -0.002), n_grid=8).resonances()[0]
    assert b.k_i > b.k_r and b.epsilon < 0 and b.abs_E > 0
    c = find_poles(PRESETS["fig3c"], Rect(-1, 1, -0.6, -0.002), n_grid=8)
    assert [p.cls for p in c] == [PoleClass.ANTIBOUND, PoleClass.ANTIBOUND]
    assert {p.parity for p in c} == {Parity.EVEN}


def test_asymmetric_potential_has_no_parity():
    x = np.linspace(-3, 4, 141)
    skew = Tabulated(tuple(x), tuple(np.where(np.abs(x - 0.5) < 3.4,
                                               -4 * np.exp(-x**2) + 1.5 * np.exp(-3 * (x - 1) ** 2), 0.0)))
    ps = collect_poles(skew, 4.0, im_min=-1.5, n_grid=8)
    assert len(ps) > 0
    assert all(p.parity is Parity.NONE for p in ps)
    assert max(p.norm_residual for p in ps) < 1e-8


@settings(max_examples=50)
@given(st.floats(-10, 10), st.floats(-10, 10))
def test_classify_quadrants(re, im):
    k = complex(re, im)
    if abs(k) < 1e-9 or (im > 0 and abs(re) >= 1e-9):
        with pytest.raises(ValueError):
            classify(k)
        return
    cls = classify(k)
    if abs(re) < 1e-9:
        assert cls is (PoleClass.BOUND if im > 0 else PoleClass.ANTIBOUND)
    else:
        assert cls is (PoleClass.RESONANCE if re > 0 else PoleClass.ANTIRESONANCE)


def test_search_region_validation():
    with pytest.raises(PoleSearchError):
        find_poles(WELL, Rect(-1, 1, -1, 1))
    with pytest.raises(ValueError):
        Rect(1, 0, 0, 1)


def test_verify_count_matches_mirror():
    box = Rect(0.5, 8, -3, -0.1)
    n = verify_count(WELL, box)
    assert n == verify_count(WELL, box.mirror()) == 3


def test_winding_mismatch_reports_box():
    err = WindingMismatch(Rect(0, 1, -1, 0), 2, 1)
    assert "2" in str(err) and isinstance(err, PoleSearchError)


def test_make_pole_square_well_residue():
    m = SlicedModel(WELL)
    ps = collect_poles(WELL, 6.0, model=m)
    r = ps.resonances()[0]
    again = make_pole(m, r.k)
    assert again.residue == pytest.approx(r.residue, rel=1e-12)
    # residue of the S-matrix route: Psi(L) Psi(-L) = i / D'(k)
    assert r.residue == pytest.approx(1j / m.determinant_derivative(r.k, order=4), rel=1e-8)
    assert m.determinant_derivative(r.k) == pytest.approx(m.determinant_derivative(r.k, order=4), rel=1e-7)
