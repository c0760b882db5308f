import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from siegert.profiles import (ProfileError, ResonanceDescriptor, breit_wigner, fwhm_single,
                              half_max_points_single, half_max_points_two_antibound, measure_fwhm, measure_peak,
                              single_resonance_profile, two_antibound_profile)

pos = st.floats(0.02, 5.0)


@settings(max_examples=60, deadline=None)
@given(pos, pos)
def test_profile_peaks_at_modulus(kr, ki):
    assume(ki / kr < 4)
    d = ResonanceDescriptor(kr, ki)
    f = lambda e: single_resonance_profile(d, e)
    assert float(f(d.abs_E)) == pytest.approx(1.0, abs=1e-14)
    F = fwhm_single(d)
    e0, t0 = measure_peak(f, 1e-9, d.abs_E + 4 * F, 20001)
    assert e0 == pytest.approx(d.abs_E, rel=1e-6)
    assert t0 <= 1 + 1e-14


@settings(max_examples=60, deadline=None)
@given(pos, pos)
def test_fwhm_closed_form(kr, ki):
    assume(ki / kr < 4)
    d = ResonanceDescriptor(kr, ki)
    F = fwhm_single(d)
    w, lo, hi, _, _ = measure_fwhm(lambda e: single_resonance_profile(d, e), 1e-9, d.abs_E + 4 * F, 20001)
    assert w == pytest.approx(F, rel=5e-3)
    a, b = half_max_points_single(d)
    assert (b - a) == pytest.approx(F, rel=1e-12)
    assert single_resonance_profile(d, [a, b]) == pytest.approx([0.5, 0.5], abs=1e-12)


def _bw_gap(kr, ratio):
    d = ResonanceDescriptor(kr, ratio * kr)
    E = d.epsilon + np.linspace(-2, 2, 20001) * d.gamma
    return np.max(np.abs(single_resonance_profile(d, E) - breit_wigner(d.epsilon, d.gamma, E)))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 10))
def test_breit_wigner_limit_for_narrow_poles(kr):
    # the stated 1% bound at k_i/k_r = 0.01
    assert _bw_gap(kr, 0.01) < 1e-2


@pytest.mark.parametrize("ratio", [0.02, 0.01, 0.005, 0.001])
def test_breit_wigner_gap_shrinks_linearly(ratio):
    assert _bw_gap(1.0, ratio) / ratio == pytest.approx(1.0, abs=3 * ratio)


def test_two_antibound_is_product_of_axis_factors():
    # each anti-bound pole -i kappa contributes a phase arctan(-kappa / k) to the same channel;
    # T = sin^2 of their sum against an empty opposite channel
    k1, k2 = 0.13, 0.41
    E = np.linspace(1e-4, 2, 500)
    k = np.sqrt(2 * E)
    phase = np.arctan(-k1 / k) + np.arctan(-k2 / k)
    assert np.allclose(two_antibound_profile(k1, k2, E), np.sin(phase) ** 2, atol=1e-13)


def test_two_antibound_half_max_points():
    k1, k2 = 0.13, 0.41
    assert float(two_antibound_profile(k1, k2, k1 * k2 / 2)) == pytest.approx(1.0)
    a, b = half_max_points_two_antibound(k1, k2)
    assert two_antibound_profile(k1, k2, [a, b]) == pytest.approx([0.5, 0.5], abs=1e-12)


def test_descriptor_from_energy():
    d = ResonanceDescriptor.from_energy(3 - 0.5j)
    assert d.abs_E == pytest.approx(math.hypot(3, 0.5), abs=1e-12)
    assert d.abs_E == pytest.approx(3.0414, abs=5e-5)
    assert d.epsilon == pytest.approx(3) and d.gamma == pytest.approx(1.0)
    assert not d.negative_position
    assert ResonanceDescriptor(0.1, 0.3).negative_position


def test_profile_errors():
    with pytest.raises(ProfileError, match="axis pole"):
        ResonanceDescriptor(0.0, 0.5)
    with pytest.raises(ProfileError):
        ResonanceDescriptor(1.0, -0.5)
    with pytest.raises(ProfileError):
        single_resonance_profile(ResonanceDescriptor(1.0, 0.5), [0.0, 1.0])
    with pytest.raises(ProfileError):
        breit_wigner(1.0, 0.0, [1.0])
    with pytest.raises(ProfileError):
        two_antibound_profile(-0.1, 0.2, [1.0])
