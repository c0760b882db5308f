"""
Local resonance line shapes built from pole positions only.

For a resonance pole k_res = k_r - i k_i with E_res = eps - i Gamma/2:

* Breit-Wigner: peak at eps, FWHM Gamma, normalized to peak value 1.
* single-pole profile: T = (k k_i)^2 / ((E - |E_res|)^2 + (k k_i)^2),
  peaked at |E_res| with FWHM Gamma sqrt(1 + 2 (k_i/k_r)^2).
* two anti-bound poles at -i k1, -i k2 of the same parity:
  T = E (k1 + k2)^2 / (2 (E - k1 k2 / 2)^2 + E (k1 + k2)^2).

Nothing here is fitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class ResonanceDescriptor:
    k_r: float
    k_i: float

    def __post_init__(self):
        if self.k_r == 0:
            raise ProfileError("profile undefined for axis pole (k_r = 0); use two_antibound_profile")
        if self.k_r < 0 or not self.k_i > 0:
            raise ProfileError("resonance descriptor needs k_r > 0 and k_i > 0")

    @classmethod
    def from_k(cls, k: complex) -> "ResonanceDescriptor":
        k = complex(k)
        return cls(k.real, -k.imag)

    @classmethod
    def from_energy(cls, E: complex) -> "ResonanceDescriptor":
        """From E_res = eps - i Gamma/2, taking the fourth-quadrant root."""
        k = np.sqrt(2 * complex(E))
        if k.imag > 0:
            k = -k
        if k.real < 0:
            k = -np.conj(k)
        return cls.from_k(k)

    @property
    def k(self) -> complex:
        return complex(self.k_r, -self.k_i)

    @property
    def epsilon(self) -> float:
        return (self.k_r**2 - self.k_i**2) / 2

    @property
    def gamma(self) -> float:
        return 2 * self.k_r * self.k_i

    @property
    def abs_E(self) -> float:
        return (self.k_r**2 + self.k_i**2) / 2

    @property
    def negative_position(self) -> bool:
        return self.k_i > self.k_r


def breit_wigner(epsilon: float, gamma: float, E):
    if not gamma > 0:
        raise ProfileError("Breit-Wigner width must be positive")
    E = np.asarray(E, dtype=float)
    hw2 = (gamma / 2) ** 2
    return hw2 / ((E - epsilon) ** 2 + hw2)


def single_resonance_profile(d: ResonanceDescriptor, E):
    E = np.asarray(E, dtype=float)
    if np.any(E <= 0):
        raise ProfileError("energies must be positive")
    # (k/k_r)(Gamma/2) collapses to k k_i
    w2 = 2 * E * d.k_i**2
    return w2 / ((E - d.abs_E) ** 2 + w2)


def fwhm_single(d: ResonanceDescriptor) -> float:
    return d.gamma * math.sqrt(1 + 2 * (d.k_i / d.k_r) ** 2)


def half_max_points_single(d: ResonanceDescriptor):
    """Closed-form half-maximum energies of the single-pole profile."""
    centre = d.abs_E + d.k_i**2
    half = d.k_i * math.sqrt(d.k_r**2 + 2 * d.k_i**2)
    return centre - half, centre + half


def two_antibound_profile(k1: float, k2: float, E):
    if not (k1 > 0 and k2 > 0):
        raise ProfileError("anti-bound momenta must be positive magnitudes")
    E = np.asarray(E, dtype=float)
    if np.any(E <= 0):
        raise ProfileError("energies must be positive")
    s2 = (k1 + k2) ** 2
    return E * s2 / (2 * (E - k1 * k2 / 2) ** 2 + E * s2)


def half_max_points_two_antibound(k1: float, k2: float):
    # 2 (E - p)^2 = E s2 with p = k1 k2 / 2 and s2 = (k1 + k2)^2
    p, s2 = k1 * k2 / 2, (k1 + k2) ** 2
    b = 4 * p + s2
    disc = math.sqrt(b * b - 16 * p * p)
    return (b - disc) / 4, (b + disc) / 4


def peak_position(d: ResonanceDescriptor) -> float:
    return d.abs_E


def measure_peak(func, lo: float, hi: float, n: int = 4001):
    """Locate the maximum of a 1D curve on [lo, hi]: (E_peak, T_peak)."""
    E = np.linspace(lo, hi, n)
    T = np.asarray(func(E))
    i = int(np.argmax(T))
    a, b = E[max(i - 1, 0)], E[min(i + 1, n - 1)]
    if b - a <= 0:
        return float(E[i]), float(T[i])
    res = minimize_scalar(lambda e: -float(func(np.array([e]))[0]), bounds=(a, b),
                          method="bounded", options={"xatol": 1e-12 * max(1.0, abs(E[i]))})
    if -res.fun >= T[i]:
        return float(res.x), float(-res.fun)
    return float(E[i]), float(T[i])


def measure_fwhm(func, lo: float, hi: float, n: int = 4001):
    """Numerical full width at half maximum of a single-peaked curve on [lo, hi].

    Returns (width, left, right, peak position, peak value).
    """
    e0, t0 = measure_peak(func, lo, hi, n)
    half = t0 / 2
    g = lambda e: float(func(np.array([e]))[0]) - half
    E = np.linspace(lo, e0, n)
    left_vals = np.asarray(func(E)) - half
    below = np.nonzero(left_vals < 0)[0]
    if below.size == 0:
        raise ProfileError("curve does not fall to half maximum left of the peak")
    j = below[-1]
    left = brentq(g, E[j], E[j + 1], xtol=1e-14)
    E = np.linspace(e0, hi, n)
    right_vals = np.asarray(func(E)) - half
    below = np.nonzero(right_vals < 0)[0]
    if below.size == 0:
        raise ProfileError("curve does not fall to half maximum right of the peak")
    j = below[0]
    right = brentq(g, E[j - 1], E[j], xtol=1e-14)
    return right - left, left, right, e0, t0
