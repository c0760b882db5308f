"""
Transmission rebuilt from Siegert poles alone.

Two routes are provided:

* the pole sum  t = 2k exp(-2ikL) sum_n Psi_n(L) Psi_n(-L) / (k_n - k)
* for symmetric potentials, the product of Blaschke phases,
  T = sin^2(Delta_even - Delta_odd).

Both are truncated to |k_n| <= k_max. Truncation error is estimated from
the next shell k_max < |k_n| <= SHELL_RATIO * k_max, so the pole set passed
in has to reach that far when an estimate is requested.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .poles import Parity, Pole, PoleClass, PoleSet
from .potentials import Symmetry

SHELL_RATIO = 1.5
K_MAX_FACTOR = 4.0


class ExpansionError(ValueError):
    pass


def _momentum(E):
    E = np.asarray(E, dtype=float)
    if np.any(E <= 0):
        raise ExpansionError("energies must be positive")
    return E, np.sqrt(2.0 * E)


def default_k_max(E) -> float:
    return K_MAX_FACTOR * float(np.sqrt(2.0 * np.max(E)))


def delta_pair(pole: Pole, E):
    """Phase of one resonance / anti-resonance pair, continuous in E.

    atan2((k/k_r)(Gamma/2), |E_n| - E) in (0, pi); note (k/k_r)(Gamma/2) = k k_i.
    """
    if pole.cls is not PoleClass.RESONANCE:
        raise ExpansionError("delta_pair needs a resonance pole; use delta_axis on the axis")
    E, k = _momentum(E)
    return np.arctan2(k * pole.k_i, pole.abs_E - E)


def delta_axis(pole: Pole, E):
    """arctan(Im k_n / k): positive for bound, negative for anti-bound poles."""
    if not pole.on_axis:
        raise ExpansionError("delta_axis needs a bound or anti-bound pole")
    E, k = _momentum(E)
    return np.arctan(pole.k.imag / k)


def blaschke_pair(k_n, k):
    """Direct (k + k_n)/(k - k_n) * (k - conj k_n)/(k + conj k_n)."""
    k = np.asarray(k, dtype=complex)
    return (k + k_n) / (k - k_n) * (k - np.conj(k_n)) / (k + np.conj(k_n))


def blaschke_axis(k_n, k):
    k = np.asarray(k, dtype=complex)
    return (k + k_n) / (k - k_n)


def pole_phase(pole: Pole, E):
    """Phase contributed by a pole to its parity channel (zero for anti-resonances,
    whose share is already inside their resonance partner)."""
    if pole.cls is PoleClass.RESONANCE:
        return delta_pair(pole, E)
    if pole.on_axis:
        return delta_axis(pole, E)
    return np.zeros(np.shape(E))


@dataclass
class PhaseAccumulator:
    delta_plus: np.ndarray
    delta_minus: np.ndarray
    n_plus: int
    n_minus: int

    @property
    def T(self):
        return np.sin(self.delta_plus - self.delta_minus) ** 2


def accumulate(poles, E) -> PhaseAccumulator:
    E = np.asarray(E, dtype=float)
    plus = np.zeros(E.shape)
    minus = np.zeros(E.shape)
    n_plus = n_minus = 0
    for p in poles:
        if p.cls is PoleClass.ANTIRESONANCE:
            continue
        if p.parity is Parity.EVEN:
            plus = plus + pole_phase(p, E)
            n_plus += 1
        elif p.parity is Parity.ODD:
            minus = minus + pole_phase(p, E)
            n_minus += 1
        else:
            raise ExpansionError("product formula needs even/odd parity on every pole")
    return PhaseAccumulator(plus, minus, n_plus, n_minus)


def _split(ps: PoleSet, k_max):
    inner = [p for p in ps.poles if abs(p.k) <= k_max]
    k_next = SHELL_RATIO * k_max
    if ps.radius is not None and ps.radius < k_next * (1 - 1e-12):
        raise ExpansionError(
            f"pole set covers |k| <= {ps.radius:.4g}; the estimate needs {k_next:.4g}")
    shell = [p for p in ps.poles if k_max < abs(p.k) <= k_next]
    return inner, shell, k_next


def _tail_factor(k_max, k_next):
    # tail beyond k_max ~ shell * k_next / (k_next - k_max) for terms falling like 1/|k_n|^2
    return k_next / (k_next - k_max)


def _phase_tail_bound(shell, E):
    """Largest |partial sum| of the signed shell phases, poles taken outward.

    Successive resonances alternate in parity, so the omitted phase
    difference is an alternating series bounded by this quantity.
    """
    acc = np.zeros(E.shape)
    worst = np.zeros(E.shape)
    for p in sorted(shell, key=lambda p: abs(p.k)):
        if p.cls is PoleClass.ANTIRESONANCE:
            continue
        sign = 1.0 if p.parity is Parity.EVEN else -1.0
        acc = acc + sign * pole_phase(p, E)
        worst = np.maximum(worst, np.abs(acc))
    return worst


def transmission_product(ps: PoleSet, E, k_max=None, return_estimate=False):
    """T = sin^2(Delta_+ - Delta_-) over poles with |k_n| <= k_max."""
    if ps.potential.parity() is not Symmetry.SYMMETRIC:
        raise ExpansionError("product formula is only available for symmetric potentials")
    E, _ = _momentum(E)
    k_max = default_k_max(E) if k_max is None else k_max
    if not return_estimate:
        return accumulate([p for p in ps.poles if abs(p.k) <= k_max], E).T
    inner, shell, k_next = _split(ps, k_max)
    T = accumulate(inner, E).T
    return T, _phase_tail_bound(shell, E)


def _partial_sum(poles, k, L):
    if not poles:
        return np.zeros(k.shape, dtype=complex)
    kn = np.array([p.k for p in poles])
    res = np.array([p.residue for p in poles])
    if np.any(np.min(np.abs(kn[None, :] - k[:, None]), axis=1) < 1e-8):
        raise ExpansionError("energy collides with a pole on the real axis")
    return 2 * k * np.exp(-2j * k * L) * np.sum(res[None, :] / (kn[None, :] - k[:, None]), axis=1)


def _averaged_sum(poles, k, L):
    # Terms at the edge points x = +-L do not decay; successive partial sums
    # straddle the limit, so average the sums with and without the outermost
    # resonance pair.
    full = _partial_sum(poles, k, L)
    off = [p for p in poles if not p.on_axis]
    if not off:
        return full
    top = max(off, key=lambda p: (abs(p.k), p.k.real))
    mirror = complex(-top.k.real, top.k.imag)
    rest = [p for p in poles
            if not (abs(p.k - top.k) < 1e-10 * (1 + abs(top.k)) or abs(p.k - mirror) < 1e-10 * (1 + abs(top.k)))]
    return 0.5 * (full + _partial_sum(rest, k, L))


def transmission_sum(ps: PoleSet, E, k_max=None, return_estimate=False):
    """Complex t from the pole sum over |k_n| <= k_max (T is abs(t)**2)."""
    E, k = _momentum(E)
    k_max = default_k_max(E) if k_max is None else k_max
    for p in ps.poles:
        if p.surf_left is None or p.surf_right is None:
            raise ExpansionError("pole lacks normalized surface amplitudes")
    if not return_estimate:
        return _averaged_sum([p for p in ps.poles if abs(p.k) <= k_max], k, ps.L)
    inner, shell, k_next = _split(ps, k_max)
    t = _averaged_sum(inner, k, ps.L)
    t_next = _averaged_sum(inner + shell, k, ps.L)
    est = np.abs(t - t_next) * (np.abs(t) + np.abs(t_next))
    return t, _tail_factor(k_max, k_next) * est


@dataclass
class Reconstruction:
    E: np.ndarray
    T_exact: np.ndarray
    T_product: np.ndarray | None
    T_sum: np.ndarray
    t_sum: np.ndarray
    est_product: np.ndarray | None
    est_sum: np.ndarray
    k_max: float

    @property
    def estimate(self):
        if self.est_product is None:
            return self.est_sum
        return self.est_product + self.est_sum


def reconstruct(potential, E, k_max=None, poles: PoleSet | None = None, **search) -> Reconstruction:
    """Exact, product and sum transmission on one grid, sharing one pole set."""
    from .poles import collect_poles
    from .scattering import transmission_exact

    E, _ = _momentum(E)
    k_max = default_k_max(E) if k_max is None else k_max
    if poles is None:
        poles = collect_poles(potential, SHELL_RATIO * k_max, **search)
    T_exact = transmission_exact(potential, E, L=poles.L).T
    t, est_s = transmission_sum(poles, E, k_max, return_estimate=True)
    if potential.parity() is Symmetry.SYMMETRIC:
        T_p, est_p = transmission_product(poles, E, k_max, return_estimate=True)
    else:
        T_p = est_p = None
    return Reconstruction(E, T_exact, T_p, np.abs(t) ** 2, t, est_p, est_s, k_max)
