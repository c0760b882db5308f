"""
Data behind the three standard experiments.

* ``fig1``: square well V0 = -13, width pi/sqrt(2). Exact T(E) and a table
  pairing every transmission unity with the resonance pole whose |E_n|
  lies closest to it.
* ``fig2``: double barrier (beta, gamma, alpha) = (5/2, 0.8, 0.5). Exact T,
  the Breit-Wigner curve and the single-pole profile around the first peak.
* ``fig3``: the same barrier at gamma = 0.875, 0.885, 0.89, each against the
  single-pole or two-anti-bound profile, plus the poles nearest the axis.

The peak window of a pole is the interval between the half-maximum points
of its own closed-form profile. Curves are emitted over that window widened
by ``PLOT_PAD`` full widths on each side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .poles import Parity, PoleClass, PoleSet, Rect, collect_poles, find_poles
from .potentials import PRESETS, DoubleBarrier, SquareWell
from .profiles import (ResonanceDescriptor, breit_wigner, fwhm_single, half_max_points_single,
                       half_max_points_two_antibound, single_resonance_profile,
                       two_antibound_profile)
from .scattering import exact_transmission_function, transmission_exact

NEAR_AXIS_BOX = Rect(-1.0, 1.0, -0.6, -0.002)
FIG3_GAMMAS = (0.875, 0.885, 0.89)
PLOT_PAD = 1.0
E_FLOOR = 1e-6


@dataclass
class PeakModel:
    """The closed-form profile attached to the pole(s) nearest the axis."""

    kind: str  # "single" or "two_antibound"
    poles: list
    window: tuple
    descriptor: ResonanceDescriptor | None = None
    kappas: tuple = ()

    def profile(self, E):
        if self.kind == "single":
            return single_resonance_profile(self.descriptor, E)
        return two_antibound_profile(*self.kappas, E)

    @property
    def fwhm(self):
        return self.window[1] - self.window[0]

    @property
    def peak(self):
        if self.kind == "single":
            return self.descriptor.abs_E
        return self.kappas[0] * self.kappas[1] / 2


def peak_model(ps: PoleSet) -> PeakModel:
    """Single-pole profile for the lowest resonance, else the two lowest same-parity anti-bound poles."""
    res = sorted(ps.of_class(PoleClass.RESONANCE), key=lambda p: abs(p.k))
    if res:
        d = ResonanceDescriptor.from_k(res[0].k)
        return PeakModel("single", [res[0]], half_max_points_single(d), descriptor=d)
    ab = sorted(ps.of_class(PoleClass.ANTIBOUND), key=lambda p: abs(p.k))
    for i, a in enumerate(ab):
        for b in ab[i + 1:]:
            if a.parity is b.parity and a.parity is not Parity.NONE:
                k1, k2 = -a.k.imag, -b.k.imag
                return PeakModel("two_antibound", [a, b], half_max_points_two_antibound(k1, k2),
                                 kappas=(k1, k2))
    raise ValueError("no resonance and no same-parity anti-bound pair near the axis")


def plot_grid(window, n_points, pad=PLOT_PAD):
    lo, hi = window
    w = hi - lo
    return np.linspace(max(lo - pad * w, E_FLOOR), hi + pad * w, n_points)


@dataclass
class Fig1:
    E: np.ndarray
    T: np.ndarray
    table: list  # dicts: n, lambda, E_re, E_im, abs_E, k
    poles: PoleSet = field(repr=False, default=None)


def square_well_unities(well: SquareWell, E_max: float):
    """lambda_n = V0 + (n pi / width)^2 / 2 for every positive value up to E_max."""
    out = []
    n = 1
    while True:
        lam = well.depth + (n * math.pi / well.width) ** 2 / 2
        if lam > E_max:
            return out
        if lam > 0:
            out.append((n, lam))
        n += 1


def fig1(E_max=30.0, n_points=601, well: SquareWell | None = None, k_max=None) -> Fig1:
    well = well or PRESETS["fig1"]
    E = np.linspace(E_max / n_points, E_max, n_points)
    T = transmission_exact(well, E).T
    k_max = k_max or 1.5 * math.sqrt(2 * E_max)
    ps = collect_poles(well, k_max)
    res = ps.of_class(PoleClass.RESONANCE)
    table = []
    for n, lam in square_well_unities(well, E_max):
        p = min(res, key=lambda p: abs(p.abs_E - lam))
        table.append({"n": n, "lambda": lam, "E_re": p.E.real, "E_im": p.E.imag,
                      "abs_E": p.abs_E, "k": p.k})
    return Fig1(E, T, table, ps)


@dataclass
class PeakFigure:
    gamma: float
    E: np.ndarray
    T_exact: np.ndarray
    T_profile: np.ndarray
    T_bw: np.ndarray | None
    model: PeakModel
    poles: PoleSet = field(repr=False, default=None)
    exact: object = field(repr=False, default=None)


def peak_figure(potential: DoubleBarrier, n_points=400, box: Rect = NEAR_AXIS_BOX,
                with_bw=True) -> PeakFigure:
    ps = find_poles(potential, box, n_grid=8)
    model = peak_model(ps)
    E = plot_grid(model.window, n_points)
    exact = exact_transmission_function(potential, E)
    T = exact(E)
    bw = None
    if with_bw and model.kind == "single":
        bw = breit_wigner(model.descriptor.epsilon, model.descriptor.gamma, E)
    return PeakFigure(potential.gamma, E, T, model.profile(E), bw, model, ps, exact)


def fig2(n_points=400, potential: DoubleBarrier | None = None) -> PeakFigure:
    return peak_figure(potential or PRESETS["fig2"], n_points)


def fig3(n_points=400, gammas=FIG3_GAMMAS, base: DoubleBarrier | None = None) -> list:
    base = base or PRESETS["fig3a"]
    return [peak_figure(base.with_params(gamma=g), n_points, with_bw=False) for g in gammas]


def window_errors(fig: PeakFigure, n_points=400):
    """Sup-norm errors of the overlays against exact T over the peak window."""
    E = np.linspace(max(fig.model.window[0], E_FLOOR), fig.model.window[1], n_points)
    T = fig.exact(E)
    out = {"profile": float(np.max(np.abs(fig.model.profile(E) - T)))}
    if fig.model.kind == "single":
        d = fig.model.descriptor
        out["bw"] = float(np.max(np.abs(breit_wigner(d.epsilon, d.gamma, E) - T)))
    return out


def fwhm_report(fig: PeakFigure):
    from .profiles import measure_fwhm

    lo, hi = fig.E[0], fig.E[-1]
    width = measure_fwhm(fig.exact, lo, hi, 801)[0]
    closed = fwhm_single(fig.model.descriptor) if fig.model.kind == "single" else fig.model.fwhm
    return width, closed
