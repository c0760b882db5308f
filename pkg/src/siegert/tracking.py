"""
Continuation of poles along a one-parameter family of potentials.

Off-axis poles are followed by a linear predictor and a Newton corrector on
D(k; p). The step halves whenever Newton needs more than ``MAX_NEWTON``
iterations or lands too far from the prediction. Poles on the imaginary axis
are followed with a sign-change scan of the real function D(is), which stays
reliable near the branch point where a resonance and its mirror merge.

Events found by :func:`detect_events` are bracketed by bisection on the
parameter:

* BisectorCrossing: k_i - k_r changes sign on a resonance branch.
* Coalescence: a resonance / anti-resonance pair turns into two anti-bound
  poles. Decided by whether the extremum of D(is) between them crosses zero.
* BoundStateBirth: an axis pole passes through k = 0, seen as a sign change
  of the real number D(0).
* ClassChange: classify() differs between neighbouring samples.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .poles import AXIS_TOL, Pole, PoleClass, classify
from .potentials import Potential
from .scattering import DEFAULT_SLICES, SlicedModel

MAX_NEWTON = 5
REFINE_TOL = 1e-5
MIRROR_CHECK_EVERY = 10


class TrackingError(RuntimeError):
    pass


class EventKind(enum.Enum):
    BISECTOR_CROSSING = "BisectorCrossing"
    COALESCENCE = "Coalescence"
    BOUND_STATE_BIRTH = "BoundStateBirth"
    CLASS_CHANGE = "ClassChange"


@dataclass(frozen=True)
class Event:
    kind: EventKind
    lo: float
    hi: float
    branch: str
    detail: str = ""

    @property
    def width(self):
        return self.hi - self.lo


@dataclass(frozen=True)
class TrackedPole:
    branch: str
    k: complex

    @property
    def cls(self) -> PoleClass:
        return classify(self.k)

    @property
    def E(self) -> complex:
        return self.k * self.k / 2

    @property
    def gamma(self) -> float:
        return -2 * self.k.real * self.k.imag if self.cls is PoleClass.RESONANCE else 0.0


@dataclass
class Sample:
    value: float
    poles: list

    def branch(self, name):
        for p in self.poles:
            if p.branch == name:
                return p
        return None


@dataclass
class Trajectory:
    family: Potential
    name: str
    samples: list = field(default_factory=list)
    events: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    n_slices: int = DEFAULT_SLICES
    step: float = 0.0

    @property
    def values(self):
        return np.array([s.value for s in self.samples])

    def branch(self, name):
        """(values, k) along one branch."""
        vals, ks = [], []
        for s in self.samples:
            p = s.branch(name)
            if p is not None:
                vals.append(s.value)
                ks.append(p.k)
        return np.array(vals), np.array(ks, dtype=complex)

    @property
    def branches(self):
        seen = []
        for s in self.samples:
            for p in s.poles:
                if p.branch not in seen:
                    seen.append(p.branch)
        return seen

    def model(self, value) -> SlicedModel:
        return SlicedModel(self.family.with_params(**{self.name: float(value)}), None, self.n_slices)


# ---------------------------------------------------------------- helpers

def _newton(model, k, maxiter=MAX_NEWTON):
    """Scalar Newton; returns (k, converged) after at most ``maxiter`` steps."""
    for _ in range(maxiter):
        h = 1e-6 * (1 + abs(k))
        f, fp, fm = model.determinant(np.array([k, k + h, k - h]))
        slope = (fp - fm) / (2 * h)
        if not np.isfinite(slope) or slope == 0:
            return k, False
        step = f / slope
        k = k - step
        if abs(step) < 1e-13 * (1 + abs(k)):
            return complex(k), True
    return complex(k), False


def _axis_f(model):
    return lambda s: float(model.determinant(1j * s).real)


def _axis_roots(model, lo, hi, n=200):
    """Zeros of D(is) on [lo, hi], including close pairs hidden between grid points."""
    f = _axis_f(model)
    s = np.linspace(lo, hi, n)
    v = model.determinant(1j * s).real
    roots = []
    for i in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
        roots.append(brentq(f, s[i], s[i + 1], xtol=1e-15, rtol=1e-15))
    # a local extremum of |f| without sign change may still dip through zero
    for i in range(1, n - 1):
        if np.sign(v[i - 1]) == np.sign(v[i]) == np.sign(v[i + 1]) != 0 and abs(v[i]) < min(abs(v[i - 1]), abs(v[i + 1])):
            sg = np.sign(v[i])
            res = minimize_scalar(lambda t: sg * f(t), bounds=(s[i - 1], s[i + 1]), method="bounded",
                                  options={"xatol": 1e-14})
            if sg * res.fun < 0:
                roots.append(brentq(f, s[i - 1], res.x, xtol=1e-15, rtol=1e-15))
                roots.append(brentq(f, res.x, s[i + 1], xtol=1e-15, rtol=1e-15))
    return sorted(roots)


def _pair_window(k: complex):
    """Stretch of the negative imaginary axis where a resonance near the axis would land."""
    ki, kr = -k.imag, abs(k.real)
    w = min(0.9 * ki, max(4 * kr, 0.05 * ki))
    return -(ki + w), -(ki - w)


def _is_axial(model, window):
    """True when D(is) has two zeros in the window, i.e. the pair has coalesced."""
    return len(_axis_roots(model, *window)) >= 2


def _mirror_ok(model, k):
    h = 1e-6 * (1 + abs(k))
    d = model.determinant(np.array([-np.conj(k), k + h, k - h]))
    slope = abs((d[1] - d[2]) / (2 * h))
    return abs(d[0]) <= 1e-6 * slope * (1 + abs(k))


# ---------------------------------------------------------------- tracing

def _seed_list(seeds):
    out = []
    ks = [complex(s.k if isinstance(s, Pole) else s) for s in seeds]
    for k in ks:
        if k.real < -AXIS_TOL and any(abs(q - complex(-k.real, k.imag)) < 1e-8 for q in ks):
            continue  # an anti-resonance rides along with its resonance
        out.append(k)
    return out


def trace(family: Potential, name: str, start: float, stop: float, step: float, seeds,
          n_slices: int = DEFAULT_SLICES, min_step: float | None = None) -> Trajectory:
    """Follow ``seeds`` (poles of ``family`` at ``name = start``) up to ``stop``.

    Events are left for :func:`detect_events`.
    """
    if step <= 0 or stop <= start:
        raise ValueError("need start < stop and a positive step")
    min_step = step / 2**10 if min_step is None else min_step
    traj = Trajectory(family, name, n_slices=n_slices, step=step)
    model = traj.model(start)
    current = []
    for i, k in enumerate(_seed_list(seeds)):
        k1, ok = _newton(model, k, maxiter=20)
        if not ok or abs(k1 - k) > 1e-6 * (1 + abs(k)):
            raise TrackingError(f"seed {k} is not a pole at {name} = {start}")
        current.append(TrackedPole(f"p{i}", k1))
    traj.samples.append(Sample(float(start), current))
    history = {p.branch: [p.k] for p in current}

    value = float(start)
    h = step
    n_done = 0
    while value < stop - 1e-12 * abs(stop):
        target = min(value + h, stop)
        model = traj.model(target)
        moved, ok = _advance(model, traj.samples[-1], history, target - value)
        if not ok:
            if h / 2 < min_step:
                traj.diagnostics.append(
                    f"lost pole near {name} = {value:.10g}: Newton failed at the step floor; trajectory truncated")
                break
            h /= 2
            continue
        value = target
        n_done += 1
        traj.samples.append(Sample(value, moved))
        for p in moved:
            history.setdefault(p.branch, []).append(p.k)
        if n_done % MIRROR_CHECK_EVERY == 0:
            for p in moved:
                if not _mirror_ok(model, p.k):
                    traj.diagnostics.append(f"mirror check failed for {p.branch} at {name} = {value:.10g}")
        h = min(step, 2 * h)
    return traj


def _predict(hist):
    if len(hist) >= 2:
        return 2 * hist[-1] - hist[-2]
    return hist[-1]


def _advance(model, sample: Sample, history, dp):
    out = []
    axis = [p for p in sample.poles if abs(p.k.real) < AXIS_TOL]
    for p in sample.poles:
        if abs(p.k.real) < AXIS_TOL:
            continue
        window = _pair_window(p.k)
        if _is_axial(model, window):
            roots = _axis_roots(model, *window)
            pair = _closest_pair(roots, -p.k.imag)
            out += [TrackedPole(p.branch, 1j * pair[0]), TrackedPole(p.branch + "'", 1j * pair[1])]
            continue
        pred = _predict(history[p.branch])
        k, ok = _newton(model, pred)
        jump = abs(k - pred)
        if not ok or jump > 0.05 * (1 + abs(p.k)) or abs(k.real) < AXIS_TOL:
            return None, False
        out.append(TrackedPole(p.branch, k))
    if axis:
        moved = _advance_axis(model, axis, history)
        if moved is None:
            return None, False
        out += moved
    return out, True


def _closest_pair(roots, ki):
    # the two zeros straddling the old imaginary part, nearest first
    roots = sorted(roots, key=lambda s: abs(s + ki))[:2]
    return sorted(roots, reverse=True)


def _advance_axis(model, poles, history):
    preds = np.array([_predict(history[p.branch]).imag for p in poles])
    olds = np.array([p.k.imag for p in poles])
    spread = np.abs(preds - olds)
    pad = max(float(np.max(spread)) * 4, 1e-3 * (1 + float(np.max(np.abs(olds)))))
    lo, hi = float(np.min(preds)) - pad, float(np.max(preds)) + pad
    roots = _axis_roots(model, lo, hi, n=max(200, len(poles) * 100))
    roots = [r for r in roots if r != 0.0]
    if len(roots) < len(poles):
        return None
    out, used = [], set()
    for p, s_pred in sorted(zip(poles, preds), key=lambda t: t[1]):
        j = min((j for j in range(len(roots)) if j not in used), key=lambda j: abs(roots[j] - s_pred))
        if abs(roots[j] - s_pred) > 0.05 * (1 + abs(s_pred)):
            return None
        used.add(j)
        out.append(TrackedPole(p.branch, 1j * roots[j]))
    return out


# ---------------------------------------------------------------- events

def _bisect(test, lo, hi, tol):
    """Shrink [lo, hi] with test(lo) != test(hi) until it is at most tol wide."""
    t_lo = test(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if test(mid) == t_lo:
            lo = mid
        else:
            hi = mid
    return lo, hi


def detect_events(traj: Trajectory, tol: float = REFINE_TOL) -> list:
    """Locate and bracket events along every branch; also stored on ``traj.events``."""
    events = []
    samples = traj.samples
    for a, b in zip(samples, samples[1:]):
        for pa in a.poles:
            pb = b.branch(pa.branch)
            if pb is None:
                continue
            ca, cb = pa.cls, pb.cls
            if ca is PoleClass.RESONANCE and cb is PoleClass.RESONANCE:
                sa, sb = np.sign(pa.k.imag + pa.k.real), np.sign(pb.k.imag + pb.k.real)
                if sa != sb:
                    events.append(_refine_bisector(traj, pa, pb, a.value, b.value, tol))
            if ca is PoleClass.RESONANCE and cb is PoleClass.ANTIBOUND:
                window = _pair_window(pa.k)
                lo, hi = _bisect(lambda v: _is_axial(traj.model(v), window), a.value, b.value, tol)
                events.append(Event(EventKind.COALESCENCE, lo, hi, pa.branch,
                                    f"{pa.branch} and its mirror merge on the negative imaginary axis"))
                events.append(Event(EventKind.CLASS_CHANGE, lo, hi, pa.branch, f"{ca.value} -> {cb.value}"))
            elif ca is PoleClass.ANTIBOUND and cb is PoleClass.BOUND:
                sign0 = lambda v: np.sign(traj.model(v).determinant(np.array([0j]))[0].real)
                lo, hi = _bisect(sign0, a.value, b.value, tol)
                events.append(Event(EventKind.BOUND_STATE_BIRTH, lo, hi, pa.branch,
                                    f"{pa.branch} passes through k = 0"))
                events.append(Event(EventKind.CLASS_CHANGE, lo, hi, pa.branch, f"{ca.value} -> {cb.value}"))
            elif ca is not cb and not (ca is PoleClass.RESONANCE and cb is PoleClass.ANTIBOUND):
                events.append(Event(EventKind.CLASS_CHANGE, a.value, b.value, pa.branch, f"{ca.value} -> {cb.value}"))
    events.sort(key=lambda e: (e.lo, e.kind.value))
    traj.events = events
    return events


def _refine_bisector(traj, pa, pb, lo, hi, tol):
    ka, kb = pa.k, pb.k
    side = lambda k: k.imag + k.real > 0  # k_i < k_r: positive position

    def test(v):
        frac = (v - lo0) / (hi0 - lo0)
        k, ok = _newton(traj.model(v), ka + frac * (kb - ka), maxiter=20)
        if not ok:
            raise TrackingError(f"Newton failed while refining the bisector crossing at {v}")
        return side(k)

    lo0, hi0 = lo, hi
    lo, hi = _bisect(test, lo, hi, tol)
    return Event(EventKind.BISECTOR_CROSSING, lo, hi, pa.branch,
                 f"{pa.branch} crosses k_i = k_r")
