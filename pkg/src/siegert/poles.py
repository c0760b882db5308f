"""
Siegert poles: zeros of the matching determinant in the complex k-plane.

Search strategy: a grid of Newton starts over the region, then an
argument-principle count on the region boundary. Boxes whose count disagrees
with the roots found inside them are searched again and quartered until
every box is certified.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .potentials import Potential, Symmetry
from .scattering import DEFAULT_SLICES, SlicedModel

AXIS_TOL = 1e-9
MERGE_TOL = 1e-8
ORIGIN_MARGIN = 1e-3
MAX_CONTOUR_POINTS = 200_000


class PoleSearchError(RuntimeError):
    pass


class WindingMismatch(PoleSearchError):
    def __init__(self, box, expected, found):
        super().__init__(
            f"winding count {expected} but {found} roots found in box "
            f"Re[{box.re_min:.6g}, {box.re_max:.6g}] Im[{box.im_min:.6g}, {box.im_max:.6g}]")
        self.box = box
        self.expected = expected
        self.found = found


class QuadratureError(PoleSearchError):
    pass


class NormalizationError(PoleSearchError):
    pass


class PoleClass(enum.Enum):
    BOUND = "bound"
    ANTIBOUND = "antibound"
    RESONANCE = "resonance"
    ANTIRESONANCE = "antiresonance"


class Parity(enum.Enum):
    EVEN = "even"
    ODD = "odd"
    NONE = "none"


@dataclass(frozen=True)
class Rect:
    """Closed rectangle in the complex k-plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("degenerate rectangle")

    @property
    def size(self):
        return max(self.re_max - self.re_min, self.im_max - self.im_min)

    def contains(self, k, pad=0.0):
        k = np.asarray(k)
        return ((k.real >= self.re_min - pad) & (k.real <= self.re_max + pad)
                & (k.imag >= self.im_min - pad) & (k.imag <= self.im_max + pad))

    def distance_to_origin(self):
        dx = max(self.re_min, 0.0, -self.re_max)
        dy = max(self.im_min, 0.0, -self.im_max)
        return math.hypot(dx, dy)

    def mirror(self):
        # image under k -> -conj(k)
        return Rect(-self.re_max, -self.re_min, self.im_min, self.im_max)

    def expand(self, d):
        return Rect(self.re_min - d, self.re_max + d, self.im_min - d, self.im_max + d)

    def grid(self, nr, ni):
        re = np.linspace(self.re_min, self.re_max, nr + 2)[1:-1]
        im = np.linspace(self.im_min, self.im_max, ni + 2)[1:-1]
        return (re[None, :] + 1j * im[:, None]).ravel()

    def quarter(self, cut_re, cut_im):
        return [Rect(self.re_min, cut_re, self.im_min, cut_im),
                Rect(cut_re, self.re_max, self.im_min, cut_im),
                Rect(self.re_min, cut_re, cut_im, self.im_max),
                Rect(cut_re, self.re_max, cut_im, self.im_max)]


def classify(k: complex, axis_tol: float = AXIS_TOL) -> PoleClass:
    k = complex(k)
    if abs(k) < axis_tol:
        raise ValueError("pole at the origin cannot be classified")
    if abs(k.real) < axis_tol:
        return PoleClass.BOUND if k.imag > 0 else PoleClass.ANTIBOUND
    if k.imag > 0:
        raise ValueError(f"k = {k} is off-axis in the upper half plane; not an S-matrix pole")
    return PoleClass.RESONANCE if k.real > 0 else PoleClass.ANTIRESONANCE


@dataclass(frozen=True)
class Pole:
    k: complex
    cls: PoleClass
    parity: Parity
    surf_left: complex
    surf_right: complex
    norm_residual: float
    residual: float = 0.0

    @property
    def E(self) -> complex:
        return self.k * self.k / 2

    @property
    def k_r(self) -> float:
        return self.k.real

    @property
    def k_i(self) -> float:
        # resonances are written k_r - i k_i
        return -self.k.imag

    @property
    def epsilon(self) -> float:
        return (self.k.real**2 - self.k.imag**2) / 2

    @property
    def gamma(self) -> float:
        return 2 * self.k_r * self.k_i

    @property
    def abs_E(self) -> float:
        return abs(self.k) ** 2 / 2

    @property
    def residue(self) -> complex:
        """Psi(L) Psi(-L), the sum-formula numerator."""
        return self.surf_left * self.surf_right

    @property
    def on_axis(self) -> bool:
        return self.cls in (PoleClass.BOUND, PoleClass.ANTIBOUND)

    def mirror(self) -> "Pole":
        """The pole at -conj(k), whose Siegert state is the complex conjugate."""
        mk = complex(-self.k.real, self.k.imag)
        cls = {PoleClass.RESONANCE: PoleClass.ANTIRESONANCE,
               PoleClass.ANTIRESONANCE: PoleClass.RESONANCE}.get(self.cls, self.cls)
        return replace(self, k=mk, cls=cls, surf_left=self.surf_left.conjugate(),
                       surf_right=self.surf_right.conjugate())


@dataclass
class PoleSet:
    poles: list
    L: float
    regions: list
    winding_verified: bool
    potential: Potential
    n_slices: int = DEFAULT_SLICES
    radius: float | None = None  # every pole with |k| <= radius is included
    counts: list = field(default_factory=list)  # certified (box, winding count) pairs

    def __len__(self):
        return len(self.poles)

    def __iter__(self):
        return iter(self.poles)

    @property
    def k(self):
        return np.array([p.k for p in self.poles], dtype=complex)

    def of_class(self, *classes):
        return [p for p in self.poles if p.cls in classes]

    def resonances(self):
        return sorted(self.of_class(PoleClass.RESONANCE), key=lambda p: p.k.real)

    def within(self, k_max: float) -> "PoleSet":
        keep = [p for p in self.poles if abs(p.k) <= k_max]
        return replace(self, poles=keep, radius=k_max if self.radius is None else min(k_max, self.radius))


def normalize_siegert(psi, x, k, atol=1e-300):
    """Scale sampled Siegert-state values so 2ik int psi^2 - psi(L)^2 - psi(-L)^2 = 1.

    ``x`` spans [-L, L] and the integral uses Simpson's rule on the samples.
    Returns (normalized psi, residual of the recomputed condition).
    """
    from scipy.integrate import simpson

    psi = np.asarray(psi, dtype=complex)
    x = np.asarray(x, dtype=float)
    k = complex(k)

    def condition(f):
        return 2j * k * simpson(f * f, x=x) - (f[-1] ** 2 + f[0] ** 2)

    c2 = condition(psi)
    scale = np.max(np.abs(psi)) ** 2 * (1 + abs(k) * (x[-1] - x[0]))
    if not np.isfinite(c2) or abs(c2) <= max(1e-13 * scale, atol):
        raise NormalizationError("Siegert normalization integral vanishes (exceptional point?)")
    out = psi / np.sqrt(c2)
    return out, float(abs(condition(out) - 1))


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


class _BoundaryHit(Exception):
    def __init__(self, k):
        self.k = k


def _contour_phase(model, box, n0=32, max_dphi=np.pi / 4, max_rounds=40):
    corners = np.array([complex(box.re_min, box.im_min), complex(box.re_max, box.im_min),
                        complex(box.re_max, box.im_max), complex(box.re_min, box.im_max)])
    # phase of D turns at about 2L per unit |dk|; start at pi/8 per step or finer
    lengths = np.abs(np.roll(corners, -1) - corners)
    counts = [max(n0, int(np.ceil(ln * 16 * model.L / np.pi))) for ln in lengths]
    s = np.concatenate([i + np.linspace(0.0, 1.0, n, endpoint=False) for i, n in enumerate(counts)] + [[4.0]])

    def point(s):
        i = np.minimum(np.floor(s).astype(int), 3)
        f = s - i
        return corners[i] + f * (corners[(i + 1) % 4] - corners[i])

    def phases(s):
        mant, _, noise = model.determinant_noise(point(s))
        lost = np.abs(mant) < 1e3 * noise
        if np.count_nonzero(lost) > 2:
            k = point(s[lost][0])
            raise QuadratureError(
                f"D(k) is below its rounding noise on the contour near k = {k:.4g}; "
                "|Im k| times the potential width is too large, restrict the region")
        if lost.any():
            raise _BoundaryHit(point(s[lost][0]))
        return np.angle(mant)

    phase = phases(s)
    min_ds = 1e-12 * 4
    for _ in range(max_rounds):
        d = _wrap(np.diff(phase))
        bad = np.nonzero(np.abs(d) > max_dphi)[0]
        if bad.size == 0:
            return float(np.sum(d)), s.size
        ds = s[bad + 1] - s[bad]
        if np.any(ds < min_ds * box.size):
            raise _BoundaryHit(point(s[bad[np.argmin(ds)]]))
        if s.size + bad.size > MAX_CONTOUR_POINTS:
            raise QuadratureError("contour refinement did not settle")
        mids = 0.5 * (s[bad] + s[bad + 1])
        s = np.insert(s, bad + 1, mids)
        phase = np.insert(phase, bad + 1, phases(mids))
    raise QuadratureError("contour refinement did not settle")


def _count(model, box, max_nudges=8):
    """(winding number, box actually used) with edges nudged off boundary zeros."""
    for _ in range(max_nudges):
        try:
            total, n = _contour_phase(model, box)
        except _BoundaryHit:
            box = box.expand(1e-4 * (1 + box.size))
            continue
        count = total / (2 * np.pi)
        err = abs(count - round(count))
        if err > 0.1:
            raise QuadratureError(f"argument-principle integral off-integer by {err:.3g}")
        return int(round(count)), box
    raise QuadratureError("could not move contour off a zero of D")


def verify_count(p: Potential, region: Rect, L=None, n_slices=DEFAULT_SLICES, model=None) -> int:
    """Number of zeros of D(k) inside ``region`` via the argument principle."""
    model = model or SlicedModel(p, L, n_slices)
    return _count(model, region)[0]


def _newton(model, k0, box=None, maxiter=40):
    """Vectorized Newton from many starts; returns the converged iterates.

    Starts that leave the (padded) box are dropped, as are starts that land
    on the same path as another one.
    """
    k = np.array(k0, dtype=complex).ravel()
    done = np.zeros(k.shape, bool)
    alive = np.ones(k.shape, bool)
    max_step = None if box is None else 0.5 * box.size
    prev = np.full(k.shape, np.inf)
    for _ in range(maxiter):
        idx = np.nonzero(alive & ~done)[0]
        if idx.size == 0:
            break
        kk = k[idx]
        with np.errstate(all="ignore"):
            step = model.newton_step(kk)
            bad = ~np.isfinite(step)
            step[bad] = 0
            if max_step is not None:
                big = np.abs(step) > max_step
                step[big] *= max_step / np.abs(step[big])
        knew = kk - step
        k[idx] = knew
        alive[idx[bad]] = False
        if box is not None:
            alive[idx[~box.contains(knew, pad=0.25 * box.size)]] = False
        size = np.abs(step)
        tiny = size < 1e-13 * (1 + np.abs(kk))
        # near rounding-limited zeros the steps stop shrinking; accept and let _is_root judge
        stalled = (size < 1e-7 * (1 + np.abs(kk))) & (size > 0.5 * prev[idx])
        done[idx[~bad & (tiny | stalled)]] = True
        prev[idx] = size
        # iterates that coincide will follow the same path
        live = np.nonzero(alive & ~done)[0]
        if live.size > 1:
            key = np.round(k[live] / (1e-9 * (1 + np.abs(k[live]))))
            _, first = np.unique(key.real + 1j * key.imag, return_index=True)
            dup = np.setdiff1d(np.arange(live.size), first)
            alive[live[dup]] = False
    return k[done & alive]


def _snap_axis(model, k):
    """Put a numerically axial root exactly on the imaginary axis, if D changes sign there."""
    if abs(k.real) > 1e-6 * (1 + abs(k)):
        return k
    kappa = k.imag
    delta = max(100 * abs(k.real), 1e-9 * (1 + abs(k)))
    f = lambda s: model.determinant(1j * s).real
    for d in (delta, 10 * delta, 100 * delta):
        a, b = kappa - d, kappa + d
        if f(a) * f(b) < 0:
            return 1j * brentq(f, a, b, xtol=1e-15 * (1 + abs(kappa)), rtol=1e-15)
    return k


def _axis_roots(model, lo, hi, n=400):
    if hi - lo <= 0:
        return []
    s = np.linspace(lo, hi, n)
    s = s[np.abs(s) > 0.5 * ORIGIN_MARGIN]
    f = model.determinant(1j * s).real
    out = []
    for i in np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]:
        g = lambda t: model.determinant(1j * t).real
        out.append(1j * brentq(g, s[i], s[i + 1], xtol=1e-15, rtol=1e-15))
    return out


def _merge(roots, tol=MERGE_TOL):
    out = []
    for r in roots:
        r = complex(r)
        if all(abs(r - q) > tol * (1 + abs(q)) for q in out):
            out.append(r)
    return out


def _is_root(model, k):
    h = 1e-6 * (1 + abs(k))
    mant, lg, noise = model.determinant_noise(np.array([k, k + h, k - h]))
    d = mant * np.exp(lg)
    slope = abs((d[1] - d[2]) / (2 * h))
    if not (np.isfinite(slope) and slope > 0):
        return False
    if noise[0] * np.exp(lg[0]) > 1e-6 * slope * (1 + abs(k)):
        raise PoleSearchError(f"zero near k = {k:.6g} cannot be resolved: D is dominated by rounding there")
    return bool(abs(d[0]) <= 1e-9 * slope * (1 + abs(k)))


def make_pole(model: SlicedModel, k: complex, axis_tol=AXIS_TOL) -> Pole:
    """Normalize and classify the Siegert state at a polished root k."""
    k = complex(k)
    _, psi, _, integral = model.state(k)
    psi_l, psi_r = psi[0], psi[-1]
    norm = 2j * k * integral - (psi_r**2 + psi_l**2)
    scale = max(1.0, abs(psi_r) ** 2)
    if not np.isfinite(norm) or abs(norm) < 1e-10 * scale:
        raise NormalizationError(f"Siegert state at k = {k} has vanishing normalization")
    root = np.sqrt(norm)
    # independent route: N = -i psi(L) D'(k) from differentiating the Wronskian
    dD = model.determinant_derivative(k)
    norm_residual = float(abs(-1j * psi_r * dD / norm - 1))
    d = model.determinant(k)
    residual = float(abs(d) / abs(dD)) if dD != 0 else math.inf
    if model.potential.parity() is Symmetry.SYMMETRIC:
        parity = Parity.EVEN if (psi_r / psi_l).real > 0 else Parity.ODD
    else:
        parity = Parity.NONE
    return Pole(k=k, cls=classify(k, axis_tol), parity=parity,
                surf_left=complex(psi_l / root), surf_right=complex(psi_r / root),
                norm_residual=norm_residual, residual=residual)


def _search_box(model, box, n_re, n_im):
    starts = box.grid(n_re, n_im)
    found = _newton(model, starts, box)
    found = [_snap_axis(model, complex(r)) for r in found]
    if box.re_min < 0 < box.re_max:
        found += _axis_roots(model, box.im_min, box.im_max)
    found = [r for r in found if abs(r) > 0.5 * ORIGIN_MARGIN and box.contains(r, pad=1e-6 * box.size)
             and _is_root(model, r)]
    return found


def _certify(model, box, roots, depth, max_depth, n_sub, certified):
    count, used = _count(model, box)
    inside = [r for r in roots if used.contains(r)]
    if count == len(inside):
        certified.append((used, count))
        return roots
    if count < len(inside):
        raise WindingMismatch(used, count, len(inside))
    roots = _merge(roots + _search_box(model, used, n_sub, n_sub))
    inside = [r for r in roots if used.contains(r)]
    if count == len(inside):
        certified.append((used, count))
        return roots
    if depth >= max_depth:
        raise WindingMismatch(used, count, len(inside))
    cut_re = 0.5 * (used.re_min + used.re_max)
    cut_im = 0.5 * (used.im_min + used.im_max)
    # keep the cuts away from known roots
    for _ in range(10):
        if all(abs(r.real - cut_re) > 1e-6 * used.size for r in inside):
            break
        cut_re += 0.0137 * (used.re_max - used.re_min)
    for _ in range(10):
        if all(abs(r.imag - cut_im) > 1e-6 * used.size for r in inside):
            break
        cut_im += 0.0137 * (used.im_max - used.im_min)
    for child in used.quarter(cut_re, cut_im):
        roots = _certify(model, child, roots, depth + 1, max_depth, n_sub, certified)
    return roots


def _search(model, region, n_grid, n_sub, max_depth):
    if region.distance_to_origin() < ORIGIN_MARGIN:
        raise PoleSearchError("search region must stay at least 1e-3 away from k = 0")
    roots = _merge(_search_box(model, region, n_grid, n_grid))
    certified = []
    roots = _certify(model, region, roots, 0, max_depth, n_sub, certified)
    boxes = [b for b, _ in certified]
    inside = [r for r in roots if any(b.contains(r) for b in boxes) or region.contains(r)]
    return _merge(inside), certified


def _assemble(model, roots, regions, counts, symmetric_completion=True, radius=None):
    poles = [make_pole(model, r) for r in roots]
    if symmetric_completion:
        ks = [p.k for p in poles]
        for p in list(poles):
            if p.on_axis:
                continue
            mk = complex(-p.k.real, p.k.imag)
            if all(abs(mk - q) > MERGE_TOL * (1 + abs(q)) for q in ks):
                poles.append(p.mirror())
                ks.append(mk)
    poles.sort(key=lambda p: (abs(p.k), p.k.real))
    return PoleSet(poles=poles, L=model.L, regions=regions, winding_verified=True,
                   potential=model.potential, n_slices=model.n_slices, radius=radius,
                   counts=counts)


def find_poles(p: Potential, region: Rect, n_grid=40, L=None, n_slices=DEFAULT_SLICES,
               n_sub=6, max_depth=8, model=None) -> PoleSet:
    """All Siegert poles inside ``region`` plus their mirrors under k -> -conj(k).

    Mirror images need no second search: D(-conj k) = conj D(k) for real
    potentials, so the mirrored box has the same certified count.
    """
    model = model or SlicedModel(p, L, n_slices)
    roots, certified = _search(model, region, n_grid, n_grid if n_sub is None else n_sub, max_depth)
    regions = [region] if region.mirror() == region else [region, region.mirror()]
    return _assemble(model, roots, regions, certified)


def collect_poles(p: Potential, k_max: float, L=None, n_slices=DEFAULT_SLICES,
                  im_min=None, margin=0.05, n_grid=40, model=None) -> PoleSet:
    """Every pole with |k| <= k_max.

    The disk is covered by a right-half box (mirrored to the left), two thin
    strips along the imaginary axis and a small box around the origin that
    must hold no zero.
    """
    model = model or SlicedModel(p, L, n_slices)
    vmin = min(0.0, float(np.min(model.values)))
    top = min(k_max, math.sqrt(-2 * vmin) + 0.5) if vmin < 0 else 0.5
    bottom = -k_max if im_min is None else im_min
    tiles = [Rect(margin, k_max, bottom, top),
             Rect(-margin, margin, margin, top),
             Rect(-margin, margin, bottom, -margin)]
    roots, counts = [], []
    for tile in tiles:
        r, cert = _search(model, tile, n_grid if tile.re_max - tile.re_min > 2 * margin else 4,
                          6, 10)
        roots += r
        counts += cert
    origin = Rect(-margin, margin, -margin, margin)
    n0, used = _count(model, origin)
    if n0 != 0:
        raise PoleSearchError(f"{n0} pole(s) within {margin} of k = 0 (threshold pole)")
    counts.append((used, 0))
    roots = [r for r in _merge(roots) if abs(r) <= k_max]
    regions = tiles + [tiles[0].mirror()]
    return _assemble(model, roots, regions, counts, radius=k_max)
