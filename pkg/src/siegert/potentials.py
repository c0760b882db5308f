"""
One-dimensional scattering potentials (atomic units, hbar = m = 1).

Three shapes are supported: a flat square well, the quartic-damped double
barrier V(x) = (beta x^2 - gamma) exp(-alpha x^4) and a tabulated profile
with linear interpolation. Every potential knows how to cut itself into
piecewise-constant slices on [-L, L], which is what the transfer-matrix
solver in :mod:`siegert.scattering` consumes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

DEFAULT_TAIL_TOL = 1e-12
SYMMETRY_TOL = 1e-12


class Symmetry(enum.Enum):
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"


class PotentialError(ValueError):
    pass


def _as_finite(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise PotentialError("potential evaluated at a non-finite position")
    return x


class Potential:
    """Base class. Subclasses are frozen dataclasses."""

    kind: str = ""

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        x = _as_finite(x)
        out = self._evaluate(x)
        return float(out) if out.ndim == 0 else out

    def _evaluate(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def parity(self) -> Symmetry:
        return Symmetry.SYMMETRIC

    def params(self) -> dict:
        raise NotImplementedError

    def with_params(self, **changes) -> "Potential":
        return replace(self, **changes)

    def effective_half_width(self, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
        """Smallest L with |V(x)| < tail_tol for every |x| >= L."""
        if tail_tol <= 0:
            raise PotentialError("tail_tol must be positive")
        absv = lambda x: np.abs(self._evaluate(np.asarray(x, dtype=float)))

        def above(x):
            return max(absv(x), absv(-x))

        # grow the scan window until its outer half is quiet
        outer = 1.0
        while True:
            probe = np.linspace(outer, 2.0 * outer, 2001)
            if np.all(np.maximum(absv(probe), absv(-probe)) < tail_tol):
                break
            outer *= 2.0
            if outer > 1e6:
                raise PotentialError("potential tail does not decay below tail_tol")
        grid = np.linspace(0.0, 2.0 * outer, 40001)
        loud = np.nonzero(np.maximum(absv(grid), absv(-grid)) >= tail_tol)[0]
        if loud.size == 0:
            return 0.0
        i = loud[-1]
        lo, hi = grid[i], grid[i + 1]
        return float(brentq(lambda x: above(x) - tail_tol, lo, hi, xtol=1e-14, rtol=1e-14))

    def slices(self, L: float, n_slices: int) -> tuple[np.ndarray, np.ndarray]:
        """Piecewise-constant model of V on [-L, L]: (widths, values).

        Smooth potentials are sampled at slice midpoints on a uniform grid.
        """
        if L <= 0:
            raise PotentialError("half-width L must be positive")
        n = int(n_slices)
        edges = np.linspace(-L, L, n + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        return np.diff(edges), np.asarray(self._evaluate(mid), dtype=float)

    @property
    def is_piecewise(self) -> bool:
        return False

    def describe(self) -> str:
        body = ",".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{self.kind}:{body}"


@dataclass(frozen=True)
class SquareWell(Potential):
    """V = depth on |x| <= width/2, zero elsewhere. ``depth`` is negative."""

    depth: float
    width: float
    kind = "square_well"

    def __post_init__(self):
        if not self.depth < 0:
            raise PotentialError("square well depth V0 must be negative")
        if not self.width > 0:
            raise PotentialError("square well width must be positive")

    def _evaluate(self, x):
        return np.where(np.abs(x) <= 0.5 * self.width, self.depth, 0.0)

    def effective_half_width(self, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
        if tail_tol <= 0:
            raise PotentialError("tail_tol must be positive")
        return 0.5 * self.width

    def slices(self, L, n_slices=None):
        # exact pieces; n_slices is irrelevant for a flat well
        a = 0.5 * self.width
        if L < a * (1 - 1e-12):
            raise PotentialError("Siegert boundary inside the well")
        if L <= a * (1 + 1e-12):
            return np.array([2.0 * L]), np.array([self.depth])
        return np.array([L - a, 2.0 * a, L - a]), np.array([0.0, self.depth, 0.0])

    @property
    def is_piecewise(self) -> bool:
        return True

    def params(self):
        return {"depth": self.depth, "width": self.width}


@dataclass(frozen=True)
class DoubleBarrier(Potential):
    """V(x) = (beta x^2 - gamma) exp(-alpha x^4)."""

    beta: float = 2.5
    gamma: float = 0.8
    alpha: float = 0.5
    kind = "double_barrier"

    def __post_init__(self):
        if not self.alpha > 0:
            raise PotentialError("double barrier needs alpha > 0")
        if not self.beta > 0:
            raise PotentialError("double barrier needs beta > 0")

    def _evaluate(self, x):
        return (self.beta * x * x - self.gamma) * np.exp(-self.alpha * x**4)

    def params(self):
        return {"beta": self.beta, "gamma": self.gamma, "alpha": self.alpha}


@dataclass(frozen=True)
class Tabulated(Potential):
    """Linearly interpolated samples; zero outside the sampled interval."""

    x: tuple
    v: tuple
    tail_tol: float = field(default=1e-8)
    kind = "tabulated"

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if x.ndim != 1 or x.shape != v.shape:
            raise PotentialError("tabulated x and v must be 1-d and equally long")
        if x.size < 3:
            raise PotentialError("tabulated potential needs at least 3 points")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(v)):
            raise PotentialError("tabulated samples must be finite")
        if np.any(np.diff(x) <= 0):
            raise PotentialError("tabulated x must be strictly increasing")
        if abs(v[0]) >= self.tail_tol or abs(v[-1]) >= self.tail_tol:
            raise PotentialError("tabulated potential does not vanish at the grid ends")
        object.__setattr__(self, "x", tuple(x.tolist()))
        object.__setattr__(self, "v", tuple(v.tolist()))

    def _evaluate(self, x):
        return np.interp(x, self.x, self.v, left=0.0, right=0.0)

    def effective_half_width(self, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
        if tail_tol <= 0:
            raise PotentialError("tail_tol must be positive")
        if abs(self.v[0]) >= tail_tol or abs(self.v[-1]) >= tail_tol:
            raise PotentialError("tabulated tails exceed tail_tol")
        return float(max(abs(self.x[0]), abs(self.x[-1])))

    def parity(self) -> Symmetry:
        xs = np.asarray(self.x)
        R = max(abs(xs[0]), abs(xs[-1]))
        grid = np.unique(np.concatenate([np.linspace(-R, R, 20001), xs, -xs]))
        diff = np.abs(self._evaluate(grid) - self._evaluate(-grid))
        return Symmetry.SYMMETRIC if np.all(diff <= SYMMETRY_TOL) else Symmetry.ASYMMETRIC

    def params(self):
        return {"x": list(self.x), "v": list(self.v)}

    def describe(self) -> str:
        return f"tabulated:n={len(self.x)},x0={self.x[0]!r},x1={self.x[-1]!r}"


# presets for the standard experiments in siegert.figures
PRESETS = {
    "fig1": SquareWell(depth=-13.0, width=math.pi / math.sqrt(2.0)),
    "fig2": DoubleBarrier(beta=2.5, gamma=0.8, alpha=0.5),
    "fig3a": DoubleBarrier(beta=2.5, gamma=0.875, alpha=0.5),
    "fig3b": DoubleBarrier(beta=2.5, gamma=0.885, alpha=0.5),
    "fig3c": DoubleBarrier(beta=2.5, gamma=0.89, alpha=0.5),
}

_KINDS = {
    "square_well": SquareWell,
    "squarewell": SquareWell,
    "double_barrier": DoubleBarrier,
    "doublebarrier": DoubleBarrier,
    "tabulated": Tabulated,
}

_ALIASES = {"V0": "depth", "v0": "depth", "Lw": "width", "lw": "width", "L": "width"}


def _from_mapping(fields: dict, base: Path | None = None) -> Potential:
    fields = dict(fields)
    kind = fields.pop("kind", None)
    if kind is None:
        raise PotentialError("potential description lacks 'kind'")
    cls = _KINDS.get(kind.strip().lower())
    if cls is None:
        raise PotentialError(f"unknown potential kind {kind!r}")
    if cls is Tabulated:
        if "file" in fields:
            path = Path(fields.pop("file"))
            if base is not None and not path.is_absolute():
                path = base / path
            data = np.loadtxt(path, delimiter="," if path.suffix == ".csv" else None, ndmin=2)
            xs, vs = data[:, 0], data[:, 1]
        else:
            xs = [float(s) for s in fields.pop("x").split()]
            vs = [float(s) for s in fields.pop("v").split()]
        kw = {k: float(v) for k, v in fields.items()}
        return Tabulated(tuple(xs), tuple(vs), **kw)
    kw = {_ALIASES.get(k, k): float(eval_number(v)) for k, v in fields.items()}
    return cls(**kw)


def eval_number(text: str) -> float:
    """Parse a float, also accepting ``pi``/``sqrt`` expressions such as pi/sqrt(2)."""
    text = str(text).strip()
    try:
        return float(text)
    except ValueError:
        pass
    allowed = {"pi": math.pi, "sqrt": math.sqrt, "e": math.e}
    if any(ch not in "0123456789.+-*/() eEpisqrt_" for ch in text):
        raise PotentialError(f"cannot parse number {text!r}")
    return float(eval(text, {"__builtins__": {}}, allowed))


def load_potential(path) -> Potential:
    """Read a ``key = value`` description (``#`` comments allowed)."""
    path = Path(path)
    fields = {}
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PotentialError(f"{path}: malformed line {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        fields[key] = value
    if "preset" in fields:
        return parse_potential(fields["preset"])
    return _from_mapping(fields, base=path.parent)


def parse_potential(text: str) -> Potential:
    """Preset name, config-file path, or inline ``kind:key=value,...``."""
    text = text.strip()
    if text in PRESETS:
        return PRESETS[text]
    if ":" in text:
        kind, _, body = text.partition(":")
        fields = {"kind": kind}
        for item in filter(None, (s.strip() for s in body.split(","))):
            if "=" not in item:
                raise PotentialError(f"malformed potential parameter {item!r}")
            key, value = item.split("=", 1)
            fields[key.strip()] = value.strip()
        return _from_mapping(fields)
    if Path(text).exists():
        return load_potential(text)
    raise PotentialError(f"unknown potential {text!r}; presets: {', '.join(PRESETS)}")
