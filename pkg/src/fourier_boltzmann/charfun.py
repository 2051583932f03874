"""Characteristic functions, the K^alpha / M-tilde^alpha norms, and membership tests.

Two representations share one set of norm routines:

* :class:`AnalyticCharFn` -- finite mixtures of closed-form families, evaluable
  at any xi in R^3.  Norms are computed by dense scans and quadrature on the
  exact formulas.
* :class:`RadialCharFn` -- an isotropic characteristic function sampled on a
  radial grid.  This is the evolution state.  It stores the deficit
  ``1 - phi`` rather than ``phi`` so that the r -> 0 behaviour, which drives
  both norms, keeps full relative precision.

Norms return :class:`NormResult` values carrying divergence flags instead of
raising, so classification pipelines compose.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.optimize import brentq, minimize_scalar

from .errors import DomainError, UnsupportedError

FOUR_PI = 4.0 * math.pi
# slope thresholds for the small-r analysis
KNORM_SLOPE_TOL = 0.02
MNORM_BORDER = (-1.05, -0.95)
IMAG_ZERO = 1e-12


# --------------------------------------------------------------------------
# small numerical helpers


def one_minus_sinc(x):
    """1 - sin(x)/x, accurate for small x."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    small = ax < 2e-2
    xs = np.where(small, x, 0.0)
    x2 = xs * xs
    series = x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    safe = np.where(small, 1.0, x)
    return np.where(small, series, 1.0 - np.sin(safe) / safe)


def _fib_directions(n: int = 40) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    phi = math.pi * (1.0 + math.sqrt(5.0)) * k
    rho = np.sqrt(1.0 - z * z)
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise DomainError("direction vector must be nonzero")
    return v / n


# --------------------------------------------------------------------------
# analytic families


@dataclass(frozen=True)
class Gaussian:
    var: float = 1.0
    isotropic = True

    def __post_init__(self):
        if not self.var > 0:
            raise DomainError("gaussian variance must be positive")

    def radial_deficit(self, r):
        r = np.asarray(r, dtype=float)
        return -np.expm1(-0.5 * self.var * r * r)

    def deficit(self, xi):
        return self.radial_deficit(np.linalg.norm(xi, axis=-1)).astype(complex)

    exponent = 2.0
    deviation_exponent = 2.0
    limit = 1.0
    frequency = 0.0
    axes = ()
    mean = (0.0, 0.0, 0.0)

    @property
    def scale(self):
        return 1.0 / math.sqrt(self.var)

    def rescale(self, lam):
        return Gaussian(self.var * lam * lam)

    def sympy_radial(self, r):
        import sympy as sp
        return sp.exp(-sp.Rational(1, 2) * sp.nsimplify(self.var) * r ** 2)

    def spec(self):
        return f"gaussian(var={self.var!r})"


@dataclass(frozen=True)
class Stable:
    """Isotropic alpha-stable law, phi = exp(-(scale |xi|)^alpha)."""

    alpha: float
    scale_param: float = 1.0
    isotropic = True

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise DomainError("stable index must lie in (0, 2]")
        if not self.scale_param > 0:
            raise DomainError("stable scale must be positive")

    def radial_deficit(self, r):
        r = np.asarray(r, dtype=float)
        return -np.expm1(-(self.scale_param * r) ** self.alpha)

    def deficit(self, xi):
        return self.radial_deficit(np.linalg.norm(xi, axis=-1)).astype(complex)

    @property
    def exponent(self):
        return self.alpha

    deviation_exponent = exponent
    limit = 1.0
    frequency = 0.0
    axes = ()
    mean = (0.0, 0.0, 0.0)

    @property
    def scale(self):
        return 1.0 / self.scale_param

    def rescale(self, lam):
        return Stable(self.alpha, self.scale_param * lam)

    def sympy_radial(self, r):
        if self.alpha != 2.0:
            return None
        import sympy as sp
        return sp.exp(-(sp.nsimplify(self.scale_param) * r) ** 2)

    def spec(self):
        return f"stable(alpha={self.alpha!r}, scale={self.scale_param!r})"


@dataclass(frozen=True)
class DiracPair:
    """(delta_{a e} + delta_{-a e}) / 2, phi = cos(a xi.e)."""

    a: float
    axis: tuple = (0.0, 0.0, 1.0)
    isotropic = False

    def __post_init__(self):
        if not self.a >= 0:
            raise DomainError("dirac_pair radius must be nonnegative")
        object.__setattr__(self, "axis", tuple(_unit(self.axis)))

    def radial_deficit(self, r):
        return one_minus_sinc(self.a * np.asarray(r, dtype=float))

    def deficit(self, xi):
        x = self.a * (np.asarray(xi, dtype=float) @ np.asarray(self.axis))
        return (2.0 * np.sin(0.5 * x) ** 2).astype(complex)

    exponent = 2.0
    deviation_exponent = 2.0
    limit = 1.0

    @property
    def frequency(self):
        return self.a

    @property
    def axes(self):
        return (self.axis,)

    mean = (0.0, 0.0, 0.0)

    @property
    def scale(self):
        return 1.0 / self.a if self.a > 0 else 1.0

    def rescale(self, lam):
        return DiracPair(self.a * lam, self.axis)

    def sympy_radial(self, r):
        import sympy as sp
        a = sp.nsimplify(self.a)
        return sp.sin(a * r) / (a * r) if self.a > 0 else sp.Integer(1)

    def spec(self):
        return f"dirac_pair(a={self.a!r})"


@dataclass(frozen=True)
class ShiftedDirac:
    """Point mass delta_a at a vector a, phi = exp(-i xi.a)."""

    a: tuple = (0.0, 0.0, 1.0)
    isotropic = False

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in np.broadcast_to(self.a, (3,))))

    @property
    def norm(self):
        return float(np.linalg.norm(self.a))

    def radial_deficit(self, r):
        return one_minus_sinc(self.norm * np.asarray(r, dtype=float))

    def deficit(self, xi):
        x = np.asarray(xi, dtype=float) @ np.asarray(self.a)
        return 2.0 * np.sin(0.5 * x) ** 2 + 1j * np.sin(x)

    exponent = 2.0

    @property
    def deviation_exponent(self):
        return 1.0 if self.norm > 0 else math.inf

    limit = 1.0

    @property
    def frequency(self):
        return self.norm

    @property
    def axes(self):
        return (tuple(_unit(self.a)),) if self.norm > 0 else ()

    @property
    def mean(self):
        return self.a

    @property
    def scale(self):
        return 1.0 / self.norm if self.norm > 0 else 1.0

    def rescale(self, lam):
        return ShiftedDirac(tuple(lam * x for x in self.a))

    def sympy_radial(self, r):
        import sympy as sp
        if self.norm == 0:
            return sp.Integer(1)
        a = sp.nsimplify(self.norm)
        return sp.sin(a * r) / (a * r)

    def spec(self):
        return f"shifted_dirac(a={list(self.a)!r})"


@dataclass(frozen=True)
class PointMass:
    """delta_0, phi == 1."""

    isotropic = True
    exponent = math.inf
    deviation_exponent = math.inf
    limit = 0.0
    frequency = 0.0
    axes = ()
    mean = (0.0, 0.0, 0.0)
    scale = 1.0

    def radial_deficit(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def deficit(self, xi):
        return np.zeros(np.shape(xi)[:-1], dtype=complex)

    def rescale(self, lam):
        return self

    def sympy_radial(self, r):
        import sympy as sp
        return sp.Integer(1)

    def spec(self):
        return "point_mass()"


FAMILIES = {"gaussian": Gaussian, "stable": Stable, "dirac_pair": DiracPair,
            "shifted_dirac": ShiftedDirac, "point_mass": PointMass}


@dataclass(frozen=True)
class AnalyticCharFn:
    """Finite mixture sum_i w_i phi_i of closed-form families (weights sum to 1)."""

    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), f) for w, f in self.components)
        if not comps:
            raise DomainError("empty mixture")
        ws = np.array([w for w, _ in comps])
        if np.any(ws < 0) or abs(ws.sum() - 1.0) > 1e-12:
            raise DomainError("mixture weights must be nonnegative and sum to 1")
        object.__setattr__(self, "components", comps)

    def _active(self):
        return [(w, f) for w, f in self.components if w > 0]

    @property
    def isotropic(self) -> bool:
        return all(f.isotropic or f.frequency == 0 for _, f in self._active())

    @property
    def exponent(self) -> float:
        """Small-r power of the radially averaged deficit 1 - Re phi."""
        return min(f.exponent for _, f in self._active())

    @property
    def deviation_exponent(self) -> float:
        """Small-r power of |phi - 1| along the worst direction."""
        return min(f.deviation_exponent for _, f in self._active())

    @property
    def limit(self) -> float:
        return sum(w * f.limit for w, f in self._active())

    @property
    def frequency(self) -> float:
        return max(f.frequency for _, f in self._active())

    @property
    def scales(self) -> tuple[float, float]:
        sc = [f.scale for _, f in self._active()]
        return min(sc), max(sc)

    @property
    def axes(self) -> list:
        out = []
        for _, f in self._active():
            out.extend(f.axes)
        return out

    @property
    def mean(self) -> np.ndarray:
        return sum(w * np.asarray(f.mean, dtype=float) for w, f in self._active())

    @property
    def is_single_dirac(self) -> bool:
        act = self._active()
        return len(act) == 1 and isinstance(act[0][1], ShiftedDirac) and act[0][1].norm > 0

    def radial_deficit(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return sum(w * f.radial_deficit(r) for w, f in self._active())

    def radial(self, r) -> np.ndarray:
        """Average of phi over the sphere |xi| = r."""
        return 1.0 - self.radial_deficit(r)

    def deficit(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return sum(w * f.deficit(xi) for w, f in self._active())

    def __call__(self, xi) -> np.ndarray:
        return 1.0 - self.deficit(xi)

    def rescale(self, lam: float) -> "AnalyticCharFn":
        """Characteristic function xi -> phi(lam xi)."""
        return AnalyticCharFn(tuple((w, f.rescale(lam)) for w, f in self.components))

    def sympy_radial(self, r):
        parts = [f.sympy_radial(r) for _, f in self._active()]
        if any(p is None for p in parts):
            return None
        import sympy as sp
        return sum((sp.nsimplify(w) * p for (w, _), p in zip(self._active(), parts)), sp.Integer(0))

    def spec(self) -> str:
        act = self._active()
        if len(act) == 1:
            return act[0][1].spec()
        return " + ".join(f"{w!r}*{f.spec()}" for w, f in act)


def gaussian(var: float = 1.0) -> AnalyticCharFn:
    return AnalyticCharFn(((1.0, Gaussian(var)),))


def stable(alpha: float, scale: float = 1.0) -> AnalyticCharFn:
    return AnalyticCharFn(((1.0, Stable(alpha, scale)),))


def dirac_pair(a: float, axis=(0.0, 0.0, 1.0)) -> AnalyticCharFn:
    return AnalyticCharFn(((1.0, DiracPair(a, tuple(axis))),))


def shifted_dirac(a) -> AnalyticCharFn:
    if np.ndim(a) == 0:
        a = (0.0, 0.0, float(a))
    return AnalyticCharFn(((1.0, ShiftedDirac(tuple(a))),))


def point_mass() -> AnalyticCharFn:
    return AnalyticCharFn(((1.0, PointMass()),))


def mixture(parts: Iterable[tuple[float, AnalyticCharFn]]) -> AnalyticCharFn:
    comps = []
    for w, fn in parts:
        comps.extend((w * cw, f) for cw, f in fn.components)
    return AnalyticCharFn(tuple(comps))


_TERM = re.compile(r"^\s*(?:(?P<w>[0-9.eE+-]+)\s*\*\s*)?(?P<name>[a-z_]+)\s*\((?P<args>.*)\)\s*$")


def parse_family(text: str) -> AnalyticCharFn:
    """Parse ``"gaussian(var=1)"`` or ``"0.5*gaussian(var=1) + 0.5*dirac_pair(a=2)"``."""
    terms, depth, cur = [], 0, ""
    for ch in text:
        depth += ch in "(["
        depth -= ch in ")]"
        if ch == "+" and depth == 0 and cur.strip() and not cur.rstrip().endswith(("e", "E", "*")):
            terms.append(cur)
            cur = ""
        else:
            cur += ch
    terms.append(cur)
    parts = []
    for t in terms:
        m = _TERM.match(t)
        if not m or m["name"] not in FAMILIES:
            raise DomainError(f"cannot parse family term {t.strip()!r}; known: {sorted(FAMILIES)}")
        kwargs = {}
        if m["args"].strip():
            for kv in re.split(r",(?![^\[]*\])", m["args"]):
                k, _, v = kv.partition("=")
                if not _:
                    raise DomainError(f"family arguments must be key=value, got {kv!r}")
                kwargs[k.strip()] = json.loads(v.strip())
        name = m["name"]
        builders = {"gaussian": gaussian, "stable": stable, "dirac_pair": dirac_pair,
                    "shifted_dirac": shifted_dirac, "point_mass": point_mass}
        try:
            fn = builders[name](**kwargs)
        except TypeError as exc:
            raise DomainError(f"bad arguments for {name}: {exc}") from None
        parts.append((float(m["w"]) if m["w"] else 1.0, fn))
    if len(parts) == 1 and parts[0][0] == 1.0:
        return parts[0][1]
    return mixture(parts)


# --------------------------------------------------------------------------
# radial grid and sampled characteristic functions


@dataclass(frozen=True)
class RadialGrid:
    """Geometric nodes near 0 joined to a uniform grid on [r_g, r_max].

    The geometric part starts at ``r_min_factor * r_max`` and ends where its
    step matches ``spacing``, so the node density is continuous.
    """

    r_max: float = 20.0
    n_geometric: int = 150
    spacing: float = 0.02
    r_min_factor: float = 1e-6

    def radii(self) -> np.ndarray:
        r_min = self.r_min_factor * self.r_max
        m = self.n_geometric - 1
        g = lambda rg: rg * (1.0 - (r_min / rg) ** (1.0 / m)) - self.spacing
        hi = self.r_max
        if g(hi) < 0:
            rg = hi
        else:
            rg = brentq(g, r_min * (1 + 1e-9), hi)
        geo = np.geomspace(r_min, rg, self.n_geometric)
        n_uni = max(1, int(math.ceil((self.r_max - rg) / self.spacing)))
        uni = np.linspace(rg, self.r_max, n_uni + 1)[1:]
        return np.concatenate([[0.0], geo, uni])

    def as_dict(self) -> dict:
        return {"r_max": self.r_max, "n_geometric": self.n_geometric,
                "spacing": self.spacing, "r_min_factor": self.r_min_factor}


class RadialCharFn:
    """Isotropic characteristic function sampled on a radial grid.

    Immutable.  ``deficit`` holds ``1 - phi`` at each radius; ``values`` is
    ``1 - deficit``.  Interpolation is a not-a-knot cubic spline by default
    (``"pchip"`` gives the shape-preserving variant).  Beyond ``r_max`` only
    the bound |phi - 1| <= 2 is known.
    """

    tail_bound = 2.0

    def __init__(self, radii, deficit, interpolation: str = "cubic", meta: dict | None = None):
        r = np.array(radii, dtype=float)
        d = np.array(deficit)
        if r.ndim != 1 or r.shape != d.shape or r.size < 6:
            raise DomainError("radii and deficit must be matching 1-d arrays (>= 6 nodes)")
        if r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise DomainError("radii must start at 0 and increase strictly")
        if np.iscomplexobj(d):
            if np.max(np.abs(d.imag)) <= IMAG_ZERO:
                d = d.real.copy()
            else:
                d = d.astype(complex)
        else:
            d = d.astype(float)
        if abs(d[0]) > 1e-12:
            raise DomainError("phi(0) must equal 1")
        d[0] = 0.0
        if np.max(np.abs(1.0 - d)) > 1.0 + 1e-12:
            raise DomainError("|phi| exceeds 1: not a characteristic function")
        if interpolation not in ("cubic", "pchip"):
            raise DomainError("interpolation must be 'cubic' or 'pchip'")
        if interpolation == "pchip" and np.iscomplexobj(d):
            raise DomainError("pchip interpolation needs real values")
        r.setflags(write=False)
        d.setflags(write=False)
        self.radii = r
        self.deficit = d
        self.interpolation = interpolation
        self.meta = dict(meta or {})

    @classmethod
    def sample(cls, fn, radii=None, interpolation: str = "cubic") -> "RadialCharFn":
        """Sample the radial average of an analytic characteristic function."""
        if isinstance(fn, RadialCharFn):
            return fn if radii is None else fn.resample(radii)
        radii = RadialGrid().radii() if radii is None else np.asarray(radii, dtype=float)
        return cls(radii, fn.radial_deficit(radii), interpolation, {"family": fn.spec()})

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    @property
    def values(self) -> np.ndarray:
        return 1.0 - self.deficit

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.deficit)

    @cached_property
    def spline(self):
        if self.interpolation == "pchip":
            return PchipInterpolator(self.radii, self.deficit)
        return CubicSpline(self.radii, self.deficit)

    @cached_property
    def head_power(self):
        """(u_1, p) with -log phi ~ u_1 (r / r_1)^p on the first cell, or None.

        A cubic through 0 cannot follow r^p with p < 2 there.  The power is
        read off the first two nodes; fitting -log phi rather than 1 - phi
        makes the head exact for stable and Gaussian laws.
        """
        if not self.is_real:
            return None
        r1, r2 = self.radii[1], self.radii[2]
        d1, d2 = self.deficit[1], self.deficit[2]
        if not (HEAD_NOISE < d1 < 0.5 and HEAD_NOISE < d2 < 0.5):
            return None
        u1, u2 = -math.log1p(-d1), -math.log1p(-d2)
        p = math.log(u2 / u1) / math.log(r2 / r1)
        return (u1, p) if 0.0 < p <= 4.0 else None

    def deficit_at(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > self.r_max * (1 + 1e-12)):
            raise DomainError("radius outside the sampled range [0, r_max]")
        out = self.spline(r)
        head = self.head_power
        if head is not None:
            first = r < self.radii[1]
            if np.any(first):
                u = head[0] * (np.where(first, r, 0.0) / self.radii[1]) ** head[1]
                out = np.where(first, -np.expm1(-u), out)
        return out

    def __call__(self, r) -> np.ndarray:
        return 1.0 - self.deficit_at(r)

    radial_deficit = deficit_at

    def resample(self, radii) -> "RadialCharFn":
        radii = np.asarray(radii, dtype=float)
        return RadialCharFn(radii, self.deficit_at(radii), self.interpolation, self.meta)

    def with_deficit(self, deficit, **meta) -> "RadialCharFn":
        return RadialCharFn(self.radii, deficit, self.interpolation, {**self.meta, **meta})

    def same_grid(self, other: "RadialCharFn") -> bool:
        return self.radii.shape == other.radii.shape and np.array_equal(self.radii, other.radii)

    # serialization -----------------------------------------------------------
    def to_csv(self, path, header: dict | None = None) -> None:
        """CSV with columns r, re, im, deficit, preceded by one ``# {json}`` line."""
        head = {"grid": {"n": int(self.radii.size), "r_max": self.r_max},
                "interpolation": self.interpolation, **self.meta, **(header or {})}
        d = np.asarray(self.deficit)
        re_, im_ = 1.0 - d.real, -(d.imag if np.iscomplexobj(d) else np.zeros_like(d))
        with open(path, "w") as fh:
            fh.write("# " + json.dumps(head, sort_keys=True, default=str) + "\n")
            fh.write("r,re,im,deficit\n")
            for row in zip(self.radii, re_, im_, d.real):
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "RadialCharFn":
        with open(path) as fh:
            first = fh.readline()
            meta = json.loads(first[1:]) if first.startswith("#") else {}
            cols = (first if not first.startswith("#") else fh.readline()).strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        col = {c: data[:, i] for i, c in enumerate(cols)}
        d = col["deficit"] if "deficit" in col else 1.0 - col["re"]
        if "im" in col and np.any(col["im"] != 0):
            d = d - 1j * col["im"]
        interp = meta.pop("interpolation", "cubic")
        meta.pop("grid", None)
        return cls(col["r"], d, interp, meta)


CharFn = "AnalyticCharFn | RadialCharFn"


# --------------------------------------------------------------------------
# norms


@dataclass(frozen=True)
class NormResult:
    """Extended nonnegative real with diagnostics.

    ``value`` is +inf when ``divergent``.  ``tail`` is the analytic bound on
    the part of the norm that lies beyond the sampled range, and ``slope`` the
    fitted small-r power used for the divergence decision.
    """

    value: float
    tail: float = 0.0
    divergent: bool = False
    inconclusive: bool = False
    slope: float = math.nan
    error: float = 0.0

    @property
    def finite(self) -> bool:
        return not self.divergent and not self.inconclusive and math.isfinite(self.value)

    def __float__(self):
        return float(self.value)

    def as_dict(self) -> dict:
        return {"value": self.value, "tail": self.tail, "divergent": self.divergent,
                "inconclusive": self.inconclusive, "slope": self.slope, "error": self.error}


def _is_one(fn) -> bool:
    return isinstance(fn, AnalyticCharFn) and all(
        isinstance(f, PointMass) for _, f in fn._active())


def _pair_on_grid(phi, psi):
    """Common radial grid representation (deficit of psi minus deficit of phi = phi - psi)."""
    if isinstance(phi, RadialCharFn):
        grid = phi.radii
        if isinstance(psi, RadialCharFn) and not phi.same_grid(psi):
            if psi.r_max < phi.r_max:
                grid = psi.radii
        base = phi if np.array_equal(grid, phi.radii) else phi.resample(grid)
    else:
        grid = psi.radii
        base = RadialCharFn.sample(phi, grid)
    if isinstance(psi, RadialCharFn):
        other = psi if np.array_equal(grid, psi.radii) else psi.resample(grid)
    else:
        other = RadialCharFn.sample(psi, grid)
    dev = np.asarray(other.deficit) - np.asarray(base.deficit)
    return grid, dev


def _slope(x, y) -> float:
    x, y = np.log(np.asarray(x)), np.log(np.asarray(y))
    return float(np.polyfit(x, y, 1)[0])


# first-cell power fits need values above roundoff
HEAD_NOISE = 1e-14

# deviations below this are roundoff and carry no small-r power
KNORM_NOISE = 1e-13


def _grid_knorm(r, dev, alpha) -> NormResult:
    a = np.abs(dev[1:])
    rr = r[1:]
    if not np.any(a > 0):
        return NormResult(0.0, tail=2.0 * r[-1] ** -alpha, slope=math.inf)
    ratio = a / rr ** alpha
    head = ratio[:3]
    tail = 2.0 * r[-1] ** -alpha
    if np.all(a[:3] > KNORM_NOISE):
        g = _slope(rr[:3], head)
        if g < -KNORM_SLOPE_TOL:
            return NormResult(math.inf, tail=tail, divergent=True, slope=g)
    else:
        g = math.nan
    return NormResult(float(ratio.max()), tail=tail, slope=g)


def _analytic_directions(*fns) -> np.ndarray:
    if all(fn.isotropic for fn in fns):
        return np.array([[0.0, 0.0, 1.0]])
    extra = [ax for fn in fns for ax in fn.axes]
    dirs = [np.array(extra)] if extra else []
    dirs += [np.array([[0.0, 0.0, 1.0]]), _fib_directions(40)]
    return np.concatenate(dirs)


def _analytic_dev(phi, psi, dirs):
    def dev(r):
        xi = np.asarray(r, dtype=float)[..., None, None] * dirs
        return psi.deficit(xi) - phi.deficit(xi)
    return dev


def _analytic_exponent(phi, psi, dirs, kind="deviation") -> float:
    """Small-r power of |phi - psi| (or of |Re|) along the worst direction."""
    if _is_one(psi) or _is_one(phi):
        fn = phi if _is_one(psi) else psi
        return fn.deviation_exponent if kind == "deviation" else fn.exponent
    lo = 1e-6 * min(phi.scales[0], psi.scales[0])
    rs = np.geomspace(lo, 100 * lo, 7)
    vals = _analytic_dev(phi, psi, dirs)(rs)
    vals = np.abs(vals if kind == "deviation" else vals.real).max(axis=-1)
    if not np.any(vals > 0):
        return math.inf
    if np.any(vals == 0):
        return math.inf
    return _slope(rs, vals)


def _analytic_knorm(phi, psi, alpha) -> NormResult:
    dirs = _analytic_directions(phi, psi)
    p = _analytic_exponent(phi, psi, dirs)
    if p == math.inf and _is_one(phi) and _is_one(psi):
        return NormResult(0.0, slope=p)
    if p < alpha - KNORM_SLOPE_TOL:
        return NormResult(math.inf, divergent=True, slope=p - alpha)
    lo_s, hi_s = min(phi.scales[0], psi.scales[0]), max(phi.scales[1], psi.scales[1])
    r_lo, r_hi = 1e-9 * lo_s, 1e7 * hi_s
    rs = np.geomspace(r_lo, r_hi, 4001)
    dev = _analytic_dev(phi, psi, dirs)
    ratio = np.abs(dev(rs)) / rs[:, None] ** alpha
    k, j = np.unravel_index(np.argmax(ratio), ratio.shape)
    best = float(ratio[k, j])
    if 0 < k < rs.size - 1:
        d1 = dirs[j:j + 1]
        f = lambda u: -float(np.abs(_analytic_dev(phi, psi, d1)(np.exp(u))).max() / math.exp(u * alpha))
        res = minimize_scalar(f, bounds=(math.log(rs[k - 1]), math.log(rs[k + 1])),
                              method="bounded", options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    return NormResult(best, tail=2.0 * r_hi ** -alpha, slope=p - alpha)


def knorm_diff(phi, psi, alpha: float) -> NormResult:
    """sup_xi |phi(xi) - psi(xi)| / |xi|^alpha."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if isinstance(phi, AnalyticCharFn) and isinstance(psi, AnalyticCharFn):
        return _analytic_knorm(phi, psi, alpha)
    r, dev = _pair_on_grid(phi, psi)
    return _grid_knorm(r, dev, alpha)


def knorm(phi, alpha: float) -> NormResult:
    """||phi - 1||_alpha = sup_xi |phi(xi) - 1| / |xi|^alpha."""
    if not 0.0 < alpha <= 2.0:
        raise DomainError("alpha must lie in (0, 2]")
    return knorm_diff(phi, point_mass(), alpha)


_GL8 = np.polynomial.legendre.leggauss(8)
_GL32 = np.polynomial.legendre.leggauss(32)


def _gl_pieces(edges, f, rule=_GL32, log=False):
    """Composite Gauss-Legendre of f over consecutive edges (optionally in log r)."""
    x, w = rule
    a, b = np.asarray(edges[:-1]), np.asarray(edges[1:])
    if log:
        la, lb = np.log(a), np.log(b)
        u = 0.5 * (lb - la)[:, None] * (x + 1.0) + la[:, None]
        r = np.exp(u)
        vals = f(r) * r
        return float(np.sum(0.5 * (lb - la)[:, None] * w * vals))
    r = 0.5 * (b - a)[:, None] * (x + 1.0) + a[:, None]
    return float(np.sum(0.5 * (b - a)[:, None] * w * f(r)))


def _mnorm_classify(p, alpha):
    """Integrand power near 0 is p - 1 - alpha; returns (divergent, inconclusive)."""
    q = p - 1.0 - alpha
    if q <= MNORM_BORDER[0]:
        return True, False
    if q < MNORM_BORDER[1]:
        return False, True
    return False, False


def _grid_mnorm(r, dev, alpha) -> NormResult:
    a = np.abs(np.real(dev))
    tail_bound = 2.0 * FOUR_PI * r[-1] ** -alpha / alpha
    if not np.any(a[1:] > 0):
        return NormResult(0.0, tail=tail_bound, slope=math.inf)
    # three decades nearest 0
    head = (r > 0) & (r <= 1e3 * r[1])
    if np.all(a[head] > KNORM_NOISE):
        p = _slope(r[head], a[head])
    else:
        p = math.inf
    q = p - 1.0 - alpha
    divergent, inconclusive = _mnorm_classify(p, alpha)
    if divergent:
        return NormResult(math.inf, tail=tail_bound, divergent=True, slope=q)
    spline = CubicSpline(r, np.real(dev))
    body = _gl_pieces(r[1:], lambda x: np.abs(spline(x)) * x ** (-1.0 - alpha), _GL8)
    # first cell [0, r_1] by the fitted power law
    first = a[1] * r[1] ** -alpha / (p - alpha) if p > alpha else math.inf
    tail_est = a[-1] * r[-1] ** -alpha / alpha
    val = FOUR_PI * (first + body + tail_est)
    return NormResult(val, tail=tail_bound, divergent=False, inconclusive=inconclusive, slope=q)


def _analytic_mnorm(phi, psi, alpha) -> NormResult:
    iso = phi.isotropic and psi.isotropic
    if not iso and not (_is_one(phi) or _is_one(psi)):
        raise UnsupportedError("M-norm of a difference of anisotropic measures is not supported")
    # 1 - Re phi >= 0 for a single measure, so the sphere average is exact
    dev = lambda r: psi.radial_deficit(r) - phi.radial_deficit(r)
    exact = _is_one(phi) or _is_one(psi)
    if exact:
        p = (psi if _is_one(phi) else phi).exponent
    else:
        p = _analytic_exponent(phi, psi, np.array([[0.0, 0.0, 1.0]]), kind="re")
    if p == math.inf:
        return NormResult(0.0, slope=math.inf)
    if exact:
        # known exponent: r^(p-1-alpha) is integrable at 0 iff p > alpha
        divergent, inconclusive = p <= alpha, False
    else:
        divergent, inconclusive = _mnorm_classify(p, alpha)
    q = p - 1.0 - alpha
    if divergent:
        return NormResult(math.inf, divergent=True, slope=q)
    lo_s, hi_s = min(phi.scales[0], psi.scales[0]), max(phi.scales[1], psi.scales[1])
    r0 = 1e-6 * lo_s
    first = abs(float(dev(r0))) * r0 ** -alpha / (p - alpha)
    freq = max(phi.frequency, psi.frequency)
    f = lambda r: np.abs(dev(r)) * r ** (-1.0 - alpha)
    if freq > 0:
        r_osc = 10.0 / freq
        edges = np.geomspace(r0, r_osc, max(2, int(np.log(r_osc / r0) / np.log(1.5)) + 1))
        period = 2.0 * math.pi / freq
        r_end = max(1e5 / freq, 1e7 * hi_s if freq == 0 else 1e5 / freq)
        lin = np.arange(r_osc, r_end, 10.0 * period)
        body = _gl_pieces(edges, f, log=True)
        body += sum(_gl_pieces(lin[i:i + 4096], f) for i in range(0, lin.size - 1, 4095))
        r_hi = float(lin[-1])
    else:
        r_hi = 1e7 * hi_s
        edges = np.geomspace(r0, r_hi, int(np.log(r_hi / r0) / np.log(1.5)) + 1)
        body = _gl_pieces(edges, f, log=True)
    lim = abs(psi.limit - phi.limit)
    tail = lim * r_hi ** -alpha / alpha
    val = FOUR_PI * (first + body + tail)
    return NormResult(val, tail=FOUR_PI * 2.0 * r_hi ** -alpha / alpha, inconclusive=inconclusive,
                      slope=q)


def mnorm_re(phi, alpha: float, other=None) -> NormResult:
    """int_{R^3} |Re phi - Re psi| / |xi|^{3+alpha} d xi, with psi = 1 by default.

    Sampled inputs are integrated on their grid: the first cell uses the
    fitted small-r power, the part beyond r_max is estimated by continuing
    the last deficit value, and ``tail`` reports the hard bound 8 pi r_max^-a / a.
    """
    if not 0.0 < alpha < 2.0:
        raise DomainError("alpha must lie in (0, 2)")
    psi = point_mass() if other is None else other
    if isinstance(phi, AnalyticCharFn) and isinstance(psi, AnalyticCharFn):
        return _analytic_mnorm(phi, psi, alpha)
    r, dev = _pair_on_grid(phi, psi)
    return _grid_mnorm(r, dev, alpha)


def dis_distance(phi, psi, alpha: float, beta: float, eps: float) -> float:
    """||phi - psi||_{M~alpha} + ||phi - psi||_beta + ||phi - psi||_beta^eps."""
    if not (0.0 < beta < alpha < 2.0):
        raise DomainError("need 0 < beta < alpha < 2")
    if not 0.0 < eps < 1.0:
        raise DomainError("need 0 < eps < 1")
    m = mnorm_re(phi, alpha, psi)
    k = knorm_diff(phi, psi, beta)
    if not (m.finite and k.finite):
        return math.inf
    return m.value + k.value + k.value ** eps


@dataclass(frozen=True)
class Classification:
    in_K_alpha: bool
    in_M_tilde_alpha: bool
    knorm: NormResult
    mnorm: NormResult
    obstruction: "Obstruction | None" = None

    def as_dict(self) -> dict:
        d = {"in_K": self.in_K_alpha, "in_M_tilde": self.in_M_tilde_alpha,
             "knorm": self.knorm.as_dict(), "mnorm": self.mnorm.as_dict()}
        if self.obstruction is not None:
            d["mean_obstruction"] = self.obstruction.as_dict()
        return d


def classify(phi, alpha: float) -> Classification:
    """Membership of phi in K^alpha and in M-tilde^alpha.

    Borderline ("inconclusive") M-norm decisions do not certify membership.
    For alpha > 1 a nonzero mean is checked through :func:`mean_obstruction`.
    """
    if not 0.0 < alpha < 2.0:
        raise DomainError("alpha must lie in (0, 2)")
    k = knorm(phi, alpha)
    m = mnorm_re(phi, alpha)
    obstruction = None
    in_k = k.finite
    if alpha > 1.0 and isinstance(phi, AnalyticCharFn):
        mu = np.linalg.norm(phi.mean)
        if mu > 0:
            obstruction = mean_obstruction(float(mu), alpha)
            in_k = in_k and obstruction.bounded
    return Classification(in_k, in_k and m.finite, k, m, obstruction)


@dataclass(frozen=True)
class Obstruction:
    radii: np.ndarray
    ratios: np.ndarray
    growth_exponent: float
    bounded: bool

    def as_dict(self) -> dict:
        return {"growth_exponent": self.growth_exponent, "bounded": self.bounded,
                "max_ratio": float(np.max(self.ratios))}


def mean_obstruction(a: float, alpha: float) -> Obstruction:
    """|exp(-i r a) - 1| / r^alpha along the shift axis for r = 10^-k, k = 1..12."""
    if a < 0:
        raise DomainError("a must be nonnegative")
    r = 10.0 ** -np.arange(1, 13, dtype=float)
    ratio = 2.0 * np.abs(np.sin(0.5 * r * a)) / r ** alpha
    if not np.any(ratio > 0):
        return Obstruction(r, ratio, 0.0, True)
    g = _slope(r, ratio)
    return Obstruction(r, ratio, g, g >= -KNORM_SLOPE_TOL)


def as_radial(fn, grid: RadialGrid | np.ndarray | None = None,
              interpolation: str = "cubic") -> RadialCharFn:
    """Isotropic sampled version of ``fn`` (sphere average for anisotropic families)."""
    if isinstance(fn, RadialCharFn):
        return fn
    radii = grid.radii() if isinstance(grid, RadialGrid) else grid
    return RadialCharFn.sample(fn, radii, interpolation)
