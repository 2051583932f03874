"""Angular cross-sections b(cos theta), their cutoffs, and the rate constants.

Kernels live on the symmetrized range theta in [0, pi/2].  Tabulated input
that extends past pi/2 is folded with b(theta) + b(pi - theta).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .errors import ClassificationError, DivergenceError, DomainError, NumericError

HALF_PI = 0.5 * math.pi
FORMS = ("constant", "power_law", "tabulated")
# candidate exponents scanned by singularity_index for tabulated kernels
SINGULARITY_GRID = tuple(round(0.05 * k, 10) for k in range(1, 41))
DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class AngularKernel:
    """Collision cross-section b(cos theta) on (0, pi/2], optionally cut at ``cutoff_n``.

    Use the :meth:`constant`, :meth:`power_law` and :meth:`tabulated`
    constructors rather than filling fields by hand.
    """

    form: str
    level: float = 1.0
    s: float = 0.0
    K: float = 1.0
    regular_part: Optional[Callable[[np.ndarray], np.ndarray]] = None
    table_theta: tuple = ()
    table_values: tuple = ()
    cutoff_n: Optional[float] = None
    _interp: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.form not in FORMS:
            raise DomainError(f"unknown kernel form {self.form!r}; expected one of {FORMS}")
        if self.cutoff_n is not None and not self.cutoff_n > 0:
            raise DomainError("cutoff_n must be positive")
        if self.form == "constant" and self.level < 0:
            raise DomainError("constant kernel level must be nonnegative")
        if self.form == "power_law":
            if not 0.0 < self.s < 1.0:
                raise DomainError("power_law needs 0 < s < 1")
            if not self.K > 0:
                raise DomainError("power_law needs K > 0")
        if self.form == "tabulated":
            th = np.asarray(self.table_theta, dtype=float)
            vals = np.asarray(self.table_values, dtype=float)
            if th.ndim != 1 or th.shape != vals.shape or th.size < 2:
                raise DomainError("tabulated kernel needs matching 1-d theta/value tables")
            if np.any(np.diff(th) <= 0) or th[0] <= 0 or th[-1] > math.pi + 1e-12:
                raise DomainError("tabulated theta must be increasing inside (0, pi]")
            if np.any(vals < 0):
                raise DomainError("tabulated kernel values must be nonnegative")
            object.__setattr__(self, "_interp", _TableKernel(th, vals))

    # constructors -----------------------------------------------------------
    @classmethod
    def constant(cls, level: float = 1.0, cutoff_n: float | None = None) -> "AngularKernel":
        return cls("constant", level=float(level), cutoff_n=cutoff_n)

    @classmethod
    def power_law(cls, s: float, K: float = 1.0, regular_part=None,
                  cutoff_n: float | None = None) -> "AngularKernel":
        """b(cos theta) = K * regular_part(theta) * theta^-(2+2s).

        ``regular_part`` must be bounded, nonnegative and equal 1 at theta = 0.
        """
        return cls("power_law", s=float(s), K=float(K), regular_part=regular_part,
                   cutoff_n=cutoff_n)

    @classmethod
    def tabulated(cls, theta: Sequence[float], values: Sequence[float],
                  cutoff_n: float | None = None) -> "AngularKernel":
        return cls("tabulated", table_theta=tuple(map(float, theta)),
                   table_values=tuple(map(float, values)), cutoff_n=cutoff_n)

    def with_cutoff(self, n: float | None) -> "AngularKernel":
        return replace(self, cutoff_n=None if n is None else float(n))

    # evaluation ---------------------------------------------------------------
    def raw(self, theta) -> np.ndarray:
        """Uncut b(cos theta) for theta in (0, pi/2], no domain checks."""
        theta = np.asarray(theta, dtype=float)
        if self.form == "constant":
            return np.full_like(theta, self.level)
        if self.form == "power_law":
            with np.errstate(divide="ignore", over="ignore"):
                out = self.K * theta ** (-(2.0 + 2.0 * self.s))
            if self.regular_part is not None:
                out = out * np.asarray(self.regular_part(theta), dtype=float)
            return out
        return self._interp(theta)

    def __call__(self, theta) -> np.ndarray:
        out = self.raw(theta)
        if self.cutoff_n is not None:
            out = np.minimum(out, self.cutoff_n)
        return out

    @property
    def is_bounded(self) -> bool:
        """True when b_n is bounded, so that gamma_2 = int b_n d sigma is finite."""
        if self.cutoff_n is not None or self.form == "constant":
            return True
        if self.form == "tabulated":
            return not self._interp.singular
        return False

    def crossover(self) -> float | None:
        """Angle below which the cutoff min{b, n} is active, if any."""
        if self.cutoff_n is None or self.form == "constant":
            return None
        n = self.cutoff_n
        if self.raw(HALF_PI) >= n:
            return HALF_PI
        if self.form == "power_law" and self.regular_part is None:
            return (self.K / n) ** (1.0 / (2.0 + 2.0 * self.s))
        lo = 1e-30 if self.form == "power_law" else self._interp.theta_min * 1e-12
        f = lambda t: float(self.raw(t)) - n
        if f(lo) <= 0:
            return None
        try:
            from scipy.optimize import brentq
            return brentq(f, lo, HALF_PI, xtol=1e-15, rtol=1e-14)
        except ValueError:
            return None

    def describe(self) -> dict:
        d = {"form": self.form, "cutoff_n": self.cutoff_n}
        if self.form == "constant":
            d["level"] = self.level
        elif self.form == "power_law":
            d.update(s=self.s, K=self.K, regular_part="pure" if self.regular_part is None
                     else getattr(self.regular_part, "__name__", "custom"))
        else:
            d.update(n_table=len(self.table_theta))
        return d


class _TableKernel:
    """Folded PCHIP interpolant of a tabulated kernel with a power-law extension below the table."""

    def __init__(self, theta, values):
        raw = PchipInterpolator(theta, values, extrapolate=False)
        lo, hi = theta[0], theta[-1]
        folded_theta = theta[theta <= HALF_PI]
        if folded_theta.size == 0 or folded_theta[-1] < HALF_PI:
            folded_theta = np.append(folded_theta, HALF_PI)
        mirror = math.pi - folded_theta
        # entries past pi/2 fold back onto [0, pi/2]; a table ending at pi/2 is taken as folded
        if hi > HALF_PI:
            extra = np.where((mirror >= lo) & (mirror <= hi),
                             np.nan_to_num(raw(np.clip(mirror, lo, hi))), 0.0)
        else:
            extra = np.zeros_like(folded_theta)
        base = np.nan_to_num(raw(np.clip(folded_theta, lo, hi)))
        folded = base + extra
        self.theta_min = float(folded_theta[0])
        self._pchip = PchipInterpolator(folded_theta, folded, extrapolate=False)
        # leading behaviour b ~ c * theta^-q from the smallest decade of the table
        head = folded_theta <= 10.0 * folded_theta[0]
        if head.sum() >= 2 and np.all(folded[head] > 0):
            q = -np.polyfit(np.log(folded_theta[head]), np.log(folded[head]), 1)[0]
        else:
            q = 0.0
        self.q = float(q) if q > 0.05 else 0.0
        self.singular = self.q > 0.0
        self.c = float(folded[0]) * self.theta_min ** self.q

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        inside = np.nan_to_num(self._pchip(np.clip(theta, self.theta_min, HALF_PI)))
        below = self.c * np.maximum(theta, 1e-300) ** (-self.q)
        return np.where(theta < self.theta_min, below, inside)


def eval_b(kernel: AngularKernel, theta) -> np.ndarray | float:
    """min{b(cos theta), n} for theta in (0, pi/2]."""
    th = np.asarray(theta, dtype=float)
    if np.any(~np.isfinite(th)) or np.any(th <= 0.0) or np.any(th > HALF_PI + 1e-15):
        raise DomainError("theta must lie in (0, pi/2]")
    out = kernel(th)
    return float(out) if out.ndim == 0 else out


def singularity_index(kernel: AngularKernel, candidates: Sequence[float] = SINGULARITY_GRID) -> float:
    """Infimum of exponents a with (sin theta/2)^a b(cos theta) sin theta integrable near 0.

    Power-law kernels report 2s (admissible exponents are strictly larger);
    bounded kernels report 0.  Tabulated kernels report the smallest grid
    exponent that passes, using the fitted small-angle slope of the table.
    """
    if kernel.form == "constant":
        return 0.0
    if kernel.form == "power_law":
        return 2.0 * kernel.s
    q = kernel._interp.q
    if q == 0.0:
        return 0.0
    for a in candidates:
        # integrand ~ theta^(a + 1 - q) near 0
        if a + 1.0 - q > -1.0:
            return float(a)
    raise ClassificationError(
        f"tabulated kernel grows like theta^-{q:.3f}: no exponent <= 2 makes it integrable")


def angular_factor(alpha: float, theta) -> np.ndarray:
    """sin^a(theta/2) + cos^a(theta/2) - 1 without cancellation at small theta."""
    x = 0.5 * np.asarray(theta, dtype=float)
    s = np.sin(x)
    cos_term = np.expm1(0.5 * alpha * np.log1p(-s * s))
    with np.errstate(divide="ignore"):
        sin_term = np.where(s > 0, np.exp(alpha * np.log(np.where(s > 0, s, 1.0))), 0.0 if alpha > 0 else 1.0)
    return sin_term + cos_term


def _quad(f, a, b, points=None, tol=DEFAULT_TOL, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, a, b, points=points, epsabs=tol * 1e-1, epsrel=1e-13,
                                  limit=500, **kw)
    return val, err


def _panels(kernel: AngularKernel) -> list[float]:
    """Breakpoints in [0, pi/2] where b_n changes character."""
    pts = [0.0, HALF_PI]
    tc = kernel.crossover()
    if tc is not None and 0.0 < tc < HALF_PI:
        pts.append(tc)
        t = 2.0 * tc
        while t < HALF_PI:
            pts.append(t)
            t *= 2.0
    if kernel.form == "tabulated":
        pts.extend(np.linspace(kernel._interp.theta_min, HALF_PI, 9)[:-1].tolist())
    return sorted(set(pts))


@dataclass
class KernelConstants:
    """gamma_a^n, lambda_a^n = gamma_a^n - gamma_2^n and their quadrature residuals."""

    exponents: tuple
    gamma: dict
    lam: dict
    gamma2: float
    residual: dict
    cutoff_n: Optional[float] = None

    def rows(self):
        for a in self.exponents:
            yield a, self.gamma[a], self.lam[a], self.residual[a]

    def as_dict(self) -> dict:
        return {
            "cutoff_n": self.cutoff_n,
            "gamma2": self.gamma2,
            "rows": [{"alpha": a, "gamma": g, "lambda": l, "residual": r} for a, g, l, r in self.rows()],
        }


def _integrate_weighted(kernel, weight, tol):
    pts = _panels(kernel)
    total, err = 0.0, 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        v, e = _quad(lambda t: float(kernel(t)) * weight(t) * math.sin(t), a, b, tol=tol)
        total += v
        err += e
    return 2.0 * math.pi * total, 2.0 * math.pi * err


def rate_constants(kernel: AngularKernel, exponents: Sequence[float],
                   tol: float = DEFAULT_TOL) -> KernelConstants:
    """gamma_a^n = 2 pi int_0^{pi/2} b_n (sin^a + cos^a)(theta/2) sin theta d theta, per exponent.

    ``tol`` is an absolute tolerance for constants of unit size and scales
    with the magnitude of larger constants.
    """
    if not kernel.is_bounded:
        raise DivergenceError("kernel is not cut off; use lambda_limit for the non-cutoff constants")
    exps = tuple(float(a) for a in exponents)
    for a in exps:
        if not 0.0 <= a <= 2.0:
            raise DomainError(f"exponent {a} outside [0, 2]")
    gamma2, err2 = _integrate_weighted(kernel, lambda t: 1.0, tol)
    gamma, lam, residual = {}, {}, {}
    for a in exps:
        lv, le = _integrate_weighted(kernel, lambda t, a=a: float(angular_factor(a, t)), tol)
        lam[a] = lv
        gamma[a] = lv + gamma2
        residual[a] = le + err2
        if residual[a] > tol * max(1.0, abs(gamma[a])):
            raise NumericError(f"rate constant for alpha={a} did not converge", residual[a])
    return KernelConstants(exps, gamma, lam, gamma2, residual, kernel.cutoff_n)


def _power_lambda(K, s, reg, alpha, lo, hi):
    """2 pi int_lo^hi K reg(t) t^-(2+2s) (sin^a + cos^a - 1)(t/2) sin t dt, lo may be 0.

    The sin^a and cos^a - 1 pieces have different small-angle powers; each is
    integrated with its own algebraic end-point weight.
    """
    reg = reg or (lambda t: 1.0)

    def sin_part(t):
        t = max(t, 1e-300)
        return K * float(reg(t)) * (math.sin(t / 2) / t) ** alpha * (math.sin(t) / t)

    def cos_part(t):
        if t < 1e-7:
            # (cos^a(t/2) - 1) / t^2 -> -a/8
            return K * float(reg(max(t, 1e-300))) * (-alpha / 8.0)
        c = math.expm1(0.5 * alpha * math.log1p(-math.sin(t / 2) ** 2))
        return K * float(reg(t)) * (c / (t * t)) * (math.sin(t) / t)

    out, err = 0.0, 0.0
    for f, p in ((sin_part, alpha - 1.0 - 2.0 * s), (cos_part, 1.0 - 2.0 * s)):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            if lo == 0.0:
                v, e = integrate.quad(f, 0.0, hi, weight="alg", wvar=(p, 0.0),
                                      epsabs=1e-14, epsrel=1e-13, limit=500)
            else:
                v, e = integrate.quad(lambda t: f(t) * t ** p, lo, hi,
                                      epsabs=1e-14, epsrel=1e-13, limit=500)
        out += v
        err += e
    return 2.0 * math.pi * out, 2.0 * math.pi * err


def lambda_limit(kernel: AngularKernel, alpha: float, return_error: bool = False):
    """lambda_a of the non-cutoff kernel, integrated directly through the theta = 0 singularity."""
    if not 0.0 < alpha <= 2.0:
        raise DomainError("alpha must lie in (0, 2]")
    base = kernel.with_cutoff(None)
    inf = singularity_index(base) if base.form != "tabulated" or base._interp.singular else 0.0
    if base.form == "power_law" or (base.form == "tabulated" and base._interp.singular):
        if alpha <= inf:
            raise DivergenceError(f"lambda_{alpha} diverges: exponent must exceed {inf}")
    if alpha == 2.0:
        return (0.0, 0.0) if return_error else 0.0
    if base.form == "power_law":
        val, err = _power_lambda(base.K, base.s, base.regular_part, alpha, 0.0, HALF_PI)
    elif base.form == "tabulated" and base._interp.singular:
        tab = base._interp
        s_eff = tab.q / 2.0 - 1.0
        v0, e0 = _power_lambda(tab.c, s_eff, None, alpha, 0.0, tab.theta_min) if s_eff > -1 else (0.0, 0.0)
        rest = AngularKernel.tabulated(base.table_theta, base.table_values)
        pts = [p for p in _panels(rest) if p >= tab.theta_min]
        v1, e1 = 0.0, 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            v, e = _quad(lambda t: float(rest(t)) * float(angular_factor(alpha, t)) * math.sin(t), a, b)
            v1 += 2 * math.pi * v
            e1 += 2 * math.pi * e
        val, err = v0 + v1, e0 + e1
    else:
        c = rate_constants(base, [alpha])
        val, err = c.lam[alpha], c.residual[alpha]
    return (val, err) if return_error else val


@dataclass(frozen=True)
class ThetaRule:
    """Fixed composite Gauss-Legendre rule in theta with the kernel folded into the weights.

    ``weights`` include the factor 2 pi b_n(cos theta) sin theta, so that
    ``weights.sum()`` is gamma_2^n and ``weights @ f(theta)`` is the sphere
    integral of b_n f for axially symmetric f.
    """

    theta: np.ndarray
    weights: np.ndarray

    @property
    def gamma2(self) -> float:
        return float(self.weights.sum())

    @property
    def cos_half(self) -> np.ndarray:
        return np.cos(0.5 * self.theta)

    @property
    def sin_half(self) -> np.ndarray:
        return np.sin(0.5 * self.theta)


def theta_rule(kernel: AngularKernel, order: int = 64) -> ThetaRule:
    """Quadrature rule for int_{S^2} b_n(.) f d sigma with f depending on theta only.

    A bounded kernel without a cutoff crossover uses one ``order``-point
    panel; otherwise each panel between breakpoints gets ``order // 2`` points.
    """
    if not kernel.is_bounded:
        raise DivergenceError("collision quadrature needs a cutoff kernel")
    pts = _panels(kernel)
    per = order if len(pts) == 2 else max(8, order // 2)
    x, w = np.polynomial.legendre.leggauss(per)
    th, wt = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        half = 0.5 * (b - a)
        th.append(a + half * (x + 1.0))
        wt.append(half * w)
    th = np.concatenate(th)
    wt = np.concatenate(wt)
    return ThetaRule(th, 2.0 * math.pi * kernel(th) * np.sin(th) * wt)
