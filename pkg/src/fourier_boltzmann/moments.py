"""Moments from characteristic functions, and the (1 - Laplacian)^n lift.

For a symmetric law F the alpha-moment satisfies

    int |v|^alpha dF = (1 / c(alpha)) int (1 - Re phi(xi)) / |xi|^(3+alpha) d xi,

with the Levy constant ``c(alpha) = int (1 - cos zeta_1) / |zeta|^(3+alpha) d zeta``.
"""
from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .charfun import (AnalyticCharFn, RadialCharFn, RadialGrid, mnorm_re, one_minus_sinc,
                      point_mass)
from .errors import DivergenceError, DomainError, NumericError, UnsupportedError

_LEVY_CACHE: dict[float, tuple[float, float]] = {}
_LEVY_LOCK = threading.Lock()
LEVY_AGREEMENT = 1e-10


def _quiet(f):
    # QAWF reports cycle-level roundoff at these tolerances; the two routes cross-check
    def wrapped(alpha):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            return f(alpha)
    wrapped.__name__, wrapped.__doc__ = f.__name__, f.__doc__
    return wrapped


@_quiet
def _levy_radial(alpha: float) -> float:
    # 4 pi int_0^inf (1 - sinc r) r^(-1-alpha) dr; the sphere average of 1 - cos is 1 - sinc
    head, _ = integrate.quad(lambda r: float(one_minus_sinc(r)) * r ** (-1.0 - alpha), 0.0, 1.0,
                             epsabs=0.0, epsrel=1e-13, limit=200)
    # tail: int_1^inf r^(-1-a) dr - int_1^inf sin(r) r^(-2-a) dr
    osc, _ = integrate.quad(lambda r: r ** (-2.0 - alpha), 1.0, np.inf, weight="sin", wvar=1.0,
                            epsabs=1e-15, limlst=200)
    return 4.0 * math.pi * (head + 1.0 / alpha - osc)


@_quiet
def _levy_cosine(alpha: float) -> float:
    # integrating the sphere average by parts: 4 pi / (1 + alpha) int_0^inf (1 - cos z) z^(-1-alpha) dz
    f = lambda z: 2.0 * math.sin(0.5 * z) ** 2 * z ** (-1.0 - alpha)
    head, _ = integrate.quad(f, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    osc, _ = integrate.quad(lambda z: z ** (-1.0 - alpha), 1.0, np.inf, weight="cos", wvar=1.0,
                            epsabs=1e-15, limlst=200)
    return 4.0 * math.pi / (1.0 + alpha) * (head + 1.0 / alpha - osc)


def levy_constant(alpha: float, return_error: bool = False):
    """c(alpha) from two independent 1-d reductions, cached per alpha.

    Raises :class:`NumericError` when the routes disagree beyond 1e-10 relative.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 2.0:
        raise DivergenceError(f"Levy constant diverges at alpha={alpha} (need 0 < alpha < 2)")
    with _LEVY_LOCK:
        hit = _LEVY_CACHE.get(alpha)
    if hit is None:
        a, b = _levy_radial(alpha), _levy_cosine(alpha)
        err = abs(a - b)
        if err > LEVY_AGREEMENT * abs(a):
            raise NumericError(f"Levy constant routes disagree at alpha={alpha}", err)
        hit = (0.5 * (a + b), err)
        with _LEVY_LOCK:
            _LEVY_CACHE.setdefault(alpha, hit)
    return hit if return_error else hit[0]


@dataclass(frozen=True)
class Moment:
    value: float
    error: float = 0.0
    divergent: bool = False

    def __float__(self):
        return float(self.value)


def moment_from_charfn(phi, alpha: float) -> Moment:
    """alpha-moment of the symmetrized law of phi (equal to the law itself when symmetric)."""
    m = mnorm_re(phi, alpha)
    if not m.finite:
        return Moment(math.inf, math.inf, True)
    c, c_err = levy_constant(alpha, return_error=True)
    tail = m.tail if isinstance(phi, RadialCharFn) else 0.0
    value = m.value / c
    return Moment(value, (m.error + tail) / c + value * c_err / c, False)


def second_moment(phi, n_fit: int = 5) -> Moment:
    """int |v|^2 dF = -3 phi''(0), from the five smallest positive radii.

    The deficit behaves like m2 r^2 / 6; a local log-slope below 1.9
    signals a non-C^2 origin and the moment is reported infinite.
    """
    if isinstance(phi, RadialCharFn):
        if not phi.is_real:
            raise DomainError("second_moment needs a real radial characteristic function")
        r = phi.radii[1:1 + n_fit]
        d = np.asarray(phi.deficit[1:1 + n_fit], dtype=float)
    else:
        r = RadialGrid().radii()[1:1 + n_fit]
        d = phi.radial_deficit(r)
    if np.all(d == 0):
        return Moment(0.0)
    if np.any(d <= 0):
        return Moment(math.nan, math.inf, False)
    slope = float(np.polyfit(np.log(r), np.log(d), 1)[0])
    if slope < 1.9:
        return Moment(math.inf, math.inf, True)
    # d / r^2 = m2/6 + O(r^2)
    coef = np.polyfit(r * r, d / (r * r), 1)
    m2 = 6.0 * float(coef[1])
    resid = float(np.max(np.abs(np.polyval(coef, r * r) - d / (r * r)))) * 6.0
    return Moment(m2, resid)


# ---------------------------------------------------------------------------
# (1 - Laplacian)^n lift


@dataclass(frozen=True)
class Lift:
    """psi = (1 - Laplacian)^n phi on ``radii``; ``normalized`` is psi / psi(0)."""

    radii: np.ndarray
    values: np.ndarray
    psi0: float
    error: float
    normalized: RadialCharFn
    method: str


def _fd_laplacian(f, r, h):
    """Fourth-order central radial Laplacian of an even radial function f."""
    r = np.asarray(r, dtype=float)
    g = lambda x: f(np.abs(x))
    f0 = g(r)
    fp1, fm1, fp2, fm2 = g(r + h), g(r - h), g(r + 2 * h), g(r - 2 * h)
    d2 = (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h)
    d1 = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h)
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, d2 + 2.0 * d1 / safe, 3.0 * d2)


def _smooth(phi: AnalyticCharFn) -> bool:
    # every family with a symbolic radial form is C-infinity at 0
    import sympy as sp
    return phi.sympy_radial(sp.Symbol("r", positive=True)) is not None


def _fd_lift(deficit, radii, n, h):
    def step(f):
        return lambda x: f(x) - _fd_laplacian(f, x, h)
    f = lambda x: 1.0 - deficit(x)
    for _ in range(n):
        f = step(f)
    return f(radii), float(f(np.array([0.0]))[0])


def laplacian_lift(phi, n: int = 1, radii=None, method: str = "auto", tol: float = 1e-6) -> Lift:
    """(1 - Laplacian)^n phi with the radial Laplacian phi'' + (2/r) phi'.

    ``method="exact"`` differentiates the family formula symbolically and
    evaluates it in extended precision.  ``method="fd"`` applies fourth-order
    central differences to the deficit and estimates the error by halving
    the step; an estimate above ``tol`` raises :class:`NumericError`.
    """
    if int(n) != n or n < 1:
        raise DomainError("lift order n must be a positive integer")
    n = int(n)
    if radii is None:
        radii = phi.radii if isinstance(phi, RadialCharFn) else RadialGrid().radii()
    radii = np.asarray(radii, dtype=float)
    if method not in ("auto", "exact", "fd"):
        raise DomainError("method must be auto, exact or fd")
    if isinstance(phi, AnalyticCharFn):
        if not _smooth(phi):
            raise UnsupportedError(f"phi is not {2 * n} times differentiable at 0")
        if method in ("auto", "exact"):
            return _exact_lift(phi, n, radii)
    elif method == "exact":
        raise UnsupportedError("exact lift needs an analytic family")
    deficit = phi.radial_deficit if isinstance(phi, AnalyticCharFn) else phi.deficit_at
    if isinstance(phi, RadialCharFn):
        h = float(np.max(np.diff(phi.radii))) * 0.5
        hi = phi.r_max - 2 * n * 2 * h
        radii = radii[radii <= hi]
    else:
        h = 2e-3
    vals, psi0 = _fd_lift(deficit, radii, n, h)
    vals2, psi02 = _fd_lift(deficit, radii, n, 0.5 * h)
    err = float(np.max(np.abs(vals - vals2)))
    if err > tol:
        raise NumericError(f"finite-difference lift error {err:.3g} exceeds {tol:.3g}", err)
    vals, psi0 = vals2, psi02
    if not psi0 > 0:
        raise NumericError("lifted value at 0 is not positive", psi0)
    norm = RadialCharFn(radii, 1.0 - vals / psi0, meta={"lift_order": n, "method": "fd"})
    return Lift(radii, vals, psi0, err, norm, "fd")


def _exact_lift(phi: AnalyticCharFn, n: int, radii) -> Lift:
    import mpmath as mp
    import sympy as sp

    r = sp.symbols("r", positive=True)
    psi = phi.sympy_radial(r)
    for _ in range(n):
        psi = sp.simplify(psi - (sp.diff(psi, r, 2) + 2 / r * sp.diff(psi, r)))
    psi0 = sp.limit(psi, r, 0)
    if not psi0.is_finite or not psi0 > 0:
        raise NumericError("lifted value at 0 is not positive", float(psi0))
    psi0_f = float(psi0)
    fn = sp.lambdify(r, psi, modules="mpmath")
    with mp.workdps(40):
        p0 = mp.mpf(sp.N(psi0, 45))
        vals = np.empty(radii.size)
        defi = np.empty(radii.size)
        for k, x in enumerate(radii):
            v = p0 if x == 0 else fn(mp.mpf(float(x)))
            vals[k] = float(v)
            defi[k] = float(1 - v / p0)
    norm = RadialCharFn(radii, defi, meta={"family": phi.spec(), "lift_order": n, "method": "exact"})
    return Lift(radii, vals, psi0_f, 0.0, norm, "exact")


__all__ = ["levy_constant", "moment_from_charfn", "second_moment", "laplacian_lift", "Moment",
           "Lift", "point_mass"]
