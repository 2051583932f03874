"""Collision geometry in velocity space and the Povzner-type split K = -H + G.

For Psi(x) = (1 + x)^{n + alpha/2} and a cutoff kernel b,

    K(v, v*) = int_{S^2} b {Psi(|v'|^2) + Psi(|v*'|^2) - Psi(|v|^2) - Psi(|v*|^2)} d sigma.

Writing |v'|^2 = Y(th) + Z cos(ph) and |v*'|^2 = Y(pi - th) - Z cos(ph), the
azimuthal average splits off

    -H = 2 pi int b sin th {Psi(Y(th)) + Psi(Y(pi - th)) - Psi(|v|^2) - Psi(|v*|^2)} d th <= 0

(Jensen, since Psi is convex), and the remainder

    G = 2 int b sin th Z^2 {J(Y(th)) + J(Y(pi - th))} d th,
    J(Y) = int_0^{pi/2} (sin ph - ph cos ph) sin ph {Psi''(Y + Z cos ph) + Psi''(Y - Z cos ph)} d ph.

Kernels live on theta in (0, pi/2] (symmetrized form), so all theta
integrals run over that range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .kernel import AngularKernel, theta_rule

UNIT_TOL = 1e-12


def post_collision(v, vs, sigma):
    """v' = (v+v*)/2 + |v-v*|/2 sigma, v*' = (v+v*)/2 - |v-v*|/2 sigma."""
    v, vs, sigma = (np.asarray(x, dtype=float) for x in (v, vs, sigma))
    if np.any(np.abs(np.linalg.norm(sigma, axis=-1) - 1.0) > UNIT_TOL):
        raise DomainError("sigma must be a unit vector")
    mid = 0.5 * (v + vs)
    half = 0.5 * np.linalg.norm(v - vs, axis=-1)[..., None] * sigma
    return mid + half, mid - half


@dataclass(frozen=True)
class CollisionFrame:
    """Orthonormal frame k = (v - v*)/|v - v*|, i = v x v*/|v x v*|, h = i x k.

    When v x v* = 0 the pair (h, i) is completed by a fixed rule, and when
    v = v* the axis k defaults to e_z.
    """

    k: np.ndarray
    i: np.ndarray
    h: np.ndarray

    @classmethod
    def of(cls, v, vs) -> "CollisionFrame":
        v, vs = np.asarray(v, dtype=float), np.asarray(vs, dtype=float)
        rel = v - vs
        nrel = np.linalg.norm(rel, axis=-1, keepdims=True)
        k = np.where(nrel > 0, rel / np.where(nrel > 0, nrel, 1.0), [0.0, 0.0, 1.0])
        cr = np.cross(v, vs)
        ncr = np.linalg.norm(cr, axis=-1, keepdims=True)
        # fallback: any unit vector orthogonal to k
        pick = np.where(np.abs(k[..., :1]) < 0.9, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
        alt = np.cross(k, pick)
        alt /= np.linalg.norm(alt, axis=-1, keepdims=True)
        small = ncr <= 1e-300
        i = np.where(small, alt, cr / np.where(small, 1.0, ncr))
        h = np.cross(i, k)
        return cls(k, i, h)

    def sigma(self, theta, phi) -> np.ndarray:
        """k cos(theta) + sin(theta) (h cos(phi) + i sin(phi))."""
        th = np.asarray(theta, dtype=float)[..., None]
        ph = np.asarray(phi, dtype=float)[..., None]
        return self.k * np.cos(th) + np.sin(th) * (self.h * np.cos(ph) + self.i * np.sin(ph))


def yz_decomposition(v, vs, theta):
    """(Y(theta), Y(pi - theta), Z(theta)) for the pair (v, v*)."""
    v, vs = np.asarray(v, dtype=float), np.asarray(vs, dtype=float)
    th = np.asarray(theta, dtype=float)
    a2, b2 = np.sum(v * v, axis=-1), np.sum(vs * vs, axis=-1)
    c2, s2 = np.cos(0.5 * th) ** 2, np.sin(0.5 * th) ** 2
    cross = np.linalg.norm(np.cross(v, vs), axis=-1)
    return a2 * c2 + b2 * s2, b2 * c2 + a2 * s2, cross * np.sin(th)


def _psi(x, p):
    return (1.0 + x) ** p


def _psi2(x, p):
    return p * (p - 1.0) * (1.0 + x) ** (p - 2.0)


_PHI_TRAP = 96
_GL_PHI = np.polynomial.legendre.leggauss(48)


@dataclass(frozen=True)
class PovznerSplit:
    K: np.ndarray
    minus_H: np.ndarray
    G: np.ndarray

    @property
    def reconstruction_error(self) -> np.ndarray:
        return np.abs(self.K - (self.minus_H + self.G))


def povzner_split(v, vs, kernel_n: AngularKernel, n: int = 1, alpha: float = 1.0,
                  power: float | None = None, order: int = 64) -> PovznerSplit:
    """K by spherical quadrature, -H from the theta-only formula, G from the Z^2 formula.

    Inputs broadcast over leading axes.  ``power`` overrides the exponent
    n + alpha/2 of Psi (``power=1`` gives the collision invariant 1 + x).
    """
    if power is None:
        if int(n) != n or n < 1:
            raise DomainError("moment index n must be a positive integer")
        if not 0.0 < alpha <= 2.0:
            raise DomainError("alpha must lie in (0, 2]")
        p = n + 0.5 * alpha
    else:
        p = float(power)
    v, vs = np.asarray(v, dtype=float), np.asarray(vs, dtype=float)
    rule = theta_rule(kernel_n, order)
    th, w = rule.theta, rule.weights          # w includes 2 pi b sin(theta)
    a2 = np.sum(v * v, axis=-1)[..., None]
    b2 = np.sum(vs * vs, axis=-1)[..., None]
    y1, y2, z = yz_decomposition(v[..., None, :], vs[..., None, :], th)
    base = _psi(a2, p) + _psi(b2, p)
    minus_H = (_psi(y1, p) + _psi(y2, p) - base) @ w
    # K: azimuth by the periodic trapezoid rule (spectral for smooth integrands)
    ph = 2.0 * math.pi * np.arange(_PHI_TRAP) / _PHI_TRAP
    cph = np.cos(ph)
    zc = z[..., None] * cph
    avg = (_psi(y1[..., None] + zc, p) + _psi(y2[..., None] - zc, p)).mean(axis=-1)
    K = (avg - base) @ w
    # G: the Z^2 remainder with Gauss-Legendre on [0, pi/2]
    x, gw = _GL_PHI
    q = 0.25 * math.pi * (x + 1.0)
    qw = 0.25 * math.pi * gw * (np.sin(q) - q * np.cos(q)) * np.sin(q)
    zq = z[..., None] * np.cos(q)

    def J(y):
        return (_psi2(y[..., None] + zq, p) + _psi2(np.maximum(y[..., None] - zq, 0.0), p)) @ qw

    G = (z * z * (J(y1) + J(y2))) @ w / math.pi
    return PovznerSplit(K, minus_H, G)


def weight_wdelta(v, delta: float, n: int = 1, alpha: float = 1.0) -> np.ndarray:
    """<v>^{2n+alpha} / (1 + delta <v>^{2n+alpha}), with <v> = sqrt(1 + |v|^2)."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    v = np.asarray(v, dtype=float)
    m = (1.0 + np.sum(v * v, axis=-1)) ** (n + 0.5 * alpha)
    return m / (1.0 + delta * m)


def random_unit(rng: np.random.Generator, size) -> np.ndarray:
    x = rng.standard_normal((*np.atleast_1d(size), 3))
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def random_pairs(rng: np.random.Generator, count: int, vmin: float = 0.1, vmax: float = 10.0):
    """Pairs with speeds uniform in [vmin, vmax] and isotropic directions."""
    sa = rng.uniform(vmin, vmax, count)[:, None]
    sb = rng.uniform(vmin, vmax, count)[:, None]
    return sa * random_unit(rng, count), sb * random_unit(rng, count)


@dataclass
class PovznerReport:
    samples: int
    energy_error: float
    momentum_error: float
    linear_K: float
    max_minus_H: float
    reconstruction_error: float
    G_constant: tuple
    W_constant: float
    decomposition_error: float

    @property
    def G_stable(self) -> bool:
        a, b = self.G_constant
        return math.isfinite(a) and math.isfinite(b) and abs(a - b) <= 0.2 * max(a, b)

    def passed(self, tol: float = 1e-12, recon_tol: float = 1e-8) -> bool:
        return (self.energy_error <= tol and self.momentum_error <= tol and self.linear_K <= tol
                and self.max_minus_H <= tol and self.reconstruction_error <= recon_tol
                and self.G_stable and self.decomposition_error <= tol)

    def rows(self):
        return [("energy_error", self.energy_error), ("momentum_error", self.momentum_error),
                ("linear_K", self.linear_K), ("max_minus_H", self.max_minus_H),
                ("reconstruction_error", self.reconstruction_error),
                ("G_constant_a", self.G_constant[0]), ("G_constant_b", self.G_constant[1]),
                ("W_constant", self.W_constant), ("decomposition_error", self.decomposition_error)]


def povzner_check(kernel_n: AngularKernel, n: int = 1, alpha: float = 1.0, samples: int = 10_000,
                  seed: int = 0, delta: float = 1e-3, chunk: int = 500) -> PovznerReport:
    """Randomized check of the collision identities and the Povzner ingredients.

    Errors are relative to the natural scale of each quantity (|v|^2 + |v*|^2
    for energy, Psi of it for K and H), so 1e-12 is meaningful at speed 10.
    """
    rng = np.random.default_rng(seed)
    v, vs = random_pairs(rng, samples)
    sig = random_unit(rng, samples)
    vp, vsp = post_collision(v, vs, sig)
    e0 = np.sum(v * v, -1) + np.sum(vs * vs, -1)
    e1 = np.sum(vp * vp, -1) + np.sum(vsp * vsp, -1)
    energy = float(np.max(np.abs(e1 - e0) / e0))
    mom = float(np.max(np.linalg.norm(vp + vsp - v - vs, axis=-1) / np.sqrt(e0)))
    # |v'|^2 against Y + Z cos(phi) in the collision frame
    fr = CollisionFrame.of(v, vs)
    th = rng.uniform(0.0, math.pi, samples)
    ph = rng.uniform(-math.pi, math.pi, samples)
    vp2, vsp2 = post_collision(v, vs, fr.sigma(th, ph))
    y1, y2, z = yz_decomposition(v, vs, th)
    dec = max(float(np.max(np.abs(np.sum(vp2 * vp2, -1) - (y1 + z * np.cos(ph))) / e0)),
              float(np.max(np.abs(np.sum(vsp2 * vsp2, -1) - (y2 - z * np.cos(ph))) / e0)))
    p = n + 0.5 * alpha
    lin, mh, rec, ratio = 0.0, -math.inf, 0.0, []
    for s in range(0, samples, chunk):
        a, b = v[s:s + chunk], vs[s:s + chunk]
        scale = _psi(np.sum(a * a, -1) + np.sum(b * b, -1), p)
        lk = povzner_split(a, b, kernel_n, power=1.0).K
        lin = max(lin, float(np.max(np.abs(lk) / (1.0 + np.sum(a * a, -1) + np.sum(b * b, -1)))))
        sp = povzner_split(a, b, kernel_n, n, alpha)
        mh = max(mh, float(np.max(sp.minus_H / scale)))
        rec = max(rec, float(np.max(sp.reconstruction_error / scale)))
        ratio.append(sp.G / (np.sum(a * a, -1) * np.sum(b * b, -1)))
    ratio = np.concatenate(ratio)
    half = samples // 2
    Wv = weight_wdelta(vp, delta, n, alpha)
    Wc = float(np.max(Wv / (weight_wdelta(v, delta, n, alpha) + weight_wdelta(vs, delta, n, alpha))))
    return PovznerReport(samples, energy, mom, lin, max(mh, 0.0) if mh > 0 else mh, rec,
                         (float(ratio[:half].max()), float(ratio[half:].max())), Wc, dec)
