"""Particle Monte Carlo for the same Maxwellian-molecule dynamics.

Each step draws a random perfect matching of the particles.  Every pair
collides with probability 1 - exp(-gamma_2 dt) and both partners are
updated, so every particle collides at rate gamma_2 and momentum and
energy are conserved collision by collision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import lambertw

from .charfun import (AnalyticCharFn, DiracPair, Gaussian, PointMass, RadialCharFn, RadialGrid,
                      ShiftedDirac, Stable, one_minus_sinc)
from .errors import DomainError, UnsupportedError
from .kernel import AngularKernel, theta_rule
from .povzner import CollisionFrame, post_collision

DT_GUARD = 0.5


@dataclass(frozen=True)
class ParticleEnsemble:
    velocities: np.ndarray
    rng_seed: int | None = None
    provenance: dict = field(default_factory=dict)
    time: float = 0.0
    steps: int = 0
    momentum0: np.ndarray | None = None
    energy0: float | None = None

    def __post_init__(self):
        v = np.asarray(self.velocities, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] < 2:
            raise DomainError("an ensemble needs N >= 2 velocities in R^3")
        object.__setattr__(self, "velocities", v)
        if self.momentum0 is None:
            object.__setattr__(self, "momentum0", self.momentum())
        if self.energy0 is None:
            object.__setattr__(self, "energy0", self.energy())

    @property
    def N(self) -> int:
        return self.velocities.shape[0]

    def momentum(self) -> np.ndarray:
        return self.velocities.sum(axis=0)

    def energy(self) -> float:
        return float(np.sum(self.velocities ** 2))

    def energy_drift(self) -> float:
        """Relative change of total energy since construction."""
        return abs(self.energy() - self.energy0) / max(self.energy0, 1e-300)

    def moment(self, p: float, bracket: bool = False) -> float:
        """Empirical int |v|^p dF (or <v>^p with ``bracket``)."""
        s2 = np.sum(self.velocities ** 2, axis=1)
        return float(np.mean((1.0 + s2) ** (0.5 * p) if bracket else s2 ** (0.5 * p)))


# ---------------------------------------------------------------------------
# initial sampling


def _positive_stable(rng, a: float, size: int) -> np.ndarray:
    """Positive a-stable variables with E exp(-s A) = exp(-s^a), 0 < a < 1 (Kanter)."""
    u = rng.uniform(0.0, 1.0, size)
    w = rng.exponential(1.0, size)
    pu = math.pi * u
    return (np.sin(a * pu) / np.sin(pu) ** (1.0 / a)
            * (np.sin((1.0 - a) * pu) / w) ** ((1.0 - a) / a))


def _sample_family(f, rng, size: int) -> np.ndarray:
    if isinstance(f, Gaussian):
        return math.sqrt(f.var) * rng.standard_normal((size, 3))
    if isinstance(f, DiracPair):
        sign = np.where(rng.uniform(size=size) < 0.5, -1.0, 1.0)
        return f.a * sign[:, None] * np.asarray(f.axis)
    if isinstance(f, ShiftedDirac):
        return np.tile(np.asarray(f.a), (size, 1))
    if isinstance(f, PointMass):
        return np.zeros((size, 3))
    if isinstance(f, Stable):
        g = rng.standard_normal((size, 3))
        if f.alpha == 2.0:
            A = np.ones(size)
        else:
            A = _positive_stable(rng, 0.5 * f.alpha, size)
        return f.scale_param * np.sqrt(2.0 * A)[:, None] * g
    raise UnsupportedError(f"no sampler for {type(f).__name__}")


def sample_initial(family: AnalyticCharFn, N: int, seed: int) -> ParticleEnsemble:
    """N velocities drawn from ``family``; identical seeds give identical ensembles."""
    if N < 2:
        raise DomainError("need N >= 2")
    rng = np.random.default_rng(seed)
    comps = [(w, f) for w, f in family.components if w > 0]
    if len(comps) == 1:
        v = _sample_family(comps[0][1], rng, N)
    else:
        ws = np.array([w for w, _ in comps])
        pick = rng.choice(len(comps), size=N, p=ws / ws.sum())
        v = np.empty((N, 3))
        for j, (_, f) in enumerate(comps):
            sel = pick == j
            v[sel] = _sample_family(f, rng, int(sel.sum()))
    return ParticleEnsemble(v, seed, {"family": family.spec(), "N": N})


# ---------------------------------------------------------------------------
# collisions


class ThetaSampler:
    """Inverse-CDF table for theta with density proportional to b_n(cos th) sin th on [0, pi/2]."""

    def __init__(self, kernel_n: AngularKernel, knots: int = 2 ** 12, fine: int = 2 ** 16):
        if not kernel_n.is_bounded:
            raise DomainError("DSMC needs a cutoff kernel")
        th = np.linspace(0.0, 0.5 * math.pi, fine + 1)
        extra = kernel_n.crossover()
        if extra is not None:
            th = np.union1d(th, [extra])
        dens = kernel_n(np.maximum(th, 1e-300)) * np.sin(th)
        cdf = cumulative_trapezoid(dens, th, initial=0.0)
        self.total = float(2.0 * math.pi * cdf[-1])
        cdf /= cdf[-1]
        self.q = np.linspace(0.0, 1.0, knots)
        self.theta = np.interp(self.q, cdf, th)
        self.gamma2 = theta_rule(kernel_n).gamma2

    def __call__(self, rng, size: int) -> np.ndarray:
        return np.interp(rng.uniform(size=size), self.q, self.theta)


_SAMPLERS: dict = {}


def theta_sampler(kernel_n: AngularKernel) -> ThetaSampler:
    s = _SAMPLERS.get(kernel_n)
    if s is None:
        s = _SAMPLERS[kernel_n] = ThetaSampler(kernel_n)
    return s


def nanbu_step(ens: ParticleEnsemble, kernel_n: AngularKernel, dt: float,
               rng: np.random.Generator) -> ParticleEnsemble:
    """One collision sweep of length dt (requires gamma_2 dt <= 0.5)."""
    if dt < 0:
        raise DomainError("dt must be nonnegative")
    if dt == 0:
        return ens
    sampler = theta_sampler(kernel_n)
    gamma2 = sampler.gamma2
    if gamma2 * dt > DT_GUARD:
        raise DomainError(f"gamma_2 dt = {gamma2 * dt:.3g} exceeds {DT_GUARD}")
    v = ens.velocities.copy()
    perm = rng.permutation(ens.N)
    m = ens.N // 2
    a, b = perm[:m], perm[m:2 * m]
    hit = rng.uniform(size=m) < -math.expm1(-gamma2 * dt)
    a, b = a[hit], b[hit]
    k = a.size
    if k:
        th = sampler(rng, k)
        ph = rng.uniform(0.0, 2.0 * math.pi, k)
        frame = CollisionFrame.of(v[a], v[b])
        sigma = frame.sigma(th, ph)
        sigma /= np.linalg.norm(sigma, axis=1, keepdims=True)
        v[a], v[b] = post_collision(v[a], v[b], sigma)
    return replace(ens, velocities=v, time=ens.time + dt, steps=ens.steps + 1)


# ---------------------------------------------------------------------------
# observables


def empirical_charfn(ens: ParticleEnsemble, radii=None, chunk: int = 4_000_000) -> RadialCharFn:
    """Sphere-averaged empirical characteristic function, mean_j sinc(r |v_j|).

    ``meta["band"]`` carries the 1/sqrt(N) statistical band.
    """
    radii = RadialGrid().radii() if radii is None else np.asarray(radii, dtype=float)
    speed = np.linalg.norm(ens.velocities, axis=1)
    d = np.zeros(radii.size)
    step = max(1, chunk // max(1, speed.size))
    for s in range(0, radii.size, step):
        d[s:s + step] = one_minus_sinc(radii[s:s + step, None] * speed[None, :]).mean(axis=1)
    return RadialCharFn(radii, d, meta={"source": "dsmc", "N": ens.N, "t": ens.time,
                                        "band": 1.0 / math.sqrt(ens.N),
                                        **{k: v for k, v in ens.provenance.items() if k != "N"}})


@dataclass
class DsmcRun:
    times: list
    ensembles: list
    moments: list          # per recorded time: dict of tracked moments
    energy_drift: float
    dt: float


def run_dsmc(family: AnalyticCharFn, kernel_n: AngularKernel, N: int, dt: float, horizon: float,
             seed: int, record_times: Sequence[float] | None = None,
             moment_orders: Sequence[float] = (2.0,)) -> DsmcRun:
    """Simulate to ``horizon`` and keep ensembles at the record times (rounded to steps)."""
    ens = sample_initial(family, N, seed)
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    n_steps = int(round(horizon / dt))
    if abs(n_steps * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise DomainError("horizon must be a multiple of dt")
    rec = sorted(set([0.0] + list(record_times if record_times is not None else [horizon])))
    rec_steps = {int(round(t / dt)): t for t in rec}
    run = DsmcRun([], [], [], 0.0, dt)

    def snap(t):
        run.times.append(t)
        run.ensembles.append(ens)
        row = {}
        for p in moment_orders:
            row[f"abs_{p:g}"] = ens.moment(p)
            row[f"bracket_{p:g}"] = ens.moment(p, bracket=True)
        run.moments.append(row)

    if 0 in rec_steps:
        snap(0.0)
    for k in range(1, n_steps + 1):
        ens = nanbu_step(ens, kernel_n, dt, rng)
        if k in rec_steps:
            snap(rec_steps[k])
    run.energy_drift = ens.energy_drift()
    return run


def finite_moment(family: AnalyticCharFn, p: float) -> bool:
    for w, f in family.components:
        if w > 0 and isinstance(f, Stable) and f.alpha < 2.0 and p >= f.alpha:
            return False
    return True


def fit_growth_constant(t, ratio) -> float:
    """Smallest C with ratio(t) <= C e^{C t} at every sample (C >= ratio(0))."""
    t, ratio = np.asarray(t, dtype=float), np.asarray(ratio, dtype=float)
    C = float(np.max(ratio[t == 0], initial=1.0))
    pos = t > 0
    if np.any(pos):
        # C e^{C t} = rho  <=>  C t = W(rho t)
        w = np.real(lambertw(ratio[pos] * t[pos])) / t[pos]
        C = max(C, float(np.max(w)))
    return C


@dataclass
class MomentReport:
    times: list
    moment: list
    bracket_moment: list
    order: float
    fitted_C: float
    bound: list
    energy_drift: float

    @property
    def holds(self) -> bool:
        return all(m <= b * (1 + 1e-12) for m, b in zip(self.moment, self.bound))


def moment_propagation_experiment(family: AnalyticCharFn, kernel_n: AngularKernel, n: int = 1,
                                  alpha: float = 1.0, horizon: float = 1.0, N: int = 100_000,
                                  seed: int = 0, dt: float = 0.01, n_records: int = 21) -> MomentReport:
    """Track int |v|^{2n+alpha} dF_t and fit the smallest C in M(t) <= C e^{Ct} M(0)."""
    p = 2 * n + alpha
    if not finite_moment(family, p):
        raise DomainError(f"initial law has infinite moment of order {p}")
    times = np.linspace(0.0, horizon, n_records)
    run = run_dsmc(family, kernel_n, N, dt, horizon, seed, times, (p,))
    m = np.array([r[f"abs_{p:g}"] for r in run.moments])
    mb = [r[f"bracket_{p:g}"] for r in run.moments]
    tt = np.asarray(run.times)
    C = fit_growth_constant(tt, m / m[0])
    bound = list(C * np.exp(C * tt) * m[0])
    return MomentReport(list(tt), list(m), mb, p, C, bound, run.energy_drift)
