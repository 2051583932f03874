"""Fourier-side evolution for Maxwellian molecules.

For an isotropic characteristic function the gain term reduces to a
one-dimensional angular integral,

    G_n(phi)(r) = 2 pi int_0^{pi/2} b_n(cos th) phi(r cos th/2) phi(r sin th/2) sin th d th,

and the Cauchy problem is the integral equation

    phi(t) = phi_0 e^{-gamma_2 t} + int_0^t e^{-gamma_2 (t - tau)} G_n(phi(tau)) d tau.

The state is the deficit d = 1 - phi.  With the discrete total rate
gamma_2 equal to the sum of the angular weights, mass (d(0) = 0) is
conserved exactly and the Gaussian is an exact fixed point of the
semi-discrete system up to interpolation error.

Two time integrators are provided: Picard iteration on collocation
intervals (``integrator="picard"``), which mirrors the contraction proof,
and an explicit Dormand-Prince 8(5,3) integration of
d' = N(d) - gamma_2 d (``integrator="ode"``).
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.optimize import brentq

from .charfun import (AnalyticCharFn, RadialCharFn, RadialGrid, as_radial, classify, knorm,
                      knorm_diff, mnorm_re)
from .errors import BoundViolation, DomainError, NumericError
from .kernel import AngularKernel, rate_constants, singularity_index, theta_rule
from .moments import second_moment

log = logging.getLogger(__name__)

GROWTH_SLACK = 1e-6


class PicardNotConverged(NumericError):
    """Picard iteration on an interval missed its tolerance."""


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class SolveConfig:
    """Exponents, horizon and numerical controls for :func:`evolve`.

    ``alpha``, ``beta``, ``eps`` must satisfy
    2 > alpha > beta > max(alpha_0, alpha/2) and 0 < eps <= 1 - alpha_0/beta,
    where alpha_0 is the kernel's singularity index.  When alpha_0 is only an
    infimum (power laws) the margin ``delta`` is added to it.
    """

    alpha: float = 1.5
    beta: float = 1.0
    eps: float = 0.3
    horizon: float = 1.0
    picard_tol: float = 1e-10
    max_picard_iters: int = 60
    step_mode: str = "adaptive"
    integrator: str = "picard"
    theta_order: int = 64
    time_nodes: int = 9
    dt_initial: float = 0.05
    dt_max: float = 0.1
    dt_min: float = 1e-8
    n_records: int = 11
    record_times: tuple | None = None
    contraction_C: float | None = None
    delta: float = 1e-3
    ode_rtol: float = 1e-12
    ode_atol: float = 1e-15
    check_growth: bool = True
    diagnostics: bool = True

    def validate(self, alpha0: float = 0.0, infimum: bool = False) -> None:
        a, b, e = self.alpha, self.beta, self.eps
        a0 = alpha0 + (self.delta if infimum else 0.0)
        if not (2.0 > a > b > max(alpha0, a / 2.0)):
            raise DomainError(
                f"exponents violate 2 > alpha > beta > max(alpha_0, alpha/2): "
                f"alpha={a}, beta={b}, alpha_0={alpha0}")
        if not (0.0 < e <= 1.0 - a0 / b + 1e-15):
            raise DomainError(f"eps={e} outside (0, 1 - alpha_0/beta] = (0, {1.0 - a0 / b:.6g}]"
                              + (f" (alpha_0 taken as {alpha0} + delta {self.delta})" if infimum else ""))
        if self.horizon <= 0:
            raise DomainError("horizon must be positive")
        if self.step_mode not in ("adaptive", "contraction_schedule"):
            raise DomainError("step_mode must be 'adaptive' or 'contraction_schedule'")
        if self.integrator not in ("picard", "ode"):
            raise DomainError("integrator must be 'picard' or 'ode'")
        if self.time_nodes < 3:
            raise DomainError("time_nodes must be at least 3")

    def times(self) -> np.ndarray:
        if self.record_times is not None:
            t = np.unique(np.concatenate([[0.0], np.asarray(self.record_times, dtype=float)]))
            if t[-1] > self.horizon * (1 + 1e-12) or t[0] < 0:
                raise DomainError("record times must lie in [0, horizon]")
            return t
        return np.linspace(0.0, self.horizon, self.n_records)


# ---------------------------------------------------------------------------
# collision operator on a fixed grid


class CollisionOperator:
    """Gain term of the isotropic Fourier collision operator on fixed radii.

    The interpolation points r cos(th/2), r sin(th/2) never exceed r, so no
    extrapolation happens.  Their cell indices are located once; each
    evaluation only rebuilds spline coefficients (a linear O(N) solve).
    """

    def __init__(self, radii, kernel: AngularKernel, order: int = 64, interpolation: str = "cubic"):
        self.radii = np.asarray(radii, dtype=float)
        self.kernel = kernel
        self.rule = theta_rule(kernel, order)
        self.weights = self.rule.weights
        self.gamma2 = float(self.weights.sum())
        self.interpolation = interpolation
        r = self.radii
        self._plus = self._locate(r[:, None] * self.rule.cos_half[None, :])
        self._minus = self._locate(r[:, None] * self.rule.sin_half[None, :])

    def _locate(self, x):
        idx = np.clip(np.searchsorted(self.radii, x, side="right") - 1, 0, self.radii.size - 2)
        return idx, x - self.radii[idx]

    def _coeffs(self, d):
        if self.interpolation == "pchip":
            return PchipInterpolator(self.radii, d).c
        return CubicSpline(self.radii, d).c

    @staticmethod
    def _eval(c, where):
        idx, dx = where
        return ((c[0, idx] * dx + c[1, idx]) * dx + c[2, idx]) * dx + c[3, idx]

    def gain_deficit(self, d) -> np.ndarray:
        """sum_j w_j (d+ + d- - d+ d-), i.e. gamma_2 - G_n(1 - d)."""
        c = self._coeffs(d)
        dp, dm = self._eval(c, self._plus), self._eval(c, self._minus)
        return (dp + dm - dp * dm) @ self.weights

    def rhs(self, d) -> np.ndarray:
        """Time derivative of the deficit, N(d) - gamma_2 d."""
        return self.gain_deficit(d) - self.gamma2 * d

    def gain(self, d) -> np.ndarray:
        return self.gamma2 - self.gain_deficit(d)


_OPERATORS: dict = {}


def collision_operator(radii, kernel, order=64, interpolation="cubic") -> CollisionOperator:
    radii = np.asarray(radii, dtype=float)
    key = (kernel, order, interpolation, radii.size, radii.tobytes())
    op = _OPERATORS.get(key)
    if op is None:
        if len(_OPERATORS) > 32:
            _OPERATORS.clear()
        op = _OPERATORS[key] = CollisionOperator(radii, kernel, order, interpolation)
    return op


def collision_gn(phi, kernel_n: AngularKernel, radii=None, order: int = 64) -> np.ndarray:
    """G_n(phi) at the given radii (default: the grid of ``phi``).

    Analytic isotropic inputs are evaluated exactly at the quadrature
    points; sampled inputs go through the grid interpolant.
    """
    rule = theta_rule(kernel_n, order)
    if isinstance(phi, AnalyticCharFn):
        r = RadialGrid().radii() if radii is None else np.asarray(radii, dtype=float)
        phi_p = phi.radial(r[:, None] * rule.cos_half)
        phi_m = phi.radial(r[:, None] * rule.sin_half)
        return (phi_p * phi_m) @ rule.weights
    if radii is None:
        op = collision_operator(phi.radii, kernel_n, order, phi.interpolation)
        return op.gain(phi.deficit)
    r = np.asarray(radii, dtype=float)
    dp = phi.deficit_at(r[:, None] * rule.cos_half)
    dm = phi.deficit_at(r[:, None] * rule.sin_half)
    return ((1.0 - dp) * (1.0 - dm)) @ rule.weights


# ---------------------------------------------------------------------------
# Picard iteration on one interval


@dataclass(frozen=True)
class _Collocation:
    nodes: np.ndarray      # tau_k in [0, dt]
    decay: np.ndarray      # exp(-gamma tau_k)
    weights: np.ndarray    # I[k, j] = int_0^{tau_k} exp(-gamma (tau_k - s)) l_j(s) ds


def _collocation(dt: float, gamma: float, m: int) -> _Collocation:
    k = np.arange(m)
    tau = 0.5 * dt * (1.0 - np.cos(math.pi * k / (m - 1)))
    x, w = np.polynomial.legendre.leggauss(48)
    I = np.zeros((m, m))
    for i in range(1, m):
        s = 0.5 * tau[i] * (x + 1.0)
        ws = 0.5 * tau[i] * w * np.exp(-gamma * (tau[i] - s))
        for j in range(m):
            others = np.delete(tau, j)
            lj = np.prod((s[:, None] - others) / (tau[j] - others), axis=1)
            I[i, j] = ws @ lj
    return _Collocation(tau, np.exp(-gamma * tau), I)


@dataclass
class StepResult:
    phi: RadialCharFn
    iterations: int
    change: float
    clip: float


def _picard(op: CollisionOperator, d0, dt, tol, max_iters, m, cache=None):
    key = (dt, m)
    col = cache.get(key) if cache is not None else None
    if col is None:
        col = _collocation(dt, op.gamma2, m)
        if cache is not None:
            cache[key] = col
    D = np.repeat(d0[None, :], m, axis=0)
    N = np.empty_like(D)
    N[0] = op.gain_deficit(d0)
    N[1:] = N[0]
    change = math.inf
    for it in range(1, max_iters + 1):
        new = col.decay[:, None] * d0[None, :] + col.weights @ N
        change = float(np.max(np.abs(new - D)))
        D = new
        for k in range(1, m):
            N[k] = op.gain_deficit(D[k])
        if change < tol:
            # one more sweep: the Volterra iteration contracts superlinearly, so
            # this keeps per-step errors from accumulating over many intervals
            D = col.decay[:, None] * d0[None, :] + col.weights @ N
            return D[-1], it, change
    raise PicardNotConverged(f"Picard iteration stalled at change {change:.3g} (dt={dt:.3g})", change)


def _clip(d):
    """Keep |phi| <= 1 (d in [0, 2] for real phi) and phi(0) = 1; return the clip size."""
    d = np.array(d)
    mag = abs(d[0])
    d[0] = 0.0
    if np.iscomplexobj(d):
        phi = 1.0 - d
        over = np.abs(phi) > 1.0
        if np.any(over):
            mag = max(mag, float(np.max(np.abs(phi[over]) - 1.0)))
            phi[over] /= np.abs(phi[over])
            d = 1.0 - phi
    else:
        lo, hi = d < 0.0, d > 2.0
        if np.any(lo) or np.any(hi):
            mag = max(mag, float(np.max(np.concatenate([-d[lo], d[hi] - 2.0]))))
            d = np.clip(d, 0.0, 2.0)
    return d, mag


def duhamel_step(phi_in: RadialCharFn, kernel_n: AngularKernel, dt: float,
                 cfg: SolveConfig = SolveConfig()) -> StepResult:
    """Advance by ``dt`` solving the Duhamel equation with Picard iteration.

    Raises :class:`PicardNotConverged` when ``max_picard_iters`` is hit.
    """
    if not dt >= 0:
        raise DomainError("dt must be nonnegative")
    if dt == 0:
        return StepResult(phi_in, 0, 0.0, 0.0)
    op = collision_operator(phi_in.radii, kernel_n, cfg.theta_order, phi_in.interpolation)
    d, it, change = _picard(op, np.asarray(phi_in.deficit), dt, cfg.picard_tol,
                            cfg.max_picard_iters, cfg.time_nodes)
    d, clip = _clip(d)
    return StepResult(phi_in.with_deficit(d), it, change, clip)


# ---------------------------------------------------------------------------
# contraction schedule


@dataclass(frozen=True)
class Schedule:
    T: np.ndarray
    S: np.ndarray          # cumulative sums
    residual: np.ndarray   # |lhs(T_m) - 1/2|


def contraction_lhs(T, S_prev, C_n0, lam, gamma, eps):
    return C_n0 * math.exp(lam * (S_prev + T)) * T + gamma * T + (gamma * T) ** eps


def contraction_schedule(C_n0: float, lam_beta: float, gamma_beta: float, eps: float,
                         m_max: int) -> Schedule:
    """Interval lengths T_m with C e^{lam (T_1+...+T_m)} T_m + gamma T_m + (gamma T_m)^eps = 1/2."""
    if min(C_n0, lam_beta, gamma_beta) <= 0 or not 0 < eps < 1:
        raise DomainError("schedule needs positive rates and 0 < eps < 1")
    T = np.empty(m_max)
    S = np.empty(m_max)
    res = np.empty(m_max)
    s = 0.0
    hi = 0.5 / gamma_beta
    for m in range(m_max):
        f = lambda t: contraction_lhs(t, s, C_n0, lam_beta, gamma_beta, eps) - 0.5
        t = brentq(f, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
        T[m] = t
        res[m] = abs(f(t))
        s += t
        S[m] = s
    return Schedule(T, S, res)


def schedule_constant(kernel: AngularKernel, cfg: SolveConfig, phi0) -> tuple[float, float]:
    """C_n(0) = (gamma_alpha^n + C)(3 + |1-phi0|_beta + |1-phi0|_beta^{1-eps}) and the C used."""
    consts = rate_constants(kernel, (cfg.alpha, cfg.beta))
    C = 10.0 * consts.gamma[cfg.alpha] if cfg.contraction_C is None else cfg.contraction_C
    k = knorm(phi0, cfg.beta).value
    return (consts.gamma[cfg.alpha] + C) * (3.0 + k + k ** (1.0 - cfg.eps)), C


# ---------------------------------------------------------------------------
# evolution


@dataclass
class EvolutionTrace:
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    clip_total: float = 0.0

    def at(self, t: float) -> RadialCharFn:
        k = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[k] - t) > 1e-12 * max(1.0, abs(t)):
            raise DomainError(f"no snapshot at t={t}")
        return self.snapshots[k]

    def table(self) -> list[dict]:
        return [{"t": t, **d} for t, d in zip(self.times, self.diagnostics)]


def initial_state(phi0, grid: RadialGrid | None = None, interpolation: str = "cubic") -> RadialCharFn:
    """Radial sample of the initial datum; single Dirac masses are rejected."""
    if isinstance(phi0, AnalyticCharFn) and phi0.is_single_dirac:
        raise DomainError("a single Dirac mass is excluded as initial datum")
    return as_radial(phi0, grid or RadialGrid(), interpolation)


def _kernel_alpha0(kernel):
    if kernel.cutoff_n is not None or kernel.form == "constant":
        base = kernel.with_cutoff(None)
        if base.form == "constant" or (base.form == "tabulated" and base.is_bounded):
            return 0.0, False
        return singularity_index(base), base.form == "power_law"
    return singularity_index(kernel), kernel.form == "power_law"


def evolve(phi0, kernel_n: AngularKernel, cfg: SolveConfig = SolveConfig(),
           grid: RadialGrid | None = None, check_membership: bool = True) -> EvolutionTrace:
    """Evolve phi0 to ``cfg.horizon``, recording snapshots at ``cfg.times()``.

    At every accepted step the growth bound
    |1 - phi(t)|_beta <= e^{lambda_beta^n t} |1 - phi0|_beta is asserted with
    relative slack 1e-6; a violation raises :class:`BoundViolation`.
    """
    alpha0, infimum = _kernel_alpha0(kernel_n)
    cfg.validate(alpha0, infimum)
    if not kernel_n.is_bounded:
        raise DomainError("evolve needs a cutoff kernel; use cutoff_limit for the uncut kernel")
    state = initial_state(phi0, grid)
    if check_membership and isinstance(phi0, AnalyticCharFn):
        cl = classify(phi0, cfg.alpha)
        if not (cl.in_K_alpha and cl.in_M_tilde_alpha):
            raise DomainError(f"initial datum is not in M-tilde^{cfg.alpha}")
    consts = rate_constants(kernel_n, (cfg.alpha, cfg.beta, 2.0))
    lam_b = consts.lam[cfg.beta]
    k0 = knorm(state, cfg.beta).value
    op = collision_operator(state.radii, kernel_n, cfg.theta_order, state.interpolation)
    trace = EvolutionTrace(constants={
        "gamma2": consts.gamma2, "gamma2_discrete": op.gamma2,
        "lambda_alpha": consts.lam[cfg.alpha], "lambda_beta": lam_b,
        "gamma_alpha": consts.gamma[cfg.alpha], "gamma_beta": consts.gamma[cfg.beta],
        "knorm_beta_0": k0, "alpha0": alpha0})
    times = cfg.times()

    def check(t, d):
        if not cfg.check_growth:
            return
        k = knorm(state.with_deficit(d), cfg.beta).value
        bound = math.exp(lam_b * t) * k0
        if k > bound * (1.0 + GROWTH_SLACK) + 1e-15:
            raise BoundViolation(f"growth bound violated at t={t:.6g}: {k:.12g} > {bound:.12g}",
                                 time=t, margin=bound - k)

    def record(t, d):
        snap = state.with_deficit(d, t=float(t))
        trace.times.append(float(t))
        trace.snapshots.append(snap)
        trace.diagnostics.append(_diagnostics(snap, cfg) if cfg.diagnostics else {})

    record(0.0, np.asarray(state.deficit))
    if cfg.integrator == "ode":
        _evolve_ode(op, state, cfg, times, trace, record, check)
    else:
        _evolve_picard(op, state, kernel_n, cfg, times, trace, record, check)
    if trace.clip_total >= 1e-8:
        log.warning("clipping total %.3g exceeds 1e-8", trace.clip_total)
    return trace


def _diagnostics(snap: RadialCharFn, cfg: SolveConfig) -> dict:
    m = mnorm_re(snap, cfg.alpha)
    sm = second_moment(snap) if snap.is_real else None
    return {"knorm_beta": knorm(snap, cfg.beta).value, "mnorm_alpha": m.value,
            "mnorm_tail": m.tail,
            "second_moment": None if sm is None else sm.value,
            "max_abs_phi": float(np.max(np.abs(snap.values)))}


def _evolve_ode(op, state, cfg, times, trace, record, check):
    d0 = np.asarray(state.deficit)
    cplx = np.iscomplexobj(d0)
    if cplx:
        n = d0.size
        y0 = np.concatenate([d0.real, d0.imag])
        f = lambda t, y: _split(op.rhs(y[:n] + 1j * y[n:]))
    else:
        y0 = d0
        f = lambda t, y: op.rhs(y)
    sol = solve_ivp(f, (0.0, float(times[-1])), y0, method="DOP853", t_eval=times,
                    rtol=cfg.ode_rtol, atol=cfg.ode_atol)
    if not sol.success:
        raise NumericError(f"ODE integration failed: {sol.message}")
    trace.steps.append({"integrator": "DOP853", "nfev": int(sol.nfev)})
    for k in range(1, times.size):
        y = sol.y[:, k]
        d = y[:d0.size] + 1j * y[d0.size:] if cplx else y
        d, clip = _clip(d)
        trace.clip_total += clip
        check(times[k], d)
        record(times[k], d)


def _split(z):
    return np.concatenate([z.real, z.imag])


def _evolve_picard(op, state, kernel_n, cfg, times, trace, record, check):
    d = np.asarray(state.deficit)
    t = 0.0
    # accuracy cap for the collocation interval: a few decay lengths of gamma_2
    dt_cap = min(cfg.dt_max, 0.6 / op.gamma2)
    cache: dict = {}
    if cfg.step_mode == "contraction_schedule":
        C_n0, C = schedule_constant(kernel_n, cfg, state)
        trace.constants.update(C_n0=C_n0, contraction_C=C)
        lam_b, gam_b = trace.constants["lambda_beta"], trace.constants["gamma_beta"]
        s_prev = 0.0
        targets = iter(times[1:])
        nxt = next(targets)
        while t < times[-1] - 1e-14:
            f = lambda x: contraction_lhs(x, s_prev, C_n0, lam_b, gam_b, cfg.eps) - 0.5
            T = brentq(f, 0.0, 0.5 / gam_b, xtol=1e-300, rtol=1e-15)
            s_prev += T
            end = min(t + T, times[-1])
            # a lemma interval may be split at record times and at the accuracy cap
            while t < end - 1e-14:
                h = min(end - t, nxt - t, dt_cap)
                d, it, ch = _picard(op, d, h, cfg.picard_tol, cfg.max_picard_iters,
                                    cfg.time_nodes, cache)
                d, clip = _clip(d)
                trace.clip_total += clip
                t += h
                trace.steps.append({"t": t, "dt": h, "iterations": it, "change": ch, "T_m": T})
                check(t, d)
                if abs(t - nxt) <= 1e-12 * max(1.0, nxt):
                    t = nxt
                    record(t, d)
                    nxt = next(targets, math.inf)
        return
    h = min(cfg.dt_initial, dt_cap)
    streak = 0
    for nxt in times[1:]:
        while t < nxt - 1e-14:
            step = min(h, nxt - t)
            try:
                new, it, ch = _picard(op, d, step, cfg.picard_tol, cfg.max_picard_iters,
                                      cfg.time_nodes, cache)
            except PicardNotConverged:
                h = 0.5 * step
                streak = 0
                if h < cfg.dt_min:
                    raise
                continue
            d, clip = _clip(new)
            trace.clip_total += clip
            t = nxt if abs(t + step - nxt) <= 1e-12 * max(1.0, nxt) else t + step
            trace.steps.append({"t": t, "dt": step, "iterations": it, "change": ch})
            check(t, d)
            streak += 1
            if streak >= 3 and step == h:
                h = min(2.0 * h, dt_cap)
                streak = 0
        record(nxt, d)


# ---------------------------------------------------------------------------
# stability and cutoff-limit experiments


def _exp_ratio(a, b, t):
    """(e^{a t} - e^{b t}) / (a - b), continuous at a = b."""
    if abs(a - b) < 1e-14:
        return t * math.exp(b * t)
    return math.exp(b * t) * math.expm1((a - b) * t) / (a - b)


@dataclass
class StabilityReport:
    rows: list
    constants: dict
    alpha_ok: bool
    fourier_ok: bool
    worst_time: float | None = None

    @property
    def ok(self) -> bool:
        return self.alpha_ok and self.fourier_ok


def stability_experiment(phi0, psi0, kernel_n: AngularKernel, cfg: SolveConfig = SolveConfig(),
                         C: float = 1.0, slack: float = 1e-3,
                         grid: RadialGrid | None = None) -> StabilityReport:
    """Evolve two data and compare both stability bounds on the record times.

    The alpha bound: |phi(t) - psi(t)|_alpha <= e^{lambda_alpha t} |phi0 - psi0|_alpha.
    The M-norm bound carries the unquantified constant ``C`` in A and B.
    """
    tr_a = evolve(phi0, kernel_n, cfg, grid)
    tr_b = evolve(psi0, kernel_n, cfg, grid)
    consts = tr_a.constants
    la, lb = consts["lambda_alpha"], consts["lambda_beta"]
    a0, b0 = tr_a.snapshots[0], tr_b.snapshots[0]
    kd_a = knorm_diff(a0, b0, cfg.alpha).value
    kd_b = knorm_diff(a0, b0, cfg.beta).value
    m0 = mnorm_re(a0, cfg.alpha, b0).value
    k1a, k1b = knorm(a0, cfg.beta).value, knorm(b0, cfg.beta).value
    A = C * max(k1a, k1b) * kd_b
    B = C * (kd_b + k1b ** (1.0 - cfg.eps) * kd_b ** cfg.eps)
    rows, alpha_ok, fourier_ok, worst = [], True, True, None
    worst_margin = math.inf
    for t, sa, sb in zip(tr_a.times, tr_a.snapshots, tr_b.snapshots):
        lhs_a = knorm_diff(sa, sb, cfg.alpha).value
        rhs_a = math.exp(la * t) * kd_a
        lhs_m = mnorm_re(sa, cfg.alpha, sb).value
        rhs_m = (math.exp(la * t) * m0 + _exp_ratio(2 * lb, la, t) * A
                 + _exp_ratio(lb, la, t) * B)
        ok_a = lhs_a <= (1.0 + slack) * rhs_a + 1e-14
        ok_m = lhs_m <= (1.0 + slack) * rhs_m + 1e-14
        margin = min(rhs_a - lhs_a, rhs_m - lhs_m)
        if margin < worst_margin:
            worst_margin, worst = margin, t
        alpha_ok &= ok_a
        fourier_ok &= ok_m
        rows.append({"t": t, "lhs_alpha": lhs_a, "rhs_alpha": rhs_a, "lhs_mnorm": lhs_m,
                     "rhs_mnorm": rhs_m, "alpha_ok": ok_a, "mnorm_ok": ok_m})
    return StabilityReport(rows, {**consts, "C": C, "A": A, "B": B},
                           bool(alpha_ok), bool(fourier_ok), worst)


@dataclass
class LimitReport:
    levels: list
    times: list
    sup_gaps: list        # sup over t, r of |phi_{n_{i+1}} - phi_{n_i}|
    cauchy_gaps: dict     # t -> [|phi_{n_{i+1}}(t) - phi_{n_i}(t)|_beta]
    continuity_C: float
    continuity_rows: list
    lambda_beta: float
    monotone: bool
    traces: list = field(repr=False, default_factory=list)


def cutoff_limit(phi0, kernel: AngularKernel, n_list: Sequence[float],
                 cfg: SolveConfig = SolveConfig(), grid: RadialGrid | None = None) -> LimitReport:
    """Evolve under b_n = min(b, n) for each n and measure how the solutions settle."""
    n_list = [float(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list[:-1], n_list[1:])):
        raise DomainError("n_list must be increasing")
    base = kernel.with_cutoff(None)
    traces = [evolve(phi0, base.with_cutoff(n), cfg, grid) for n in n_list]
    times = traces[0].times
    sup_gaps, cauchy = [], {t: [] for t in times}
    for lo, hi in zip(traces[:-1], traces[1:]):
        g = 0.0
        for t, a, b in zip(times, lo.snapshots, hi.snapshots):
            g = max(g, float(np.max(np.abs(np.asarray(a.deficit) - np.asarray(b.deficit)))))
            cauchy[t].append(knorm_diff(b, a, cfg.beta).value)
        sup_gaps.append(g)
    monotone = all(b <= a for a, b in zip(sup_gaps[:-1], sup_gaps[1:]))
    if not monotone:
        log.warning("cutoff gaps are not monotone: %s", sup_gaps)
    # time-continuity modulus on the finest level
    fine = traces[-1]
    lam_b = fine.constants["lambda_beta"]
    rows, Cfit = [], 0.0
    for i in range(len(times)):
        for j in range(i + 1, len(times)):
            s, t = times[i], times[j]
            gap = knorm_diff(fine.snapshots[j], fine.snapshots[i], cfg.beta).value
            ratio = gap / (math.exp(lam_b * t) * (t - s))
            Cfit = max(Cfit, ratio)
            rows.append({"s": s, "t": t, "gap_beta": gap, "ratio": ratio})
    return LimitReport(n_list, list(times), sup_gaps, cauchy, Cfit, rows, lam_b, monotone, traces)
