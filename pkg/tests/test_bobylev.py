import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fourier_boltzmann import (AngularKernel, RadialGrid, SolveConfig, collision_gn,
                               contraction_schedule, dirac_pair, duhamel_step, evolve, gaussian,
                               mixture, rate_constants, second_moment, shifted_dirac,
                               stability_experiment, stable)
from fourier_boltzmann.bobylev import _exp_ratio, contraction_lhs
from fourier_boltzmann.charfun import as_radial
from fourier_boltzmann.errors import DomainError

CONSTANT = AngularKernel.constant(1.0)
POWER64 = AngularKernel.power_law(0.25).with_cutoff(64)
GRID = RadialGrid()

# 2 pi int_0^{pi/2} b_n(theta) exp(-r (cos + sin)(theta/2)) sin(theta) d theta, mpmath at 30 digits
GAIN_STABLE1_CONSTANT_R1 = 1.66279186854849971715
GAIN_STABLE1_POWER64_R2 = 2.47079185050295358548
# root of e^T T + T + sqrt(T) = 1/2
T1_UNIT = 0.09299402074414470275

kernels = st.one_of(
    st.floats(0.2, 5.0).map(AngularKernel.constant),
    st.tuples(st.floats(0.1, 0.9), st.floats(4.0, 200.0)).map(
        lambda t: AngularKernel.power_law(t[0]).with_cutoff(t[1])),
)


def test_gain_oracle_values():
    assert collision_gn(stable(1.0), CONSTANT, radii=[1.0])[0] == pytest.approx(
        GAIN_STABLE1_CONSTANT_R1, rel=1e-13)
    assert collision_gn(stable(1.0), POWER64, radii=[2.0])[0] == pytest.approx(
        GAIN_STABLE1_POWER64_R2, rel=1e-12)


@given(st.floats(0.2, 4.0), kernels)
def test_gaussian_is_fixed_point_of_gain(var, kern):
    # |xi+|^2 + |xi-|^2 = |xi|^2, so the gain of a Gaussian is gamma_2 times itself
    r = np.linspace(0.0, 8.0, 41)
    g = gaussian(var)
    gamma2 = rate_constants(kern, (2.0,)).gamma2
    assert np.allclose(collision_gn(g, kern, radii=r), gamma2 * g.radial(r), rtol=1e-12, atol=1e-14)


def test_grid_gain_matches_analytic():
    phi = mixture([(0.5, gaussian(1.0)), (0.5, dirac_pair(1.5))])
    r = np.linspace(0.0, 10.0, 57)
    exact = collision_gn(phi, CONSTANT, radii=r)
    sampled = collision_gn(as_radial(phi, GRID), CONSTANT, radii=r)
    assert np.max(np.abs(exact - sampled)) <= 1e-8


def test_duhamel_step_zero_is_identity():
    phi = as_radial(stable(1.0), GRID)
    assert duhamel_step(phi, CONSTANT, 0.0).phi is phi


def test_duhamel_step_conserves_mass_and_range():
    phi = as_radial(stable(1.0), GRID)
    out = duhamel_step(phi, CONSTANT, 0.05).phi
    assert out.deficit[0] == 0.0
    assert np.max(np.abs(out.values)) <= 1.0 + 1e-10


def test_solver_paths_agree_on_stable_datum():
    cfg = SolveConfig(alpha=0.8, beta=0.6, eps=0.5, horizon=0.3, n_records=4, diagnostics=False)
    a = evolve(stable(1.0), CONSTANT, cfg)
    b = evolve(stable(1.0), CONSTANT, SolveConfig(**{**cfg.__dict__, "integrator": "ode"}))
    gap = max(float(np.max(np.abs(x.deficit - y.deficit))) for x, y in zip(a.snapshots, b.snapshots))
    assert gap <= 10 * cfg.picard_tol


def test_energy_conserved_along_evolution():
    phi0 = mixture([(0.5, gaussian(1.0)), (0.5, dirac_pair(2.0))])
    cfg = SolveConfig(horizon=0.5, n_records=3, integrator="ode", diagnostics=False)
    tr = evolve(phi0, CONSTANT, cfg)
    m = [second_moment(s).value for s in tr.snapshots]
    assert max(abs(x / m[0] - 1) for x in m) <= 1e-6
    assert tr.clip_total < 1e-8


def test_growth_bound_holds_with_diagnostics():
    cfg = SolveConfig(alpha=0.8, beta=0.6, eps=0.5, horizon=0.5, n_records=6, integrator="ode")
    tr = evolve(stable(1.0), CONSTANT, cfg)
    lam, k0 = tr.constants["lambda_beta"], tr.constants["knorm_beta_0"]
    for t, d in zip(tr.times, tr.diagnostics):
        assert d["knorm_beta"] <= math.exp(lam * t) * k0 * (1 + 1e-6)


def test_contraction_schedule_mode_matches_adaptive():
    cfg = SolveConfig(alpha=0.8, beta=0.6, eps=0.5, horizon=0.01, n_records=2, diagnostics=False)
    a = evolve(stable(1.0), CONSTANT, cfg)
    b = evolve(stable(1.0), CONSTANT,
               SolveConfig(**{**cfg.__dict__, "step_mode": "contraction_schedule"}))
    assert np.max(np.abs(a.snapshots[-1].deficit - b.snapshots[-1].deficit)) <= 1e-9
    assert "C_n0" in b.constants


def test_single_dirac_rejected():
    with pytest.raises(DomainError):
        evolve(shifted_dirac(1.0), CONSTANT)


def test_config_constraint_message():
    with pytest.raises(DomainError, match="2 > alpha > beta > max"):
        evolve(gaussian(1.0), CONSTANT, SolveConfig(alpha=1.0, beta=1.2))
    with pytest.raises(DomainError, match="eps"):
        evolve(gaussian(1.0), POWER64, SolveConfig(alpha=1.5, beta=1.0, eps=0.6))


def test_datum_outside_space_rejected():
    with pytest.raises(DomainError):
        evolve(stable(1.5), CONSTANT, SolveConfig(alpha=1.6, beta=1.0, eps=0.3))


def test_contraction_schedule_first_term():
    sch = contraction_schedule(1.0, 1.0, 1.0, 0.5, 1)
    assert sch.T[0] == pytest.approx(T1_UNIT, rel=1e-12)


@given(st.floats(1.0, 1e3), st.floats(0.1, 20.0), st.floats(0.5, 50.0), st.floats(0.05, 0.95))
def test_contraction_schedule_properties(C, lam, gam, eps):
    sch = contraction_schedule(C, lam, gam, eps, 200)
    assert np.all(sch.T > 0)
    assert np.all(np.diff(sch.T) < 0)
    assert np.all(np.diff(sch.S) > 0)
    assert float(sch.residual.max()) <= 1e-10
    S_prev = np.concatenate([[0.0], sch.S[:-1]])
    lhs = [contraction_lhs(t, s, C, lam, gam, eps) for t, s in zip(sch.T, S_prev)]
    assert np.allclose(lhs, 0.5, atol=1e-10)


@given(st.floats(-5, 5), st.floats(-1e-15, 1e-15), st.floats(0, 3))
def test_exp_ratio_continuous(a, da, t):
    assert _exp_ratio(a + da, a, t) == pytest.approx(t * math.exp(a * t), rel=1e-9, abs=1e-300)


def test_stability_bounds_hold_for_gaussian_pair():
    cfg = SolveConfig(horizon=0.5, n_records=3, integrator="ode")
    rep = stability_experiment(gaussian(1.0), mixture([(0.8, gaussian(1.0)), (0.2, gaussian(2.0))]),
                               CONSTANT, cfg)
    assert rep.ok
