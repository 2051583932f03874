import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fourier_boltzmann import (AngularKernel, dirac_pair, empirical_charfn, gaussian, mixture,
                               nanbu_step, run_dsmc, sample_initial, stable)
from fourier_boltzmann.dsmc import _positive_stable, fit_growth_constant, theta_sampler
from fourier_boltzmann.errors import DomainError
from fourier_boltzmann.kernel import theta_rule

CONSTANT = AngularKernel.constant(1.0)
N = 200_000


def test_sampling_is_reproducible():
    a = sample_initial(gaussian(1.0), 1000, 7)
    b = sample_initial(gaussian(1.0), 1000, 7)
    assert np.array_equal(a.velocities, b.velocities)


@pytest.mark.parametrize("a", [0.3, 0.5, 0.8])
def test_positive_stable_laplace_transform(a):
    x = _positive_stable(np.random.default_rng(1), a, N)
    for s in (0.5, 1.0, 2.0):
        emp = np.exp(-s * x)
        assert abs(emp.mean() - math.exp(-s ** a)) <= 5 * emp.std() / math.sqrt(N)


@pytest.mark.parametrize("family", [gaussian(1.0), stable(1.0), stable(1.5), dirac_pair(2.0),
                                    mixture([(0.5, gaussian(2.0)), (0.5, dirac_pair(1.0))])])
def test_sampled_charfn_matches_family(family):
    ens = sample_initial(family, N, 3)
    r = np.array([0.0, 0.25, 0.5, 1.0, 2.0, 4.0])
    emp = empirical_charfn(ens, r)
    assert emp.values[0] == 1.0
    assert np.max(np.abs(emp.values - family.radial(r))) <= 5 / math.sqrt(N)


@given(st.integers(0, 2 ** 31), st.floats(1e-4, 0.05))
def test_collisions_conserve_invariants(seed, dt):
    ens = sample_initial(gaussian(1.0), 2000, seed)
    rng = np.random.default_rng(seed)
    out = nanbu_step(ens, CONSTANT, dt, rng)
    assert np.allclose(out.momentum(), ens.momentum(), atol=1e-10)
    assert out.energy_drift() <= 1e-12


def test_zero_step_is_identity():
    ens = sample_initial(gaussian(1.0), 100, 0)
    assert nanbu_step(ens, CONSTANT, 0.0, np.random.default_rng(0)) is ens


def test_step_guard():
    ens = sample_initial(gaussian(1.0), 100, 0)
    with pytest.raises(DomainError):
        nanbu_step(ens, CONSTANT, 0.2, np.random.default_rng(0))


def test_theta_sampler_matches_rule():
    kern = AngularKernel.power_law(0.25).with_cutoff(64)
    th = theta_sampler(kern)(np.random.default_rng(0), N)
    rule = theta_rule(kern)
    ref = float(rule.weights @ np.cos(rule.theta) / rule.weights.sum())
    c = np.cos(th)
    assert abs(c.mean() - ref) <= 5 * c.std() / math.sqrt(N)


def test_run_is_deterministic():
    a = run_dsmc(gaussian(1.0), CONSTANT, 1000, 0.01, 0.1, 5, [0.05, 0.1])
    b = run_dsmc(gaussian(1.0), CONSTANT, 1000, 0.01, 0.1, 5, [0.05, 0.1])
    assert a.times == b.times == [0.0, 0.05, 0.1]
    assert all(np.array_equal(x.velocities, y.velocities) for x, y in zip(a.ensembles, b.ensembles))


def test_gaussian_stays_gaussian():
    run = run_dsmc(gaussian(1.0), CONSTANT, 50_000, 0.01, 0.5, 11, [0.5])
    r = np.linspace(0, 4, 9)
    emp = empirical_charfn(run.ensembles[-1], r)
    assert np.max(np.abs(emp.values - gaussian(1.0).radial(r))) <= 5 / math.sqrt(50_000)


@given(st.lists(st.floats(0.5, 20.0), min_size=2, max_size=10))
def test_growth_fit_is_minimal_and_valid(ratios):
    t = np.linspace(0.0, 1.0, len(ratios) + 1)
    rho = np.concatenate([[1.0], ratios])
    C = fit_growth_constant(t, rho)
    assert np.all(rho <= C * np.exp(C * t) * (1 + 1e-9))
    slack = C * np.exp(C * t) / rho
    assert C == 1.0 or np.min(slack[1:]) == pytest.approx(1.0, rel=1e-9)
