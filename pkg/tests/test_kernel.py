import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fourier_boltzmann import AngularKernel, lambda_limit, rate_constants
from fourier_boltzmann.errors import DivergenceError, DomainError
from fourier_boltzmann.kernel import singularity_index, theta_rule

POWER = AngularKernel.power_law(0.25)

# frozen from an independent mpmath integration of
# 2 pi int_0^{pi/2} b_n(theta) (cos^a + sin^a - 1)(theta/2) sin(theta) d theta
LAMBDA_15_POWER_64 = 1.41999678913820567197
LAMBDA_1_POWER_LIMIT = 6.29811198958311735060


def test_constant_kernel_closed_forms():
    c = rate_constants(AngularKernel.constant(1.0), (0.0, 1.0, 2.0))
    assert c.lam[1.0] == pytest.approx(2 * math.pi / 3, abs=1e-12)
    assert c.lam[0.0] == pytest.approx(2 * math.pi, abs=1e-12)
    assert c.gamma2 == pytest.approx(2 * math.pi, abs=1e-12)
    assert abs(c.lam[2.0]) <= 1e-12


def test_power_law_cutoff_constant():
    c = rate_constants(POWER.with_cutoff(64), (1.5,))
    assert c.lam[1.5] == pytest.approx(LAMBDA_15_POWER_64, rel=1e-12)


def test_lambda_limit_value():
    assert lambda_limit(POWER, 1.0) == pytest.approx(LAMBDA_1_POWER_LIMIT, rel=1e-10)


def test_lambda_limit_diverges_below_singularity():
    with pytest.raises(DivergenceError):
        lambda_limit(POWER, 0.4)


def test_uncut_kernel_has_no_rate_constants():
    with pytest.raises(DivergenceError):
        rate_constants(POWER, (1.0,))


def test_exponent_domain():
    with pytest.raises(DomainError):
        rate_constants(AngularKernel.constant(1.0), (2.5,))


def test_singularity_index():
    assert singularity_index(POWER) == pytest.approx(0.5)
    assert singularity_index(AngularKernel.constant(1.0)) == 0.0


def test_cutoff_crossover():
    k = POWER.with_cutoff(32)
    assert k.crossover() == pytest.approx(0.25)
    assert float(k(0.1)) == 32.0
    assert float(k(1.0)) == pytest.approx(1.0)


def test_theta_rule_integrates_gamma2():
    k = POWER.with_cutoff(64)
    rule = theta_rule(k)
    assert rule.weights.sum() == pytest.approx(rate_constants(k, (2.0,)).gamma2, rel=1e-12)


def test_theta_rule_rejects_singular_kernel():
    with pytest.raises(DivergenceError):
        theta_rule(POWER)


kernels = st.one_of(
    st.floats(0.1, 10.0).map(AngularKernel.constant),
    st.tuples(st.floats(0.05, 0.95), st.floats(2.0, 1e4)).map(
        lambda t: AngularKernel.power_law(t[0]).with_cutoff(t[1])),
)


@given(kernels)
def test_lambda_2_vanishes(k):
    c = rate_constants(k, (2.0,))
    assert abs(c.lam[2.0]) <= 1e-12 * max(1.0, c.gamma2)


@given(kernels, st.floats(0.0, 1.9), st.floats(0.01, 0.1))
def test_lambda_decreases_in_exponent(k, a, da):
    c = rate_constants(k, (a, a + da))
    assert c.lam[a] >= c.lam[a + da] >= -1e-12


@given(st.floats(0.05, 0.95), st.floats(2.0, 1e3), st.floats(1.1, 10.0))
def test_lambda_grows_with_cutoff(s, n, factor):
    base = AngularKernel.power_law(s)
    lo = rate_constants(base.with_cutoff(n), (1.0,)).lam[1.0]
    hi = rate_constants(base.with_cutoff(n * factor), (1.0,)).lam[1.0]
    assert hi >= lo - 1e-12


def test_tabulated_matches_constant():
    th = np.linspace(1e-3, math.pi / 2, 50)
    tab = AngularKernel.tabulated(th, np.full_like(th, 2.0))
    c = rate_constants(tab, (1.0,))
    assert c.lam[1.0] == pytest.approx(4 * math.pi / 3, rel=1e-6)


def test_full_range_table_folds_onto_half_range():
    th = np.linspace(1e-3, math.pi - 1e-3, 101)
    tab = AngularKernel.tabulated(th, np.ones_like(th))
    assert rate_constants(tab, (1.0,)).lam[1.0] == pytest.approx(4 * math.pi / 3, rel=1e-5)
