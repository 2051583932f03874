import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fourier_boltzmann import (RadialGrid, dirac_pair, gaussian, laplacian_lift, levy_constant,
                               mixture, moment_from_charfn, second_moment, stable)
from fourier_boltzmann.charfun import as_radial
from fourier_boltzmann.errors import DivergenceError, UnsupportedError
from fourier_boltzmann.moments import _levy_cosine, _levy_radial

# pi^{3/2} Gamma(1 - a/2) / (a 2^{a-1} Gamma((3+a)/2)), mpmath at 30 digits
LEVY = {0.5: 20.99947992762989155690, 1.0: math.pi ** 2, 1.5: 8.39979197105195618315}


def gaussian_abs_moment(var, p):
    """E|V|^p for V ~ N(0, var I_3)."""
    return (2 * var) ** (p / 2) * math.gamma((3 + p) / 2) / math.gamma(1.5)


@pytest.mark.parametrize("alpha", sorted(LEVY))
def test_levy_constant_closed_form(alpha):
    assert levy_constant(alpha) == pytest.approx(LEVY[alpha], rel=1e-12)


def test_levy_routes_independently():
    assert abs(_levy_radial(1.0) - math.pi ** 2) <= 1e-6
    assert abs(_levy_cosine(1.0) - math.pi ** 2) <= 1e-6


@given(st.floats(0.05, 1.95))
def test_levy_routes_agree(alpha):
    c, err = levy_constant(alpha, return_error=True)
    assert err <= 1e-10 * c
    ref = (math.pi ** 1.5 * math.gamma(1 - alpha / 2)
           / (alpha * 2 ** (alpha - 1) * math.gamma((3 + alpha) / 2)))
    assert c == pytest.approx(ref, rel=1e-9)


def test_levy_constant_domain():
    with pytest.raises(DivergenceError):
        levy_constant(2.0)


@given(st.floats(0.2, 4.0), st.floats(0.1, 1.9))
def test_gaussian_moments(var, alpha):
    m = moment_from_charfn(gaussian(var), alpha)
    assert m.value == pytest.approx(gaussian_abs_moment(var, alpha), rel=1e-6)


@given(st.floats(0.1, 5.0), st.floats(0.1, 1.9))
def test_dirac_pair_moment(a, alpha):
    assert moment_from_charfn(dirac_pair(a), alpha).value == pytest.approx(a ** alpha, rel=1e-6)


def test_grid_moment_matches_analytic():
    phi = mixture([(0.5, gaussian(1.0)), (0.5, gaussian(2.0))])
    ref = 0.5 * gaussian_abs_moment(1.0, 1.0) + 0.5 * gaussian_abs_moment(2.0, 1.0)
    assert moment_from_charfn(as_radial(phi, RadialGrid()), 1.0).value == pytest.approx(ref, rel=1e-5)


def test_grid_moment_error_bar_covers_truncation():
    # past r_max an oscillating deficit is only bounded, so the error bar must cover the gap
    phi = mixture([(0.5, gaussian(1.0)), (0.5, dirac_pair(2.0))])
    ref = 0.5 * gaussian_abs_moment(1.0, 1.0) + 0.5 * 2.0
    m = moment_from_charfn(as_radial(phi, RadialGrid()), 1.0)
    assert abs(m.value - ref) <= m.error


def test_stable_moment_diverges_at_its_index():
    assert moment_from_charfn(stable(1.2), 1.5).divergent


@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.floats(0.0, 1.0))
def test_second_moment_mixtures(var, a, w):
    phi = mixture([(w, gaussian(var)), (1 - w, dirac_pair(a))])
    ref = w * 3 * var + (1 - w) * a * a
    assert second_moment(phi).value == pytest.approx(ref, rel=1e-6)
    assert second_moment(as_radial(phi, RadialGrid())).value == pytest.approx(ref, rel=1e-6)


def test_second_moment_infinite_for_stable():
    assert math.isinf(second_moment(stable(1.5)).value)


def test_lift_gaussian_closed_form():
    r = np.linspace(0, 5, 101)
    for method in ("exact", "fd"):
        lift = laplacian_lift(gaussian(1.0), 1, radii=r, method=method)
        assert lift.psi0 == pytest.approx(4.0, rel=1e-9)
        assert np.max(np.abs(lift.values - (4 - r * r) * np.exp(-r * r / 2))) <= 1e-8


def test_lift_order_two_value_at_origin():
    # (1 - Laplacian)^2 e^{-r^2/2} at 0: 1 + 2*3 + 15 = 22
    assert laplacian_lift(gaussian(1.0), 2).psi0 == pytest.approx(22.0, rel=1e-12)


@given(st.floats(0.2, 3.0))
def test_lift_dirac_pair_is_eigenfunction(a):
    r = np.linspace(0, 5, 51)
    lift = laplacian_lift(dirac_pair(a), 1, radii=r)
    assert lift.psi0 == pytest.approx(1 + a * a, rel=1e-12)
    assert np.allclose(lift.normalized.values, dirac_pair(a).radial(r), atol=1e-12)


def test_lift_exact_and_fd_agree():
    phi = mixture([(0.3, gaussian(0.5)), (0.7, dirac_pair(1.0))])
    r = np.linspace(0, 4, 81)
    a = laplacian_lift(phi, 1, radii=r, method="exact")
    b = laplacian_lift(phi, 1, radii=r, method="fd")
    assert np.max(np.abs(a.values - b.values)) <= 1e-7


def test_lift_moment_identity():
    # the normalized lift is the characteristic function of (1+|v|^2) dF / E(1+|V|^2)
    lift = laplacian_lift(gaussian(1.0), 1)
    ref = (gaussian_abs_moment(1.0, 0.5) + gaussian_abs_moment(1.0, 2.5)) / 4.0
    assert moment_from_charfn(lift.normalized, 0.5).value == pytest.approx(ref, rel=1e-5)


def test_lift_rejects_rough_data():
    with pytest.raises(UnsupportedError):
        laplacian_lift(stable(1.5), 1)
