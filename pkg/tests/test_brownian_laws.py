import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from argminproc.brownian_laws import (StableParams, arcsine_cdf, arcsine_density,
                                      chapman_kolmogorov_defect, hit_one_density, intertwining_gap,
                                      jump_balance_defect, jump_rate_to_one, kernel_density,
                                      levy_measure_from_zero, reversal_atom_defect, reversal_defect,
                                      stable_jump_rate, stable_kernel_density, stable_stationary_density,
                                      stable_transition_kernel, stationarity_defect, survival_no_jump,
                                      tabulate_kernel, transition_kernel)
from argminproc.errors import DomainError, SubordinatorRejected
from argminproc.numerics import integrate


# --- scalar laws ------------------------------------------------------------

def test_arcsine_density_values():
    assert arcsine_density(0.5) == pytest.approx(2 / math.pi, abs=1e-15)
    assert arcsine_density(0.1) == pytest.approx(arcsine_density(0.9), rel=1e-14)
    assert integrate(arcsine_density, 0.0, 1.0, 1e-10) == pytest.approx(1.0, abs=1e-8)
    assert arcsine_cdf(0.5) == pytest.approx(0.5, abs=1e-15)
    for x in (0.0, 1.0):
        with pytest.raises(DomainError):
            arcsine_density(x)


def test_survival_no_jump():
    assert survival_no_jump(0.4, 0.4) == 1.0
    assert survival_no_jump(1.0, 0.3) == 0.0
    assert survival_no_jump(0.75, 0.25) == pytest.approx(math.sqrt(1 / 3), abs=1e-15)
    with pytest.raises(DomainError):
        survival_no_jump(0.2, 0.3)


def test_jump_rate_to_one():
    assert jump_rate_to_one(0.5) == pytest.approx(1.0)
    assert jump_rate_to_one(1e-12) == pytest.approx(0.5, abs=1e-11)
    # hazard of the no-jump survival: -d/dx log s(x, y)
    x, y, h = 0.3, 0.1, 1e-6
    fd = -(math.log(survival_no_jump(x + h, y)) - math.log(survival_no_jump(x - h, y))) / (2 * h)
    assert fd == pytest.approx(jump_rate_to_one(x), abs=1e-6)


def test_levy_measure_from_zero():
    assert levy_measure_from_zero(0.5) == pytest.approx(1 / math.sqrt(2 * math.pi * 0.0625), abs=1e-14)
    y = 0.3
    lhs = levy_measure_from_zero(y) / math.sqrt(2 * math.pi)
    assert lhs == pytest.approx(arcsine_density(1 - y) * jump_rate_to_one(1 - y), abs=1e-12)
    assert levy_measure_from_zero(1e-6) > 1e8


def test_jump_balance_all_levels():
    for y in np.arange(1, 10) / 10:
        assert jump_balance_defect(y) < 1e-12


def test_hit_one_density():
    x = 0.6
    assert integrate(lambda t: hit_one_density(x, t), 0.0, x, 1e-12) == pytest.approx(1 - math.sqrt(1 - x), abs=1e-8)
    assert hit_one_density(0.5, 0.25) == pytest.approx(0.544331, abs=1e-6)
    assert hit_one_density(0.5, 0.5 - 1e-12) == pytest.approx(0.5 * math.sqrt(0.5), rel=1e-9)


# --- transition kernel ------------------------------------------------------

def test_kernel_middle_regime_atom():
    K = transition_kernel(0.5, 0.25)
    loc, mass = K.atom
    assert loc == pytest.approx(0.25) and mass == pytest.approx(math.sqrt(0.5 / 0.75), abs=1e-15)


def test_kernel_from_one_is_rescaled_arcsine():
    K = transition_kernel(1.0, 0.5)
    assert K.atom is None or K.atom_mass == 0.0
    for y in (0.55, 0.7, 0.95):
        assert K(y) == pytest.approx(1 / (math.pi * math.sqrt((1 - y) * (y - 0.5))), rel=1e-12)
    assert K(0.3) == 0.0


def test_kernel_long_time_is_arcsine():
    for x in (0.0, 0.3, 1.0):
        K = transition_kernel(x, 2.0)
        assert K.atom is None
        for y in (0.1, 0.5, 0.8):
            assert K(y) == pytest.approx(arcsine_density(y), rel=1e-14)


def test_kernel_mass_grid():
    # 20 x 20 (x, t) grid over (0,1]^2 plus the t > 1 regime
    xs = np.linspace(0.0, 1.0, 20)
    ts = np.linspace(0.05, 1.0, 20)
    worst = 0.0
    for x in xs:
        for t in ts:
            worst = max(worst, abs(transition_kernel(x, t).total_mass() - 1.0))
    for x in (0.0, 0.5, 1.0):
        worst = max(worst, abs(transition_kernel(x, 1.5).total_mass() - 1.0))
    assert worst < 1e-6


def test_kernel_density_nonnegative():
    for x in np.linspace(0, 1, 11):
        for t in (0.1, 0.5, 0.9, 1.2):
            for y in np.linspace(0.01, 0.99, 25):
                assert kernel_density(x, t, y) >= 0.0


@pytest.mark.parametrize("x,s,t", [(0.5, 0.2, 0.3), (0.9, 0.5, 0.7), (0.2, 0.4, 0.4)])
def test_chapman_kolmogorov(x, s, t):
    assert chapman_kolmogorov_defect(x, s, t, grid=200) < 1e-4


def test_chapman_kolmogorov_small_s():
    assert chapman_kolmogorov_defect(0.6, 1e-4, 0.3, grid=50) < 1e-4


@pytest.mark.parametrize("t", [0.3, 0.7])
@pytest.mark.parametrize("y", [0.2, 0.5, 0.9])
def test_stationarity(t, y):
    assert stationarity_defect(t, y) < 1e-5


def test_reversal_flows():
    for t in (0.2, 0.5, 0.8, 1.3):
        for x in (0.1, 0.35, 0.6, 0.95):
            for y in (0.15, 0.4, 0.7, 0.9):
                assert reversal_defect(x, y, t) < 1e-10
    for x, t in ((0.5, 0.25), (0.9, 0.3), (0.7, 0.65)):
        assert reversal_atom_defect(x, t) < 1e-10


def test_kernel_against_mpmath_quadrature():
    # third regime mass with an independent integrator
    x, t = 0.3, 0.6
    with mpmath.workdps(20):
        m = mpmath.quad(lambda y: kernel_density(x, t, float(y)), [0, 1 - t, 1])
    assert float(m) == pytest.approx(1.0, abs=1e-7)


# --- intertwining -----------------------------------------------------------

def test_intertwining_gap():
    lhs, rhs = intertwining_gap(1.0)
    assert lhs == 0.0
    assert rhs == pytest.approx(2 / math.sqrt(2 * math.pi), abs=1e-10)
    lhs, rhs = intertwining_gap(0.5)
    assert rhs - lhs > 0
    lhs, rhs = intertwining_gap(1e-8)
    assert 0 <= rhs - lhs < 1e-6
    with pytest.raises(DomainError):
        intertwining_gap(0.0)


# --- stable generalisation --------------------------------------------------

def test_stable_reduces_to_brownian():
    for x in (0.0, 0.2, 0.4, 0.7, 1.0):
        for t in (0.1, 0.3, 0.6, 1.0, 1.5):
            for y in (0.05, 0.3, 0.55, 0.8, 0.97):
                assert stable_kernel_density(0.5, x, t, y) == pytest.approx(kernel_density(x, t, y), abs=1e-12)
    Ks = stable_transition_kernel(0.5, 0.4, 0.3)
    Kb = transition_kernel(0.4, 0.3)
    assert Ks(0.8) == pytest.approx(Kb(0.8), abs=1e-12)
    assert stable_stationary_density(0.5, 0.5) == pytest.approx(2 / math.pi, abs=1e-15)


@pytest.mark.parametrize("alpha,beta", [(1.5, 0.5), (0.8, -0.3)])
def test_stable_kernel_mass(alpha, beta):
    p = StableParams(alpha, beta)
    for x, t in ((0.6, 0.4), (0.3, 0.6), (1.0, 0.5), (0.5, 1.3)):
        assert stable_transition_kernel(p, x, t).total_mass() == pytest.approx(1.0, abs=1e-6)


def test_stable_printed_variant_not_normalised():
    # exponent rho on (y+t-1)_+ in the drift regime only integrates to one at rho = 1/2
    p = StableParams(1.5, 0.5)
    m = stable_transition_kernel(p, 0.6, 0.4, printed=True).total_mass()
    assert abs(m - 1.0) > 1e-3
    assert stable_transition_kernel(0.5, 0.6, 0.4, printed=True).total_mass() == pytest.approx(1.0, abs=1e-6)


def test_stable_jump_rate_and_stationary():
    rho = 0.4
    assert stable_jump_rate(rho, 0.5) == pytest.approx(1.2)
    assert integrate(lambda x: stable_stationary_density(rho, x), 0.0, 1.0, 1e-10,
                     end_powers={0.0: 1 / (1 - rho), 1.0: 1 / rho}) == pytest.approx(1.0, abs=1e-8)


def test_stable_stationarity_and_ck():
    rho = 0.4
    dens = lambda x, t, y: stable_kernel_density(rho, x, t, y)  # noqa: E731
    ker = lambda x, t: stable_transition_kernel(rho, x, t)  # noqa: E731
    f = lambda x: stable_stationary_density(rho, x)  # noqa: E731
    for t, y in ((0.3, 0.5), (0.7, 0.2)):
        assert stationarity_defect(t, y, tol=1e-10, density=dens, kernel=ker, f=f) < 1e-5
    assert chapman_kolmogorov_defect(0.5, 0.2, 0.3, grid=40, tol=1e-9, density=dens, kernel=ker) < 1e-4


def test_stable_params_validation():
    assert StableParams(1.5, 0.0).rho == 0.5
    with pytest.raises(SubordinatorRejected):
        StableParams(0.5, 1.0)
    p = StableParams.from_rho(0.4)
    assert p.rho == pytest.approx(0.4, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.05, 1.0))
def test_kernel_mass_property(x, t):
    assert transition_kernel(x, t).total_mass() == pytest.approx(1.0, abs=1e-6)


def test_tabulation_export():
    text, atoms = tabulate_kernel([0.5], [0.25, 2.0], [0.3, 0.6])
    assert text.splitlines()[0] == "x,t,y,density"
    assert len(text.splitlines()) == 5
    assert atoms == [{"x": 0.5, "t": 0.25, "location": 0.25, "mass": pytest.approx(math.sqrt(2 / 3))}]


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.0, 1.0), st.floats(0.02, 1.0))
def test_stable_kernel_mass_property(rho, x, t):
    assert stable_transition_kernel(rho, x, t).total_mass() == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("rho", [None, 0.05, 0.4, 0.9])
@pytest.mark.parametrize("x,t", [(0.0, 1 - 1e-9), (1.0, 1e-9), (0.99999, 1e-6),
                                 (0.3, 0.3 + 1e-7), (0.5, 0.5 - 1e-7), (1e-5, 0.99999)])
def test_kernel_mass_near_regime_edges(rho, x, t):
    K = transition_kernel(x, t) if rho is None else stable_transition_kernel(rho, x, t)
    assert K.total_mass() == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("x,t", [(0.5, 0.25), (0.3, 0.6), (0.2, 0.9), (0.4, 1.5)])
def test_continuous_cdf_accurate_at_edges(x, t):
    # the CDF has square-root behaviour at the support ends and breakpoints
    Q = transition_kernel(x, t)
    F = Q.continuous_cdf()
    tot = Q.density_mass(1e-10)
    knots = [Q.support_lo, *Q.breakpoints, Q.support_hi]
    pts = [k + d for k in knots for d in (-1e-6, -5e-4, 1e-6, 5e-4)
           if Q.support_lo < k + d < Q.support_hi]
    pts += list(np.linspace(Q.support_lo, Q.support_hi, 23)[1:-1])
    for y in pts:
        exact = integrate(Q.density, Q.support_lo, y, 1e-12, power=Q.sub_power,
                          end_powers=Q.end_powers, f_local=Q.density_local) / tot
        assert abs(float(F(y)) - exact) < 2e-5, y
    assert float(F(Q.support_lo - 1.0)) == 0.0 and float(F(Q.support_hi + 1.0)) == 1.0
