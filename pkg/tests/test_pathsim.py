import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from argminproc.errors import DomainError, InvalidGrid, ModelMismatch, SubordinatorRejected
from argminproc.pathsim import (IncrementModel, SampledPath, SeedSpec, positivity_parameter,
                                simulate_brownian, simulate_stable, simulate_walk, stable_standard)


def test_brownian_shape():
    p = simulate_brownian(1.0, 0.5, SeedSpec(1))
    assert p.values.shape == (3,)
    assert p.values[0] == 0.0
    assert p.n == 2 and p.horizon == 1.0


def test_brownian_increment_variance():
    dt = 1e-3
    p = simulate_brownian(1e6 * dt, dt, SeedSpec(7))
    assert np.var(p.increments()) == pytest.approx(dt, rel=0.01)


def test_brownian_increments_normal_ks():
    dt = 1e-2
    p = simulate_brownian(1e5 * dt, dt, SeedSpec(11))
    z = p.increments() / math.sqrt(dt)
    assert stats.kstest(z, "norm").pvalue > 1e-3


def test_determinism_same_seed():
    a = simulate_brownian(10.0, 1e-3, SeedSpec(5, 3))
    b = simulate_brownian(10.0, 1e-3, SeedSpec(5, 3))
    c = simulate_brownian(10.0, 1e-3, SeedSpec(5, 4))
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    s1 = simulate_stable(1.5, 0.3, 10.0, 1e-3, SeedSpec(2))
    s2 = simulate_stable(1.5, 0.3, 10.0, 1e-3, SeedSpec(2))
    assert np.array_equal(s1.values, s2.values)


def test_child_streams_differ():
    s = SeedSpec(9)
    assert s.child(0) != s.child(1)
    x = s.child(0).generator().random(4)
    y = s.child(1).generator().random(4)
    assert not np.array_equal(x, y)


def test_seed_validation():
    with pytest.raises(DomainError):
        SeedSpec(-1)
    with pytest.raises(DomainError):
        SeedSpec(1, -2)


def test_rademacher_parity():
    p = simulate_walk(IncrementModel.rademacher(), 3, SeedSpec(0))
    v = p.values
    assert set(np.abs(v).astype(int)) <= {0, 1, 2, 3}
    for k, val in enumerate(v):
        assert int(val) % 2 == k % 2


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(1, 500))
def test_rademacher_unit_steps(seed, n):
    p = simulate_walk(IncrementModel.rademacher(), n, SeedSpec(seed))
    assert np.all(np.abs(np.diff(p.values)) == 1.0)


def test_generic_continuous_symmetry():
    model = IncrementModel.generic_continuous(lambda rng, n: rng.standard_normal(n), 0.5)
    # 10^6 increments split into 10^5 independent walks of 10 steps; the
    # occupation fraction of a single long walk is arcsine distributed and
    # does not concentrate, so P(S_n > 0) is estimated across walks
    end = np.array([simulate_walk(model, 10, SeedSpec(4, k)).values[-1] for k in range(100_000)])
    assert np.mean(end > 0) == pytest.approx(0.5, abs=0.01)


def test_walk_one_step():
    for model in (IncrementModel.gaussian(), IncrementModel.rademacher()):
        assert simulate_walk(model, 1, SeedSpec(0)).values.shape == (2,)


def test_walk_rejects_stable():
    with pytest.raises(ModelMismatch):
        simulate_walk(IncrementModel.stable(1.5, 0.0), 10, SeedSpec(0))


def test_stable_alpha2_variance():
    dt = 1e-3
    for beta in (0.0, 0.7):
        p = simulate_stable(2.0, beta, 1e6 * dt, dt, SeedSpec(3))
        assert np.var(p.increments()) == pytest.approx(2 * dt, rel=0.01)


def test_cauchy_symmetry():
    p = simulate_stable(1.0, 0.0, 1e3, 1e-3, SeedSpec(8))
    inc = p.increments()
    assert abs(np.median(inc)) < 5e-5
    assert np.mean(inc > 0) == pytest.approx(0.5, abs=0.01)


@pytest.mark.parametrize("alpha,beta", [(1.5, 0.5), (0.8, -0.3), (1.2, 1.0), (1.0, 0.5)])
def test_cms_matches_scipy_levy_stable(alpha, beta):
    # scipy's S1 parameterisation has characteristic exponent
    # |l|^a (1 - i b sgn(l) tan(pi a/2)), the same as the CMS draws here
    x = np.sort(stable_standard(alpha, beta, 20_000, np.random.default_rng(1)))
    # empirical vs model CDF at 200 sample quantiles (scipy's stable CDF is slow)
    probes = np.quantile(x, np.linspace(0.005, 0.995, 200))
    ecdf = np.searchsorted(x, probes, side="right") / x.size
    model = stats.levy_stable(alpha, beta).cdf(probes)
    assert np.max(np.abs(ecdf - model)) < 0.015


def test_positivity_examples():
    for a in (0.5, 1.0, 1.5, 2.0):
        assert positivity_parameter(a, 0.0) == 0.5
    assert positivity_parameter(2.0, 1.0) == 0.5
    with pytest.raises(SubordinatorRejected):
        positivity_parameter(0.5, 1.0)


def test_positivity_against_simulation():
    x = stable_standard(1.5, 0.5, 200_000, np.random.default_rng(2))
    assert np.mean(x > 0) == pytest.approx(positivity_parameter(1.5, 0.5), abs=0.005)


@given(st.floats(0.05, 2.0), st.floats(-1.0, 1.0))
def test_positivity_reflection(alpha, beta):
    if alpha == 1.0 and beta != 0.0:
        with pytest.raises(DomainError):
            positivity_parameter(alpha, beta)
        return
    if alpha < 1.0 and abs(beta) == 1.0:
        with pytest.raises(SubordinatorRejected):
            positivity_parameter(alpha, beta)
        return
    try:
        rho = positivity_parameter(alpha, beta)
    except SubordinatorRejected:
        # |beta| within rounding of 1 at alpha < 1: rho rounds to 0 or 1
        assert alpha < 1.0 and abs(beta) > 0.999
        return
    assert 0.0 < rho < 1.0
    assert positivity_parameter(alpha, -beta) == pytest.approx(1.0 - rho, abs=1e-14)


def test_stable_parameter_errors():
    with pytest.raises(DomainError):
        simulate_stable(2.5, 0.0, 1.0, 1e-2, SeedSpec(0))
    with pytest.raises(InvalidGrid):
        simulate_brownian(1.0, 0.0, SeedSpec(0))


def test_save_load_roundtrip(tmp_path):
    p = simulate_brownian(2.0, 1e-2, SeedSpec(1))
    f = tmp_path / "p.bin"
    p.save(f)
    q = SampledPath.load(f)
    assert q.dt == p.dt and q.t0 == p.t0
    assert np.array_equal(q.values, p.values)
