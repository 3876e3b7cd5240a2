import math

import numpy as np
import pytest

from argminproc import harness
from argminproc.errors import HorizonTooShort, NonIntegerWindow, NotFound, WindowTooLarge
from argminproc.extract import (ANOMALY, INTERIOR_TO_ONE, ZERO_TO_INTERIOR, ArgminTrajectory,
                                argmin_trajectory, detect_jumps, extract_ab_minima,
                                extract_first_long_ladder, gap_statistics)
from argminproc.numerics import ks_2samp
from argminproc.pathsim import SampledPath, SeedSpec, simulate_brownian


DT = 1e-3


def line(slope, n, dt=DT):
    return SampledPath(0.0, dt, slope * dt * np.arange(n + 1))


def v_path(vertex, n, dt=DT):
    t = dt * np.arange(n + 1)
    return SampledPath(0.0, dt, np.abs(t - vertex))


@pytest.fixture(scope="module")
def bm_long():
    return simulate_brownian(10_000.0, DT, SeedSpec(2024))


@pytest.fixture(scope="module")
def dec_long(bm_long):
    return extract_ab_minima(bm_long, 1.0, 1.0)


# --- argmin trajectory ------------------------------------------------------

def test_decreasing_path_alpha_one():
    tr = argmin_trajectory(line(-1.0, 3000))
    assert np.all(tr.samples == 1.0)
    assert tr.jumps.size == 0


def test_increasing_path_alpha_zero():
    tr = argmin_trajectory(line(1.0, 3000))
    assert np.all(tr.samples == 0.0)
    assert tr.jumps.size == 0


def test_v_path_follows_vertex():
    v = 2.0
    tr = argmin_trajectory(v_path(v, 5000))
    t = tr.times
    inside = (t >= v - 1.0) & (t <= v)
    assert np.allclose(tr.samples[inside], v - t[inside], atol=1e-12)
    # after the vertex the window sees the increasing branch only
    assert np.all(tr.samples[t > v] == 0.0)
    # and before it only the decreasing branch
    assert np.all(tr.samples[t < v - 1.0] == 1.0)


def test_argmin_errors():
    with pytest.raises(NonIntegerWindow):
        argmin_trajectory(line(1.0, 3000), window=1.0005)
    with pytest.raises(WindowTooLarge):
        argmin_trajectory(line(1.0, 500))
    with pytest.raises(NonIntegerWindow):
        argmin_trajectory(SampledPath(0.0, 1.0, np.zeros(10)), window=1.0)


def test_sawtooth_single_jump():
    dt = 0.01
    s = np.r_[np.linspace(1.0, 0.0, 101), np.linspace(1.0, 0.5, 51)]
    tr = ArgminTrajectory(dt, s, np.round(s / dt).astype(np.int64))
    j = detect_jumps(tr)
    assert j.size == 1
    assert j["kind"][0] == ANOMALY or j["kind"][0] in (ZERO_TO_INTERIOR, INTERIOR_TO_ONE)
    # 0 -> 1: starts at 0 and ends at 1, the full-window jump is an anomaly
    assert j["kind"][0] == ANOMALY
    s2 = np.r_[np.linspace(0.6, 0.3, 31), np.linspace(1.0, 0.8, 21)]
    j2 = detect_jumps(ArgminTrajectory(dt, s2, np.round(s2 / dt).astype(np.int64)))
    assert j2.size == 1 and j2["kind"][0] == INTERIOR_TO_ONE
    s3 = np.r_[np.linspace(0.3, 0.0, 31), np.linspace(0.4, 0.2, 21)]
    j3 = detect_jumps(ArgminTrajectory(dt, s3, np.round(s3 / dt).astype(np.int64)))
    assert j3.size == 1 and j3["kind"][0] == ZERO_TO_INTERIOR


def test_pure_drift_no_jumps():
    dt = 0.01
    s = np.linspace(1.0, 0.0, 101)
    assert detect_jumps(ArgminTrajectory(dt, s, np.round(s / dt).astype(np.int64))).size == 0


@pytest.mark.slow
def test_brownian_anomaly_fraction():
    dt = 1e-4
    tr = argmin_trajectory(simulate_brownian(1000.0, dt, SeedSpec(17)))
    assert tr.jumps.size > 100
    assert tr.n_anomalies / tr.jumps.size < 1e-3


def test_monotone_t_plus_alpha(bm_long):
    sub = SampledPath(0.0, DT, bm_long.values[:200_001])
    tr = argmin_trajectory(sub)
    # t + alpha_t nondecreasing, in grid steps to avoid rounding
    k = np.arange(tr.offsets.size)
    assert np.all(np.diff(k + tr.offsets) >= 0)
    assert np.all((tr.samples >= 0) & (tr.samples <= 1))


@pytest.mark.slow
def test_reversal_of_marginal():
    a = harness.exp_stationary_marginal(samples=100_000, seed=SeedSpec(31)).samples["alpha"]
    b = harness.exp_stationary_marginal(samples=100_000, seed=SeedSpec(32)).samples["alpha"]
    assert ks_2samp(a, 1.0 - b) < 0.01


# --- (a,b)-minima -----------------------------------------------------------

def test_single_v_one_minimum():
    dec = extract_ab_minima(v_path(3.0, 6000), 1.0, 1.0)
    assert dec.T.tolist() == pytest.approx([3.0])
    assert dec.n_gaps == 0


def test_horizon_too_short():
    with pytest.raises(HorizonTooShort):
        extract_ab_minima(line(1.0, 1500), 1.0, 1.0)


@pytest.mark.slow
def test_gap_mean_pi(dec_long):
    assert dec_long.n_gaps > 2500
    assert dec_long.delta.mean() == pytest.approx(math.pi, rel=0.02)


@pytest.mark.slow
def test_gap_mean_asymmetric(bm_long):
    dec = extract_ab_minima(bm_long, 1.0, 4.0)
    assert dec.delta.mean() == pytest.approx(2 * math.pi, rel=0.03)


def test_decomposition_structure(dec_long):
    g = gap_statistics(dec_long)
    n = g.size
    T = dec_long.T
    assert np.all(dec_long.G < dec_long.D)
    # G - T and T+ - D have the law of J, whose density 1/(pi sqrt t) puts
    # mass 2 sqrt(dt)/pi below one grid step: the endpoints coincide on the
    # grid occasionally
    assert np.all(T[:n] <= dec_long.G) and np.all(dec_long.D <= T[1:n + 1])
    rare = 3 * 2 * math.sqrt(DT) / math.pi
    assert np.mean(T[:n] == dec_long.G) < rare and np.mean(dec_long.D == T[1:n + 1]) < rare
    # delta = (G-T) + (D-G) + (T+ - D) on the grid
    assert np.allclose(g["delta"], g["GT"] + g["DG"] + g["TD"], atol=1e-9)
    # D - G in (1, 2) up to grid tolerance
    assert np.all(g["DG"] > 1.0 - DT) and np.all(g["DG"] < 2.0 + DT)
    # the construction ends exactly at the next minimum
    assert dec_long.construction_ok.all()


def test_left_ends_precede_right_ends(dec_long):
    T, LE, RE = dec_long.T, dec_long.LE, dec_long.RE
    for i in range(min(dec_long.n_gaps, 500)):
        le = LE[(LE > T[i]) & (LE < T[i + 1])]
        re = RE[(RE > T[i]) & (RE < T[i + 1])]
        if le.size and re.size:
            assert le.max() <= re.min() + DT


def test_levels_at_G_and_D(bm_long, dec_long):
    x = bm_long.values
    gi = np.round(dec_long.G / DT).astype(np.int64)
    di = np.round(dec_long.D / DT).astype(np.int64)
    assert np.max(np.abs(x[gi] - x[di])) <= 6.0 * math.sqrt(DT)


@pytest.mark.slow
def test_gap_piece_means_and_independence():
    want = 10_000
    dt = DT
    segs = [extract_ab_minima(simulate_brownian(2000.0, dt, SeedSpec(77, k)), 1.0, 1.0) for k in range(16)]
    g = np.concatenate([gap_statistics(d) for d in segs])
    assert g.size >= want
    assert g["GT"].mean() == pytest.approx(1.0, rel=0.03)
    assert g["TD"].mean() == pytest.approx(1.0, rel=0.03)
    # D - G on the grid is at least one step longer than its continuum value
    assert (g["DG"] - dt).mean() == pytest.approx(math.pi - 2, rel=0.03)
    assert g["N"].mean() == pytest.approx(math.pi / 2, rel=0.03)
    assert 1.0 / g["N"].mean() == pytest.approx(2 / math.pi, rel=0.03)
    for u, v in (("GT", "DG"), ("GT", "TD"), ("DG", "TD")):
        assert abs(np.corrcoef(g[u], g[v])[0, 1]) < 0.03


def test_csv_export(dec_long):
    text = dec_long.to_csv()
    lines = text.splitlines()
    assert lines[0] == "i,T,G,D,delta,N,H"
    assert len(lines) == dec_long.n_gaps + 1


# --- first long ladder time -------------------------------------------------

def test_ladder_deterministic():
    dt = 0.01
    t = dt * np.arange(301)
    x = np.where(t <= 0.3, -t, -0.3 + (t - 0.3))
    rec = extract_first_long_ladder(SampledPath(0.0, dt, x))
    assert rec.J == pytest.approx(0.3)
    seg = rec.meander_segment.values
    assert seg[0] == 0.0 and np.all(seg[1:] > 0)


def test_ladder_not_found():
    with pytest.raises(NotFound):
        extract_first_long_ladder(line(-1.0, 3000))


@pytest.mark.slow
def test_ladder_law():
    J, _ = harness._pool_J(SeedSpec(99), DT, 100_000)
    assert J.size == 100_000
    assert np.mean(J <= 1.0) == pytest.approx(2 / math.pi, rel=0.01)
    assert J.mean() == pytest.approx(1.0, rel=0.02)
