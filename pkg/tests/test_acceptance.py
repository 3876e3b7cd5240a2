"""
Acceptance criteria 1-18.

Each test prints one ``CRITERION n: PASS|FAIL`` line (also collected into the
terminal summary by ``conftest.py``) and then asserts.  Criteria 12-16 read
the first of two runs of the default suite at master seed 42; criterion 18
compares the JSON of both runs byte for byte.
"""
import math

import numpy as np
import pytest

from argminproc.brownian_laws import (StableParams, chapman_kolmogorov_defect, jump_balance_defect,
                                      kernel_density, reversal_atom_defect, reversal_defect,
                                      stable_kernel_density, stable_transition_kernel,
                                      stationarity_defect, transition_kernel)
from argminproc.discrete_chain import (WalkLawInput, chain_law, chain_law_ssrw, chain_law_theta,
                                       compare_ssrw_closed_forms, enumerate_ssrw_oracle,
                                       simulate_chain, theta_zero_to_N_identity)
from argminproc.harness import run_suite
from argminproc.numerics import GridFunction, integrate, laplace_eval
from argminproc.pathsim import IncrementModel, SeedSpec
from argminproc.renewal_laws import (build_renewal_law, density_DG, mean_from_transform, phi_DG,
                                     phi_Delta, phi_J, phi_T1, transform_consistency,
                                     verify_identity)

from conftest import ACCEPTANCE_LINES


def report(n, ok, detail):
    line = f"CRITERION {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


# ---------------------------------------------------------------------------
# analytic
# ---------------------------------------------------------------------------

def test_criterion_01_kernel_mass():
    xs = np.linspace(0.0, 1.0, 20)
    ts = np.linspace(0.05, 1.5, 20)       # t <= x, x < t <= 1 and t > 1
    worst = max(abs(transition_kernel(x, t).total_mass() - 1.0) for x in xs for t in ts)
    report(1, worst < 1e-6, f"max |mass - 1| = {worst:.2e} on 20x20 (x,t) grid (tol 1e-6)")


def test_criterion_02_chapman_kolmogorov():
    d = [chapman_kolmogorov_defect(x, s, t)
         for x, s, t in ((0.5, 0.2, 0.3), (0.9, 0.5, 0.7), (0.2, 0.4, 0.4))]
    report(2, max(d) < 1e-4, "CK defects " + ", ".join(f"{v:.2e}" for v in d) + " (tol 1e-4)")


def test_criterion_03_stationarity_and_reversal():
    st = max(stationarity_defect(t, y) for t in (0.3, 0.7) for y in (0.2, 0.5, 0.9))
    rv = max(reversal_defect(x, y, t) for t in (0.2, 0.5, 0.8, 1.3)
             for x in (0.1, 0.35, 0.6, 0.95) for y in (0.15, 0.4, 0.7, 0.9))
    ra = max(reversal_atom_defect(x, t) for x, t in ((0.5, 0.25), (0.9, 0.3), (0.7, 0.65)))
    ok = st < 1e-5 and max(rv, ra) < 1e-10
    report(3, ok, f"stationarity {st:.2e} (tol 1e-5); reversal density {rv:.2e}, "
                  f"atom flow {ra:.2e} (tol 1e-10)")


def test_criterion_04_jump_rate_balance():
    d = max(jump_balance_defect(y) for y in np.arange(1, 10) / 10)
    report(4, d < 1e-12, f"max balance defect {d:.2e} over y=0.1..0.9 (tol 1e-12)")


def test_criterion_05_identities():
    lams = (0.5, 1.0, 2.0, 5.0, 10.0)
    d = {w: max(verify_identity(w, lam) for lam in lams) for w in ("sqrt_kernel", "dg_kernel")}
    report(5, max(d.values()) < 1e-9,
           f"identity defects {d['sqrt_kernel']:.2e} / {d['dg_kernel']:.2e} (tol 1e-9)")


def test_criterion_06_table_consistency():
    c = transform_consistency(np.logspace(-2, 2, 41))
    ok = c["delta_forms"] < 1e-10 and c["T1_product"] == 0.0 and c["stationary_delay"] < 1e-12
    report(6, ok, f"Delta forms {c['delta_forms']:.2e} (1e-10), T1 product {c['T1_product']:.1e} "
                  f"(exact), stationary delay {c['stationary_delay']:.2e} (1e-12)")


def test_criterion_07_moments_from_transforms():
    m = {"J": (mean_from_transform(phi_J), 1.0), "T1": (mean_from_transform(phi_T1), 3.0),
         "Delta": (mean_from_transform(phi_Delta), math.pi)}
    rel = {k: abs(v / t - 1.0) for k, (v, t) in m.items()}
    report(7, max(rel.values()) < 1e-2,
           ", ".join(f"E {k} = {v:.5f}" for k, (v, _) in m.items()) + " (rel tol 1e-2)")


def test_criterion_08_renewal_series():
    law = build_renewal_law(1.0, 1.0, 30.0, 1e-3)
    mass, mean = law.g.integral(), law.g.mean()
    c = 4.0
    big = build_renewal_law(c, c, 30.0 * c, 1e-3 * c)
    scale = float(np.max(np.abs(big.g.values - law.g.values / c)))
    ok = 0.995 <= mass <= 1.0 and abs(mean / math.pi - 1) < 0.01 and scale < 1e-12
    report(8, ok, f"int g = {mass:.6f} in [0.995,1], mean {mean:.5f} ({abs(mean / math.pi - 1):.2%} "
                  f"of pi), scaling c=4 defect {scale:.1e}")


def test_criterion_09_DG_law():
    mass = integrate(density_DG, 1.0, 2.0, 1e-10)
    mean = integrate(lambda t: t * density_DG(t), 1.0, 2.0, 1e-10)
    f = GridFunction.from_callable(density_DG, 1.0, 2.0, 1e-4)
    lap = abs(laplace_eval(f, 1.0, sqrt_edge=True) - phi_DG(1.0))
    ok = abs(mass - 1) < 1e-8 and abs(mean - (math.pi - 2)) < 1e-8 and lap < 1e-5
    report(9, ok, f"mass-1 {mass - 1:.1e}, mean-(pi-2) {mean - math.pi + 2:.1e} (1e-8); "
                  f"grid Laplace at 1 off by {lap:.1e} (1e-5)")


def test_criterion_10_discrete_chain():
    oracle_ok = True
    for N in range(1, 13):
        o = enumerate_ssrw_oracle(N)
        a = chain_law_ssrw(N, report=False)
        oracle_ok &= list(o.pi) == list(a.pi) and all(list(r) == list(s) for r, s in zip(o.P, a.P))
    worst = 0.0
    lemma = 0.0
    for theta in np.arange(1, 10) / 10:
        for N in range(1, 13):
            cf = chain_law_theta(theta, N)
            gen = chain_law(WalkLawInput.theta(theta, N + 1), N)
            worst = max(worst, np.max(np.abs(cf.P - gen.P)), np.max(np.abs(cf.pi - gen.pi)))
            lhs, rhs = theta_zero_to_N_identity(theta, N)
            lemma = max(lemma, abs(lhs - rhs))
    # SSRW: the from-zero and zero-to-N closed forms must hold exactly
    ssrw_exact = all(r["verdict"] == "agrees" for N in range(1, 13)
                     for r in compare_ssrw_closed_forms(N)
                     if r["family"] in ("from_zero", "zero_to_N"))
    verdicts = {}
    for N in range(1, 13):
        for r in compare_ssrw_closed_forms(N):
            if r["verdict"] == "disagrees":
                verdicts.setdefault(r["family"], []).append(N)
    expected = {"stationary_law", "jump_to_N", "step_down"}
    ok = oracle_ok and worst < 1e-12 and lemma < 1e-12 and ssrw_exact and set(verdicts) == expected
    print("  closed-form SSRW displays disagreeing with the enumeration oracle, by N: "
          + "; ".join(f"{k}: {v}" for k, v in sorted(verdicts.items())))
    report(10, ok, f"oracle == exact law for N<=12: {oracle_ok}; theta closed forms vs recursion "
                   f"{worst:.1e}, P(0,N) identity {lemma:.1e} (1e-12); SSRW from-zero forms exact: "
                   f"{ssrw_exact}; reported discrepancies: {sorted(verdicts)}")


def test_criterion_11_stable_reduction():
    pts = [(x, t, y) for x in (0.0, 0.2, 0.4, 0.7, 1.0) for t in (0.1, 0.3, 0.6, 1.0, 1.5)
           for y in (0.05, 0.3, 0.55, 0.8, 0.97)]
    red = max(abs(stable_kernel_density(0.5, x, t, y) - kernel_density(x, t, y)) for x, t, y in pts)
    mass = max(abs(stable_transition_kernel(StableParams(a, b), x, t).total_mass() - 1.0)
               for a, b in ((1.5, 0.5), (0.8, -0.3))
               for x, t in ((0.6, 0.4), (0.3, 0.6), (1.0, 0.5), (0.5, 1.3), (0.2, 0.2)))
    report(11, red < 1e-12 and mass < 1e-6,
           f"rho=1/2 vs Brownian kernel {red:.1e} (1e-12); stable mass defect {mass:.1e} (1e-6)")


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def default_runs():
    cfg = {"suite": "default", "seed": 42, "dt": 1e-3}
    return run_suite(cfg), run_suite(cfg)


def _checks(rep, key):
    e = rep.experiment(key)
    return {c.key: c.report for c in e.checks}


def _line(c, name):
    return f"{name} {c.value:.4g} (<= {c.threshold:.4g}, n={c.sample_size})"


@pytest.mark.slow
def test_criterion_12_stationary_marginal(default_runs):
    rep = default_runs[0]
    b = _checks(rep, "stationary_marginal")["arcsine_ks"]
    c = _checks(rep, "stationary_marginal_cauchy")["arcsine_ks"]
    report(12, b.passed and c.passed and b.sample_size >= 10 ** 5 and c.sample_size >= 10 ** 5,
           _line(b, "Brownian KS") + "; " + _line(c, "Cauchy KS"))


@pytest.mark.slow
def test_criterion_13_transition(default_runs):
    ch = _checks(default_runs[0], "transition_kernel")
    a, k = ch["atom"], ch["continuous_ks"]
    report(13, a.passed and k.passed and a.threshold == 0.01 and k.threshold == 0.02,
           _line(a, "|atom freq - sqrt(2/3)|") + "; " + _line(k, "continuous KS"))


@pytest.mark.slow
def test_criterion_14_gaps(default_runs):
    ch = _checks(default_runs[0], "renewal_gaps")
    keys = ("gap_mean", "gap_ks", "T1_mean")
    limits = {"gap_mean": 0.02, "gap_ks": 0.02, "T1_mean": 0.02}
    ok = all(ch[k].passed and ch[k].threshold == limits[k] for k in keys)
    report(14, ok, "; ".join(_line(ch[k], k) for k in keys))


@pytest.mark.slow
def test_criterion_15_identities_in_law(default_runs):
    ch = _checks(default_runs[0], "identities_in_law")
    ok = all(c.passed and c.threshold == 0.025 and c.sample_size >= 10 ** 4 for c in ch.values())
    report(15, ok, "; ".join(_line(c, k) for k, c in ch.items()))


@pytest.mark.slow
def test_criterion_16_decomposition(default_runs):
    ch = _checks(default_runs[0], "decomposition")
    limits = {"GT_mean": 0.03, "TD_mean": 0.03, "DG_mean": 0.03, "DG_ks": 0.02, "N_rate": 0.03,
              "H_mean": 0.05, "H_var": 0.05, "BT1_mean": 0.03, "BT1_var": 0.05}
    ok = all(ch[k].passed and ch[k].threshold == v for k, v in limits.items())
    report(16, ok, "; ".join(_line(ch[k], k) for k in limits))


@pytest.mark.slow
def test_criterion_17_chain_mc():
    emp = simulate_chain(IncrementModel.rademacher(), 4, 10 ** 7, SeedSpec(42))
    ex = chain_law_ssrw(4, report=False).as_float()
    tv = 0.5 * float(np.sum(np.abs(emp.pi - ex.pi)))
    ent = float(np.max(np.abs(emp.P - ex.P)))
    report(17, tv < 0.003 and ent < 0.005,
           f"SSRW N=4, 1e7 steps: TV(pi) {tv:.2e} (0.003), max |P - P_exact| {ent:.2e} (0.005)")


@pytest.mark.slow
def test_criterion_18_determinism(default_runs):
    a, b = (r.to_json().encode() for r in default_runs)
    report(18, a == b, f"two default-suite runs at seed 42: {len(a)} bytes, identical={a == b}")
