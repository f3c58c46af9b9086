import itertools
import math

import numpy as np
import pytest

import oracles
from repfn.asymptotics import mt1_constant, mt3_measure
from repfn.counting import expected_profile
from repfn.errors import BudgetExceeded, ConfigError
from repfn.experiments import (
    ExperimentConfig,
    default_checkpoints,
    delta_correlation,
    delta_oracle,
    dyadic_windows,
    exact_disjoint_family_size,
    product_lower_bound,
    raikov_stohr_check,
    run_concentration,
    run_zero_density,
    stohr_parts,
    tail_bound_from_expectation,
    tail_probability_bound,
    worker_count,
)
from repfn.model import Equation, GrowthSpec, MeasureSpec
from repfn.sampler import sample_set

G = GrowthSpec(2, 0.5)
EQ = Equation((1, 2))


def small_cfg(**kw):
    base = dict(measure=MeasureSpec(G, mt1_constant(G, EQ)), eq=EQ, N=2000, trials=30, master_seed=5, checkpoints=[500, 1000, 2000])
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ConfigError):
        small_cfg(trials=0)
    with pytest.raises(ConfigError):
        small_cfg(checkpoints=[1])
    with pytest.raises(ConfigError):
        small_cfg(checkpoints=[3000])
    with pytest.raises(ConfigError):
        small_cfg(delta=0.5)
    small_cfg(delta=0.9)
    cfg = small_cfg()
    assert ExperimentConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


def test_worker_count(monkeypatch):
    monkeypatch.setenv("REPFN_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(1) == 1


def test_concentration_trivial():
    cfg = ExperimentConfig(MeasureSpec(GrowthSpec(2, 0.5), 1e9), Equation((1, 1)), 10, 1, 0, checkpoints=[4])
    rep = run_concentration(cfg)
    assert rep.mean[0] == 5 and rep.sd[0] == 0 and rep.expected[0] == pytest.approx(5)
    assert all(rep.assertions().values())


def test_concentration_small_and_thread_independent():
    a = run_concentration(small_cfg(), threads=1)
    b = run_concentration(small_cfg(), threads=3)
    assert a.rows() == b.rows()
    assert a.sandwich_violations.sum() == 0
    assert a.decomposition_failures.sum() == 0
    assert all(a.assertions().values())


def test_regime_warning():
    cfg = small_cfg(measure=MeasureSpec(GrowthSpec(2, 0.0), 0.5))
    with pytest.warns(RuntimeWarning):
        run_concentration(cfg)


def test_default_checkpoints():
    cps = default_checkpoints(1000, 10**4)
    assert len(cps) == 20 and cps[0] == 1000 and cps[-1] == 10**4


def test_dyadic_windows():
    assert dyadic_windows(10) == [(1, 2), (2, 4), (4, 8), (8, 11)]


def _exact_zero_probability(eq, n, p):
    """Pr(r(n) = 0) by summing over all subsets of [1, n]."""
    tot = 0.0
    sols = [frozenset(t) - {0} for t in oracles.solutions(eq.coeffs, n)]
    for bits in itertools.product((0, 1), repeat=n):
        A = {k + 1 for k, b in enumerate(bits) if b}
        if any(s <= A for s in sols):
            continue
        tot += math.prod(p[k + 1] if b else 1 - p[k + 1] for k, b in enumerate(bits))
    return tot


@pytest.mark.parametrize("coeffs", [(1, 1), (1, 2)])
def test_product_bound_below_exact(coeffs):
    eq = Equation(coeffs)
    m = mt3_measure(0.3, 2, eq)
    for n in range(2, 13):
        p = m.probabilities(n)
        assert product_lower_bound(m, eq, n) <= _exact_zero_probability(eq, n, p) + 1e-12


def test_product_bound_zero_when_certain():
    m = MeasureSpec(GrowthSpec(2, 0.5), 1e9)
    assert product_lower_bound(m, Equation((1, 1)), 6) == 0.0


def test_zero_density_small():
    eq = Equation((1, 1))
    cfg = ExperimentConfig(mt3_measure(0.3, 2, eq), eq, 4096, 20, 3, epsilon=0.3, checkpoints=[2, 10, 100, 1000])
    a = run_zero_density(cfg, threads=1)
    b = run_zero_density(cfg, threads=4)
    assert a.rows() == b.rows() and a.window_rows() == b.window_rows()
    assert np.all(a.window_zero_counts >= 0)
    assert np.all((a.lower_bound >= 0) & (a.lower_bound <= 1))
    # p(1) = 0 under f = (x log x)^(1/2), so r(1) = 0 always
    assert a.window_rows()[0]["hit_rate"] == 1.0


@pytest.mark.parametrize("coeffs,n,m", [((1, 1), 8, 13), ((1, 2), 9, 14), ((1, 1, 1), 6, 9), ((1, 2, 2), 7, 10)])
def test_delta_matches_oracles(coeffs, n, m):
    eq = Equation(coeffs)
    meas = mt3_measure(0.3, len(coeffs), eq)
    p = meas.probabilities(m)
    d = delta_correlation(meas, eq, n, m)
    assert d == pytest.approx(oracles.delta(coeffs, n, m, p), rel=1e-12)
    assert d == pytest.approx(delta_oracle(meas, eq, n, m), rel=1e-12)


def test_delta_constant_probability():
    class Const(MeasureSpec):
        def probabilities(self, N):
            p = np.full(N + 1, 0.35)
            p[0] = 1.0
            return p

    m = Const(GrowthSpec(2, 0.0), 1.0)
    eq = Equation((1, 1))
    assert delta_correlation(m, eq, 40, 75) == pytest.approx(oracles.delta((1, 1), 40, 75, m.probabilities(75)), abs=1e-12)


def test_delta_disjoint_supports():
    m = MeasureSpec(GrowthSpec(2, 0.5), 0.5)
    assert delta_correlation(m, Equation((2, 3)), 1, 8) == 0.0


def test_delta_limits():
    eq = Equation((1, 1))
    m = mt3_measure(0.3, 2, eq)
    with pytest.raises(BudgetExceeded):
        delta_correlation(m, eq, 100, 6000)
    with pytest.raises(ConfigError):
        delta_correlation(m, eq, 10, 10)


def test_delta_decays():
    eq = Equation((1, 1))
    m = mt3_measure(0.3, 2, eq)
    vals = [delta_correlation(m, eq, n, 2 * n) for n in (200, 400, 800, 1600)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_tail_bound_arithmetic():
    assert tail_bound_from_expectation(2.0, 1).factorial_form == pytest.approx(2.0)
    assert tail_bound_from_expectation(2.0, 4).factorial_form == pytest.approx(16 / 24)
    tb = tail_bound_from_expectation(3.0, 7)
    assert tb.factorial_form <= tb.exponential_form


def test_tail_bound_monte_carlo():
    eq = Equation((1, 1))
    m = mt3_measure(0.3, 2, eq)
    n = 1000
    E = float(expected_profile(m, eq, n, "rho").values[n])
    k = math.ceil(E) + 3
    tb = tail_probability_bound(m, eq, n, k)
    assert tb.expectation == pytest.approx(E)
    hits = sum(exact_disjoint_family_size(sample_set(m, n, 99, t), eq, n) >= k for t in range(100))
    assert hits / 100 <= tb.factorial_form


def test_stohr_parts():
    s1, s2 = stohr_parts(2)
    assert np.nonzero(s1)[0].tolist() == [0, 2, 8, 10]
    assert np.nonzero(s2)[0].tolist() == [0, 1, 4, 5]


def test_stohr_small():
    rep = raikov_stohr_check(4)
    assert rep.targets == [2, 10, 42, 170]
    assert rep.unordered[:3] == [2, 3, 5]
    assert all(rep.assertions().values())
    with pytest.raises(ConfigError):
        raikov_stohr_check(13)
