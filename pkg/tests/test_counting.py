import numpy as np
import pytest

import oracles
from repfn.counting import (
    conv_trunc,
    count_profile,
    derivative_expectation_bound,
    expected_delta_small,
    expected_profile,
    fund_lemma_constants,
    read_profile_csv,
)
from repfn.enumeration import enumerate_solutions, small_threshold
from repfn.errors import BudgetExceeded, ConfigError
from repfn.model import Equation, GrowthSpec, MeasureSpec


class ConstMeasure(MeasureSpec):
    """Product measure with ``p(k) = q`` for ``k >= 1``."""

    def __init__(self, q):
        super().__init__(GrowthSpec(2, 0.0), 1.0)
        object.__setattr__(self, "q", q)

    def probabilities(self, N):
        p = np.full(N + 1, self.q)
        p[0] = 1.0
        return p


def test_count_examples():
    full = np.ones(5, dtype=bool)
    assert count_profile(full, Equation((1, 1)), 4).counts[4] == 5
    A = np.array([1, 0, 1, 0, 0], dtype=bool)
    assert count_profile(A, Equation((1, 1)), 4).counts.tolist() == [1, 0, 2, 0, 1]
    odd = count_profile(np.ones(31, dtype=bool), Equation((2, 4)), 30).counts
    assert np.all(odd[1::2] == 0)


def test_count_matches_enumeration(rng):
    for _ in range(50):
        ell = int(rng.integers(2, 5))
        eq = Equation(tuple(int(b) for b in rng.integers(1, 5, ell)))
        N = 300 if ell < 4 else 120
        A = rng.random(N + 1) < rng.uniform(0.05, 0.5)
        A[0] = True
        counts = count_profile(A, eq, N).counts
        assert all(counts[n] == len(enumerate_solutions(eq, n, A)) for n in range(N + 1))


def test_fft_counts_match_naive(rng):
    A = rng.random(20001) < 0.2
    A[0] = True
    for coeffs in [(1, 1), (1, 2, 3)]:
        a = count_profile(A, Equation(coeffs), 20000, "fft").counts
        b = count_profile(A, Equation(coeffs), 20000, "naive").counts
        np.testing.assert_array_equal(a, b)


def test_fft_expectations_match_naive():
    m = MeasureSpec(GrowthSpec(2, 0.5, "log"), 0.4)
    a = expected_profile(m, Equation((1, 2, 2)), 6000, method="fft").values
    b = expected_profile(m, Equation((1, 2, 2)), 6000, method="naive").values
    np.testing.assert_allclose(a, b, rtol=1e-6)


def test_conv_trunc_rejects_method():
    with pytest.raises(ConfigError):
        conv_trunc(np.ones(3), np.ones(3), 3, "bogus")


def test_size_cap():
    with pytest.raises(BudgetExceeded):
        count_profile(None, Equation((1, 1)), 2**29)


def test_expectation_examples():
    full = MeasureSpec(GrowthSpec(2, 0.0), 1e12)
    np.testing.assert_allclose(expected_profile(full, Equation((1, 1)), 20).values, np.arange(21) + 1)
    half = ConstMeasure(0.5)
    assert expected_profile(half, Equation((1, 1)), 2).values[2] == pytest.approx(1.5)
    assert expected_profile(half, Equation((1, 1)), 2, "rho").values[2] == pytest.approx(1.0)
    small = expected_delta_small(half, Equation((1, 1)), 4, 0.5).values[4]
    assert small == pytest.approx(1.5)


@pytest.mark.parametrize("coeffs", [(1, 1), (1, 2), (2, 3), (1, 1, 1), (1, 2, 3), (2, 2, 4), (1, 1, 2, 3)])
def test_expectation_matches_direct_sum(coeffs):
    m = MeasureSpec(GrowthSpec(len(coeffs) if len(coeffs) > 1 else 2, 0.5, "log"), 0.6)
    N = {2: 300, 3: 120, 4: 40}[len(coeffs)]
    p = m.probabilities(N)
    E = expected_profile(m, Equation(coeffs), N).values
    R = expected_profile(m, Equation(coeffs), N, "rho").values
    S = expected_delta_small(m, Equation(coeffs), N, 0.6).values
    for n in list(range(0, N + 1, max(1, N // 25))) + [N]:
        # cancellation leaves ~1e-16 where the exact value is 0
        floor = 1e-12 * (1 + E[n])
        assert E[n] == pytest.approx(oracles.expectation(coeffs, n, p), rel=1e-9, abs=floor)
        assert R[n] == pytest.approx(oracles.expectation(coeffs, n, p, "rho"), rel=1e-9, abs=floor)
        t = small_threshold(n, 0.6)
        assert S[n] == pytest.approx(oracles.expectation(coeffs, n, p, "small", t), rel=1e-9, abs=floor)
    assert np.all(R <= E + 1e-12)
    assert np.all(S <= E + 1e-12)


def test_gcd_zeros():
    m = MeasureSpec(GrowthSpec(2, 1.0), 0.5)
    v = expected_profile(m, Equation((2, 4)), 50).values
    assert np.all(v[1::2] == 0)


def test_small_plus_normal_is_total(rng):
    for _ in range(20):
        q = float(rng.uniform(0.1, 0.9))
        d = float(rng.uniform(0.2, 0.9))
        eq = Equation(tuple(int(b) for b in rng.integers(1, 4, 2)))
        m = ConstMeasure(q)
        p = m.probabilities(60)
        S = expected_delta_small(m, eq, 60, d).values
        E = expected_profile(m, eq, 60).values
        for n in (10, 33, 60):
            t = small_threshold(n, d)
            normal = oracles.expectation(eq.coeffs, n, np.where(np.arange(61) >= t, p, 0.0))
            assert S[n] + normal == pytest.approx(E[n], rel=1e-9)


def test_small_ratio_decays():
    m = MeasureSpec(GrowthSpec(2, 1.0), 0.4)
    eq = Equation((1, 2))
    S = expected_delta_small(m, eq, 20000, 0.8).values
    f = m.growth.f(np.array([1000.0, 20000.0]))
    ratio = S[[1000, 20000]] / (f**2 / np.array([1000.0, 20000.0]))
    assert ratio[1] < ratio[0]


def test_derivative_bound():
    eq = Equation((1, 1))
    assert derivative_expectation_bound(ConstMeasure(0.3), eq, 10, 1) == pytest.approx(0.3)
    assert derivative_expectation_bound(ConstMeasure(0.3), Equation((1, 2, 3)), 30, 2) <= 1.0
    with pytest.raises(ConfigError):
        derivative_expectation_bound(ConstMeasure(0.3), eq, 10, 2)


def test_fund_lemma_constants_stable():
    m = MeasureSpec(GrowthSpec(2, 0.5, "log"), 0.5)
    eq = Equation((1, 2))
    k = [fund_lemma_constants(m, eq, N) for N in (2000, 4000, 8000)]
    for (a1, a2), (b1, b2) in zip(k, k[1:]):
        assert 0.5 <= b1 / a1 <= 2 and 0.5 <= b2 / a2 <= 2


def test_profile_csv_roundtrip():
    m = MeasureSpec(GrowthSpec(2, 0.5), 0.4)
    prof = expected_profile(m, Equation((1, 2)), 30)
    head, vals = read_profile_csv(prof.to_csv())
    assert head["kind"] == "r" and head["eq"] == "1,2"
    np.testing.assert_array_equal(vals, prof.values)
    cp = count_profile(np.ones(11, dtype=bool), Equation((1, 1)), 10)
    head, vals = read_profile_csv(cp.to_csv())
    np.testing.assert_array_equal(vals, cp.counts)
