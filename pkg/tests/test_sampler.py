import numpy as np
import pytest

import repfn.sampler as sampler
from repfn.errors import ConfigError, OutOfRange
from repfn.model import GrowthSpec, MeasureSpec
from repfn.sampler import (
    SampledSet,
    counting_function,
    counting_law,
    counting_law_report,
    sample_set,
    uniforms,
)

M1 = MeasureSpec(GrowthSpec(2, 1.0), 0.3)


def test_determinism():
    a = sample_set(M1, 5000, 42, 3)
    b = sample_set(M1, 5000, 42, 3)
    assert a.packed() == b.packed()
    assert a.packed() != sample_set(M1, 5000, 42, 4).packed()
    assert a.packed() != sample_set(M1, 5000, 43, 3).packed()
    assert a.membership[0]


def test_chunking_and_threads_do_not_matter(monkeypatch):
    ref = sample_set(M1, 10007, 9, 1).packed()
    monkeypatch.setattr(sampler, "CHUNK", 333)
    assert sample_set(M1, 10007, 9, 1).packed() == ref
    assert sample_set(M1, 10007, 9, 1, workers=4).packed() == ref


def test_uniform_offsets():
    whole = uniforms(1, 2, 0, 50)
    for a in (0, 1, 3, 4, 17):
        np.testing.assert_array_equal(uniforms(1, 2, a, 50), whole[a:])
    assert np.all((whole >= 0) & (whole < 1))


def test_full_set():
    A = sample_set(MeasureSpec(GrowthSpec(2, 0.0), 1e9), 100, 0, 0)
    assert A.membership.all()
    assert counting_function(A, 37) == 37


def test_counting_function():
    A = SampledSet.from_elements([0, 2], 4)
    assert counting_function(A, 4) == 1
    assert counting_function(A, 0) == 0
    with pytest.raises(OutOfRange):
        counting_function(A, 5)


def test_bad_N():
    with pytest.raises(ConfigError):
        sample_set(M1, 0, 1, 1)


def test_rle_roundtrip():
    A = sample_set(M1, 3000, 5, 0)
    B = SampledSet.from_rle(A.to_rle())
    assert B.packed() == A.packed() and (B.seed, B.trial_index) == (5, 0)
    with pytest.raises(ConfigError):
        SampledSet.from_rle("# N=3\n2 9\n")


def test_density_pilot():
    # kappa=1, h=2: p = c on [1, N]
    hits = 0
    for t in range(100):
        A = sample_set(M1, 10**6, 2024, t)
        hits += 0.29 <= counting_function(A, 10**6) / 10**6 <= 0.31
    assert hits >= 95


def test_inclusion_frequencies(rng):
    m = MeasureSpec(GrowthSpec(2, 0.5, "log"), 0.5)
    N, T = 2000, 10**4
    freq = np.zeros(N + 1)
    for t in range(T):
        freq += sample_set(m, N, 77, t).membership
    freq /= T
    p = m.probabilities(N)
    ks = rng.choice(np.arange(1, N + 1), 100, replace=False)
    se = np.sqrt(p[ks] * (1 - p[ks]) / T)
    assert np.all(np.abs(freq[ks] - p[ks]) <= 5 * se + 1e-12)


def test_law_formulas():
    m = MeasureSpec(GrowthSpec(2, 1.0), 0.3)
    assert counting_law(m, 100.0) == pytest.approx(30.0)
    m0 = MeasureSpec(GrowthSpec(2, 0.0), 0.3)
    assert counting_law(m0, 100.0) == pytest.approx(2 * 0.3 * 10)


@pytest.mark.parametrize("kappa", [0.0, 0.5, 1.0])
def test_counting_law(kappa):
    rep = counting_law_report(MeasureSpec(GrowthSpec(2, kappa), 0.3), 10**6, 20, 11)
    assert 0.9 <= rep.ratio[-1] <= 1.1
    if kappa == 1.0:
        assert abs(rep.ratio[-1] - 1) <= 0.05
