import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from repfn.enumeration import (
    count_exact,
    cover_bound,
    decompose_counts,
    derived_equations,
    dyadic_bound,
    dyadic_box_count,
    enumerate_solutions,
    max_disjoint_family,
    r_star,
    set_partitions,
    small_threshold,
    split_delta,
)
from repfn.errors import BudgetExceeded, ConfigError
from repfn.model import Equation

BELL = [1, 1, 2, 5, 15, 52, 203]


def test_examples():
    assert enumerate_solutions(Equation((1, 2)), 5).tolist() == [[1, 2], [3, 1], [5, 0]]
    assert len(enumerate_solutions(Equation((2, 4)), 5)) == 0
    assert len(enumerate_solutions(Equation((1, 1, 1)), 3)) == 10


def test_set_filter():
    A = np.zeros(5, dtype=bool)
    A[[0, 2]] = True
    assert enumerate_solutions(Equation((1, 1)), 4, A).tolist() == [[2, 2]]
    with pytest.raises(ConfigError):
        enumerate_solutions(Equation((1, 1)), 9, A)


def test_budget():
    with pytest.raises(BudgetExceeded):
        enumerate_solutions(Equation((1, 1, 1, 1, 1)), 10**4)


@pytest.mark.parametrize("ell", range(1, 7))
def test_partition_counts(ell):
    parts = set_partitions(ell)
    assert len(parts) == BELL[ell]
    assert len(parts[0]) == ell  # finest first
    assert sum(s.mobius_weight for s in derived_equations(Equation((1,) * ell))) == (1 if ell <= 1 else 0)


def test_decomposition_example():
    d = decompose_counts(Equation((1, 1)), 4)
    assert d.r == 5
    by_label = {s.label(): v for s, v in d.rho.items()}
    assert by_label == {"1|2": 4, "12": 1}


@given(st.lists(st.integers(1, 3), min_size=2, max_size=4), st.integers(0, 30), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_decomposition_identity(coeffs, n, seed):
    eq = Equation(coeffs)
    A = np.random.default_rng(seed).random(n + 1) < 0.7
    A[0] = True
    d = decompose_counts(eq, n, A)
    assert d.r == d.total()
    # each pattern count equals the exact count of its merged equation
    for s, cnt in d.rho.items():
        assert cnt == count_exact(s.merged_coeffs, n, A)


def test_split_delta_example():
    T = enumerate_solutions(Equation((1, 1)), 4)
    small, normal = split_delta(T, 4, 0.5)
    assert small.tolist() == [[0, 4], [1, 3], [3, 1], [4, 0]]
    assert normal.tolist() == [[2, 2]]
    with pytest.raises(ConfigError):
        split_delta(T, 4, 1.0)


def test_small_threshold_guard():
    assert small_threshold(4, 0.5) == 2
    assert small_threshold(1000, 1 / 3) == 10
    assert small_threshold(10, 0.5) == 4
    assert small_threshold(0, 0.5) == 1


def test_greedy_family_example():
    fam = max_disjoint_family(enumerate_solutions(Equation((1, 1)), 4))
    assert len(fam) == 3 and fam.is_disjoint()


def _nx_maximum(sols):
    G = nx.Graph()
    loops = 0
    for a, b in {frozenset(map(int, s)) and tuple(sorted(map(int, s))) for s in sols}:
        if a == b:
            loops += 1
        else:
            G.add_edge(a, b)
    return loops + len(nx.max_weight_matching(G, maxcardinality=True))


@given(st.sampled_from([(1, 1), (1, 2), (2, 3), (1, 3), (3, 3)]), st.integers(1, 120), st.integers(0, 2**31))
@settings(max_examples=80, deadline=None)
def test_exact_h2_is_maximum(coeffs, n, seed):
    A = np.random.default_rng(seed).random(n + 1) < 0.5
    A[0] = True
    sols = enumerate_solutions(Equation(coeffs), n, A)
    fam = max_disjoint_family(sols, "exact_h2")
    assert fam.is_disjoint()
    assert len(fam) == _nx_maximum(sols)
    greedy = max_disjoint_family(sols)
    assert greedy.is_disjoint() and len(greedy) <= len(fam)


def test_exact_family_brute_force():
    sols = enumerate_solutions(Equation((1, 2)), 16)
    assert len(max_disjoint_family(sols, "exact_h2")) == oracles.maximum_disjoint(sols.tolist())


@pytest.mark.parametrize("seed", range(40))
def test_sandwich_for_maximum_family(seed):
    rng = np.random.default_rng(seed)
    coeffs = [(1, 1), (1, 2), (2, 3), (1, 4)][seed % 4]
    n = int(rng.integers(2, 200))
    A = rng.random(n + 1) < rng.uniform(0.2, 0.9)
    A[0] = True
    sols = enumerate_solutions(Equation(coeffs), n, A)
    k = len(max_disjoint_family(sols, "exact_h2"))
    assert k <= len(sols) <= 2 * k


def test_greedy_family_can_break_sandwich():
    # b=(1,2), n=4 over ℕ: (0,2),(2,1),(4,0); greedy keeps only (0,2)
    sols = enumerate_solutions(Equation((1, 2)), 4)
    assert len(max_disjoint_family(sols)) == 1
    assert len(max_disjoint_family(sols, "exact_h2")) == 2


def test_exact_h2_needs_pairs():
    with pytest.raises(ConfigError):
        max_disjoint_family(enumerate_solutions(Equation((1, 1, 1)), 3), "exact_h2")


def test_dyadic_example():
    assert dyadic_box_count(Equation((1, 1)), 100, (63, 63)) == 27


def test_dyadic_bound_random(rng):
    for _ in range(200):
        ell = int(rng.integers(2, 4))
        eq = Equation(tuple(int(b) for b in rng.integers(1, 5, ell)))
        n = int(rng.integers(1, 150))
        caps = [int(c) for c in rng.integers(1, 200, ell)]
        assert dyadic_box_count(eq, n, caps) <= dyadic_bound(eq, n, caps)


def test_r_star():
    assert r_star(None, Equation((1, 1, 2)), 2, 4) == 5
    with pytest.raises(ConfigError):
        r_star(None, Equation((1, 1)), 1, 4)


def test_cover_bound(rng):
    for _ in range(10):
        eq = Equation(tuple(int(b) for b in rng.integers(1, 4, 3)))
        n = int(rng.integers(5, 40))
        A = rng.random(n + 1) < 0.6
        A[0] = True
        r, bound = cover_bound(A, eq, n)
        assert r <= bound
        assert r == len(oracles.solutions(eq.coeffs, n, A))


def test_merged_coefficient_sums():
    eq = Equation((1, 2, 3))
    for s in derived_equations(eq):
        assert sum(s.merged_coeffs) == 6
        assert s.mobius_weight == math.prod((-1) ** (len(b) - 1) * math.factorial(len(b) - 1) for b in s.blocks)
