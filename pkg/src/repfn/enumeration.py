"""Brute-force ground truth for weighted representation counts.

Solutions to ``b_1 k_1 + ... + b_l k_l = n`` are returned as ``(r, l)`` int64
arrays in lexicographic order.  Everything here is meant for small ``n``;
the scalable counts live in :mod:`repfn.counting`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import BudgetExceeded, ConfigError
from .model import Equation, SolutionTuple

DEFAULT_BUDGET = 10**8


def member_array(set_filter, n: int) -> np.ndarray | None:
    """Membership of ``0..n`` as uint8, from a SampledSet or a boolean array."""
    if set_filter is None:
        return None
    mem = getattr(set_filter, "membership", set_filter)
    mem = np.asarray(mem)
    if len(mem) < n + 1:
        raise ConfigError(f"set filter covers [0, {len(mem) - 1}] but n = {n}")
    return np.ascontiguousarray(mem[: n + 1], dtype=np.uint8)


def visit_estimate(coeffs, n: int, caps=None) -> float:
    """Rough number of nodes the enumeration walk visits."""
    ell = len(coeffs)
    if ell == 1:
        return 1.0
    free = [n / b + 1 for b in coeffs[:-1]]
    simplex = math.prod(free) / math.factorial(ell - 1)
    if caps is not None:
        simplex = min(simplex, math.prod(c + 1 for c in caps[:-1]))
    return ell * simplex


def _check_budget(coeffs, n, caps, budget):
    est = visit_estimate(coeffs, n, caps)
    if est > budget:
        raise BudgetExceeded(
            f"enumerating {tuple(coeffs)} at n={n} needs ~{est:.3g} visits (budget {budget:.3g})"
        )


def enumerate_solutions(eq: Equation, n: int, set_filter=None, budget: float = DEFAULT_BUDGET) -> np.ndarray:
    """All ordered solutions with entries in the filter set, lexicographically sorted."""
    if n < 0:
        raise ConfigError("n must be nonnegative")
    _check_budget(eq.coeffs, n, None, budget)
    return kernels.enumerate_tuples(np.array(eq.coeffs, dtype=np.int64), n, member_array(set_filter, n))


def solution_tuples(eq: Equation, n: int, set_filter=None) -> list[SolutionTuple]:
    return [SolutionTuple(tuple(int(v) for v in row), n) for row in enumerate_solutions(eq, n, set_filter)]


# -- set partitions ---------------------------------------------------------


@dataclass(frozen=True)
class PartitionScheme:
    """A set partition of the variable indices (0-based) and its merged equation."""

    blocks: tuple[tuple[int, ...], ...]
    merged_coeffs: tuple[int, ...]
    mobius_weight: int

    @property
    def size(self) -> int:
        return len(self.blocks)

    def label(self) -> str:
        return "|".join("".join(str(i + 1) for i in b) for b in self.blocks)


def _rgs(ell: int):
    """Restricted growth strings of length ``ell``."""
    if ell == 0:
        yield ()
        return

    def rec(prefix, m):
        if len(prefix) == ell:
            yield tuple(prefix)
            return
        for v in range(m + 2):
            yield from rec(prefix + [v], max(m, v))

    yield from rec([0], 0)


def mobius_weight(block_sizes) -> int:
    """Moebius function from the discrete partition, ``prod (-1)^(s-1) (s-1)!``."""
    return math.prod((-1) ** (s - 1) * math.factorial(s - 1) for s in block_sizes)


@lru_cache(maxsize=None)
def set_partitions(ell: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """All set partitions of ``range(ell)``, finest first."""
    parts = []
    for s in _rgs(ell):
        blocks = tuple(tuple(i for i in range(ell) if s[i] == b) for b in range(max(s) + 1))
        parts.append(blocks)
    parts.sort(key=lambda bl: (-len(bl), bl))
    return tuple(parts)


def scheme(coeffs, blocks) -> PartitionScheme:
    merged = tuple(sum(coeffs[i] for i in b) for b in blocks)
    return PartitionScheme(tuple(blocks), merged, mobius_weight(len(b) for b in blocks))


def derived_equations(eq: Equation) -> list[PartitionScheme]:
    """Every set partition of the variables with merged coefficients (Bell(l) entries)."""
    return [scheme(eq.coeffs, blocks) for blocks in set_partitions(eq.length)]


def equality_patterns(T: np.ndarray) -> np.ndarray:
    """Restricted-growth label of each row's equality pattern."""
    r, ell = T.shape
    lab = np.zeros((r, ell), dtype=np.int64)
    nxt = np.ones(r, dtype=np.int64)
    for j in range(1, ell):
        assigned = np.zeros(r, dtype=bool)
        for i in range(j):
            hit = (~assigned) & (T[:, i] == T[:, j])
            lab[hit, j] = lab[hit, i]
            assigned |= hit
        lab[~assigned, j] = nxt[~assigned]
        nxt[~assigned] += 1
    return lab


def _blocks_of(rgs) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(i for i in range(len(rgs)) if rgs[i] == b) for b in range(max(rgs) + 1))


@dataclass
class Decomposition:
    r: int
    rho: dict[PartitionScheme, int]

    def total(self) -> int:
        return sum(self.rho.values())


def decompose_counts(eq: Equation, n: int, set_filter=None) -> Decomposition:
    """Split ``r(n)`` by the equality pattern of each solution.

    The count attached to a partition is the number of exact solutions of the
    merged equation, so ``r`` equals the sum over all partitions.
    """
    T = enumerate_solutions(eq, n, set_filter)
    rho = {s: 0 for s in derived_equations(eq)}
    if len(T):
        lab = equality_patterns(T)
        schemes = {s.blocks: s for s in rho}
        keys, counts = np.unique(lab, axis=0, return_counts=True)
        for key, cnt in zip(keys, counts):
            rho[schemes[_blocks_of(tuple(key))]] = int(cnt)
    return Decomposition(len(T), rho)


def count_exact(coeffs, n: int, set_filter=None) -> int:
    """Number of solutions with pairwise distinct entries."""
    T = kernels.enumerate_tuples(np.array(coeffs, dtype=np.int64), n, member_array(set_filter, n))
    if len(T) == 0:
        return 0
    return int(np.sum(equality_patterns(T).max(axis=1) == T.shape[1] - 1))


# -- small / normal split ----------------------------------------------------


def small_threshold(n: int, delta: float) -> int:
    """Least integer ``t`` such that ``k < max(n^delta, 1)`` iff ``k < t``."""
    x = max(float(n) ** delta, 1.0) if n > 0 else 1.0
    near = round(x)
    if abs(x - near) <= 1e-9 * x:
        return int(near)
    return int(math.ceil(x))


def split_delta(solutions: np.ndarray, n: int, delta: float) -> tuple[np.ndarray, np.ndarray]:
    if not 0 < delta < 1:
        raise ConfigError("delta must lie in (0, 1)")
    solutions = np.asarray(solutions, dtype=np.int64)
    if len(solutions) == 0:
        return solutions, solutions
    small = solutions.min(axis=1) < small_threshold(n, delta)
    return solutions[small], solutions[~small]


# -- disjoint families ---------------------------------------------------------


@dataclass
class DisjointFamily:
    members: np.ndarray

    def __len__(self) -> int:
        return len(self.members)

    def is_disjoint(self) -> bool:
        seen: set[int] = set()
        for row in self.members:
            vals = set(int(v) for v in row)
            if vals & seen:
                return False
            seen |= vals
        return True


def _greedy(solutions: np.ndarray) -> np.ndarray:
    used: set[int] = set()
    keep = []
    order = np.lexsort(solutions.T[::-1]) if len(solutions) else []
    for idx in order:
        vals = set(int(v) for v in solutions[idx])
        if not vals & used:
            used |= vals
            keep.append(idx)
    return solutions[np.array(keep, dtype=np.int64)]


def _maximum_pairs(solutions: np.ndarray) -> np.ndarray:
    """Maximum family for two-variable solutions.

    Solutions are edges of a graph on values; a value occurs at most once as
    k1 and once as k2, so after merging (a, b) with (b, a) every vertex has
    degree <= 2 and components are paths, cycles or isolated loops.  Taking
    alternate edges along each component is optimal.
    """
    edges: dict[frozenset, int] = {}
    for idx in np.lexsort(solutions.T[::-1]):
        key = frozenset(int(v) for v in solutions[idx])
        edges.setdefault(key, int(idx))
    loops = [i for key, i in edges.items() if len(key) == 1]
    adj: dict[int, list[frozenset]] = {}
    for key in edges:
        if len(key) == 2:
            for v in key:
                adj.setdefault(v, []).append(key)
    if any(len(a) > 2 for a in adj.values()):
        raise ConfigError("value graph has a vertex of degree > 2; not a two-variable family")
    chosen = list(loops)
    done: set[frozenset] = set()

    def walk(start):
        seq, v = [], start
        while True:
            nxt = [e for e in adj[v] if e not in done]
            if not nxt:
                return seq
            e = nxt[0]
            done.add(e)
            seq.append(e)
            (v,) = e - {v}

    for v in sorted(adj):
        if len(adj[v]) == 1 and adj[v][0] not in done:
            chosen += [edges[e] for e in walk(v)[::2]]
    for v in sorted(adj):
        if any(e not in done for e in adj[v]):
            cyc = walk(v)
            chosen += [edges[e] for e in cyc[: 2 * (len(cyc) // 2) : 2]]
    out = solutions[np.array(sorted(chosen), dtype=np.int64)]
    return out[np.lexsort(out.T[::-1])] if len(out) else out


def max_disjoint_family(solutions: np.ndarray, mode: str = "greedy") -> DisjointFamily:
    """A disjoint family of solutions.

    ``greedy`` scans solutions lexicographically and keeps each one disjoint
    from those already kept (a maximal family).  ``exact_h2`` returns a
    maximum family and requires two-variable solutions.
    """
    solutions = np.asarray(solutions, dtype=np.int64)
    if mode == "greedy":
        if len(solutions) == 0:
            return DisjointFamily(solutions)
        return DisjointFamily(_greedy(solutions))
    if mode == "exact_h2":
        if solutions.ndim != 2 or solutions.shape[1] != 2:
            raise ConfigError("exact_h2 mode needs solutions of length 2")
        if len(solutions) == 0:
            return DisjointFamily(solutions)
        return DisjointFamily(_maximum_pairs(solutions))
    raise ConfigError(f"unknown mode {mode!r}")


# -- dyadic boxes and sub-equations -------------------------------------------


def dyadic_box_count(eq: Equation, n: int, caps, budget: float = DEFAULT_BUDGET) -> int:
    """Number of solutions with ``k_j <= caps[j]`` for every j."""
    caps = [int(c) for c in caps]
    if len(caps) != eq.length or any(c < 1 for c in caps):
        raise ConfigError("need one cap >= 1 per variable")
    _check_budget(eq.coeffs, n, caps, budget)
    clipped = np.minimum(np.array(caps, dtype=np.int64), [n // b for b in eq.coeffs])
    return len(kernels.enumerate_tuples(np.array(eq.coeffs, dtype=np.int64), n, None, clipped))


def dyadic_bound(eq: Equation, n: int, caps) -> float:
    return eq.length * max(eq.coeffs) * math.prod(c + 1 for c in caps) / n


def _sub_counts(A, eq: Equation, sub_len: int, n: int) -> list[int]:
    mem = member_array(A, n)
    out = []
    for idx in itertools.combinations(range(eq.length), sub_len):
        coeffs = np.array([eq.coeffs[i] for i in idx], dtype=np.int64)
        out.append(len(kernels.enumerate_tuples(coeffs, n, mem)))
    return out


def r_star(A, eq: Equation, sub_len: int, n: int) -> int:
    """Largest count over all length-``sub_len`` sub-equations."""
    if not 2 <= sub_len <= eq.length:
        raise ConfigError("sub_len must lie in [2, l]")
    _check_budget(sorted(eq.coeffs)[:sub_len], n, None, DEFAULT_BUDGET)
    return max(_sub_counts(A, eq, sub_len, n))


def cover_bound(A, eq: Equation, n: int) -> tuple[int, int]:
    """``r(n)`` and ``l * l! * |M| * max_{k <= n} r*_{l-1}(k)`` for a greedy maxdisfam M.

    Every solution meets some member of a maximal family, which gives the
    first quantity <= the second.
    """
    ell = eq.length
    if ell < 2:
        raise ConfigError("need at least two variables")
    sols = enumerate_solutions(eq, n, A)
    fam = max_disjoint_family(sols, "greedy")
    top = max(max(_sub_counts(A, eq, ell - 1, k)) for k in range(n + 1))
    return len(sols), ell * math.factorial(ell) * len(fam) * top
