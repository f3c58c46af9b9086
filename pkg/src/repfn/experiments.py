"""Monte Carlo harnesses and deterministic checks at desk scale.

Trials run on a thread pool whose size comes from ``REPFN_THREADS`` (or the
``threads`` argument).  Every trial is keyed by ``(master_seed, trial)`` and
results are gathered in trial order with integer accumulators, so reports
do not depend on the number of workers.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .asymptotics import expected_r_closed_form
from .counting import count_profile, expected_profile
from .enumeration import (
    decompose_counts,
    enumerate_solutions,
    equality_patterns,
    max_disjoint_family,
)
from .errors import BudgetExceeded, ConfigError
from .model import Equation, MeasureSpec, check_delta
from .sampler import SampledSet, sample_set


def worker_count(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("REPFN_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def _map_trials(fn, trials: int, threads: int | None):
    workers = worker_count(threads)
    if workers == 1 or trials == 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, range(trials)))


@dataclass
class ExperimentConfig:
    measure: MeasureSpec
    eq: Equation
    N: int
    trials: int
    master_seed: int
    delta: float | None = None
    checkpoints: list[int] = field(default_factory=list)
    epsilon: float | None = None

    def __post_init__(self):
        self.N = int(self.N)
        self.trials = int(self.trials)
        self.master_seed = int(self.master_seed)
        self.checkpoints = sorted(int(n) for n in self.checkpoints)
        self.validate()

    def validate(self):
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.N < 2:
            raise ConfigError("N must be at least 2")
        bad = [n for n in self.checkpoints if not 2 <= n <= self.N]
        if bad:
            raise ConfigError(f"checkpoints {bad} outside [2, {self.N}]")
        if self.delta is not None:
            check_delta(self.measure.growth, self.delta)

    def to_dict(self) -> dict:
        return {
            "measure": self.measure.to_dict(),
            "eq": list(self.eq.coeffs),
            "N": self.N,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "delta": self.delta,
            "checkpoints": list(self.checkpoints),
            "epsilon": self.epsilon,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(
            MeasureSpec.from_dict(d["measure"]),
            Equation(tuple(d["eq"])),
            d["N"],
            d["trials"],
            d["master_seed"],
            d.get("delta"),
            list(d.get("checkpoints") or []),
            d.get("epsilon"),
        )


def default_checkpoints(lo: int, hi: int, num: int = 20) -> list[int]:
    return sorted(set(np.linspace(lo, hi, num).round().astype(int).tolist()))


# -- concentration ------------------------------------------------------------


@dataclass
class ConcentrationReport:
    config: ExperimentConfig
    checkpoints: list[int]
    mean: np.ndarray
    sd: np.ndarray
    expected: np.ndarray
    closed: np.ndarray
    max_rel_dev: np.ndarray
    sandwich_violations: np.ndarray
    greedy_sandwich_violations: np.ndarray
    decomposition_failures: np.ndarray

    @property
    def within_3se(self) -> np.ndarray:
        se = self.sd / math.sqrt(self.config.trials)
        return np.abs(self.mean - self.expected) <= 3 * se + 1e-12 * np.abs(self.expected)

    def assertions(self) -> dict[str, bool]:
        ok = self.within_3se
        out = {
            "mean_within_3se_rate": bool(ok.mean() >= 0.95) if len(ok) else True,
            "decomposition_identity": bool(self.decomposition_failures.sum() == 0),
        }
        if self.config.eq.length == 2:
            out["sandwich_maximum"] = bool(self.sandwich_violations.sum() == 0)
        return out

    def rows(self) -> list[dict]:
        ok = self.within_3se
        return [
            {
                "n": n,
                "mean": float(self.mean[i]),
                "sd": float(self.sd[i]),
                "expected": float(self.expected[i]),
                "closed_form": float(self.closed[i]),
                "max_rel_dev": float(self.max_rel_dev[i]),
                "within_3se": bool(ok[i]),
                "sandwich_violations": int(self.sandwich_violations[i]),
                "greedy_sandwich_violations": int(self.greedy_sandwich_violations[i]),
                "decomposition_failures": int(self.decomposition_failures[i]),
            }
            for i, n in enumerate(self.checkpoints)
        ]


def _sandwich(sols: np.ndarray, r: int) -> tuple[bool, bool]:
    """Whether ``rhat <= r <= 2 rhat`` holds for the maximum and the greedy family."""
    exact = len(max_disjoint_family(sols, "exact_h2"))
    greedy = len(max_disjoint_family(sols, "greedy"))
    return exact <= r <= 2 * exact, greedy <= r <= 2 * greedy


def run_concentration(cfg: ExperimentConfig, threads: int | None = None) -> ConcentrationReport:
    g = cfg.measure.growth
    if g.kappa == 0 and g.phi_kind in ("constant", "plain_log"):
        warnings.warn("F does not dominate log; concentration is not expected", RuntimeWarning)
    eq, N = cfg.eq, cfg.N
    cps = cfg.checkpoints or default_checkpoints(max(2, N // 10), N)
    E = expected_profile(cfg.measure, eq, N).values[cps]
    try:
        cf = expected_r_closed_form(cfg.measure, eq).evaluate(cps)
    except ConfigError:
        cf = np.full(len(cps), np.nan)

    def trial(t):
        A = sample_set(cfg.measure, N, cfg.master_seed, t)
        counts = count_profile(A, eq, N).counts[cps]
        sw, gw, dec = [], [], []
        for n, r in zip(cps, counts.tolist()):
            d = decompose_counts(eq, n, A)
            dec.append(d.r != r or d.total() != r)
            if eq.length == 2:
                s_ok, g_ok = _sandwich(enumerate_solutions(eq, n, A), r)
                sw.append(not s_ok)
                gw.append(not g_ok)
        return counts, sw, gw, dec

    results = _map_trials(trial, cfg.trials, threads)
    k = len(cps)
    s1 = np.zeros(k, dtype=object)
    s2 = np.zeros(k, dtype=object)
    dev = np.zeros(k)
    sw = np.zeros(k, dtype=np.int64)
    gw = np.zeros(k, dtype=np.int64)
    dec = np.zeros(k, dtype=np.int64)
    for counts, a, b, c in results:
        ints = [int(x) for x in counts]
        s1 += np.array(ints, dtype=object)
        s2 += np.array([x * x for x in ints], dtype=object)
        with np.errstate(divide="ignore", invalid="ignore"):
            dev = np.maximum(dev, np.where(E > 0, np.abs(counts - E) / E, 0.0))
        if a:
            sw += np.array(a, dtype=np.int64)
            gw += np.array(b, dtype=np.int64)
        dec += np.array(c, dtype=np.int64)
    T = cfg.trials
    mean = np.array([float(x) / T for x in s1])
    if T > 1:
        var = np.array([float(q * T - s * s) / (T * (T - 1)) for s, q in zip(s1, s2)])
    else:
        var = np.zeros(k)
    return ConcentrationReport(cfg, list(cps), mean, np.sqrt(var), E, cf, dev, sw, gw, dec)


# -- zero density ----------------------------------------------------------------


def product_lower_bound(measure: MeasureSpec, eq: Equation, n: int, budget: float = 1e7) -> float:
    """``prod (1 - Pr(R))`` over the distinct value sets of solutions of ``n`` over ℕ.

    Solution events are increasing, so by Harris' inequality this bounds
    ``Pr(r(n) = 0)`` from below.
    """
    sols = enumerate_solutions(eq, n, budget=budget)
    p = measure.probabilities(n)
    seen = set()
    logs = []
    for row in sols:
        key = frozenset(int(v) for v in row)
        if key in seen:
            continue
        seen.add(key)
        pr = math.prod(p[v] for v in key)
        if pr >= 1.0:
            return 0.0
        logs.append(math.log1p(-pr))
    return math.exp(math.fsum(logs))


@dataclass
class ZeroDensityReport:
    config: ExperimentConfig
    windows: list[tuple[int, int]]
    window_zero_counts: np.ndarray  # (trials, windows)
    trial_totals: np.ndarray
    checkpoints: list[int]
    zero_frequency: np.ndarray
    lower_bound: np.ndarray
    expected: np.ndarray
    target: np.ndarray
    expected_over_log_N: float

    def window_hit_rate(self) -> np.ndarray:
        return (self.window_zero_counts > 0).mean(axis=0)

    def bound_ok(self) -> np.ndarray:
        T = self.config.trials
        b = self.lower_bound
        slack = 2 * np.sqrt(np.clip(b * (1 - b), 0, None) / T)
        return np.where(np.isnan(b), True, self.zero_frequency >= b - slack - 1e-12)

    def assertions(self, max_window: int = 16, rate: float = 0.8) -> dict[str, bool]:
        hits = self.window_hit_rate()
        sel = [i for i, (j, _) in enumerate(self._window_ids()) if j <= max_window]
        return {
            "zero_in_every_window": bool(np.all(hits[sel] >= rate)),
            "expected_over_log_in_band": bool(0.6 <= self.expected_over_log_N <= 0.8),
            "product_lower_bound": bool(np.all(self.bound_ok())),
        }

    def _window_ids(self):
        return [(int(round(math.log2(a))), a) for a, _ in self.windows]

    def rows(self) -> list[dict]:
        return [
            {
                "n": n,
                "zero_frequency": float(self.zero_frequency[i]),
                "lower_bound": float(self.lower_bound[i]),
                "bound_ok": bool(self.bound_ok()[i]),
                "expected": float(self.expected[i]),
                "target": float(self.target[i]),
            }
            for i, n in enumerate(self.checkpoints)
        ]

    def window_rows(self) -> list[dict]:
        hits = self.window_hit_rate()
        tot = self.window_zero_counts.sum(axis=0)
        return [
            {"j": j, "start": a, "end": b, "total_zeros": int(tot[i]), "hit_rate": float(hits[i])}
            for i, ((j, _), (a, b)) in enumerate(zip(self._window_ids(), self.windows))
        ]


def dyadic_windows(N: int) -> list[tuple[int, int]]:
    """Half-open windows ``[2^j, 2^(j+1))`` clipped to ``[1, N]``."""
    out, a = [], 1
    while a <= N:
        out.append((a, min(2 * a, N + 1)))
        a *= 2
    return out


def run_zero_density(cfg: ExperimentConfig, threads: int | None = None, bound_max: int = 2000) -> ZeroDensityReport:
    eq, N = cfg.eq, cfg.N
    g = cfg.measure.growth
    if not (g.kappa == 0 and g.phi_kind == "plain_log"):
        warnings.warn("zero-density runs expect f = (x log x)^(1/h)", RuntimeWarning)
    cps = cfg.checkpoints or [n for n in (2, 3, 4, 6, 8, 12, 16, 24, 32, 50, 64, 100, 128, 200, 256, 500, 512, 1000, 1024, 2000) if n <= N]
    wins = dyadic_windows(N)
    divisible = np.arange(N + 1) % eq.gcd == 0

    def trial(t):
        counts = count_profile(sample_set(cfg.measure, N, cfg.master_seed, t), eq, N).counts
        zero = (counts == 0) & divisible
        per_win = [int(zero[a:b].sum()) for a, b in wins]
        return per_win, zero[cps]

    results = _map_trials(trial, cfg.trials, threads)
    W = np.array([r[0] for r in results], dtype=np.int64).reshape(cfg.trials, len(wins))
    Z = np.array([r[1] for r in results], dtype=bool).reshape(cfg.trials, len(cps))
    E_all = expected_profile(cfg.measure, eq, N).values
    E = E_all[cps]
    eps = cfg.epsilon if cfg.epsilon is not None else float("nan")
    target = (1 - eps) * np.log(np.asarray(cps, dtype=float))
    lb = np.array([product_lower_bound(cfg.measure, eq, n) if n <= bound_max else np.nan for n in cps])
    return ZeroDensityReport(
        cfg, wins, W, W.sum(axis=1), list(cps), Z.mean(axis=0), lb, E, target, float(E_all[N] / math.log(N))
    )


# -- correlations and tails --------------------------------------------------------

_DELTA_LIMITS = {2: 5000, 3: 300}


def solution_events(sols: np.ndarray) -> np.ndarray:
    """One representative row per distinct value set, in first-seen order.

    The event of a solution is that its value set lies in ``A``; reordered
    tuples such as ``(a, b)`` and ``(b, a)`` give the same event.
    """
    seen, keep = set(), []
    for i, row in enumerate(sols):
        key = frozenset(int(v) for v in row)
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return sols[np.array(keep, dtype=np.int64)] if len(sols) else sols


def delta_correlation(measure: MeasureSpec, eq: Equation, n: int, m: int, enforce_limits: bool = True) -> float:
    """``Delta(n, m)`` over ordered pairs of distinct intersecting solution events.

    Solutions of ``n`` and of ``m`` are first reduced to distinct value sets.
    Within each list every ordered pair ``R != S`` that intersects counts;
    intersecting cross pairs are counted once and doubled.  ``Pr(R and S)``
    is the product of ``p`` over the union of the two value sets.
    """
    if not 0 <= n < m:
        raise ConfigError("need 0 <= n < m")
    h = eq.length
    if enforce_limits:
        lim = _DELTA_LIMITS.get(h)
        if lim is None or m > lim:
            raise BudgetExceeded(f"Delta for l={h} is limited to n, m <= {lim}")
    p = measure.probabilities(m)
    Sn = solution_events(enumerate_solutions(eq, n))
    Sm = solution_events(enumerate_solutions(eq, m))
    wn, cross, wm = kernels.delta_sums(Sn, Sm, p)
    return wn + 2 * cross + wm


def delta_oracle(measure: MeasureSpec, eq: Equation, n: int, m: int) -> float:
    """All-pairs evaluation of :func:`delta_correlation` on value sets."""
    p = measure.probabilities(m)

    def events(k):
        out = []
        for row in enumerate_solutions(eq, k).tolist():
            s = frozenset(row)
            if s not in out:
                out.append(s)
        return out

    Sn, Sm = events(n), events(m)

    def pr(R, S):
        return math.prod(p[v] for v in R | S)

    def within(S):
        return [pr(R, Q) for i, R in enumerate(S) for j, Q in enumerate(S) if i != j and R & Q]

    cross = [pr(R, Q) for R in Sn for Q in Sm if R & Q]
    return math.fsum(within(Sn)) + 2 * math.fsum(cross) + math.fsum(within(Sm))


@dataclass(frozen=True)
class TailBound:
    expectation: float
    k: int
    factorial_form: float
    exponential_form: float


def tail_bound_from_expectation(E: float, k: int) -> TailBound:
    if k < 1:
        raise ConfigError("k must be at least 1")
    fact = math.exp(k * math.log(E) - math.lgamma(k + 1)) if E > 0 else 0.0
    expo = (math.e * E / k) ** k
    return TailBound(E, k, fact, expo)


def tail_probability_bound(measure: MeasureSpec, eq: Equation, n: int, k: int) -> TailBound:
    """Bounds on ``Pr(some disjoint family of k exact solutions lies in A)``.

    ``E^k/k!`` with ``E`` the expected number of exact solutions, and the
    weaker ``(e E / k)^k``.
    """
    E = float(expected_profile(measure, eq, n, "rho").values[n])
    return tail_bound_from_expectation(E, k)


def exact_disjoint_family_size(A: SampledSet, eq: Equation, n: int) -> int:
    """Maximum number of pairwise disjoint exact solutions of ``n`` in ``A`` (two variables)."""
    sols = enumerate_solutions(eq, n, A)
    if len(sols):
        sols = sols[equality_patterns(sols).max(axis=1) == sols.shape[1] - 1]
    return len(max_disjoint_family(sols, "exact_h2"))


# -- Raikov-Stohr -----------------------------------------------------------------


def stohr_parts(K: int) -> tuple[np.ndarray, np.ndarray]:
    """Membership of ``[0, 4^K)`` in sums of odd / even powers of two."""
    x = np.arange(4**K, dtype=np.int64)
    odd_mask = sum(1 << (2 * i + 1) for i in range(K))
    even_mask = sum(1 << (2 * i) for i in range(K))
    return (x & ~odd_mask) == 0, (x & ~even_mask) == 0


def stohr_targets(K: int) -> list[int]:
    """``n_k = 2 (4^k - 1)/3``, binary ``1010...10``."""
    return [2 * (4**k - 1) // 3 for k in range(1, K + 1)]


@dataclass
class StohrReport:
    K: int
    targets: list[int]
    ordered: list[int]
    unordered: list[int]
    distinct: list[int]
    required: list[int]
    C: float
    covers: bool

    def assertions(self, C_max: float = 8.0) -> dict[str, bool]:
        return {
            "representations": all(u >= q for u, q in zip(self.unordered, self.required)),
            "strict_pairs": all(d >= q for d, q in zip(self.distinct, self.required)),
            "counting_constant": self.C <= C_max,
            "basis": self.covers,
        }

    def rows(self) -> list[dict]:
        return [
            {"k": k + 1, "n": n, "ordered": o, "unordered": u, "distinct": d, "required": q}
            for k, (n, o, u, d, q) in enumerate(zip(self.targets, self.ordered, self.unordered, self.distinct, self.required))
        ]


def raikov_stohr_check(K: int) -> StohrReport:
    """Check the thin basis built from binary digits at odd and even positions."""
    if not 1 <= K <= 12:
        raise ConfigError("K must lie in [1, 12]")
    s1, s2 = stohr_parts(K)
    mem = s1 | s2
    M = 4**K - 1
    counts = count_profile(mem, Equation((1, 1)), M).counts
    covers = bool(np.all(counts > 0))
    x = np.arange(1, M + 1)
    C = float(np.max(np.cumsum(mem[1:]) / np.sqrt(x)))
    targets = stohr_targets(K)
    ordered, unordered, distinct = [], [], []
    for n in targets:
        r = int(counts[n])
        half = int(n % 2 == 0 and mem[n // 2])
        ordered.append(r)
        unordered.append((r + half) // 2)
        distinct.append((r - half) // 2)
    return StohrReport(K, targets, ordered, unordered, distinct, [2 ** (k - 1) for k in range(1, K + 1)], C, covers)
