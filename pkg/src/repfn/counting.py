"""Count and expectation profiles for all targets ``n <= N`` at once.

A count profile is the ``l``-fold product of dilated indicator series
``g_i(x) = sum_{k in A} x^(b_i k)``.  Expectations use the equality-pattern
decomposition: a tuple whose entries coincide on the blocks of a partition
has probability ``prod_B p(k_B)`` (indicators are idempotent), and the sum
over tuples with pairwise distinct block values is obtained from
unrestricted sums by Moebius inversion on the partition lattice.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .enumeration import member_array, scheme, set_partitions, small_threshold
from .errors import BudgetExceeded, ConfigError
from .model import Equation, MeasureSpec

NAIVE_MAX = 4096
MAX_N = 2**28
_EXACT_FLOAT = 2.0**52


def _check_size(N: int):
    if N < 0:
        raise ConfigError("N must be nonnegative")
    if N > MAX_N:
        raise BudgetExceeded(f"N={N} exceeds the profile cap {MAX_N}")


def _fft_conv(a: np.ndarray, b: np.ndarray, size: int) -> np.ndarray:
    m = len(a) + len(b) - 1
    nfft = 1 << (m - 1).bit_length()
    fa = np.fft.rfft(a, nfft)
    fb = np.fft.rfft(b, nfft)
    return np.fft.irfft(fa * fb, nfft)[:size]


def conv_trunc(a: np.ndarray, b: np.ndarray, size: int, method: str = "auto") -> np.ndarray:
    """First ``size`` coefficients of the product of two series."""
    a, b = a[:size], b[:size]
    if method == "auto":
        method = "naive" if size < NAIVE_MAX else "fft"
    if method == "naive":
        return np.convolve(a, b)[:size]
    if method != "fft":
        raise ConfigError(f"unknown convolution method {method!r}")
    is_int = np.issubdtype(a.dtype, np.integer) and np.issubdtype(b.dtype, np.integer)
    if is_int:
        if float(a.sum()) * float(b.sum()) >= _EXACT_FLOAT:
            return np.convolve(a, b)[:size]
        c = _fft_conv(a.astype(float), b.astype(float), size)
        out = np.rint(c)
        if len(c) and np.max(np.abs(c - out)) >= 0.25:
            return np.convolve(a, b)[:size]
        return out.astype(np.int64)
    c = _fft_conv(a, b, size)
    head = min(size, NAIVE_MAX)
    c[:head] = np.convolve(a[:head], b[:head])[:head]
    return c


def dilate(w: np.ndarray, b: int, size: int) -> np.ndarray:
    """Series with ``w[k]`` placed at exponent ``b k``."""
    out = np.zeros(size, dtype=w.dtype)
    m = (size - 1) // b + 1
    out[: b * m : b] = w[:m]
    return out


def fold(series: list[np.ndarray], size: int, method: str = "auto") -> np.ndarray:
    acc = series[0][:size]
    for s in series[1:]:
        acc = conv_trunc(acc, s, size, method)
    return acc


class _Neumaier:
    """Compensated elementwise accumulation of float arrays."""

    def __init__(self, size: int):
        self.s = np.zeros(size)
        self.c = np.zeros(size)

    def add(self, x: np.ndarray):
        t = self.s + x
        big = np.abs(self.s) >= np.abs(x)
        self.c += np.where(big, (self.s - t) + x, (x - t) + self.s)
        self.s = t

    def value(self) -> np.ndarray:
        return self.s + self.c


# -- profiles -------------------------------------------------------------------


@dataclass
class CountProfile:
    eq: Equation
    N: int
    counts: np.ndarray

    def to_csv(self) -> str:
        return _csv({"eq": str(self.eq), "kind": "count", "N": self.N}, self.counts)


@dataclass
class ExpectationProfile:
    eq: Equation
    measure: MeasureSpec
    N: int
    values: np.ndarray
    kind: str = "r"
    delta: float | None = None
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        head = {"eq": str(self.eq), "measure": self.measure.to_dict(), "kind": self.kind, "N": self.N}
        if self.delta is not None:
            head["delta"] = self.delta
        return _csv(head, self.values)


def _csv(header: dict, values: np.ndarray) -> str:
    buf = io.StringIO()
    for key, val in header.items():
        buf.write(f"# {key}={json.dumps(val, sort_keys=True) if isinstance(val, dict) else val}\n")
    buf.write("n,value\n")
    ints = np.issubdtype(values.dtype, np.integer)
    for n, v in enumerate(values.tolist()):
        buf.write(f"{n},{v}\n" if ints else f"{n},{v!r}\n")
    return buf.getvalue()


def read_profile_csv(text: str) -> tuple[dict, np.ndarray]:
    header, vals = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            header[key] = val
        elif line and not line.startswith("n,"):
            vals.append(line.split(",", 1)[1])
    if header.get("kind") == "count":
        return header, np.array([int(v) for v in vals], dtype=np.int64)
    return header, np.array([float(v) for v in vals])


def count_profile(A, eq: Equation, N: int, method: str = "auto") -> CountProfile:
    """``r_{A,l}(n)`` for every ``0 <= n <= N``."""
    _check_size(N)
    mem = member_array(A, N).astype(np.int64)
    series = [dilate(mem, b, N + 1) for b in eq.coeffs]
    return CountProfile(eq, N, fold(series, N + 1, method).astype(np.int64))


class _ExpectationEngine:
    """Caches unrestricted and distinct-value sums for one weight array."""

    def __init__(self, p: np.ndarray, size: int, method: str = "auto"):
        self.p = p
        self.size = size
        self.method = method
        self._powers: dict[int, np.ndarray] = {1: p}
        self._plain: dict[tuple, np.ndarray] = {}
        self._rho: dict[tuple, np.ndarray] = {}

    def _power(self, m: int) -> np.ndarray:
        if m not in self._powers:
            self._powers[m] = self.p**m
        return self._powers[m]

    def plain(self, terms: tuple) -> np.ndarray:
        """Sum over all tuples of ``prod_j p(v_j)^e_j`` for terms ``(c_j, e_j)``."""
        key = tuple(sorted(terms))
        if key not in self._plain:
            series = [dilate(self._power(e), c, self.size) for c, e in key]
            self._plain[key] = fold(series, self.size, self.method)
        return self._plain[key]

    def rho(self, coeffs: tuple) -> np.ndarray:
        """Expected number of solutions with pairwise distinct entries."""
        key = tuple(sorted(coeffs))
        if key not in self._rho:
            acc = _Neumaier(self.size)
            for blocks in set_partitions(len(key)):
                s = scheme(key, blocks)
                terms = tuple(zip(s.merged_coeffs, (len(b) for b in blocks)))
                acc.add(s.mobius_weight * self.plain(terms))
            self._rho[key] = np.maximum(acc.value(), 0.0)
        return self._rho[key]

    def r(self, coeffs: tuple) -> np.ndarray:
        acc = _Neumaier(self.size)
        for blocks in set_partitions(len(coeffs)):
            acc.add(self.rho(scheme(coeffs, blocks).merged_coeffs))
        return acc.value()


def _gcd_mask(values: np.ndarray, eq: Equation) -> np.ndarray:
    g = eq.gcd
    if g > 1:
        keep = np.arange(len(values)) % g == 0
        values = np.where(keep, values, 0.0)
    return values


def expected_profile(measure: MeasureSpec, eq: Equation, N: int, kind: str = "r", method: str = "auto") -> ExpectationProfile:
    """Exact ``E r(n)`` (``kind='r'``) or ``E rho(n)`` (``kind='rho'``) for ``n <= N``."""
    _check_size(N)
    if kind not in ("r", "rho"):
        raise ConfigError(f"kind must be 'r' or 'rho', got {kind!r}")
    eng = _ExpectationEngine(measure.probabilities(N), N + 1, method)
    vals = eng.r(eq.coeffs) if kind == "r" else eng.rho(eq.coeffs)
    return ExpectationProfile(eq, measure, N, _gcd_mask(vals, eq), kind)


def expected_normal_part(p: np.ndarray, eq: Equation, size: int, threshold: int, method="auto") -> np.ndarray:
    """Expected count of solutions with every entry ``>= threshold``."""
    q = p[:size].copy()
    q[: min(threshold, size)] = 0.0
    return _ExpectationEngine(q, size, method).r(eq.coeffs)


def expected_delta_small(measure: MeasureSpec, eq: Equation, N: int, delta: float, method: str = "auto") -> ExpectationProfile:
    """Exact expected count of solutions with some entry below ``n^delta``.

    Targets sharing a threshold are computed together from the full
    expectation minus the expectation with weights zeroed below the
    threshold.
    """
    if not 0 < delta < 1:
        raise ConfigError("delta must lie in (0, 1)")
    _check_size(N)
    p = measure.probabilities(N)
    total = _ExpectationEngine(p, N + 1, method).r(eq.coeffs)
    thr = np.array([small_threshold(n, delta) for n in range(N + 1)])
    vals = np.zeros(N + 1)
    for t in np.unique(thr):
        idx = np.nonzero(thr == t)[0]
        size = int(idx[-1]) + 1
        normal = expected_normal_part(p, eq, size, int(t), method)
        vals[idx] = total[idx] - normal[idx]
    vals = np.maximum(vals, 0.0)
    return ExpectationProfile(eq, measure, N, _gcd_mask(vals, eq), "delta_small", delta)


def derivative_expectation_bound(measure: MeasureSpec, eq: Equation, n: int, j: int) -> float:
    """``max`` over length-``(l-j)`` sub-equations and ``1 <= m < n`` of ``E r_sub(m)``.

    Upper bound for the expected ``j``-th partial derivatives of ``r(n)``
    viewed as a polynomial in the indicators.
    """
    import itertools

    ell = eq.length
    if not 1 <= j <= ell - 1:
        raise ConfigError("j must lie in [1, l-1]")
    if n < 2:
        return 0.0
    p = measure.probabilities(n)
    eng = _ExpectationEngine(p, n)
    best = 0.0
    for idx in itertools.combinations(range(ell), ell - j):
        sub = tuple(eq.coeffs[i] for i in idx)
        vals = eng.r(sub)
        best = max(best, float(vals[1:n].max()))
    return best


def fund_lemma_constants(measure: MeasureSpec, eq: Equation, N: int) -> tuple[float, float]:
    """Smallest ``K1, K2`` with ``min(cf,n)^l/n <= K1 E r`` and ``E r <= K2 c^l f^l/n``.

    Only targets in the upper half ``[N/2, N]`` divisible by the gcd are used.
    """
    E = expected_profile(measure, eq, N).values
    n = np.arange(N // 2, N + 1)
    n = n[(n % eq.gcd == 0) & (n >= 1)]
    f = measure.growth.f(n.astype(float))
    ell, c = eq.length, measure.c
    lower = np.minimum(c * f, n) ** ell / n
    upper = c**ell * f**ell / n
    return float(np.max(lower / E[n])), float(np.max(E[n] / upper))
