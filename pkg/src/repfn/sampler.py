"""Reproducible random sets under the product measure.

Index ``k`` of trial ``t`` under master seed ``s`` uses the ``k``-th 64-bit
word of a Philox4x64 stream keyed by ``(s, t)``, so any index range can be
generated on its own (by advancing the counter) and the result does not
depend on how the range is split across workers.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, ConfigError, OutOfRange
from .model import MeasureSpec

MAX_N = 2**28
CHUNK = 1 << 20
_MASK64 = (1 << 64) - 1


def _generator(master_seed: int, trial_index: int) -> np.random.Philox:
    key = np.array([int(master_seed) & _MASK64, int(trial_index) & _MASK64], dtype=np.uint64)
    return np.random.Philox(key=key)


def uniforms(master_seed: int, trial_index: int, start: int, stop: int) -> np.ndarray:
    """Uniforms in ``[0, 1)`` for indices ``start <= k < stop``."""
    bg = _generator(master_seed, trial_index)
    # each counter step yields four words
    bg.advance(start // 4)
    skip = start % 4
    raw = bg.random_raw(stop - start + skip)[skip:]
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True)
class SampledSet:
    """A draw of the random set restricted to ``[0, N]``."""

    N: int
    membership: np.ndarray = field(repr=False)
    seed: int
    trial_index: int
    measure: MeasureSpec | None = None

    def __post_init__(self):
        mem = np.asarray(self.membership, dtype=bool)
        if len(mem) != self.N + 1:
            raise ConfigError("membership must cover [0, N]")
        mem.setflags(write=False)
        object.__setattr__(self, "membership", mem)

    @classmethod
    def from_elements(cls, elements, N: int, seed: int = 0, trial_index: int = 0) -> "SampledSet":
        mem = np.zeros(N + 1, dtype=bool)
        mem[0] = True
        mem[[k for k in elements if 0 <= k <= N]] = True
        return cls(N, mem, seed, trial_index)

    def elements(self) -> np.ndarray:
        return np.nonzero(self.membership)[0]

    def __contains__(self, k) -> bool:
        return 0 <= k <= self.N and bool(self.membership[k])

    def packed(self) -> bytes:
        return np.packbits(self.membership).tobytes()

    def intervals(self) -> list[tuple[int, int]]:
        """Maximal runs of members as inclusive ``(start, end)`` pairs."""
        m = np.concatenate([[False], self.membership, [False]]).astype(np.int8)
        d = np.diff(m)
        starts = np.nonzero(d == 1)[0]
        ends = np.nonzero(d == -1)[0] - 1
        return list(zip(starts.tolist(), ends.tolist()))

    def to_rle(self) -> str:
        buf = io.StringIO()
        buf.write(f"# N={self.N}\n# seed={self.seed}\n# trial={self.trial_index}\n")
        for a, b in self.intervals():
            buf.write(f"{a} {b}\n")
        return buf.getvalue()

    @classmethod
    def from_rle(cls, text: str, measure: MeasureSpec | None = None) -> "SampledSet":
        head, runs = {}, []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                head[key] = int(val)
            else:
                a, b = line.split()
                runs.append((int(a), int(b)))
        if "N" not in head:
            raise ConfigError("run-length file lacks an N header")
        N = head["N"]
        mem = np.zeros(N + 1, dtype=bool)
        for a, b in runs:
            if not 0 <= a <= b <= N:
                raise ConfigError(f"interval {a} {b} outside [0, {N}]")
            mem[a : b + 1] = True
        return cls(N, mem, head.get("seed", 0), head.get("trial", 0), measure)


def sample_set(measure: MeasureSpec, N: int, master_seed: int, trial_index: int, workers: int = 1) -> SampledSet:
    """Draw ``A ∩ [0, N]``; ``k`` is a member iff its uniform is below ``p(k)``."""
    if N < 1:
        raise ConfigError("N must be at least 1")
    if N > MAX_N:
        raise BudgetExceeded(f"N={N} exceeds the sampling cap {MAX_N}")
    p = measure.probabilities(N)
    mem = np.empty(N + 1, dtype=bool)
    bounds = [(a, min(a + CHUNK, N + 1)) for a in range(0, N + 1, CHUNK)]

    def fill(ab):
        a, b = ab
        mem[a:b] = uniforms(master_seed, trial_index, a, b) < p[a:b]

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(fill, bounds))
    else:
        for ab in bounds:
            fill(ab)
    mem[0] = True
    return SampledSet(N, mem, int(master_seed), int(trial_index), measure)


def counting_function(A: SampledSet, x: int) -> int:
    """``|A ∩ [1, x]|``."""
    if x > A.N:
        raise OutOfRange(f"x={x} beyond the sampled range [0, {A.N}]")
    if x < 1:
        return 0
    return int(np.count_nonzero(A.membership[1 : x + 1]))


def counting_law(measure: MeasureSpec, x) -> np.ndarray:
    """``c h/(1+kappa) x^((1+kappa)/h) phi(x)^(1/h)``."""
    g = measure.growth
    x = np.asarray(x, dtype=float)
    return measure.c * g.h / (1 + g.kappa) * x**g.index * g.phi(x) ** (1.0 / g.h)


@dataclass
class CountingLawReport:
    xs: np.ndarray
    mean: np.ndarray
    expected: np.ndarray
    law: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        return self.mean / self.law

    def rows(self):
        return [
            {"x": int(x), "empirical_mean": float(m), "expected": float(e), "law": float(l), "ratio": float(m / l)}
            for x, m, e, l in zip(self.xs, self.mean, self.expected, self.law)
        ]


def counting_law_report(measure: MeasureSpec, N: int, trials: int, master_seed: int, points: int = 13) -> CountingLawReport:
    """Mean of ``|A ∩ [1, x]|`` over trials against the integrated law."""
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    xs = np.unique(np.round(np.logspace(1, np.log10(N), points)).astype(np.int64))
    tot = np.zeros(len(xs), dtype=np.int64)
    for t in range(trials):
        csum = np.cumsum(sample_set(measure, N, master_seed, t).membership[1:])
        tot += csum[xs - 1]
    expected = np.cumsum(measure.probabilities(N)[1:])[xs - 1]
    return CountingLawReport(xs, tot / trials, expected, counting_law(measure, xs))
