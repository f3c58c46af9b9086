"""Domain types: linear equations, growth functions and the random-set measure.

A :class:`GrowthSpec` describes the target growth ``F(x) = x**kappa * phi(x)``
of the representation function together with the derived counting-function
scale ``f(x) = (x F(x))**(1/h)``.  A :class:`MeasureSpec` turns it into the
product measure on subsets of the nonnegative integers that always contains
0 and contains ``k >= 1`` with probability ``min(c f(k)/k, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import ConfigError

DEFAULT_MAX_LEN = 6

#: Slowly varying factors understood by :class:`GrowthSpec`.
#: ``plain_log`` is ``log x`` itself; it vanishes at 1 and is only meant for
#: the zero-density measure, everything else is positive on ``[1, oo)``.
PHI_KINDS = ("constant", "log", "exp_sqrt_log", "plain_log", "table")


@dataclass(frozen=True)
class Equation:
    """Coefficients ``(b_1, ..., b_l)`` of ``b_1 k_1 + ... + b_l k_l = n``."""

    coeffs: tuple[int, ...]
    max_len: int = DEFAULT_MAX_LEN

    def __post_init__(self):
        coeffs = tuple(int(b) for b in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if not coeffs:
            raise ConfigError("an equation needs at least one coefficient")
        if any(b < 1 for b in coeffs):
            raise ConfigError(f"coefficients must be positive integers, got {coeffs}")
        if len(coeffs) > self.max_len:
            raise ConfigError(
                f"equation length {len(coeffs)} exceeds the maximum {self.max_len}"
            )

    @classmethod
    def parse(cls, text: str, max_len: int = DEFAULT_MAX_LEN) -> "Equation":
        try:
            coeffs = tuple(int(tok) for tok in text.replace(" ", "").split(",") if tok)
        except ValueError as exc:
            raise ConfigError(f"cannot parse coefficients {text!r}") from exc
        return cls(coeffs, max_len)

    @property
    def length(self) -> int:
        return len(self.coeffs)

    @property
    def gcd(self) -> int:
        return reduce(math.gcd, self.coeffs)

    @property
    def product(self) -> int:
        return math.prod(self.coeffs)

    def divides(self, n: int) -> bool:
        return n % self.gcd == 0

    def __len__(self) -> int:
        return len(self.coeffs)

    def __str__(self) -> str:
        return ",".join(map(str, self.coeffs))


@dataclass(frozen=True)
class SolutionTuple:
    values: tuple[int, ...]
    target: int

    def is_exact(self) -> bool:
        return len(set(self.values)) == len(self.values)

    def check(self, eq: Equation) -> bool:
        return sum(b * k for b, k in zip(eq.coeffs, self.values)) == self.target


def _phi_table(points: Sequence[tuple[float, float]]) -> Callable[[np.ndarray], np.ndarray]:
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    order = np.argsort(xs)
    lx, ly = np.log(xs[order]), ys[order]

    def phi(x):
        return np.interp(np.log(np.maximum(x, 1e-300)), lx, ly)

    return phi


@dataclass(frozen=True)
class GrowthSpec:
    """Target growth ``F(x) = x**kappa * phi(x)`` for ``h``-fold representations."""

    h: int
    kappa: float
    phi_kind: str = "constant"
    table: tuple[tuple[float, float], ...] | None = None
    _phi: Callable = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if int(self.h) != self.h or self.h < 2:
            raise ConfigError(f"h must be an integer >= 2, got {self.h}")
        object.__setattr__(self, "h", int(self.h))
        object.__setattr__(self, "kappa", float(self.kappa))
        if not 0.0 <= self.kappa <= self.h - 1:
            raise ConfigError(f"kappa must lie in [0, h-1] = [0, {self.h - 1}], got {self.kappa}")
        if self.phi_kind not in PHI_KINDS:
            raise ConfigError(f"unknown phi kind {self.phi_kind!r}; choose from {PHI_KINDS}")
        if self.phi_kind == "table":
            if not self.table or len(self.table) < 2:
                raise ConfigError("a table phi needs at least two (x, phi) points")
            pts = tuple((float(x), float(y)) for x, y in self.table)
            if any(not (x > 0 and math.isfinite(x)) for x, _ in pts):
                raise ConfigError("table abscissae must be positive and finite")
            if any(not (y > 0 and math.isfinite(y)) for _, y in pts):
                raise ConfigError("table values must be positive and finite")
            object.__setattr__(self, "table", pts)
            phi = _phi_table(pts)
        elif self.table is not None:
            raise ConfigError("table given for a non-table phi kind")
        elif self.phi_kind == "constant":
            phi = np.ones_like
        elif self.phi_kind == "log":
            phi = lambda x: np.log(np.e + x)  # noqa: E731
        elif self.phi_kind == "exp_sqrt_log":
            phi = lambda x: np.exp(np.sqrt(np.log(np.e + x)))  # noqa: E731
        else:
            phi = lambda x: np.log(np.maximum(x, 1.0))  # noqa: E731
        object.__setattr__(self, "_phi", phi)

    def phi(self, x):
        return self._phi(np.asarray(x, dtype=float))

    def F(self, x):
        x = np.asarray(x, dtype=float)
        return x**self.kappa * self.phi(x)

    def f(self, x):
        """Counting-function scale ``(x F(x))**(1/h)``."""
        x = np.asarray(x, dtype=float)
        return (x * self.F(x)) ** (1.0 / self.h)

    @property
    def index(self) -> float:
        """Regular-variation index ``(1 + kappa)/h`` of ``f``."""
        return (1.0 + self.kappa) / self.h

    def to_dict(self) -> dict:
        d = {"h": self.h, "kappa": self.kappa, "phi": self.phi_kind}
        if self.table is not None:
            d["table"] = [list(p) for p in self.table]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GrowthSpec":
        table = d.get("table")
        return cls(
            int(d["h"]),
            float(d["kappa"]),
            d.get("phi", "constant"),
            tuple(tuple(p) for p in table) if table else None,
        )


@dataclass(frozen=True)
class MeasureSpec:
    """Product measure with ``P(0 in A) = 1`` and ``P(k in A) = min(c f(k)/k, 1)``."""

    growth: GrowthSpec
    c: float

    def __post_init__(self):
        object.__setattr__(self, "c", float(self.c))
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ConfigError(f"c must be a positive finite real, got {self.c}")

    @property
    def h(self) -> int:
        return self.growth.h

    def probabilities(self, N: int) -> np.ndarray:
        """Inclusion probabilities for ``k = 0, ..., N``."""
        k = np.arange(N + 1, dtype=float)
        p = np.empty(N + 1)
        p[0] = 1.0
        if N >= 1:
            p[1:] = np.minimum(self.c * self.growth.f(k[1:]) / k[1:], 1.0)
        return p

    def to_dict(self) -> dict:
        return {"growth": self.growth.to_dict(), "c": self.c}

    @classmethod
    def from_dict(cls, d: dict) -> "MeasureSpec":
        return cls(GrowthSpec.from_dict(d["growth"]), float(d["c"]))


def probability(m: MeasureSpec, k: int) -> float:
    if k < 0:
        raise ConfigError("k must be nonnegative")
    if k == 0:
        return 1.0
    return float(min(m.c * float(m.growth.f(k)) / k, 1.0))


@dataclass
class OrpiReport:
    xs: np.ndarray
    ratios: np.ndarray
    median: float
    band_ok: bool
    settle_ratio: float
    passed: bool

    def rows(self):
        return list(zip(self.xs.tolist(), self.ratios.tolist()))


def _as_callable(f) -> Callable:
    if isinstance(f, GrowthSpec):
        return f.f
    if isinstance(f, MeasureSpec):
        return f.growth.f
    return f


def log_integral(f, xs: np.ndarray) -> np.ndarray:
    """``int_1^x f(t)/t dt`` at increasing points ``xs >= 1`` (substituting t = e^u)."""
    fn = _as_callable(f)
    g = lambda u: float(fn(math.exp(u)))  # noqa: E731
    out = np.empty(len(xs))
    acc, prev = 0.0, 0.0
    for i, x in enumerate(xs):
        u = math.log(x)
        piece, _ = integrate.quad(g, prev, u, epsrel=1e-9, epsabs=0.0, limit=200)
        acc += piece
        out[i] = acc
        prev = u
    return out


def validate_orpi(f, N: int, num: int = 49) -> OrpiReport:
    """Numerically test ``int_1^x f(t)/t dt  ≍  f(x)``.

    ``f`` may be a callable, a GrowthSpec or a MeasureSpec.  The ratio of the
    integral to ``f`` is tabulated at logarithmically spaced points.  The
    check passes when on ``[sqrt(N), N]`` the ratio stays within a factor 4 of
    its median and is settling: its increase over ``[N^(3/4), N]`` is at most
    3/4 of its increase over ``[N^(1/2), N^(3/4)]``.  A ratio growing like a
    power of ``log x`` (``f = log``) increases by equal amounts over those two
    stretches and fails.
    """
    if N < 100:
        raise ConfigError("validate_orpi needs N >= 100")
    fn = _as_callable(f)
    exps = np.linspace(0.0, 1.0, num)
    xs = np.unique(np.concatenate([N**exps, [N**0.5, N**0.75, float(N)]]))
    xs = xs[xs >= 2.0]
    fx = np.asarray(fn(xs), dtype=float)
    if np.any(~np.isfinite(fx)) or np.any(fx <= 0):
        raise ConfigError("f must be positive and finite on [2, N]")
    ratios = log_integral(fn, xs) / fx
    top = xs >= N**0.5 * (1 - 1e-12)
    med = float(np.median(ratios[top]))
    band_ok = bool(np.all(ratios[top] <= 4 * med) and np.all(ratios[top] >= med / 4))
    r_half, r_34, r_one = np.interp(np.log([N**0.5, N**0.75, N]), np.log(xs), ratios)
    d1, d2 = abs(r_34 - r_half), abs(r_one - r_34)
    settle = 0.0 if d1 <= 1e-9 * abs(r_one) else d2 / d1
    return OrpiReport(xs, ratios, med, band_ok, float(settle), band_ok and settle <= 0.75)


def potter_theta(growth: GrowthSpec) -> float:
    """Exponent ``theta`` with ``f(x)/x**theta`` eventually almost increasing."""
    return min((1.0 + growth.kappa) / (2 * growth.h), 1.0 / growth.h)


def delta_lower_bound(growth: GrowthSpec) -> float:
    """Left end of the admissible ``delta`` interval for the normal/small split."""
    h = growth.h
    t = min(potter_theta(growth), 1.0 / h)
    return 1.0 - 1.0 / (4 * h * (1.0 - (h - 1) * t))


def check_delta(growth: GrowthSpec, delta: float) -> None:
    lo = delta_lower_bound(growth)
    if not lo < delta < 1:
        raise ConfigError(f"delta={delta} outside the admissible interval ({lo:.6g}, 1)")


def uniform_ratio_bounds(f, Lambda: float, xs: Sequence[float], grid: int = 65) -> tuple[float, float]:
    """``inf`` and ``sup`` of ``f(lambda x)/f(x)`` over ``lambda in [1, Lambda]``, ``x in xs``."""
    fn = _as_callable(f)
    lam = np.linspace(1.0, Lambda, grid)
    x = np.asarray(xs, dtype=float)[:, None]
    r = np.asarray(fn(lam[None, :] * x)) / np.asarray(fn(x))
    return float(r.min()), float(r.max())


def increasing_growth_bound(growth: GrowthSpec, k: float, n: float, ell: int) -> tuple[float, float]:
    """Both sides of ``f(k)^(h-l)/k <= k^(-l/h) (f(n)/n^(1/h))^(h-l)`` for ``k <= n``.

    The inequality holds whenever ``F`` is nondecreasing on ``[k, n]``.
    """
    h = growth.h
    lhs = float(growth.f(k)) ** (h - ell) / k
    rhs = k ** (-ell / h) * (float(growth.f(n)) / n ** (1.0 / h)) ** (h - ell)
    return lhs, rhs
