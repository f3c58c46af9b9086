"""Gamma-function asymptotics for weighted power sums and expected counts.

Closed forms are represented by :class:`ClosedForm`,
``coefficient * n**exponent * (log n)**log_power``, together with the
exponent of the error term.  Gamma values come from :func:`math.gamma`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .counting import MAX_N, dilate, fold
from .errors import BudgetExceeded, ConfigError
from .model import Equation, GrowthSpec, MeasureSpec


@dataclass(frozen=True)
class ClosedForm:
    coefficient: float
    exponent: float
    error_exponent: float = float("nan")
    log_power: int = 0

    def evaluate(self, n):
        n = np.asarray(n, dtype=float)
        val = self.coefficient * n**self.exponent
        if self.log_power:
            val = val * np.log(n) ** self.log_power
        return val

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        d = self.to_dict()
        if math.isnan(d["error_exponent"]):
            d["error_exponent"] = None
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ClosedForm":
        d = json.loads(text)
        ee = d.get("error_exponent")
        return cls(d["coefficient"], d["exponent"], float("nan") if ee is None else ee, d.get("log_power", 0))


def beta_constant(alpha: float, beta: float) -> float:
    return math.gamma(alpha) * math.gamma(beta) / math.gamma(alpha + beta)


def _check_beta(alpha, beta, L, r, n):
    if not (alpha >= beta > 0 and beta <= 1):
        raise ConfigError("need alpha >= beta > 0 and beta <= 1")
    if not (L >= 1 and 0 <= r < L):
        raise ConfigError("need L >= 1 and 0 <= r < L")
    if n <= L:
        raise ConfigError("need n > L")


def beta_sum(alpha: float, beta: float, L: int, r: int, n: int, mode: str = "direct") -> float:
    """``sum m^(alpha-1) (n-m)^(beta-1)`` over ``1 <= m < n`` with ``m = r (mod L)``."""
    _check_beta(alpha, beta, L, r, n)
    if mode == "closed":
        return beta_constant(alpha, beta) * n ** (alpha + beta - 1) / L
    if mode != "direct":
        raise ConfigError(f"unknown mode {mode!r}")
    first = r if r >= 1 else L
    m = np.arange(first, n, L, dtype=float)
    # np.sum uses pairwise summation
    return float(np.sum(m ** (alpha - 1) * (n - m) ** (beta - 1)))


def beta_error_constant(alpha: float, beta: float, L: int, r: int, ns=(10**3, 10**4, 10**5)) -> dict[int, float]:
    """``|direct - closed| / n^(alpha-1)`` at each ``n``."""
    return {
        int(n): abs(beta_sum(alpha, beta, L, r, n) - beta_sum(alpha, beta, L, r, n, "closed")) / n ** (alpha - 1)
        for n in ns
    }


def power_sum(omega: float, eq: Equation, n: int, mode: str = "direct") -> float:
    """``sum (k_1 ... k_l)^(omega-1)`` over solutions in positive integers."""
    ell = eq.length
    if not 1.0 / ell - 1e-12 <= omega <= 1:
        raise ConfigError(f"omega must lie in [1/{ell}, 1]")
    g = eq.gcd
    if mode == "closed":
        if n % g:
            return 0.0
        lead = math.gamma(omega) ** ell / math.gamma(ell * omega)
        return lead * g / eq.product**omega * n ** (ell * omega - 1)
    if mode != "direct":
        raise ConfigError(f"unknown mode {mode!r}")
    if n % g:
        return 0.0
    if ell == 1:
        b = eq.coeffs[0]
        return float((n // b) ** (omega - 1)) if n % b == 0 and n >= b else 0.0
    if ell == 2:
        b1, b2 = eq.coeffs
        k1 = np.arange(1, n // b1 + 1, dtype=np.int64)
        rest = n - b1 * k1
        ok = (rest > 0) & (rest % b2 == 0)
        k1, k2 = k1[ok].astype(float), (rest[ok] // b2).astype(float)
        return float(np.sum((k1 * k2) ** (omega - 1)))
    if n > MAX_N:
        raise BudgetExceeded(f"direct power sum at n={n} exceeds the cap {MAX_N}")
    k = np.arange(n + 1, dtype=float)
    w = np.zeros(n + 1)
    w[1:] = k[1:] ** (omega - 1)
    series = [dilate(w, b, n + 1) for b in eq.coeffs]
    return float(fold(series, n + 1)[n])


def _measure_parts(measure: MeasureSpec, eq: Equation):
    g = measure.growth
    if eq.length != g.h:
        raise ConfigError("the equation length must equal h")
    if g.phi_kind not in ("constant", "log", "plain_log"):
        raise ConfigError(f"no closed form for phi kind {g.phi_kind!r}")
    return g.h, g.kappa, g.index


def expected_r_coefficient(measure: MeasureSpec, eq: Equation) -> float:
    """``c^h Gamma((1+kappa)/h)^h / Gamma(1+kappa) (b_1...b_h)^(-(1+kappa)/h)``."""
    h, kappa, a = _measure_parts(measure, eq)
    return measure.c**h * math.gamma(a) ** h / math.gamma(1 + kappa) * eq.product ** (-a)


def expected_r_closed_form(measure: MeasureSpec, eq: Equation) -> ClosedForm:
    """Leading term of ``E r(n)`` as a multiple of ``F(n)``.

    ``log`` and ``plain_log`` factors are both evaluated as ``log n``.  The
    error exponent is that of the non-exact part ``f(n)^(h-1)/n``.
    """
    h, kappa, a = _measure_parts(measure, eq)
    lp = 0 if measure.growth.phi_kind == "constant" else 1
    return ClosedForm(expected_r_coefficient(measure, eq), kappa, (h - 1) * a - 1, lp)


def error_term(h: int, kappa: float) -> tuple[float, int]:
    """Exponent and log power of the error term ``E_{h,kappa}``."""
    if h == 2:
        return kappa / 2, 2
    if h == 3:
        return kappa / 2 + max(0.0, kappa / 3 - 0.5), 3
    if kappa <= 2 / (h - 2):
        return kappa / 2, h
    if kappa < h - 2:
        return (1 - 1 / h) * kappa - 1 / h, 0
    return (1 - 1 / (2 * h)) * kappa - 0.5, h


def mt12_profile(C: float, kappa: float, h: int, eq: Equation) -> dict[str, ClosedForm]:
    """Main term and error of ``r(n)`` for a set with ``|A ∩ [1,x]| ~ C x^((1+kappa)/h)``."""
    if not 0 < kappa <= h - 1:
        raise ConfigError(f"kappa must lie in (0, {h - 1}]")
    if eq.length != h:
        raise ConfigError("the equation length must equal h")
    if C <= 0:
        raise ConfigError("C must be positive")
    a = (1 + kappa) / h
    coeff = C**h * (1 + kappa) ** h / h**h * math.gamma(a) ** h / math.gamma(1 + kappa) * eq.product ** (-a)
    ee, elp = error_term(h, kappa)
    return {"main": ClosedForm(coeff, kappa, ee, 0), "error": ClosedForm(1.0, ee, float("nan"), elp)}


def subcase_profile(h: int) -> dict[str, ClosedForm]:
    """``h+1`` unit-coefficient variables over a set of counting function ``x^(1/h)``."""
    return mt12_profile(1.0, 1.0 / h, h + 1, Equation((1,) * (h + 1), max_len=max(6, h + 1)))


def mt1_constant(growth: GrowthSpec, eq: Equation) -> float:
    """``c`` making the leading coefficient of ``E r(n)/F(n)`` equal to 1."""
    d = expected_r_coefficient(MeasureSpec(growth, 1.0), eq)
    return d ** (-1.0 / growth.h)


def mt1_counting_constant(growth: GrowthSpec, eq: Equation) -> float:
    """``C`` in ``|A ∩ [1,x]| ~ C (x F(x))^(1/h)`` under the normalized measure."""
    h, kappa = growth.h, growth.kappa
    a = (1 + kappa) / h
    return h / (1 + kappa) * math.gamma(1 + kappa) ** (1 / h) / math.gamma(a) * eq.product ** ((1 + kappa) / h**2)


def mt3_constant(epsilon: float, h: int, eq: Equation) -> float:
    """``(1-eps)^(1/h) (b_1...b_h)^(1/h^2) / Gamma(1/h)``."""
    if not 0 < epsilon < 0.5:
        raise ConfigError("epsilon must lie in (0, 1/2)")
    if eq.length != h:
        raise ConfigError("the equation length must equal h")
    return (1 - epsilon) ** (1 / h) * eq.product ** (1 / h**2) / math.gamma(1 / h)


def mt3_measure(epsilon: float, h: int, eq: Equation) -> MeasureSpec:
    """Product measure with ``f = (x log x)^(1/h)`` and the zero-density constant."""
    return MeasureSpec(GrowthSpec(h, 0.0, "plain_log"), mt3_constant(epsilon, h, eq))


def solution_count_asymptotic(eq: Equation, n: int) -> float:
    """``n^(l-1) / ((l-1)! b_1...b_l)``, the leading term of the number of solutions over ℕ."""
    ell = eq.length
    if n % eq.gcd:
        return 0.0
    return eq.gcd * n ** (ell - 1) / (math.factorial(ell - 1) * eq.product)
