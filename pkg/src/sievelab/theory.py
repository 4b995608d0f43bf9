"""Linear sieve functions, Euler products, and main-term evaluations.

The linear-sieve pair (F, f) has closed forms F(s) = 2 e^gamma / s on
(0, 3] and f(s) = 2 e^gamma log(s-1)/s on [2, 4] (f = 0 below 2); beyond
those ranges the pair extends by the delay system (sF)' = f(s-1),
(sf)' = F(s-1), integrated on a fixed grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arith import FactoredInteger, euler_phi_int, factorize_trial, prime_sieve
from .errors import DivergentIntegralError, DomainError, RangeError, ResourceCapError
from .params import SieveParams
from .weights import WeightSystem

EULER_GAMMA = 0.57721566490153286

PAPER_CONSTANT_BOUND = 0.0166

_PRIME_TABLE_CAP = 50_000_000


@dataclass(frozen=True)
class SieveFunctionTable:
    """Grid extension of the linear sieve functions beyond their closed forms."""

    s_grid: np.ndarray
    upper_values: np.ndarray  # F on the grid
    lower_values: np.ndarray  # f on the grid
    gamma_euler: float


def _closed_upper(s: float) -> float:
    return 2.0 * math.exp(EULER_GAMMA) / s


def _closed_lower(s: float) -> float:
    if s <= 2.0:
        return 0.0
    return 2.0 * math.exp(EULER_GAMMA) * math.log(s - 1.0) / s


def build_sieve_function_table(s_max: float = 8.0, step: float = 1e-4) -> SieveFunctionTable:
    """Integrate the delay system on [2, s_max] with trapezoidal steps.

    Both functions are seeded at s = 2 from their closed forms, so the grid
    values on (2, 4] double as a junction check against the closed forms.
    """
    if s_max < 4.0:
        raise DomainError("table must extend at least to s = 4")
    n = int(round((s_max - 2.0) / step))
    s = 2.0 + step * np.arange(n + 1)

    upper = np.empty(n + 1)
    lower = np.empty(n + 1)
    upper[0] = _closed_upper(2.0)
    lower[0] = 0.0

    # cumulative trapezoids of f(s-1) and F(s-1); s-1 lags one unit behind,
    # so lagged values are always already available (closed form below 3).
    lag = int(round(1.0 / step))
    acc_upper = 2.0 * upper[0]  # s*F(s) at s = 2
    acc_lower = 0.0             # s*f(s) at s = 2
    for i in range(1, n + 1):
        si = s[i]
        f_prev = lower[i - 1 - lag] if i - 1 - lag >= 0 else _closed_lower(s[i - 1] - 1.0)
        f_cur = lower[i - lag] if i - lag >= 0 else _closed_lower(si - 1.0)
        big_prev = upper[i - 1 - lag] if i - 1 - lag >= 0 else _closed_upper(s[i - 1] - 1.0)
        big_cur = upper[i - lag] if i - lag >= 0 else _closed_upper(si - 1.0)
        acc_upper += 0.5 * step * (f_prev + f_cur)
        acc_lower += 0.5 * step * (big_prev + big_cur)
        upper[i] = acc_upper / si
        lower[i] = acc_lower / si
    return SieveFunctionTable(s, upper, lower, EULER_GAMMA)


_DEFAULT_TABLE: SieveFunctionTable | None = None


def _default_table() -> SieveFunctionTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = build_sieve_function_table()
    return _DEFAULT_TABLE


def linear_sieve_pair(s: float, table: SieveFunctionTable | None = None) -> tuple[float, float]:
    """(F(s), f(s)): closed forms in their ranges, grid extension beyond."""
    if s <= 0:
        raise DomainError(f"sieve functions need s > 0, got {s}")
    upper = _closed_upper(s) if s <= 3.0 else None
    lower = _closed_lower(s) if s <= 4.0 else None
    if upper is not None and lower is not None:
        return upper, lower
    tab = table if table is not None else _default_table()
    if s > tab.s_grid[-1]:
        raise RangeError(f"s={s} beyond table range {tab.s_grid[-1]}")
    if upper is None:
        upper = float(np.interp(s, tab.s_grid, tab.upper_values))
    if lower is None:
        lower = float(np.interp(s, tab.s_grid, tab.lower_values))
    return upper, lower


def euler_product(w_lo: float, w_hi: float, q: int) -> Fraction:
    """Exact product of (1 - 1/p) over primes w_lo < p <= w_hi not dividing q."""
    if not 1 <= w_lo <= w_hi:
        raise DomainError("need 1 <= w_lo <= w_hi")
    if w_hi > _PRIME_TABLE_CAP:
        raise RangeError(f"prime range {w_hi} exceeds table cap {_PRIME_TABLE_CAP}")
    out = Fraction(1)
    for p in prime_sieve(math.floor(w_hi)):
        p = int(p)
        if p > w_lo and q % p != 0:
            out *= Fraction(p - 1, p)
    return out


@dataclass(frozen=True)
class MainTermValue:
    value: Fraction
    v_z: Fraction
    ratio_to_v: float


def sieve_main_term(
    lower_system: WeightSystem,
    correction_system: WeightSystem,
    q: int,
    support_cap: int = 5_000_000,
) -> MainTermValue:
    """M = sum over (d, q) = 1 of (lower_d - correction_d)/d, exactly."""
    support = set(lower_system.entries) | set(correction_system.entries)
    if len(support) > support_cap:
        raise ResourceCapError("main-term support exceeds cap", count_estimate=len(support))
    total = Fraction(0)
    for d in support:
        if math.gcd(d, q) != 1:
            continue
        v = lower_system.entries.get(d, 0) - correction_system.entries.get(d, 0)
        if v:
            total += Fraction(v, d)
    v_z = euler_product(1, lower_system.params.z, q)
    return MainTermValue(total, v_z, float(total / v_z))


@dataclass(frozen=True)
class MainTermReport:
    """Main-term constant evaluation with its quadrature error bound."""

    kappa: float
    limit_mode: str
    constant_lower: float
    quadrature_error: float
    integral_value: float
    paper_bound: float = PAPER_CONSTANT_BOUND
    meets_paper_bound: bool = False
    m_value: float | None = None
    v_z: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "limit_mode": self.limit_mode,
            "value": self.constant_lower,
            "error_bound": self.quadrature_error,
            "integral_value": self.integral_value,
            "paper_bound": self.paper_bound,
            "meets_paper_bound": self.meets_paper_bound,
            "M_value": self.m_value,
            "V_z": self.v_z,
        }


def _composite_simpson(fn, a: float, b: float, panels: int) -> float:
    xs = np.linspace(a, b, 2 * panels + 1)
    ys = fn(xs)
    h = (b - a) / (2 * panels)
    return float(h / 3.0 * (ys[0] + ys[-1] + 4.0 * ys[1:-1:2].sum() + 2.0 * ys[2:-1:2].sum()))


def main_term_constant(
    kappa: float,
    resolution: int = 4096,
    limit_mode: str = "derived",
) -> MainTermReport:
    """Evaluate (1/2) e^gamma log 3 - 2 e^gamma * I(kappa).

    I(kappa) integrates (1 - 2 kappa a) / (4 a (1 - a)) from 1/4 up to
    1/(2 kappa), where the numerator vanishes.  The literal upper limit
    2 kappa exceeds 1 for kappa > 1/2 and puts a non-integrable pole at
    a = 1 inside the range; that mode raises instead of returning a number.
    """
    if not 0.5 < kappa < 0.75:
        raise DomainError(f"kappa must lie in (1/2, 3/4), got {kappa}")
    if limit_mode not in ("derived", "literal"):
        raise DomainError(f"unknown limit mode {limit_mode}")
    if limit_mode == "literal":
        raise DivergentIntegralError(
            f"upper limit 2*kappa = {2 * kappa} >= 1: the integrand has a "
            "non-integrable pole at a = 1 with nonvanishing numerator"
        )
    upper = 1.0 / (2.0 * kappa)

    def integrand(a):
        return (1.0 - 2.0 * kappa * a) / (4.0 * a * (1.0 - a))

    coarse = _composite_simpson(integrand, 0.25, upper, resolution)
    fine = _composite_simpson(integrand, 0.25, upper, 2 * resolution)
    scale = 2.0 * math.exp(EULER_GAMMA)
    err = max(abs(fine - coarse), 1e-15) * scale
    constant = 0.5 * math.exp(EULER_GAMMA) * math.log(3.0) - scale * fine
    return MainTermReport(
        kappa=kappa,
        limit_mode=limit_mode,
        constant_lower=constant,
        quadrature_error=err,
        integral_value=fine,
        meets_paper_bound=constant >= PAPER_CONSTANT_BOUND,
    )


def fundamental_lemma_ratio(system: WeightSystem, q: int) -> float:
    """(sum over (e, q) = 1 of weight_e / e) / V(w).

    The product runs over the same primes as the support, p < w (so a prime
    w itself is excluded, keeping the w = 2 case exactly 1).
    """
    total = Fraction(0)
    for e, v in system.entries.items():
        if math.gcd(e, q) == 1:
            total += Fraction(v, e)
    v_w = Fraction(1)
    for p in prime_sieve(math.ceil(system.params.w_level) - 1):
        p = int(p)
        if p < system.params.w_level and q % p != 0:
            v_w *= Fraction(p - 1, p)
    return float(total / v_w)


def divisor_weight_sum(weights: dict[int, int], b: FactoredInteger) -> int:
    """sum over d | b of the weight at d (zero off the support)."""
    return sum(weights.get(d, 0) for d in b.divisors())


@dataclass(frozen=True)
class SecondMomentReport:
    value: float
    comparison: float  # (q/phi(q)) / log x
    ratio: float


def support_second_moment(system: WeightSystem, q: int) -> SecondMomentReport:
    """sum over d of d * (sum over support multiples m of d, (m,q)=1, of w_m/m)^2.

    d ranges over the divisor closure of the support; exact rationals
    throughout, with the comparison scale (q/phi(q))/log x attached.
    """
    divisors: set[int] = set()
    for m in system.entries:
        divisors.update(factorize_trial(m).divisors())
    total = Fraction(0)
    for d in divisors:
        inner = Fraction(0)
        for m, v in system.entries.items():
            if m % d == 0 and math.gcd(m, q) == 1:
                inner += Fraction(v, m)
        total += d * inner * inner
    comparison = (q / euler_phi_int(q)) / math.log(system.params.x)
    value = float(total)
    return SecondMomentReport(value, comparison, value / comparison)
