"""Type-I variance machinery for short windows in arithmetic progressions.

The central object is the smoothed variance

    integral over x of sum over reduced a mod q of g(x/X) *
        (# weighted points in (x-L, x] in class a  -  L/q * sum a_d/d)^2

decomposed into a Fourier main term (s1), an off-diagonal lattice term (s2)
and a diagonal divisor-square term (s3), with an explicitly budgeted
remainder.  The window count is piecewise constant between integer
breakpoints, so the x-integral is evaluated exactly piece by piece through
the window's antiderivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .arith import (
    FactoredInteger,
    count_in_class,
    crt_pair,
    euler_phi_int,
    divisor_count_int,
    mod_inverse,
)
from .errors import DomainError, RangeError, ValidationError
from .expsums import fourier_coefficient_exact
from .params import SieveParams
from .weights import WeightSystem
from .windows import SmoothWindow, smooth_window

DEFAULT_BUDGET_CONSTANT = 10.0
DEFAULT_Y_BIG = 1_000_000


def weighted_remainder(
    x,
    residue: int,
    lower_system: WeightSystem,
    correction_system: WeightSystem,
    params: SieveParams,
) -> Fraction:
    """sum over (d, q) = 1 of (lower_d - correction_d) (A_d(x, a) - L/(qd)),

    where A_d(x, a) counts n in (x-L, x] with n = a (q) and d | n.  Exact.
    """
    q, length = params.q, params.length
    if math.gcd(residue, q) != 1:
        raise DomainError(f"residue {residue} not coprime to modulus {q}")
    support = set(lower_system.entries) | set(correction_system.entries)
    total = Fraction(0)
    for d in sorted(support):
        if math.gcd(d, q) != 1:
            continue
        w = lower_system.entries.get(d, 0) - correction_system.entries.get(d, 0)
        if not w:
            continue
        cr = crt_pair(residue % q, q, 0, d)
        count = count_in_class(x - length, x, cr[0], cr[1])
        total += w * (count - Fraction(length, q * d))
    return total


@dataclass(frozen=True)
class VarianceReport:
    """One decomposition instance: lhs vs s1 + s2 + s3 with its error budget."""

    lhs: float
    s1: float
    s2: float
    s3: float
    residual: float
    error_budget: float
    ok: bool
    config: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("lhs", "s1", "s2", "s3", "residual",
                                             "error_budget", "ok")}
        out["config"] = self.config
        return out


def _coprime_lookup(q: int) -> np.ndarray:
    r = np.arange(max(q, 1), dtype=np.int64)
    return np.gcd(r, q) == 1


def _coprime_multiple_count(e: int, q: int, y: int) -> int:
    """#{n <= y : e | n, (n, q) = 1}, exactly, via Moebius over divisors of q."""
    if math.gcd(e, q) != 1:
        return 0
    total = 0
    for t in _squarefree_divisors(q):
        mu = -1 if _omega_of(t) % 2 else 1
        total += mu * (y // (e * t))
    return total


def _squarefree_divisors(q: int) -> list[int]:
    divs = [1]
    m = q
    p = 2
    while p * p <= m:
        if m % p == 0:
            divs = divs + [d * p for d in divs]
            while m % p == 0:
                m //= p
        p += 1 if p == 2 else 2
    if m > 1:
        divs = divs + [d * m for d in divs]
    return divs


def _omega_of(t: int) -> int:
    count = 0
    p = 2
    while p * p <= t:
        if t % p == 0:
            count += 1
            while t % p == 0:
                t //= p
        p += 1 if p == 2 else 2
    return count + (1 if t > 1 else 0)


def _divisor_closure(support: list[int]) -> list[int]:
    out: set[int] = set()
    for m in support:
        d = 1
        while d * d <= m:
            if m % d == 0:
                out.add(d)
                out.add(m // d)
            d += 1
    return sorted(out)


def _lhs_breakpoint_sweep(coeffs, q, length, x_scale, window) -> float:
    """Exact piecewise evaluation of the smoothed variance integral."""
    lo_u, hi_u = window.support
    x_lo, x_hi = lo_u * x_scale, hi_u * x_scale
    n_lo = math.floor(x_lo - length)  # events strictly above x_lo matter
    n_hi = math.floor(x_hi)

    wgt = np.zeros(n_hi - n_lo + 1, dtype=np.float64)
    for d, a_d in coeffs.items():
        first = max(d, -(-n_lo // d) * d)  # smallest multiple of d >= max(d, n_lo)
        if first <= n_hi:
            wgt[first - n_lo :: d] += a_d

    ns = np.arange(n_lo, n_hi + 1, dtype=np.int64)
    mu = (length / q) * math.fsum(a_d / d for d, a_d in coeffs.items())

    total = 0.0
    for a in range(q):
        if math.gcd(a, q) != 1:
            continue
        cls = ns % q == a
        active = cls & (wgt != 0.0)
        pos = ns[active].astype(np.float64)
        w = wgt[active]
        # entry at n, exit at n + L; seed with windows already open at x_lo
        n0 = math.fsum(w[(pos <= x_lo) & (pos + length > x_lo)])
        ev_pos = np.concatenate([pos, pos + length])
        ev_delta = np.concatenate([w, -w])
        inside = (ev_pos > x_lo) & (ev_pos <= x_hi)
        ev_pos, ev_delta = ev_pos[inside], ev_delta[inside]
        order = np.argsort(ev_pos, kind="stable")
        ev_pos, ev_delta = ev_pos[order], ev_delta[order]
        counts = np.concatenate([[n0], n0 + np.cumsum(ev_delta)])
        bounds = np.concatenate([[x_lo], ev_pos, [x_hi]])
        gdiff = np.diff(window.cumulative(bounds / x_scale))
        total += float(((counts - mu) ** 2 * x_scale * gdiff).sum())
    return total


def _s1_fourier_term(coeffs, q, length, x_scale, g_hat_0) -> float:
    """2 ghat(0) X phi(q) sum over d of gamma(d, L/q) (sum_{m = 0 (d)} a_m/m)^2."""
    phi = euler_phi_int(q)
    total = 0.0
    for d in _divisor_closure(sorted(coeffs)):
        inner = math.fsum(a_m / m for m, a_m in coeffs.items() if m % d == 0)
        if inner == 0.0:
            continue
        gam = float(fourier_coefficient_exact(d, Fraction(length, q * d)))
        total += gam * inner * inner
    return 2.0 * g_hat_0 * x_scale * phi * total


def _s2_offdiagonal_term(coeffs, q, length, x_scale, window, cop_q) -> float:
    """Off-diagonal lattice term: k != 0 solutions of d1 m1 = d2 m2 + k q."""
    lo_u, hi_u = window.support
    phi_over_q = euler_phi_int(q) / q
    g_hat_0 = window.g_hat_0
    ds = sorted(coeffs)
    total = 0.0
    k_max = length // q
    for k in range(-k_max, k_max + 1):
        if k == 0:
            continue
        y_lo = max(0, q * k)
        y_hi = length + min(0, q * k)
        if y_hi <= y_lo:
            continue
        for d1 in ds:
            a1 = coeffs[d1]
            for d2 in ds:
                a2 = coeffs[d2]
                g = math.gcd(d1, d2)
                if k % g != 0:
                    continue
                lcm = d1 // g * d2
                cr = crt_pair(0, d1, (k * q) % d2, d2)
                n0 = cr[0]
                n_min = max(d1, k * q + d2, math.ceil(lo_u * x_scale - y_hi))
                n_max = math.floor(hi_u * x_scale - y_lo)
                if n_max < n_min:
                    inner = 0.0
                else:
                    first = n0 + ((n_min - n0 + lcm - 1) // lcm) * lcm
                    ns = np.arange(first, n_max + 1, lcm, dtype=np.int64)
                    if q > 1:
                        ns = ns[cop_q[(ns // d1) % q]]
                    inner = float(
                        (x_scale * window.integral((ns + y_lo) / x_scale,
                                                   (ns + y_hi) / x_scale)).sum()
                    ) if len(ns) else 0.0
                main = (y_hi - y_lo) * phi_over_q * g_hat_0 * x_scale / lcm
                total += a1 * a2 * (inner - main)
    return total


def _s3_diagonal_term(coeffs, q, length, x_scale, window, y_big, cop_q) -> float:
    """Diagonal term: windowed divisor-square sum minus its y_big average."""
    lo_u, hi_u = window.support
    n_lo = max(1, math.ceil(lo_u * x_scale - length))
    n_hi = math.floor(hi_u * x_scale)
    size = n_hi - n_lo + 1
    wgt = np.zeros(size, dtype=np.float64)
    for d, a_d in coeffs.items():
        first = max(d, ((n_lo + d - 1) // d) * d)
        if first <= n_hi:
            wgt[first - n_lo :: d] += a_d
    ns = np.arange(n_lo, n_hi + 1, dtype=np.int64)
    mask = cop_q[ns % q] if q > 1 else np.ones(size, dtype=bool)
    ns_c = ns[mask]
    w2 = wgt[mask] ** 2
    piece1 = float((w2 * x_scale * window.integral(ns_c / x_scale,
                                                   (ns_c + length) / x_scale)).sum())
    # second piece: ghat(0) * L X * (1/Y) sum_{n <= Y, (n,q)=1} w_n^2, expanded
    # exactly over coefficient pairs so any Y (even X^10) stays exact.  The
    # coprimality filter already carries the phi(q)/q density, so no extra
    # prefactor appears on either piece.
    pair_sum = 0.0
    for d1, a1 in coeffs.items():
        for d2, a2 in coeffs.items():
            e = d1 // math.gcd(d1, d2) * d2
            pair_sum += a1 * a2 * (_coprime_multiple_count(e, q, y_big) / y_big)
    piece2 = window.g_hat_0 * length * x_scale * pair_sum
    return piece1 - piece2


def variance_decomposition(
    coeffs: dict[int, float],
    q: int,
    length: int,
    x_scale: float,
    window: SmoothWindow | None = None,
    budget_constant: float = DEFAULT_BUDGET_CONSTANT,
    y_big: int = DEFAULT_Y_BIG,
    delta_exponent: float = 0.1,
) -> VarianceReport:
    """Decompose the smoothed variance into s1 + s2 + s3 and budget the rest.

    Requires coefficients supported on d coprime to q with d <= X^(1-delta),
    and L <= X/3.  A report whose residual exceeds the budget is flagged,
    not raised.
    """
    window = window if window is not None else smooth_window("wide")
    coeffs = {int(d): float(v) for d, v in coeffs.items() if v != 0.0}
    if any(d < 1 for d in coeffs):
        raise DomainError("coefficient indices must be positive")
    bad = [d for d in coeffs if math.gcd(d, q) != 1]
    if bad:
        raise ValidationError(f"coefficients on d not coprime to q: {sorted(bad)}",
                              fields=("coeffs", "q"))
    if coeffs and max(coeffs) > x_scale ** (1.0 - delta_exponent):
        raise ValidationError("coefficient support exceeds X^(1-delta)",
                              fields=("coeffs", "x_scale"))
    if length > x_scale / 3.0:
        raise ValidationError("need L <= X/3", fields=("length", "x_scale"))

    cop_q = _coprime_lookup(q)
    if not coeffs:
        cfg = {"q": q, "length": length, "x_scale": x_scale, "coeffs": {},
               "y_big": y_big, "budget_constant": budget_constant,
               "window": window.kind}
        return VarianceReport(0.0, 0.0, 0.0, 0.0, 0.0, budget_constant, True, cfg)

    lhs = _lhs_breakpoint_sweep(coeffs, q, length, x_scale, window)
    s1 = _s1_fourier_term(coeffs, q, length, x_scale, window.g_hat_0)
    s2 = _s2_offdiagonal_term(coeffs, q, length, x_scale, window, cop_q)
    s3 = _s3_diagonal_term(coeffs, q, length, x_scale, window, y_big, cop_q)
    residual = lhs - s1 - s2 - s3

    sum_ratio = abs(math.fsum(a / d for d, a in coeffs.items()))
    sum_plain = abs(math.fsum(coeffs.values()))
    budget = budget_constant * (
        1.0 + length**2 * divisor_count_int(q) / q * sum_ratio * sum_plain
    )
    cfg = {
        "q": q, "length": length, "x_scale": x_scale,
        "coeffs": {str(d): coeffs[d] for d in sorted(coeffs)},
        "y_big": y_big, "budget_constant": budget_constant, "window": window.kind,
    }
    return VarianceReport(lhs, s1, s2, s3, residual, budget,
                          abs(residual) <= budget, cfg)


@dataclass(frozen=True)
class WeightTermReport:
    """Fourier-side and diagonal-side magnitudes of one weight system."""

    s1_value: float
    s1_comparison: float   # X L / log X
    s1_ratio: float
    s3_values: dict[int, int]
    s3_ratios: dict[int, float]  # against Y / log X


def weight_term_values(
    system: WeightSystem, q: int, length: int, x_scale: float,
    y_big: int = DEFAULT_Y_BIG,
) -> WeightTermReport:
    """S1- and S3-type values for integer-weight systems (exact inner sums)."""
    phi = euler_phi_int(q)
    s1_total = Fraction(0)
    for d in _divisor_closure(system.support()):
        inner = Fraction(0)
        for m, v in system.entries.items():
            if m % d == 0 and math.gcd(m, q) == 1:
                inner += Fraction(v, m)
        if inner:
            s1_total += fourier_coefficient_exact(d, Fraction(length, q * d)) * inner * inner
    s1_value = float(x_scale * phi * s1_total)
    s1_comparison = x_scale * length / math.log(x_scale)

    s3_values: dict[int, int] = {}
    s3_ratios: dict[int, float] = {}
    for y in (int(3 * x_scale), int(y_big)):
        s3_values[y] = divisor_square_sum(system.entries, q, y)
        s3_ratios[y] = s3_values[y] / (y / math.log(x_scale))
    return WeightTermReport(s1_value, s1_comparison, s1_value / s1_comparison,
                            s3_values, s3_ratios)


def divisor_square_sum(weights: dict[int, int], q: int, y: int,
                       sieve_cap: int = 20_000_000) -> int:
    """sum over n <= y with (n, q) = 1 of (sum_{d | n} w_d)^2, exactly.

    Direct sieve accumulation up to the cap; beyond it the square is
    expanded over weight pairs with exact progression counts (an identity,
    not an approximation).
    """
    if y <= sieve_cap:
        acc = np.zeros(y + 1, dtype=np.int64)
        for d, v in weights.items():
            if d <= y:
                acc[d::d] += v
        ns = np.arange(y + 1, dtype=np.int64)
        mask = np.gcd(ns, q) == 1
        mask[0] = False
        sq = acc[mask]
        return int(np.sum(sq * sq, dtype=np.int64))
    total = 0
    for d1, v1 in weights.items():
        for d2, v2 in weights.items():
            e = d1 // math.gcd(d1, d2) * d2
            total += v1 * v2 * _coprime_multiple_count(e, q, y)
    return total


@dataclass(frozen=True)
class FractionIdentityResult:
    delta: int
    lhs_mod_one: Fraction
    rhs_mod_one: Fraction
    ok: bool
    u: int
    h: int


def fraction_difference_check(
    l1: int, l2: int, m1: int, n1: int, n1t: int, n2: int, n2t: int, m2: int,
    d_unit: int = 1,
) -> FractionIdentityResult:
    """Check the exact mod-1 identity for the difference of two Kloosterman
    fractions:

        l1 * inv(d m2 n2; m1 n1) / (m1 n1) - l2 * inv(d m2 n2t; m1 n1t) / (m1 n1t)
            =  Delta * inv(d m2 n2 n2t; M) / M   (mod 1),

    with g1 = (n1, n2t), g2 = (n1t, n2), M = m1 (n1/g1)(n1t/g2) and
    Delta = l1 (n2t/g1)(n1t/g2) - l2 (n1/g1)(n2/g2).  Also returns the
    change-of-variable integers u = l1 n1t n2t and h = u - l2 n1 n2.

    Admissibility requires, beyond the surrounding-sum coprimality and the
    existence of every inverse, the reduction divisibilities g1 | l1 and
    g2 | l2: multiplying both sides by d m2 n2 n2t pins them only modulo M,
    and agreement modulo the remaining factor g1 g2 forces the frequency
    divisibility (both sides then agree exactly; verified unconditionally
    when g1 = g2 = 1, which includes every symmetric degenerate tuple).
    """
    for name, v in (("m1", m1), ("n1", n1), ("n1t", n1t), ("n2", n2),
                    ("n2t", n2t), ("m2", m2), ("d_unit", d_unit)):
        if v < 1:
            raise DomainError(f"{name} must be >= 1, got {v}")
    _require_coprime(m1 * n1, n2, "(m1*n1, n2)")
    _require_coprime(m1 * n1t, n2t, "(m1*n1t, n2t)")
    _require_coprime(d_unit * m2, m1 * n1 * n1t, "(d*m2, m1*n1*n1t)")

    g1 = math.gcd(n1, n2t)
    g2 = math.gcd(n1t, n2)
    modulus = m1 * (n1 // g1) * (n1t // g2)
    _require_coprime(n2t, n1 // g1, "(n2t, n1/(n1, n2t))")
    _require_coprime(n2, n1t // g2, "(n2, n1t/(n1t, n2))")
    if l1 % g1 != 0:
        raise DomainError(f"reduction divisibility violated: (n1, n2t) = {g1} must divide l1 = {l1}")
    if l2 % g2 != 0:
        raise DomainError(f"reduction divisibility violated: (n1t, n2) = {g2} must divide l2 = {l2}")

    lhs = (
        Fraction(l1 * mod_inverse(d_unit * m2 * n2, m1 * n1), m1 * n1)
        - Fraction(l2 * mod_inverse(d_unit * m2 * n2t, m1 * n1t), m1 * n1t)
    ) % 1
    delta = l1 * (n2t // g1) * (n1t // g2) - l2 * (n1 // g1) * (n2 // g2)
    rhs = Fraction(delta * mod_inverse(d_unit * m2 * n2 * n2t, modulus), modulus) % 1
    u = l1 * n1t * n2t
    h = u - l2 * n1 * n2
    return FractionIdentityResult(delta, lhs, rhs, lhs == rhs, u, h)


def _require_coprime(a: int, b: int, label: str):
    if math.gcd(a, b) != 1:
        raise DomainError(f"coprimality violated: {label} = {math.gcd(a, b)}")


@dataclass(frozen=True)
class BracketProbe:
    quadruple_sum: float
    paper_bound: float
    ratio: float
    tuples: int


def dispersion_bracket_probe(
    m1_scale: int, n1_scale: int, m2_scale: int, n2_scale: int,
    e: int, e2: int, a: int, q: int, delta: int, x_scale: float,
    window: SmoothWindow | None = None,
    coefficient=None,
    lcm_cap: int = 10**12,
) -> BracketProbe:
    """Coefficient-weighted sum of congruence-count deviations over dyadic
    boxes, against the dispersion bound with the (|a||q|)^o(1) factor dropped.

    The bracket counts r with w(r/X) weight in the class r = -aq mod (e m1 n1),
    r = 0 mod (e2 m2 n2), (r, q) = 1, minus phi(q)/q * what(0) X / lcm;
    incompatible congruences contribute the full negative main term.
    """
    window = window if window is not None else smooth_window("dyadic")
    if a == 0:
        raise DomainError("need a != 0")
    if math.gcd(e * e2, q) != 1:
        raise DomainError("need (e*e2, q) = 1")
    if (a * q) % delta != 0:
        raise DomainError("need delta | a*q")
    if coefficient is None:
        coefficient = lambda m1, n1, m2, n2: 1.0

    lo_u, hi_u = window.support
    phi_over_q = euler_phi_int(q) / q
    what0 = window.g_hat_0
    total = 0.0
    tuples = 0
    for m1 in range(m1_scale, 2 * m1_scale):
        for n1 in range(n1_scale, 2 * n1_scale):
            for m2 in range(m2_scale, 2 * m2_scale):
                for n2 in range(n2_scale, 2 * n2_scale):
                    if math.gcd(m1 * n1, m2 * n2) != delta:
                        continue
                    if math.gcd(m1 * n1 * m2 * n2, q) != 1:
                        continue
                    mod1 = e * m1 * n1
                    mod2 = e2 * m2 * n2
                    g = math.gcd(mod1, mod2)
                    lcm = mod1 // g * mod2
                    if lcm > lcm_cap:
                        raise RangeError(f"combined modulus {lcm} exceeds cap")
                    cr = crt_pair((-a * q) % mod1, mod1, 0, mod2)
                    if cr is None:
                        inner = 0.0
                    else:
                        r0, _ = cr
                        r_min = math.ceil(lo_u * x_scale)
                        r_max = math.floor(hi_u * x_scale)
                        first = r0 + ((r_min - r0 + lcm - 1) // lcm) * lcm
                        rs = np.arange(first, r_max + 1, lcm, dtype=np.int64)
                        if q > 1:
                            rs = rs[np.gcd(rs, q) == 1]
                        inner = float(window(rs / x_scale).sum()) if len(rs) else 0.0
                    bracket = inner - phi_over_q * what0 * x_scale / lcm
                    total += coefficient(m1, n1, m2, n2) * bracket
                    tuples += 1
    bound = (
        m1_scale**0.25 * n1_scale**0.5 / m2_scale**0.5
        + 1.0 / (m1_scale**0.25 * n1_scale**0.5)
        + x_scale**0.5 / (m1_scale**0.5 * m2_scale**0.5 * n1_scale * n2_scale)
    ) * (e * e2) ** 2 * (m1_scale * n1_scale * m2_scale * n2_scale)
    return BracketProbe(total, bound, abs(total) / bound, tuples)
