"""Kloosterman sums, Weil-bound surveys, gcd/coprime counting lemmas, and the
Fourier coefficients of window-count variances.

Complete sums are evaluated by direct enumeration with exact modular
inverses; the survey over primes uses the substitution x -> a^{-1} x, under
which S(a, b; p) = S(1, ab; p), so one pass over the p - 1 residue classes
of ab covers every pair (a, b).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arith import (
    FactoredInteger,
    euler_phi_int,
    divisor_count_int,
    factorize_trial,
    is_prime,
    mod_inverse,
    prime_sieve,
)
from .errors import DomainError

DEFAULT_SURVEY_CONSTANT = 100.0


@dataclass(frozen=True)
class KloostermanQuery:
    """One sum to evaluate: complete when no range is given, else the
    incomplete sum over n <= x_limit with (n, q*d) = 1."""

    a: int
    b: int
    c: int
    x_limit: float | None = None
    d: int = 1

    def evaluate(self):
        if self.x_limit is None:
            return kloosterman_complete(self.a, self.b, self.c)
        return kloosterman_incomplete(self.a, self.c, self.d, self.x_limit)


def _inverse_table_prime(p: int) -> np.ndarray:
    """inv[x] = x^{-1} mod p for 1 <= x < p (inv[0] unused)."""
    inv = np.zeros(p, dtype=np.int64)
    if p > 1:
        inv[1] = 1
    for x in range(2, p):
        inv[x] = (-(p // x) * inv[p % x]) % p
    return inv


def kloosterman_complete(a: int, b: int, c: int) -> complex:
    """S(a, b; c) = sum over units x mod c of e((a x + b x^{-1})/c).

    The value is real for integer a, b (conjugation symmetry x -> -x); the
    imaginary part is kept so callers can verify it vanishes numerically.
    """
    if c < 1:
        raise DomainError(f"modulus must be >= 1, got {c}")
    total = 0j
    tau = 2j * math.pi
    for x in range(c) if c > 1 else [0]:
        if math.gcd(x, c) != 1:
            continue
        xbar = pow(x, -1, c)
        total += np.exp(tau * (((a * x + b * xbar) % c) / c))
    return complex(total)


@dataclass(frozen=True)
class WeilCheck:
    p: int
    a: int
    b: int
    magnitude: float
    bound: float
    ok: bool


def weil_bound_check(p: int, a: int, b: int) -> WeilCheck:
    """|S(a, b; p)| <= 2 sqrt(p) for prime p not dividing ab."""
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    if a % p == 0 or b % p == 0:
        raise DomainError(f"need p | ab to fail: p={p}, a={a}, b={b}")
    s = kloosterman_complete(a, b, p)
    mag = abs(s)
    bound = 2.0 * math.sqrt(p)
    return WeilCheck(p, a, b, mag, bound, mag <= bound)


def _weil_rows_for_prime(p: int) -> tuple[list[tuple], float]:
    """Per-class rows (p, 1, t, |S|, bound, ratio) and the worst |S|/bound."""
    roots = np.exp(2j * math.pi * np.arange(p) / p)
    inv = _inverse_table_prime(p)
    ts = np.arange(p, dtype=np.int64)
    class_sums = np.zeros(p, dtype=np.complex128)
    for x in range(1, p):
        class_sums += roots[(x + ts * inv[x]) % p]
    bound = 2.0 * math.sqrt(p)
    mags = np.abs(class_sums[1:])
    rows = [(p, 1, int(t), float(m), bound, float(m / bound))
            for t, m in zip(range(1, p), mags)]
    return rows, float(mags.max() / bound)


def weil_sweep(p_max: int, workers: int = 1) -> tuple[list[tuple], float, int]:
    """Exhaustive Weil-bound survey over primes p <= p_max and all pairs.

    Every pair (a, b) with 1 <= a, b < p has |S(a, b; p)| = |S(1, ab; p)|, so
    the p - 1 class values cover all (p-1)^2 pairs.  Returns (rows,
    worst_ratio, pairs_covered); the bound holds iff worst_ratio <= 1.
    """
    primes = [int(p) for p in prime_sieve(p_max)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_weil_rows_for_prime, primes))
    else:
        results = [_weil_rows_for_prime(p) for p in primes]
    rows: list[tuple] = []
    worst = 0.0
    pairs = 0
    for p, (prime_rows, ratio) in zip(primes, results):
        rows.extend(prime_rows)
        worst = max(worst, ratio)
        pairs += (p - 1) ** 2
    return rows, worst, pairs


@dataclass(frozen=True)
class IncompleteSum:
    value: complex
    bound_ratio: float
    terms: int


def kloosterman_incomplete(a: int, q: int, d: int, x_limit: float) -> IncompleteSum:
    """sum over n <= x_limit with (n, qd) = 1 of e(a n^{-1} / q), directly.

    bound_ratio divides |sum| by gcd(a,q)^(1/2) q^(1/2) (1 + X/q) with the
    epsilon powers dropped; it is survey data, not an asserted bound.
    """
    if q < 1:
        raise DomainError(f"modulus must be >= 1, got {q}")
    hi = math.floor(x_limit)
    if hi < 1:
        return IncompleteSum(0j, 0.0, 0)
    ns = np.arange(1, hi + 1, dtype=np.int64)
    mask = np.gcd(ns, q * d) == 1
    ns = ns[mask]
    inv = _inverse_table_prime(q) if is_prime(q) else None
    if inv is not None:
        phases = (a * inv[ns % q]) % q
    else:
        invmap = np.zeros(q if q > 1 else 1, dtype=np.int64)
        for r in range(q):
            if math.gcd(r, q) == 1:
                invmap[r] = pow(r, -1, q)
        phases = (a * invmap[ns % q]) % q
    total = complex(np.exp(2j * math.pi * phases / q).sum()) if len(ns) else 0j
    denom = math.sqrt(math.gcd(a, q)) * math.sqrt(q) * (1.0 + x_limit / q)
    return IncompleteSum(total, abs(total) / denom, int(len(ns)))


@dataclass(frozen=True)
class GcdSumCheck:
    value: int
    bound: int
    ok: bool


def gcd_sum_check(q: int, x_limit: int) -> GcdSumCheck:
    """sum over n <= X of gcd(q, n), against the bound d(q) * X."""
    if q < 1 or x_limit < 1:
        raise DomainError("need q, X >= 1")
    value = int(np.gcd(np.arange(1, x_limit + 1, dtype=np.int64), q).sum())
    bound = divisor_count_int(q) * x_limit
    return GcdSumCheck(value, bound, value <= bound)


@dataclass(frozen=True)
class CoprimeCountCheck:
    count: int
    main: float
    error: float
    ok: bool


def coprime_count_check(q: int, x_limit: int) -> CoprimeCountCheck:
    """#{n <= X : (n, q) = 1} = phi(q) X / q + O(d(q)) with implied constant 1."""
    if q < 1 or x_limit < 1:
        raise DomainError("need q, X >= 1")
    count = int((np.gcd(np.arange(1, x_limit + 1, dtype=np.int64), q) == 1).sum())
    phi = euler_phi_int(q)
    dq = divisor_count_int(q)
    # exact comparison: |q*count - phi*X| <= q*d(q)
    ok = abs(q * count - phi * x_limit) <= q * dq
    return CoprimeCountCheck(count, phi * x_limit / q, abs(count - phi * x_limit / q), ok)


def gcd_lemma_sweep(q_max: int, x_max: int) -> tuple[int, int]:
    """Exhaustive check of both counting lemmas over all q <= q_max, X <= x_max.

    Uses one cumulative pass per q.  Returns (gcd_failures, coprime_failures).
    """
    xs = np.arange(1, x_max + 1, dtype=np.int64)
    gcd_failures = 0
    coprime_failures = 0
    for q in range(1, q_max + 1):
        g = np.gcd(xs, q)
        dq = divisor_count_int(q)
        phi = euler_phi_int(q)
        sums = np.cumsum(g)
        gcd_failures += int(np.count_nonzero(sums > dq * xs))
        counts = np.cumsum(g == 1)
        coprime_failures += int(np.count_nonzero(np.abs(q * counts - phi * xs) > q * dq))
    return gcd_failures, coprime_failures


@dataclass(frozen=True)
class FourierCoefficient:
    """Truncated value of sum over (m, d) = 1 of (d/(pi m))^2 sin^2(pi m Lambda)."""

    d: int
    lam: float
    truncation: int
    value: float
    tail_bound: float


def default_truncation(d: int) -> int:
    return max(1_000_000, d * d * 1_000_000)


def fourier_coefficient(d: int, lam: float, truncation: int | None = None) -> FourierCoefficient:
    """Partial sum over m <= truncation plus the tail bound d^2 / (pi^2 M).

    Integer Lambda makes every sine vanish; that case returns exactly zero.
    """
    if d < 1:
        raise DomainError(f"need d >= 1, got {d}")
    m_cap = default_truncation(d) if truncation is None else int(truncation)
    if m_cap < 1:
        raise DomainError("truncation must be >= 1")
    if float(lam) == math.floor(lam):
        return FourierCoefficient(d, lam, m_cap, 0.0, 0.0)
    total = 0.0
    chunk = 1 << 20
    for start in range(1, m_cap + 1, chunk):
        ms = np.arange(start, min(start + chunk, m_cap + 1), dtype=np.int64)
        if d > 1:
            ms = ms[np.gcd(ms, d) == 1]
        if len(ms):
            sins = np.sin(np.pi * ms * lam)
            total += float(((d / (np.pi * ms)) ** 2 * sins * sins).sum())
    tail = d * d / (math.pi**2 * m_cap)
    return FourierCoefficient(d, lam, m_cap, total, tail)


def fourier_coefficient_exact(d: int, lam: Fraction) -> Fraction:
    """Closed form via the triangle-wave series: with T(x) = {x}(1-{x})/2,

        gamma(d, Lambda) = sum over t | d of mu(t) (d/t)^2 T(t Lambda).

    Exact rational output; the truncated evaluator is checked against this.
    """
    if d < 1:
        raise DomainError(f"need d >= 1, got {d}")
    lam = Fraction(lam)
    total = Fraction(0)
    fd = factorize_trial(d)
    for t in fd.divisors():
        mu_t = _mobius_of(t)
        if mu_t == 0:
            continue
        theta = t * lam - math.floor(t * lam)
        total += mu_t * Fraction(d, t) ** 2 * theta * (1 - theta) / 2
    return total


def _mobius_of(n: int) -> int:
    f = factorize_trial(n)
    if not f.is_squarefree:
        return 0
    return -1 if f.little_omega % 2 else 1


def incomplete_by_completion(a: int, q: int, x_limit: int) -> complex:
    """Cross-check path for d = 1, X <= q: expand the cutoff n <= X against
    additive characters mod q so the incomplete sum becomes an average of
    complete sums: (1/q) sum_h S(a, h; q) sum_{m <= X} e(-h m / q)."""
    if x_limit > q:
        raise DomainError("completion cross-check needs X <= q")
    total = 0j
    ms = np.arange(1, x_limit + 1)
    for h in range(q):
        coeff = complex(np.exp(-2j * math.pi * h * ms / q).sum()) / q
        total += coeff * kloosterman_complete(a, h, q)
    return total
