"""Exact integer kernel: prime tables, factorization, multiplicative functions.

Everything here is pure and exact.  The smallest-prime-factor table is built
once (4 bytes per entry) and shared read-only by all callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError, NotInvertibleError, RangeError

DEFAULT_SPF_LIMIT = 100_000_000


def prime_sieve(limit: int) -> np.ndarray:
    """All primes <= limit, ascending, as an int64 array."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    mask = np.ones(limit + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if mask[p]:
            mask[p * p :: p] = False
    return np.nonzero(mask)[0].astype(np.int64)


def primes_in(lo: float, hi: float) -> list[int]:
    """Primes p with lo <= p < hi."""
    if hi <= 2:
        return []
    ps = prime_sieve(math.ceil(hi) - 1)
    return [int(p) for p in ps if lo <= p < hi]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


class SpfTable:
    """Smallest-prime-factor table for 2 <= n <= limit, with spf[p] = p on primes.

    Uses a vectorized minimum sieve: each cell starts at its own index and is
    lowered to p for every prime p <= sqrt(limit) dividing it, so memory stays
    at 4*limit bytes with no auxiliary allocations.
    """

    def __init__(self, limit: int):
        if limit < 2:
            raise DomainError("spf table limit must be >= 2")
        if limit >= 2**32:
            raise RangeError("spf table entries are 32-bit; limit must be < 2^32")
        self.limit = int(limit)
        spf = np.arange(self.limit + 1, dtype=np.uint32)
        for p in range(2, math.isqrt(self.limit) + 1):
            if spf[p] == p:
                view = spf[p * p :: p]
                np.minimum(view, np.uint32(p), out=view)
        self.spf = spf

    def smallest_factor(self, n: int) -> int:
        if n < 2 or n > self.limit:
            raise RangeError(f"n={n} outside spf table range [2, {self.limit}]")
        return int(self.spf[n])


@dataclass(frozen=True)
class FactoredInteger:
    """A positive integer together with its full prime factorization.

    ``factors`` is a tuple of (prime, exponent) pairs with primes strictly
    increasing and exponents >= 1; the product of prime**exponent is ``value``.
    """

    value: int
    factors: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        prod = 1
        prev = 1
        for p, e in self.factors:
            if p <= prev or e < 1:
                raise DomainError(f"malformed factorization for {self.value}")
            prod *= p**e
            prev = p
        if prod != self.value or self.value < 1:
            raise DomainError(f"factorization does not recompose to {self.value}")

    @property
    def big_omega(self) -> int:
        return sum(e for _, e in self.factors)

    @property
    def little_omega(self) -> int:
        return len(self.factors)

    @property
    def is_squarefree(self) -> bool:
        return all(e == 1 for _, e in self.factors)

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    def divisors(self) -> list[int]:
        """All divisors, ascending."""
        divs = [1]
        for p, e in self.factors:
            divs = [d * p**k for d in divs for k in range(e + 1)]
        return sorted(divs)


def factorize(n: int, table: SpfTable) -> FactoredInteger:
    """Exact factorization of 1 <= n <= table.limit via the spf table."""
    if n < 1:
        raise DomainError(f"cannot factor n={n}")
    if n == 1:
        return FactoredInteger(1, ())
    if n > table.limit:
        raise RangeError(f"n={n} exceeds spf table limit {table.limit}")
    factors = []
    m = n
    while m > 1:
        p = int(table.spf[m])
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        factors.append((p, e))
    factors.sort()
    return FactoredInteger(n, tuple(factors))


def factorize_trial(n: int) -> FactoredInteger:
    """Table-free factorization by trial division (for small or one-off n)."""
    if n < 1:
        raise DomainError(f"cannot factor n={n}")
    factors = []
    m = n
    d = 2
    while d * d <= m:
        if m % d == 0:
            e = 0
            while m % d == 0:
                m //= d
                e += 1
            factors.append((d, e))
        d += 1 if d == 2 else 2
    if m > 1:
        factors.append((m, 1))
    return FactoredInteger(n, tuple(factors))


def multiplicative_values(n: FactoredInteger) -> tuple[int, int, int]:
    """(mu, phi, d) for n: Moebius value, Euler totient, divisor count.

    Satisfies phi(q)/q = sum_{d|q} mu(d)/d for every input, with the usual
    conventions at n = 1.
    """
    mu = 1
    phi = 1
    dcount = 1
    for p, e in n.factors:
        mu = 0 if e > 1 else -mu
        phi *= (p - 1) * p ** (e - 1)
        dcount *= e + 1
    return mu, phi, dcount


def mobius(n: FactoredInteger) -> int:
    return multiplicative_values(n)[0]


def euler_phi_int(n: int) -> int:
    """Euler totient of a plain integer (trial-division path)."""
    return multiplicative_values(factorize_trial(n))[1]


def divisor_count_int(n: int) -> int:
    return multiplicative_values(factorize_trial(n))[2]


def mod_inverse(a: int, m: int) -> int:
    """x in [0, m) with a*x = 1 (mod m); requires gcd(a, m) = 1."""
    if m < 1:
        raise DomainError(f"modulus must be positive, got {m}")
    try:
        return pow(a, -1, m)
    except ValueError:
        raise NotInvertibleError(
            f"{a} is not invertible modulo {m} (gcd = {math.gcd(a, m)})"
        ) from None


def is_rough(n: FactoredInteger, z: float) -> bool:
    """True iff every prime factor of n exceeds z (vacuously true for n = 1)."""
    return all(p > z for p in n.primes)


def crt_pair(r1: int, m1: int, r2: int, m2: int) -> tuple[int, int] | None:
    """Solve x = r1 (m1), x = r2 (m2); returns (x mod lcm, lcm) or None."""
    g = math.gcd(m1, m2)
    if (r2 - r1) % g != 0:
        return None
    l = m1 // g * m2
    t = ((r2 - r1) // g * mod_inverse(m1 // g, m2 // g)) % (m2 // g)
    return (r1 + m1 * t) % l, l


def count_in_class(lo, hi, residue: int, modulus: int) -> int:
    """#{n integer : lo < n <= hi, n = residue (mod modulus)} for real endpoints."""
    return _floor_div(hi - residue, modulus) - _floor_div(lo - residue, modulus)


def _floor_div(x, m: int) -> int:
    if isinstance(x, int):
        return x // m
    # exact for floats and Fractions alike; avoids off-by-one at integer edges
    return math.floor(Fraction(x) / m)
