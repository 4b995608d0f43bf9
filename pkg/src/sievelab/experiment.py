"""Desk-scale census harness: exact exceptional-set measures by breakpoint
sweep, trend scans over the normalized window density, and residue coverage.

For integer window length L the count of qualifying points in (x - L, x] is
constant on every unit interval [t, t+1), so per-class measures reduce to
exact sums of clipped interval lengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .arith import FactoredInteger, SpfTable, euler_phi_int, factorize, prime_sieve
from .errors import DomainError, RangeError
from .params import SieveParams


@dataclass(frozen=True)
class APWindow:
    """The window (x - L, x] intersected with the class a mod q."""

    q: int
    residue: int
    length: int
    x: float

    def __post_init__(self):
        if math.gcd(self.residue, self.q) != 1:
            raise DomainError(f"residue {self.residue} not coprime to {self.q}")
        if self.length < 1:
            raise DomainError("window length must be a positive integer")


@dataclass(frozen=True)
class CensusResult:
    q: int
    x_scale: float
    length: int
    z: float
    threshold: float
    per_class: dict[int, float]
    total: float
    average_density: float  # A = L / (phi(q) log X)

    @property
    def normalized(self) -> float:
        """total * A / (phi(q) X)."""
        phi = euler_phi_int(self.q)
        return self.total * self.average_density / (phi * self.x_scale)


@dataclass(frozen=True)
class RangeMasks:
    """Qualification masks for integers in [lo, hi]."""

    lo: int
    hi: int
    rough_almost_prime: np.ndarray  # z-rough and at most 2 prime factors
    squarefull_above_z: np.ndarray  # divisible by p^2 for some p > z
    prime: np.ndarray

    def index(self, n: int) -> int:
        return n - self.lo


def build_range_masks(lo: int, hi: int, z: float) -> RangeMasks:
    """Vectorized factorization counts over [lo, hi] via prime-power passes."""
    if lo < 1 or hi < lo:
        raise DomainError(f"bad range [{lo}, {hi}]")
    size = hi - lo + 1
    omega = np.zeros(size, dtype=np.int16)
    rem = np.arange(lo, hi + 1, dtype=np.int64)
    sq_above = np.zeros(size, dtype=bool)
    rough = np.ones(size, dtype=bool)

    def slice_of(step: int) -> slice:
        first = max(step, -(-lo // step) * step)
        return slice(first - lo, size, step)

    for p in prime_sieve(math.isqrt(hi)):
        p = int(p)
        power = p
        while power <= hi:
            sl = slice_of(power)
            omega[sl] += 1
            rem[sl] //= p
            if power == p * p and p > z:
                sq_above[sl] = True
            power *= p
        if p <= z:
            rough[slice_of(p)] = False
    leftovers = rem > 1
    omega[leftovers] += 1
    if z >= 2:
        for p in prime_sieve(math.floor(z)):
            p = int(p)
            if p > math.isqrt(hi):
                rough[slice_of(p)] = False
    prime = (omega == 1) & (np.arange(lo, hi + 1) > 1)
    if lo == 1:
        rough[0] = True  # n = 1 is z-rough for every z
    return RangeMasks(lo, hi, rough & (omega <= 2), sq_above, prime)


def window_count(window: APWindow, z: float, table: SpfTable) -> int:
    """#{n in (x - L, x] : n = a (q), z-rough, at most two prime factors}."""
    lo = math.floor(window.x - window.length)
    hi = math.floor(window.x)
    if hi > table.limit:
        raise RangeError(f"window end {hi} beyond table limit {table.limit}")
    count = 0
    first = lo + 1 + ((window.residue - (lo + 1)) % window.q)
    for n in range(first, hi + 1, window.q):
        if n < 1 or n <= window.x - window.length or n > window.x:
            continue
        f = factorize(n, table) if n > 1 else FactoredInteger(1, ())
        if f.big_omega <= 2 and all(p > z for p in f.primes):
            count += 1
    return count


def _class_measures(
    qual: np.ndarray,
    lo: int,
    q: int,
    x_scale,
    length: int,
    threshold: float,
    require_present: bool = False,
) -> dict[int, float]:
    """Measure of {x in [X, 2X] : window count <= threshold} per reduced class.

    With require_present the qualifying condition flips to 'count >= 1 fails',
    i.e. the measure where the window misses the set entirely.
    """
    x_lo = Fraction(x_scale)
    x_hi = 2 * x_lo
    t_first = math.floor(x_lo)
    t_last = math.ceil(x_hi) - 1
    ns = np.arange(lo, lo + len(qual), dtype=np.int64)
    out: dict[int, float] = {}
    for a in range(q):
        if math.gcd(a, q) != 1:
            continue
        cls = qual & (ns % q == a)
        cum = np.concatenate([[0], np.cumsum(cls, dtype=np.int64)])
        # count on [t, t+1) is sum of qualifying n in [t-L+1, t]
        measure = Fraction(0)
        ts = np.arange(t_first, t_last + 1, dtype=np.int64)
        hi_idx = np.clip(ts - lo + 1, 0, len(qual))
        lo_idx = np.clip(ts - length - lo + 1, 0, len(qual))
        counts = cum[hi_idx] - cum[lo_idx]
        if require_present:
            bad = counts < 1
        else:
            bad = counts <= threshold
        if x_lo.denominator == 1 and x_hi.denominator == 1:
            # integer endpoints: every unit piece [t, t+1) lies inside [X, 2X]
            measure = Fraction(int(np.count_nonzero(bad)))
        else:
            for t in ts[bad]:
                left = max(Fraction(int(t)), x_lo)
                right = min(Fraction(int(t) + 1), x_hi)
                if right > left:
                    measure += right - left
        out[a] = float(measure)
    return out


def exceptional_measure(
    q: int,
    x_scale,
    length: int,
    z: float,
    threshold: float,
    masks: RangeMasks | None = None,
) -> CensusResult:
    """Exact Lebesgue measure per class of positions whose window holds at
    most ``threshold`` z-rough almost primes."""
    if length < 1:
        raise DomainError("length must be a positive integer")
    lo = max(1, math.floor(x_scale) - length)
    hi = math.ceil(2 * x_scale)
    if masks is None:
        masks = build_range_masks(lo, hi, z)
    elif masks.lo > lo or masks.hi < hi:
        raise RangeError("supplied masks do not cover the sweep range")
    qual = masks.rough_almost_prime
    per_class = _class_measures(qual, masks.lo, q, x_scale, length, threshold)
    avg = length / (euler_phi_int(q) * math.log(x_scale))
    return CensusResult(q, float(x_scale), length, z, threshold, per_class,
                        float(sum(per_class.values())), avg)


def squarefull_window_measure(
    q: int, x_scale, length: int, z: float, masks: RangeMasks | None = None
) -> CensusResult:
    """Measure per class of positions whose window contains some n with
    p^2 | n for a prime p > z (the squarefull exclusion set)."""
    lo = max(1, math.floor(x_scale) - length)
    hi = math.ceil(2 * x_scale)
    if masks is None:
        masks = build_range_masks(lo, hi, z)
    qual = masks.squarefull_above_z
    missing = _class_measures(qual, masks.lo, q, x_scale, length, 0.0,
                              require_present=True)
    phi = euler_phi_int(q)
    per_class = {a: float(x_scale) - m for a, m in missing.items()}
    avg = length / (phi * math.log(x_scale))
    return CensusResult(q, float(x_scale), length, z, 0.0, per_class,
                        float(sum(per_class.values())), avg)


@dataclass(frozen=True)
class TrendRow:
    average_density: float
    length: int
    total_measure: float
    normalized: float
    degenerate: bool


def trend_scan(
    q: int,
    x_scale,
    z: float,
    coefficient: float,
    density_grid: list[float],
    masks: RangeMasks | None = None,
) -> list[TrendRow]:
    """Tabulate measure * A / (phi(q) X) over a grid of target densities A.

    L is rounded to a positive integer (recorded); threshold is c*A.  Rows
    with threshold >= L are degenerate (the measure saturates at X).
    """
    phi = euler_phi_int(q)
    lengths = [max(1, round(a * phi * math.log(x_scale))) for a in density_grid]
    lo = max(1, math.floor(x_scale) - max(lengths))
    hi = math.ceil(2 * x_scale)
    if masks is None:
        masks = build_range_masks(lo, hi, z)
    rows = []
    for a_target, length in zip(density_grid, lengths):
        threshold = coefficient * a_target
        census = exceptional_measure(q, x_scale, length, z, threshold, masks=masks)
        rows.append(TrendRow(
            average_density=a_target,
            length=length,
            total_measure=census.total,
            normalized=census.total * a_target / (phi * float(x_scale)),
            degenerate=threshold >= length,
        ))
    return rows


@dataclass(frozen=True)
class CoverageResult:
    q: int
    bound: int
    covered: int
    total: int
    witnesses: dict[int, int | None]

    @property
    def fraction(self) -> float:
        return self.covered / self.total


def coverage_scan(q: int, psi_value: float) -> CoverageResult:
    """Least q^(1/8)-rough almost prime <= psi * phi(q) * log q in each class."""
    if q < 2:
        raise DomainError("need q >= 2 for a nontrivial residue scan")
    phi = euler_phi_int(q)
    bound = math.floor(psi_value * phi * math.log(q))
    if bound < 1:
        raise DomainError("coverage bound below 1; increase psi")
    z = q ** (1.0 / 8.0)
    masks = build_range_masks(1, bound, z)
    qual = masks.rough_almost_prime
    witnesses: dict[int, int | None] = {}
    covered = 0
    for a in range(q):
        if math.gcd(a, q) != 1:
            continue
        start = a if a >= 1 else a + q
        witness = None
        for n in range(start, bound + 1, q):
            if n > 1 and qual[n - 1]:  # n = 1 is no product of primes
                witness = n
                break
        witnesses[a] = witness
        if witness is not None:
            covered += 1
    return CoverageResult(q, bound, covered, phi, witnesses)


def prime_census(
    q: int, x_scale, length: int, masks: RangeMasks | None = None
) -> CensusResult:
    """Exceptional measure for the prime variant: windows with no prime in
    the class accumulate measure (count >= 1 required)."""
    lo = max(1, math.floor(x_scale) - length)
    hi = math.ceil(2 * x_scale)
    if masks is None:
        masks = build_range_masks(lo, hi, 2.0)
    per_class = _class_measures(masks.prime, masks.lo, q, x_scale, length, 0.0,
                                require_present=True)
    avg = length / (euler_phi_int(q) * math.log(x_scale))
    return CensusResult(q, float(x_scale), length, 0.0, 0.0, per_class,
                        float(sum(per_class.values())), avg)
