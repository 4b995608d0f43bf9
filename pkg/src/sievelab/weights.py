"""Combinatorial sieve weight systems and their sandwich inequalities.

Two prime ranges are in play: the linear-sieve range [w, z) with level D and
truncation exponent 2, and the small-prime range (1, w) with level E and
truncation exponent beta.  Support elements are squarefree products
p_1 > p_2 > ... > p_r whose prefix products satisfy

    p_1 ... p_m * p_m^exponent < level

at every m of the sign's parity (odd m for upper systems, even m for lower).
Product systems combine one element from each range; the correction system
aggregates the scaled upper systems over dyadic prime blocks.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .arith import FactoredInteger, SpfTable, factorize_trial, primes_in
from .errors import (
    ConsistencyError,
    DomainError,
    ResourceCapError,
    SplitInfeasibleError,
)
from .params import SieveParams

KIND_LINEAR_UPPER = "linear_upper"
KIND_LINEAR_LOWER = "linear_lower"
KIND_LINEAR_UPPER_SCALED = "linear_upper_scaled"
KIND_LINEAR_LOWER_SCALED = "linear_lower_scaled"
KIND_SMALL_UPPER = "small_upper"
KIND_SMALL_LOWER = "small_lower"
KIND_COMBINED_LOWER = "combined_lower"
KIND_COMBINED_UPPER = "combined_upper"
KIND_CORRECTION = "correction"

_LINEAR_KINDS = {
    KIND_LINEAR_UPPER: +1,
    KIND_LINEAR_LOWER: -1,
    KIND_LINEAR_UPPER_SCALED: +1,
    KIND_LINEAR_LOWER_SCALED: -1,
}
_SMALL_KINDS = {KIND_SMALL_UPPER: +1, KIND_SMALL_LOWER: -1}
_SCALED_KINDS = {KIND_LINEAR_UPPER_SCALED, KIND_LINEAR_LOWER_SCALED}

DEFAULT_SUPPORT_CAP = 2_000_000


@dataclass(frozen=True)
class WeightSystem:
    """Sparse map from squarefree support elements to small integer weights."""

    kind: str
    entries: dict[int, int]
    params: SieveParams
    scale: int | None = None

    def weight(self, d: int) -> int:
        return self.entries.get(d, 0)

    def support(self) -> list[int]:
        return sorted(self.entries)

    def divisor_sum(self, n: FactoredInteger) -> int:
        """sum of weights over the divisors of n."""
        return sum(self.entries.get(d, 0) for d in n.divisors())


def _prefix_conditions_hold(
    primes_desc: list[int], sign: int, level: float, exponent: int
) -> bool:
    prod = 1
    for m, p in enumerate(primes_desc, start=1):
        prod *= p
        if ((m % 2 == 1) == (sign > 0)) and not prod * p**exponent < level:
            return False
    return True


def _check_sign(sign: int) -> int:
    if sign not in (+1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    return sign


def in_linear_support(
    d: FactoredInteger,
    sign: int,
    params: SieveParams,
    scale: int | None = None,
) -> bool:
    """Membership of d in the linear-sieve support (level D, or D/scale).

    Primes are read in decreasing order; the prefix condition with exponent 2
    is enforced at every m with (-1)^(m+1) = sign.  d = 1 always belongs.
    """
    _check_sign(sign)
    if not d.is_squarefree:
        raise DomainError(f"{d.value} is not squarefree")
    for p in d.primes:
        if not params.w_level <= p < params.z:
            raise DomainError(
                f"prime {p} of {d.value} outside linear range "
                f"[{params.w_level}, {params.z})"
            )
    level = params.level_d / scale if scale else params.level_d
    return _prefix_conditions_hold(sorted(d.primes, reverse=True), sign, level, 2)


def in_small_support(e: FactoredInteger, sign: int, params: SieveParams) -> bool:
    """Membership of e in the small-prime support (level E, exponent beta)."""
    _check_sign(sign)
    if not e.is_squarefree:
        raise DomainError(f"{e.value} is not squarefree")
    for p in e.primes:
        if not 2 <= p < params.w_level:
            raise DomainError(
                f"prime {p} of {e.value} outside small range [2, {params.w_level})"
            )
    return _prefix_conditions_hold(
        sorted(e.primes, reverse=True), sign, params.level_e, params.beta
    )


def _dfs_support(
    primes_desc: list[int], sign: int, level: float, exponent: int, cap: int
) -> dict[int, int]:
    entries = {1: 1}
    constrained = lambda m: (m % 2 == 1) == (sign > 0)

    def rec(start: int, prod: int, depth: int, mu: int):
        for i in range(start, len(primes_desc)):
            p = primes_desc[i]
            if constrained(depth + 1) and not prod * p * p**exponent < level:
                continue
            entries[prod * p] = -mu
            if len(entries) > cap:
                raise ResourceCapError(
                    f"support enumeration exceeded cap {cap}",
                    count_estimate=len(entries),
                )
            rec(i + 1, prod * p, depth + 1, -mu)

    rec(0, 1, 0, 1)
    return entries


def dyadic_scales(params: SieveParams) -> list[int]:
    """Powers of two P with z <= P < y."""
    scales = []
    p = 1
    while p < params.z:
        p *= 2
    while p < params.y:
        scales.append(p)
        p *= 2
    return scales


def enumerate_support(
    kind: str,
    params: SieveParams,
    scale: int | None = None,
    cap: int = DEFAULT_SUPPORT_CAP,
) -> WeightSystem:
    """Enumerate the full sparse weight map for one system kind.

    For the elementary kinds the weight at d is mu(d) where membership
    holds; the combined and correction kinds are assembled from their
    constituents.  Raises ResourceCapError when the support exceeds ``cap``.
    """
    if kind in _LINEAR_KINDS:
        if kind in _SCALED_KINDS and scale is None:
            raise DomainError(f"kind {kind} requires a dyadic scale")
        level = params.level_d / scale if kind in _SCALED_KINDS else params.level_d
        ps = sorted(primes_in(params.w_level, params.z), reverse=True)
        entries = _dfs_support(ps, _LINEAR_KINDS[kind], level, 2, cap)
        return WeightSystem(kind, entries, params, scale if kind in _SCALED_KINDS else None)
    if kind in _SMALL_KINDS:
        ps = sorted(primes_in(2, params.w_level), reverse=True)
        entries = _dfs_support(ps, _SMALL_KINDS[kind], params.level_e, params.beta, cap)
        return WeightSystem(kind, entries, params)
    if kind == KIND_COMBINED_LOWER:
        return compose_systems(build_linear_systems(params, cap=cap),
                               build_small_systems(params, cap=cap),
                               params, cap=cap).lower
    if kind == KIND_COMBINED_UPPER:
        if scale is None:
            raise DomainError("combined_upper requires a dyadic scale")
        composed = compose_systems(build_linear_systems(params, scales=[scale], cap=cap),
                                   build_small_systems(params, cap=cap),
                                   params, cap=cap)
        return composed.upper_by_scale[scale]
    if kind == KIND_CORRECTION:
        composed = compose_systems(build_linear_systems(params, cap=cap),
                                   build_small_systems(params, cap=cap),
                                   params, cap=cap)
        return composed.correction
    raise DomainError(f"unknown weight system kind: {kind}")


@dataclass(frozen=True)
class LinearSystems:
    upper: WeightSystem
    lower: WeightSystem
    upper_scaled: dict[int, WeightSystem]


@dataclass(frozen=True)
class SmallSystems:
    upper: WeightSystem
    lower: WeightSystem


@dataclass(frozen=True)
class ComposedSystems:
    lower: WeightSystem                    # lower-bound product weights
    upper_by_scale: dict[int, WeightSystem]  # per-scale upper product weights
    correction: WeightSystem               # dyadic aggregation of the uppers


def build_linear_systems(
    params: SieveParams,
    scales: list[int] | None = None,
    cap: int = DEFAULT_SUPPORT_CAP,
) -> LinearSystems:
    scales = dyadic_scales(params) if scales is None else scales
    return LinearSystems(
        upper=enumerate_support(KIND_LINEAR_UPPER, params, cap=cap),
        lower=enumerate_support(KIND_LINEAR_LOWER, params, cap=cap),
        upper_scaled={
            p: enumerate_support(KIND_LINEAR_UPPER_SCALED, params, scale=p, cap=cap)
            for p in scales
        },
    )


def build_small_systems(params: SieveParams, cap: int = DEFAULT_SUPPORT_CAP) -> SmallSystems:
    return SmallSystems(
        upper=enumerate_support(KIND_SMALL_UPPER, params, cap=cap),
        lower=enumerate_support(KIND_SMALL_LOWER, params, cap=cap),
    )


def _require_same_params(params: SieveParams, *systems: WeightSystem):
    for s in systems:
        if s.params != params:
            raise ConsistencyError(
                f"system of kind {s.kind} was built from different parameters"
            )


def compose_systems(
    linear: LinearSystems,
    small: SmallSystems,
    params: SieveParams,
    cap: int = DEFAULT_SUPPORT_CAP,
) -> ComposedSystems:
    """Build the product and correction systems from elementary ones.

    Lower entries at d = d_lin * d_small are
    lu*sl + ll*su - lu*su over the two constituent weights (the factor
    ranges are disjoint so the splitting is unique).  Upper entries per
    scale P are lu_P * su.  The correction at d = e*p sums the scale-P
    upper weight of the cofactor e over primes p in [P, 2P) for every
    dyadic P in [z, y).
    """
    _require_same_params(params, linear.upper, linear.lower, small.upper, small.lower,
                         *linear.upper_scaled.values())

    lin_support = sorted(set(linear.upper.entries) | set(linear.lower.entries))
    small_support = sorted(set(small.upper.entries) | set(small.lower.entries))

    lower_entries: dict[int, int] = {}
    for dl in lin_support:
        lu = linear.upper.entries.get(dl, 0)
        ll = linear.lower.entries.get(dl, 0)
        for ds in small_support:
            su = small.upper.entries.get(ds, 0)
            sl = small.lower.entries.get(ds, 0)
            v = lu * sl + ll * su - lu * su
            if v:
                lower_entries[dl * ds] = v
    if len(lower_entries) > cap:
        raise ResourceCapError("combined lower support exceeded cap",
                               count_estimate=len(lower_entries))

    upper_by_scale: dict[int, WeightSystem] = {}
    for scale, lam in linear.upper_scaled.items():
        entries: dict[int, int] = {}
        for dl, lv in lam.entries.items():
            for ds, sv in small.upper.entries.items():
                v = lv * sv
                if v:
                    entries[dl * ds] = v
        upper_by_scale[scale] = WeightSystem(KIND_COMBINED_UPPER, entries, params, scale)

    correction_entries: dict[int, int] = {}
    for scale, upper in sorted(upper_by_scale.items()):
        block_primes = primes_in(scale, 2 * scale)
        for p in block_primes:
            for e, v in upper.entries.items():
                d = e * p
                correction_entries[d] = correction_entries.get(d, 0) + v
                if len(correction_entries) > cap:
                    raise ResourceCapError("correction support exceeded cap",
                                           count_estimate=len(correction_entries))
    correction_entries = {d: v for d, v in correction_entries.items() if v}

    return ComposedSystems(
        lower=WeightSystem(KIND_COMBINED_LOWER, lower_entries, params),
        upper_by_scale=upper_by_scale,
        correction=WeightSystem(KIND_CORRECTION, correction_entries, params),
    )


@dataclass(frozen=True)
class WeightFamily:
    params: SieveParams
    linear: LinearSystems
    small: SmallSystems
    composed: ComposedSystems

    @property
    def lower(self) -> WeightSystem:
        return self.composed.lower

    @property
    def upper_by_scale(self) -> dict[int, WeightSystem]:
        return self.composed.upper_by_scale

    @property
    def correction(self) -> WeightSystem:
        return self.composed.correction


def build_weight_family(params: SieveParams, cap: int = DEFAULT_SUPPORT_CAP) -> WeightFamily:
    linear = build_linear_systems(params, cap=cap)
    small = build_small_systems(params, cap=cap)
    return WeightFamily(params, linear, small, compose_systems(linear, small, params, cap=cap))


def richert_weight(n: FactoredInteger, params: SieveParams) -> float:
    """1 - (1/eta) * sum over distinct primes p | n with z <= p < y of
    (1 - log p / log y)."""
    acc = 0.0
    logy = math.log(params.y)
    for p in n.primes:
        if params.z <= p < params.y:
            acc += 1.0 - math.log(p) / logy
    return 1.0 - acc / params.eta


@dataclass(frozen=True)
class SandwichResult:
    lower: int
    indicator: int
    upper: int
    ok: bool


def sandwich_check(
    n: FactoredInteger,
    lower_system: WeightSystem,
    upper_system: WeightSystem,
    params: SieveParams,
) -> SandwichResult:
    """Divisor-sum sandwich around the roughness indicator of n."""
    _require_same_params(params, lower_system, upper_system)
    lower = lower_system.divisor_sum(n)
    upper = upper_system.divisor_sum(n)
    indicator = 1 if all(p > params.z for p in n.primes) else 0
    return SandwichResult(lower, indicator, upper, lower <= indicator <= upper)


def sandwich_sweep(
    limit: int,
    lower_system: WeightSystem,
    upper_systems: dict[int, WeightSystem],
    params: SieveParams,
) -> dict[int, int]:
    """Vectorized sandwich check for every 1 <= n <= limit.

    Returns {scale: number of failing n} including the lower inequality
    under scale key 0; an all-zero dict means the sandwich holds everywhere.
    """
    lower = np.zeros(limit + 1, dtype=np.int64)
    for d, v in lower_system.entries.items():
        if d <= limit:
            lower[d::d] += v

    rough = np.ones(limit + 1, dtype=bool)
    for p in primes_in(2, params.z + 1):
        if p <= params.z:
            rough[p::p] = False
    rough[0] = False
    indicator = rough.astype(np.int64)

    failures = {0: int(np.count_nonzero(lower[1:] > indicator[1:]))}
    for scale, upper_system in sorted(upper_systems.items()):
        upper = np.zeros(limit + 1, dtype=np.int64)
        for d, v in upper_system.entries.items():
            if d <= limit:
                upper[d::d] += v
        failures[scale] = int(np.count_nonzero(indicator[1:] > upper[1:]))
    return failures


def well_factor_split(
    d: FactoredInteger,
    params: SieveParams,
    scale: int,
    bound_d1: float,
    sign: int = +1,
) -> tuple[int, int]:
    """Split d = d1*d2 with d1 <= bound_d1 and d2 <= z*(D/scale)/bound_d1.

    Greedy prefix assignment over the decreasing prime list: each prime goes
    to d1 while it fits, else to d2.  Raises SplitInfeasibleError when the
    greedy result violates either bound.
    """
    if bound_d1 < 1:
        raise DomainError("bound_d1 must be >= 1")
    level = params.level_d / scale
    if level / bound_d1 < params.z:
        raise DomainError(
            "no complementary bound: D/(scale*bound_d1) must be >= z"
        )
    if not in_linear_support(d, sign, params, scale=scale):
        raise DomainError(f"{d.value} is not in the scale-{scale} support")
    bound_d2 = params.z * level / bound_d1
    d1 = d2 = 1
    for p in sorted(d.primes, reverse=True):
        if d1 * p <= bound_d1:
            d1 *= p
        else:
            d2 *= p
    if d1 > bound_d1 or d2 > bound_d2:
        raise SplitInfeasibleError(
            f"greedy split of {d.value} gives ({d1}, {d2}), "
            f"bounds ({bound_d1}, {bound_d2})"
        )
    return d1, d2


def write_weights_csv(systems: list[WeightSystem], path: str) -> None:
    """Rows (d, kind, value), sorted by kind then d."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["d", "kind", "value"])
        for system in systems:
            kind = system.kind if system.scale is None else f"{system.kind}[{system.scale}]"
            for d in system.support():
                writer.writerow([d, kind, system.entries[d]])
