import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad

from sievelab.arith import factorize_trial
from sievelab.errors import DomainError, ValidationError
from sievelab.params import SieveParams
from sievelab.variance import (
    dispersion_bracket_probe,
    divisor_square_sum,
    fraction_difference_check,
    variance_decomposition,
    weight_term_values,
    weighted_remainder,
    _coprime_multiple_count,
)
from sievelab.weights import (
    KIND_COMBINED_LOWER,
    KIND_CORRECTION,
    KIND_SMALL_UPPER,
    WeightSystem,
    build_weight_family,
    enumerate_support,
)
from sievelab.windows import smooth_window

DESK = SieveParams.desk()
WIDE = smooth_window("wide")


def test_window_sandwich_and_integral():
    assert WIDE.sandwich_holds()
    assert WIDE.g_hat_0_error < 1e-8
    assert abs(WIDE.g_hat_0 - 2.0) < 1e-9  # symmetric half-ramps add 0.25 each
    us = np.linspace(1.0, 2.0, 101)
    assert np.all(WIDE(us) == 1.0)
    # spline antiderivative vs adaptive quadrature
    for u1, u2 in ((0.6, 0.9), (0.5, 3.0), (2.4, 2.9)):
        ref = quad(lambda t: WIDE(t), u1, u2, limit=200)[0]
        assert abs(WIDE.integral(u1, u2) - ref) < 1e-9


def test_weighted_remainder_trivial_cases():
    lone = WeightSystem(KIND_COMBINED_LOWER, {1: 1}, DESK)
    empty = WeightSystem(KIND_CORRECTION, {}, DESK)
    params = SieveParams.desk(q=1, length=50)
    # integer x, q = 1: the window holds exactly L integers
    assert weighted_remainder(1000, 1, lone, empty, params) == 0
    params2 = SieveParams.desk(q=2, length=40, x=1.0e4)
    two = WeightSystem(KIND_COMBINED_LOWER, {1: 1, 3: -1}, params2)
    # d = 3, q = 2, a = 1: count n = 3 mod 6 in (x-40, x]
    val = weighted_remainder(1000, 1, two, WeightSystem(KIND_CORRECTION, {}, params2), params2)
    direct = Fraction(0)
    for d, w in ((1, 1), (3, -1)):
        cnt = sum(1 for n in range(961, 1001) if n % 2 == 1 and n % d == 0)
        direct += w * (cnt - Fraction(40, 2 * d))
    assert val == direct


def test_weighted_remainder_sparse_vs_naive_exact():
    fam = build_weight_family(DESK)
    params = SieveParams.desk(q=7, length=210)
    rng = np.random.Generator(np.random.Philox(3))
    for _ in range(20):
        x = int(rng.integers(10_000, 40_000))
        a = int(rng.choice([1, 2, 3, 4, 5, 6]))
        sparse = weighted_remainder(x, a, fam.lower, fam.correction, params)
        support = set(fam.lower.entries) | set(fam.correction.entries)
        naive = Fraction(0)
        for d in support:
            if math.gcd(d, 7) != 1:
                continue
            w = fam.lower.entries.get(d, 0) - fam.correction.entries.get(d, 0)
            cnt = sum(1 for n in range(x - 210 + 1, x + 1)
                      if n % 7 == a % 7 and n % d == 0)
            naive += w * (cnt - Fraction(210, 7 * d))
        assert sparse == naive


def slow_lhs(coeffs, q, length, x_scale, window):
    lo_u, hi_u = window.support
    x_lo, x_hi = lo_u * x_scale, hi_u * x_scale
    mu = sum(a / d for d, a in coeffs.items()) * length / q
    total = 0.0
    t = math.floor(x_lo)
    while t < x_hi:
        seg_lo = max(float(t), x_lo)
        seg_hi = min(float(t + 1), x_hi)
        if seg_hi > seg_lo:
            for a in range(q):
                if math.gcd(a, q) != 1:
                    continue
                cnt = 0.0
                for n in range(t - length + 1, t + 1):
                    if n % q == a:
                        cnt += sum(v for d, v in coeffs.items() if n % d == 0 and n >= d)
                val = (cnt - mu) ** 2
                if val:
                    piece = quad(lambda u: window(u / x_scale), seg_lo, seg_hi,
                                 limit=100)[0]
                    total += val * piece
        t += 1
    return total


def test_lhs_matches_slow_quadrature_oracle():
    coeffs = {1: 0.7, 2: -0.4, 3: 1.1, 5: -0.9}
    q, length, x_scale = 1, 20, 900.0
    from sievelab.variance import _lhs_breakpoint_sweep

    fast = _lhs_breakpoint_sweep(coeffs, q, length, x_scale, WIDE)
    slow = slow_lhs(coeffs, q, length, x_scale, WIDE)
    assert abs(fast - slow) < 1e-5 * max(1.0, abs(slow))

    coeffs = {1: 1.0, 5: -1.0, 7: 0.5}
    q, length, x_scale = 3, 21, 1200.0
    coeffs = {d: v for d, v in coeffs.items() if math.gcd(d, q) == 1}
    fast = _lhs_breakpoint_sweep(coeffs, q, length, x_scale, WIDE)
    slow = slow_lhs(coeffs, q, length, x_scale, WIDE)
    assert abs(fast - slow) < 1e-5 * max(1.0, abs(slow))


def test_decomposition_zero_coefficients():
    rep = variance_decomposition({}, 3, 30, 3000.0, WIDE)
    assert rep.lhs == rep.s1 == rep.s2 == rep.s3 == 0.0
    assert rep.ok


def test_decomposition_validations():
    with pytest.raises(ValidationError):
        variance_decomposition({3: 1.0}, 3, 30, 3000.0, WIDE)
    with pytest.raises(ValidationError):
        variance_decomposition({1: 1.0}, 1, 2000, 3000.0, WIDE)


def test_decomposition_singleton_grid():
    # d = 1 only: every (q, L, X) on the fixed grid stays within budget
    for q in (1, 3, 4, 5):
        for length in (24, 60, 120, 180, 240):
            rep = variance_decomposition({1: 1.0}, q, length, 3000.0, WIDE)
            assert rep.ok, (q, length, rep.residual, rep.error_budget)


def test_decomposition_seeded_random():
    rng = np.random.Generator(np.random.Philox(99))
    for _ in range(5):
        q = int(rng.choice([1, 3, 5]))
        x_scale = float(rng.integers(2000, 6001))
        length = int(rng.integers(20, 120))
        coeffs = {d: float(rng.uniform(-1, 1)) for d in range(1, 11)
                  if math.gcd(d, q) == 1}
        rep = variance_decomposition(coeffs, q, length, x_scale, WIDE)
        assert rep.ok
        assert abs(rep.residual) < rep.error_budget


def test_coprime_multiple_count():
    for e in (1, 2, 6, 7):
        for q in (1, 6, 10):
            for y in (100, 999):
                direct = sum(1 for n in range(1, y + 1)
                             if n % e == 0 and math.gcd(n, q) == 1)
                assert _coprime_multiple_count(e, q, y) == direct


def test_divisor_square_sum_sieve_vs_pair_expansion():
    weights = dict(enumerate_support(KIND_SMALL_UPPER,
                                     SieveParams.small_sieve_preset(10, 1.0e4, 3)).entries)
    for q in (1, 6):
        direct = divisor_square_sum(weights, q, 100_000)
        expanded = divisor_square_sum(weights, q, 100_000, sieve_cap=10)
        assert direct == expanded


def test_weight_term_values():
    preset = SieveParams.small_sieve_preset(10, 1.0e4, 3)
    up = enumerate_support(KIND_SMALL_UPPER, preset)
    rep = weight_term_values(up, 1, 100, 1.0e5, y_big=10**6)
    # naive double loop for the diagonal sum at Y = 1e5
    y = int(3 * 1.0e5)
    acc = 0
    wts = up.entries
    naive = 0
    for n in range(1, 100_001):
        s = sum(v for d, v in wts.items() if n % d == 0)
        naive += s * s
    assert divisor_square_sum(wts, 1, 100_000) == naive
    assert rep.s3_values[10**6] == divisor_square_sum(wts, 1, 10**6)
    # integer multiples of q*d for every support divisor kill the Fourier side
    lone = WeightSystem(KIND_SMALL_UPPER, {1: 1, 2: -1}, preset)
    rep0 = weight_term_values(lone, 1, 4, 1.0e4)
    assert rep0.s1_value == 0.0
    # singleton support: diagonal sum counts coprime integers
    single = WeightSystem(KIND_SMALL_UPPER, {1: 1}, preset)
    rep1 = weight_term_values(single, 6, 10, 1.0e4, y_big=500)
    assert rep1.s3_values[500] == sum(1 for n in range(1, 501) if math.gcd(n, 6) == 1)


def test_fraction_identity_fixed_and_degenerate():
    r = fraction_difference_check(1, 1, 5, 3, 2, 7, 11, 13)
    assert r.ok and r.delta == 1 and r.u == 22 and r.h == 1
    assert r.lhs_mod_one == Fraction(11, 30)
    # symmetric degenerate tuples over a small admissible box
    checked = 0
    for l in (1, 2, 3):
        for m1 in (1, 2, 5):
            for n1 in (1, 3, 4):
                for n2 in (1, 7, 11):
                    for m2 in (1, 13):
                        if math.gcd(m1 * n1, n2) != 1:
                            continue
                        r = fraction_difference_check(l, l, m1, n1, n1, n2, n2, m2)
                        assert r.ok and r.delta == 0
                        assert r.lhs_mod_one == 0 and r.rhs_mod_one == 0
                        checked += 1
    assert checked > 50


def test_fraction_identity_h_consistency():
    rng = np.random.Generator(np.random.Philox(8))
    seen = 0
    while seen < 500:
        vals = [int(v) for v in rng.integers(1, 101, size=8)]
        d_unit = int(rng.integers(1, 11))
        try:
            r = fraction_difference_check(*vals, d_unit)
        except DomainError:
            continue
        g1 = math.gcd(vals[3], vals[6])
        g2 = math.gcd(vals[4], vals[5])
        assert r.h == r.delta * g1 * g2
        assert r.ok
        seen += 1


def test_fraction_identity_domain_errors():
    with pytest.raises(DomainError):
        fraction_difference_check(1, 1, 2, 3, 5, 3, 7, 1)  # (m1 n1, n2) > 1
    with pytest.raises(DomainError):
        fraction_difference_check(1, 1, 3, 5, 7, 11, 13, 6)  # (d m2, m1 n1 n1t) > 1


def test_bracket_probe_trivials():
    # all-zero coefficients
    probe = dispersion_bracket_probe(4, 4, 4, 4, 1, 1, 1, 5, 1, 5000.0,
                                     coefficient=lambda *a: 0.0)
    assert probe.quadruple_sum == 0.0
    # incompatible congruences leave only the negative main term
    win = smooth_window("dyadic")
    probe2 = dispersion_bracket_probe(3, 1, 3, 1, 2, 2, 1, 5, 1, 4000.0, window=win)
    assert probe2.tuples > 0


def test_bracket_probe_incompatible_bracket_value():
    # e = e2 = 2 with odd a*q makes r = -aq (2k) vs r = 0 (2j) incompatible
    win = smooth_window("dyadic")
    from sievelab.variance import crt_pair

    assert crt_pair(1, 2, 0, 2) is None


def test_bracket_probe_example_scale():
    probe = dispersion_bracket_probe(8, 8, 8, 8, 1, 1, 1, 5, 1, 1.0e4)
    assert probe.tuples > 0
    assert probe.ratio <= 100.0


def test_bracket_probe_validations():
    with pytest.raises(DomainError):
        dispersion_bracket_probe(4, 4, 4, 4, 1, 1, 0, 5, 1, 5000.0)
    with pytest.raises(DomainError):
        dispersion_bracket_probe(4, 4, 4, 4, 5, 1, 1, 5, 1, 5000.0)
    with pytest.raises(DomainError):
        dispersion_bracket_probe(4, 4, 4, 4, 1, 1, 1, 5, 7, 5000.0)
