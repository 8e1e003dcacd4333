"""Truncated local ring arithmetic: spec examples, oracles, invariants."""

import random

import pytest

from padicl.errors import (EnumerationCapError, NonUnitError, PrecisionError,
                           SpecMismatchError, ValuationError)
from padicl.ring import (RingSpec, RingElem, closed_point_count,
                         enumerate_teichmuller_points, exact_div_int, from_int,
                         pi_power, teichmuller_lift, closed_points)


def test_inverse_of_two_p3_N4():
    R = RingSpec(3, N=4)
    assert from_int(R, 2).inv() == from_int(R, 41)  # 2 * 41 = 82 = 1 mod 81


def test_div_by_pi_power_reduces_precision():
    R = RingSpec(3, N=4)
    out = from_int(R, 9).div_by_pi_power(2)
    assert out.coords[0] == 1
    assert out.prec == 2  # precision p^2 recorded, never silently full


def test_mul_matches_integer_oracle_p2():
    R = RingSpec(2, N=11)
    rng = random.Random(0)
    for _ in range(50):
        x, y = rng.randrange(2 ** 11), rng.randrange(2 ** 11)
        assert (from_int(R, x) * from_int(R, y)).coords[0] == (x * y) % 2 ** 11


def test_mul_matches_schoolbook_poly_oracle_extension():
    # W(F_9) mod 3^5: schoolbook polynomial multiplication mod (modulus, 3^5)
    R = RingSpec(3, d=2, N=5)
    mod_coeffs = list(R.modulus)
    pN = 3 ** 5
    rng = random.Random(1)
    for _ in range(30):
        a = [rng.randrange(pN) for _ in range(2)]
        b = [rng.randrange(pN) for _ in range(2)]
        conv = [0] * 3
        for i in range(2):
            for j in range(2):
                conv[i + j] += a[i] * b[j]
        # reduce x^2 = -(m0 + m1 x)
        red = [
            (conv[0] - conv[2] * mod_coeffs[0]) % pN,
            (conv[1] - conv[2] * mod_coeffs[1]) % pN,
        ]
        got = RingElem(R, a) * RingElem(R, b)
        assert list(got.coords) == red


def test_ring_axioms_random():
    R = RingSpec(3, d=2, e=1, N=4)
    rng = random.Random(2)
    for _ in range(20):
        x = RingElem(R, [rng.randrange(R.pN) for _ in range(R.ncoords)])
        y = RingElem(R, [rng.randrange(R.pN) for _ in range(R.ncoords)])
        z = RingElem(R, [rng.randrange(R.pN) for _ in range(R.ncoords)])
        assert (x * y) * z == x * (y * z)
        assert x * (y + z) == x * y + x * z


def test_non_unit_inverse_raises():
    R = RingSpec(3, N=4)
    with pytest.raises(NonUnitError):
        from_int(R, 3).inv()


def test_insufficient_valuation_raises():
    R = RingSpec(3, N=4)
    with pytest.raises(ValuationError):
        from_int(R, 3).div_by_pi_power(2)


def test_spec_mismatch_raises():
    with pytest.raises(SpecMismatchError):
        from_int(RingSpec(3, N=4), 1) + from_int(RingSpec(5, N=4), 1)


def test_teichmuller_identity_and_minus_one():
    R = RingSpec(3, N=3)
    assert teichmuller_lift(R, 1) == from_int(R, 1)
    assert teichmuller_lift(R, 2) == from_int(R, 26)  # -1 mod 27


def test_teichmuller_fixed_point_p5():
    R = RingSpec(5, N=6)
    t = teichmuller_lift(R, 2)
    assert t ** 5 == t
    assert t.residue() == 2


@pytest.mark.parametrize("p,d", [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3),
                                 (5, 1), (5, 2)])
def test_teichmuller_idempotence(p, d):
    R = RingSpec(p, d=d, N=4)
    Q = p ** d
    for xbar in range(R.residue_field.q):
        t = teichmuller_lift(R, xbar)
        assert t ** Q == t


def test_frobenius_compatibility_with_teichmuller():
    # sigma(Teich(xbar)) = Teich(xbar^q), and equals t^q exactly
    R = RingSpec(3, d=2, N=5)
    fld = R.residue_field
    for xbar in range(fld.q):
        t = teichmuller_lift(R, xbar)
        assert t.frobenius() == t ** 3
        assert t.frobenius() == teichmuller_lift(R, fld.frobenius(xbar, 1))


def test_frobenius_fixes_base_and_involution():
    R = RingSpec(3, d=2, N=4)
    assert from_int(R, 7).frobenius() == from_int(R, 7)
    rng = random.Random(3)
    for _ in range(10):
        x = RingElem(R, [rng.randrange(R.pN) for _ in range(R.ncoords)])
        assert x.frobenius().frobenius() == x


def test_enumeration_small_counts():
    R3 = RingSpec(3, N=4)
    pts = enumerate_teichmuller_points(1, 1, R3)
    assert sorted(p.residues for p in pts) == [(0,), (1,), (2,)]
    R2 = RingSpec(2, N=4)
    pts = enumerate_teichmuller_points(1, 2, R2)
    assert sorted(p.orbit_len for p in pts) == [1, 1, 2]


def test_orbit_counts_match_mobius_oracle():
    # necklace-style count: closed points of degree d on A^n
    def brute(q, n, d, spec):
        return len([p for p in enumerate_teichmuller_points(n, d, spec)
                    if p.orbit_len == d])

    R3 = RingSpec(3, N=3)
    assert brute(3, 2, 2, R3) == closed_point_count(3, 2, 2)
    assert brute(3, 1, 3, R3) == closed_point_count(3, 1, 3)
    R2 = RingSpec(2, N=3)
    assert brute(2, 2, 3, R2) == closed_point_count(2, 2, 3)
    closed_points(1, 4, R3)  # asserts internally


def test_enumeration_cap_guard():
    R = RingSpec(3, N=3)
    with pytest.raises(EnumerationCapError):
        enumerate_teichmuller_points(4, 3, R, cap=100)


def test_zero_valuation_reported_as_interval():
    R = RingSpec(3, N=4)
    z = from_int(R, 81)  # == 0 mod 3^4
    assert z.ord_pi() is None
    assert z.is_zero_at_precision()


def test_ramified_eisenstein_relation():
    R = RingSpec(3, e=2, N=4, eis_unit=-1)
    pi = pi_power(R, 1)
    assert pi * pi == from_int(R, -3)
    assert (pi ** 3).ord_pi() == 3
    assert from_int(R, -3).div_by_pi_power(2).agrees(from_int(R, 1))


def test_exact_div_int_and_eisenstein_unit():
    R = RingSpec(2, e=1, N=8, eis_unit=-1)  # pi = -2
    x = from_int(R, -6)
    assert exact_div_int(x, 2).agrees(from_int(R, -3))
    assert exact_div_int(x, -3) == from_int(R, 2)


def test_base_projection_q4():
    R4 = RingSpec(2, a=2, N=4)
    ext = R4.extension(2)
    z = teichmuller_lift(ext, 7)
    c = z * z.frobenius()  # sigma-invariant (norm-type element)
    assert c.frobenius() == c
    low = c.project_to_base()
    assert low.spec is R4
    assert low.embed(ext) == c


def test_base_projection_rejects_non_invariant():
    R = RingSpec(3, N=4)
    ext = R.extension(2)
    w = RingElem(ext, (0, 1))
    with pytest.raises(PrecisionError):
        w.project_to_base()


def test_digits_most_significant_last():
    R = RingSpec(3, N=4)
    assert from_int(R, 5).digits() == [[2, 1, 0, 0]]
