"""Truncated series: arithmetic oracles, substitution, roots, soundness."""

import random

import pytest

from padicl.errors import CapError, NonUnitError
from padicl.ring import RingSpec, RingElem, from_int, TeichPoint, teichmuller_lift
from padicl.series import (FrobLift, LinearWitness, PolyWitness, TruncSeries,
                           one_unit_root, teichmuller_points_for_lift)


@pytest.fixture(scope="module")
def R():
    return RingSpec(3, N=6)


def test_basic_product(R):
    f = TruncSeries.from_text(R, 1, "1 + X1")
    g = TruncSeries.from_text(R, 1, "1 - X1")
    assert (f * g).to_text() == "1 + %d * X1^2" % (3 ** 6 - 1)


def test_add_identity(R):
    f = TruncSeries.from_text(R, 2, "2 * X1 X2 + 7")
    assert (f + TruncSeries.zero(R, 2)).agrees(f)


def test_mul_matches_convolution_oracle(R):
    rng = random.Random(0)
    pN = R.pN
    for _ in range(10):
        fc = {(d,): rng.randrange(pN) for d in range(4)}
        gc = {(d,): rng.randrange(pN) for d in range(4)}
        f = TruncSeries(R, 1, 3, {k: from_int(R, v) for k, v in fc.items()},
                        PolyWitness(3))
        g = TruncSeries(R, 1, 3, {k: from_int(R, v) for k, v in gc.items()},
                        PolyWitness(3))
        prod = f * g
        for m in range(7):
            want = sum(fc.get((i,), 0) * gc.get((m - i,), 0)
                       for i in range(m + 1)) % pN
            assert prod.coefficient((m,)).coords[0] == want


def test_apply_sigma_standard(R):
    lift = FrobLift.standard(R, 1)
    x = TruncSeries.variable(R, 1, 0)
    assert x.apply_sigma(lift).to_text() == "1 * X1^3"
    c = TruncSeries.constant(R, 1, 7)
    assert c.apply_sigma(lift).agrees(c)  # sigma fixes R


def test_apply_sigma_matches_expansion_oracle(R):
    lift = FrobLift(R, 1, [TruncSeries.from_text(R, 1, "X1^3 + 3 * X1")])
    f = TruncSeries.from_text(R, 1, "X1^2")
    got = f.apply_sigma(lift)
    # (X^3 + 3X)^2 = X^6 + 6X^4 + 9X^2, expanded by hand
    want = TruncSeries.from_text(R, 1, "X1^6 + 6 * X1^4 + 9 * X1^2")
    assert got.agrees(want)


def test_lift_congruence_enforced(R):
    with pytest.raises(ValueError):
        FrobLift(R, 1, [TruncSeries.from_text(R, 1, "X1^3 + X1")])


def test_evaluate_spec_examples(R):
    t = teichmuller_lift(R, 2)
    pt = TeichPoint(R, [t], 1, 1, (2,))
    assert TruncSeries.variable(R, 1, 0).evaluate(pt) == t
    one_pt = TeichPoint(R, [from_int(R, 1)], 1, 1, (1,))
    f = TruncSeries.from_text(R, 1, "1 + 3 * X1")
    assert f.evaluate(one_pt) == from_int(R, 4)


def test_evaluation_is_ring_hom(R):
    rng = random.Random(1)
    t = teichmuller_lift(R, 2)
    pt = TeichPoint(R, [t], 1, 1, (2,))
    for _ in range(8):
        f = TruncSeries.from_terms(R, 1, [((d,), rng.randrange(R.pN))
                                          for d in range(4)])
        g = TruncSeries.from_terms(R, 1, [((d,), rng.randrange(R.pN))
                                          for d in range(4)])
        assert (f * g).evaluate(pt) == f.evaluate(pt) * g.evaluate(pt)
        # direct-summation oracle
        direct = R.zero
        for u, c in f.coeffs.items():
            direct = direct + c * t ** u[0]
        assert f.evaluate(pt) == direct


def test_one_unit_root_spec_examples(R):
    one = TruncSeries.constant(R, 1, 1, cap=6)
    assert one_unit_root(one, 5).agrees(one)
    four = TruncSeries.constant(R, 1, 4, cap=6)
    r = one_unit_root(four, 2)
    assert (r * r).truncate(6).agrees(four)
    assert r.constant_term() == from_int(R, -2)  # the 1-unit square root of 4
    g = TruncSeries.from_text(R, 1, "1 + 3 * X1", cap=8)
    u = one_unit_root(g, 2)
    assert (u * u).truncate(8).agrees(g)


def test_one_unit_root_round_trip_random(R):
    rng = random.Random(2)
    for _ in range(10):
        coeffs = {(0,): 1}
        for d in range(1, 5):
            coeffs[(d,)] = 3 * rng.randrange(81)
        u = TruncSeries(R, 1, 8, {k: from_int(R, v) for k, v in coeffs.items()},
                        PolyWitness(4))
        m = rng.choice([2, 4, 5, 7])
        assert one_unit_root((u ** m).truncate(8), m).agrees(u)


def test_one_unit_root_rejects_bad_input(R):
    with pytest.raises(NonUnitError):
        one_unit_root(TruncSeries.from_text(R, 1, "1 + X1", cap=4), 2)
    with pytest.raises(ValueError):
        one_unit_root(TruncSeries.constant(R, 1, 4, cap=4), 3)  # p | m


def test_inverse_unit_and_nonunit(R):
    g = TruncSeries.from_text(R, 1, "2 + 3 * X1", cap=8)
    inv = g.inverse()
    assert (g * inv).truncate(8).agrees(TruncSeries.constant(R, 1, 1, 8))
    with pytest.raises(NonUnitError):
        TruncSeries.from_text(R, 1, "1 + X1").inverse()


def test_substitution_soundness_error(R):
    lift = FrobLift.standard(R, 1)
    w = TruncSeries(R, 1, 3, {(0,): R.one, (3,): from_int(R, 3)},
                    LinearWitness(1, 2))
    with pytest.raises(CapError):
        w.apply_sigma(lift)
    # at a reduced target precision the same substitution is certified
    w.apply_sigma(lift, target_prec=1)


def test_substitution_stability_under_cap_increase(R):
    # raising the cap only changes coefficients above the declared floor
    lift = FrobLift.standard(R, 1)
    coeffs = {(d,): from_int(R, 3 ** d) for d in range(5)}
    f5 = TruncSeries(R, 1, 4, coeffs, LinearWitness(1, 0))
    f7 = TruncSeries(R, 1, 6, dict(coeffs), LinearWitness(1, 0))
    a = f5.apply_sigma(lift, target_prec=4)
    b = f7.apply_sigma(lift, target_prec=4)
    floor = 4
    for u in set(a.coeffs) | set(b.coeffs):
        if sum(u) > min(a.cap, b.cap):
            continue
        diff = a.coefficient(u) - b.coefficient(u)
        o = diff.ord_pi()
        assert o is None or o >= floor


def test_witness_propagation_and_check(R):
    f = TruncSeries(R, 1, 4, {(d,): from_int(R, 3 ** d) for d in range(5)},
                    LinearWitness(1, 0))
    g = TruncSeries(R, 1, 4, {(d,): from_int(R, 3 ** d) for d in range(5)},
                    LinearWitness(1, 0))
    prod = f * g
    assert isinstance(prod.witness, LinearWitness)
    assert prod.witness.c == 1 and prod.witness.b == 0
    assert prod.check_witness()


def test_text_round_trip(R):
    f = TruncSeries.from_text(R, 2, "2 * X1^3 X2 + 7 * X2^2 + 1 - 4 * X1")
    assert TruncSeries.from_text(R, 2, f.to_text()).agrees(f)


def test_twisted_teichmuller_points(R):
    lift = FrobLift(R, 1, [TruncSeries.from_text(R, 1, "X1^3 + 3 * X1")])
    for d in (1, 2):
        pts = teichmuller_points_for_lift(1, d, lift)
        assert len(pts) == len(teichmuller_points_for_lift(1, d, FrobLift.standard(R, 1)))
        for pt in pts:
            # tau(x) = s(x): the defining twisted fixed-point property
            val = lift.images[0].evaluate(pt)
            assert val == pt.coords[0].frobenius()
