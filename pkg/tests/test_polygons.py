"""Newton/basis polygons, Mazur bound, ordinarity, combinators."""

import random
from fractions import Fraction as F

import pytest

from padicl.errors import PrecisionError
from padicl.polygons import (BasisSequence, basis_sequence,
                             basis_sequence_combinators, compare_polygons,
                             ext2_sequence, generic_newton_polygon,
                             newton_polygon, ordinarity_check,
                             slope_lower_bound_check, tensor_sequence)
from padicl.ring import RingSpec, from_int, enumerate_teichmuller_points
from padicl.series import FrobLift, TruncSeries
from padicl.sigma_module import CharPoly, SigmaModule, char_poly, ext_power, tensor


@pytest.fixture(scope="module")
def ctx():
    R = RingSpec(3, N=8)
    lift = FrobLift.standard(R, 1)
    pts1 = enumerate_teichmuller_points(1, 1, R)
    return R, lift, pts1


def _cp(R, ints):
    return CharPoly([from_int(R, c) for c in ints], 1)


def test_hull_oracle_examples(ctx):
    R, _, _ = ctx
    np1 = newton_polygon(_cp(R, [1, -1, -3]))
    assert np1.segments() == [(F(0), F(1)), (F(1), F(1))]
    np2 = newton_polygon(_cp(R, [1, 0, -3]))
    assert np2.segments() == [(F(1, 2), F(2))]
    p = 3
    expanded = [1, -(1 + p + p ** 3), p + p ** 3 + p ** 4, -p ** 4]
    np3 = newton_polygon(_cp(R, expanded))
    assert [s for s, _ in np3.segments()] == [F(0), F(1), F(3)]


def test_hull_matches_brute_force_oracle(ctx):
    # a correct lower hull is convex with strictly increasing slopes, lies on
    # or below every valuation point, and touches at each of its vertices
    R, _, _ = ctx
    rng = random.Random(0)
    for _ in range(30):
        ords = [0] + [rng.randrange(0, 6) for _ in range(3)]
        ints = [1] + [3 ** o * rng.choice([1, 2]) for o in ords[1:]]
        np_ = newton_polygon(_cp(R, ints))
        pts = [(i, o) for i, o in enumerate(ords)]
        for i, o in pts:
            assert np_.height_at(i) <= o
        for x, y in np_.vertices:
            assert any(F(i) == x and F(o) == y for i, o in pts)
        slopes = [s for s, _ in np_.segments()]
        assert slopes == sorted(slopes) and len(set(slopes)) == len(slopes)


def test_unresolved_slope_raises_and_taints(ctx):
    R, _, _ = ctx
    cp = _cp(R, [1, -1, 0])
    with pytest.raises(PrecisionError):
        newton_polygon(cp)
    tainted = newton_polygon(cp, strict=False)
    assert tainted.tainted and tainted.inf_tail == 1


def test_basis_sequences(ctx):
    R, lift, _ = ctx
    D = SigmaModule.constant(R, lift, [[1, 0], [0, 3]])
    assert basis_sequence(D).h == [1, 1]
    D4 = SigmaModule.constant(R, lift, [[1, 0, 0, 0], [0, 1, 0, 0],
                                        [0, 0, 3, 0], [0, 0, 0, 9]])
    assert basis_sequence(D4).h == [2, 1, 1]
    # block with a unit corner forces h0 >= 1
    M = SigmaModule.from_text(R, lift, 2, ["2", "3 * X1", "3", "3"])
    assert basis_sequence(M).h[0] >= 1
    # a column vanishing at precision cannot be certified
    Z = SigmaModule.constant(R, lift, [[1, 0], [0, 3 ** 8]])
    with pytest.raises(PrecisionError):
        basis_sequence(Z)


def test_basis_polygon_vertices(ctx):
    R, lift, _ = ctx
    bs = basis_sequence(SigmaModule.constant(R, lift, [[1, 0], [0, 3]]))
    assert bs.polygon().vertices == [(F(0), F(0)), (F(1), F(0)), (F(2), F(1))]


def test_compare_polygons(ctx):
    R, lift, _ = ctx
    np2 = newton_polygon(_cp(R, [1, 0, -3]))  # slope 1/2, 1/2
    assert compare_polygons(np2, np2)["verdict"] == "lies_on_or_above"
    W = SigmaModule.constant(R, lift, [[0, 1], [3, 0]])
    bw = basis_sequence(W)
    assert bw.h == [1, 1]
    assert compare_polygons(np2, bw.polygon())["verdict"] == "lies_on_or_above"
    low = newton_polygon(_cp(R, [1, -1, -1]))
    high = newton_polygon(_cp(R, [1, -3, -9]))
    assert compare_polygons(low, high)["verdict"] == "violation"


def test_ordinarity_levels(ctx):
    R, lift, pts1 = ctx
    D = SigmaModule.constant(R, lift, [[1, 0], [0, 3]])
    assert ordinarity_check(D, pts1)["all_ordinary"]
    W = SigmaModule.constant(R, lift, [[0, 1], [3, 0]])
    assert not ordinarity_check(W, pts1, strict=False)["all_ordinary"]
    M = SigmaModule.from_text(R, lift, 2, ["1 + 3 * X1", "X1", "3", "3"])
    rep = ordinarity_check(M, pts1, level="at_slope_zero_side")
    assert rep["all_ordinary"]
    rep = ordinarity_check(M, pts1, level="up_to_slope_j_side", j=0)
    assert rep["all_ordinary"]


def test_slope_lower_bound(ctx):
    R, lift, pts1 = ctx
    Gp = SigmaModule.constant(R, lift, [[3]])
    rep = slope_lower_bound_check(Gp, 1, 3, fibers=pts1)
    assert rep["holds"]
    D = SigmaModule.constant(R, lift, [[1, 0], [0, 3]])
    assert not slope_lower_bound_check(D, 1, 2)["holds"]
    W = SigmaModule.constant(R, lift, [[0, 1], [3, 0]])
    rep = slope_lower_bound_check(W, F(1, 2), 3, fibers=pts1)
    assert rep["holds"]
    # the m-threshold satisfies the strict sandwich
    m, r, s = rep["m_threshold"], 2, F(1, 2)
    import math
    assert s - F(1, math.factorial(r)) < F(m, m + r - 1) * s < s


def test_generic_polygon_constant_family(ctx):
    R, lift, _ = ctx
    D = SigmaModule.constant(R, lift, [[1, 0], [0, 3]])
    rep = generic_newton_polygon(D, degrees=(1, 2))
    assert rep["report"]["all_on_or_above"]
    assert all(f["attains"] for f in rep["report"]["fibers"])


def test_generic_polygon_unit_family(ctx):
    R, lift, _ = ctx
    M = SigmaModule.from_text(R, lift, 1, ["1 + 3 * X1"])
    rep = generic_newton_polygon(M, degrees=(1, 2))
    assert rep["generic"].segments() == [(F(0), F(1))]


def test_generic_polygon_with_jump(ctx):
    # det = p: generic slopes (0, 1); the fiber where the trace vanishes
    # mod p jumps to (1/2, 1/2), strictly above the sample minimum
    R, lift, _ = ctx
    J = SigmaModule.constant(R, lift, [[1, 1], [1, 1 + 3]])
    rep = generic_newton_polygon(J, degrees=(1, 2))
    assert rep["generic"].segments() == [(F(0), F(1)), (F(1), F(1))]
    assert rep["report"]["all_on_or_above"]
    assert any(not f["attains"] for f in rep["report"]["fibers"])


def test_specialization_exhaustive_small_sweeps():
    # q <= 4, n = 1, d <= 3: every fiber lies on or above the sample minimum
    for p, a in [(2, 1), (3, 1), (2, 2)]:
        R = RingSpec(p, a=a, N=6)
        lift = FrobLift.standard(R, 1)
        mods = [
            SigmaModule.from_text(R, lift, 2,
                                  ["1", "X1", "%d * X1" % p, "%d" % p]),
            SigmaModule.constant(R, lift, [[1, 1], [1, 1 + p]]),
        ]
        for mod in mods:
            rep = generic_newton_polygon(mod, degrees=(1, 2, 3), cap=300000)
            assert rep["report"]["all_on_or_above"]


def test_combinator_formulas():
    h11 = BasisSequence([1, 1])
    assert tensor_sequence(h11, h11).h == [1, 2, 1]
    assert ext2_sequence(BasisSequence([2, 1])).h == [1, 2]
    assert ext2_sequence(h11).h == [0, 1]
    assert basis_sequence_combinators(h11, h11, "tensor").h == [1, 2, 1]
    assert basis_sequence_combinators(BasisSequence([2, 1]), op="ext2").h == [1, 2]


def test_combinators_match_constructions(ctx):
    # tensor / wedge-square of ordinary diagonal modules: the combinator
    # formulas agree with the basis sequences of the built modules, which
    # validates the binomial diagonal term of the wedge-square formula
    R, lift, _ = ctx
    A = SigmaModule.constant(R, lift, [[1, 0], [0, 3]])
    B = SigmaModule.constant(R, lift, [[2, 0], [0, 3]])
    hA, hB = basis_sequence(A), basis_sequence(B)
    assert basis_sequence(tensor(A, B)).h == tensor_sequence(hA, hB).h
    C = SigmaModule.constant(R, lift, [[1, 0, 0], [0, 2, 0], [0, 0, 3]])
    assert basis_sequence(ext_power(C, 2)).h == ext2_sequence(basis_sequence(C)).h
    D = SigmaModule.constant(R, lift, [[1, 0, 0], [0, 3, 0], [0, 0, 9]])
    assert basis_sequence(ext_power(D, 2)).h == ext2_sequence(basis_sequence(D)).h


def test_ordinary_closed_under_tensor(ctx):
    R, lift, pts1 = ctx
    A = SigmaModule.constant(R, lift, [[1, 0], [0, 3]])
    B = SigmaModule.constant(R, lift, [[2, 0], [0, 3]])
    assert ordinarity_check(tensor(A, B), pts1)["all_ordinary"]


def test_mazur_bound_randomized(ctx):
    # Lemma-style lower bound: Newton >= basis polygon at every resolvable fiber
    R, lift, pts1 = ctx
    rng = random.Random(7)
    checked = 0
    for _ in range(40):
        r = rng.choice([2, 3])
        entries = []
        for i in range(r * r):
            c = rng.randrange(R.pN)
            scale = 3 ** rng.choice([0, 0, 0, 1, 2])
            deg = rng.choice([0, 0, 1])
            entries.append("%d" % (c * scale) if deg == 0
                           else "%d * X1" % (c * scale))
        M = SigmaModule.from_text(R, lift, r, entries)
        try:
            bp = basis_sequence(M).polygon()
        except PrecisionError:
            continue
        for pt in pts1:
            try:
                np_ = newton_polygon(char_poly(M, pt))
            except PrecisionError:
                continue
            assert compare_polygons(np_, bp)["verdict"] == "lies_on_or_above"
            checked += 1
    assert checked >= 60
