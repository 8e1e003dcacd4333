"""Shared fixtures: ring specs, lifts, and the dual-pipeline test corpus."""

import pytest

from padicl.ring import RingSpec
from padicl.series import FrobLift, TruncSeries
from padicl.sigma_module import SigmaModule


@pytest.fixture(scope="session")
def R3():
    return RingSpec(3, N=8)


@pytest.fixture(scope="session")
def R2():
    return RingSpec(2, N=8)


@pytest.fixture(scope="session")
def lift3(R3):
    return FrobLift.standard(R3, 1)


@pytest.fixture(scope="session")
def lift2(R2):
    return FrobLift.standard(R2, 1)


def module(spec, lift, rank, entries, label=""):
    return SigmaModule.from_text(spec, lift, rank, entries, label=label)


def corpus_A1(N=10):
    """The acceptance corpus over the affine line: q in {2, 3}, ranks 1..3,
    constant and X-dependent matrices, the standard lift and one non-default
    lift.  Returns [(label, module)]."""
    out = []
    R3 = RingSpec(3, N=N)
    l3 = FrobLift.standard(R3, 1)
    out.append(("q3-identity", SigmaModule.identity(R3, l3)))
    out.append(("q3-const-p", SigmaModule.constant(R3, l3, [[3]], "p")))
    out.append(("q3-1+pX", module(R3, l3, 1, ["1 + 3 * X1"])))
    out.append(("q3-rank1-messy", module(R3, l3, 1, ["2 + 3 * X1^2 + 9 * X1^3"])))
    out.append(("q3-rank2-Xdep", module(R3, l3, 2, ["1 + 3 * X1", "X1", "3", "3"])))
    out.append(("q3-supersingular", SigmaModule.constant(R3, l3, [[0, 1], [3, 0]], "ss")))
    out.append(("q3-rank3", module(R3, l3, 3,
                                   ["1", "X1", "0",
                                    "3", "2 + 3 * X1", "X1^2",
                                    "0", "3 * X1", "9"])))
    nd3 = FrobLift(R3, 1, [TruncSeries.from_text(R3, 1, "X1^3 + 3 * X1")])
    out.append(("q3-nd-identity", SigmaModule.identity(R3, nd3)))
    out.append(("q3-nd-1+pX", module(R3, nd3, 1, ["1 + 3 * X1"])))
    out.append(("q3-nd-rank2", module(R3, nd3, 2, ["1", "X1", "3 * X1", "3"])))
    R2 = RingSpec(2, N=N)
    l2 = FrobLift.standard(R2, 1)
    out.append(("q2-1+pX", module(R2, l2, 1, ["1 + 2 * X1"])))
    out.append(("q2-rank2", module(R2, l2, 2, ["1", "X1", "2", "2 * X1"])))
    out.append(("q2-rank3", module(R2, l2, 3,
                                   ["1", "X1", "0",
                                    "2", "1 + 2 * X1", "X1^2",
                                    "0", "2 * X1", "2"])))
    return out


def corpus_A2(N=10):
    out = []
    R3 = RingSpec(3, N=N)
    l3 = FrobLift.standard(R3, 2)
    out.append(("A2-q3-1+pXY", SigmaModule.from_text(R3, l3, 1, ["1 + 3 * X1 X2"])))
    R2 = RingSpec(2, N=N)
    l2 = FrobLift.standard(R2, 2)
    out.append(("A2-q2-rank2", SigmaModule.from_text(
        R2, l2, 2, ["1", "X1 X2", "2 * X2", "1 + 2 * X1"])))
    return out


def ordinary_corpus(N=8):
    """Ordinary examples with h in {(1,1), (2,1), (1,1,1)} at q in {2, 3}."""
    out = []
    R3 = RingSpec(3, N=N)
    l3 = FrobLift.standard(R3, 1)
    out.append(("q3-h11-diag", (1, 1), SigmaModule.constant(R3, l3, [[1, 0], [0, 3]])))
    out.append(("q3-h11-Xdep", (1, 1),
                module(R3, l3, 2, ["1 + 3 * X1", "X1", "3", "3"])))
    out.append(("q3-h111", (1, 1, 1),
                module(R3, l3, 3, ["1 + 3 * X1", "3 * X1", "X1",
                                   "0", "3", "3 * X1^2",
                                   "0", "0", "9"])))
    out.append(("q3-h21", (2, 1),
                module(R3, l3, 3, ["1", "X1", "X1",
                                   "3 * X1", "2", "0",
                                   "0", "0", "3"])))
    R2 = RingSpec(2, N=N)
    l2 = FrobLift.standard(R2, 1)
    out.append(("q2-h11", (1, 1), module(R2, l2, 2, ["1", "X1", "2", "2"])))
    out.append(("q2-h111", (1, 1, 1),
                module(R2, l2, 3, ["1", "X1", "0",
                                   "0", "2", "2 * X1",
                                   "0", "0", "4"])))
    return out
