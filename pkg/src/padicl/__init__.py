"""p-adic L-functions of sigma-modules over affine varieties.

The library computes truncations of L-functions attached to Frobenius
matrices over p-adic coordinate rings by two independent routes (Euler
products over Teichmuller points, and Fredholm determinants of Dwork
operators), together with the slope apparatus: Newton and basis polygons,
slope factorization, Hodge-Newton filtrations, unit-root extraction,
power L-functions, and the exponential-sum reduction to affine space.
"""

from .ring import RingSpec, RingElem, TeichPoint, teichmuller_lift, enumerate_teichmuller_points
from .series import TruncSeries, FrobLift
from .sigma_module import SigmaModule, CharPoly
from .polygons import NewtonPolygon, BasisSequence
from .lfunc import LSeries, VarietySpec

__all__ = [
    "RingSpec", "RingElem", "TeichPoint", "teichmuller_lift",
    "enumerate_teichmuller_points", "TruncSeries", "FrobLift",
    "SigmaModule", "CharPoly", "NewtonPolygon", "BasisSequence",
    "LSeries", "VarietySpec",
]

__version__ = "0.1.0"
