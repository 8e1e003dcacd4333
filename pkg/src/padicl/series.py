"""Degree-capped multivariate power series over a RingSpec.

A TruncSeries stores every coefficient of total degree <= cap exactly (at the
ring precision); what it claims about the dropped tail is recorded in a decay
witness:

  * PolyWitness(maxdeg) -- the series is a polynomial; coefficients beyond
    maxdeg are exactly zero.  Polynomials are trivially overconvergent, and
    operations on them extend caps instead of truncating.
  * LinearWitness(c, b) -- ord_pi(a_u) >= max(0, c*|u| - b) for every u.
    This is the finite-precision surrogate for overconvergence, and the
    license for every truncation the library performs.
  * None -- nothing is known about the tail.  Operations that would need it
    fail loudly rather than silently truncate.

Frobenius-lift substitution, evaluation at Teichmuller points, series
inversion of units, and 1-unit m-th roots live here too.
"""

from fractions import Fraction

from .errors import CapError, NonUnitError, PrecisionError, SpecMismatchError
from .ring import RingElem, from_int

INF = Fraction(10 ** 9)  # effectively +infinity for witness arithmetic


class PolyWitness:
    """Exact polynomial: zero coefficients beyond maxdeg."""

    __slots__ = ("maxdeg",)

    def __init__(self, maxdeg):
        self.maxdeg = maxdeg

    def floor(self, deg):
        return INF if deg > self.maxdeg else Fraction(0)

    def __repr__(self):
        return "poly(deg<=%d)" % self.maxdeg


class LinearWitness:
    """ord_pi(a_u) >= max(0, c*|u| - b) for all u."""

    __slots__ = ("c", "b")

    def __init__(self, c, b):
        self.c = Fraction(c)
        self.b = Fraction(b)
        if self.c <= 0:
            raise ValueError("decay rate must be positive")

    def floor(self, deg):
        return max(Fraction(0), self.c * deg - self.b)

    def __repr__(self):
        return "linear(c=%s, b=%s)" % (self.c, self.b)


def _combine_add(w1, w2):
    if w1 is None or w2 is None:
        return None
    if isinstance(w1, PolyWitness) and isinstance(w2, PolyWitness):
        return PolyWitness(max(w1.maxdeg, w2.maxdeg))
    c1, b1 = _as_linear(w1)
    c2, b2 = _as_linear(w2)
    return LinearWitness(min(c1, c2), max(b1, b2))


def _combine_mul(w1, w2):
    if w1 is None or w2 is None:
        return None
    if isinstance(w1, PolyWitness) and isinstance(w2, PolyWitness):
        return PolyWitness(w1.maxdeg + w2.maxdeg)
    c1, b1 = _as_linear(w1)
    c2, b2 = _as_linear(w2)
    return LinearWitness(min(c1, c2), b1 + b2)


def _as_linear(w):
    """A (c, b) pair valid for the witness (polynomials decay arbitrarily fast
    beyond their degree, so any c works with b = c * maxdeg)."""
    if isinstance(w, LinearWitness):
        return w.c, w.b
    # for a polynomial: ord >= 0 always and = +inf beyond maxdeg; the linear
    # bound c*|u| - c*maxdeg is <= 0 up to maxdeg and finite beyond, so any
    # slope works; pick 1.
    return Fraction(1), Fraction(w.maxdeg)


class TruncSeries:
    """Immutable truncated series.  coeffs maps exponent tuples (len nvars,
    total degree <= cap) to nonzero RingElems of the shared spec."""

    __slots__ = ("spec", "nvars", "cap", "coeffs", "witness")

    def __init__(self, spec, nvars, cap, coeffs, witness=None):
        self.spec = spec
        self.nvars = nvars
        self.cap = cap
        clean = {}
        for u, c in coeffs.items():
            if len(u) != nvars:
                raise ValueError("exponent arity mismatch")
            if sum(u) > cap:
                raise ValueError("stored exponent beyond cap")
            if isinstance(c, int):
                c = from_int(spec, c)
            if any(c.coords):
                clean[tuple(u)] = c
        self.coeffs = clean
        self.witness = witness

    # -- constructors ---------------------------------------------------------

    @classmethod
    def zero(cls, spec, nvars, cap=0):
        """The zero polynomial (exact: PolyWitness(0))."""
        return cls(spec, nvars, cap, {}, PolyWitness(0))

    @classmethod
    def constant(cls, spec, nvars, value, cap=None):
        c = from_int(spec, value) if isinstance(value, int) else value
        return cls(spec, nvars, 0 if cap is None else cap,
                   {(0,) * nvars: c}, PolyWitness(0))

    @classmethod
    def variable(cls, spec, nvars, i, cap=None):
        u = tuple(1 if j == i else 0 for j in range(nvars))
        return cls(spec, nvars, 1 if cap is None else cap,
                   {u: spec.one}, PolyWitness(1))

    @classmethod
    def from_terms(cls, spec, nvars, terms):
        """terms: iterable of (exponent tuple, int or RingElem); polynomial witness."""
        coeffs = {}
        deg = 0
        for u, c in terms:
            u = tuple(u)
            deg = max(deg, sum(u))
            c = from_int(spec, c) if isinstance(c, int) else c
            if u in coeffs:
                coeffs[u] = coeffs[u] + c
            else:
                coeffs[u] = c
        return cls(spec, nvars, deg, coeffs, PolyWitness(deg))

    # -- basic queries ----------------------------------------------------------

    def degree(self):
        return max((sum(u) for u in self.coeffs), default=0)

    def is_polynomial(self):
        return isinstance(self.witness, PolyWitness) and self.witness.maxdeg <= self.cap

    def constant_term(self):
        return self.coeffs.get((0,) * self.nvars, self.spec.zero)

    def coefficient(self, u):
        return self.coeffs.get(tuple(u), self.spec.zero)

    def min_ord(self):
        """min ord_pi over stored coefficients (None when all vanish at precision)."""
        best = None
        for c in self.coeffs.values():
            o = c.ord_pi()
            if o == 0:
                return 0
            if o is not None and (best is None or o < best):
                best = o
        return best

    def tail_floor(self):
        """Certified ord lower bound for every dropped coefficient (|u| > cap)."""
        if self.witness is None:
            return Fraction(0)
        return self.witness.floor(self.cap + 1)

    def prec_floor(self):
        """Precision to which this truncation determines the underlying object
        coefficientwise: min of element precisions and the tail floor."""
        p = min((c.prec for c in self.coeffs.values()), default=self.spec.prec_pi)
        return min(p, self.tail_floor(), self.spec.prec_pi)

    def check_witness(self):
        """Verify the witness against every stored coefficient."""
        if self.witness is None:
            return True
        for u, c in self.coeffs.items():
            o = c.ord_pi()
            if o is None:
                continue
            if Fraction(o) < self.witness.floor(sum(u)):
                return False
        return True

    # -- arithmetic -------------------------------------------------------------

    def _check(self, other):
        if self.spec is not other.spec:
            raise SpecMismatchError("series over different ring specs")
        if self.nvars != other.nvars:
            raise SpecMismatchError("series in different numbers of variables")

    def __add__(self, other):
        if isinstance(other, (int, RingElem)):
            other = TruncSeries.constant(self.spec, self.nvars, other, self.cap)
        self._check(other)
        if self.is_polynomial() and other.is_polynomial():
            cap = max(self.cap, other.cap)
        else:
            cap = min(self.cap, other.cap)
        coeffs = dict(self.coeffs)
        for u, c in other.coeffs.items():
            if sum(u) <= cap:
                coeffs[u] = coeffs[u] + c if u in coeffs else c
        coeffs = {u: c for u, c in coeffs.items() if sum(u) <= cap}
        return TruncSeries(self.spec, self.nvars, cap, coeffs,
                           _combine_add(self.witness, other.witness))

    def __neg__(self):
        return TruncSeries(self.spec, self.nvars, self.cap,
                           {u: -c for u, c in self.coeffs.items()}, self.witness)

    def __sub__(self, other):
        if isinstance(other, (int, RingElem)):
            other = TruncSeries.constant(self.spec, self.nvars, other, self.cap)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, int):
            other = from_int(self.spec, other)
        if isinstance(other, RingElem):
            return TruncSeries(self.spec, self.nvars, self.cap,
                               {u: c * other for u, c in self.coeffs.items()},
                               self.witness)
        self._check(other)
        if self.is_polynomial() and other.is_polynomial():
            cap = max(self.cap, other.cap, self.witness.maxdeg + other.witness.maxdeg)
        else:
            cap = min(self.cap, other.cap)
        out = {}
        for u, cu in self.coeffs.items():
            du = sum(u)
            for v, cv in other.coeffs.items():
                if du + sum(v) > cap:
                    continue
                w = tuple(a + b for a, b in zip(u, v))
                prod = cu * cv
                out[w] = out[w] + prod if w in out else prod
        return TruncSeries(self.spec, self.nvars, cap, out,
                           _combine_mul(self.witness, other.witness))

    def __rmul__(self, other):
        return self * other

    def __pow__(self, k):
        if k < 0:
            return self.inverse() ** (-k)
        acc = TruncSeries.constant(self.spec, self.nvars, 1, self.cap)
        base = self
        while k:
            if k & 1:
                acc = acc * base
            k >>= 1
            if k:
                base = base * base
        return acc

    def truncate(self, cap):
        """Drop coefficients beyond a smaller cap; the witness (if any) still
        certifies the enlarged tail."""
        if cap == self.cap:
            return self
        if cap > self.cap and not self.is_polynomial():
            raise CapError("cannot raise the cap of a non-polynomial truncation")
        w = self.witness
        if isinstance(w, PolyWitness) and w.maxdeg > cap:
            # the dropped part of a polynomial is known exactly but the
            # truncation no longer is the polynomial; keep a linear bound
            w = LinearWitness(Fraction(1), Fraction(w.maxdeg))
        return TruncSeries(self.spec, self.nvars, cap,
                           {u: c for u, c in self.coeffs.items() if sum(u) <= cap}, w)

    def map_coefficients(self, fn, witness=None):
        return TruncSeries(self.spec, self.nvars, self.cap,
                           {u: fn(c) for u, c in self.coeffs.items()},
                           self.witness if witness is None else witness)

    def inverse(self, cap=None):
        """Inverse of a unit of the (truncated) overconvergent ring.

        Requires the residue of the series to be a nonzero constant: the
        constant term is a unit and all other coefficients are divisible by
        pi.  The geometric series terminates at the precision floor.
        """
        cap = self.cap if cap is None else cap
        c0 = self.constant_term()
        if not c0.is_unit():
            raise NonUnitError("constant term is not a unit")
        for u, c in self.coeffs.items():
            if any(u):
                o = c.ord_pi()
                if o is not None and o == 0:
                    raise NonUnitError(
                        "series is not a unit of the overconvergent ring "
                        "(non-constant coefficient of ord 0)"
                    )
        c0inv = c0.inv()
        # f = c0 (1 + g) with g == 0 mod pi; invert by the geometric series,
        # which terminates at the precision floor since ord(g^k) >= k
        g = self * c0inv - 1
        if g.cap > cap:
            g = g.truncate(cap)
        acc = TruncSeries.constant(self.spec, self.nvars, 1, cap)
        term = TruncSeries.constant(self.spec, self.nvars, 1, cap)
        sign = 1
        for _ in range(self.spec.prec_pi + 1):
            term = term * g
            if term.cap > cap:
                term = term.truncate(cap)
            sign = -sign
            if term.min_ord() is None:
                break
            acc = acc + term * sign
        out = acc * c0inv
        if out.cap > cap:
            out = out.truncate(cap)
        wit = None
        if self.witness is not None:
            c, b = _as_linear(self.witness)
            wit = LinearWitness(c / (1 + b) if b else c, 0)
        return TruncSeries(self.spec, self.nvars, cap, out.coeffs, wit)

    # -- substitution / Frobenius ------------------------------------------------

    def substitute(self, images, cap=None, target_prec=None, quotient=False):
        """Substitute images[i] for variable i.

        For polynomial inputs the result is exact.  Otherwise the dropped
        coefficients of self (degree > self.cap) must be certified negligible
        at target_prec by the decay witness, else CapError.  quotient=True
        instead interprets everything in R[X]/(p^N, degree > cap), where the
        degree ideal is sigma-stable (standard lifts; general lifts need
        cap >= N*e) and no tail certificate is required; results then carry
        no witness.
        """
        spec = self.spec
        if any(img.spec is not spec for img in images):
            raise SpecMismatchError("substitution images over a different spec")
        nv_out = images[0].nvars if images else self.nvars
        target_prec = spec.prec_pi if target_prec is None else target_prec
        if not self.is_polynomial() and not quotient:
            if Fraction(target_prec) > self.tail_floor():
                raise CapError(
                    "truncation unsound: substitution needs coefficients beyond "
                    "the cap (tail floor %s < target precision %s)"
                    % (self.tail_floor(), target_prec)
                )
        if cap is None:
            if all(img.is_polynomial() for img in images) and self.is_polynomial():
                dmax = max((img.witness.maxdeg for img in images), default=0)
                cap = self.witness.maxdeg * max(dmax, 1)
            else:
                cap = min((img.cap for img in images), default=self.cap)
        one = TruncSeries.constant(spec, nv_out, 1, cap)
        # Horner-free: cache powers of each image
        pow_cache = [dict() for _ in images]

        def img_pow(i, k):
            if k == 0:
                return one
            cache = pow_cache[i]
            if k not in cache:
                half = img_pow(i, k // 2)
                res = half * half
                if k & 1:
                    res = res * images[i]
                if res.cap > cap:
                    res = res.truncate(cap)
                cache[k] = res
            return cache[k]

        acc = None
        for u, c in self.coeffs.items():
            term = one * c
            for i, e in enumerate(u):
                if e:
                    term = term * img_pow(i, e)
                    if term.cap > cap:
                        term = term.truncate(cap)
            if term.cap > cap:
                term = term.truncate(cap)
            acc = term if acc is None else acc + term
        if acc is None:
            acc = TruncSeries(spec, nv_out, cap, {}, PolyWitness(0))
        if acc.cap > cap:
            acc = acc.truncate(cap)
        # witness: degree-|u| sources land at degree >= |u| is not guaranteed in
        # general, so derive from the input witness and max image degree
        wit = None
        if quotient:
            return TruncSeries(spec, acc.nvars, cap, acc.coeffs, None)
        if self.witness is not None and all(img.witness is not None for img in images):
            if self.is_polynomial() and all(img.is_polynomial() for img in images):
                dmax = max((img.witness.maxdeg for img in images), default=1)
                wd = self.witness.maxdeg * max(dmax, 1)
                wit = PolyWitness(min(wd, cap)) if wd <= cap else LinearWitness(1, wd)
            else:
                c, b = _as_linear(self.witness)
                dmax = max((max(img.cap, 1) for img in images), default=1)
                wit = LinearWitness(c / dmax, b)
        return TruncSeries(spec, acc.nvars, cap, acc.coeffs, wit)

    def apply_sigma(self, lift, power=1, cap=None, target_prec=None,
                    quotient=False):
        """f^sigma: substitute X_i <- sigma(X_i) with sigma acting on
        coefficients through the ring Frobenius (trivially on R itself)."""
        if lift.nvars != self.nvars:
            raise SpecMismatchError("lift arity mismatch")
        out = self
        for _ in range(power):
            twisted = out.map_coefficients(lambda c: c.frobenius())
            out = twisted.substitute(lift.images, cap=cap,
                                     target_prec=target_prec, quotient=quotient)
        return out

    def evaluate(self, point):
        """Sum a_u x^u at a TeichPoint (or any tuple of RingElems).

        The result precision is capped by the tail floor of the witness: a
        truncation only determines the value of the underlying series up to
        the certified tail.
        """
        coords = point.coords if hasattr(point, "coords") else tuple(point)
        if len(coords) != self.nvars:
            raise SpecMismatchError(
                "point has %d coordinates, series has %d variables"
                % (len(coords), self.nvars)
            )
        target = coords[0].spec if coords else self.spec
        acc = target.zero
        pow_cache = [dict() for _ in coords]

        def cpow(i, k):
            if k == 0:
                return target.one
            cache = pow_cache[i]
            if k not in cache:
                half = cpow(i, k // 2)
                res = half * half
                if k & 1:
                    res = res * coords[i]
                cache[k] = res
            return cache[k]

        for u, c in self.coeffs.items():
            term = c.embed(target) if c.spec is not target else c
            for i, e in enumerate(u):
                if e:
                    term = term * cpow(i, e)
            acc = acc + term
        if not self.is_polynomial():
            floor = self.tail_floor()
            prec = min(acc.prec, int(floor)) if floor < INF else acc.prec
            acc = RingElem(target, acc.coords, prec)
        return acc

    # -- text form ---------------------------------------------------------------

    def to_text(self):
        """Canonical text: `coef * X1^a X2^b + ...`, terms sorted by degree."""
        if not self.coeffs:
            return "0"
        parts = []
        for u in sorted(self.coeffs, key=lambda t: (sum(t), t)):
            c = self.coeffs[u]
            if c.spec.ncoords == 1:
                cs = str(c.coords[0])
            else:
                cs = "[" + ",".join(str(x) for x in c.coords) + "]"
            mono = " ".join(
                "X%d" % (i + 1) if e == 1 else "X%d^%d" % (i + 1, e)
                for i, e in enumerate(u) if e
            )
            parts.append(cs if not mono else "%s * %s" % (cs, mono))
        return " + ".join(parts)

    @classmethod
    def from_text(cls, spec, nvars, text, cap=None):
        """Parse the canonical text form (integer coefficients only)."""
        text = text.strip()
        if text in ("", "0"):
            return cls(spec, nvars, 0 if cap is None else cap, {}, PolyWitness(0))
        text = text.replace("-", "+-")
        terms = []
        for raw in text.split("+"):
            raw = raw.strip()
            if not raw:
                continue
            coef = 1
            if raw.startswith("-"):
                coef = -1
                raw = raw[1:].strip()
            mono = [0] * nvars
            for piece in raw.replace("*", " ").split():
                if piece.lstrip("-").isdigit():
                    coef *= int(piece)
                elif piece.startswith("X"):
                    if "^" in piece:
                        var, exp = piece[1:].split("^")
                        mono[int(var) - 1] += int(exp)
                    else:
                        mono[int(piece[1:]) - 1] += 1
                else:
                    raise ValueError("cannot parse series term %r" % piece)
            terms.append((tuple(mono), coef))
        out = cls.from_terms(spec, nvars, terms)
        if cap is not None and cap > out.cap:
            out = cls(spec, nvars, cap, out.coeffs, out.witness)
        return out

    def agrees(self, other, prec_pi=None):
        self._check(other)
        cap = min(self.cap, other.cap)
        keys = set(self.coeffs) | set(other.coeffs)
        for u in keys:
            if sum(u) > cap:
                continue
            a = self.coeffs.get(u, self.spec.zero)
            b = other.coeffs.get(u, self.spec.zero)
            if not a.agrees(b, prec_pi):
                return False
        return True

    def __eq__(self, other):
        return (
            isinstance(other, TruncSeries)
            and self.spec is other.spec
            and self.nvars == other.nvars
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((id(self.spec), self.nvars, frozenset(self.coeffs.items())))

    def __repr__(self):
        return "<series %s | cap %d, %s>" % (self.to_text(), self.cap, self.witness)


class FrobLift:
    """A Frobenius lift on the n-variable series ring: sigma(X_i) as series.

    Checked at construction: sigma(X_i) == X_i^q mod pi.  The standard lift
    sigma(X_i) = X_i^q gets fast paths throughout; split polynomial lifts
    (each image univariate in its own variable, monic of degree q) are
    supported by the trace-formula machinery via explicit trace bases.
    """

    def __init__(self, spec, nvars, images):
        if len(images) != nvars:
            raise ValueError("need one image per variable")
        self.spec = spec
        self.nvars = nvars
        self.images = list(images)
        q = spec.q
        for i, img in enumerate(self.images):
            if img.spec is not spec:
                raise SpecMismatchError("lift image over a different spec")
            xq = tuple(q if j == i else 0 for j in range(nvars))
            diff = dict(img.coeffs)
            diff[xq] = diff[xq] - spec.one if xq in diff else -spec.one
            for u, c in diff.items():
                if c.ord_pi() == 0:
                    raise ValueError("sigma(X_%d) != X_%d^q mod pi" % (i + 1, i + 1))

    @classmethod
    def standard(cls, spec, nvars):
        q = spec.q
        imgs = [
            TruncSeries.from_terms(spec, nvars,
                                   [(tuple(q if j == i else 0 for j in range(nvars)), 1)])
            for i in range(nvars)
        ]
        return cls(spec, nvars, imgs)

    @property
    def is_standard(self):
        q = self.spec.q
        for i, img in enumerate(self.images):
            xq = tuple(q if j == i else 0 for j in range(self.nvars))
            if set(img.coeffs) != {xq}:
                return False
            if img.coeffs[xq] != self.spec.one:
                return False
        return True

    def split_polynomials(self):
        """Per-variable coefficient lists [s_i(Y)] when every image is a
        univariate monic polynomial of degree q in its own variable; None
        otherwise.  This is the shape the explicit trace basis requires."""
        q = self.spec.q
        out = []
        for i, img in enumerate(self.images):
            if not img.is_polynomial():
                return None
            coeffs = [self.spec.zero] * (q + 1)
            for u, c in img.coeffs.items():
                if any(e and j != i for j, e in enumerate(u)):
                    return None
                d = u[i]
                if d > q:
                    return None
                coeffs[d] = coeffs[d] + c
            if coeffs[q] != self.spec.one:
                return None
            out.append(coeffs)
        return out

    def to_text(self):
        return [img.to_text() for img in self.images]

    def __repr__(self):
        return "FrobLift(%s)" % ", ".join(self.to_text())


def one_unit_root(g, m):
    """The 1-unit u with u^m = g, for g == 1 mod pi and gcd(m, p) = 1.

    Hensel iteration u <- u * (1 + (g u^-m - 1)/m); the defect ord doubles
    each step, so ~log2(N*e) iterations suffice.  Verified by multiplying
    back before returning.
    """
    spec = g.spec
    if m % spec.p == 0:
        raise ValueError("root order m must be prime to p")
    delta0 = g - 1
    o = delta0.min_ord()
    if o is not None and o == 0:
        raise NonUnitError("input is not a 1-unit (g != 1 mod pi)")
    if not g.constant_term().is_unit():
        raise NonUnitError("input is not a 1-unit")
    minv = pow(m, -1, spec.pN)
    u = TruncSeries.constant(spec, g.nvars, 1, g.cap)
    for _ in range(spec.prec_pi.bit_length() + 2):
        um = u ** m
        if um.cap > g.cap:
            um = um.truncate(g.cap)
        defect = g * um.inverse() - 1
        if defect.cap > g.cap:
            defect = defect.truncate(g.cap)
        if defect.min_ord() is None:
            break
        u = u * (TruncSeries.constant(spec, g.nvars, 1, g.cap) + defect * minv)
        if u.cap > g.cap:
            u = u.truncate(g.cap)
    um = u ** m
    if um.cap > g.cap:
        um = um.truncate(g.cap)
    if not um.agrees(g):
        raise PrecisionError("m-th root iteration failed to converge at precision")
    if u.cap != g.cap:
        u = u.truncate(g.cap)
    return u


def teichmuller_points_for_lift(n, d, lift, dedupe=True, cap=200000):
    """Teichmuller points of A^n of degree d for an arbitrary Frobenius lift.

    These are the Monsky-Tate fixed points: tau(x_i) = sigma(X_i)(x) with
    x_i == residue mod pi.  Solved by the contraction x <- tau^-1(s(x)),
    which gains at least one pi-digit per step because the lift reduces to
    the q-power map mod pi.  For the standard lift this reproduces the
    coordinatewise Teichmuller points.
    """
    from .ring import enumerate_teichmuller_points, TeichPoint

    pts = enumerate_teichmuller_points(n, d, lift.spec, dedupe=dedupe, cap=cap)
    if lift.is_standard:
        return pts
    out = []
    ext = pts[0].spec if pts else lift.spec.extension(d)
    for pt in pts:
        coords = list(pt.coords)
        for _ in range(ext.prec_pi + 2):
            vals = [img.evaluate(TeichPoint(ext, coords, d, pt.orbit_len, pt.residues))
                    for img in lift.images]
            new = [v.frobenius(ext.d - 1) for v in vals]  # tau^-1 = tau^(d_total-1)
            if all(a == b for a, b in zip(new, coords)):
                break
            coords = new
        else:
            raise PrecisionError("twisted Teichmuller iteration failed to stabilize")
        out.append(TeichPoint(ext, coords, d, pt.orbit_len, pt.residues, pt.is_orbit_rep))
    return out
