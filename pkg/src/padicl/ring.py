"""Exact arithmetic in truncated local rings.

The base ring is R = W(F_q) mod p^N (q = p^a), presented as Z[omega]/(modulus, p^N)
for a fixed monic irreducible modulus over F_p.  Working rings R_d are the
unramified extensions with residue field F_{q^d}; an optional totally ramified
layer adjoins pi with the Eisenstein relation pi^e = u*p (u a unit), which is
used with e = p-1, u = -1 for the splitting-function ring.

Elements are coordinate vectors over the basis {pi^j * omega^i}, every
coordinate an integer mod p^N, together with an absolute precision tag counted
in pi-digits.  All values are immutable; every operation is a pure function, so
concurrent read-sharing is safe and results do not depend on scheduling.
"""

from itertools import product

from . import gf
from .errors import (
    EnumerationCapError,
    NonUnitError,
    PrecisionError,
    SpecMismatchError,
    ValuationError,
)


def vp(n, p, bound):
    """p-adic valuation of the integer n mod p^bound; returns bound for n == 0."""
    n %= p ** bound
    if n == 0:
        return bound
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


class RingSpec:
    """Immutable description of one truncated local ring.

    p      -- the prime
    a      -- unramified degree of the base ring R over Z_p (q = p^a)
    d      -- further unramified degree (the working ring R_d; d = 1 is R itself)
    e      -- ramification degree, pi^e = eis_unit * p  (e = 1 means pi = p)
    N      -- absolute precision: all coordinates are integers mod p^N
    modulus -- monic irreducible over F_p of degree a*d defining F_{q^d}
    """

    _cache = {}

    def __new__(cls, p, a=1, d=1, e=1, N=8, eis_unit=1, modulus=None):
        if modulus is None:
            modulus = gf.default_modulus(p, a * d)
        modulus = tuple(c % p for c in modulus)
        key = (p, a, d, e, N, eis_unit % p ** N, modulus)
        if key in cls._cache:
            return cls._cache[key]
        self = object.__new__(cls)
        self._init(*key)
        cls._cache[key] = self
        return self

    def _init(self, p, a, d, e, N, eis_unit, modulus):
        if p < 2 or any(p % k == 0 for k in range(2, p)):
            raise ValueError("p must be prime, got %r" % (p,))
        if min(a, d, e) < 1 or N < 1:
            raise ValueError("a, d, e >= 1 and N >= 1 required")
        if len(modulus) != a * d + 1 or modulus[-1] != 1:
            raise ValueError("modulus must be monic of degree a*d")
        if not gf.is_irreducible(modulus, p):
            raise ValueError("modulus is not irreducible over F_%d" % p)
        if eis_unit % p == 0:
            raise ValueError("Eisenstein unit must be a unit mod p")
        self.p, self.a, self.d, self.e, self.N = p, a, d, e, N
        self.eis_unit = eis_unit
        self.modulus = modulus
        self.q = p ** a
        self.w = a * d          # degree of the unramified part
        self.ncoords = self.w * e
        self.pN = p ** N
        self.prec_pi = N * e    # full absolute precision in pi-digits
        self.residue_field = gf.GF(p, modulus)
        self._omega_pow = self._build_omega_powers()
        self._eis_unit_inv = pow(eis_unit, -1, self.pN) if N > 0 else 0
        self._sigma_pow = None  # built lazily: powers of sigma(omega)
        self._ext_cache = {}
        self._embed_cache = {}
        self.zero = RingElem(self, (0,) * self.ncoords)
        self.one = RingElem(self, (1,) + (0,) * (self.ncoords - 1))

    # -- structural helpers -------------------------------------------------

    def _build_omega_powers(self):
        """omega^m for m in [w, 2w-2], as coordinate tuples of the unramified part."""
        w, pN = self.w, self.pN
        if w == 1:
            return []
        top = [(-c) % pN for c in self.modulus[:-1]]  # omega^w
        rows = [tuple(top)]
        cur = top
        for _ in range(w - 2):
            nxt = [0] * w
            carry = cur[w - 1]
            for i in range(w - 1, 0, -1):
                nxt[i] = cur[i - 1]
            nxt[0] = 0
            if carry:
                for i in range(w):
                    nxt[i] = (nxt[i] + carry * rows[0][i]) % pN
            cur = nxt
            rows.append(tuple(cur))
        return rows

    def _wmul(self, x, y):
        """Multiply two unramified-part coordinate tuples (length w)."""
        w, pN = self.w, self.pN
        if w == 1:
            return ((x[0] * y[0]) % pN,)
        conv = [0] * (2 * w - 1)
        for i, xi in enumerate(x):
            if xi:
                for j, yj in enumerate(y):
                    conv[i + j] += xi * yj
        out = [c % pN for c in conv[:w]]
        for m in range(w, 2 * w - 1):
            c = conv[m] % pN
            if c:
                row = self._omega_pow[m - w]
                for i in range(w):
                    out[i] = (out[i] + c * row[i]) % pN
        return tuple(out)

    def _sigma_omega_powers(self):
        """Coordinate tuples of sigma(omega)^i, i < w, where sigma is the q-Frobenius."""
        if self._sigma_pow is not None:
            return self._sigma_pow
        w, pN = self.w, self.pN
        if w == 1:
            self._sigma_pow = [(1,)]
            return self._sigma_pow
        omega = tuple(1 if i == 1 else 0 for i in range(w))
        z = _wpow(self, omega, self.q)
        # Hensel refine to the exact root of the modulus congruent to omega^q mod p
        mod_lift = [c for c in self.modulus]
        steps = max(1, (self.N).bit_length() + 1)
        for _ in range(steps):
            fz = _wpoly_eval(self, mod_lift, z)
            dfz = _wpoly_eval(self, [i * c % pN for i, c in enumerate(mod_lift)][1:], z)
            z = _wsub(self, z, self._wmul(fz, _winv_un(self, dfz)))
        assert not any(_wpoly_eval(self, mod_lift, z)), "sigma(omega) failed to converge"
        pows = [tuple(1 if i == 0 else 0 for i in range(w))]
        for _ in range(w - 1):
            pows.append(self._wmul(pows[-1], z))
        self._sigma_pow = pows
        return pows

    def extension(self, d2):
        """The working ring with residue field F_{q^(d*d2)}; same p, a, e, N."""
        if d2 == 1:
            return self
        if d2 not in self._ext_cache:
            self._ext_cache[d2] = RingSpec(
                self.p, self.a, self.d * d2, self.e, self.N, self.eis_unit
            )
        return self._ext_cache[d2]

    def embedding_into(self, ext):
        """Coordinate image of omega (of this spec) inside the extension spec.

        Returns the list of coordinate tuples of emb(omega)^i for i < self.w,
        computed from a Hensel-lifted root of this spec's modulus in ext.
        """
        key = (ext.p, ext.w, ext.modulus)
        if key in self._embed_cache:
            return self._embed_cache[key]
        if ext is self:
            pows = [
                tuple(1 if j == i else 0 for j in range(ext.w)) for i in range(self.w)
            ]
            self._embed_cache[key] = pows
            return pows
        rbar = gf.subfield_root(ext.residue_field, self.modulus)
        root = gf.poly_from_int(rbar, ext.p)
        z = tuple(root[i] if i < len(root) else 0 for i in range(ext.w))
        mod_lift = list(self.modulus)
        pN = ext.pN
        for _ in range(max(1, ext.N.bit_length() + 1)):
            fz = _wpoly_eval(ext, mod_lift, z)
            dfz = _wpoly_eval(ext, [i * c % pN for i, c in enumerate(mod_lift)][1:], z)
            z = _wsub(ext, z, ext._wmul(fz, _winv_un(ext, dfz)))
        assert not any(_wpoly_eval(ext, mod_lift, z)), "embedding root failed to converge"
        pows = [tuple(1 if i == 0 else 0 for i in range(ext.w))]
        for _ in range(self.w - 1):
            pows.append(ext._wmul(pows[-1], z))
        self._embed_cache[key] = pows
        return pows

    def base_spec(self):
        """The d = 1 spec with the same p, a, e, N."""
        if self.d == 1:
            return self
        return RingSpec(self.p, self.a, 1, self.e, self.N, self.eis_unit)

    def to_dict(self):
        return {
            "p": self.p, "a": self.a, "d": self.d, "e": self.e, "N": self.N,
            "eis_unit": self.eis_unit, "modulus": list(self.modulus),
        }

    @classmethod
    def from_dict(cls, dd):
        return cls(dd["p"], dd.get("a", 1), dd.get("d", 1), dd.get("e", 1),
                   dd["N"], dd.get("eis_unit", 1), tuple(dd["modulus"]) if dd.get("modulus") else None)

    def __repr__(self):
        tag = "R" if self.d == 1 else "R_%d" % self.d
        ram = "" if self.e == 1 else ", pi^%d=%d*p" % (self.e, self.eis_unit)
        return "%s(p=%d, q=%d%s, N=%d)" % (tag, self.p, self.q, ram, self.N)


# -- helpers on unramified coordinate tuples (length spec.w) -----------------

def _wadd(spec, x, y):
    pN = spec.pN
    return tuple((a + b) % pN for a, b in zip(x, y))


def _wsub(spec, x, y):
    pN = spec.pN
    return tuple((a - b) % pN for a, b in zip(x, y))


def _wpow(spec, x, k):
    r = tuple(1 if i == 0 else 0 for i in range(spec.w))
    while k:
        if k & 1:
            r = spec._wmul(r, x)
        x = spec._wmul(x, x)
        k >>= 1
    return r


def _wpoly_eval(spec, int_coeffs, z):
    """Evaluate a polynomial with integer coefficients at the tuple z (Horner)."""
    pN = spec.pN
    acc = tuple(0 for _ in range(spec.w))
    for c in reversed(int_coeffs):
        acc = spec._wmul(acc, z)
        acc = tuple((a + (c if i == 0 else 0)) % pN for i, a in enumerate(acc))
    return acc


def _winv_un(spec, x):
    """Inverse of a unit in the unramified part, by Newton from the residue inverse."""
    p, pN = spec.p, spec.pN
    rbar = gf.poly_to_int([c % p for c in x], p)
    if rbar == 0:
        raise NonUnitError("element is not a unit mod pi")
    inv0 = gf.poly_from_int(spec.residue_field.inv(rbar), p)
    z = tuple(inv0[i] if i < len(inv0) else 0 for i in range(spec.w))
    one = tuple(1 if i == 0 else 0 for i in range(spec.w))
    for _ in range(max(1, spec.N.bit_length() + 1)):
        t = _wsub(spec, one, spec._wmul(x, z))
        if not any(t):
            break
        z = _wadd(spec, z, spec._wmul(z, t))
    return z


class RingElem:
    """One element, immutable.  coords has length spec.w * spec.e, each entry
    an integer in [0, p^N); prec is the absolute precision in pi-digits."""

    __slots__ = ("spec", "coords", "prec", "_ord")

    def __init__(self, spec, coords, prec=None):
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "coords", tuple(c % spec.pN for c in coords))
        object.__setattr__(self, "prec", spec.prec_pi if prec is None else min(prec, spec.prec_pi))
        object.__setattr__(self, "_ord", None)

    def __setattr__(self, *a):
        raise AttributeError("RingElem is immutable")

    # -- structure ----------------------------------------------------------

    def _wparts(self):
        w = self.spec.w
        return [self.coords[j * w:(j + 1) * w] for j in range(self.spec.e)]

    def ord_pi(self):
        """ord_pi of the represented class, or None when indistinguishable from
        0 at this precision (true ord >= self.prec; never reported as a number)."""
        if self._ord is not None:
            return self._ord if self._ord >= 0 else None
        spec = self.spec
        best = None
        for j, part in enumerate(self._wparts()):
            vs = [vp(c, spec.p, spec.N) for c in part]
            v = min(vs) if vs else spec.N
            cand = spec.e * v + j
            if best is None or cand < best:
                best = cand
        if best is None or best >= self.prec:
            object.__setattr__(self, "_ord", -1)
            return None
        object.__setattr__(self, "_ord", best)
        return best

    def is_zero_at_precision(self):
        return self.ord_pi() is None

    def is_unit(self):
        return self.ord_pi() == 0

    def residue(self):
        """Image in F_{q^d} as a packed integer (the pi^0 part mod p)."""
        p = self.spec.p
        return gf.poly_to_int([c % p for c in self.coords[: self.spec.w]], p)

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other):
        if not isinstance(other, RingElem) or other.spec is not self.spec:
            raise SpecMismatchError("operands from different ring specs")

    def __add__(self, other):
        if isinstance(other, int):
            other = from_int(self.spec, other)
        self._check(other)
        s = self.spec
        return RingElem(s, ((a + b) % s.pN for a, b in zip(self.coords, other.coords)),
                        min(self.prec, other.prec))

    def __neg__(self):
        s = self.spec
        return RingElem(s, ((-a) % s.pN for a in self.coords), self.prec)

    def __sub__(self, other):
        if isinstance(other, int):
            other = from_int(self.spec, other)
        return self + (-other)

    def __radd__(self, other):
        return self + other

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            other = from_int(self.spec, other)
        self._check(other)
        s = self.spec
        e = s.e
        xs, ys = self._wparts(), other._wparts()
        parts = [tuple(0 for _ in range(s.w)) for _ in range(e)]
        for j1, xp in enumerate(xs):
            if not any(xp):
                continue
            for j2, yp in enumerate(ys):
                if not any(yp):
                    continue
                prod = s._wmul(xp, yp)
                t = j1 + j2
                if t < e:
                    parts[t] = _wadd(s, parts[t], prod)
                else:
                    # pi^(e+r) = eis_unit * p * pi^r
                    scaled = tuple(c * s.eis_unit * s.p % s.pN for c in prod)
                    parts[t - e] = _wadd(s, parts[t - e], scaled)
        coords = tuple(c for part in parts for c in part)
        oa = self.ord_pi()
        ob = other.ord_pi()
        oa = self.prec if oa is None else oa
        ob = other.prec if ob is None else ob
        prec = min(self.prec + ob, other.prec + oa, s.prec_pi)
        return RingElem(s, coords, prec)

    def __rmul__(self, other):
        return self * other

    def __pow__(self, k):
        if k < 0:
            return self.inv() ** (-k)
        acc, base = self.spec.one, self
        while k:
            if k & 1:
                acc = acc * base
            k >>= 1
            if k:
                base = base * base
        return acc

    def inv(self):
        """Multiplicative inverse; requires ord_pi == 0."""
        if not self.is_unit():
            raise NonUnitError("inverse of a non-unit (ord_pi != 0)")
        s = self.spec
        z = _unit_inverse(self)
        return RingElem(s, z.coords, self.prec)

    def __truediv__(self, other):
        if isinstance(other, int):
            other = from_int(self.spec, other)
        return self * other.inv()

    def div_by_pi_power(self, k):
        """Exact division by pi^k; requires ord_pi >= k.  The result carries
        reduced precision prec - k (ceil(k/e) lost p-digits), never silently full."""
        if k == 0:
            return self
        if k < 0:
            return self * pi_power(self.spec, -k)
        o = self.ord_pi()
        if o is not None and o < k:
            raise ValuationError("division by pi^%d needs ord >= %d, got %d" % (k, k, o))
        if o is None and self.prec < k:
            raise ValuationError("division by pi^%d not certified at precision" % k)
        s = self.spec
        cur = self
        coords = list(cur.coords)
        for _ in range(k):
            coords = _shift_down_one_pi(s, coords)
        return RingElem(s, coords, self.prec - k)

    def frobenius(self, power=1):
        """sigma^power, the q-Frobenius fixing pi and the base ring R."""
        s = self.spec
        power %= s.d
        if power == 0 or s.w == 1:
            return self
        pows = s._sigma_omega_powers()
        cur = self
        for _ in range(power):
            parts = []
            for part in cur._wparts():
                acc = tuple(0 for _ in range(s.w))
                for i, c in enumerate(part):
                    if c:
                        acc = _wadd(s, acc, tuple(c * t % s.pN for t in pows[i]))
                parts.append(acc)
            cur = RingElem(s, tuple(c for part in parts for c in part), self.prec)
        return cur

    # -- conversions ----------------------------------------------------------

    def embed(self, ext):
        """Image in an extension spec (same p, a, e, N; larger d)."""
        s = self.spec
        if ext is s:
            return self
        if ext.p != s.p or ext.a != s.a or ext.e != s.e or ext.N != s.N:
            raise SpecMismatchError("incompatible extension spec")
        pows = s.embedding_into(ext)
        parts = []
        for part in self._wparts():
            acc = tuple(0 for _ in range(ext.w))
            for i, c in enumerate(part):
                if c:
                    acc = _wadd(ext, acc, tuple(c * t % ext.pN for t in pows[i]))
            parts.append(acc)
        return RingElem(ext, tuple(c for part in parts for c in part), self.prec)

    def project_to_base(self):
        """Express a sigma-invariant element in the base ring R (d = 1).

        Raises PrecisionError when the element is not in R at this precision.
        """
        s = self.spec
        base = s.base_spec()
        if base is s:
            return self
        out_parts = []
        for j, part in enumerate(self._wparts()):
            if s.a == 1:
                # R = Z_p sits as the constants of the omega-basis
                for c in part[1:]:
                    if vp(c, s.p, s.N) * s.e + j < self.prec:
                        raise PrecisionError(
                            "element is not in the base ring at precision "
                            "(non-constant coordinate survives)"
                        )
                out_parts.append((part[0],))
            else:
                pows = base.embedding_into(s)
                sol = _solve_in_span(s, pows, part)
                if sol is None:
                    raise PrecisionError("element is not in the base ring at precision")
                out_parts.append(tuple(sol))
        return RingElem(base, tuple(c for part in out_parts for c in part), self.prec)

    # -- misc -----------------------------------------------------------------

    def digits(self):
        """Base-p digit lists per coordinate, most significant last."""
        p, N = self.spec.p, self.spec.N
        out = []
        for c in self.coords:
            ds = []
            for _ in range(N):
                c, r = divmod(c, p)
                ds.append(r)
            out.append(ds)
        return out

    def __eq__(self, other):
        return (
            isinstance(other, RingElem)
            and other.spec is self.spec
            and other.coords == self.coords
        )

    def __hash__(self):
        return hash((id(self.spec), self.coords))

    def agrees(self, other, prec_pi=None):
        """True when self - other vanishes at min(precisions) (or the given one)."""
        self._check(other)
        diff = self - other
        target = min(self.prec, other.prec) if prec_pi is None else prec_pi
        o = diff.ord_pi()
        return o is None or o >= target

    def __repr__(self):
        if self.spec.ncoords == 1:
            body = str(self.coords[0])
        else:
            body = "[" + ",".join(str(c) for c in self.coords) + "]"
        tag = "" if self.prec == self.spec.prec_pi else "~pi^%d" % self.prec
        return body + tag


def _unit_inverse(x):
    s = x.spec
    # initial inverse from the residue field, then Newton z <- z(2 - xz)
    rbar = x.residue()
    inv0 = gf.poly_from_int(s.residue_field.inv(rbar), s.p)
    coords = [0] * s.ncoords
    for i, c in enumerate(inv0):
        coords[i] = c
    z = RingElem(s, coords)
    one = s.one
    for _ in range(max(1, (s.prec_pi).bit_length() + 1)):
        t = one - x * z
        if t.ord_pi() is None:
            break
        z = z + z * t
    assert (x * z - one).ord_pi() is None, "unit inversion failed"
    return z


def _shift_down_one_pi(spec, coords):
    """Divide the coordinate vector by pi once (exactness already checked)."""
    w, e, p, pN = spec.w, spec.e, spec.p, spec.pN
    parts = [list(coords[j * w:(j + 1) * w]) for j in range(e)]
    head = parts[0]
    if any(c % p for c in head):
        raise ValuationError("pi^0 part not divisible by p during pi-division")
    out = parts[1:] + [[c // p * spec._eis_unit_inv % pN for c in head]]
    return [c % pN for part in out for c in part]


def _solve_in_span(spec, basis_cols, target):
    """Solve sum_i c_i * basis_cols[i] = target with c_i in Z/p^N, unit pivots.

    basis_cols are coordinate tuples (length spec.w) that are linearly
    independent mod p.  Returns the coefficient list or None.
    """
    p, pN, N = spec.p, spec.pN, spec.N
    ncols = len(basis_cols)
    rows = [[basis_cols[j][i] for j in range(ncols)] + [target[i]] for i in range(spec.w)]
    pivots = []
    for col in range(ncols):
        piv = next(
            (r for r in range(len(rows)) if r not in [p_[0] for p_ in pivots]
             and rows[r][col] % p != 0),
            None,
        )
        if piv is None:
            return None
        inv = pow(rows[piv][col], -1, pN)
        rows[piv] = [c * inv % pN for c in rows[piv]]
        for r in range(len(rows)):
            if r != piv and rows[r][col]:
                f = rows[r][col]
                rows[r] = [(c - f * d) % pN for c, d in zip(rows[r], rows[piv])]
        pivots.append((piv, col))
    sol = [0] * ncols
    for piv, col in pivots:
        sol[col] = rows[piv][ncols]
    # consistency of remaining rows
    used = {p_[0] for p_ in pivots}
    for r in range(len(rows)):
        if r not in used and rows[r][ncols] % pN != 0:
            return None
    return sol


def exact_div_int(x, n):
    """x / n for a nonzero integer n, exact: the p-part is divided out through
    pi^(v*e) with the Eisenstein unit restored (p = u^-1 pi^e), checking
    divisibility and recording the precision drop; the unit part of n divides
    by its inverse."""
    if n == 0:
        raise ZeroDivisionError("division by zero integer")
    sign = -1 if n < 0 else 1
    n = abs(n)
    v = 0
    while n % x.spec.p == 0:
        n //= x.spec.p
        v += 1
    out = x * (sign * pow(n, -1, x.spec.pN))
    if v:
        out = out.div_by_pi_power(v * x.spec.e)
        out = out * pow(x.spec.eis_unit, v, x.spec.pN)
    return out


# -- constructors -------------------------------------------------------------

def from_int(spec, n):
    coords = [0] * spec.ncoords
    coords[0] = n % spec.pN
    return RingElem(spec, coords)


def pi_power(spec, k):
    """pi^k as an element (k >= 0)."""
    if k == 0:
        return spec.one
    j, t = divmod(k, spec.e)
    coords = [0] * spec.ncoords
    coords[t * spec.w] = pow(spec.eis_unit, j, spec.pN) * pow(spec.p, j, spec.pN) % spec.pN
    return RingElem(spec, coords)


def from_residue(spec, packed):
    """Trivial (digit) lift of a residue-field element."""
    cs = gf.poly_from_int(packed, spec.p)
    coords = [0] * spec.ncoords
    for i, c in enumerate(cs):
        coords[i] = c
    return RingElem(spec, coords)


def teichmuller_lift(spec, xbar):
    """The Teichmuller lift: t with t ≡ xbar mod pi and t^(q^d) = t mod p^N.

    xbar is a packed residue-field integer or a coordinate list.  Computed by
    iterating t <- t^(q^d), which converges since each step at least doubles
    the pi-adic accuracy of the fixed-point defect.
    """
    if isinstance(xbar, (list, tuple)):
        xbar = gf.poly_to_int([c % spec.p for c in xbar], spec.p)
    t = from_residue(spec, xbar)
    if xbar == 0:
        return t
    Q = spec.q ** spec.d
    for _ in range(spec.prec_pi + 2):
        t2 = t ** Q
        if t2 == t:
            return t
        t = t2
    raise PrecisionError("Teichmuller iteration failed to stabilize")


class TeichPoint:
    """An n-tuple of Teichmuller coordinates in R_d, tagged with its Frobenius
    orbit data.  degree is the ambient d; orbit_len divides degree and equals
    the degree of the closed point the orbit represents."""

    __slots__ = ("spec", "coords", "degree", "orbit_len", "residues", "is_orbit_rep")

    def __init__(self, spec, coords, degree, orbit_len, residues, is_orbit_rep=True):
        self.spec = spec
        self.coords = tuple(coords)
        self.degree = degree
        self.orbit_len = orbit_len
        self.residues = tuple(residues)
        self.is_orbit_rep = is_orbit_rep

    @property
    def n(self):
        return len(self.coords)

    def frobenius(self, power=1):
        """The conjugate point x^sigma^power."""
        return TeichPoint(
            self.spec,
            tuple(c.frobenius(power) for c in self.coords),
            self.degree,
            self.orbit_len,
            tuple(self.spec.residue_field.frobenius(r, self.spec.a * power)
                  for r in self.residues),
            False,
        )

    def __repr__(self):
        return "TeichPoint(deg=%d, orbit=%d, residues=%s)" % (
            self.degree, self.orbit_len, self.residues,
        )


def closed_point_count(q, n, d):
    """Number of closed points of degree d on A^n over F_q (Mobius formula)."""
    def mobius(m):
        result, k, mm = 1, 2, m
        while k * k <= mm:
            if mm % k == 0:
                mm //= k
                if mm % k == 0:
                    return 0
                result = -result
            k += 1
        if mm > 1:
            result = -result
        return result

    total = 0
    for ell in range(1, d + 1):
        if d % ell == 0:
            total += mobius(d // ell) * q ** (n * ell)
    assert total % d == 0
    return total // d


def enumerate_teichmuller_points(n, d, spec, dedupe=True, cap=200000):
    """All n-tuples of Teichmuller lifts of F_{q^d}-points of A^n.

    With dedupe, one representative per Frobenius orbit is returned (orbit
    length = degree of the closed point, dividing d); otherwise every point,
    with is_orbit_rep set on the canonical representative (lexicographically
    smallest residue tuple in the orbit).

    This is the standard-lift enumeration: coordinates satisfy t^(q^d) = t.
    """
    ext = spec.extension(d)
    qd = ext.residue_field.q
    if qd ** n > cap:
        raise EnumerationCapError(
            "q^(d*n) = %d exceeds the enumeration cap %d" % (qd ** n, cap)
        )
    fld = ext.residue_field
    seen = set()
    points = []
    teich_cache = {}

    def lift(r):
        if r not in teich_cache:
            teich_cache[r] = teichmuller_lift(ext, r)
        return teich_cache[r]

    for tup in product(range(qd), repeat=n):
        orbit = []
        cur = tup
        while cur not in orbit:
            orbit.append(cur)
            cur = tuple(fld.frobenius(c, spec.a) for c in cur)
        rep = min(orbit)
        length = len(orbit)
        assert d % length == 0
        if dedupe:
            if rep in seen:
                continue
            seen.add(rep)
            points.append(TeichPoint(ext, [lift(r) for r in rep], d, length, rep, True))
        else:
            points.append(
                TeichPoint(ext, [lift(r) for r in tup], d, length, tup, tup == rep)
            )
    return points


def closed_points(n, max_degree, spec, cap=200000):
    """Orbit representatives of exact degree d for every d <= max_degree,
    cross-checked against the Mobius count.  Returns {d: [TeichPoint...]}."""
    out = {}
    for d in range(1, max_degree + 1):
        pts = [pt for pt in enumerate_teichmuller_points(n, d, spec, True, cap)
               if pt.orbit_len == d]
        expected = closed_point_count(spec.q, n, d)
        assert len(pts) == expected, (
            "orbit enumeration mismatch at degree %d: %d vs %d" % (d, len(pts), expected)
        )
        out[d] = pts
    return out
