"""Arithmetic in small finite fields F_{p^m}.

Elements are packed integers: the polynomial c_0 + c_1*x + ... + c_{m-1}*x^{m-1}
over F_p is stored as the integer sum(c_i * p**i).  Fields at desk scale have at
most a few thousand elements, so everything is done by direct polynomial
arithmetic modulo a fixed monic irreducible modulus; no tables are required.
"""

from functools import lru_cache

from .errors import NonUnitError


def poly_from_int(n, p):
    """Unpack a base-p integer into a coefficient list (low degree first)."""
    cs = []
    while n:
        n, r = divmod(n, p)
        cs.append(r)
    return cs


def poly_to_int(cs, p):
    n = 0
    for c in reversed(cs):
        n = n * p + (c % p)
    return n


def _poly_mulmod(a, b, mod, p):
    # a, b, mod: coefficient lists over F_p, mod monic
    if not a or not b:
        return []
    prod = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod[i + j] = (prod[i + j] + ai * bj) % p
    # reduce
    m = len(mod) - 1
    for i in range(len(prod) - 1, m - 1, -1):
        c = prod[i]
        if c:
            prod[i] = 0
            for j in range(m):
                prod[i - m + j] = (prod[i - m + j] - c * mod[j]) % p
    while prod and prod[-1] == 0:
        prod.pop()
    return prod


class GF:
    """The field F_{p^m} presented as F_p[x]/(modulus).

    modulus is a tuple of m+1 ints in [0, p), monic.  Elements are packed
    integers in [0, p^m).
    """

    def __init__(self, p, modulus):
        self.p = p
        self.modulus = tuple(c % p for c in modulus)
        assert self.modulus[-1] == 1, "modulus must be monic"
        self.m = len(self.modulus) - 1
        self.q = p ** self.m

    def add(self, a, b):
        p = self.p
        ca, cb = poly_from_int(a, p), poly_from_int(b, p)
        n = max(len(ca), len(cb))
        ca += [0] * (n - len(ca))
        cb += [0] * (n - len(cb))
        return poly_to_int([(x + y) % p for x, y in zip(ca, cb)], p)

    def neg(self, a):
        p = self.p
        return poly_to_int([(-c) % p for c in poly_from_int(a, p)], p)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        p = self.p
        return poly_to_int(
            _poly_mulmod(poly_from_int(a, p), poly_from_int(b, p), list(self.modulus), p), p
        )

    def pow(self, a, k):
        if k < 0:
            return self.pow(self.inv(a), -k)
        r, base = 1, a
        while k:
            if k & 1:
                r = self.mul(r, base)
            base = self.mul(base, base)
            k >>= 1
        return r

    def inv(self, a):
        if a == 0:
            raise NonUnitError("0 is not invertible in GF(%d^%d)" % (self.p, self.m))
        # a^(q-2); fields are tiny, no need for xgcd
        return self.pow(a, self.q - 2)

    def frobenius(self, a, power=1):
        """a ** (p^power)."""
        return self.pow(a, self.p ** (power % (self.m) if self.m else 1))

    def elements(self):
        return range(self.q)

    def minimal_polynomial(self, a):
        """Minimal polynomial of a over F_p, as a coefficient tuple."""
        # conjugates a^(p^i) until repetition
        conj, z = [], a
        while z not in conj:
            conj.append(z)
            z = self.pow(z, self.p)
        # product of (x - c) expanded over the field, must end with F_p coeffs
        poly = [1]  # coefficients in GF, low first, of prod(x - c)
        for c in conj:
            nxt = [0] * (len(poly) + 1)
            for i, co in enumerate(poly):
                nxt[i + 1] = self.add(nxt[i + 1], co)
                nxt[i] = self.sub(nxt[i], self.mul(co, c))
            poly = nxt
        out = []
        for co in poly:
            assert co < self.p, "minimal polynomial has non-prime-field coefficient"
            out.append(co)
        return tuple(out)


def _poly_powmod_x(e, mod, p):
    """x^e mod (mod) over F_p, coefficient list."""
    result = [1]
    base = [0, 1]
    m = len(mod) - 1
    if m == 1:
        base = _poly_mulmod([0, 1], [1], mod, p)
    while e:
        if e & 1:
            result = _poly_mulmod(result, base, mod, p)
        base = _poly_mulmod(base, base, mod, p)
        e >>= 1
    return result


def _poly_gcd(a, b, p):
    a, b = list(a), list(b)
    while b and any(b):
        while b and b[-1] == 0:
            b.pop()
        if not b:
            break
        # a mod b
        inv_lead = pow(b[-1], p - 2, p)
        while len(a) >= len(b) and any(a):
            while a and a[-1] == 0:
                a.pop()
            if len(a) < len(b):
                break
            c = a[-1] * inv_lead % p
            shift = len(a) - len(b)
            for i, bc in enumerate(b):
                a[shift + i] = (a[shift + i] - c * bc) % p
        a, b = b, a
    while a and a[-1] == 0:
        a.pop()
    return a


def is_irreducible(coeffs, p):
    """Rabin test for a monic polynomial over F_p (coefficient tuple, low first)."""
    m = len(coeffs) - 1
    if m < 1 or coeffs[-1] % p != 1:
        return False
    mod = [c % p for c in coeffs]
    if m == 1:
        return True
    # x^(p^m) == x mod f
    t = list(_poly_powmod_x(p ** m, mod, p))
    while len(t) < 2:
        t.append(0)
    t[1] = (t[1] - 1) % p
    if any(t):
        return False
    # gcd(x^(p^(m/l)) - x, f) == 1 for prime divisors l of m
    for ell in {d for d in range(2, m + 1) if m % d == 0 and all(d % k for k in range(2, d))}:
        g = _poly_powmod_x(p ** (m // ell), mod, p)
        g = list(g) + [0] * (2 - len(g))
        g[1] = (g[1] - 1) % p
        if len(_poly_gcd(list(mod), g, p)) > 1:
            return False
    return True


@lru_cache(maxsize=None)
def default_modulus(p, m):
    """Lexicographically smallest monic irreducible of degree m over F_p.

    Deterministic per (p, m); recorded in run metadata so results are
    reproducible without any external polynomial tables.
    """
    if m == 1:
        return (0, 1)
    # iterate over low coefficient vectors in lex order
    for packed in range(p ** m):
        coeffs = poly_from_int(packed, p)
        coeffs += [0] * (m - len(coeffs))
        cand = tuple(coeffs) + (1,)
        if is_irreducible(cand, p):
            return cand
    raise AssertionError("no irreducible polynomial found (impossible)")


def subfield_root(field, sub_modulus):
    """A root in `field` of the given irreducible polynomial over F_p.

    Used to embed F_{p^k} into F_{p^m} when k | m.  Brute force; fields are tiny.
    """
    p = field.p
    coeffs = [c % p for c in sub_modulus]
    for a in field.elements():
        acc, pw = 0, 1
        for c in coeffs:
            if c:
                acc = field.add(acc, field.mul(c, pw))
            pw = field.mul(pw, a)
        if acc == 0:
            return a
    raise ValueError("polynomial has no root in this field")
