"""Sigma-modules as Frobenius matrices over the truncated series ring.

A module of rank r is an r x r matrix G of TruncSeries together with a
Frobenius lift; the convention is phi(e) = e G on a row basis, so in
coordinates a vector v maps to G * sigma(v).  The d-th fiber iterate at a
Teichmuller point x of degree d is

    G(x) * tau(G(x)) * tau^2(G(x)) * ... * tau^(d-1)(G(x)),

using x o sigma = tau o x; equivalently one can apply sigma to the matrix
entries as series j times and evaluate at x.  Both routes are implemented
and cross-checked in the tests.
"""

from itertools import combinations, permutations

from .errors import PrecisionError, SpecMismatchError, ValuationError
from .linalg import berkowitz_char_series, kernel_mod_pn, mat_mul
from .ring import RingElem
from .series import TruncSeries


class SigmaModule:
    """rank-r Frobenius matrix over the series ring plus its lift."""

    def __init__(self, matrix, lift, label=""):
        self.rank = len(matrix)
        if any(len(row) != self.rank for row in matrix):
            raise ValueError("matrix must be square")
        self.lift = lift
        self.label = label
        if self.rank:
            s0 = matrix[0][0].spec
            nv = matrix[0][0].nvars
            for row in matrix:
                for entry in row:
                    if entry.spec is not s0 or entry.nvars != nv:
                        raise SpecMismatchError("matrix entries over mismatched rings")
            if nv != lift.nvars or s0 is not lift.spec:
                raise SpecMismatchError("matrix and Frobenius lift disagree")
        self.G = [list(row) for row in matrix]

    @property
    def spec(self):
        return self.lift.spec

    @property
    def nvars(self):
        return self.lift.nvars

    @classmethod
    def from_text(cls, spec, lift, rank, entries, label="", cap=None):
        """entries: flat list of series texts, row major."""
        if len(entries) != rank * rank:
            raise ValueError("need rank^2 entries")
        mat = [
            [TruncSeries.from_text(spec, lift.nvars, entries[i * rank + j], cap=cap)
             for j in range(rank)]
            for i in range(rank)
        ]
        return cls(mat, lift, label)

    @classmethod
    def identity(cls, spec, lift, label="identity"):
        one = TruncSeries.constant(spec, lift.nvars, 1)
        return cls([[one]], lift, label)

    @classmethod
    def constant(cls, spec, lift, rows, label=""):
        """rows: list of lists of ints (or RingElems)."""
        mat = [
            [TruncSeries.constant(spec, lift.nvars, c) for c in row]
            for row in rows
        ]
        return cls(mat, lift, label)

    def is_constant(self):
        z = (0,) * self.nvars
        return all(all(all(u == z for u in e.coeffs) for e in row) for row in self.G)

    def max_degree(self):
        return max((e.degree() for row in self.G for e in row), default=0)

    def entry_min_ord(self):
        """min ord over all entries' coefficients (None = zero matrix at precision)."""
        best = None
        for row in self.G:
            for e in row:
                o = e.min_ord()
                if o == 0:
                    return 0
                if o is not None and (best is None or o < best):
                    best = o
        return best

    def scaled(self, j, label=None):
        """pi_scale(j): multiply the matrix by pi^j (divide for j < 0).

        Division requires every coefficient to have ord >= |j|; the resulting
        coefficients carry reduced precision tags.
        """
        if j == 0:
            return self
        if j > 0:
            from .ring import pi_power
            pj = pi_power(self.spec, j)
            mat = [[e * pj for e in row] for row in self.G]
        else:
            k = -j
            mo = self.entry_min_ord()
            if mo is not None and mo < k:
                raise ValuationError(
                    "pi_scale(%d) needs entrywise ord >= %d, found %d" % (j, k, mo)
                )
            mat = [
                [e.map_coefficients(lambda c: c.div_by_pi_power(k)) for e in row]
                for row in self.G
            ]
        return SigmaModule(mat, self.lift,
                           label if label is not None else "%s*pi^%d" % (self.label, j))

    def __repr__(self):
        return "SigmaModule(rank=%d, label=%r)" % (self.rank, self.label)


class CharPoly:
    """det(I - T phi_x^d) at a fiber: coefficients c_0..c_r in the base ring R
    (verified sigma-invariant and projected), plus the fiber degree."""

    def __init__(self, coeffs, degree):
        self.coeffs = list(coeffs)
        self.degree = degree
        if not self.coeffs or any(self.coeffs[0].coords[i] != (1 if i == 0 else 0)
                                  for i in range(len(self.coeffs[0].coords))):
            raise ValueError("characteristic polynomial must have constant term 1")

    @property
    def spec(self):
        return self.coeffs[0].spec

    @property
    def rank(self):
        return len(self.coeffs) - 1

    def prec_floor(self):
        return min(c.prec for c in self.coeffs)

    def __repr__(self):
        return "CharPoly(deg_pt=%d, %s)" % (
            self.degree, [c.coords[0] if c.spec.ncoords == 1 else c.coords
                          for c in self.coeffs])


def fiber_frobenius(mod, point, route="value"):
    """The matrix of phi_x^d over R_d at a Teichmuller point of ambient degree d.

    route="value": evaluate G once and multiply Frobenius twists of the values.
    route="series": apply sigma to the matrix entries as series, then evaluate.
    The two must agree; tests exercise both.
    """
    d = point.degree
    if route == "series":
        mats = []
        cur = mod.G
        from .linalg import series_mat_sigma
        for j in range(d):
            if j > 0:
                cur = series_mat_sigma(cur, mod.lift)
            mats.append([[e.evaluate(point) for e in row] for row in cur])
    else:
        base = [[e.evaluate(point) for e in row] for row in mod.G]
        mats = [[[x.frobenius(j) for x in row] for row in base] for j in range(d)]
    acc = mats[0]
    for M in mats[1:]:
        acc = mat_mul(acc, M)
    return acc


def char_poly(mod, point, check_rationality=True):
    """det(I - T * fiber_frobenius), division-free, coefficients verified in R.

    The coefficients are computed in R_d, checked sigma-invariant at their
    precision, and projected to the base ring.  A failure at full precision
    signals a bug or an unsound cap and raises PrecisionError.
    """
    B = fiber_frobenius(mod, point)
    ext = B[0][0].spec if mod.rank else mod.spec.extension(point.degree)
    coeffs = berkowitz_char_series(B, ext.one, ext.zero)
    out = []
    for c in coeffs:
        if check_rationality:
            if not c.frobenius().agrees(c):
                raise PrecisionError(
                    "characteristic polynomial coefficient not sigma-invariant: "
                    "R-rationality fails at precision (unsound cap or bug)"
                )
        out.append(c.project_to_base())
    return CharPoly(out, point.degree)


def char_poly_of_matrix(B, degree):
    """CharPoly from an already-computed fiber matrix over R_d."""
    ext = B[0][0].spec
    coeffs = berkowitz_char_series(B, ext.one, ext.zero)
    return CharPoly([c.project_to_base() for c in coeffs], degree)


# -- constructions -------------------------------------------------------------

def _check_same_context(a, b):
    if a.lift is not b.lift or a.spec is not b.spec:
        raise SpecMismatchError("constructions require a shared lift and spec")


def direct_sum(a, b):
    _check_same_context(a, b)
    zero = TruncSeries.zero(a.spec, a.nvars)
    n, m = a.rank, b.rank
    mat = [[zero] * (n + m) for _ in range(n + m)]
    for i in range(n):
        for j in range(n):
            mat[i][j] = a.G[i][j]
    for i in range(m):
        for j in range(m):
            mat[n + i][n + j] = b.G[i][j]
    return SigmaModule(mat, a.lift, "(%s)+(%s)" % (a.label, b.label))


def tensor(a, b):
    """Kronecker product in the basis e_i (x) f_k, ordered lexicographically."""
    _check_same_context(a, b)
    n, m = a.rank, b.rank
    mat = [[None] * (n * m) for _ in range(n * m)]
    for i in range(n):
        for j in range(n):
            for k in range(m):
                for l in range(m):
                    mat[i * m + k][j * m + l] = a.G[i][j] * b.G[k][l]
    return SigmaModule(mat, a.lift, "(%s)x(%s)" % (a.label, b.label))


def sym_power(a, k):
    """Sym^k in the monomial basis e^u (|u| = k), lex ordered.

    phi(e^u) = prod_j (sum_i e_i G_ij)^(u_j), expanded in the symmetric
    algebra; fiber eigenvalues compose as degree-k monomials in the
    originals, which the tests check against a symbolic oracle.
    """
    r = a.rank
    basis = _monomials(r, k)
    index = {u: t for t, u in enumerate(basis)}
    zero = TruncSeries.zero(a.spec, a.nvars)
    mat = [[zero] * len(basis) for _ in range(len(basis))]
    for col, u in enumerate(basis):
        # polynomial in symbols: dict exponent -> series
        poly = {(0,) * r: TruncSeries.constant(a.spec, a.nvars, 1)}
        for j, e in enumerate(u):
            for _ in range(e):
                nxt = {}
                for mono, coef in poly.items():
                    for i in range(r):
                        gij = a.G[i][j]
                        m2 = tuple(x + (1 if t == i else 0) for t, x in enumerate(mono))
                        term = coef * gij
                        nxt[m2] = nxt[m2] + term if m2 in nxt else term
                poly = nxt
        for mono, coef in poly.items():
            mat[index[mono]][col] = mat[index[mono]][col] + coef
    return SigmaModule(mat, a.lift, "Sym^%d(%s)" % (k, a.label))


def ext_power(a, k):
    """Wedge^k in the ordered-index-subset basis (lex), standard alternating
    signs.  Wedge^0 is the rank-one identity module by convention."""
    if k == 0:
        return SigmaModule.identity(a.spec, a.lift, "Ext^0")
    r = a.rank
    if k > r:
        raise ValueError("exterior power beyond the rank is zero")
    basis = list(combinations(range(r), k))
    index = {S: t for t, S in enumerate(basis)}
    zero = TruncSeries.zero(a.spec, a.nvars)
    mat = [[zero] * len(basis) for _ in range(len(basis))]
    for col, S in enumerate(basis):
        for T in basis:
            # minor of G with rows T, columns S
            mat[index[T]][col] = _det_series(
                [[a.G[ti][sj] for sj in S] for ti in T], a.spec, a.nvars
            )
    return SigmaModule(mat, a.lift, "Ext^%d(%s)" % (k, a.label))


def iterate_matrix(a, k):
    """Matrix of the k-th iterate phi^k: G * sigma(G) * ... * sigma^(k-1)(G).

    Degree caps grow like q^(k-1) * deg(G) for non-constant matrices under the
    standard lift; intended for small k diagnostics and fiber cross-checks.
    """
    from .linalg import series_mat_sigma

    acc = a.G
    cur = a.G
    for j in range(1, k):
        cur = series_mat_sigma(cur, a.lift)
        acc = mat_mul(acc, cur)
    return SigmaModule(acc, a.lift, "(%s)^%d" % (a.label, k))


def construct(op, *mods, **kw):
    """Dispatcher matching the operation names used by the run config."""
    if op == "direct_sum":
        out = mods[0]
        for m in mods[1:]:
            out = direct_sum(out, m)
        return out
    if op == "tensor":
        out = mods[0]
        for m in mods[1:]:
            out = tensor(out, m)
        return out
    if op == "sym":
        return sym_power(mods[0], kw["k"])
    if op == "ext":
        return ext_power(mods[0], kw["k"])
    if op == "pi_scale":
        return mods[0].scaled(kw["j"])
    if op == "iterate_matrix":
        return iterate_matrix(mods[0], kw["k"])
    raise ValueError("unknown construction %r" % op)


def _monomials(r, k):
    """Exponent tuples of total degree k in r symbols, lex order."""
    if r == 1:
        return [(k,)]
    out = []
    for first in range(k, -1, -1):
        for rest in _monomials(r - 1, k - first):
            out.append((first,) + rest)
    return out


def _det_series(M, spec, nvars):
    n = len(M)
    if n == 0:
        return TruncSeries.constant(spec, nvars, 1)
    acc = TruncSeries.zero(spec, nvars)
    for perm in permutations(range(n)):
        sgn = 1
        pl = list(perm)
        for i in range(n):
            for j in range(i + 1, n):
                if pl[i] > pl[j]:
                    sgn = -sgn
        term = M[0][perm[0]]
        for i in range(1, n):
            term = term * M[i][perm[i]]
        acc = acc + term * sgn
    return acc


# -- nilpotent / injective diagnostic -------------------------------------------

def split_nilpotent(mod, probe_depth=None, fiber_sample=None):
    """Report the nilpotent/injective structure at working precision.

    For constant matrices over the base ring the exact kernel filtration of
    G^k is computed (unit-content kernels mod p^N).  Otherwise sampled fibers
    are probed for det == 0 at precision.  Returns a dict report; purely
    diagnostic, never raises on mathematical outcomes.
    """
    r = mod.rank
    depth = r if probe_depth is None else probe_depth
    spec = mod.spec
    report = {"rank": r, "mode": None, "nilpotent_index": None,
              "kernel_dims": [], "verdict": None, "witness": None}
    if mod.is_constant() and spec.w == 1 and spec.e == 1:
        report["mode"] = "constant-exact"
        # semilinear iterates of a constant matrix with trivial sigma: plain powers
        G = [[e.constant_term().coords[0] for e in row] for row in mod.G]
        pN = spec.pN
        P = [row[:] for row in G]
        for k in range(1, depth + 1):
            ker = kernel_mod_pn(P, spec.p, spec.N)
            report["kernel_dims"].append(len(ker))
            if all(all(x % pN == 0 for x in row) for row in P):
                report["nilpotent_index"] = k
                report["verdict"] = "nilpotent"
                return report
            P = [[sum(P[i][t] * G[t][j] for t in range(r)) % pN for j in range(r)]
                 for i in range(r)]
        if report["kernel_dims"] and report["kernel_dims"][-1] == 0:
            report["verdict"] = "certified-injective"
        else:
            report["verdict"] = "mixed"
            report["kernel_basis"] = kernel_mod_pn(
                _int_pow(G, depth, pN), spec.p, spec.N
            )
        return report
    report["mode"] = "sampled-fibers"
    from .ring import enumerate_teichmuller_points

    pts = fiber_sample
    if pts is None:
        pts = [pt for d in (1, 2)
               for pt in enumerate_teichmuller_points(mod.nvars, d, spec)
               if pt.orbit_len == d]
    for pt in pts:
        B = fiber_frobenius(mod, pt)
        det = _det_ring(B)
        if det.is_zero_at_precision():
            report["verdict"] = "kernel-witness"
            report["witness"] = pt.residues
            return report
    report["verdict"] = "injective up to precision"
    return report


def _int_pow(G, k, pN):
    r = len(G)
    P = [[1 if i == j else 0 for j in range(r)] for i in range(r)]
    for _ in range(k):
        P = [[sum(P[i][t] * G[t][j] for t in range(r)) % pN for j in range(r)]
             for i in range(r)]
    return P


def _det_ring(B):
    n = len(B)
    spec = B[0][0].spec
    acc = spec.zero
    for perm in permutations(range(n)):
        sgn = 1
        pl = list(perm)
        for i in range(n):
            for j in range(i + 1, n):
                if pl[i] > pl[j]:
                    sgn = -sgn
        term = B[0][perm[0]]
        for i in range(1, n):
            term = term * B[i][perm[i]]
        acc = acc + term * sgn
    return acc
