"""The Monsky trace formula over A^n via truncated Dwork operators.

For a rank-r module with matrix G and a split polynomial Frobenius lift
(sigma(X_j) = s_j(X_j), monic of degree q), the operator theta_i(phi) acting
on i-form-twisted dual coordinates is block diagonal over the form index
dX_S (|S| = i).  The (k, u) -> (l, v) entry of the S-block is the X^v
coefficient of

    theta_top( X^u * G[k][l] * prod_{j not in S} s_j'(X_j) ),

where theta_top is the top-form Dwork operator, a tensor product of
univariate operators.  Each univariate operator is computed from the
explicit rank-q free basis {1, X, ..., X^(q-1)} of the series ring over
sigma(its image): writing the minimal polynomial P(Y) = s(Y) - t of X over
the image and expanding P(Y)/(Y - X) = sum c_i(X) Y^i gives the trace-dual
basis, hence theta(X^r dX) for r < q; larger exponents reduce modulo P.

For the standard lift this collapses to the familiar rule
theta(X^u dX) = X^((u-q+1)/q) dX when u = q-1 mod q (and 0 otherwise), with
the q-power factors entering through the s' multipliers on the complementary
form indices; the closed form is exercised directly by the tests.

Truncation is exact for polynomial matrices: any cycle of the infinite
operator is supported on monomials of total degree <= (deg G + n(q-1))/(q-1),
so Fredholm coefficients of the truncation agree with the full operator once
the basis cap B clears that bound.  Matrices with only a linear decay witness
get a quantitative tail certificate instead, and runs whose cap cannot be
certified are flagged.
"""

from fractions import Fraction
from itertools import combinations, product

from .errors import CapError, PrecisionError
from .lfunc import LSeries, tp_inv, tp_mul
from .linalg import berkowitz_char_series, charpoly_lower_coeffs_int
from .ring import RingElem, from_int
from .series import teichmuller_points_for_lift


class DworkOpMatrix:
    """Truncated matrix of theta_i(phi), block diagonal over the form index.

    blocks[S] is a dense matrix over the base ring indexed by (component,
    monomial) pairs; monomials run over total degree <= B.  The static
    divisibility from the construction is pi^((n-i) * ord_pi q), recorded in
    div_exponent and asserted by the tests.
    """

    def __init__(self, spec, n, i, B, monomials, blocks, label="",
                 tail_certified=True, tail_floor=None):
        self.spec = spec
        self.n = n
        self.i = i
        self.B = B
        self.monomials = monomials
        self.blocks = blocks
        self.label = label
        self.tail_certified = tail_certified
        self.tail_floor = tail_floor
        self.div_exponent = (n - i) * spec.a * spec.e

    def block_items(self):
        return sorted(self.blocks.items())

    def dim(self):
        return sum(len(b) for b in self.blocks.values())

    def trace(self):
        t = self.spec.zero
        for _, b in self.block_items():
            for j in range(len(b)):
                t = t + b[j][j]
        return t

    def entry_min_ord(self):
        best = None
        for _, b in self.blocks.items():
            for row in b:
                for x in row:
                    o = x.ord_pi()
                    if o == 0:
                        return 0
                    if o is not None and (best is None or o < best):
                        best = o
        return best

    def __repr__(self):
        return "DworkOp(i=%d, dim=%d, B=%d%s)" % (
            self.i, self.dim(), self.B,
            "" if self.tail_certified else ", EMPIRICAL CAP")


def _univar_theta_table(spec, s_coeffs, wmax):
    """Univariate theta(X^w dX) for w <= wmax, as {w: {v: coeff}}.

    s_coeffs: coefficients of the monic degree-q lift polynomial s(Y).
    The dual-basis values theta(X^r dX) (r < q) come from inverting the
    transition matrix between {X^r} and the Euler dual basis c_i(X); the
    matrix is the anti-identity mod pi, hence invertible.
    """
    q = spec.q
    zero, one = spec.zero, spec.one
    # c_i(X) = X^(q-1-i) + sum_{k>i} s_k X^(k-1-i);  M[r][i] = X^r coeff of c_i
    M = [[zero] * q for _ in range(q)]
    for i in range(q):
        M[q - 1 - i][i] = one
        for k in range(i + 1, q):
            M[k - 1 - i][i] = M[k - 1 - i][i] + s_coeffs[k]
    Minv = _invert_ring_matrix(M, spec)
    t_vals = [Minv[0][r] for r in range(q)]  # theta(X^r dX) constants
    # reduce X^w modulo X^q = t - lower(X); terms keyed by (xdeg, tdeg)
    lower = s_coeffs[:q]
    table = {}
    cur = {(0, 0): one}
    for w in range(wmax + 1):
        if w:
            nxt = {}
            for (x, t), c in cur.items():
                if x + 1 < q:
                    key = (x + 1, t)
                    nxt[key] = nxt.get(key, zero) + c
                else:
                    key = (0, t + 1)
                    nxt[key] = nxt.get(key, zero) + c
                    for xd, lc in enumerate(lower):
                        if any(lc.coords):
                            key2 = (xd, t)
                            nxt[key2] = nxt.get(key2, zero) - c * lc
            cur = {k: v for k, v in nxt.items() if any(v.coords)}
        row = {}
        for (x, t), c in cur.items():
            val = c * t_vals[x]
            if any(val.coords):
                row[t] = row.get(t, zero) + val
        table[w] = {v: c for v, c in row.items() if any(c.coords)}
    return table


def _invert_ring_matrix(M, spec):
    n = len(M)
    A = [row[:] for row in M]
    I = [[spec.one if i == j else spec.zero for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col].is_unit()), None)
        if piv is None:
            raise CapError("general lift trace basis not free at this cap")
        if piv != col:
            A[piv], A[col] = A[col], A[piv]
            I[piv], I[col] = I[col], I[piv]
        inv = A[col][col].inv()
        A[col] = [x * inv for x in A[col]]
        I[col] = [x * inv for x in I[col]]
        for r in range(n):
            if r != col and any(A[r][col].coords):
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
                I[r] = [x - f * y for x, y in zip(I[r], I[col])]
    return I


def _monomials_upto(n, B):
    out = [u for u in product(range(B + 1), repeat=n) if sum(u) <= B]
    out.sort()
    return out


def default_basis_cap(mod):
    """Smallest cap that makes the truncation exact for polynomial matrices:
    all operator cycles live in total degree <= (deg G + n(q-1))/(q-1)."""
    q = mod.spec.q
    degG = mod.max_degree()
    n = mod.nvars
    core = Fraction(degG + n * (q - 1), q - 1)
    return int(core) + 1


def build_dwork_operator(mod, i, B=None, allow_empirical=False):
    """The truncated matrix of theta_i(phi) on Omega^i-twisted dual coordinates.

    Requires a split polynomial lift (CapError otherwise: no certified free
    trace basis is available).  For matrices that are truncations with a
    linear decay witness, the dropped tail is certified to lie above the ring
    precision; if it cannot be, the operator is flagged (or rejected).
    """
    spec = mod.spec
    n = mod.nvars
    q = spec.q
    split = mod.lift.split_polynomials()
    if split is None:
        raise CapError(
            "general lift trace basis not free at this cap: the Frobenius "
            "lift is not split per-variable monic of degree q"
        )
    if B is None:
        B = default_basis_cap(mod)
    # tail certification for non-polynomial matrices
    tail_certified = True
    tail_floor = None
    if not all(e.is_polynomial() for row in mod.G for e in row):
        floors = []
        for row in mod.G:
            for e in row:
                if not e.is_polynomial():
                    from .series import _as_linear
                    if e.witness is None:
                        floors.append(Fraction(0))
                    else:
                        c, b = _as_linear(e.witness)
                        floors.append(c * B * Fraction(q - 1, q) - b)
        tail_floor = min(floors) if floors else None
        if tail_floor is not None and tail_floor < spec.prec_pi:
            if not allow_empirical:
                raise CapError(
                    "basis cap %d uncertified: tail floor %s below precision %d "
                    "(pass allow_empirical=True to flag instead)"
                    % (B, tail_floor, spec.prec_pi)
                )
            tail_certified = False
    monos = _monomials_upto(n, B)
    mono_index = {u: t for t, u in enumerate(monos)}
    r = mod.rank
    degG = mod.max_degree()
    wmax = B + degG + (q - 1)
    tables = [_univar_theta_table(spec, split[j], wmax) for j in range(n)]
    # derivative multipliers s_j'(X_j)
    derivs = []
    for j in range(n):
        dcoeffs = [split[j][k] * k for k in range(1, q + 1)]
        derivs.append(dcoeffs)
    blocks = {}
    dim_block = r * len(monos)
    for S in combinations(range(n), i):
        Sc = [j for j in range(n) if j not in S]
        block = [[spec.zero] * dim_block for _ in range(dim_block)]
        for k in range(r):
            for l in range(r):
                g = mod.G[k][l]
                if not g.coeffs:
                    continue
                # multiply G[k][l] by prod_{j in Sc} s_j'(X_j)
                mult = dict(g.coeffs)
                for j in Sc:
                    nxt = {}
                    for u, c in mult.items():
                        for dd, dc in enumerate(derivs[j]):
                            if not any(dc.coords):
                                continue
                            u2 = tuple(x + (dd if t == j else 0)
                                       for t, x in enumerate(u))
                            val = c * dc
                            nxt[u2] = nxt.get(u2, spec.zero) + val
                    mult = nxt
                for ui, u in enumerate(monos):
                    col = k * len(monos) + ui
                    for w0, c in mult.items():
                        w = tuple(a + b for a, b in zip(u, w0))
                        # theta_top: per-variable tables
                        vecs = [((), c)]
                        for j in range(n):
                            tab = tables[j].get(w[j], {})
                            vecs = [
                                (vt + (vj,), cc * cj)
                                for vt, cc in vecs
                                for vj, cj in tab.items()
                            ]
                            if not vecs:
                                break
                        for vt, cc in vecs:
                            if sum(vt) <= B and any(cc.coords):
                                row = l * len(monos) + mono_index[vt]
                                block[row][col] = block[row][col] + cc
        blocks[S] = block
    return DworkOpMatrix(spec, n, i, B, monos, blocks, label=mod.label,
                         tail_certified=tail_certified, tail_floor=tail_floor)


def fredholm_det(opm, D):
    """det(I - T * theta_i) mod T^(D+1): product over the form-index blocks of
    division-free truncated characteristic series.  Coefficient j carries the
    construction divisibility ord >= div_exponent * j."""
    spec = opm.spec
    acc = [spec.one] + [spec.zero] * D
    use_int = spec.ncoords == 1
    for S, block in opm.block_items():
        if not block:
            continue
        if use_int:
            A = [[x.coords[0] for x in row] for row in block]
            cs = charpoly_lower_coeffs_int(A, spec.pN, D)
            cs = [from_int(spec, c) for c in cs]
        else:
            cs = berkowitz_char_series(block, spec.one, spec.zero, dmax=D)
        acc = tp_mul(acc, cs, D)
    prec = spec.prec_pi
    if not opm.tail_certified and opm.tail_floor is not None:
        prec = max(0, int(opm.tail_floor))
    coeffs = [RingElem(spec, c.coords, min(c.prec, prec) if j else c.prec)
              for j, c in enumerate(acc)]
    out = LSeries(coeffs, method="fredholm(i=%d)" % opm.i,
                  caps={"B": opm.B, "D": D,
                        "tail_certified": opm.tail_certified})
    # divisibility from the construction: ord(c_j) >= div_exponent * j
    for j, c in enumerate(out.coeffs):
        o = c.ord_pi()
        if o is not None and o < opm.div_exponent * j:
            raise PrecisionError(
                "Fredholm coefficient T^%d violates the construction "
                "divisibility pi^%d" % (j, opm.div_exponent * j)
            )
    return out


def trace_formula_L(mod, D=4, B=None, allow_empirical=False):
    """L(phi, T) as the alternating product of Fredholm determinants,
    together with the per-form-degree factors for inspection."""
    n = mod.nvars
    dets = []
    for i in range(n + 1):
        opm = build_dwork_operator(mod, i, B=B, allow_empirical=allow_empirical)
        dets.append(fredholm_det(opm, D))
    spec = mod.spec
    acc = [spec.one] + [spec.zero] * D
    for i, det in enumerate(dets):
        expo = (-1) ** (i - 1)
        fac = det.coeffs if expo > 0 else tp_inv(det.coeffs, D)
        acc = tp_mul(acc, fac, D)
    L = LSeries(acc, method="trace",
                caps={"D": D, "B": dets[0].caps.get("B")},
                taint=[t for d in dets for t in d.taint])
    return L, dets


def additive_trace_check(mod, B=None, corrupt=None):
    """Fixed-point sum vs alternating operator traces (degree-1 points).

    LHS: sum of trace(G(x)) over Teichmuller points with x o sigma = x.
    RHS: sum_i (-1)^i Tr(theta_i(phi)).  corrupt=(i, delta) adds delta to a
    diagonal entry of the form-degree-i operator first (negative control).
    """
    spec = mod.spec
    n = mod.nvars
    lhs = spec.zero
    for pt in teichmuller_points_for_lift(n, 1, mod.lift, dedupe=False):
        fib = [[e.evaluate(pt) for e in row] for row in mod.G]
        for t in range(mod.rank):
            lhs = lhs + fib[t][t]
    rhs = spec.zero
    for i in range(n + 1):
        opm = build_dwork_operator(mod, i, B=B)
        if corrupt is not None and corrupt[0] == i:
            S0 = sorted(opm.blocks)[0]
            blk = opm.blocks[S0]
            if blk:
                blk[0][0] = blk[0][0] + from_int(spec, corrupt[1])
        tr = opm.trace()
        rhs = rhs + (tr if i % 2 == 0 else -tr)
    diff = lhs - rhs
    ok = diff.ord_pi() is None
    return {
        "pass": ok,
        "lhs": list(lhs.coords),
        "rhs": list(rhs.coords),
        "fixed_points": spec.q ** n,
    }


def entireness_profile(L, det_factor, D=None):
    """Valuation profile of Q = L^((-1)^(n-1)) / det(I - T theta_n(phi)).

    Checks ord_pi(c_j) >= j for every certifiable coefficient (membership in
    1 + pi T R[[pi T]]); uncertifiable j are reported, never guessed.  n is
    inferred from the caller-provided arrangement: pass the L-series and the
    form-degree-n determinant factor.
    """
    D = min(L.D, det_factor.D) if D is None else D
    spec = L.spec
    quotient = tp_mul(L.coeffs[: D + 1], tp_inv(det_factor.coeffs, D), D)
    rows = []
    ok = True
    for j in range(1, D + 1):
        c = quotient[j]
        o = c.ord_pi()
        certified = c.prec >= j
        holds = (o is None) or o >= j
        if certified and not holds:
            ok = False
        rows.append({"j": j, "ord": o, "required": j,
                     "certified": bool(certified), "holds": bool(holds)})
    return {"pass": ok, "profile": rows,
            "quotient": [list(c.coords) for c in quotient]}


def theta_linearity_check(mod, i=0, B=None, trials=6, seed=0):
    """sigma^(-1)-linearity on randomized data: theta(sigma(a) m) = a theta(m).

    a runs over random polynomials, m over random basis columns at the cap;
    both sides are assembled from the operator matrix itself.
    """
    import random

    rng = random.Random(seed)
    spec = mod.spec
    n = mod.nvars
    opm = build_dwork_operator(mod, i, B=B)
    monos = opm.monomials
    S0 = sorted(opm.blocks)[0]
    block = opm.blocks[S0]
    r = mod.rank
    from .series import TruncSeries

    def apply_block(vec_coeffs):
        out = [spec.zero] * len(block)
        for col, c in vec_coeffs.items():
            if not any(c.coords):
                continue
            for row in range(len(block)):
                out[row] = out[row] + block[row][col] * c
        return out

    for _ in range(trials):
        # random a of small degree, random basis element m = (k, u)
        deg = rng.randrange(0, 2)
        a = TruncSeries.from_terms(
            spec, n,
            [(tuple(rng.randrange(0, deg + 1) for _ in range(n)),
              rng.randrange(spec.pN)) for _ in range(2)],
        )
        k = rng.randrange(r)
        u = monos[rng.randrange(len(monos))]
        # sigma(a) * X^u in coordinates
        sa = a.apply_sigma(mod.lift)
        vec = {}
        okk = True
        for w, c in sa.coeffs.items():
            w2 = tuple(x + y for x, y in zip(w, u))
            if sum(w2) > opm.B:
                okk = False
                break
            vec[k * len(monos) + opm.monomials.index(w2)] = c
        if not okk:
            continue
        lhs = apply_block(vec)
        # a * theta(m)
        base = apply_block({k * len(monos) + monos.index(u): spec.one})
        rhs = [spec.zero] * len(block)
        for row in range(len(block)):
            comp, mono_i = divmod(row, len(monos))
            if not any(base[row].coords):
                continue
            for w, c in a.coeffs.items():
                w2 = tuple(x + y for x, y in zip(w, monos[mono_i]))
                if sum(w2) > opm.B:
                    return {"pass": None, "detail": "cap too small for check"}
                rhs[comp * len(monos) + monos.index(w2)] = (
                    rhs[comp * len(monos) + monos.index(w2)] + base[row] * c
                )
        for x, y in zip(lhs, rhs):
            if not x.agrees(y):
                return {"pass": False}
    return {"pass": True}
