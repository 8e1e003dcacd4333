"""Internal matrix kernels.

Characteristic polynomials are computed by the Berkowitz algorithm in two
flavours: a generic division-free version for small matrices over ring
elements (mod-p^N rings have zero divisors, so no pivoting/division), and a
degree-truncated integer version for large Dwork-operator truncations, which
only produces the first few coefficients of det(I - T*A) and runs on numpy
int64 when the modulus allows (object arrays otherwise).
"""

import numpy as np

from .errors import NonUnitError, PrecisionError


# -- generic dense helpers (elements support +, -, *) -------------------------

def mat_mul(A, B):
    n, m, k = len(A), len(B[0]), len(B)
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = A[i][0] * B[0][j]
            for t in range(1, k):
                acc = acc + A[i][t] * B[t][j]
            row.append(acc)
        out.append(row)
    return out


def mat_vec(A, v):
    out = []
    for row in A:
        acc = row[0] * v[0]
        for t in range(1, len(v)):
            acc = acc + row[t] * v[t]
        out.append(acc)
    return out


def mat_apply(A, fn):
    return [[fn(x) for x in row] for row in A]


def mat_identity(n, one, zero):
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def berkowitz_char_series(A, one, zero, dmax=None):
    """Coefficients [c_0..c_k] of det(I - T*A), division-free (Berkowitz).

    A is a square matrix over any commutative ring (elements with +, -, *).
    dmax truncates the output degree (default: full size).  c_0 = one.
    Per principal-minor step, the Toeplitz column is (1, -a, -R C, -R M C,
    ..., -R M^(r-2) C) and only its first min(r, dmax)+1 entries are needed.
    """
    n = len(A)
    if n == 0:
        return [one]
    dmax = n if dmax is None else min(dmax, n)
    vec = [one, zero - A[0][0]][: dmax + 1]
    for r in range(2, n + 1):
        limit = min(r, dmax)
        Rrow = A[r - 1][: r - 1]
        tcol = [one]
        if limit >= 1:
            tcol.append(zero - A[r - 1][r - 1])
        cur = [A[i][r - 1] for i in range(r - 1)]
        for k in range(2, limit + 1):
            dot = Rrow[0] * cur[0]
            for t in range(1, r - 1):
                dot = dot + Rrow[t] * cur[t]
            tcol.append(zero - dot)
            if k < limit:
                cur = [_dot_row(A, i, cur, r - 1) for i in range(r - 1)]
        new = []
        for k in range(limit + 1):
            acc = zero
            for j in range(min(k, len(vec) - 1) + 1):
                if k - j < len(tcol):
                    acc = acc + tcol[k - j] * vec[j]
            new.append(acc)
        vec = new
    return vec


def _dot_row(A, i, cur, size):
    acc = A[i][0] * cur[0]
    for t in range(1, size):
        acc = acc + A[i][t] * cur[t]
    return acc


# -- integer specialisation ----------------------------------------------------

def _int64_safe(pN, n):
    return n * (pN - 1) ** 2 < 2 ** 62


def charpoly_lower_coeffs_int(A, pN, dmax):
    """First dmax+1 coefficients of det(I - T*A) for an integer matrix mod p^N.

    Berkowitz truncated at degree dmax: per principal minor step only the
    first dmax Toeplitz entries are needed, so the cost is O(dmax * n^3)
    in numpy matvecs instead of O(n^4).
    """
    n = len(A)
    if n == 0:
        return [1 % pN]
    dtype = np.int64 if _int64_safe(pN, n) else object
    M = np.array(A, dtype=dtype) % pN
    dmax = min(dmax, n)
    vec = [1, int(-M[0, 0]) % pN][: dmax + 1]
    for r in range(2, n + 1):
        limit = min(r, dmax)
        sub = M[: r - 1, : r - 1]
        Rrow = M[r - 1, : r - 1]
        tcol = [1]
        if limit >= 1:
            tcol.append(int(-M[r - 1, r - 1]) % pN)
        cur = M[: r - 1, r - 1]
        for k in range(2, limit + 1):
            tcol.append(int(-(Rrow @ cur)) % pN)
            if k < limit:
                cur = (sub @ cur) % pN
        new = []
        for k in range(limit + 1):
            acc = 0
            for j in range(min(k, len(vec) - 1) + 1):
                if k - j < len(tcol):
                    acc += tcol[k - j] * vec[j]
            new.append(acc % pN)
        vec = new
    return [int(c) % pN for c in vec]


def int_mat_trace_powers(A, pN, mmax):
    """[tr(A), tr(A^2), ..., tr(A^mmax)] mod p^N for an integer matrix."""
    n = len(A)
    if n == 0:
        return [0] * mmax
    dtype = np.int64 if _int64_safe(pN, n) else object
    M = np.array(A, dtype=dtype) % pN
    out = []
    P = M
    for _ in range(mmax):
        out.append(int(np.trace(P)) % pN)
        P = (P @ M) % pN
    return out


# -- kernels over Z/p^N ----------------------------------------------------------

def column_echelon_mod_pn(A, p, N):
    """Column reduction of an integer matrix mod p^N with minimal-valuation pivots.

    Returns (E, T, pivots): E = A*T in column echelon form, T invertible over
    Z/p^N, pivots a list of (row, col, valuation).  Columns of T whose image
    column in E vanishes mod p^N span the precision kernel.
    """
    pN = p ** N
    nrows = len(A)
    ncols = len(A[0]) if nrows else 0
    E = [[A[i][j] % pN for j in range(ncols)] for i in range(nrows)]
    T = [[1 if i == j else 0 for j in range(ncols)] for i in range(ncols)]
    used_rows = set()
    pivots = []
    for _col_round in range(ncols):
        # find the entry of minimal valuation among unused rows/free columns
        best = None
        for j in range(ncols):
            if any(pc == j for _, pc, _ in pivots):
                continue
            for i in range(nrows):
                if i in used_rows:
                    continue
                v = _vp_int(E[i][j], p, N)
                if v < N and (best is None or v < best[2]):
                    best = (i, j, v)
        if best is None:
            break
        i0, j0, v0 = best
        unit = E[i0][j0] // p ** v0
        uinv = pow(unit, -1, pN)
        # normalise pivot column so pivot entry = p^v0
        for i in range(nrows):
            E[i][j0] = E[i][j0] * uinv % pN
        for i in range(ncols):
            T[i][j0] = T[i][j0] * uinv % pN
        for j in range(ncols):
            if j == j0 or any(pc == j for _, pc, _ in pivots):
                continue
            w = _vp_int(E[i0][j], p, N)
            if w >= N:
                continue
            if w < v0:
                continue  # cannot eliminate; a later pivot round handles it
            f = E[i0][j] // p ** v0 % pN
            for i in range(nrows):
                E[i][j] = (E[i][j] - f * E[i][j0]) % pN
            for i in range(ncols):
                T[i][j] = (T[i][j] - f * T[i][j0]) % pN
        used_rows.add(i0)
        pivots.append((i0, j0, v0))
    return E, T, pivots


def _vp_int(x, p, N):
    x %= p ** N
    if x == 0:
        return N
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def kernel_mod_pn(A, p, N):
    """Unit-content kernel basis of an integer matrix mod p^N (columns)."""
    E, T, pivots = column_echelon_mod_pn(A, p, N)
    pN = p ** N
    ncols = len(T)
    out = []
    for j in range(ncols):
        if all(E[i][j] % pN == 0 for i in range(len(E))):
            col = [T[i][j] for i in range(ncols)]
            if any(c % p for c in col):
                out.append(col)
    return out


# -- series matrices -------------------------------------------------------------

def series_mat_mul(A, B):
    return mat_mul(A, B)


def series_mat_sigma(A, lift, power=1, cap=None, quotient=False):
    return [[x.apply_sigma(lift, power=power, cap=cap, quotient=quotient)
             for x in row] for row in A]


def series_mat_inverse(M, cap=None):
    """Inverse of a series matrix by Gauss-Jordan with unit pivots.

    Pivots must be invertible in the truncated overconvergent ring (constant
    term a unit, other coefficients divisible by pi); raises NonUnitError
    when no admissible pivot exists, which signals a non-ordinary situation
    to the callers that rely on this.
    """
    n = len(M)
    if n == 0:
        return []
    spec = M[0][0].spec
    nv = M[0][0].nvars
    cap = M[0][0].cap if cap is None else cap
    from .series import TruncSeries

    one = TruncSeries.constant(spec, nv, 1, cap)
    zero = TruncSeries.zero(spec, nv, cap)
    A = [[x for x in row] for row in M]
    I = [[one if i == j else zero for j in range(n)] for i in range(n)]
    perm_rows = list(range(n))
    for col in range(n):
        piv = None
        for r in range(col, n):
            try:
                A[r][col].inverse(cap)
                piv = r
                break
            except NonUnitError:
                continue
        if piv is None:
            raise NonUnitError("no unit pivot in column %d of series matrix" % col)
        if piv != col:
            A[piv], A[col] = A[col], A[piv]
            I[piv], I[col] = I[col], I[piv]
            perm_rows[piv], perm_rows[col] = perm_rows[col], perm_rows[piv]
        pinv = A[col][col].inverse(cap)
        A[col] = [x * pinv for x in A[col]]
        I[col] = [x * pinv for x in I[col]]
        for r in range(n):
            if r != col:
                f = A[r][col]
                if f.min_ord() is None:
                    continue
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
                I[r] = [a - f * b for a, b in zip(I[r], I[col])]
    return [[x.truncate(cap) if x.cap > cap else x for x in row] for row in I]


def series_mat_agree(A, B, prec=None):
    for ra, rb in zip(A, B):
        for a, b in zip(ra, rb):
            if not a.agrees(b, prec):
                return False
    return True
