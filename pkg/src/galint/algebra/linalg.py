"""Dense exact linear algebra over any field-like scalar type.

The same routines run over ground-field fractions *and* over tower elements:
the only requirements on the scalars are ``+ - * /``, ``bool()`` as a nonzero
test, and the caller supplying the ``zero``/``one`` constants.  Everything is
fraction-free in spirit but not in implementation — scalars are already
normalized field elements, so plain Gauss elimination with exact division is
the right tool.  Pivoting is "first nonzero", which keeps results
deterministic (a requirement for byte-stable golden output).
"""

__all__ = ["rref", "solve", "nullspace", "det", "mat_mul", "mat_vec", "mat_inv"]


def rref(M, *, limit_cols=None, pivot_values=None):
    """Reduced row echelon form.

    Returns ``(rows, pivots)`` where ``pivots`` is a list of ``(row, col)``
    pairs in order.  ``limit_cols`` stops pivot search after that many columns
    (used for augmented matrices).  When ``pivot_values`` is a list, the raw
    entry chosen as each pivot (before normalisation) is appended to it —
    callers use this to track scalars that were divided by, e.g. to report
    exceptional parameter values.  The input is not modified.
    """
    rows = [list(r) for r in M]
    m = len(rows)
    n = len(rows[0]) if m else 0
    stop = n if limit_cols is None else limit_cols
    pivots = []
    r = 0
    for c in range(stop):
        p = None
        for i in range(r, m):
            if rows[i][c]:
                p = i
                break
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        pv = rows[r][c]
        if pivot_values is not None:
            pivot_values.append(pv)
        rows[r] = [x / pv for x in rows[r]]
        for i in range(m):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append((r, c))
        r += 1
        if r == m:
            break
    return rows, pivots


def solve(M, rhs, zero, one, *, pivot_values=None):
    """Solve ``M x = rhs`` (m×n, possibly under/overdetermined).

    Returns ``(particular, nullspace_basis)`` or ``None`` when inconsistent.
    The particular solution sets all free variables to zero; the nullspace
    basis has one vector per free column.  Deterministic.
    """
    if not M:
        if any(rhs):
            return None
        return [], []
    n = len(M[0])
    aug = [list(row) + [b] for row, b in zip(M, rhs)]
    R, pivots = rref(aug, pivot_values=pivot_values)
    for _, c in pivots:
        if c == n:
            return None
    x = [zero] * n
    for r, c in pivots:
        x[c] = R[r][n]
    piv_cols = {c for _, c in pivots}
    null = []
    for j in range(n):
        if j in piv_cols:
            continue
        v = [zero] * n
        v[j] = one
        for r, c in pivots:
            v[c] = zero - R[r][j]
        null.append(v)
    return x, null


def nullspace(M, zero, one):
    """Basis of the right kernel of M (m×n)."""
    if not M:
        return []
    sol = solve(M, [zero] * len(M), zero, one)
    return sol[1]


def det(M, zero, one):
    """Determinant by exact Gaussian elimination with row swaps."""
    rows = [list(r) for r in M]
    n = len(rows)
    if n == 0:
        return one
    sign = 1
    acc = one
    for c in range(n):
        p = None
        for i in range(c, n):
            if rows[i][c]:
                p = i
                break
        if p is None:
            return zero
        if p != c:
            rows[c], rows[p] = rows[p], rows[c]
            sign = -sign
        pv = rows[c][c]
        acc = acc * pv
        for i in range(c + 1, n):
            if rows[i][c]:
                f = rows[i][c] / pv
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[c])]
    if sign < 0:
        return zero - acc
    return acc


def mat_mul(A, B, zero):
    m = len(A)
    k = len(B)
    n = len(B[0]) if k else 0
    out = []
    for i in range(m):
        row = []
        for j in range(n):
            acc = zero
            for t in range(k):
                a = A[i][t]
                b = B[t][j]
                if a and b:
                    acc = acc + a * b
            row.append(acc)
        out.append(row)
    return out


def mat_vec(A, v, zero):
    out = []
    for row in A:
        acc = zero
        for a, b in zip(row, v):
            if a and b:
                acc = acc + a * b
        out.append(acc)
    return out


def mat_inv(M, zero, one):
    """Invert a square matrix.

    Returns ``(inverse, None)`` on success, ``(None, kernel_vector)`` when
    singular — the kernel vector is a zero-divisor / singularity witness.
    """
    n = len(M)
    aug = [list(row) + [one if i == j else zero for j in range(n)]
           for i, row in enumerate(M)]
    R, pivots = rref(aug, limit_cols=n)
    if len(pivots) < n:
        ker = nullspace(M, zero, one)
        return None, ker[0]
    inv = [row[n:] for row in R]
    return inv, None
