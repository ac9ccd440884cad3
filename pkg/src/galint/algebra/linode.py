"""Rational solutions of linear ODEs with coefficients in a radical tower.

The scalar problem  y' + delta*y = g  (delta, g in a tower over K0) is
flattened to a first-order system  z' + M z = G  over K0 = Q(params)(s) by
writing y in the reduced monomial basis: multiplication by delta becomes the
regular representation, and the derivation contributes the (generally
non-diagonal) matrix of  w^e -> (w^e)'.

The system is solved by the classical pole-bound / undetermined-coefficients
method:

* candidate poles of a rational solution are confined to the irreducible
  s-factors appearing in denominators of M, G (solutions of a linear system
  are analytic at every regular point, so a rational solution has no other
  poles);
* at a place where M has at most a simple pole, the local exponents of the
  homogeneous system are the eigenvalues of the residue matrix, so the pole
  order of y is bounded by the largest positive integer eigenvalue (taken
  generically in the parameters) or by the pole order forced by G;
* the substitution y = z/Den turns the bound into a polynomial ansatz, whose
  degree is bounded the same way at infinity via s -> 1/s;
* the remaining finite-dimensional linear system is solved exactly, and every
  scalar divided by along the way is recorded so callers can report the
  exceptional parameter values.

When every place involved is at most a simple pole (or the system is scalar,
where an exact leading-term balance handles higher-order poles), the bounds
are complete and an unsolvable system genuinely has no rational solution:
``NoTowerSolution``.  Otherwise the bound is heuristic and failure is
reported as ``DegreeBoundExceeded`` — never conflated with nonexistence.
"""

from __future__ import annotations

import functools

import sympy

from ..errors import (
    DegreeBoundExceeded,
    IntegrationIncomplete,
    NoTowerSolution,
    TowerError,
    VerificationFailed,
)
from . import linalg
from .scalars import SPoly
from .tower import FieldElem

__all__ = ["rational_ode_solve", "fe_integrate_rational", "solve_rational_system"]


# ---------------------------------------------------------------------------
# residue-field arithmetic: K0[s]/(p), elements as SPoly reduced mod p
# ---------------------------------------------------------------------------

def _pinv(a, p):
    g, u, _ = a.xgcd(p)
    if g.degree != 0:
        raise ArithmeticError("non-invertible residue (place not irreducible?)")
    return u % p


def _residue_matrix(gf, M, p):
    """(M * p/p') mod p for a matrix with at most simple poles along p.

    Entries regular at p contribute zero; an entry n/d with p | d exactly once
    contributes n * (d/p * p')^{-1}.  Fractions are reduced, so the
    p-multiplicity of the denominator is the (clamped) pole order.
    """
    dp = p.diff()
    out = []
    for row in M:
        orow = []
        for f in row:
            if not f:
                orow.append(SPoly(gf, []))
                continue
            den = gf.denom_spoly(f)
            k = p.valuation_of(den)
            if k == 0:
                orow.append(SPoly(gf, []))
                continue
            if k > 1:
                raise ArithmeticError("residue matrix of a higher-order pole")
            num = gf.numer_spoly(f) % p
            dred = (den.divmod(p)[0]) % p
            inv = _pinv((dred * dp) % p, p)
            orow.append((num * inv) % p)
        out.append(orow)
    return out


def _charpoly_mod(R, p, gf):
    """Characteristic polynomial of R over K0[s]/(p), Faddeev-LeVerrier.

    Returns the coefficient list [1, c1, ..., cD] (T^D + c1 T^{D-1} + ...),
    entries reduced mod p.
    """
    D = len(R)
    one = SPoly(gf, [gf.one])
    zero = SPoly(gf, [])

    def madd_diag(A, c):
        return [[(A[i][j] + c) % p if i == j else A[i][j]
                 for j in range(D)] for i in range(D)]

    def mmul(A, B):
        out = []
        for i in range(D):
            row = []
            for j in range(D):
                acc = zero
                for t in range(D):
                    if A[i][t] and B[t][j]:
                        acc = acc + A[i][t] * B[t][j]
                row.append(acc % p)
            out.append(row)
        return out

    N = [[one if i == j else zero for j in range(D)] for i in range(D)]
    coeffs = [one]
    from fractions import Fraction

    for k in range(1, D + 1):
        AN = mmul(R, N)
        tr = zero
        for i in range(D):
            tr = tr + AN[i][i]
        ck = (tr % p).scale(gf.from_rational(Fraction(-1, k)))
        coeffs.append(ck)
        if k < D:
            N = madd_diag(AN, ck)
    return coeffs


def _integer_eigs(R, p, gf):
    """Integer eigenvalues of R over K0[s]/(p), generic in the parameters.

    An integer r is kept iff the characteristic polynomial vanishes at r
    identically in the parameters — special parameter values may admit more,
    and those surface separately through the recorded pivot conditions.
    """
    chi = _charpoly_mod(R, p, gf)
    Dd = len(chi) - 1
    per_s = {}
    for k, c in enumerate(chi):
        for sp, ce in enumerate(c.coeffs):
            if ce:
                per_s.setdefault(sp, []).append((Dd - k, ce))
    T = sympy.Symbol("T")
    comps = []
    for terms in per_s.values():
        common = gf.ring.one
        for _, ce in terms:
            common = common * ce.denom
        commel = gf.field.raw_new(common, gf.ring.one)
        grouped = {}
        for td, ce in terms:
            scaled = ce * commel
            for mono, q in scaled.numer.terms():
                bucket = grouped.setdefault(mono, {})
                bucket[td] = bucket.get(td, 0) + sympy.Rational(
                    int(q.numerator), int(q.denominator)
                )
        for tp in grouped.values():
            expr = sympy.Add(*(c * T**d for d, c in tp.items()))
            comps.append(sympy.Poly(expr, T))
    if not comps:
        return []
    g = functools.reduce(lambda a, b: a.gcd(b), comps)
    if g.degree() <= 0:
        return []
    out = []
    for r in g.ground_roots():
        if getattr(r, "is_integer", False):
            out.append(int(r))
    return sorted(out)


# ---------------------------------------------------------------------------
# the system solver
# ---------------------------------------------------------------------------

def _coeff(sp, k, zero):
    cs = sp.coeffs
    return cs[k] if 0 <= k < len(cs) else zero


def _times_poly(gf, f, Q):
    """Q*f as an SPoly (Q must clear the s-denominator of f)."""
    if not f:
        return SPoly(gf, [])
    num = gf.numer_spoly(f)
    den = gf.denom_spoly(f)
    lead = den.coeffs[-1]
    q, r = Q.divmod(den.monic())
    if r:
        raise ArithmeticError("common denominator does not clear an entry")
    return (num * q).scale(gf.one / lead)


def _factor_map(gf, f):
    return {p.key(): (p, m) for p, m in gf.monic_s_factors(f)}


def solve_rational_system(gf, M, G, *, extra_cols=(), conditions=None):
    """Rational solutions of  z' + M z = G - sum_e c_e E_e  over K0.

    ``M`` is a D×D matrix of ground-field elements, ``G`` a length-D vector,
    and each entry of ``extra_cols`` a further length-D vector whose constant
    coefficient c_e is solved for along with z (used to peel off logarithmic
    parts when integrating).

    Returns ``(Y, cvals, kernel, sound)`` where ``Y`` is a particular
    solution (ground-field entries), ``cvals`` the extra coefficients,
    ``kernel`` a basis of homogeneous solutions as ``(Yh, ch)`` pairs, and
    ``sound`` records whether the pole/degree bounds were complete.  Raises
    ``NoTowerSolution`` (sound) or ``DegreeBoundExceeded`` (heuristic bounds)
    when the linear system is inconsistent.
    """
    D = len(M)
    zero, one = gf.zero, gf.one
    rhs_vecs = [G] + [list(E) for E in extra_cols]

    # -- candidate finite places and their valuations
    fac = {}
    for row in M:
        for f in row:
            if f:
                for key, (p, _) in _factor_map(gf, f).items():
                    fac.setdefault(key, p)
    for vec in rhs_vecs:
        for f in vec:
            if f:
                for key, (p, _) in _factor_map(gf, f).items():
                    fac.setdefault(key, p)

    def min_val(key, entries):
        v = None
        for f in entries:
            if not f:
                continue
            m = _factor_map(gf, f).get(key)
            m = m[1] if m else 0
            v = m if v is None else min(v, m)
        return v

    m_entries = [f for row in M for f in row]
    rhs_entries = [f for vec in rhs_vecs for f in vec]

    sound = True
    sound_detail = None
    pole_bounds = []
    for key, p in fac.items():
        vm = min_val(key, m_entries)
        vm = 0 if vm is None else min(vm, 0)
        vg = min_val(key, rhs_entries)
        if vm >= 0 and (vg is None or vg >= 0):
            continue
        if vm >= -1:
            R = _residue_matrix(gf, M, p)
            eigs = [e for e in _integer_eigs(R, p, gf) if e > 0]
            cand = [0] + eigs
            if vg is not None and vg <= -2:
                cand.append(-(vg + 1))
            mp = max(cand)
        elif D == 1:
            # exact leading balance: v(y) = v(rhs) - v(M)
            mp = 0 if vg is None else max(0, vm - vg)
        else:
            sound = False
            sound_detail = (
                f"pole of order {-vm} in the system matrix at a degree-"
                f"{p.degree} place; pole bound is heuristic"
            )
            mp = max(0, -((vg if vg is not None else 0) + 1)) - vm
        if mp > 0:
            pole_bounds.append((p, mp))

    Den = SPoly(gf, [one])
    for p, mp in pole_bounds:
        for _ in range(mp):
            Den = Den * p
    den_el = Den.to_element()
    dd = Den.diff().to_element() / den_el if Den.degree > 0 else zero

    Mt = [[M[i][j] - dd if i == j else M[i][j] for j in range(D)]
          for i in range(D)]
    rhs_t = [[f * den_el for f in vec] for vec in rhs_vecs]

    # -- degree bound at infinity, via s -> 1/s on the transformed system
    s2 = gf.s ** 2
    inf_M = [[-gf.invert_var(f) / s2 if f else zero for f in row] for row in Mt]
    inf_rhs = [[-gf.invert_var(f) / s2 if f else zero for f in vec]
               for vec in rhs_t]
    s_poly = SPoly(gf, [zero, one])
    s_key = s_poly.key()
    vm_inf = min_val(s_key, [f for row in inf_M for f in row])
    vm_inf = 0 if vm_inf is None else min(vm_inf, 0)
    vg_inf = min_val(s_key, [f for vec in inf_rhs for f in vec])
    if vm_inf >= -1:
        R_inf = _residue_matrix(gf, inf_M, s_poly)
        cand = [e for e in _integer_eigs(R_inf, s_poly, gf) if e >= 0]
        if vg_inf is not None and -(vg_inf + 1) >= 0:
            cand.append(-(vg_inf + 1))
        N = max(cand) if cand else -1
    elif D == 1:
        N = -1 if vg_inf is None else max(-1, vm_inf - vg_inf)
    else:
        sound = False
        sound_detail = (
            f"pole of order {-vm_inf} in the system matrix at infinity; "
            "degree bound is heuristic"
        )
        N = max(0, -((vg_inf if vg_inf is not None else 0) + 1)) - vm_inf

    # -- common denominator and polynomial identity
    Q = SPoly(gf, [one])
    for f in [x for row in Mt for x in row] + [x for vec in rhs_t for x in vec]:
        if f:
            d = gf.denom_spoly(f).monic()
            if d.degree > 0:
                Q = Q * d.divmod(Q.gcd(d))[0]
    QM = [[_times_poly(gf, Mt[i][j], Q) for j in range(D)] for i in range(D)]
    Qrhs = [[_times_poly(gf, f, Q) for f in vec] for vec in rhs_t]
    Qg, QE = Qrhs[0], Qrhs[1:]

    nE = len(QE)
    ncols = D * (N + 1) + nE if N >= 0 else nE
    nz = ncols - nE
    maxdeg = -1
    for row in QM:
        for e in row:
            if e.degree >= 0 and N >= 0:
                maxdeg = max(maxdeg, e.degree + N)
    if N >= 1:
        maxdeg = max(maxdeg, Q.degree + N - 1)
    for vec in Qrhs:
        for e in vec:
            maxdeg = max(maxdeg, e.degree)

    rows = []
    rhs = []
    for i in range(D):
        for t in range(maxdeg + 1):
            row = [zero] * ncols
            if N >= 0:
                for j in range(N + 1):
                    acc = zero
                    if j >= 1:
                        qc = _coeff(Q, t - j + 1, zero)
                        if qc:
                            acc = acc + qc * gf.from_rational(j)
                    row[i * (N + 1) + j] = acc
                for f in range(D):
                    e = QM[i][f]
                    if not e.coeffs:
                        continue
                    base = f * (N + 1)
                    for j in range(N + 1):
                        c = _coeff(e, t - j, zero)
                        if c:
                            row[base + j] = row[base + j] + c
            for eidx in range(nE):
                c = _coeff(QE[eidx][i], t, zero)
                if c:
                    row[nz + eidx] = c
            rows.append(row)
            rhs.append(_coeff(Qg[i], t, zero))

    pivots = []
    if rows:
        sol = linalg.solve(rows, rhs, zero, one, pivot_values=pivots)
    else:
        # no constraints at all: every ansatz coefficient is free
        sol = ([zero] * ncols,
               [[one if k == j else zero for k in range(ncols)]
                for j in range(ncols)])
    if conditions is not None:
        seen = {c.numer.to_dict_key() if hasattr(c.numer, "to_dict_key")
                else str(c) for c in conditions}
        for pv in pivots:
            for part in (gf.field.raw_new(pv.numer, gf.ring.one),
                         gf.field.raw_new(pv.denom, gf.ring.one)):
                if gf.is_rational_const(part):
                    continue
                k = (part.numer.to_dict_key()
                     if hasattr(part.numer, "to_dict_key") else str(part))
                if k not in seen:
                    seen.add(k)
                    conditions.append(part)
    if sol is None:
        if sound:
            raise NoTowerSolution(
                "the equation has no solution rational over the tower"
            )
        raise DegreeBoundExceeded(sound_detail or "heuristic bound exhausted")

    x, null = sol

    def unpack(vec):
        ys = []
        for f in range(D):
            if N >= 0:
                cs = vec[f * (N + 1):(f + 1) * (N + 1)]
            else:
                cs = []
            ys.append(SPoly(gf, list(cs)).to_element() / den_el)
        return ys, list(vec[nz:])

    Y, cvals = unpack(x)
    kernel = [unpack(v) for v in null]
    return Y, cvals, kernel, sound


# ---------------------------------------------------------------------------
# tower-level wrappers
# ---------------------------------------------------------------------------

def _join(a, b):
    ta, tb = a.tower, b.tower
    if ta.ancestor_of(tb):
        return tb.coerce(a), b, tb
    if tb.ancestor_of(ta):
        return a, ta.coerce(b), ta
    raise TowerError("elements live in unrelated towers")


def _flatten_operator(tower, delta):
    """Matrix of  y -> y' + delta*y  acting on coordinate columns."""
    basis = tower.basis_monomials()
    idx = {e: k for k, e in enumerate(basis)}
    D = len(basis)
    gf = tower.gf
    A, _, _ = tower.regular_matrix(delta)
    for j, e in enumerate(basis):
        dmono = FieldElem(tower, {e: gf.one}).derive()
        for mono, c in dmono.coords.items():
            A[idx[mono]][j] = A[idx[mono]][j] + c
    return A, basis, idx


def rational_ode_solve(delta, g, *, with_kernel=False, conditions=None,
                       soundness=None):
    """Solve  y' + delta*y = g  for y rational over the radical tower.

    Both arguments are tower elements (of the same tower or nested ones).
    Returns the particular solution, or ``(particular, kernel)`` with a basis
    of homogeneous rational solutions when ``with_kernel`` is set.  Pivots
    divided by during elimination are appended to ``conditions`` (when given)
    so callers can report parameter values where the formula degenerates.
    ``soundness``, when given, receives a single boolean recording whether the
    pole/degree bounds were complete — an empty kernel is a proof of
    nonexistence only when that flag is true.

    Raises ``NoTowerSolution`` when provably none exists, and
    ``DegreeBoundExceeded`` when only the heuristic bounds were exhausted.
    """
    delta, g, tower = _join(delta, g)
    gf = tower.gf
    M, basis, _ = _flatten_operator(tower, delta)
    G = [gf.zero] * len(basis)
    for k, e in enumerate(basis):
        c = g.coords.get(e)
        if c:
            G[k] = c
    Y, _, kernel, snd = solve_rational_system(gf, M, G, conditions=conditions)
    if soundness is not None:
        soundness.append(snd)
    y = tower.from_coords({e: c for e, c in zip(basis, Y)})
    if not (y.derive() + delta * y - g).is_zero():
        raise VerificationFailed("ODE residual is nonzero (internal error)")
    if not with_kernel:
        return y
    hom = []
    for Yh, _ in kernel:
        h = tower.from_coords({e: c for e, c in zip(basis, Yh)})
        if h.is_zero():
            continue
        if not (h.derive() + delta * h).is_zero():
            raise VerificationFailed(
                "homogeneous residual is nonzero (internal error)"
            )
        hom.append(h)
    return y, hom


def fe_integrate_rational(a, *, conditions=None):
    """Antiderivative of a tower element, split into rational and log parts.

    Returns ``(y, logs)`` with ``logs`` a list of ``(coefficient, argument)``
    pairs such that  y' + sum c_i * arg_i'/arg_i = a,  i.e. the integral of a
    is y + sum c_i log(arg_i).  Candidate log arguments are the irreducible
    s-factors of coordinate denominators together with the radicands of the
    tower.  Raises ``IntegrationIncomplete`` when no such decomposition is
    found in that span.
    """
    tower = a.tower
    gf = tower.gf
    M, basis, _ = _flatten_operator(tower, tower.zero)
    G = [gf.zero] * len(basis)
    for k, e in enumerate(basis):
        c = a.coords.get(e)
        if c:
            G[k] = c

    try:
        Y, _, _, _ = solve_rational_system(gf, M, G, conditions=conditions)
        y = tower.from_coords({e: c for e, c in zip(basis, Y)})
        if not (y.derive() - a).is_zero():
            raise VerificationFailed("integral residual is nonzero")
        return y, []
    except (NoTowerSolution, DegreeBoundExceeded):
        pass

    cand = []
    seen_keys = set()
    for c in a.coords.values():
        for p, m in gf.monic_s_factors(c):
            if m < 0 and p.key() not in seen_keys:
                seen_keys.add(p.key())
                cand.append(tower.from_ground(p.to_element()))
    for info in tower.gens:
        if info.radicand is None:
            continue
        v = tower.coerce(info.radicand)
        if not any(v == w for w in cand):
            cand.append(v)
    if not cand:
        raise IntegrationIncomplete(
            "no rational antiderivative and no log candidates"
        )
    cols = []
    for v in cand:
        dlog = v.derive() / v
        col = [gf.zero] * len(basis)
        for k, e in enumerate(basis):
            c = dlog.coords.get(e)
            if c:
                col[k] = c
        cols.append(col)
    try:
        Y, cvals, _, _ = solve_rational_system(
            gf, M, G, extra_cols=cols, conditions=conditions
        )
    except (NoTowerSolution, DegreeBoundExceeded) as exc:
        raise IntegrationIncomplete(
            f"no decomposition over the candidate log span ({exc})"
        ) from exc
    y = tower.from_coords({e: c for e, c in zip(basis, Y)})
    logs = [(c, v) for c, v in zip(cvals, cand) if c]
    resid = y.derive() - a
    for c, v in logs:
        resid = resid + (v.derive() / v) * tower.from_ground(c)
    if not resid.is_zero():
        raise VerificationFailed("integral residual is nonzero (internal error)")
    return y, logs
