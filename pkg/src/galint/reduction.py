"""Reduction of a vector field to a tubular neighborhood of an invariant curve.

Start from a polynomial/rational field X on (x_1, ..., x_{n-1}, s) together
with a parametrized algebraic curve x = gamma(s) that X is tangent to.  The
operations here rewrite the dynamics in transverse coordinates q = x - gamma,
normalize time so that s itself becomes the independent variable, apply
user-supplied gauge transformations to diagonalize the linear part, extract
variational systems of any jet order, and finally locate and classify the
singular places of the reduced diagonal data.

The nonlinear data is stored as truncated polynomial tables
``{exponent tuple: FieldElem}`` — plain dictionaries, since no symbol
bookkeeping (H/L markers) is needed at this stage.  Downstream consumers can
ask for :class:`~galint.series.TruncSeries` views once a hyperexponential
basis is fixed.

Conventions:

* q-indices are 0-based throughout the code; rendered names are 1-based.
* ``lin[j][l]`` multiplies q_l in the equation for q_j'.
* the nonlinear table maps ``(j, i)`` with ``2 <= |i| <= order`` to the
  coefficient of q^i in the equation for q_j'.
"""

from __future__ import annotations

from math import comb

from .errors import (
    DivisionByZero,
    GaugeRequired,
    InputError,
    NonFuchsian,
    NotDiagonalAfterGauge,
    NotExpandable,
    NotTangent,
    NotTimeReduced,
    OrderExceedsTable,
    SingularGauge,
    TangentiallySingular,
    TowerError,
    VerificationFailed,
)
from .algebra import linalg
from .algebra.tower import FieldElem
from .algebra.places import (
    INF,
    Exponent,
    SingularPlace,
    _location_key,
    _normalize_location,
    _place_context,
    fe_local_exponent,
    scalarize_constant,
)
from .series import SymbolMonomial, TruncSeries

__all__ = [
    "CoordRat",
    "VectorFieldSpec",
    "ReducedSystem",
    "VESystem",
    "reduce_to_curve",
    "time_reduce",
    "apply_gauge",
    "build_VE",
    "build_NVE",
    "fuchsian_scan",
]


# --------------------------------------------------------------------------
# truncated polynomial tables {exponent tuple: FieldElem}


def _zero_exp(nq):
    return (0,) * nq


def _deg(e):
    return sum(e)


def _ser_add(a, b):
    out = dict(a)
    for e, c in b.items():
        cur = out.get(e)
        s = c if cur is None else cur + c
        if s:
            out[e] = s
        elif e in out:
            del out[e]
    return out


def _ser_neg(a):
    return {e: -c for e, c in a.items()}


def _ser_scale(a, c):
    if not c:
        return {}
    return {e: v * c for e, v in a.items() if v * c}


def _ser_mul(a, b, N):
    out = {}
    for ea, ca in a.items():
        da = _deg(ea)
        for eb, cb in b.items():
            if da + _deg(eb) > N:
                continue
            e = tuple(x + y for x, y in zip(ea, eb))
            c = ca * cb
            cur = out.get(e)
            s = c if cur is None else cur + c
            if s:
                out[e] = s
            elif e in out:
                del out[e]
    return out


def _ser_inv(a, N, tower):
    """Inverse of a table with unit constant term, through total degree N."""
    z = _zero_exp_of(a, tower)
    c0 = a.get(z)
    if c0 is None or c0.is_zero():
        raise DivisionByZero("series constant term vanishes; cannot invert")
    u = tower.one / c0
    w = {e: c * u for e, c in a.items() if e != z}  # a/c0 - 1
    out = {z: u}
    if not w:
        return out
    power = {z: tower.one}
    sign = 1
    for _ in range(N):
        power = _ser_mul(power, w, N)
        if not power:
            break
        sign = -sign
        out = _ser_add(out, _ser_scale(power, u if sign > 0 else -u))
    return out


def _zero_exp_of(a, tower):
    for e in a:
        return (0,) * len(e)
    return ()


def _ser_subst_linear(a, P, N, tower):
    """Substitute q_l -> sum_k P[l][k] * q~_k into a table."""
    if not a:
        return {}
    nq = len(next(iter(a)))
    lin = [{} for _ in range(nq)]
    for l in range(nq):
        for k in range(nq):
            c = P[l][k]
            if c:
                e = [0] * nq
                e[k] = 1
                lin[l][tuple(e)] = c
    pow_cache = [[{_zero_exp(nq): tower.one}] for _ in range(nq)]
    out = {}
    for e, c in a.items():
        term = {_zero_exp(nq): c}
        for l, k in enumerate(e):
            if not k:
                continue
            cache = pow_cache[l]
            while len(cache) <= k:
                cache.append(_ser_mul(cache[-1], lin[l], N))
            term = _ser_mul(term, cache[k], N)
        out = _ser_add(out, term)
    return out


def _split_table(ser, nq):
    """(constant, linear row, higher table) of one component's series."""
    const = None
    row = [None] * nq
    high = {}
    for e, c in ser.items():
        d = _deg(e)
        if d == 0:
            const = c
        elif d == 1:
            row[e.index(1)] = c
        else:
            high[e] = c
    return const, row, high


def _mono_str(e, names):
    bits = []
    for x, name in zip(e, names):
        if x == 1:
            bits.append(name)
        elif x > 1:
            bits.append(f"{name}^{x}")
    return "*".join(bits) or "1"


# --------------------------------------------------------------------------
# rational functions in coordinates


class CoordRat:
    """A rational function in the coordinates x_1..x_{n-1} and s.

    Stored as a pair of polynomial tables (numerator, denominator) with
    coefficients in a radical tower; the tower carries the s-dependence.
    Supports enough arithmetic for expression evaluation, substitution of a
    point, and series expansion around a moving center.
    """

    __slots__ = ("tower", "nq", "num", "den")

    def __init__(self, tower, nq, num, den=None):
        self.tower = tower
        self.nq = nq
        self.num = {tuple(e): c for e, c in num.items() if c}
        if den is None:
            den = {_zero_exp(nq): tower.one}
        self.den = {tuple(e): c for e, c in den.items() if c}
        if not self.den:
            raise DivisionByZero("zero denominator in coordinate expression")

    # -- constructors --------------------------------------------------------

    @classmethod
    def constant(cls, tower, nq, c):
        c = tower.coerce(c)
        return cls(tower, nq, {_zero_exp(nq): c} if c else {})

    @classmethod
    def coordinate(cls, tower, nq, j):
        if not 0 <= j < nq:
            raise InputError(f"coordinate index {j} out of range")
        e = [0] * nq
        e[j] = 1
        return cls(tower, nq, {tuple(e): tower.one})

    # -- arithmetic ----------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, CoordRat):
            if other.nq != self.nq:
                raise InputError("coordinate counts differ")
            return other
        return CoordRat.constant(self.tower, self.nq, other)

    def __add__(self, other):
        o = self._coerce(other)
        N = 10**9
        num = _ser_add(_ser_mul(self.num, o.den, N), _ser_mul(o.num, self.den, N))
        return CoordRat(self.tower, self.nq, num, _ser_mul(self.den, o.den, N))

    __radd__ = __add__

    def __neg__(self):
        return CoordRat(self.tower, self.nq, _ser_neg(self.num), self.den)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        N = 10**9
        return CoordRat(
            self.tower, self.nq,
            _ser_mul(self.num, o.num, N), _ser_mul(self.den, o.den, N),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if not o.num:
            raise DivisionByZero("division by zero coordinate expression")
        N = 10**9
        return CoordRat(
            self.tower, self.nq,
            _ser_mul(self.num, o.den, N), _ser_mul(self.den, o.num, N),
        )

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, k):
        if k < 0:
            return CoordRat.constant(self.tower, self.nq, 1) / self**(-k)
        out = CoordRat.constant(self.tower, self.nq, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    # -- evaluation and expansion ---------------------------------------------

    def _poly_eval(self, table, point):
        tower = self.tower
        out = tower.zero
        for e, c in table.items():
            term = c
            for l, k in enumerate(e):
                if k:
                    term = term * point[l] ** k
            out = out + term
        return out

    def eval_at(self, point):
        """Value at x = point (a list of tower elements)."""
        point = [self.tower.coerce(p) for p in point]
        den = self._poly_eval(self.den, point)
        if den.is_zero():
            raise DivisionByZero("denominator vanishes at the evaluation point")
        return self._poly_eval(self.num, point) / den

    def _poly_shift(self, table, center, N):
        """Table of p(center + q) truncated to total degree N in q."""
        nq = self.nq
        tower = self.tower
        out = {}
        # (center_l + q_l)^k expanded once per (l, k)
        cache = {}
        for e, c in table.items():
            term = {_zero_exp(nq): c}
            for l, k in enumerate(e):
                if not k:
                    continue
                fac = cache.get((l, k))
                if fac is None:
                    fac = {}
                    for t in range(min(k, N) + 1):
                        coeff = tower.from_ground(comb(k, t)) * center[l] ** (k - t)
                        if coeff:
                            ee = [0] * nq
                            ee[l] = t
                            fac[tuple(ee)] = coeff
                    cache[(l, k)] = fac
                term = _ser_mul(term, fac, N)
            out = _ser_add(out, term)
        return out

    def expand_around(self, center, N):
        """Series table of self(center + q, s) through total degree N."""
        center = [self.tower.coerce(p) for p in center]
        num = self._poly_shift(self.num, center, N)
        den = self._poly_shift(self.den, center, N)
        if _zero_exp(self.nq) not in den:
            raise DivisionByZero("denominator vanishes along the curve")
        return _ser_mul(num, _ser_inv(den, N, self.tower), N)

    def __repr__(self):
        names = [f"x{j + 1}" for j in range(self.nq)]
        num = " + ".join(
            f"({c})*{_mono_str(e, names)}" for e, c in sorted(self.num.items())
        ) or "0"
        if self.den == {_zero_exp(self.nq): self.tower.one}:
            return num
        den = " + ".join(
            f"({c})*{_mono_str(e, names)}" for e, c in sorted(self.den.items())
        )
        return f"({num}) / ({den})"


# --------------------------------------------------------------------------
# vector fields tangent to a parametrized curve


def _deepest_tower(towers):
    t = towers[0]
    for u in towers[1:]:
        if u is t or u.ancestor_of(t):
            continue
        if t.ancestor_of(u):
            t = u
        else:
            raise TowerError("data lives in unrelated towers")
    return t


class VectorFieldSpec:
    """A rational vector field together with an invariant parametrized curve.

    ``components`` are the n right-hand sides: the first n-1 drive the
    transverse coordinates x_1..x_{n-1}, the last one drives s (the curve
    parameter doubles as the last phase-space coordinate).  ``curve`` holds
    gamma_1..gamma_{n-1} as tower elements.  Invariance is not assumed — the
    exact tangency identities

        X_i(gamma(s), s) - gamma_i'(s) * X_n(gamma(s), s) = 0

    are verified on construction and a failure reports the first offending
    component together with its residual.
    """

    __slots__ = ("tower", "n", "nq", "components", "curve", "curve_deriv")

    def __init__(self, components, curve, tower=None):
        components = list(components)
        curve = list(curve)
        n = len(components)
        if n < 2:
            raise InputError("need at least two components (one transverse, one tangential)")
        if len(curve) != n - 1:
            raise InputError(f"curve must have {n - 1} components, got {len(curve)}")
        cand = [c.tower for c in components if isinstance(c, CoordRat)]
        cand += [g.tower for g in curve if isinstance(g, FieldElem)]
        if tower is not None:
            cand.append(tower)
        if not cand:
            raise InputError("no tower declared anywhere in the field data")
        self.tower = T = _deepest_tower(cand)
        self.n = n
        self.nq = n - 1
        comps = []
        for c in components:
            if isinstance(c, CoordRat):
                if c.nq != self.nq:
                    raise InputError("component has wrong coordinate count")
                comps.append(CoordRat(
                    T, self.nq,
                    {e: T.coerce(v) for e, v in c.num.items()},
                    {e: T.coerce(v) for e, v in c.den.items()},
                ))
            else:
                comps.append(CoordRat.constant(T, self.nq, c))
        self.components = tuple(comps)
        self.curve = tuple(T.coerce(g) for g in curve)
        self.curve_deriv = tuple(g.derive() for g in self.curve)
        on_curve = [c.eval_at(self.curve) for c in self.components]
        for i in range(self.nq):
            residual = on_curve[i] - self.curve_deriv[i] * on_curve[self.nq]
            if not residual.is_zero():
                raise NotTangent(
                    f"curve is not invariant: component {i + 1} has residual {residual}",
                    component=i + 1,
                    residual=residual,
                )

    def __repr__(self):
        return f"VectorFieldSpec(n={self.n}, tower={self.tower!r})"


# --------------------------------------------------------------------------
# the reduced system


class ReducedSystem:
    """Dynamics in transverse coordinates q around the curve.

    ``lin`` is the (n-1) x (n-1) linear part, ``table`` the nonlinear
    coefficients ``{(j, i): c}`` for 2 <= |i| <= order, ``xn`` the full series
    of the tangential component, and ``t`` the series of dt/ds once time has
    been normalized (None before that).  ``gauge`` accumulates the coordinate
    changes applied so far (original q = gauge * current q).  The two place
    sets remember where the curve data and the gauges were singular, so the
    Fuchsian scan can tag the provenance of each singular place it finds.
    """

    __slots__ = ("tower", "nq", "order", "lin", "table", "xn", "t",
                 "time_reduced", "gauge", "curve_places", "gauge_places")

    def __init__(self, tower, nq, order, lin, table, xn, t=None, *,
                 time_reduced=False, gauge=None, curve_places=frozenset(),
                 gauge_places=frozenset()):
        self.tower = tower
        self.nq = nq
        self.order = order
        if len(lin) != nq or any(len(row) != nq for row in lin):
            raise InputError("linear part must be square of size n-1")
        self.lin = tuple(tuple(tower.coerce(c) for c in row) for row in lin)
        tab = {}
        for (j, i), c in table.items():
            i = tuple(i)
            if not 0 <= j < nq or len(i) != nq:
                raise InputError(f"bad table key ({j}, {i})")
            if not 2 <= _deg(i) <= order:
                raise InputError(f"table degree {_deg(i)} outside 2..{order}")
            c = tower.coerce(c)
            if c:
                tab[(j, i)] = c
        self.table = tab
        self.xn = {tuple(e): tower.coerce(c) for e, c in xn.items() if c}
        self.t = None if t is None else {
            tuple(e): tower.coerce(c) for e, c in t.items() if c
        }
        self.time_reduced = bool(time_reduced)
        if gauge is None:
            gauge = [[tower.one if i == j else tower.zero for j in range(nq)]
                     for i in range(nq)]
        self.gauge = tuple(tuple(tower.coerce(c) for c in row) for row in gauge)
        self.curve_places = frozenset(curve_places)
        self.gauge_places = frozenset(gauge_places)

    # -- views ----------------------------------------------------------------

    @property
    def lambdas(self):
        """Diagonal entries of the linear part (the h_j once diagonal)."""
        return tuple(self.lin[j][j] for j in range(self.nq))

    def is_diagonal(self):
        return all(
            self.lin[i][j].is_zero()
            for i in range(self.nq) for j in range(self.nq) if i != j
        )

    def qdot_series(self, j):
        """Full series table of dq_j/ds (linear and higher terms)."""
        out = {}
        for l in range(self.nq):
            c = self.lin[j][l]
            if c:
                e = [0] * self.nq
                e[l] = 1
                out[tuple(e)] = c
        for (jj, i), c in self.table.items():
            if jj == j:
                out[i] = c
        return out

    def xn_series(self, basis, N=None):
        """The tangential component as a TruncSeries over ``basis``."""
        return self._as_trunc(self.xn, basis, N)

    def t_series(self, basis, N=None):
        if self.t is None:
            raise NotTimeReduced("no t-equation: time has not been normalized")
        return self._as_trunc(self.t, basis, N)

    def _as_trunc(self, tab, basis, N):
        if N is None:
            N = self.order
        neutral = SymbolMonomial()
        table = {(e, neutral): c for e, c in tab.items() if _deg(e) <= N}
        return TruncSeries(basis, "q", N, table)

    def __repr__(self):
        flag = ", time-reduced" if self.time_reduced else ""
        return (f"ReducedSystem(nq={self.nq}, order={self.order}, "
                f"{len(self.table)} nonlinear terms{flag})")


def _pole_keys(gf, elem):
    """Keys of irreducible s-factors in the coordinate denominators."""
    keys = set()
    for c in elem.coords.values():
        for p, mult in gf.monic_s_factors(c):
            if mult < 0:
                keys.add(("poly", p.key()) if p.degree > 1 else
                         ("pt", str(-p.coeffs[0])))
    return keys


def _pole_locations(gf, elem, into):
    """Collect {location_key: location} for coordinate denominator factors."""
    for c in elem.coords.values():
        for p, mult in gf.monic_s_factors(c):
            if mult < 0:
                loc = -p.coeffs[0] if p.degree == 1 else p
                into[_location_key(_normalize_location(gf, loc))] = loc


def reduce_to_curve(spec, order=4):
    """Rewrite the field in transverse coordinates q = x - gamma.

    The q-equations read dq_j/ds-style only after time reduction; here the
    independent variable is still the flow time, so the output carries the
    tangential series ds/dt = X_n(gamma + q, s) alongside the q-table.
    """
    if order < 1:
        raise InputError("expansion order must be at least 1")
    T = spec.tower
    gf = T.gf
    nq = spec.nq
    comp_series = [c.expand_around(spec.curve, order) for c in spec.components]
    xn = comp_series[nq]
    lin = []
    table = {}
    for j in range(nq):
        ser = _ser_add(comp_series[j],
                       _ser_scale(xn, -spec.curve_deriv[j]))
        const, row, high = _split_table(ser, nq)
        if const is not None and const:
            raise VerificationFailed(
                "tangency residual reappeared in the series expansion"
            )
        lin.append([c if c is not None else T.zero for c in row])
        for e, c in high.items():
            table[(j, e)] = c
    curve_places = set()
    for g in list(spec.curve) + list(spec.curve_deriv):
        curve_places |= _pole_keys(gf, g)
    for g in spec.curve_deriv:
        if g.is_zero():
            continue
        try:
            if fe_local_exponent(g, INF).rational < 0:
                curve_places.add(("inf",))
        except NotExpandable:
            curve_places.add(("inf",))
    return ReducedSystem(T, nq, order, lin, table, xn,
                         curve_places=curve_places)


def time_reduce(R):
    """Divide the transverse equations by the tangential speed.

    Afterwards s is the independent variable: the s-equation becomes the
    constant 1 and the residual time dependence survives as the retained
    equation dt/ds = 1 / X_n(s, q).  Requires X_n(s, 0) != 0; a curve of
    equilibria has no tangential speed to normalize by and must go through
    the linearization pipeline instead.
    """
    if R.time_reduced:
        return R
    T = R.tower
    nq = R.nq
    z = _zero_exp(nq)
    c0 = R.xn.get(z)
    if c0 is None or c0.is_zero():
        raise TangentiallySingular(
            "tangential component vanishes on the curve (equilibrium curve)"
        )
    inv = _ser_inv(R.xn, R.order, T)
    lin = []
    table = {}
    for j in range(nq):
        ser = _ser_mul(R.qdot_series(j), inv, R.order)
        const, row, high = _split_table(ser, nq)
        if const is not None and const:
            raise VerificationFailed("time reduction created a constant term")
        lin.append([c if c is not None else T.zero for c in row])
        for e, c in high.items():
            table[(j, e)] = c
    return ReducedSystem(T, nq, R.order, lin, table, {z: T.one}, inv,
                         time_reduced=True, gauge=R.gauge,
                         curve_places=R.curve_places,
                         gauge_places=R.gauge_places)


def apply_gauge(R, P, *, assert_diagonal=False):
    """Apply the coordinate change q = P q~ to a reduced system.

    The linear part transforms as P^{-1} lin P - P^{-1} P', the nonlinear
    vector as P^{-1} F(P q~), and the tangential/t series by plain
    substitution.  P must be invertible over the tower; pass
    ``assert_diagonal=True`` to have the result checked for a strictly
    diagonal linear part.
    """
    nq = R.nq
    towers = [R.tower] + [c.tower for row in P for c in row
                          if isinstance(c, FieldElem)]
    T = _deepest_tower(towers)
    P = [[T.coerce(c) for c in row] for row in P]
    if len(P) != nq or any(len(row) != nq for row in P):
        raise InputError("gauge matrix has wrong shape")
    Pinv, ker = linalg.mat_inv(P, T.zero, T.one)
    if Pinv is None:
        raise SingularGauge(f"gauge matrix is singular; kernel witness {ker}")
    Pd = [[c.derive() for c in row] for row in P]

    def lift_tab(tab):
        return {e: T.coerce(c) for e, c in tab.items()}

    lin = [[T.coerce(c) for c in row] for row in R.lin]
    AP = linalg.mat_mul(lin, P, T.zero)
    M = [[AP[i][j] - Pd[i][j] for j in range(nq)] for i in range(nq)]
    lin_new = linalg.mat_mul(Pinv, M, T.zero)

    high = [dict() for _ in range(nq)]
    for (j, i), c in R.table.items():
        high[j][i] = T.coerce(c)
    substituted = [_ser_subst_linear(h, P, R.order, T) for h in high]
    table = {}
    for j in range(nq):
        acc = {}
        for l in range(nq):
            c = Pinv[j][l]
            if c and substituted[l]:
                acc = _ser_add(acc, _ser_scale(substituted[l], c))
        for e, c in acc.items():
            if _deg(e) < 2:
                raise VerificationFailed("gauge leaked low-order terms")
            table[(j, e)] = c
    xn = _ser_subst_linear(lift_tab(R.xn), P, R.order, T)
    t = None if R.t is None else _ser_subst_linear(lift_tab(R.t), P, R.order, T)

    gf = T.gf
    gauge_places = set(R.gauge_places)
    for row in (*P, *Pinv, *Pd):
        for c in row:
            gauge_places |= _pole_keys(gf, c)
    gauge_new = linalg.mat_mul([[T.coerce(c) for c in row] for row in R.gauge],
                               P, T.zero)
    out = ReducedSystem(T, nq, R.order, lin_new, table, xn, t,
                        time_reduced=R.time_reduced, gauge=gauge_new,
                        curve_places=R.curve_places, gauge_places=gauge_places)
    if assert_diagonal and not out.is_diagonal():
        raise NotDiagonalAfterGauge(
            "gauge did not diagonalize the linear part"
        )
    return out


# --------------------------------------------------------------------------
# variational systems


class VESystem:
    """A variational system of some jet order k.

    ``variables`` are jet multi-indices: length n-1 tuples (transverse only)
    or length n with a trailing slot counting powers of the time deviation.
    The matrix acts as d/ds Z = M Z with variables sorted by total degree,
    which makes M block upper-triangular.
    """

    __slots__ = ("tower", "order", "variables", "matrix", "has_t", "_index")

    def __init__(self, tower, order, variables, matrix, has_t):
        self.tower = tower
        self.order = order
        self.variables = tuple(tuple(v) for v in variables)
        self.matrix = tuple(tuple(row) for row in matrix)
        self.has_t = has_t
        self._index = {v: k for k, v in enumerate(self.variables)}

    def index(self, v):
        return self._index[tuple(v)]

    def __repr__(self):
        kind = "VE" if self.has_t else "NVE"
        return f"{kind}(order={self.order}, size={len(self.variables)})"


def _jet_variables(slots, k):
    out = []

    def rec(prefix, remaining, budget):
        if remaining == 0:
            if sum(prefix):
                out.append(tuple(prefix))
            return
        for v in range(budget + 1):
            rec(prefix + [v], remaining - 1, budget - v)

    rec([], slots, k)
    out.sort(key=lambda v: (sum(v), v))
    return out


def _build_variational(R, k, with_t):
    if not R.time_reduced:
        raise NotTimeReduced(
            "variational systems are built after time reduction"
        )
    if k < 1:
        raise InputError("jet order must be at least 1")
    if k > R.order:
        raise OrderExceedsTable(
            f"jet order {k} exceeds the stored table order {R.order}"
        )
    T = R.tower
    nq = R.nq
    slots = nq + 1 if with_t else nq
    variables = _jet_variables(slots, k)
    index = {v: i for i, v in enumerate(variables)}
    size = len(variables)
    M = [[T.zero] * size for _ in range(size)]
    rhs = [R.qdot_series(j) for j in range(nq)]
    ttab = {e: c for e, c in (R.t or {}).items() if _deg(e) >= 1}
    for row, v in enumerate(variables):
        m = v[:nq]
        mt = v[nq] if with_t else 0
        for j in range(nq):
            if not m[j]:
                continue
            factor = T.from_ground(m[j])
            for i, c in rhs[j].items():
                target = list(v)
                target[j] -= 1
                for l, x in enumerate(i):
                    target[l] += x
                if sum(target) > k:
                    continue
                col = index[tuple(target)]
                M[row][col] = M[row][col] + factor * c
        if mt:
            factor = T.from_ground(mt)
            for i, c in ttab.items():
                target = list(v)
                target[nq] -= 1
                for l, x in enumerate(i):
                    target[l] += x
                if sum(target) > k:
                    continue
                col = index[tuple(target)]
                M[row][col] = M[row][col] + factor * c
    return VESystem(T, k, variables, M, with_t)


def build_VE(R, k):
    """Variational system of order k, time deviation included."""
    return _build_variational(R, k, True)


def build_NVE(R, k):
    """Normal variational system of order k: transverse jets only."""
    return _build_variational(R, k, False)


# --------------------------------------------------------------------------
# Fuchsian scan


def _exponent_entry(gf, resid):
    if resid.is_zero():
        return Exponent(0)
    scalar = scalarize_constant(resid)
    if scalar is not None:
        e = Exponent.from_scalar(gf, scalar)
        if e is not None:
            return e
        return str(gf.to_expr(scalar))
    return str(resid)


def fuchsian_scan(R):
    """Locate and classify the singular places of a diagonal reduced system.

    Walks the poles of the diagonal exponents and of the nonlinear table
    (plus the place at infinity), checks that every diagonal pole is simple
    after ramification normalization, and reports each singular place with
    its ramification index, local exponent vector, and a provenance tag.
    Raises :class:`NonFuchsian` as soon as some diagonal entry has a pole of
    order > 1.
    """
    if not R.is_diagonal():
        raise GaugeRequired("fuchsian_scan needs a diagonal linear part")
    T = R.tower
    gf = T.gf
    lams = [T.coerce(c) for c in R.lambdas]
    fs = [T.coerce(c) for c in R.table.values()]

    cands = {}
    for lam in lams:
        _pole_locations(gf, lam, cands)
    fkeys = set()
    for f in fs:
        local = {}
        _pole_locations(gf, f, local)
        fkeys |= set(local)
        cands.update(local)
    for info in T.gens:
        if info.radicand is not None:
            _pole_locations(gf, info.radicand, cands)

    def kind_of(key):
        if key in R.curve_places:
            return "curve-singularity"
        if key in R.gauge_places:
            return "gauge-artifact"
        return "vector-field-singularity"

    found = []
    for key, loc in sorted(cands.items(), key=lambda kv: str(kv[0])):
        ctx = _place_context(T, loc)
        exps = []
        has_pole = False
        for lam in lams:
            if lam.is_zero():
                exps.append(Exponent(0))
                continue
            e, _ = ctx.leading(lam)
            if e.rational < -1:
                raise NonFuchsian(
                    f"pole of order {-e.rational} at {loc}",
                    place=loc, order=-e.rational,
                )
            if e.rational < 0:
                has_pole = True
            exps.append(_exponent_entry(gf, ctx.coefficient(lam, -ctx.m)))
        include = has_pole or key in fkeys
        include = include or any(
            isinstance(e, Exponent) and (e.rational or e.param) for e in exps
        ) or any(isinstance(e, str) for e in exps)
        if not include:
            for f in fs:
                if f.is_zero():
                    continue
                try:
                    ef, _ = ctx.leading(f)
                except NotExpandable:
                    include = True
                    break
                if ef.rational < 0:
                    include = True
                    break
        if include:
            found.append(SingularPlace(loc, ctx.m, exps, kind_of(key)))

    # the place at infinity
    ctx = _place_context(T, INF)
    s2 = T.from_ground(gf.s * gf.s)
    exps = []
    include = False
    for lam in lams:
        if lam.is_zero():
            exps.append(Exponent(0))
            continue
        e, _ = ctx.leading(lam)
        if e.rational < 1:
            raise NonFuchsian(
                f"pole of order {2 - e.rational} of the local system at infinity",
                place=INF, order=2 - e.rational,
            )
        if e.rational < 2:
            include = True
        exps.append(_exponent_entry(gf, ctx.coefficient(-(lam * s2), -ctx.m)))
    if not include:
        for f in fs:
            if f.is_zero():
                continue
            try:
                ef, _ = ctx.leading(f)
            except NotExpandable:
                include = True
                break
            if ef.rational < 0:
                include = True
                break
    if include:
        found.append(SingularPlace(INF, ctx.m, exps, kind_of(("inf",))))
    return found
