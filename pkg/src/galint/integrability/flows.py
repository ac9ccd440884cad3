"""Flow-box normal forms around the invariant curve.

The reduced, time-normalized system  dq_j/ds = h_j q_j + ...  is conjugated,
order by order, to its linear part: we solve for series phi_j(s, u) in the
flow-box coordinates u_j = c_j H_j(s) (with H_j'/H_j = h_j) so that
q = phi(s, u) sweeps out solutions, together with the time series phi_t.
Every coefficient solves a scalar equation  y' + delta*y = g  over the
radical tower.  A non-resonant cell has at most one rational solution; a
resonant cell is pinned down by vanishing at a regular base point; cells of
the time series whose primitive is genuinely logarithmic are carried
symbolically.  Failure in a transverse component is not an exception but a
result: the Obstruction records exactly which cell refused and why.
"""

from fractions import Fraction

from ..algebra.linalg import mat_inv
from ..algebra.linode import fe_integrate_rational, rational_ode_solve
from ..algebra.places import evaluate_at, fiber_tower, scalarize_constant
from ..errors import (
    BasePointSingular,
    DegreeBoundExceeded,
    GaugeRequired,
    InputError,
    IntegrationIncomplete,
    NoTowerSolution,
    NotTimeReduced,
    OrderExceedsTable,
    SingularGauge,
    TangentiallySingular,
    TowerError,
    VerificationFailed,
    ZeroDivisor,
)
from ..galois.resonance import _unit_witness
from ..reduction import ReducedSystem, fuchsian_scan, time_reduce
from ..series import (
    FormalVectorField,
    HyperexpBasis,
    SymbolMonomial,
    TruncSeries,
    ts_invert_map,
    ts_lie,
)

_NEUTRAL = SymbolMonomial()

#: classification labels used by :class:`Obstruction`
LOG_IN_NORMAL_PART = "log-in-normal-part"
INCONCLUSIVE_BOUNDS = "inconclusive-bounds"


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------

class LogSymbol:
    """A formal primitive L appearing in the time series.

    ``deriv`` is the exact derivative L' (a tower element); ``argument`` is
    the log argument when L = log(argument), None for an opaque primitive;
    ``index`` is the variable multi-index of the cell that created it.
    """

    __slots__ = ("name", "deriv", "index", "argument")

    def __init__(self, name, deriv, index, argument=None):
        self.name = name
        self.deriv = deriv
        self.index = tuple(index)
        self.argument = argument

    def __repr__(self):
        arg = "" if self.argument is None else f" = log({self.argument})"
        return f"<LogSymbol {self.name}{arg}>"


class FormalFlow:
    """Normal-form flow data.

    ``components`` are the transverse series phi_j in the u-alphabet,
    ``time`` the series phi_t (with L-symbol cells where the primitive is
    logarithmic; None on a partial flow recovered from an Obstruction),
    ``s0`` the base point used to pin resonant coefficients, ``resonant``
    the (component, index) pairs that needed pinning, ``logs`` the
    LogSymbol records in creation order.
    """

    __slots__ = ("basis", "components", "time", "s0", "N", "system",
                 "resonant", "logs")

    def __init__(self, basis, components, time, s0, N, system,
                 resonant=(), logs=()):
        self.basis = basis
        self.components = tuple(components)
        self.time = time
        self.s0 = s0
        self.N = int(N)
        self.system = system
        self.resonant = tuple(resonant)
        self.logs = tuple(logs)

    @property
    def nq(self):
        return len(self.components)

    def __repr__(self):
        time = "with time series" if self.time is not None else "no time series"
        logs = f", {len(self.logs)} log symbols" if self.logs else ""
        return (f"FormalFlow(nq={self.nq}, N={self.N}, s0={self.s0}, "
                f"{time}{logs})")


class Obstruction:
    """Order-k refusal: one cell of the normal form has no rational
    coefficient.

    ``component`` is 1-based; the value nq+1 refers to the time series.
    ``classification`` separates the proven case from exhausted heuristic
    bounds.  ``partial`` carries the flow completed so far — the lower-order
    normal form stays valid and usable.
    """

    __slots__ = ("order", "component", "index", "delta", "rhs",
                 "classification", "partial")

    def __init__(self, order, component, index, delta, rhs,
                 classification, partial=None):
        self.order = int(order)
        self.component = int(component)
        self.index = tuple(index)
        self.delta = delta
        self.rhs = rhs
        self.classification = classification
        self.partial = partial

    @property
    def net_exponent(self):
        """H-monomial exponent of the offending cell relative to H_j."""
        e = list(self.index)
        j = self.component - 1
        if j < len(e):
            e[j] -= 1
        return tuple(e)

    def replay(self):
        """Re-run the failing solve; raises the error class seen during
        construction."""
        rational_ode_solve(self.delta, self.rhs)

    def __repr__(self):
        return (f"Obstruction(order={self.order}, component={self.component}, "
                f"index={self.index}, {self.classification})")


class Linearization:
    """A tangent-to-identity map conjugating the system to its linear part.

    ``map`` holds the component series in the chart the system was reduced
    in (the accumulated gauge has been undone); ``invariant`` is True when
    the coefficients were checked fixed under every declared Galois
    generator, None when the check did not apply (no generators, or the
    system itself is not defined over the base).
    """

    __slots__ = ("map", "flow", "order", "gauge", "invariant")

    def __init__(self, map_, flow, order, gauge, invariant=None):
        self.map = tuple(map_)
        self.flow = flow
        self.order = int(order)
        self.gauge = gauge
        self.invariant = invariant

    def __repr__(self):
        return (f"Linearization(nq={len(self.map)}, order={self.order}, "
                f"invariant={self.invariant})")


# ---------------------------------------------------------------------------
# small helpers
# ---------------------------------------------------------------------------

def _q_series(basis, N, tab):
    """A plain coefficient table as a neutral q-alphabet series."""
    table = {(tuple(i), _NEUTRAL): c for i, c in tab.items() if sum(i) <= N}
    return TruncSeries(basis, "q", N, table)


def _int_elem(tower, m):
    return tower.from_ground(tower.gf.from_rational(m))


def _combo(tower, hs, index):
    """The combination  sum_l index_l * h_l  as a tower element."""
    acc = tower.zero
    for m, h in zip(index, hs):
        if m:
            acc = acc + h * _int_elem(tower, m)
    return acc


def _needed_values(R):
    vals = list(R.lambdas)
    vals.extend(R.table.values())
    if R.t:
        vals.extend(R.t.values())
    return vals


def _regular_at(tower, vals, s0):
    try:
        fiber_tower(tower, s0)
        for v in vals:
            evaluate_at(v, s0)
    except (ZeroDivisionError, TowerError):
        return False
    return True


_BASE_CAP = 64


def _default_base_point(R):
    """Smallest nonnegative rational (halves included) where the system data
    evaluates; None when nothing below the cap works."""
    vals = _needed_values(R)
    for twice in range(2 * _BASE_CAP + 1):
        s0 = Fraction(twice, 2)
        if _regular_at(R.tower, vals, s0):
            return s0
    return None


def _pin(a, hom, s0):
    """Subtract the kernel multiple that makes ``a`` vanish at the base
    point.  The normalization constant has to be a parameter scalar — a
    genuinely algebraic value cannot be lifted back to a constant of the
    tower."""
    if a.is_zero():
        return a
    if s0 is None:
        raise BasePointSingular(
            "a resonant coefficient needs a regular base point for its "
            "normalization and no default was found; pass s0 explicitly"
        )
    tower = a.tower
    try:
        va = evaluate_at(a, s0)
    except ZeroDivisionError as exc:
        raise BasePointSingular(
            f"particular solution has a pole at the base point s = {s0}"
        ) from exc
    for w in hom:
        try:
            vw = evaluate_at(w, s0)
            vwi = vw.tower.invert(vw)
        except (ZeroDivisionError, ZeroDivisor):
            continue
        c = scalarize_constant(va * vwi)
        if c is None:
            raise TowerError(
                "resonant normalization constant lies outside the "
                "parameter field"
            )
        if not c:
            return a
        left = scalarize_constant(va - vw * vw.tower.from_ground(c))
        if left is None or left:
            raise VerificationFailed(
                "pinned coefficient does not vanish at the base point"
            )
        return a - w * tower.from_ground(c)
    raise BasePointSingular(
        f"no kernel witness is invertible at the base point s = {s0}"
    )


def _soft_pin(a, s0):
    """Best-effort version of :func:`_pin` used for integration constants:
    when the value at the base point is not a parameter scalar the constant
    is simply left as produced."""
    if s0 is None or a.is_zero():
        return a
    try:
        c = scalarize_constant(evaluate_at(a, s0))
    except (ZeroDivisionError, TowerError):
        return a
    if c is None or not c:
        return a
    return a - a.tower.from_ground(c)


def _solve_cell(delta, g, s0, conditions):
    """One normal-form cell:  y' + delta*y = g,  resonant ones pinned."""
    flag = []
    y, hom = rational_ode_solve(
        delta, g, with_kernel=True, conditions=conditions, soundness=flag
    )
    if hom:
        y = _pin(y, hom, s0)
    return y, bool(hom)


def _time_witness(tower, delta, conditions):
    """An invertible rational solution of  y' = delta*y,  if any, plus the
    soundness of the search."""
    flag = []
    _, hom = rational_ode_solve(
        delta, tower.zero, with_kernel=True, conditions=conditions,
        soundness=flag,
    )
    return _unit_witness(hom), flag[0]


# ---------------------------------------------------------------------------
# the flow construction
# ---------------------------------------------------------------------------

def formal_flow(R, N=None, s0=None, *, conditions=None):
    """Normal-form flow of a diagonal, time-reduced system.

    Returns a :class:`FormalFlow`, or an :class:`Obstruction` describing
    the first transverse cell with no rational coefficient (a mathematical
    conclusion about the system, not a failure of the computation).
    """
    if not isinstance(R, ReducedSystem):
        raise InputError("formal_flow expects a ReducedSystem")
    if not R.time_reduced or R.t is None:
        raise NotTimeReduced("normalize time first (time_reduce)")
    if not R.is_diagonal():
        raise GaugeRequired("the linear part must be diagonalized first")
    N = R.order if N is None else int(N)
    if N < 1:
        raise InputError("flow order must be at least 1")
    if N > R.order:
        raise OrderExceedsTable(
            f"flow order {N} exceeds the reduction order {R.order}"
        )
    fuchsian_scan(R)  # irregular diagonals are rejected up front

    tower = R.tower
    nq = R.nq
    hs = R.lambdas
    if s0 is None:
        s0 = _default_base_point(R)
    else:
        s0 = Fraction(s0)
        if s0 < 0:
            raise InputError("the base point must be nonnegative")
        if not _regular_at(tower, _needed_values(R), s0):
            raise BasePointSingular(f"s = {s0} is not a regular base point")

    basis = HyperexpBasis(hs)
    one = tower.one
    phi = [TruncSeries.variable(basis, "u", N, j, one) for j in range(nq)]
    rhs = [_q_series(basis, N, R.qdot_series(j)) for j in range(nq)]

    def partial(upto):
        comps = tuple(p.truncate(upto) for p in phi)
        return FormalFlow(basis, comps, None, s0, upto, R, tuple(resonant))

    resonant = []
    for order in range(2, N + 1):
        for j in range(nq):
            defect = rhs[j].compose(phi) - phi[j].derive_s()
            for index, sym, g in defect.cells():
                if sum(index) != order:
                    continue
                if sym.ell or tuple(sym.e) != tuple(index):
                    raise VerificationFailed(
                        "transverse defect carries unexpected symbols"
                    )
                delta = _combo(tower, hs, index) - hs[j]
                try:
                    y, res = _solve_cell(delta, g, s0, conditions)
                except NoTowerSolution:
                    return Obstruction(order, j + 1, index, delta, g,
                                       LOG_IN_NORMAL_PART, partial(order - 1))
                except DegreeBoundExceeded:
                    return Obstruction(order, j + 1, index, delta, g,
                                       INCONCLUSIVE_BOUNDS, partial(order - 1))
                phi[j] = phi[j] + TruncSeries(
                    basis, "u", N, {(index, SymbolMonomial(index)): y}
                )
                if res:
                    resonant.append((j + 1, index))

    # ---- the time series --------------------------------------------------
    image = _q_series(basis, N, R.t).compose(phi)
    plain = {}
    symbols = []
    log_cells = []
    for index, sym, g in image.cells():
        if sym.ell or tuple(sym.e) != tuple(index):
            raise VerificationFailed("time defect carries unexpected symbols")
        delta = _combo(tower, hs, index)
        try:
            y, res = _solve_cell(delta, g, s0, conditions)
        except (NoTowerSolution, DegreeBoundExceeded):
            psi, sound = _time_witness(tower, delta, conditions)
            if psi is None:
                cls = LOG_IN_NORMAL_PART if sound else INCONCLUSIVE_BOUNDS
                return Obstruction(sum(index), nq + 1, index, delta, g,
                                   cls, partial(N))
            # The primitive of g*H^index is psi times a rational integral;
            # its logarithmic part rides along symbolically.
            gi = g * tower.invert(psi)
            split = None
            try:
                split = fe_integrate_rational(gi, conditions=conditions)
            except IntegrationIncomplete:
                pass
            if split is None:
                rec = LogSymbol(f"L{len(symbols) + 1}", gi, index)
                symbols.append(rec)
                log_cells.append((index, rec.name, psi))
            else:
                r, glogs = split
                r = _soft_pin(r, s0)
                if not r.is_zero():
                    plain[tuple(index)] = psi * r
                for c, arg in glogs:
                    deriv = arg.derive() * tower.invert(arg)
                    rec = LogSymbol(f"L{len(symbols) + 1}", deriv, index, arg)
                    symbols.append(rec)
                    log_cells.append((index, rec.name,
                                      psi * tower.from_ground(c)))
        else:
            if res:
                resonant.append((nq + 1, tuple(index)))
            if not y.is_zero():
                plain[tuple(index)] = y

    basis1 = basis
    for rec in symbols:
        basis1 = basis1.with_log(rec.name, rec.deriv)
    components = tuple(TruncSeries(basis1, "u", N, p.table) for p in phi)
    ttab = {}
    for index, y in plain.items():
        ttab[(index, SymbolMonomial(index))] = y
    for index, name, coeff in log_cells:
        ttab[(index, SymbolMonomial(index, ((name, 1),)))] = coeff
    time = TruncSeries(basis1, "u", N, ttab)

    flow = FormalFlow(basis1, components, time, s0, N, R,
                      tuple(resonant), tuple(symbols))
    _verify_flow(flow)
    return flow


def _verify_flow(flow):
    """Re-check the defining equations on the assembled object."""
    R = flow.system
    basis = flow.basis
    N = flow.N
    comps = list(flow.components)
    for j in range(R.nq):
        rhs = _q_series(basis, N, R.qdot_series(j))
        res = rhs.compose(comps) - comps[j].derive_s()
        if not res.is_zero():
            raise VerificationFailed(
                f"defining residual of component {j + 1} is nonzero"
            )
    res = _q_series(basis, N, R.t).compose(comps) - flow.time.derive_s()
    if not res.is_zero():
        raise VerificationFailed(
            "defining residual of the time series is nonzero"
        )


def invert_flow(flow):
    """The inverse map: series Phi_j(s, q) recovering u_j = c_j H_j."""
    if not isinstance(flow, FormalFlow):
        raise InputError("invert_flow expects a FormalFlow")
    return tuple(ts_invert_map(list(flow.components)))


# ---------------------------------------------------------------------------
# chart transport along the accumulated gauge
# ---------------------------------------------------------------------------

def _linear_subst(basis, M, N, alphabet="q"):
    """Series rows  q_j -> sum_l M[j][l] q_l."""
    n = len(M)
    out = []
    for row in M:
        tab = {}
        for l, c in enumerate(row):
            if c:
                e = tuple(1 if k == l else 0 for k in range(n))
                tab[(e, _NEUTRAL)] = c
        out.append(TruncSeries(basis, alphabet, N, tab))
    return out


def _gauge_inverse(R):
    inv, _bad = mat_inv([list(r) for r in R.gauge],
                        R.tower.zero, R.tower.one)
    if inv is None:
        raise SingularGauge("the accumulated gauge is singular")
    return inv


def original_series(R, a):
    """A reduced-chart function series rewritten in the original transverse
    chart (original q = gauge * reduced q)."""
    if a.alphabet != "q":
        raise InputError("chart transport applies to q-alphabet series")
    subst = _linear_subst(a.basis, _gauge_inverse(R), a.N)
    return a.compose(subst)


def original_field(R, components, s_component):
    """Pushforward of a reduced-chart vector field by the gauge.

    With q_orig = P(s) q_red the original components pick up a P'(s) q_red
    drift from the s-motion besides the linear mix; everything is rewritten
    in the original chart afterwards.
    """
    tower = R.tower
    nq = R.nq
    P = R.gauge
    base = components[0]
    basis, N = base.basis, base.N
    if base.alphabet != "q":
        raise InputError("chart transport applies to q-alphabet series")
    subst = _linear_subst(basis, _gauge_inverse(R), N)
    qvars = [TruncSeries.variable(basis, "q", N, l, tower.one)
             for l in range(nq)]
    out = []
    for i in range(nq):
        acc = TruncSeries.zero(basis, "q", N)
        for l in range(nq):
            if P[i][l]:
                acc = acc + components[l].scale(P[i][l])
            dP = P[i][l].derive()
            if not dP.is_zero():
                acc = acc + (qvars[l] * s_component).scale(dP)
        out.append(acc.compose(subst))
    return tuple(out), s_component.compose(subst)


# ---------------------------------------------------------------------------
# linearization
# ---------------------------------------------------------------------------

def _unit_time(R):
    """dt = ds for systems whose tangential part vanishes on the curve."""
    zero_i = (0,) * R.nq
    return ReducedSystem(
        R.tower, R.nq, R.order, R.lin, dict(R.table), dict(R.xn),
        t={zero_i: R.tower.one}, time_reduced=True, gauge=R.gauge,
        curve_places=R.curve_places, gauge_places=R.gauge_places,
    )


def _system_fixed(R, basis, names):
    """Whether the original-chart right sides are fixed by every declared
    Galois generator (i.e. the input system is defined over the base)."""
    qdot = [_q_series(basis, R.order, R.qdot_series(j)) for j in range(R.nq)]
    sc = TruncSeries.constant(basis, "q", R.order, R.tower.one)
    comps, sc_o = original_field(R, qdot, sc)
    for series in list(comps) + [sc_o]:
        for _i, _s, c in series.cells():
            for name in names:
                if not (c.galois(name) - c).is_zero():
                    return False
    return True


def linearize(R, N=None, s0=None, *, conditions=None):
    """Tangent-to-identity map conjugating the system to its linear part.

    Works in the reduced chart, then undoes the accumulated gauge so the
    returned map applies in the chart the system was reduced in.  Time is
    normalized on the way when the input still carries flow time; a system
    whose tangential component vanishes on the curve keeps its own parameter
    (dt = ds).  Propagates the flow's Obstruction when there is one.
    """
    if not isinstance(R, ReducedSystem):
        raise InputError("linearize expects a ReducedSystem")
    if not R.time_reduced:
        try:
            R = time_reduce(R)
        except TangentiallySingular:
            R = _unit_time(R)
    if not R.is_diagonal():
        raise GaugeRequired("diagonalize the linear part first (apply_gauge)")
    flow = formal_flow(R, N, s0, conditions=conditions)
    if isinstance(flow, Obstruction):
        return flow
    Phi = invert_flow(flow)

    tower = R.tower
    nq = R.nq
    hs = R.lambdas
    basis = flow.basis
    M = flow.N

    # in the reduced chart the inverse map straightens the field exactly
    qdot = [_q_series(basis, M, R.qdot_series(j)) for j in range(nq)]
    field = FormalVectorField(
        qdot, TruncSeries.constant(basis, "q", M, tower.one)
    )
    for j in range(nq):
        res = ts_lie(Phi[j], field) - Phi[j].scale(hs[j])
        if not res.is_zero():
            raise VerificationFailed(
                f"inverse map does not straighten component {j + 1}"
            )

    P = R.gauge
    subst = _linear_subst(basis, _gauge_inverse(R), M)
    moved = [p.compose(subst) for p in Phi]
    comps = []
    for i in range(nq):
        acc = TruncSeries.zero(basis, "q", M)
        for l in range(nq):
            if P[i][l]:
                acc = acc + moved[l].scale(P[i][l])
        comps.append(acc)

    invariant = None
    names = tower.galois_names()
    if names and _system_fixed(R, basis, names):
        for comp in comps:
            for _i, _s, c in comp.cells():
                for name in names:
                    if not (c.galois(name) - c).is_zero():
                        raise VerificationFailed(
                            "linearizing map is not Galois-invariant"
                        )
        invariant = True
    return Linearization(tuple(comps), flow, M, R.gauge, invariant)
