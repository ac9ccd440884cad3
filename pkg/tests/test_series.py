"""Truncated series with hyperexponential/log symbols: arithmetic, d/ds,
composition, map inversion, Lie derivatives, and the error paths."""

import pytest

from galint.algebra import AlgebraicTower, GroundField
from galint.errors import (
    AlphabetMismatch,
    NonzeroConstantTerm,
    NotTangentToIdentity,
)
from galint.series import (
    FormalVectorField,
    HyperexpBasis,
    SymbolMonomial,
    TruncSeries,
    ts_arith,
    ts_compose,
    ts_derive_s,
    ts_invert_map,
    ts_lie,
)


@pytest.fixture()
def ctx():
    gf = GroundField(params=("alpha",))
    T = AlgebraicTower(gf)
    s, alpha = gf.s, gf.gen("alpha")
    B = HyperexpBasis([T.from_ground(alpha / s), T.from_ground(2 * alpha / s)])
    return gf, T, B


def u(B, T, j, N=3):
    return TruncSeries.variable(B, "u", N, j, T.one)


def q(B, T, j, N=3):
    return TruncSeries.variable(B, "q", N, j, T.one)


def test_product_of_variables_collects_symbols(ctx):
    gf, T, B = ctx
    p = ts_arith(u(B, T, 0), u(B, T, 1), "*")
    c = p.coeff((1, 1), SymbolMonomial((1, 1)))
    assert c == T.one and len(p.table) == 1


def test_binomial_square_truncates(ctx):
    gf, T, B = ctx
    one = TruncSeries.constant(B, "u", 2, T.one)
    a = one + u(B, T, 0, N=2)
    sq = a * a
    assert sq.coeff((0, 0)) == T.one
    assert sq.coeff((1, 0), SymbolMonomial((1, 0))) == T.from_ground(2)
    assert sq.coeff((2, 0), SymbolMonomial((2, 0))) == T.one
    assert len(sq.table) == 3


def test_product_of_tangent_maps_has_unit_cross_cell(ctx):
    # phi_j = u_j + O(2): the coefficient of u1*u2 (symbol H1 H2) in
    # phi_1*phi_2 is exactly 1, whatever the tails are
    gf, T, B = ctx
    u1, u2 = u(B, T, 0), u(B, T, 1)
    phi1 = u1 + u2 * u2
    phi2 = u2 - u1 * u1
    c = (phi1 * phi2).coeff((1, 1), SymbolMonomial((1, 1)))
    assert c == T.one


def test_derive_single_hyperexp_variable(ctx):
    gf, T, B = ctx
    d = ts_derive_s(u(B, T, 0))
    assert d.coeff((1, 0), SymbolMonomial((1, 0))) == T.from_ground(
        gf.gen("alpha") / gf.s
    )
    assert len(d.table) == 1


def test_derive_log_symbol(ctx):
    gf, T, B = ctx
    B2 = B.with_log("L1", T.from_ground(1 / gf.s))
    L = TruncSeries(
        B2, "u", 3, {((0, 0), SymbolMonomial((0, 0), {"L1": 1})): T.one}
    )
    d = ts_derive_s(L)
    assert d.coeff((0, 0)) == T.from_ground(1 / gf.s)
    assert len(d.table) == 1


def test_derive_resonant_cell_closes(ctx):
    # with h1 = alpha/s:  d/ds [ s^2/(2a+2) * u1^2 H1^2 ]
    #   = [ 2s/(2a+2) + 2*(a/s)*s^2/(2a+2) ] u1^2 H1^2 = s * u1^2 H1^2
    gf, T, B = ctx
    s, alpha = gf.s, gf.gen("alpha")
    cell = TruncSeries(
        B, "u", 3,
        {((2, 0), SymbolMonomial((2, 0))): T.from_ground(s**2 / (2 * alpha + 2))},
    )
    d = ts_derive_s(cell)
    assert d.coeff((2, 0), SymbolMonomial((2, 0))) == T.from_ground(s)
    assert len(d.table) == 1


def test_compose_square(ctx):
    gf, T, B = ctx
    got = ts_compose(q(B, T, 0) * q(B, T, 0), [u(B, T, 0), u(B, T, 1)])
    assert got.coeff((2, 0), SymbolMonomial((2, 0))) == T.one
    assert len(got.table) == 1


def test_compose_cubic_monomial(ctx):
    gf, T, B = ctx
    a = q(B, T, 0, 4) * q(B, T, 0, 4) * q(B, T, 1, 4)
    got = ts_compose(a, [u(B, T, 0, 4), u(B, T, 1, 4)])
    assert got.coeff((2, 1), SymbolMonomial((2, 1))) == T.one


def test_compose_polynomial_expansion(ctx):
    # (u - u^2) + (u - u^2)^2 = u - 2u^3 + O(4)
    gf, T, B = ctx
    a = q(B, T, 0) + q(B, T, 0) * q(B, T, 0)
    g = u(B, T, 0) - u(B, T, 0) * u(B, T, 0)
    got = ts_compose(a, [g, TruncSeries.zero(B, "u", 3)])
    assert got.coeff((1, 0), SymbolMonomial((1, 0))) == T.one
    assert got.coeff((2, 0), SymbolMonomial((2, 0))) is None
    assert got.coeff((3, 0), SymbolMonomial((3, 0))) == T.from_ground(-2)


def test_compose_rejects_constant_terms(ctx):
    gf, T, B = ctx
    bad = u(B, T, 0) + TruncSeries.constant(B, "u", 3, T.one)
    with pytest.raises(NonzeroConstantTerm):
        ts_compose(q(B, T, 0), [bad, u(B, T, 1)])


def test_invert_identity(ctx):
    gf, T, B = ctx
    Phi = ts_invert_map([u(B, T, 0), u(B, T, 1)])
    assert Phi[0] == q(B, T, 0)
    assert Phi[1] == q(B, T, 1)


def test_invert_one_variable_series():
    gf = GroundField(params=("alpha",))
    T = AlgebraicTower(gf)
    alpha = gf.gen("alpha")
    B = HyperexpBasis([T.from_ground(alpha / gf.s)])
    uu = TruncSeries.variable(B, "u", 4, 0, T.one)
    qq = TruncSeries.variable(B, "q", 4, 0, T.one)
    a = T.from_ground(alpha)
    phi = uu + (uu * uu).scale(a)
    (Phi,) = ts_invert_map([phi])
    assert Phi.coeff((1,)) == T.one
    assert Phi.coeff((2,)) == -a
    assert Phi.coeff((3,)) == a * a * T.from_ground(2)
    # two-sided identity, exactly, through the truncation order
    assert (ts_compose(Phi, [phi]) - uu).is_zero()
    assert (ts_compose(phi, [Phi]) - qq).is_zero()


def test_invert_rejects_bad_linear_part(ctx):
    gf, T, B = ctx
    u1, u2 = u(B, T, 0), u(B, T, 1)
    with pytest.raises(NotTangentToIdentity):
        ts_invert_map([u1 + u2, u2])
    with pytest.raises(NotTangentToIdentity):
        ts_invert_map([u1.scale(T.from_ground(2)), u2])


def test_lie_of_coordinate_and_constant(ctx):
    gf, T, B = ctx
    q1, q2 = q(B, T, 0), q(B, T, 1)
    one = TruncSeries.constant(B, "q", 3, T.one)
    v = FormalVectorField([q2, q1], one)
    assert ts_lie(q1, v) == q2
    const = TruncSeries.constant(B, "q", 3, T.from_ground(gf.gen("alpha")))
    assert ts_lie(const, v).is_zero()


def test_lie_annihilates_product_integral(ctx):
    # v = (a q1, -a q2, s-comp 1) conserves q1 q2 for any series a
    gf, T, B = ctx
    q1, q2 = q(B, T, 0, 4), q(B, T, 1, 4)
    one = TruncSeries.constant(B, "q", 4, T.one)
    a = one + q1 * q2
    v = FormalVectorField([a * q1, -(a * q2)], one)
    assert ts_lie(q1 * q2, v).is_zero()


def test_alphabet_mismatch(ctx):
    gf, T, B = ctx
    with pytest.raises(AlphabetMismatch):
        ts_arith(q(B, T, 0), u(B, T, 0), "+")


def test_truncation_coherence_spot(ctx):
    gf, T, B = ctx
    s = gf.s
    a = (
        TruncSeries.constant(B, "u", 4, T.from_ground(s))
        + u(B, T, 0, 4)
        + u(B, T, 0, 4) * u(B, T, 1, 4)
    )
    b = u(B, T, 1, 4) + u(B, T, 0, 4) * u(B, T, 0, 4)
    assert (a * b).truncate(2) == a.truncate(2) * b.truncate(2)
    assert ts_derive_s(a).truncate(2) == ts_derive_s(a.truncate(2))
