"""Truncated multivariate series with hyperexponential and logarithmic symbols.

A cell of a :class:`TruncSeries` is a pair (variable multi-index i, symbol
monomial) holding a tower-element coefficient a(s); it denotes

    a(s) * x^i * H(s)^e * L(s)^ell

where x is the alphabet (plain coordinates q, or u with u_j standing for
c_j*H_j(s)), H_j are hyperexponential symbols known only through their
logarithmic derivatives h_j = H_j'/H_j, and each L symbol is known through
its derivative.  The exponent vector e records the *total* H-content of the
cell, so in the u-alphabet a plain monomial u^i carries e = i; exponents may
go negative in intermediate objects (H^i / H_j quotients), and exported
shapes are validated by their producers.

Everything is immutable; operations return new series.  Truncation is by
total variable degree |i| <= N.
"""

from __future__ import annotations

from .errors import AlphabetMismatch, NonzeroConstantTerm, NotTangentToIdentity

__all__ = [
    "HyperexpBasis",
    "SymbolMonomial",
    "TruncSeries",
    "FormalVectorField",
    "RatioSeries",
    "ts_arith",
    "ts_derive_s",
    "ts_compose",
    "ts_invert_map",
    "ts_lie",
]


class HyperexpBasis:
    """The symbol dictionary: n-1 hyperexponential symbols and the L symbols.

    ``hs[j]`` is the logarithmic derivative of H_{j+1} (a tower element);
    ``logs`` maps each L-symbol name to its derivative.
    """

    __slots__ = ("hs", "logs", "_lognames")

    def __init__(self, hs, logs=()):
        self.hs = tuple(hs)
        if isinstance(logs, dict):
            logs = tuple(sorted(logs.items()))
        self.logs = tuple(logs)
        self._lognames = tuple(name for name, _ in self.logs)
        if len(set(self._lognames)) != len(self._lognames):
            raise ValueError("duplicate L-symbol names")
        towers = {id(h.tower) for h in self.hs}
        if len(towers) > 1:
            raise ValueError("hyperexponential symbols must share one tower")

    @property
    def n(self):
        return len(self.hs)

    def log_deriv(self, name):
        for nm, d in self.logs:
            if nm == name:
                return d
        raise KeyError(f"unknown L symbol {name!r}")

    def with_log(self, name, deriv):
        """A copy with one more L symbol (idempotent on identical re-adds)."""
        for nm, d in self.logs:
            if nm == name:
                if d == deriv:
                    return self
                raise ValueError(f"L symbol {name!r} already bound")
        return HyperexpBasis(self.hs, self.logs + ((name, deriv),))

    def __eq__(self, other):
        if not isinstance(other, HyperexpBasis):
            return NotImplemented
        return self.hs == other.hs and self.logs == other.logs

    def __hash__(self):
        return hash((len(self.hs), self._lognames))

    def __repr__(self):
        return f"HyperexpBasis(n={self.n}, logs={self._lognames})"


class SymbolMonomial:
    """H^e times a multiset of L symbols; the neutral symbol is empty."""

    __slots__ = ("e", "ell")

    def __init__(self, e=(), ell=()):
        self.e = tuple(int(x) for x in e)
        if isinstance(ell, dict):
            ell = tuple(sorted((k, int(v)) for k, v in ell.items() if v))
        else:
            ell = tuple((k, int(v)) for k, v in ell if v)
        self.ell = tuple(sorted(ell))

    def is_neutral(self):
        return not any(self.e) and not self.ell

    def mul(self, other):
        ea, eb = self.e, other.e
        if len(ea) < len(eb):
            ea = ea + (0,) * (len(eb) - len(ea))
        elif len(eb) < len(ea):
            eb = eb + (0,) * (len(ea) - len(eb))
        d = dict(self.ell)
        for k, v in other.ell:
            d[k] = d.get(k, 0) + v
        return SymbolMonomial(tuple(a + b for a, b in zip(ea, eb)), d)

    def shift_e(self, delta):
        e = list(self.e)
        if len(e) < len(delta):
            e += [0] * (len(delta) - len(e))
        for k, d in enumerate(delta):
            e[k] += d
        return SymbolMonomial(e, self.ell)

    def lower_log(self, name):
        d = dict(self.ell)
        d[name] -= 1
        return SymbolMonomial(self.e, d)

    def sort_key(self):
        return (self.e, self.ell)

    def __eq__(self, other):
        if not isinstance(other, SymbolMonomial):
            return NotImplemented
        ea, eb = list(self.e), list(other.e)
        n = max(len(ea), len(eb))
        ea += [0] * (n - len(ea))
        eb += [0] * (n - len(eb))
        return ea == eb and self.ell == other.ell

    def __hash__(self):
        e = self.e
        while e and e[-1] == 0:
            e = e[:-1]
        return hash((e, self.ell))

    def __repr__(self):
        parts = []
        for j, k in enumerate(self.e):
            if k == 1:
                parts.append(f"H{j + 1}")
            elif k:
                parts.append(f"H{j + 1}^{k}")
        for name, m in self.ell:
            parts.append(name if m == 1 else f"{name}^{m}")
        return "*".join(parts) if parts else "1"


_NEUTRAL = SymbolMonomial()


def _norm_sym(sym, n):
    """Canonical symbol with exponent vector padded/stripped to length n."""
    e = list(sym.e)[:n] + [0] * max(0, n - len(sym.e))
    if any(sym.e[n:]):
        raise ValueError("symbol exponent vector longer than the basis")
    return SymbolMonomial(e, sym.ell)


class TruncSeries:
    """Sparse truncated series; see the module docstring for cell semantics."""

    __slots__ = ("basis", "alphabet", "N", "table")

    def __init__(self, basis, alphabet, N, table=None):
        if alphabet not in ("q", "u"):
            raise ValueError("alphabet must be 'q' or 'u'")
        self.basis = basis
        self.alphabet = alphabet
        self.N = int(N)
        clean = {}
        if table:
            for (i, sym), c in table.items():
                i = tuple(int(x) for x in i)
                if len(i) != basis.n:
                    raise ValueError("variable multi-index length mismatch")
                if any(x < 0 for x in i):
                    raise ValueError("negative variable exponent")
                if sum(i) > self.N:
                    continue
                if not c:
                    continue
                key = (i, _norm_sym(sym, basis.n))
                if key in clean:
                    acc = clean[key] + c
                    if acc:
                        clean[key] = acc
                    else:
                        del clean[key]
                else:
                    clean[key] = c
        self.table = clean

    # ------------------------------------------------------------ factories

    @classmethod
    def zero(cls, basis, alphabet, N):
        return cls(basis, alphabet, N, {})

    @classmethod
    def constant(cls, basis, alphabet, N, c):
        zero_i = (0,) * basis.n
        return cls(basis, alphabet, N, {(zero_i, _NEUTRAL): c})

    @classmethod
    def variable(cls, basis, alphabet, N, j, coeff):
        """The coordinate x_{j+1} (in the u-alphabet it carries H_{j+1})."""
        i = tuple(1 if k == j else 0 for k in range(basis.n))
        sym = SymbolMonomial(i) if alphabet == "u" else _NEUTRAL
        return cls(basis, alphabet, N, {(i, sym): coeff})

    # ------------------------------------------------------------- basics

    def is_zero(self):
        return not self.table

    def cells(self):
        """Deterministically ordered (i, sym, coeff) triples."""
        return [
            (i, sym, self.table[(i, sym)])
            for i, sym in sorted(
                self.table, key=lambda k: (sum(k[0]), k[0], k[1].sort_key())
            )
        ]

    def coeff(self, i, sym=_NEUTRAL):
        return self.table.get((tuple(i), _norm_sym(sym, self.basis.n)))

    def truncate(self, M):
        if M >= self.N:
            return TruncSeries(self.basis, self.alphabet, M, self.table)
        return TruncSeries(
            self.basis, self.alphabet, M,
            {k: c for k, c in self.table.items() if sum(k[0]) <= M},
        )

    def _check_mate(self, other):
        if self.basis != other.basis or self.alphabet != other.alphabet:
            raise AlphabetMismatch(
                "series do not share an alphabet and symbol basis"
            )

    # ---------------------------------------------------------- arithmetic

    def __add__(self, other):
        self._check_mate(other)
        N = min(self.N, other.N)
        out = {k: c for k, c in self.table.items() if sum(k[0]) <= N}
        for k, c in other.table.items():
            if sum(k[0]) > N:
                continue
            if k in out:
                acc = out[k] + c
                if acc:
                    out[k] = acc
                else:
                    del out[k]
            else:
                out[k] = c
        return TruncSeries(self.basis, self.alphabet, N, out)

    def __neg__(self):
        return TruncSeries(
            self.basis, self.alphabet, self.N,
            {k: -c for k, c in self.table.items()},
        )

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        self._check_mate(other)
        N = min(self.N, other.N)
        out = {}
        for (ia, sa), ca in self.table.items():
            if sum(ia) > N:
                continue
            for (ib, sb), cb in other.table.items():
                i = tuple(a + b for a, b in zip(ia, ib))
                if sum(i) > N:
                    continue
                key = (i, sa.mul(sb))
                c = ca * cb
                if key in out:
                    acc = out[key] + c
                    if acc:
                        out[key] = acc
                    else:
                        del out[key]
                elif c:
                    out[key] = c
        return TruncSeries(self.basis, self.alphabet, N, out)

    def scale(self, c):
        """Multiply every coefficient by a tower element (or leave zero)."""
        if not c:
            return TruncSeries.zero(self.basis, self.alphabet, self.N)
        return TruncSeries(
            self.basis, self.alphabet, self.N,
            {k: v * c for k, v in self.table.items()},
        )

    def __eq__(self, other):
        if not isinstance(other, TruncSeries):
            return NotImplemented
        return (
            self.basis == other.basis
            and self.alphabet == other.alphabet
            and self.N == other.N
            and self.table == other.table
        )

    def __hash__(self):
        return hash((self.alphabet, self.N, frozenset(self.table)))

    # -------------------------------------------------------------- calculus

    def derive_s(self):
        """d/ds: coefficient derivative + H-weights + L-lowering."""
        basis = self.basis
        out = {}

        def put(key, c):
            if not c:
                return
            if key in out:
                acc = out[key] + c
                if acc:
                    out[key] = acc
                else:
                    del out[key]
            else:
                out[key] = c

        for (i, sym), c in self.table.items():
            put((i, sym), c.derive())
            w = None
            for j, ej in enumerate(sym.e):
                if ej:
                    term = basis.hs[j] * basis.hs[j].tower.from_ground(ej)
                    w = term if w is None else w + term
            if w is not None:
                put((i, sym), w * c)
            for name, m in sym.ell:
                put(
                    (i, sym.lower_log(name)),
                    basis.log_deriv(name) * c * c.tower.from_ground(m),
                )
        return TruncSeries(basis, self.alphabet, self.N, out)

    def partial(self, j):
        """d/dx_j; in the u-alphabet the variable carries H_j, which leaves
        with it (the symbol exponent drops too)."""
        basis = self.basis
        drop = tuple(-1 if k == j else 0 for k in range(basis.n))
        out = {}
        for (i, sym), c in self.table.items():
            if not i[j]:
                continue
            i2 = tuple(a + d for a, d in zip(i, drop))
            sym2 = sym.shift_e(drop) if self.alphabet == "u" else sym
            key = (i2, sym2)
            c2 = c * c.tower.from_ground(i[j])
            if key in out:
                out[key] = out[key] + c2
            else:
                out[key] = c2
        return TruncSeries(basis, self.alphabet, self.N, out)

    # ------------------------------------------------------------- compose

    def compose(self, subst):
        """Substitute x_j -> subst[j] (series without constant term).

        In the u-alphabet the substituted variable takes its H-content along:
        the cell keeps only the residual symbol H^(e-i).  The result lives in
        the substituted series' alphabet.
        """
        basis = self.basis
        if len(subst) != basis.n:
            raise ValueError("one substitution per variable required")
        tgt = subst[0]
        for g in subst:
            if g.basis != basis or g.alphabet != tgt.alphabet:
                raise AlphabetMismatch(
                    "substituted series disagree on alphabet or basis"
                )
            if any(not any(i) for (i, _) in g.table):
                raise NonzeroConstantTerm(
                    "substituted series must vanish at the origin"
                )
        N = min([self.N] + [g.N for g in subst])
        zero_i = (0,) * basis.n

        # powers of each substituted series, computed on demand
        # (index 0 — the empty product — is handled inline below)
        pows = [[None, g.truncate(N)] for g in subst]

        out = TruncSeries.zero(basis, tgt.alphabet, N)
        for (i, sym), c in self.table.items():
            if sum(i) > N:
                continue
            term = None
            for j, k in enumerate(i):
                if not k:
                    continue
                plist = pows[j]
                while len(plist) <= k:
                    plist.append(plist[-1] * plist[1])
                term = plist[k] if term is None else term * plist[k]
            res_sym = (
                sym.shift_e(tuple(-x for x in i))
                if self.alphabet == "u"
                else sym
            )
            if term is None:  # the constant cell of self
                add = TruncSeries(
                    basis, tgt.alphabet, N, {(zero_i, res_sym): c}
                )
            else:
                add = TruncSeries(
                    basis, tgt.alphabet, N,
                    {
                        (it, st.mul(res_sym)): ct * c
                        for (it, st), ct in term.table.items()
                    },
                )
            out = out + add
        return out

    # -------------------------------------------------------------- output

    def render(self):
        """Canonical text form (deterministic ordering)."""
        if not self.table:
            return "0"
        letter = self.alphabet
        parts = []
        for i, sym, c in self.cells():
            bits = [f"({c})"]
            for j, k in enumerate(i):
                if k == 1:
                    bits.append(f"{letter}{j + 1}")
                elif k:
                    bits.append(f"{letter}{j + 1}^{k}")
            if not sym.is_neutral():
                bits.append(repr(sym))
            parts.append("*".join(bits))
        return " + ".join(parts)

    def __repr__(self):
        return f"<TruncSeries {self.alphabet}, N={self.N}: {self.render()}>"


class FormalVectorField:
    """Components along the coordinates plus an s-component, all series."""

    __slots__ = ("components", "s_component")

    def __init__(self, components, s_component):
        self.components = tuple(components)
        self.s_component = s_component


class RatioSeries:
    """A formal quotient num/den of truncated series.

    Division of series is avoided throughout: equality and arithmetic use
    cross-multiplication, so every identity checked through a RatioSeries is
    an exact statement about polynomial cells.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den):
        if den.is_zero():
            raise ZeroDivisionError("RatioSeries with zero denominator")
        self.num = num
        self.den = den

    @classmethod
    def of(cls, series):
        one = TruncSeries.constant(
            series.basis, series.alphabet, series.N, _one_of(series)
        )
        return cls(series, one)

    def __add__(self, other):
        return RatioSeries(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    def __sub__(self, other):
        return RatioSeries(
            self.num * other.den - other.num * self.den, self.den * other.den
        )

    def __mul__(self, other):
        return RatioSeries(self.num * other.num, self.den * other.den)

    def __truediv__(self, other):
        return RatioSeries(self.num * other.den, self.den * other.num)

    def __neg__(self):
        return RatioSeries(-self.num, self.den)

    def is_zero(self):
        return self.num.is_zero()

    def __bool__(self):
        return not self.num.is_zero()

    def eq(self, other):
        return (self.num * other.den - other.num * self.den).is_zero()

    def __repr__(self):
        return f"RatioSeries({self.num.render()}) / ({self.den.render()})"


def _one_of(series):
    for c in series.table.values():
        return c.tower.one
    raise ValueError("cannot infer the coefficient tower of a zero series")


# ---------------------------------------------------------------------------
# the operation layer
# ---------------------------------------------------------------------------

def ts_arith(a, b, op):
    """Ring operations on series; ``op`` is one of ``+ - * ×``."""
    if op in ("+",):
        return a + b
    if op in ("-", "−"):
        return a - b
    if op in ("*", "×"):
        return a * b
    raise ValueError(f"unknown operation {op!r}")


def ts_derive_s(a):
    """d/ds of a series (coefficients, H-weights, and L-lowering)."""
    return a.derive_s()


def ts_compose(a, subst):
    """Composition a(subst_1, ..., subst_{n-1}); see TruncSeries.compose."""
    return a.compose(list(subst))


def ts_invert_map(phi):
    """Invert a tangent-to-identity map u -> phi(u), returning q-series.

    Each phi_j must be u_j plus terms of variable order >= 2; the result
    Phi satisfies Phi(phi) = id and phi(Phi) = id modulo the truncation.
    Fixed-point iteration u <- q - R(u) with R = phi - id gains one exact
    order per step, so N-1 steps suffice at truncation N.
    """
    if not phi:
        return []
    basis = phi[0].basis
    n = basis.n
    if len(phi) != n:
        raise ValueError("need one component per variable")
    N = min(p.N for p in phi)
    one = _one_of_list(phi)

    R = []
    for j, p in enumerate(phi):
        if p.alphabet != "u" or p.basis != basis:
            raise AlphabetMismatch("inversion expects u-alphabet series")
        lead = TruncSeries.variable(basis, "u", N, j, one)
        rest = p.truncate(N) - lead
        for (i, _sym) in rest.table:
            if sum(i) <= 1:
                raise NotTangentToIdentity(
                    f"component {j + 1} is not u_{j + 1} + O(order 2)"
                )
        R.append(rest)

    q_id = [TruncSeries.variable(basis, "q", N, j, one) for j in range(n)]
    cur = list(q_id)
    for _ in range(max(0, N - 1)):
        cur = [q_id[j] - R[j].compose(cur) for j in range(n)]
    return cur


def ts_lie(a, v):
    """Lie derivative of a series along a formal vector field."""
    out = None
    for j, comp in enumerate(v.components):
        term = a.partial(j) * comp
        out = term if out is None else out + term
    ds = a.derive_s() * v.s_component
    return ds if out is None else out + ds


def _one_of_list(series_list):
    for p in series_list:
        for c in p.table.values():
            return c.tower.one
    raise ValueError("cannot infer the coefficient tower")
