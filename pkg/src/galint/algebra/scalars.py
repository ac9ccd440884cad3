"""Ground field  K0 = Q(alpha_1, ..., alpha_p, s).

Everything upstairs (radical towers, local expansions, the ODE solver) works
with elements of a single rational function field: the formal parameters
``alpha_i`` and the curve coordinate ``s`` over Q.  We host it on sympy's
sparse ``FracField``, which gives exact normalized arithmetic, and wrap it in
:class:`GroundField` to add the structure the rest of the package needs:

* the distinguished role of ``s`` (derivation d/ds, degrees in s,
  polynomial-in-s views with coefficients in the parameter subfield);
* factorization of denominators into monic-in-s irreducible factors,
  with a cache keyed on the polynomial;
* evaluation at rational parameter/curve values.

Elements are plain ``sympy.polys.fields.FracElement`` objects; this module
deliberately does not wrap them.  A "scalar" below always means a FracElement
of the ground field; a "parameter scalar" is one whose numerator and
denominator are free of ``s``.
"""

from __future__ import annotations

from fractions import Fraction

import sympy
from sympy import QQ
from sympy.polys.fields import FracField

__all__ = [
    "GroundField",
    "SPoly",
]


def _to_QQ(value):
    """Coerce int / Fraction / sympy Rational to the QQ domain."""
    if isinstance(value, Fraction):
        return QQ(value.numerator, value.denominator)
    if isinstance(value, sympy.Rational):
        return QQ(value.p, value.q)
    return QQ(value)


def _fraction_nth_root(c, d):
    """Exact rational d-th root of a Fraction, or None."""
    if c < 0:
        if d % 2 == 0:
            return None
        r = _fraction_nth_root(-c, d)
        return None if r is None else -r
    pn, en = sympy.integer_nthroot(c.numerator, d)
    pd, ed = sympy.integer_nthroot(c.denominator, d)
    if not (en and ed):
        return None
    return Fraction(int(pn), int(pd))


class GroundField:
    """Rational function field Q(alpha_1, ..., alpha_p, s).

    Parameters
    ----------
    params : sequence of str
        Names of the formal parameters (possibly empty).  They are transcendental
        and algebraically independent; nothing in the package ever specializes
        them except the explicit numeric evaluators.
    curve_var : str
        Name of the curve coordinate (defaults to ``"s"``).
    """

    def __init__(self, params=(), curve_var="s"):
        params = tuple(params)
        if curve_var in params:
            raise ValueError(f"curve variable {curve_var!r} duplicated in params")
        seen = set()
        for p in params:
            if p in seen:
                raise ValueError(f"duplicate parameter {p!r}")
            seen.add(p)
        self.param_names = params
        self.curve_var = curve_var
        self.field = FracField(list(params) + [curve_var], QQ)
        self.ring = self.field.to_ring()
        gens = self.field.gens
        self.param_gens = gens[: len(params)]
        self.s = gens[-1]
        self.zero = self.field.zero
        self.one = self.field.one
        self._gen_by_name = {n: g for n, g in zip(params, self.param_gens)}
        self._gen_by_name[curve_var] = self.s
        self._s_index = len(params)
        self._factor_cache = {}
        # sympy symbols mirroring the generators, for to/from sympy-expr moves
        self._symbols = sympy.symbols(list(params) + [curve_var])
        if len(params) + 1 == 1:
            self._symbols = (self._symbols,)

    # ---------------------------------------------------------------- basics

    def __repr__(self):
        names = ", ".join(self.param_names + (self.curve_var,))
        return f"GroundField(Q({names}))"

    def __eq__(self, other):
        return (
            isinstance(other, GroundField)
            and self.param_names == other.param_names
            and self.curve_var == other.curve_var
        )

    def __hash__(self):
        return hash((self.param_names, self.curve_var))

    def gen(self, name):
        try:
            return self._gen_by_name[name]
        except KeyError:
            raise KeyError(f"unknown generator {name!r}") from None

    def from_rational(self, value):
        """Embed an int / Fraction / sympy Rational."""
        return self.field.ground_new(_to_QQ(value))

    def from_expr(self, expr):
        """Convert a sympy expression in the declared generators."""
        return self.field.from_expr(expr)

    def to_expr(self, f):
        return f.as_expr()

    def is_zero(self, f):
        return not f

    # ------------------------------------------------------------ derivation

    def diff_s(self, f):
        """d/ds, the derivation every tower extends."""
        return f.diff(self.s)

    # --------------------------------------------------------------- queries

    def is_param_scalar(self, f):
        """True iff f is free of the curve variable."""
        i = self._s_index
        return f.numer.degree(i) <= 0 and f.denom.degree(i) <= 0

    def is_rational_const(self, f):
        """True iff f is a rational number (free of all generators)."""
        return f.numer.is_ground and f.denom.is_ground

    def as_fraction(self, f):
        """Extract a Fraction from a rational constant element."""
        if not self.is_rational_const(f):
            raise ValueError(f"{f} is not a rational constant")
        num = f.numer.coeff(1)
        den = f.denom.coeff(1)
        q = QQ(num) / QQ(den)
        return Fraction(int(q.numerator), int(q.denominator))

    def s_degree(self, f):
        """deg_s(numer) - deg_s(denom); -inf convention: returns None for 0."""
        if not f:
            return None
        i = self._s_index
        return f.numer.degree(i) - f.denom.degree(i)

    # ----------------------------------------------------- polynomial views

    def spoly(self, f):
        """View a *polynomial-in-s* element as an :class:`SPoly`.

        Raises ValueError if the denominator involves s.
        """
        i = self._s_index
        if f.denom.degree(i) > 0:
            raise ValueError(f"{f} has s in its denominator")
        den = self.field.raw_new(f.denom, self.ring.one)
        coeffs = {}
        for mono, c in f.numer.terms():
            k = mono[i]
            rest = tuple(m for j, m in enumerate(mono) if j != i)
            full = tuple(list(rest[: i]) + [0] + list(rest[i:]))
            term = self.field.raw_new(self.ring.from_terms([(full, c)]), self.ring.one)
            coeffs[k] = coeffs.get(k, self.zero) + term
        coeffs = {k: v / den for k, v in coeffs.items() if v}
        n = max(coeffs) if coeffs else -1
        dense = [coeffs.get(k, self.zero) for k in range(n + 1)]
        return SPoly(self, dense)

    def spoly_from_coeffs(self, coeffs):
        """Build an SPoly from a low-to-high list of parameter scalars."""
        return SPoly(self, list(coeffs))

    def numer_spoly(self, f):
        """Numerator of f as a polynomial in s (parameter-scalar coefficients)."""
        return self.spoly(self.field.raw_new(f.numer, self.ring.one))

    def denom_spoly(self, f):
        return self.spoly(self.field.raw_new(f.denom, self.ring.one))

    def nth_root(self, f, d):
        """Exact d-th root of a field element, or None when not a d-th power.

        The root is normalized to the principal choice: positive rational
        content root for even d, the sign-preserving real root for odd d.
        """
        if d <= 0:
            raise ValueError("root index must be positive")
        if not f:
            return self.zero
        parts = []
        for poly in (f.numer, f.denom):
            expr = poly.as_expr()
            content, facs = sympy.factor_list(expr, *self._symbols)
            c = Fraction(int(content.p), int(content.q))
            croot = _fraction_nth_root(c, d)
            if croot is None:
                return None
            acc = self.from_rational(croot)
            for base, mult in facs:
                if mult % d:
                    return None
                acc = acc * self.from_expr(base) ** (mult // d)
            parts.append(acc)
        return parts[0] / parts[1]

    def invert_var(self, f):
        """f(1/s) as an element of the same field.

        With n = numerator and d = denominator as polynomials in s,
        f(1/s) = s^(deg d - deg n) * rev(n)(s) / rev(d)(s), where rev reverses
        the coefficient list.  Used to study behaviour at infinity by reading
        s as a local coordinate there.
        """
        if not f:
            return self.zero
        num = self.numer_spoly(f)
        den = self.denom_spoly(f)
        rev_num = SPoly(self, list(reversed(num.coeffs)))
        rev_den = SPoly(self, list(reversed(den.coeffs)))
        out = rev_num.to_element() / rev_den.to_element()
        shift = den.degree - num.degree
        if shift >= 0:
            return out * self.s ** shift
        return out / self.s ** (-shift)

    def affine_parts(self, f):
        """Decompose a parameter scalar as  c0 + Σ c_i·alpha_i  (all rational).

        Returns ``(Fraction, {name: Fraction})`` or None when f is not affine
        with rational coefficients (nonlinear / non-constant denominator).
        """
        if not self.is_param_scalar(f):
            return None
        if not self.is_rational_const(self.field.raw_new(f.denom, self.ring.one)):
            return None
        den = QQ(f.denom.coeff(1))
        const = Fraction(0)
        lin = {}
        for mono, c in f.numer.terms():
            if sum(mono) == 0:
                q = QQ(c) / den
                const = Fraction(int(q.numerator), int(q.denominator))
            elif sum(mono) == 1 and mono[self._s_index] == 0:
                i = mono.index(1)
                q = QQ(c) / den
                lin[self.param_names[i]] = Fraction(
                    int(q.numerator), int(q.denominator)
                )
            else:
                return None
        return const, lin

    def param_affine_parts(self, f):
        """Split f as  f0 + sum f_i*alpha_i  with parameter-free parts.

        Unlike :meth:`affine_parts` the parts may involve s.  Returns
        ``(f0, {name: f_i})`` of field elements, or None when a parameter
        occurs in the denominator or the numerator is not affine in the
        parameters.
        """
        si = self._s_index
        for mono, _ in f.denom.terms():
            if any(e and i != si for i, e in enumerate(mono)):
                return None
        groups = {}
        for mono, c in f.numer.terms():
            live = [i for i, e in enumerate(mono) if e and i != si]
            if not live:
                key = None
            elif len(live) == 1 and mono[live[0]] == 1:
                key = live[0]
            else:
                return None
            rest = tuple(0 if i != si else e for i, e in enumerate(mono))
            groups.setdefault(key, []).append((rest, c))
        den = self.field.raw_new(f.denom, self.ring.one)
        out = {}
        for key, terms in groups.items():
            num = self.field.raw_new(self.ring.from_terms(terms),
                                     self.ring.one)
            out[key] = num / den
        const = out.pop(None, self.zero)
        return const, {self.param_names[i]: v for i, v in out.items()}

    # ----------------------------------------------------------- evaluation

    def eval_frac(self, f, assignment):
        """Evaluate at rational values; ``assignment`` maps name -> Fraction.

        Every generator must be assigned.  Raises ZeroDivisionError when the
        denominator vanishes.
        """
        for name in self._gen_by_name:
            if name not in assignment:
                raise ValueError(f"missing value for {name!r}")
        num = self._eval_poly(f.numer, assignment)
        den = self._eval_poly(f.denom, assignment)
        if not den:
            raise ZeroDivisionError(f"denominator of {f} vanishes at {assignment}")
        q = num / den
        return Fraction(int(q.numerator), int(q.denominator))

    def _eval_poly(self, p, assignment):
        names = self.param_names + (self.curve_var,)
        vals = [_to_QQ(assignment[n]) for n in names]
        acc = QQ(0)
        for mono, c in p.terms():
            t = c
            for v, e in zip(vals, mono):
                if e:
                    t = t * v**e
            acc += t
        return acc

    def eval_complex(self, f, assignment):
        """Evaluate at complex values; ``assignment`` maps name -> complex."""
        num = self._eval_poly_c(f.numer, assignment)
        den = self._eval_poly_c(f.denom, assignment)
        return num / den

    def _eval_poly_c(self, p, assignment):
        names = self.param_names + (self.curve_var,)
        vals = [complex(assignment[n]) for n in names]
        acc = 0j
        for mono, c in p.terms():
            t = complex(Fraction(int(c.numerator), int(c.denominator)))
            for v, e in zip(vals, mono):
                if e:
                    t *= v**e
            acc += t
        return acc

    def subs_s(self, f, value):
        """Substitute a *scalar* (parameter-only FracElement or rational) for s.

        The substitution must not hit a pole (raises DivisionByZero-style
        ZeroDivisionError if the denominator vanishes identically after it).
        """
        if not isinstance(value, type(self.zero)):
            value = self.from_rational(value)
        num = self._subs_poly_s(f.numer, value)
        den = self._subs_poly_s(f.denom, value)
        if not den:
            raise ZeroDivisionError("substitution hits a pole")
        return num / den

    def _subs_poly_s(self, p, value):
        i = self._s_index
        acc = self.zero
        for mono, c in p.terms():
            rest = list(mono)
            k = rest[i]
            rest[i] = 0
            base = self.field.raw_new(self.ring.from_terms([(tuple(rest), c)]),
                                      self.ring.one)
            acc += base if not k else base * value**k
        return acc

    # -------------------------------------------------------- factorization

    def monic_s_factors(self, f):
        """Irreducible monic-in-s factors of a nonzero element.

        Returns (units_ignored, [(SPoly factor, multiplicity)]) where each
        factor is monic in s with parameter-scalar coefficients, irreducible
        over Q(alpha).  Factors free of s are dropped (they are units of the
        local rings at finite places).  Multiplicities from the numerator are
        positive, from the denominator negative.
        """
        if not f:
            raise ValueError("zero has no factorization")
        out = {}
        for poly, sign in ((f.numer, 1), (f.denom, -1)):
            for fac, mult in self._poly_factors(poly):
                key = fac.key()
                if key in out:
                    out[key] = (fac, out[key][1] + sign * mult)
                else:
                    out[key] = (fac, sign * mult)
        return [(fac, m) for fac, m in out.values() if m]

    def _poly_factors(self, p):
        key = tuple(sorted(p.terms()))
        hit = self._factor_cache.get(key)
        if hit is not None:
            return hit
        expr = p.as_expr()
        _, facs = sympy.factor_list(expr, *self._symbols)
        s_sym = self._symbols[-1]
        out = []
        for base, mult in facs:
            base = sympy.Poly(base, s_sym)
            if base.degree() == 0:
                continue
            lead = base.LC()
            monic = (base / lead).as_expr()
            coeffs = sympy.Poly(monic, s_sym).all_coeffs()  # high to low
            dense = [self.from_expr(c) for c in reversed(coeffs)]
            out.append((SPoly(self, dense), int(mult)))
        self._factor_cache[key] = out
        return out


class SPoly:
    """Dense univariate polynomial in s with parameter-scalar coefficients.

    A deliberately small helper: the solver needs exact division, gcd, and
    evaluation of polynomials *in s only*, with coefficients in Q(alpha).
    Coefficients are ground-field FracElements that happen to be s-free.
    ``coeffs[k]`` multiplies s^k; trailing zeros are stripped; the zero
    polynomial has an empty list.
    """

    __slots__ = ("gf", "coeffs")

    def __init__(self, gf, coeffs):
        while coeffs and not coeffs[-1]:
            coeffs.pop()
        self.gf = gf
        self.coeffs = coeffs

    # -- construction -------------------------------------------------------

    @classmethod
    def from_element(cls, gf, f):
        return gf.spoly(f)

    def to_element(self):
        """Back to a FracElement of the ground field."""
        s = self.gf.s
        acc = self.gf.zero
        for k, c in enumerate(self.coeffs):
            if c:
                acc += c * s**k
        return acc

    def key(self):
        """Hashable canonical key (for caches and dedup)."""
        return tuple((k, c.numer.to_dict_key() if hasattr(c.numer, "to_dict_key")
                      else str(c)) for k, c in enumerate(self.coeffs))

    # -- basics --------------------------------------------------------------

    @property
    def degree(self):
        return len(self.coeffs) - 1  # -1 for zero

    def is_zero(self):
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        return isinstance(other, SPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(str(self.coeffs))

    def __repr__(self):
        if not self.coeffs:
            return "SPoly(0)"
        var = self.gf.curve_var
        bits = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if not c:
                continue
            cs = str(c.as_expr())
            term = cs if k == 0 else (f"({cs})*{var}^{k}" if k > 1 else f"({cs})*{var}")
            bits.append(term)
        return "SPoly(" + " + ".join(bits) + ")"

    def __add__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        z = self.gf.zero
        out = [(self.coeffs[k] if k < len(self.coeffs) else z)
               + (other.coeffs[k] if k < len(other.coeffs) else z)
               for k in range(n)]
        return SPoly(self.gf, out)

    def __sub__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        z = self.gf.zero
        out = [(self.coeffs[k] if k < len(self.coeffs) else z)
               - (other.coeffs[k] if k < len(other.coeffs) else z)
               for k in range(n)]
        return SPoly(self.gf, out)

    def __neg__(self):
        return SPoly(self.gf, [-c for c in self.coeffs])

    def __mul__(self, other):
        if not self.coeffs or not other.coeffs:
            return SPoly(self.gf, [])
        z = self.gf.zero
        out = [z] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(other.coeffs):
                if b:
                    out[i + j] = out[i + j] + a * b
        return SPoly(self.gf, out)

    def scale(self, c):
        return SPoly(self.gf, [c * a for a in self.coeffs])

    def monic(self):
        if not self.coeffs:
            return self
        lead = self.coeffs[-1]
        return SPoly(self.gf, [c / lead for c in self.coeffs])

    def divmod(self, other):
        """Exact polynomial division with remainder over the coefficient field."""
        if not other.coeffs:
            raise ZeroDivisionError("SPoly division by zero")
        gf = self.gf
        rem = list(self.coeffs)
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return SPoly(gf, []), SPoly(gf, rem)
        quo = [gf.zero] * (dq + 1)
        lead = other.coeffs[-1]
        for k in range(dq, -1, -1):
            top = rem[k + len(other.coeffs) - 1]
            if not top:
                continue
            q = top / lead
            quo[k] = q
            for j, b in enumerate(other.coeffs):
                rem[k + j] = rem[k + j] - q * b
        return SPoly(gf, quo), SPoly(gf, rem)

    def __mod__(self, other):
        return self.divmod(other)[1]

    def __floordiv__(self, other):
        return self.divmod(other)[0]

    def gcd(self, other):
        a, b = self, other
        while b:
            a, b = b, a % b
        return a.monic()

    def xgcd(self, other):
        """Extended Euclid: returns (g, u, v) with u*self + v*other = g, g monic."""
        gf = self.gf
        one = SPoly(gf, [gf.one])
        zero = SPoly(gf, [])
        r0, r1 = self, other
        s0, s1 = one, zero
        t0, t1 = zero, one
        while r1:
            q, r = r0.divmod(r1)
            r0, r1 = r1, r
            s0, s1 = s1, s0 - q * s1
            t0, t1 = t1, t0 - q * t1
        if not r0:
            return r0, s0, t0
        lead = r0.coeffs[-1]
        inv = gf.one / lead
        return r0.monic(), s0.scale(inv), t0.scale(inv)

    def diff(self):
        gf = self.gf
        out = []
        for k in range(1, len(self.coeffs)):
            out.append(self.coeffs[k] * gf.from_rational(k))
        return SPoly(gf, out)

    def diff_coeffs(self):
        """Coefficient-wise d/ds is zero (coefficients are s-free); provided
        for symmetry with shifted-polynomial code paths."""
        return SPoly(self.gf, [self.gf.zero] * len(self.coeffs))

    def eval(self, value):
        """Horner evaluation at a parameter scalar (or rational)."""
        gf = self.gf
        if not isinstance(value, type(gf.zero)):
            value = gf.from_rational(value)
        acc = gf.zero
        for c in reversed(self.coeffs):
            acc = acc * value + c
        return acc

    def valuation_of(self, f_num):
        """Multiplicity of self in the polynomial-in-s element f_num (an SPoly)."""
        if not f_num:
            raise ValueError("valuation of zero")
        m = 0
        cur = f_num
        while True:
            q, r = cur.divmod(self)
            if r:
                return m
            m += 1
            cur = q
