"""Exact multivariate (Laurent) polynomials over Z/Q, resultants, gcds and
integer lattice solving.

Polynomials are immutable.  A :class:`Poly` stores the tuple of generators it
actually uses (sorted with a natural-number aware key) and a dict mapping
exponent tuples to ``int`` or ``Fraction`` coefficients.  Exponents may be
negative, in which case the value is a Laurent polynomial.
"""
from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd as igcd
from math import lcm as ilcm
from numbers import Number


class SymbolMismatch(ValueError):
    pass


class InconsistentRelations(ValueError):
    pass


def gen_key(name: str):
    return tuple((0, int(t), "") if t.isdigit() else (1, 0, t) for t in re.findall(r"\d+|\D+", name))


def _clean_coeff(c):
    if isinstance(c, Fraction) and c.denominator == 1:
        return c.numerator
    return c


def _merge_gens(a: tuple, b: tuple) -> tuple:
    if a == b:
        return a
    return tuple(sorted(set(a) | set(b), key=gen_key))


def _embed(gens: tuple, terms: dict, target: tuple) -> dict:
    if gens == target:
        return terms
    idx = [target.index(g) for g in gens]
    n = len(target)
    out = {}
    for e, c in terms.items():
        v = [0] * n
        for i, k in zip(idx, e):
            v[i] = k
        out[tuple(v)] = c
    return out


class Poly:
    __slots__ = ("gens", "terms", "_hash")

    def __init__(self, terms: dict | None = None, gens: tuple = ()):
        gens = tuple(gens)
        terms = {e: _clean_coeff(c) for e, c in (terms or {}).items() if c != 0}
        if gens and terms:
            used = [i for i in range(len(gens)) if any(e[i] for e in terms)]
            if len(used) < len(gens):
                gens = tuple(gens[i] for i in used)
                terms = {tuple(e[i] for i in used): c for e, c in terms.items()}
        elif not terms:
            gens = ()
        elif not gens:
            terms = {(): terms[()]} if () in terms else {}
        self.gens = gens
        self.terms = terms
        self._hash = None

    # construction -----------------------------------------------------
    @classmethod
    def var(cls, name: str, power: int = 1) -> "Poly":
        return cls({(power,): 1}, (name,))

    @classmethod
    def const(cls, c) -> "Poly":
        return cls({(): c}, ())

    @classmethod
    def monomial(cls, exps: dict, coeff=1) -> "Poly":
        gens = tuple(sorted(exps, key=gen_key))
        return cls({tuple(exps[g] for g in gens): coeff}, gens)

    @classmethod
    def coerce(cls, x) -> "Poly":
        if isinstance(x, Poly):
            return x
        if isinstance(x, (int, Fraction)):
            return cls.const(x)
        raise TypeError(f"cannot use {type(x).__name__} as a polynomial")

    @classmethod
    def parse(cls, text: str) -> "Poly":
        return parse_poly(text)

    # basic predicates -------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.gens

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def is_laurent(self) -> bool:
        return any(k < 0 for e in self.terms for k in e)

    def constant_value(self):
        if self.gens:
            raise ValueError("not a constant")
        return self.terms.get((), 0)

    def nterms(self) -> int:
        return len(self.terms)

    # ring operations --------------------------------------------------
    def _binary(self, other):
        other = Poly.coerce(other)
        gens = _merge_gens(self.gens, other.gens)
        return gens, _embed(self.gens, self.terms, gens), _embed(other.gens, other.terms, gens)

    def __add__(self, other):
        try:
            gens, a, b = self._binary(other)
        except TypeError:
            return NotImplemented
        out = dict(a)
        for e, c in b.items():
            out[e] = out.get(e, 0) + c
        return Poly(out, gens)

    __radd__ = __add__

    def __neg__(self):
        return Poly({e: -c for e, c in self.terms.items()}, self.gens)

    def __sub__(self, other):
        try:
            return self + (-Poly.coerce(other))
        except TypeError:
            return NotImplemented

    def __rsub__(self, other):
        return Poly.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return Poly()
            return Poly({e: c * other for e, c in self.terms.items()}, self.gens)
        try:
            gens, a, b = self._binary(other)
        except TypeError:
            return NotImplemented
        out: dict = {}
        for ea, ca in a.items():
            for eb, cb in b.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                out[e] = out.get(e, 0) + ca * cb
        return Poly(out, gens)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            if not self.is_monomial():
                raise ValueError("negative power of a non-monomial")
            (e, c), = self.terms.items()
            return Poly({tuple(k * x for x in e): Fraction(1, 1) / Fraction(c) ** (-k)}, self.gens)
        result = Poly.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (Fraction(1) / Fraction(other))
        other = Poly.coerce(other)
        if other.is_monomial():
            return self * other ** -1
        q = exact_divide(self, other)
        if q is None:
            raise ValueError("division is not exact")
        return q

    def __rtruediv__(self, other):
        return Poly.coerce(other) / self

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.gens == other.gens and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.gens, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    # structure --------------------------------------------------------
    def degree(self, var: str) -> int:
        if self.is_zero():
            return -1
        if var not in self.gens:
            return 0
        i = self.gens.index(var)
        return max(e[i] for e in self.terms)

    def min_degree(self, var: str) -> int:
        if var not in self.gens or self.is_zero():
            return 0
        i = self.gens.index(var)
        return min(e[i] for e in self.terms)

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def variables(self) -> tuple:
        return self.gens

    def coefficients(self, var: str) -> dict:
        """Map power of ``var`` to the coefficient polynomial in the other generators."""
        if var not in self.gens:
            return {0: self} if self.terms else {}
        i = self.gens.index(var)
        rest = self.gens[:i] + self.gens[i + 1:]
        groups: dict = {}
        for e, c in self.terms.items():
            groups.setdefault(e[i], {})[e[:i] + e[i + 1:]] = c
        return {k: Poly(t, rest) for k, t in groups.items()}

    def leading_coefficient(self, var: str) -> "Poly":
        cs = self.coefficients(var)
        return cs[max(cs)]

    def leading_term(self):
        """(exponents, coefficient) of the graded-lex leading term."""
        e = max(self.terms, key=lambda e: (sum(e), e))
        return e, self.terms[e]

    def content(self):
        """Positive rational content: gcd of numerators over lcm of denominators."""
        if not self.terms:
            return 0
        nums = [Fraction(c).numerator for c in self.terms.values()]
        dens = [Fraction(c).denominator for c in self.terms.values()]
        return _clean_coeff(Fraction(reduce(igcd, nums), reduce(ilcm, dens)))

    def primitive(self):
        """Return (unit * content, primitive part with positive leading coefficient)."""
        if not self.terms:
            return 0, Poly()
        c = self.content()
        if self.leading_term()[1] < 0:
            c = -c
        return c, Poly({e: _clean_coeff(Fraction(v) / c) for e, v in self.terms.items()}, self.gens)

    def split_monomial(self):
        """Return (m, rest) with self = m * rest, m a monic monomial and rest having
        a zero minimum exponent in every generator."""
        if not self.terms:
            return Poly.const(1), self
        n = len(self.gens)
        lo = tuple(min(e[i] for e in self.terms) for i in range(n))
        mono = Poly({lo: 1}, self.gens)
        rest = Poly({tuple(x - y for x, y in zip(e, lo)): c for e, c in self.terms.items()}, self.gens)
        return mono, rest

    def monomial_exponents(self) -> dict:
        if not self.is_monomial():
            raise ValueError("not a monomial")
        (e, _), = self.terms.items()
        return dict(zip(self.gens, e))

    def diff(self, var: str) -> "Poly":
        if var not in self.gens:
            return Poly()
        i = self.gens.index(var)
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                out[e[:i] + (e[i] - 1,) + e[i + 1:]] = c * e[i]
        return Poly(out, self.gens)

    # evaluation and substitution -------------------------------------
    def evaluate(self, values: dict):
        """Numeric value at a point; missing generators raise KeyError."""
        total = 0
        pts = [values[g] for g in self.gens]
        for e, c in self.terms.items():
            t = c
            for v, k in zip(pts, e):
                if k:
                    t = t * v ** k
            total = total + t
        return total

    def subs(self, mapping: dict) -> "Poly":
        """Substitute polynomials or numbers for generators.  Negative powers need an
        invertible image (a monomial or a nonzero number)."""
        if not any(g in mapping for g in self.gens):
            return self
        keep = [i for i, g in enumerate(self.gens) if g not in mapping]
        keep_gens = tuple(self.gens[i] for i in keep)
        images = {g: Poly.coerce(v) if not isinstance(v, Poly) else v for g, v in mapping.items() if g in self.gens}
        powers: dict = {}

        def power(g, k):
            key = (g, k)
            if key not in powers:
                powers[key] = images[g] ** k
            return powers[key]

        out = Poly()
        idx = {g: i for i, g in enumerate(self.gens)}
        for e, c in self.terms.items():
            t = Poly({tuple(e[i] for i in keep): c}, keep_gens)
            for g in images:
                k = e[idx[g]]
                if k:
                    t = t * power(g, k)
            out = out + t
        return out

    def map_exponents(self, gens: tuple, fn) -> "Poly":
        """Rebuild with new generators; ``fn`` maps an exponent tuple to a
        (new exponent tuple, coefficient multiplier) pair."""
        out: dict = {}
        for e, c in self.terms.items():
            ne, mult = fn(e)
            out[ne] = out.get(ne, 0) + c * mult
        return Poly(out, gens)

    # text -------------------------------------------------------------
    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: (sum(t[0]), t[0]), reverse=True)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                g if k == 1 else f"{g}^{k}" for g, k in zip(self.gens, e) if k
            )
            neg = c < 0
            a = -c if neg else c
            if not mono:
                body = str(a)
            elif a == 1:
                body = mono
            elif isinstance(a, Fraction):
                body = f"({a})*{mono}"
            else:
                body = f"{a}*{mono}"
            parts.append(("-" if neg else "+", body))
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    def __repr__(self):
        return f"Poly({str(self)!r})"

    def to_json(self) -> dict:
        return {
            "gens": list(self.gens),
            "terms": [[list(e), str(c)] for e, c in self.sorted_terms()],
        }


def var(name: str) -> Poly:
    return Poly.var(name)


# ---------------------------------------------------------------------------
# parsing

_ALLOWED = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Name, ast.Constant, ast.Load,
            ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)


def parse_poly(text: str) -> Poly:
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError:
        raise ValueError(f"cannot parse polynomial {text!r}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED):
            raise ValueError(f"unsupported syntax in polynomial: {text!r}")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, int):
                raise ValueError(f"non-integer literal in {text!r}")
            return Poly.const(node.value)
        if isinstance(node, ast.Name):
            return Poly.var(node.id)
        if isinstance(node, ast.UnaryOp):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        left, right = ev(node.left), ev(node.right)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            if right.is_constant():
                return left / right.constant_value()
            return left / right
        if not right.is_constant() or not isinstance(right.constant_value(), int):
            raise ValueError("exponent must be an integer")
        return left ** right.constant_value()

    return ev(tree)


# ---------------------------------------------------------------------------
# division, gcd, resultants


def exact_divide(p: Poly, d: Poly) -> Poly | None:
    """Exact quotient q with p == q*d, or None when d does not divide p.

    For ordinary polynomials the quotient must be an ordinary polynomial; if any
    input has negative exponents the division happens in the Laurent ring, where
    monomials are units.  Integer inputs require an integer quotient."""
    if d.is_zero():
        raise ZeroDivisionError("exact_divide by zero")
    if p.is_zero():
        return Poly()
    if p.is_laurent() or d.is_laurent():
        mp, pp = p.split_monomial()
        md, dd = d.split_monomial()
        q = exact_divide(pp, dd)
        return None if q is None else q * mp * md ** -1
    integral = all(isinstance(c, int) for c in p.terms.values()) and all(
        isinstance(c, int) for c in d.terms.values())
    gens = _merge_gens(p.gens, d.gens)
    rem = dict(_embed(p.gens, p.terms, gens))
    dt = _embed(d.gens, d.terms, gens)
    ed = max(dt)
    cd = dt[ed]
    q: dict = {}
    while rem:
        e = max(rem)
        c = rem[e]
        shift = tuple(x - y for x, y in zip(e, ed))
        if any(k < 0 for k in shift):
            return None
        if integral:
            if c % cd:
                return None
            qc = c // cd
        else:
            qc = _clean_coeff(Fraction(c) / cd)
        q[shift] = qc
        for f, cf in dt.items():
            g = tuple(x + y for x, y in zip(f, shift))
            v = rem.get(g, 0) - qc * cf
            if v:
                rem[g] = v
            else:
                rem.pop(g, None)
    return Poly(q, gens)


def _must_divide(p: Poly, d: Poly) -> Poly:
    if d.is_constant():
        dv = d.constant_value()
        if dv == 1:
            return p
        if all(isinstance(c, int) and c % dv == 0 for c in p.terms.values()) and isinstance(dv, int):
            return Poly({e: c // dv for e, c in p.terms.items()}, p.gens)
    q = exact_divide(p, d)
    if q is None:
        raise ArithmeticError(f"expected exact division of {p} by {d}")
    return q


def _uni(p: Poly, x: str) -> list:
    cs = p.coefficients(x)
    if not cs:
        return []
    if min(cs) < 0:
        raise ValueError(f"negative power of {x} in a univariate view")
    return [cs.get(k, Poly()) for k in range(max(cs) + 1)]


def _from_uni(cs: list, x: str) -> Poly:
    out = Poly()
    xv = Poly.var(x)
    for k, c in enumerate(cs):
        if not c.is_zero():
            out = out + c * xv ** k
    return out


def _strip(cs: list) -> list:
    while cs and cs[-1].is_zero():
        cs.pop()
    return cs


def _prem(a: list, b: list) -> list:
    db = len(b) - 1
    lcb = b[-1]
    r = list(a)
    e = len(a) - len(b) + 1
    while r and len(r) - 1 >= db:
        lcr = r[-1]
        s = len(r) - 1 - db
        r = [lcb * c for c in r]
        for i, c in enumerate(b):
            r[i + s] = r[i + s] - lcr * c
        r.pop()
        _strip(r)
        e -= 1
    if e > 0 and r:
        f = lcb ** e
        r = [f * c for c in r]
    return r


def resultant(p: Poly, q: Poly, x: str) -> Poly:
    """Sylvester resultant with respect to ``x`` via the subresultant PRS."""
    if x not in p.gens and x not in q.gens:
        raise SymbolMismatch(f"{x} occurs in neither polynomial")
    if p.is_zero() or q.is_zero():
        return Poly()
    a, b = _uni(p, x), _uni(q, x)
    s = 1
    if len(a) < len(b):
        if (len(a) - 1) % 2 and (len(b) - 1) % 2:
            s = -1
        a, b = b, a
    if len(b) == 1:
        return s * b[0] ** (len(a) - 1)
    g = h = Poly.const(1)
    while True:
        da, db = len(a) - 1, len(b) - 1
        delta = da - db
        if da % 2 and db % 2:
            s = -s
        r = _prem(a, b)
        a = b
        if not r:
            return Poly()
        div = g * h ** delta
        b = [_must_divide(c, div) for c in r]
        g = a[-1]
        if delta == 1:
            h = g
        elif delta > 1:
            h = _must_divide(g ** delta, h ** (delta - 1))
        if len(b) == 1:
            da = len(a) - 1
            res = b[0] if da == 1 else _must_divide(b[0] ** da, h ** (da - 1))
            return s * res


def _int_gcd_poly(p: Poly, q: Poly) -> Poly:
    return Poly.const(_clean_coeff(Fraction(reduce(igcd, [Fraction(c).numerator for c in (*p.terms.values(), *q.terms.values())]),
                                             reduce(ilcm, [Fraction(c).denominator for c in (*p.terms.values(), *q.terms.values())]))))


def _content_in(p: Poly, x: str) -> Poly:
    return reduce(poly_gcd, p.coefficients(x).values())


def _prs_gcd(a: list, b: list) -> list:
    if len(a) < len(b):
        a, b = b, a
    g = h = Poly.const(1)
    while True:
        delta = len(a) - len(b)
        r = _prem(a, b)
        if not r:
            return b
        if len(r) == 1:
            return [Poly.const(1)]
        div = g * h ** delta
        a, b = b, [_must_divide(c, div) for c in r]
        g = a[-1]
        if delta == 1:
            h = g
        elif delta > 1:
            h = _must_divide(g ** delta, h ** (delta - 1))


def _normalize(p: Poly) -> Poly:
    return p.primitive()[1]


def poly_gcd(p: Poly, q: Poly) -> Poly:
    """Greatest common divisor, normalized to a primitive polynomial with positive
    leading coefficient.  Laurent inputs are first shifted to polynomials."""
    if p.is_zero():
        return _normalize(q)
    if q.is_zero():
        return _normalize(p)
    if p.is_laurent():
        p = p.split_monomial()[1]
    if q.is_laurent():
        q = q.split_monomial()[1]
    if p.is_constant() or q.is_constant():
        return Poly.const(1)
    xs = sorted(set(p.gens) | set(q.gens), key=gen_key)
    x = xs[0]
    if x not in p.gens:
        return poly_gcd(p, _content_in(q, x))
    if x not in q.gens:
        return poly_gcd(_content_in(p, x), q)
    cp, cq = _content_in(p, x), _content_in(q, x)
    pp, qq = _must_divide(p, cp), _must_divide(q, cq)
    g = _from_uni(_prs_gcd(_uni(pp, x), _uni(qq, x)), x)
    if x in g.gens:
        g = _must_divide(g, _content_in(g, x))
    else:
        g = Poly.const(1)
    return _normalize(poly_gcd(cp, cq) * g)


def gcd_list(polys) -> Poly:
    return reduce(poly_gcd, polys, Poly())


def squarefree(p: Poly) -> Poly:
    """Squarefree part of the primitive part of ``p``."""
    if p.is_zero():
        return p
    p = _normalize(p)
    g = p
    for x in p.gens:
        g = poly_gcd(g, p.diff(x))
    return _normalize(_must_divide(p, g))


def canon(p: Poly) -> Poly:
    """Canonical representative up to units: monomial factor removed, primitive,
    positive graded-lex leading coefficient."""
    if p.is_zero():
        return p
    return _normalize(p.split_monomial()[1])


def substitute_fraction(p: Poly, x: str, num: Poly, den: Poly):
    """Substitute x = num/den into p.

    Returns (N, num_exp, den_exp) with p(num/den) = N * num**num_exp * den**den_exp
    where N is built without division.  ``num_exp`` is nonzero only when p has
    negative powers of x."""
    cs = p.coefficients(x)
    if not cs:
        return Poly(), 0, 0
    lo, hi = min(cs), max(cs)
    if lo == hi == 0:
        return p, 0, 0
    out = Poly()
    npow = {0: Poly.const(1)}
    dpow = {0: Poly.const(1)}
    for k in range(1, hi - lo + 1):
        npow[k] = npow[k - 1] * num
        dpow[k] = dpow[k - 1] * den
    for k, c in cs.items():
        out = out + c * npow[k - lo] * dpow[hi - k]
    return out, lo, -hi


def factor_refine(polys) -> list:
    """Pairwise coprime primitive polynomials whose products recover every input
    up to units (a gcd-free basis).  No irreducible factorization is attempted."""
    basis = []
    for p in polys:
        p = canon(p)
        if p.is_constant():
            continue
        basis.append(p)
    changed = True
    while changed:
        changed = False
        uniq = []
        for b in basis:
            if b not in uniq:
                uniq.append(b)
        basis = uniq
        for i in range(len(basis)):
            for j in range(i + 1, len(basis)):
                g = poly_gcd(basis[i], basis[j])
                if g.is_constant():
                    continue
                parts = [_must_divide(basis[i], g), _must_divide(basis[j], g), g]
                rest = [b for k, b in enumerate(basis) if k not in (i, j)]
                basis = rest + [canon(q) for q in parts if not q.is_constant()]
                changed = True
                break
            if changed:
                break
    return sorted(basis, key=lambda b: (b.total_degree(), b.nterms(), str(b)))


def factor_over(p: Poly, basis: list):
    """Write p = unit * monomial * prod b**k over a gcd-free basis.

    Returns (unit, monomial exponents, {basis element: multiplicity})."""
    mono, rest = p.split_monomial()
    c, rest = rest.primitive()
    mult = {}
    for b in basis:
        k = 0
        while not rest.is_constant():
            q = exact_divide(rest, b)
            if q is None:
                break
            rest, k = q, k + 1
        if k:
            mult[b] = k
    if not rest.is_constant():
        raise ArithmeticError(f"{p} does not factor over the given basis")
    return c * rest.constant_value(), dict(zip(mono.gens, next(iter(mono.terms)))), mult


# ---------------------------------------------------------------------------
# lattices

@dataclass(frozen=True)
class SignedMonomial:
    sign: int
    exponents: tuple

    def __mul__(self, other: "SignedMonomial") -> "SignedMonomial":
        return SignedMonomial(self.sign * other.sign, tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    def __pow__(self, k: int) -> "SignedMonomial":
        return SignedMonomial(self.sign ** (k % 2), tuple(k * a for a in self.exponents))

    def as_poly(self, gens) -> Poly:
        return Poly.monomial(dict(zip(gens, self.exponents)), self.sign)


def smith_normal_form(mat):
    """Return (U, D, V) with U*mat*V = D diagonal, U and V unimodular, d_i | d_{i+1}."""
    a = [list(map(int, row)) for row in mat]
    m = len(a)
    n = len(a[0]) if m else 0
    u = [[int(i == j) for j in range(m)] for i in range(m)]
    v = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, k):
        a[dst] = [x + k * y for x, y in zip(a[dst], a[src])]
        u[dst] = [x + k * y for x, y in zip(u[dst], u[src])]

    def add_col(dst, src, k):
        for row in a:
            row[dst] += k * row[src]
        for row in v:
            row[dst] += k * row[src]

    for t in range(min(m, n)):
        while True:
            best = None
            for i in range(t, m):
                for j in range(t, n):
                    if a[i][j] and (best is None or abs(a[i][j]) < abs(a[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                return u, a, v
            swap_rows(t, best[0])
            swap_cols(t, best[1])
            p = a[t][t]
            clean = True
            for i in range(t + 1, m):
                if a[i][t]:
                    add_row(i, t, -(a[i][t] // p))
                    clean = clean and a[i][t] == 0
            for j in range(t + 1, n):
                if a[t][j]:
                    add_col(j, t, -(a[t][j] // p))
                    clean = clean and a[t][j] == 0
            if not clean:
                continue
            bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n) if a[i][j] % p), None)
            if bad is None:
                break
            add_row(t, bad[0], 1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]
    return u, a, v


def snf_solve(relations, targets, query):
    """Integers (target_coeffs, relation_coeffs) with
    query = sum t_k*targets[k] + sum r_i*relations[i], or None.

    The particular solution is the one with free SNF coordinates set to zero;
    it is re-checked by recombination before being returned."""
    cols = [list(t) for t in targets] + [list(r) for r in relations]
    dim = len(query)
    if not cols:
        return ([], []) if not any(query) else None
    if any(len(c) != dim for c in cols):
        raise ValueError("dimension mismatch in snf_solve")
    g = [[cols[j][i] for j in range(len(cols))] for i in range(dim)]
    u, d, v = smith_normal_form(g)
    uq = [sum(u[i][k] * query[k] for k in range(dim)) for i in range(dim)]
    k = len(cols)
    z = [0] * k
    for i in range(dim):
        di = d[i][i] if i < k else 0
        if di == 0:
            if uq[i] != 0:
                return None
        else:
            if uq[i] % di:
                return None
            z[i] = uq[i] // di
    y = [sum(v[j][i] * z[i] for i in range(k)) for j in range(k)]
    back = [sum(y[j] * cols[j][i] for j in range(k)) for i in range(dim)]
    if back != list(query):
        raise ArithmeticError("snf_solve recombination failed")
    return y[:len(targets)], y[len(targets):]


def lattice_complement(vectors, dim: int):
    """Vectors completing the saturated lattice spanned by ``vectors`` to Z^dim.

    Returns None if the span is not saturated (then no integral completion
    exists)."""
    if not vectors:
        return [[int(i == j) for i in range(dim)] for j in range(dim)]
    g = [[vec[i] for vec in vectors] for i in range(dim)]
    u, d, _ = smith_normal_form(g)
    rank = sum(1 for i in range(min(dim, len(vectors))) if d[i][i])
    if any(d[i][i] != 1 for i in range(rank)):
        return None
    uinv = int_inverse(u)
    return [[uinv[r][c] for r in range(dim)] for c in range(rank, dim)]


def int_det(mat) -> int:
    """Bareiss fraction-free determinant."""
    a = [list(map(int, r)) for r in mat]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k]), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def int_inverse(mat):
    """Inverse of a unimodular integer matrix."""
    n = len(mat)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(mat)]
    for c in range(n):
        p = next(r for r in range(c, n) if a[r][c] != 0)
        a[c], a[p] = a[p], a[c]
        pv = a[c][c]
        a[c] = [x / pv for x in a[c]]
        for r in range(n):
            if r != c and a[r][c] != 0:
                f = a[r][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    out = [[a[i][n + j] for j in range(n)] for i in range(n)]
    if any(x.denominator != 1 for row in out for x in row):
        raise ValueError("matrix is not unimodular")
    return [[int(x) for x in row] for row in out]


# ---------------------------------------------------------------------------
# linear expressions in real angle parts

_PREFERRED = ("lam_dot", "mu_dot")


def sym_key(s: str):
    return (_PREFERRED.index(s) if s in _PREFERRED else len(_PREFERRED), gen_key(s))


class LinExpr:
    __slots__ = ("coeffs", "const")

    def __init__(self, coeffs: dict | None = None, const=0):
        self.coeffs = {k: Fraction(v) for k, v in (coeffs or {}).items() if v != 0}
        self.const = Fraction(const)

    @classmethod
    def sym(cls, name: str, coeff=1) -> "LinExpr":
        return cls({name: coeff})

    @classmethod
    def coerce(cls, x) -> "LinExpr":
        if isinstance(x, LinExpr):
            return x
        if isinstance(x, Number):
            return cls({}, x)
        raise TypeError(f"cannot use {type(x).__name__} as a linear expression")

    def __add__(self, other):
        other = LinExpr.coerce(other)
        c = dict(self.coeffs)
        for k, v in other.coeffs.items():
            c[k] = c.get(k, 0) + v
        return LinExpr(c, self.const + other.const)

    __radd__ = __add__

    def __neg__(self):
        return LinExpr({k: -v for k, v in self.coeffs.items()}, -self.const)

    def __sub__(self, other):
        return self + (-LinExpr.coerce(other))

    def __rsub__(self, other):
        return LinExpr.coerce(other) - self

    def __mul__(self, k):
        if isinstance(k, LinExpr):
            if k.coeffs and self.coeffs:
                raise ValueError("product of two non-constant linear expressions")
            if k.coeffs:
                return k * self.const
            k = k.const
        return LinExpr({s: v * k for s, v in self.coeffs.items()}, self.const * k)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, Number):
            other = LinExpr({}, other)
        if not isinstance(other, LinExpr):
            return NotImplemented
        return self.coeffs == other.coeffs and self.const == other.const

    def __hash__(self):
        return hash((frozenset(self.coeffs.items()), self.const))

    def is_constant(self) -> bool:
        return not self.coeffs

    def symbols(self) -> set:
        return set(self.coeffs)

    def evaluate(self, values: dict) -> float:
        return float(self.const) + sum(float(v) * values[k] for k, v in self.coeffs.items())

    def __str__(self):
        parts = []
        for k in sorted(self.coeffs, key=sym_key):
            v = self.coeffs[k]
            a = abs(v)
            body = k if a == 1 else f"{a}*{k}"
            parts.append(("-" if v < 0 else "+", body))
        if self.const or not parts:
            parts.append(("-" if self.const < 0 else "+", str(abs(self.const))))
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    def __repr__(self):
        return f"LinExpr({str(self)!r})"


def _echelon(relations, keep):
    def priority(s):
        return (s in keep, sym_key(s))

    rows = []
    for rel in relations:
        r = LinExpr.coerce(rel)
        for piv, row in rows:
            if piv in r.coeffs:
                r = r - row * r.coeffs[piv]
        if not r.coeffs:
            if r.const != 0:
                raise InconsistentRelations(f"relation reduces to {r.const} = 0")
            continue
        piv = min(r.coeffs, key=priority)
        r = r * (1 / r.coeffs[piv])
        rows = [(p, row - r * row.coeffs[piv]) if piv in row.coeffs else (p, row) for p, row in rows]
        rows.append((piv, r))
    return rows


def lin_reduce(expr, relations, keep=_PREFERRED) -> LinExpr:
    """Canonical representative of ``expr`` modulo relations (each meaning
    ``rel == 0``).  Pivots avoid the ``keep`` symbols, so anything expressible in
    them plus constants comes out in that basis."""
    r = LinExpr.coerce(expr)
    for piv, row in _echelon(relations, keep):
        if piv in r.coeffs:
            r = r - row * r.coeffs[piv]
    return r


def parse_linexpr(text: str) -> LinExpr:
    """Parse a linear expression such as ``"mu_dot + 1"`` or ``"4 - lam_dot"``."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError:
        raise ValueError(f"cannot parse linear expression {text!r}") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return LinExpr({}, Fraction(node.value))
        if isinstance(node, ast.Name):
            return LinExpr.sym(node.id)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div) and b.is_constant():
                return a * (1 / b.const)
        raise ValueError(f"not a linear expression: {text!r}")

    return ev(tree)


def factor_integer(n: int) -> dict:
    """Prime factorization of a small positive integer by trial division."""
    out: dict = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out
