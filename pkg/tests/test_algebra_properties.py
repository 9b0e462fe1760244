"""Randomized algebra suites, 1000 cases each, with sympy as an independent oracle."""
import sympy
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from edgetqft.exact_algebra import (Poly, canon, exact_divide, poly_gcd, resultant, snf_solve)

CASES = settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
GENS = ("x", "y", "z")
SYMS = sympy.symbols(GENS)


def polys(gens=GENS, max_deg=3, max_terms=4, coeff=5, laurent=False):
    lo = -2 if laurent else 0
    exps = st.tuples(*[st.integers(lo, max_deg) for _ in gens])
    terms = st.dictionaries(exps, st.integers(-coeff, coeff).filter(bool), max_size=max_terms)
    return terms.map(lambda t: Poly({e: c for e, c in t.items()}, tuple(gens)))


def x_polys():
    """Polynomials in (x, y) with positive degree in x by construction."""
    lead = st.tuples(st.integers(1, 2), st.integers(0, 2), st.integers(-5, 5).filter(bool))
    return st.tuples(polys(("x", "y"), 2, 3), lead).map(
        lambda t: t[0] + Poly.monomial({"x": t[1][0] + 2, "y": t[1][1]}, t[1][2]))


def to_sympy(p: Poly):
    syms = {g: sympy.Symbol(g) for g in p.gens}
    return sympy.Add(*[c * sympy.Mul(*[syms[g] ** k for g, k in zip(p.gens, e)])
                       for e, c in p.terms.items()])


def from_sympy(expr, gens=GENS) -> Poly:
    sp = sympy.Poly(sympy.expand(expr), *[sympy.Symbol(g) for g in gens])
    return Poly({e: int(c) for e, c in sp.terms()}, tuple(gens))


@CASES
@given(polys(), polys(), polys())
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == Poly()
    assert a * 1 == a and a + 0 == a
    assert from_sympy(to_sympy(a) * to_sympy(b)) == a * b


@CASES
@given(x_polys(), x_polys(), x_polys())
def test_resultant_multiplicative(f, g, h):
    left = resultant(f * g, h, "x")
    assert left == resultant(f, h, "x") * resultant(g, h, "x")
    expected = sympy.resultant(to_sympy(f), to_sympy(h), sympy.Symbol("x"))
    assert resultant(f, h, "x") == from_sympy(expected, ("x", "y"))


@CASES
@given(polys(max_deg=2, max_terms=3), polys(max_deg=2, max_terms=3), polys(max_deg=2, max_terms=3))
def test_gcd_correct(g, a, b):
    assume(not g.is_zero() and not a.is_zero() and not b.is_zero())
    p, q = g * a, g * b
    d = poly_gcd(p, q)
    assert exact_divide(p, d) is not None and exact_divide(q, d) is not None
    assert exact_divide(d, canon(g)) is not None
    oracle = sympy.gcd(to_sympy(p), to_sympy(q))
    assert canon(d) == canon(from_sympy(oracle))


@CASES
@given(x_polys(), x_polys(), st.booleans())
def test_resultant_zero_iff_common_factor(p, q, share):
    if share:
        # force a common factor half of the time
        p, q = p * (Poly.var("x") - Poly.var("y")), q * (Poly.var("x") - Poly.var("y"))
    g = poly_gcd(p, q)
    assert resultant(p, q, "x").is_zero() == (g.degree("x") > 0)


@CASES
@given(polys(), polys())
def test_exact_division_round_trip(q, d):
    assume(not d.is_zero())
    assert exact_divide(q * d, d) == q
    if not d.is_monomial():
        assert exact_divide(q * d + Poly.var("w"), d) is None


@CASES
@given(polys(laurent=True), polys(laurent=True))
def test_laurent_division_round_trip(q, d):
    # a divisor with negative exponents puts the division in the Laurent ring
    assume(not d.is_zero())
    d = d * Poly.var("w", -1)
    assert exact_divide(q * d, d) == q


@CASES
@given(polys())
def test_canon_idempotent(p):
    assert canon(canon(p)) == canon(p)


vec = lambda n: st.lists(st.integers(-4, 4), min_size=n, max_size=n)


@CASES
@given(st.integers(2, 5).flatmap(lambda n: st.tuples(
    st.lists(vec(n), min_size=0, max_size=3), st.lists(vec(n), min_size=1, max_size=2),
    st.lists(st.integers(-3, 3), min_size=5, max_size=5), vec(n))))
def test_snf_solve_recombines(data):
    relations, targets, mix, noise = data
    n = len(noise)
    gens = relations + targets
    # a query inside the lattice must be found
    query = [sum(k * v[i] for k, v in zip(mix, gens)) for i in range(n)]
    sol = snf_solve(relations, targets, query)
    assert sol is not None
    t, r = sol
    back = [sum(a * v[i] for a, v in zip(t, targets)) + sum(b * v[i] for b, v in zip(r, relations))
            for i in range(n)]
    assert back == query
    # an arbitrary query either recombines or is outside the lattice
    sol = snf_solve(relations, targets, noise)
    if sol is not None:
        t, r = sol
        back = [sum(a * v[i] for a, v in zip(t, targets)) + sum(b * v[i] for b, v in zip(r, relations))
                for i in range(n)]
        assert back == noise
    else:
        m = sympy.Matrix([list(v) for v in gens]).T
        aug = m.row_join(sympy.Matrix(noise))
        # unsolvable over Z: either unsolvable over Q or a nontrivial index
        assert m.rank() < aug.rank() or _not_integral(m, noise)


def _not_integral(m, target) -> bool:
    from sympy.matrices.normalforms import smith_normal_form
    rank = m.rank()
    snf = smith_normal_form(m, domain=sympy.ZZ)
    return rank > 0 and any(abs(snf[i, i]) > 1 for i in range(min(snf.shape)) if snf[i, i] != 0)
