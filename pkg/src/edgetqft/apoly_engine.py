"""Gluing equations in shape variables and resultant elimination down to a
polynomial in the peripheral variables (l, m).

Shapes: z' = 1/(1 - z), z'' = (z - 1)/z, so one tetrahedron contributes
(-1)^c * z^(a-c) * (1-z)^(c-b) for exponents (a, b, c).  The engine's m is the
holonomy of the meridian row as given, which is the square of the usual
A-polynomial variable; :func:`from_apoly_convention` converts.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .exact_algebra import (Poly, canon, exact_divide, gcd_list, poly_gcd, resultant,
                            squarefree)
from .nz_toolkit import gluing_matrices
from .tri_model import Triangulation

L, M = Poly.var("l"), Poly.var("m")


class ZeroEliminant(RuntimeError):
    def __init__(self, msg: str, pair=None):
        super().__init__(msg)
        self.pair = pair


def shape_var(j: int) -> str:
    return f"z{j}"


@dataclass(frozen=True)
class GluingSystem:
    polys: tuple
    provenance: tuple
    shape_vars: tuple
    denominators: tuple = ()
    notes: tuple = ()


@dataclass(frozen=True)
class APolyResult:
    factor: Poly
    discarded: tuple = ()
    invert_negative_flag: bool = True
    order: tuple = ()

    def to_json(self) -> dict:
        return {"factor": str(self.factor), "factor_terms": self.factor.to_json(),
                "discarded": [{"poly": str(p), "reason": r} for p, r in self.discarded],
                "invert_negative": self.invert_negative_flag, "order": list(self.order)}


def _tet_factor(j: int, a: int, b: int, c: int):
    """(sign, numerator, denominator) of z^a z'^b z''^c."""
    z = Poly.var(shape_var(j))
    w = 1 - z
    ez, ew = a - c, c - b
    num, den = Poly.const(1), Poly.const(1)
    if ez > 0:
        num = num * z ** ez
    elif ez < 0:
        den = den * z ** -ez
    if ew > 0:
        num = num * w ** ew
    elif ew < 0:
        den = den * w ** -ew
    return (-1) ** (c % 2), num, den


def _product(triples, signs, invert_negative: bool):
    sign, num, den = 1, Poly.const(1), Poly.const(1)
    for j, (a, b, c) in enumerate(triples):
        if invert_negative and signs[j] < 0:
            a, b, c = -a, -b, -c
        s, n_, d_ = _tet_factor(j, a, b, c)
        sign, num, den = sign * s, num * n_, den * d_
    return sign, num, den


def build_gluing_system(tri: Triangulation, invert_negative: bool = True) -> GluingSystem:
    nz = gluing_matrices(tri)
    signs = tri.signs
    polys, prov, dens, notes = [], [], [], []
    for i in range(tri.edge_count):
        triples = [tuple(int(x) for x in (nz.A[i, j], nz.B[i, j], nz.C[i, j])) for j in range(tri.n)]
        sign, num, den = _product(triples, signs, invert_negative)
        p = sign * num - den
        if p.is_zero():
            notes.append(f"edge {i}: tautology 0 = 0, dropped")
            continue
        polys.append(p)
        prov.append(f"edge {i}")
        dens.append(den)
    for name, hol, row in (("meridian", M, nz.meridian_abc), ("longitude", L, nz.longitude_abc)):
        sign, num, den = _product(row, signs, invert_negative)
        polys.append(hol * den - sign * num)
        prov.append(name)
        dens.append(den)
    return GluingSystem(tuple(polys), tuple(prov), tuple(shape_var(j) for j in range(tri.n)),
                        tuple(dens), tuple(notes))


def _strip_degenerate(p: Poly, shape_vars, log=None) -> Poly:
    """Remove integer content, monomials and factors z_j - 1 (degenerate shapes)."""
    if p.is_zero():
        return p
    mono, rest = p.split_monomial()
    if log is not None and not mono.is_constant():
        log.append((mono, "monomial factor"))
    for v in shape_vars:
        if v not in rest.gens:
            continue
        d = Poly.var(v) - 1
        while True:
            q = exact_divide(rest, d)
            if q is None:
                break
            rest = q
            if log is not None:
                log.append((d, "degenerate shape factor"))
    return rest.primitive()[1]


def eliminate(sys: GluingSystem, order=None, skip_edge: int | None = 0, log=None) -> Poly:
    """Eliminate the shape variables in ``order`` by pairwise resultants.

    One edge equation (``skip_edge``-th among the edge polynomials) is left out:
    the edge equations are dependent and keeping all of them produces
    identically vanishing resultants."""
    order = tuple(order or sys.shape_vars)
    edge_idx = [k for k, t in enumerate(sys.provenance) if t.startswith("edge")]
    drop = edge_idx[skip_edge] if skip_edge is not None and edge_idx else None
    polys = [_strip_degenerate(p, sys.shape_vars) for k, p in enumerate(sys.polys) if k != drop]
    polys = [p for p in polys if not p.is_zero()]
    for v in order:
        with_v = [p for p in polys if v in p.gens]
        without = [p for p in polys if v not in p.gens]
        if not with_v:
            continue
        pivot = min(with_v, key=lambda p: (p.degree(v), p.nterms()))
        out = list(without)
        for q in with_v:
            if q is pivot:
                continue
            r = resultant(pivot, q, v)
            if r.is_zero():
                raise ZeroEliminant(f"resultant in {v} vanishes identically", (str(pivot), str(q)))
            out.append(_strip_degenerate(r, sys.shape_vars, log))
        if any(p.is_constant() for p in out):
            # a nonzero constant: the variety is empty
            return Poly.const(1)
        polys = out
    rest = [p for p in polys if not (set(p.gens) & set(sys.shape_vars))]
    if not rest:
        raise ZeroEliminant("no polynomial left after elimination")
    return gcd_list(rest)


def _final_clean(p: Poly, log: list) -> Poly:
    if p.is_constant():
        return Poly.const(1)
    sf = squarefree(p)
    if sf != canon(p):
        log.append((canon(p), "squarefree reduction (input)"))
    mono, sf = sf.split_monomial()
    if "l" in sf.gens:
        lfree = gcd_list(sf.coefficients("l").values())
        if not lfree.is_constant():
            log.append((lfree, "factor independent of l"))
            sf = exact_divide(sf, lfree)
    else:
        log.append((sf, "factor independent of l"))
        sf = Poly.const(1)
    return canon(sf)


def _eliminant_dropping(sys: GluingSystem, order, skip_edge: int, log: list):
    """Eliminant with one edge equation left out; on ZeroEliminant every other
    order is tried."""
    orders = [tuple(order or sys.shape_vars)]
    orders += [o for o in itertools.permutations(sys.shape_vars) if o != orders[0]]
    last = None
    for o in orders:
        try:
            return eliminate(sys, o, skip_edge, log), o
        except ZeroEliminant as exc:
            last = exc
    raise last


def apoly_factor(tri: Triangulation, invert_negative: bool = True, order=None,
                 skip_edge: int | None = None) -> APolyResult:
    """Cleaned eliminant.

    The edge equations are dependent, so any one of them may be left out, but
    each choice can pick up its own extraneous components through the
    resultants.  By default every choice is computed and their gcd kept, which
    makes the result independent of how edges are labelled."""
    sys = build_gluing_system(tri, invert_negative)
    n_edges = sum(1 for t in sys.provenance if t.startswith("edge"))
    skips = [skip_edge] if skip_edge is not None else list(range(max(n_edges, 1)))
    log: list = []
    results, used, last = [], (), None
    for sk in skips:
        try:
            p, o = _eliminant_dropping(sys, order, sk, log)
        except ZeroEliminant as exc:
            last = exc
            continue
        results.append(p)
        used = used or o
    if not results:
        raise ZeroEliminant(f"every elimination order failed: {last}", getattr(last, "pair", None))
    common = gcd_list(results)
    for p in results:
        extra = exact_divide(canon(p), canon(common)) if not common.is_constant() else None
        if extra is not None and not extra.is_constant():
            log.append((canon(extra), "extraneous: absent for another omitted edge equation"))
    f = _final_clean(common, log)
    return APolyResult(f, tuple(dict.fromkeys(log)), invert_negative, used)


# ---------------------------------------------------------------------------
# comparisons

def from_apoly_convention(a: Poly) -> Poly:
    """Rewrite A(l, m) with only even powers of m as a polynomial in (l, m^2 -> m)."""
    if "m" not in a.gens:
        return a
    i = a.gens.index("m")
    if any(e[i] % 2 for e in a.terms):
        raise ValueError("A-polynomial has odd powers of m; m^2 -> m is not polynomial")
    return a.map_exponents(a.gens, lambda e: (e[:i] + (e[i] // 2,) + e[i + 1:], 1))


def to_apoly_convention(p: Poly) -> Poly:
    if "m" not in p.gens:
        return p
    i = p.gens.index("m")
    return p.map_exponents(p.gens, lambda e: (e[:i] + (2 * e[i],) + e[i + 1:], 1))


def flip_l(p: Poly) -> Poly:
    return p.subs({"l": -L})


def reciprocal_l(p: Poly) -> Poly:
    """l^deg * p(1/l): the polynomial for the reversed longitude."""
    return canon(p.subs({"l": Poly.var("l", -1)}))


def same_up_to_unit(p: Poly, q: Poly) -> bool:
    return canon(p) == canon(q)


def matches_apolynomial(factor: Poly, apoly: Poly, allow_reciprocal: bool = False):
    """Compare an engine factor with a textbook A(l, m) under m^2 -> m and l -> +-l.

    Returns the name of the matching transformation or None.  The reciprocal
    l -> 1/l is only tried when explicitly allowed."""
    target = from_apoly_convention(apoly)
    cands = [("l", target), ("-l", flip_l(target))]
    if allow_reciprocal:
        cands += [("1/l", reciprocal_l(target)), ("-1/l", reciprocal_l(flip_l(target)))]
    for name, t in cands:
        if same_up_to_unit(factor, t):
            return name
    return None


def divides_up_to_sign(delta: Poly, factor: Poly):
    """Check that delta(lam, mu) divides factor(+-l, m); returns the sign used or None."""
    d = delta.subs({"lam": L, "mu": M})
    for name, f in (("l", factor), ("-l", flip_l(factor))):
        if exact_divide(canon(f), canon(d)) is not None:
            return name
    return None


def common_factor(a: Poly, b: Poly) -> Poly:
    return poly_gcd(a, b)
