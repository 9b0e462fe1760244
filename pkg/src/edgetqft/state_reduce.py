"""Reduction of the edge-type state integral to a closed form.

The integrand is a product of delta constraints (one per tetrahedron) and norm
factors ``||base||^exponent`` with exponents linear in the real angle parts.
Reduction uses three rules:

* scaling: delta(c*u) = ||c||^-1 delta(u);
* linear integration: the integral of delta(alpha*v + gamma) phi(v) dv is
  ||alpha||^-1 phi(-gamma/alpha);
* replacement: delta(p) delta(q) = delta(lc(q) p - lc(p) v^k q) delta(q) * ||lc(q)||,
  used only when no constraint is linear in any live variable.

Symbols: edge variables ``x<i>``, multiplicative angle parts ``a<j>``, ``c<j>``
(b is eliminated through b = -1/(a c)), real parts ``a<j>_dot``, ``c<j>_dot``,
holonomies ``lam``, ``mu`` with real parts ``lam_dot``, ``mu_dot``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import lcm

from .exact_algebra import (LinExpr, Poly, canon, exact_divide, factor_integer, factor_over,
                            factor_refine, lattice_complement, lin_reduce, parse_linexpr,
                            snf_solve, substitute_fraction, sym_key)
from .nz_toolkit import gluing_matrices
from .tri_model import Triangulation, tet_quotient_monomials


class NotLinear(RuntimeError):
    pass


class NotExpressible(RuntimeError):
    pass


def edge_var(i: int) -> str:
    return f"x{i}"


def angle_vars(j: int):
    return f"a{j}", f"c{j}"


@dataclass(frozen=True)
class Step:
    """Solution var = num/den recorded during elimination."""
    var: str
    num: Poly
    den: Poly


@dataclass(frozen=True)
class DeltaSystem:
    deltas: tuple
    factors: tuple  # (base Poly, exponent LinExpr)
    live_vars: tuple
    edge_vars: tuple
    edge_names: tuple
    excluded: tuple = ()
    steps: tuple = ()
    trace: tuple = ()
    gauge: int | None = None

    def with_trace(self, line: str) -> "DeltaSystem":
        return replace(self, trace=self.trace + (line,))


@dataclass(frozen=True)
class ClosedForm:
    prefactor: tuple  # (base Poly in lam, mu or a constant, exponent LinExpr)
    delta: Poly
    trace: tuple = field(default=(), compare=False)
    steps: tuple = field(default=(), compare=False)
    excluded: tuple = field(default=(), compare=False)
    gauge: int | None = field(default=None, compare=False)
    angle_param: dict = field(default_factory=dict, compare=False)

    def prefactor_text(self) -> str:
        parts = []
        for base, exp in self.prefactor:
            e = "" if exp == 1 else f"^({exp})"
            parts.append(f"||{base}||{e}")
        return " * ".join(parts) if parts else "1"

    def __str__(self):
        return f"{self.prefactor_text()} * delta({self.delta})"

    def apoly_presentation(self, sign: int = 1) -> str:
        """Render delta(P) as A(+-lam, mu^(1/2)) with A(l, m) = P(+-l, m^2)."""
        a = self.delta.subs({"lam": Poly.var("l") * sign, "mu": Poly.var("m") ** 2})
        arg = "lam" if sign > 0 else "-lam"
        return f"A({arg}, mu^(1/2)) with A(l, m) = {canon(a)}"

    def evaluate_prefactor(self, lam: complex, mu: complex, lam_dot: float, mu_dot: float) -> float:
        """Numeric prefactor over the complex field, ||w|| = |w|^2."""
        val = 1.0
        pt = {"lam": lam, "mu": mu}
        real = {"lam_dot": lam_dot, "mu_dot": mu_dot}
        for base, exp in self.prefactor:
            b = complex(base.evaluate(pt)) if not base.is_constant() else complex(base.constant_value())
            val *= abs(b) ** (2.0 * exp.evaluate(real))
        return val

    def to_json(self) -> dict:
        return {
            "prefactor": [{"base": str(b), "exponent": str(e)} for b, e in self.prefactor],
            "delta": str(self.delta),
            "apoly_presentation": [self.apoly_presentation(1), self.apoly_presentation(-1)],
        }


# ---------------------------------------------------------------------------
# integrand

def _quotient_poly(exps) -> Poly:
    return Poly.monomial({edge_var(i): k for i, k in enumerate(exps) if k})


def _normalize_delta(p: Poly):
    """Split p = c * mono * rest; return (rest, extra norm factors)."""
    if p.is_zero():
        raise ArithmeticError("delta argument vanished identically")
    mono, rest = p.split_monomial()
    c, rest = rest.primitive()
    extra = []
    if abs(c) != 1:
        extra.append((Poly.const(abs(c)), LinExpr({}, -1)))
    if not mono.is_constant():
        extra.append((mono, LinExpr({}, -1)))
    return rest, extra


def build_integrand(tri: Triangulation) -> DeltaSystem:
    if tri.edge_count != tri.n:
        raise ValueError("reduction needs as many edge classes as tetrahedra")
    deltas, factors = [], []
    lines = []
    for j, t in enumerate(tri.tets):
        xq, zq = tet_quotient_monomials(tri, j)
        X, Z = _quotient_poly(xq.exponents), _quotient_poly(zq.exponents)
        av, cv = angle_vars(j)
        a, c = Poly.var(av), Poly.var(cv)
        adot, cdot = LinExpr.sym(f"{av}_dot"), LinExpr.sym(f"{cv}_dot")
        if t.sign > 0:
            first, second = (X * a) ** -1, Z * c
        else:
            first, second = a * X ** -1, Z * c ** -1
        d = first + second - 1
        # f(x, z) = ||x||^cdot ||z||^adot delta(x + z - 1)
        factors += [(first, cdot), (second, adot)]
        lines.append(f"tet {j}: delta({d}) * ||{first}||^({cdot}) * ||{second}||^({adot})")
        rest, extra = _normalize_delta(d)
        deltas.append(rest)
        factors += extra
    evs = tuple(edge_var(i) for i in range(tri.edge_count))
    factors += [(Poly.var(v), LinExpr({}, -1)) for v in evs]
    return DeltaSystem(tuple(deltas), tuple(factors), evs, evs, tri.edge_names, trace=tuple(lines))


def gauge_fix(sys: DeltaSystem, edge: int) -> DeltaSystem:
    v = edge_var(edge)
    if v not in sys.live_vars:
        raise ValueError(f"edge {edge} is not live")
    one = {v: Poly.const(1)}
    deltas, factors = [], []
    for d in sys.deltas:
        rest, extra = _normalize_delta(d.subs(one))
        deltas.append(rest)
        factors += extra
    for b, e in sys.factors:
        b = b.subs(one)
        if not (b.is_constant() and abs(b.constant_value()) == 1):
            factors.append((b, e))
    live = tuple(x for x in sys.live_vars if x != v)
    out = replace(sys, deltas=tuple(deltas), factors=tuple(factors), live_vars=live, gauge=edge)
    return out.with_trace(f"gauge: {sys.edge_names[edge]} = 1; live variables {', '.join(live) or 'none'}")


# ---------------------------------------------------------------------------
# elimination

def _is_unit_base(b: Poly) -> bool:
    return b.is_constant() and abs(b.constant_value()) == 1


def _subst_system(sys: DeltaSystem, var: str, num: Poly, den: Poly, skip: int):
    deltas, factors, dens = [], [], list(sys.excluded)
    for k, d in enumerate(sys.deltas):
        if k == skip:
            continue
        if var not in d.gens:
            deltas.append(d)
            continue
        n_, ne, de = substitute_fraction(d, var, num, den)
        # d = n_ * num^ne * den^de, so delta(d) = ||num||^-ne ||den||^-de delta(n_)
        if ne:
            factors.append((num, LinExpr({}, -ne)))
            dens.append(num)
        if de:
            factors.append((den, LinExpr({}, -de)))
        rest, extra = _normalize_delta(n_)
        deltas.append(rest)
        factors += extra
    for b, e in sys.factors:
        if var not in b.gens:
            factors.append((b, e))
            continue
        n_, ne, de = substitute_fraction(b, var, num, den)
        for base, k in ((n_, 1), (num, ne), (den, de)):
            if k and not _is_unit_base(base):
                factors.append((base, e * k))
    new_dens = []
    for q in dens:
        if var in q.gens:
            n_, ne, de = substitute_fraction(q, var, num, den)
            new_dens += [n_, num] if ne else [n_]
        else:
            new_dens.append(q)
    return deltas, factors, new_dens


def linear_candidates(sys: DeltaSystem):
    """All (delta index, var) pairs with the delta of degree exactly 1 in var."""
    out = []
    for v in sys.live_vars:
        for k, d in enumerate(sys.deltas):
            if d.degree(v) == 1:
                out.append((k, v))
    return out


def eliminate_delta(sys: DeltaSystem, delta_index: int, var: str) -> DeltaSystem:
    d = sys.deltas[delta_index]
    if d.degree(var) != 1:
        degs = {v: d.degree(v) for v in sys.live_vars}
        raise NotLinear(f"delta {delta_index} is not linear in {var}; degrees {degs}")
    cs = d.coefficients(var)
    alpha = cs[1]
    beta = -cs.get(0, Poly())
    deltas, factors, dens = _subst_system(sys, var, beta, alpha, delta_index)
    factors.append((alpha, LinExpr({}, -1)))
    # var ranges over nonzero values: both alpha = 0 and beta = 0 are excluded
    dens += [alpha, beta]
    dens = [q for q in dens if not q.is_zero() and not q.is_monomial()]
    live = tuple(v for v in sys.live_vars if v != var)
    out = replace(sys, deltas=tuple(deltas), factors=tuple(f for f in factors if not _is_unit_base(f[0])),
                  live_vars=live, excluded=tuple(dens),
                  steps=sys.steps + (Step(var, beta, alpha),))
    return out.with_trace(f"integrate {var} against delta #{delta_index}: {var} = ({beta})/({alpha}), "
                          f"factor ||{alpha}||^-1")


def replace_delta(sys: DeltaSystem, var: str) -> DeltaSystem:
    """Lower the degree in ``var`` of the highest-degree constraint using another one."""
    with_v = [(d.degree(var), d.nterms(), k) for k, d in enumerate(sys.deltas) if d.degree(var) > 0]
    if len(with_v) < 2:
        raise NotLinear(f"cannot lower the degree in {var}: fewer than two constraints contain it")
    with_v.sort()
    kq = with_v[0][2]
    kp = max((t for t in with_v if t[2] != kq), key=lambda t: (t[0], -t[2]))[2]
    p, q = sys.deltas[kp], sys.deltas[kq]
    dp, dq = p.degree(var), q.degree(var)
    lp, lq = p.leading_coefficient(var), q.leading_coefficient(var)
    shift = Poly.var(var) ** (dp - dq)
    factors = list(sys.factors)
    dens = list(sys.excluded)
    if lq.is_monomial():
        new = p - lp * lq ** -1 * shift * q
        note = f"delta #{kp} -= ({lp})/({lq}) {var}^{dp - dq} * delta #{kq}"
    else:
        new = lq * p - lp * shift * q
        factors.append((lq, LinExpr({}, 1)))
        dens.append(lq)
        note = f"delta #{kp} := ({lq}) delta #{kp} - ({lp}) {var}^{dp - dq} delta #{kq}, factor ||{lq}||"
    rest, extra = _normalize_delta(new)
    deltas = list(sys.deltas)
    deltas[kp] = rest
    out = replace(sys, deltas=tuple(deltas), factors=tuple(factors + extra), excluded=tuple(dens))
    return out.with_trace(note)


def _default_step(sys: DeltaSystem) -> DeltaSystem:
    for v in sys.live_vars:
        for k, d in enumerate(sys.deltas):
            if d.degree(v) == 1:
                return eliminate_delta(sys, k, v)
    return replace_delta(sys, sys.live_vars[0])


def run_elimination(sys: DeltaSystem, chooser=None) -> DeltaSystem:
    guard = 0
    while sys.live_vars:
        guard += 1
        if guard > 100:
            raise NotLinear("elimination did not terminate")
        if len(sys.deltas) - len(sys.live_vars) != 1:
            raise AssertionError("delta/variable ledger broken")
        sys = chooser(sys) if chooser else _default_step(sys)
    return sys


def all_eliminations(sys: DeltaSystem) -> list:
    """Terminal systems for every admissible order of linear eliminations."""
    if not sys.live_vars:
        return [sys]
    cands = linear_candidates(sys)
    if not cands:
        return all_eliminations(replace_delta(sys, sys.live_vars[0]))
    out = []
    for k, v in cands:
        out += all_eliminations(eliminate_delta(sys, k, v))
    return out


# ---------------------------------------------------------------------------
# holonomy rewriting

def _row_exponents(tri: Triangulation, abc_rows):
    """Multiplicative exponent vector over (a0, c0, a1, c1, ...), sign, and the real
    part as a LinExpr, for a list of per-tet (a, b, c) coefficients."""
    vec, bsum = [], 0
    real = LinExpr()
    for j, (a, b, c) in enumerate(abc_rows):
        vec += [a - b, c - b]
        bsum += b
        av, cv = angle_vars(j)
        real = real + LinExpr({f"{av}_dot": a - b, f"{cv}_dot": c - b})
    return vec, (-1) ** (bsum % 2), real + bsum


def holonomy_data(tri: Triangulation):
    nz = gluing_matrices(tri)
    n = tri.n
    rels, rel_signs, real_rels = [], [], []
    for i in range(tri.edge_count):
        rows = [(int(nz.A[i, j]), int(nz.B[i, j]), int(nz.C[i, j])) for j in range(n)]
        vec, s, real = _row_exponents(tri, rows)
        rels.append(vec)
        rel_signs.append(s)
        real_rels.append(real - 2)
    lam_vec, lam_sign, lam_real = _row_exponents(tri, nz.longitude_abc)
    mu_vec, mu_sign, mu_real = _row_exponents(tri, nz.meridian_abc)
    real_rels += [LinExpr.sym("lam_dot") - lam_real, LinExpr.sym("mu_dot") - mu_real]
    return {
        "relations": rels, "relation_signs": rel_signs,
        "lam": (lam_vec, lam_sign), "mu": (mu_vec, mu_sign),
        "real_relations": real_rels,
    }


def angle_parametrization(tri: Triangulation) -> dict:
    """Each angle symbol as a signed monomial in lam, mu and auxiliary w<k>.

    The auxiliary generators complete (lambda, mu, balance rows) to a basis of
    the exponent lattice; they must cancel from any well-defined result."""
    h = holonomy_data(tri)
    n = tri.n
    lam_vec, lam_sign = h["lam"]
    mu_vec, mu_sign = h["mu"]
    span = [lam_vec, mu_vec] + h["relations"]
    extra = lattice_complement(span, 2 * n)
    if extra is None:
        raise NotExpressible("holonomy rows and balance relations do not span a saturated lattice")
    targets = [lam_vec, mu_vec] + extra
    gens = ["lam", "mu"] + [f"w{k}" for k in range(len(extra))]
    param = {}
    for idx in range(2 * n):
        e = [int(i == idx) for i in range(2 * n)]
        sol = snf_solve(h["relations"], targets, e)
        if sol is None:
            raise NotExpressible(f"angle {idx} is outside the lattice span")
        tc, rc = sol
        sign = lam_sign ** (tc[0] % 2) * mu_sign ** (tc[1] % 2)
        for s, r in zip(h["relation_signs"], rc):
            sign *= s ** (r % 2)
        j, kind = divmod(idx, 2)
        param[angle_vars(j)[kind]] = Poly.monomial(dict(zip(gens, tc)), sign)
    return param


class _Product:
    """Accumulates norm factors as monomial exponents, integer primes and polynomials."""

    def __init__(self):
        self.mono: dict = {}
        self.primes: dict = {}
        self.polys: list = []  # (rest poly, exponent)

    def add(self, p: Poly, e: LinExpr):
        if p.is_zero():
            raise ArithmeticError("norm of zero in prefactor")
        mono, rest = p.split_monomial()
        c, rest = rest.primitive()
        if not mono.is_constant():
            for g, k in mono.monomial_exponents().items():
                self.mono[g] = self.mono.get(g, LinExpr()) + e * k
        self._add_const(Fraction(c), e)
        if not rest.is_constant():
            self.polys.append((rest, e))

    def _add_const(self, c: Fraction, e: LinExpr):
        c = abs(c)
        for num, sgn in ((c.numerator, 1), (c.denominator, -1)):
            for prime, k in factor_integer(num).items():
                self.primes[prime] = self.primes.get(prime, LinExpr()) + e * (k * sgn)


def _assemble(prod: _Product, delta_parts: list, extra_polys: list, relations):
    """Refine all polynomial bases jointly and return (prefactor, delta)."""
    basis = factor_refine([p for p, _ in prod.polys] + [p for p, _ in delta_parts] + extra_polys)
    exps: dict = {}
    for p, e in prod.polys:
        unit, mono, mult = factor_over(p, basis)
        for b, k in mult.items():
            exps[b] = exps.get(b, LinExpr()) + e * k
    delta = Poly.const(1)
    for p, k in delta_parts:
        delta = delta * p ** k
    items = []
    for g in sorted(prod.mono, key=sym_key):
        e = lin_reduce(prod.mono[g], relations)
        if e != 0:
            items.append((Poly.var(g), e))
    for b in basis:
        if b in exps:
            e = lin_reduce(exps[b], relations)
            if e != 0:
                items.append((b, e))
    for prime in sorted(prod.primes):
        e = lin_reduce(prod.primes[prime], relations)
        if e != 0:
            items.append((Poly.const(prime), e))
    return tuple(items), canon(delta)


def rewrite_holonomies(sys: DeltaSystem, tri: Triangulation) -> ClosedForm:
    if sys.live_vars or len(sys.deltas) != 1:
        raise ValueError("rewrite_holonomies needs a fully reduced system")
    param = angle_parametrization(tri)
    relations = holonomy_data(tri)["real_relations"]
    prod = _Product()
    for b, e in sys.factors:
        prod.add(b.subs(param), e)
    d = sys.deltas[0].subs(param)
    mono, rest = d.split_monomial()
    c, rest = rest.primitive()
    prod.add(mono * c, LinExpr({}, -1))
    dens = []
    for q in sys.excluded:
        q = canon(q.subs(param))
        if not q.is_constant():
            dens.append(q)
    basis = factor_refine([rest] + dens)
    _, _, mult = factor_over(rest, basis)
    spurious = {b for b in basis for q in dens if exact_divide(q, b) is not None}
    kept = []
    for b, k in mult.items():
        if b in spurious:
            # delta(g^k u) = ||g||^-k delta(u) with g a cleared denominator
            prod.add(b, LinExpr({}, -k))
        else:
            kept.append((b, k))
    prefactor, delta = _assemble(prod, kept, [], relations)
    for base, e in prefactor:
        if any(g.startswith("w") for g in base.gens):
            raise NotExpressible(f"auxiliary lattice generator survives in ||{base}||^({e})")
        if any(not s.endswith("_dot") or s not in ("lam_dot", "mu_dot") for s in e.symbols()):
            raise NotExpressible(f"exponent {e} is not expressible in lam_dot, mu_dot")
    if any(g not in ("lam", "mu") for g in delta.gens):
        raise NotExpressible(f"delta argument {delta} is not a function of lam, mu")
    trace = sys.trace + (f"spurious delta factors removed: {', '.join(str(b) for b in spurious if b in mult) or 'none'}",
                         f"result: {ClosedForm(prefactor, delta)}")
    return ClosedForm(prefactor, delta, trace, sys.steps, sys.excluded, sys.gauge, param)


def reduce_partition_function(tri: Triangulation, gauge: int | None = None, chooser=None) -> ClosedForm:
    sys = build_integrand(tri)
    sys = gauge_fix(sys, tri.edge_count - 1 if gauge is None else gauge)
    sys = run_elimination(sys, chooser)
    return rewrite_holonomies(sys, tri)


def all_closed_forms(tri: Triangulation) -> list:
    """ClosedForms for every gauge choice and every admissible elimination order."""
    out = []
    for g in range(tri.edge_count):
        sys = gauge_fix(build_integrand(tri), g)
        for term in all_eliminations(sys):
            out.append(rewrite_holonomies(term, tri))
    return out


# ---------------------------------------------------------------------------
# comparison

def closed_form_from_parts(prefactor, delta) -> ClosedForm:
    """Build a canonical ClosedForm from (base, exponent) pairs given as Poly/str and
    LinExpr/str/number, and a delta polynomial."""
    prod = _Product()
    for base, exp in prefactor:
        b = Poly.parse(base) if isinstance(base, str) else Poly.coerce(base)
        e = parse_linexpr(exp) if isinstance(exp, str) else LinExpr.coerce(exp)
        prod.add(b, e)
    d = Poly.parse(delta) if isinstance(delta, str) else delta
    mono, rest = d.split_monomial()
    c, rest = rest.primitive()
    prod.add(mono * c, LinExpr({}, -1))
    pre, dd = _assemble(prod, [(rest, 1)], [], [])
    return ClosedForm(pre, dd)


def _joint(cf: ClosedForm, basis: list):
    prod = _Product()
    for b, e in cf.prefactor:
        prod.add(b, e)
    exps: dict = {}
    for p, e in prod.polys:
        _, _, mult = factor_over(p, basis)
        for b, k in mult.items():
            exps[b] = exps.get(b, LinExpr()) + e * k
    mono = {g: e for g, e in prod.mono.items() if e != 0}
    primes = {p: e for p, e in prod.primes.items() if e != 0}
    return mono, primes, {b: e for b, e in exps.items() if e != 0}


def closed_forms_equal(a: ClosedForm, b: ClosedForm, ignore_constants: bool = False) -> bool:
    """Equality after refining both prefactors over a common gcd-free basis.

    With ``ignore_constants`` constant bases with constant exponents are dropped
    (a global normalization)."""
    if canon(a.delta) != canon(b.delta):
        return False
    bases = [x for cf in (a, b) for x, _ in cf.prefactor if not x.is_constant()]
    basis = factor_refine([canon(x.split_monomial()[1]) for x in bases])
    ja, jb = _joint(a, basis), _joint(b, basis)
    if ignore_constants:
        ja = (ja[0], {p: e for p, e in ja[1].items() if not e.is_constant()}, ja[2])
        jb = (jb[0], {p: e for p, e in jb[1].items() if not e.is_constant()}, jb[2])
    return ja == jb


def prefactor_ratio(a: ClosedForm, b: ClosedForm) -> ClosedForm:
    """The prefactor of a divided by that of b, canonicalized (delta set to 1)."""
    prod = _Product()
    for x, e in a.prefactor:
        prod.add(x, e)
    for x, e in b.prefactor:
        prod.add(x, -e)
    pre, _ = _assemble(prod, [], [], [])
    return ClosedForm(pre, Poly.const(1))


def prefactors_agree_on_support(a: ClosedForm, b: ClosedForm, ignore_constants: bool = True) -> bool:
    """Sufficient test that two closed forms define the same distribution.

    Prefactors only matter where the delta argument vanishes.  The ratio is split
    by exponent component (constant, lam_dot, mu_dot); each component, raised to a
    common integer power, is a rational function N/D, and it is accepted when the
    delta argument divides N - D or N + D, so that ||N/D|| = 1 on the support."""
    if canon(a.delta) != canon(b.delta):
        return False
    ratio = prefactor_ratio(a, b)
    components: dict = {}
    for base, e in ratio.prefactor:
        for key, k in [(None, e.const)] + list(e.coeffs.items()):
            if k == 0 or (key is None and ignore_constants and base.is_constant()):
                continue
            components.setdefault(key, []).append((base, Fraction(k)))
    delta = canon(a.delta)
    for terms in components.values():
        scale = lcm(*(k.denominator for _, k in terms))
        num, den = Poly.const(1), Poly.const(1)
        for base, k in terms:
            n = int(k * scale)
            if n > 0:
                num = num * base ** n
            else:
                den = den * base ** -n
        if not any((num - s * den).is_zero() or exact_divide(num - s * den, delta) is not None
                   for s in (1, -1)):
            return False
    return True

