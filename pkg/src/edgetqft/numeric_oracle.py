"""Floating-point cross-checks over the complex field, where ||w|| = |w|^2.

Everything here is rebuilt from the triangulation itself: the angle values come
from a fresh log-linear solve, the constraints are the uncleared tetrahedron
arguments, and the only input taken from a reduction is its closed form and
its list of substitutions (used to locate edge values).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import least_squares

from .exact_algebra import Poly
from .nz_toolkit import gluing_matrices
from .state_reduce import ClosedForm, all_closed_forms, edge_var
from .tri_model import Triangulation, tet_quotient_monomials


class NoSolution(RuntimeError):
    pass


@dataclass
class SupportSample:
    mu: complex
    lam: complex
    edge_values: dict
    residual: float
    angles: dict = field(default_factory=dict)


@dataclass
class OracleReport:
    seed: int
    checks: list = field(default_factory=list)

    def add(self, name: str, ok: bool, max_error: float, samples: int, **extra):
        entry = {"name": name, "pass": bool(ok), "max_error": float(max_error), "samples": int(samples)}
        entry.update(extra)
        self.checks.append(entry)
        return entry

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def to_json(self) -> dict:
        return {"seed": self.seed, "pass": self.passed, "checks": self.checks}


# ---------------------------------------------------------------------------
# raw integrand

def _angle_rows(tri: Triangulation):
    """Exponent rows over log(a0), log(c0), ... and their signs for balance,
    longitude and meridian (b eliminated via b = -1/(a c))."""
    nz = gluing_matrices(tri)

    def row(triples):
        vec, bsum = [], 0
        for a, b, c in triples:
            vec += [a - b, c - b]
            bsum += b
        return np.array(vec, dtype=float), (-1) ** (bsum % 2), bsum

    n = tri.n
    rels = [row([(nz.A[i, j], nz.B[i, j], nz.C[i, j]) for j in range(n)]) for i in range(tri.edge_count)]
    return rels, row(nz.longitude_abc), row(nz.meridian_abc)


def raw_constraints(tri: Triangulation, gauge: int):
    """Uncleared constraint arguments and weight factors as Laurent polynomials in
    the edge variables (gauge edge set to 1) and angle symbols a<j>, c<j>."""
    deltas, weights = [], []
    one = {edge_var(gauge): Poly.const(1)}
    for j, t in enumerate(tri.tets):
        xq, zq = tet_quotient_monomials(tri, j)
        X = Poly.monomial({edge_var(i): k for i, k in enumerate(xq.exponents) if k}).subs(one)
        Z = Poly.monomial({edge_var(i): k for i, k in enumerate(zq.exponents) if k}).subs(one)
        a, c = Poly.var(f"a{j}"), Poly.var(f"c{j}")
        if t.sign > 0:
            u, v = (X * a) ** -1, Z * c
        else:
            u, v = a * X ** -1, Z * c ** -1
        deltas.append(u + v - 1)
        weights += [(u, ("c", j)), (v, ("a", j))]
    return deltas, weights


def sample_real_parts(tri: Triangulation, rng):
    """Real angle parts with real balance 2; returns (values dict, lam_dot, mu_dot)."""
    rels, lon, mer = _angle_rows(tri)
    mat = np.array([r[0] for r in rels])
    rhs = np.array([2.0 - r[2] for r in rels])
    part, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    ns = null_space(mat)
    x = part + (ns @ rng.uniform(-0.4, 0.4, ns.shape[1]) if ns.size else 0)
    vals = {}
    for j in range(tri.n):
        vals[f"a{j}_dot"], vals[f"c{j}_dot"] = float(x[2 * j]), float(x[2 * j + 1])
    lam_dot = float(lon[0] @ x + lon[2])
    mu_dot = float(mer[0] @ x + mer[2])
    return vals, lam_dot, mu_dot


def solve_angles(tri: Triangulation, lam: complex, mu: complex, rng, spread: float = 0.3):
    """Multiplicative angles with all balance conditions and the given holonomies."""
    rels, lon, mer = _angle_rows(tri)
    rows = [r[0] for r in rels] + [lon[0], mer[0]]
    rhs = [0j if s > 0 else 1j * np.pi for _, s, _ in rels]
    rhs += [np.log(complex(lon[1] * lam)), np.log(complex(mer[1] * mu))]
    mat = np.array(rows, dtype=complex)
    part, *_ = np.linalg.lstsq(mat, np.array(rhs), rcond=None)
    ns = null_space(np.array(rows, dtype=float))
    if ns.size:
        part = part + ns @ (rng.uniform(-spread, spread, ns.shape[1]) + 1j * rng.uniform(-spread, spread, ns.shape[1]))
    theta = np.exp(part)
    out = {}
    for j in range(tri.n):
        out[f"a{j}"], out[f"c{j}"] = complex(theta[2 * j]), complex(theta[2 * j + 1])
    # multiplicative consistency
    err = 0.0
    for (vec, s, _) in rels:
        err = max(err, abs(np.prod(theta ** vec) * s - 1))
    err = max(err, abs(lon[1] * np.prod(theta ** lon[0]) - lam), abs(mer[1] * np.prod(theta ** mer[0]) - mu))
    if err > 1e-9 * max(1.0, abs(lam), abs(mu)):
        raise NoSolution(f"angle solve inconsistent (error {err:.2e})")
    return out


# ---------------------------------------------------------------------------
# support sampling

def _poly_in_lam(delta: Poly, mu: complex):
    cs = delta.coefficients("lam")
    deg = max(cs)
    coeffs = np.zeros(deg + 1, dtype=complex)
    for k, c in cs.items():
        coeffs[deg - k] = complex(c.evaluate({"mu": mu})) if not c.is_constant() else complex(c.constant_value())
    return coeffs


def lam_roots(delta: Poly, mu: complex):
    """Roots in lam of delta(lam, mu), Newton-polished."""
    coeffs = _poly_in_lam(delta, mu)
    while len(coeffs) > 1 and abs(coeffs[0]) == 0:
        coeffs = coeffs[1:]
    roots = np.roots(coeffs)
    d = np.polyder(coeffs)
    out = []
    for r in roots:
        for _ in range(50):
            f = np.polyval(coeffs, r)
            fp = np.polyval(d, r)
            if fp == 0:
                break
            step = f / fp
            r = r - step
            if abs(step) < 1e-13 * max(1.0, abs(r)):
                break
        out.append(complex(r))
    return out


def replay(cf: ClosedForm, angles: dict, n_edges: int) -> dict:
    """Edge values from the recorded substitutions, evaluated last-to-first."""
    vals = dict(angles)
    vals[edge_var(cf.gauge)] = 1.0 + 0j
    for step in reversed(cf.steps):
        den = complex(step.den.evaluate(vals))
        if abs(den) < 1e-12:
            raise NoSolution(f"vanishing denominator while solving {step.var}")
        vals[step.var] = complex(step.num.evaluate(vals)) / den
    return {edge_var(i): vals[edge_var(i)] for i in range(n_edges)}


def _residual(deltas, point: dict) -> float:
    return max(abs(complex(d.evaluate(point))) for d in deltas)


def random_mu(rng) -> complex:
    while True:
        r = np.exp(rng.uniform(np.log(0.5), np.log(2.0)))
        mu = r * np.exp(1j * rng.uniform(0, 2 * np.pi))
        if all(abs(mu - np.exp(2j * np.pi * k / n)) > 1e-3 for n in range(1, 13) for k in range(n)):
            return complex(mu)


def support_samples(tri: Triangulation, cf: ClosedForm, mu: complex, seed) -> list:
    rng = np.random.default_rng(seed)
    deltas, _ = raw_constraints(tri, cf.gauge)
    out = []
    for lam in lam_roots(cf.delta, mu):
        if abs(lam) < 1e-12:
            continue
        angles = solve_angles(tri, lam, mu, rng)
        try:
            edges = replay(cf, angles, tri.edge_count)
        except NoSolution:
            continue
        point = {**angles, **edges}
        dens = [abs(complex(q.evaluate(point))) for q in cf.excluded]
        if dens and min(dens) < 1e-6:
            continue
        out.append(SupportSample(mu, lam, edges, _residual(deltas, point), angles))
    return out


def sample_support(tri: Triangulation, cf: ClosedForm, mu: complex, seed=0) -> SupportSample:
    samples = support_samples(tri, cf, mu, seed)
    if not samples:
        raise NoSolution(f"no root of the delta argument at mu = {mu} with a solvable edge system")
    return min(samples, key=lambda s: s.residual)


def _compile(poly: Poly, live: list, fixed: dict):
    """Vectorized evaluator of poly in the live variables with the rest fixed."""
    idx = [poly.gens.index(v) if v in poly.gens else None for v in live]
    coeffs, exps = [], []
    for e, c in poly.terms.items():
        w = complex(c)
        for g, k in zip(poly.gens, e):
            if g not in live:
                w *= complex(fixed[g]) ** k
        coeffs.append(w)
        exps.append([e[i] if i is not None else 0 for i in idx])
    coeffs, exps = np.array(coeffs), np.array(exps, dtype=float)

    def f(z):
        return complex(np.sum(coeffs * np.prod(z[None, :] ** exps, axis=1)))
    return f


def _least_squares_residual(tri, cf, angles, start: dict, rng, tries: int = 4) -> float:
    deltas, _ = raw_constraints(tri, cf.gauge)
    live = [edge_var(i) for i in range(tri.edge_count) if i != cf.gauge]
    if not live:
        return _residual(deltas, {**angles, **start})
    fixed = {**angles, edge_var(cf.gauge): 1.0}
    funcs = [_compile(d, live, fixed) for d in deltas]
    grads = [[_compile(d.diff(v), live, fixed) for v in live] for d in deltas]
    bad = np.full(2 * len(funcs), 1e6)

    def fun(x):
        z = x[0::2] + 1j * x[1::2]
        if np.any(z == 0):
            return bad
        w = np.array([f(z) for f in funcs])
        return np.column_stack([w.real, w.imag]).ravel()

    def jac(x):
        # holomorphic constraints: each complex derivative is a 2x2 real block
        z = x[0::2] + 1j * x[1::2]
        out = np.zeros((2 * len(funcs), 2 * len(live)))
        if np.any(z == 0):
            return out
        for i, row in enumerate(grads):
            for k, g in enumerate(row):
                d = g(z)
                out[2 * i:2 * i + 2, 2 * k:2 * k + 2] = [[d.real, -d.imag], [d.imag, d.real]]
        return out

    best = np.inf
    starts = [np.array([p for v in live for p in (start[v].real, start[v].imag)])]
    for _ in range(tries):
        starts.append(rng.normal(size=2 * len(live)))
    for x0 in starts:
        res = least_squares(fun, x0, jac=jac, xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=500)
        r = fun(res.x)
        best = min(best, float(np.max(np.hypot(r[0::2], r[1::2]))))
    return best


def check_support_equivalence(tri: Triangulation, cf: ClosedForm, n_samples: int = 100, tol: float = 1e-10,
                              seed: int = 0, report: OracleReport | None = None) -> dict:
    """On-curve points solve the raw constraints; points moved off the curve do not."""
    rng = np.random.default_rng(seed)
    worst_on, best_off = 0.0, np.inf
    fails = 0
    for _ in range(n_samples):
        mu = random_mu(rng)
        roots = lam_roots(cf.delta, mu)
        samples = support_samples(tri, cf, mu, int(rng.integers(2 ** 31)))
        if len(samples) < len([r for r in roots if abs(r) > 1e-12]) or not samples:
            fails += 1
            worst_on = np.inf
            continue
        for s in samples:
            worst_on = max(worst_on, s.residual)
            lam_off = s.lam * 1.01
            try:
                angles = solve_angles(tri, lam_off, mu, rng)
                start = replay(cf, angles, tri.edge_count)
            except NoSolution:
                start = s.edge_values
                angles = solve_angles(tri, lam_off, mu, rng)
            best_off = min(best_off, _least_squares_residual(tri, cf, angles, start, rng))
    ok = worst_on < tol and best_off > 1e3 * tol and fails == 0
    entry = {"name": "support_equivalence", "pass": bool(ok), "max_error": float(worst_on),
             "samples": n_samples, "min_off_curve_residual": float(best_off), "unsolved": fails}
    if report is not None:
        report.checks.append(entry)
    return entry


# ---------------------------------------------------------------------------
# prefactor checks

def check_prefactor_agreement(tri: Triangulation, n_orders: int | None = None, n_samples: int = 20,
                              tol: float = 1e-8, seed: int = 0, forms=None,
                              report: OracleReport | None = None) -> dict:
    """Every reduction order and gauge gives the same delta and, at shared support
    samples, the same numeric prefactor."""
    rng = np.random.default_rng(seed)
    forms = list(forms if forms is not None else all_closed_forms(tri))
    if n_orders is not None:
        forms = forms[:n_orders]
    same_delta = all(f.delta == forms[0].delta for f in forms)
    worst = 0.0
    for _ in range(n_samples):
        mu = random_mu(rng)
        lam = lam_roots(forms[0].delta, mu)[0]
        _, lam_dot, mu_dot = sample_real_parts(tri, rng)
        vals = [f.evaluate_prefactor(lam, mu, lam_dot, mu_dot) for f in forms]
        ref = vals[0]
        worst = max(worst, max(abs(v - ref) / abs(ref) for v in vals))
    ok = same_delta and worst < tol
    entry = {"name": "prefactor_agreement", "pass": bool(ok), "max_error": float(worst),
             "samples": n_samples, "forms": len(forms), "identical_delta": same_delta}
    if report is not None:
        report.checks.append(entry)
    return entry


def _weight(weights, point: dict, real: dict, live: list) -> float:
    w = 1.0
    for base, (kind, j) in weights:
        w *= abs(complex(base.evaluate(point))) ** (2.0 * real[f"{kind}{j}_dot"])
    for v in live:
        w *= abs(point[v]) ** -2.0
    return w


def check_jacobian_pullback(tri: Triangulation, cf: ClosedForm, n_samples: int = 20, tol: float = 1e-8,
                            seed: int = 0, report: OracleReport | None = None) -> dict:
    """Independent test of the prefactor.

    Move the angles along theta(t) = theta* exp(t D) with D tangent to the balance
    conditions.  By the change-of-variables rule for products of deltas,
    W / ||det d(constraints)/d(live edges, t)|| must equal
    prefactor / ||d delta(lam(t), mu(t))/dt|| at every support point."""
    rng = np.random.default_rng(seed)
    rels, lon, mer = _angle_rows(tri)
    deltas, weights = raw_constraints(tri, cf.gauge)
    live = [edge_var(i) for i in range(tri.edge_count) if i != cf.gauge]
    angle_syms = [f"{k}{j}" for j in range(tri.n) for k in ("a", "c")]
    ns = null_space(np.array([r[0] for r in rels]))
    worst = 0.0
    count = 0
    for _ in range(n_samples):
        mu = random_mu(rng)
        s = sample_support(tri, cf, mu, int(rng.integers(2 ** 31)))
        real, lam_dot, mu_dot = sample_real_parts(tri, rng)
        point = {**s.angles, **s.edge_values}
        direction = ns @ (rng.normal(size=ns.shape[1]) + 1j * rng.normal(size=ns.shape[1]))
        jac = np.zeros((len(deltas), len(live) + 1), dtype=complex)
        for i, d in enumerate(deltas):
            for k, v in enumerate(live):
                jac[i, k] = complex(d.diff(v).evaluate(point))
            jac[i, -1] = sum(complex(d.diff(sym).evaluate(point)) * point[sym] * direction[k]
                             for k, sym in enumerate(angle_syms))
        lhs = _weight(weights, point, real, live) / abs(np.linalg.det(jac)) ** 2
        dlam = s.lam * complex(lon[0] @ direction)
        dmu = s.mu * complex(mer[0] @ direction)
        pt = {"lam": s.lam, "mu": s.mu}
        dp = complex(cf.delta.diff("lam").evaluate(pt)) * dlam + complex(cf.delta.diff("mu").evaluate(pt)) * dmu
        rhs = cf.evaluate_prefactor(s.lam, s.mu, lam_dot, mu_dot) / abs(dp) ** 2
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
        count += 1
    entry = {"name": "jacobian_pullback", "pass": bool(worst < tol), "max_error": float(worst), "samples": count}
    if report is not None:
        report.checks.append(entry)
    return entry
