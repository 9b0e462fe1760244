import pytest
from hypothesis import given, settings, strategies as st

from edgetqft.apoly_engine import apoly_factor, divides_up_to_sign
from edgetqft.exact_algebra import LinExpr, Poly, exact_divide
from edgetqft.state_reduce import (ClosedForm, DeltaSystem, NotLinear, all_closed_forms, build_integrand,
                                   closed_form_from_parts, closed_forms_equal, eliminate_delta, gauge_fix,
                                   linear_candidates, prefactors_agree_on_support,
                                   reduce_partition_function, replace_delta, run_elimination)
from edgetqft.tri_model import parse_triangulation

P = Poly.parse

CLOSED = {
    "trefoil": "||lam||^(mu_dot) * ||mu||^(-lam_dot - 1) * delta(lam*mu^3 + 1)",
    "4_1": "||lam||^(mu_dot + 1) * ||mu||^(-lam_dot + 3) * ||mu^2 - 1|| * "
           "delta(lam*mu^4 + lam^2*mu^2 - lam*mu^3 - 2*lam*mu^2 - lam*mu + mu^2 + lam)",
    "5_2": "||lam||^(mu_dot + 1) * ||mu||^(-lam_dot + 2) * ||mu^2 - 1|| * ||lam*mu^3 + 1|| * "
           "delta(lam^3*mu^7 - lam^2*mu^7 + 2*lam^2*mu^6 + 2*lam^2*mu^5 + lam*mu^5 - lam^2*mu^3 "
           "- lam*mu^4 + lam^2*mu^2 + 2*lam*mu^2 + 2*lam*mu - lam + 1)",
}


def _is_monomial_multiple(stored: Poly, raw: Poly) -> bool:
    q = exact_divide(stored, raw)
    return q is not None and q.is_monomial()


def test_trefoil_integrand(triangulations):
    sys = gauge_fix(build_integrand(triangulations["trefoil"]), 1)
    assert sys.live_vars == ("x0",)
    # 1/(x a_j) + c_j - 1, stored with the monomial x a_j cleared
    for j, d in enumerate(sys.deltas):
        raw = P(f"x0^-1*a{j}^-1 + c{j} - 1")
        assert _is_monomial_multiple(d, raw)


def test_figure_eight_negative_tet(triangulations):
    # gauge s = 1 leaves x = t; the negative tet gives x a + x^2/c - 1
    sys = gauge_fix(build_integrand(triangulations["4_1"]), 0)
    assert sys.live_vars == ("x1",)
    assert _is_monomial_multiple(sys.deltas[1], P("x1*a1 + x1^2*c1^-1 - 1"))
    assert any("||" in line and "c1_dot" in line for line in sys.trace)


def test_five_two_shape(triangulations):
    sys = gauge_fix(build_integrand(triangulations["5_2"]), 2)
    assert len(sys.deltas) == 3 and len(sys.live_vars) == 2


def test_measure_factors(triangulations):
    sys = build_integrand(triangulations["5_2"])
    measure = [(b, e) for b, e in sys.factors if b.is_monomial() and e == LinExpr({}, -1)]
    assert {str(b) for b, _ in measure} >= {"x0", "x1", "x2"}


def test_integrand_needs_square_system():
    tri = parse_triangulation("zft 1\ntets 1\ntet 0 + e e e e e e\nmeridian 1 0 0\nlongitude 0 0 1\n")
    sys = gauge_fix(build_integrand(tri), 0)
    assert sys.live_vars == ()


def test_gauge_rejects_dead_edge(triangulations):
    sys = gauge_fix(build_integrand(triangulations["trefoil"]), 1)
    with pytest.raises(ValueError):
        gauge_fix(sys, 1)


def test_linear_rule_scaling():
    # delta(2v - mu): v := mu/2 with factor ||2||^-1
    sys = DeltaSystem((P("2*v - mu"),), ((P("v"), LinExpr({}, -1)),), ("v",), ("v",), ("v",))
    out = eliminate_delta(sys, 0, "v")
    assert out.deltas == () and out.live_vars == ()
    step = out.steps[0]
    assert (step.var, step.num, step.den) == ("v", P("mu"), P("2"))
    # phi(mu/2) ||2||^-1 with phi = ||v||^-1 gives ||mu||^-1 in total
    total = 1.0
    for base, exp in out.factors:
        total *= abs(complex(base.evaluate({"mu": 3.0}))) ** (2 * float(exp.const))
    assert total == pytest.approx(1 / 9)


def test_trefoil_second_delta(triangulations):
    sys = gauge_fix(build_integrand(triangulations["trefoil"]), 1)
    out = eliminate_delta(sys, 1, "x0")
    step = out.steps[0]
    # x = 1/(a (1 - c))
    assert step.var == "x0" and step.num * P("a1 - a1*c1") == step.den
    assert len(out.deltas) == 1 and out.live_vars == ()
    assert P("a1*c1 - a1") in out.excluded


def test_not_linear_reports_degrees(triangulations):
    sys = gauge_fix(build_integrand(triangulations["4_1"]), 1)
    with pytest.raises(NotLinear, match="degrees"):
        eliminate_delta(sys, 0, "x0")


def test_replacement_lowers_degree(triangulations):
    sys = gauge_fix(build_integrand(triangulations["4_1"]), 1)
    out = replace_delta(sys, "x0")
    assert len(out.deltas) == len(sys.deltas)
    assert min(d.degree("x0") for d in out.deltas) <= 1
    assert linear_candidates(out)


@pytest.mark.parametrize("name", ["trefoil", "4_1", "5_2"])
def test_closed_forms(triangulations, name):
    cf = reduce_partition_function(triangulations[name])
    assert str(cf) == CLOSED[name]
    assert set(cf.delta.gens) <= {"lam", "mu"}
    for base, exp in cf.prefactor:
        assert set(base.gens) <= {"lam", "mu"} or base.is_constant()
        assert set(exp.coeffs) <= {"lam_dot", "mu_dot"}


@pytest.mark.parametrize("name", ["trefoil", "4_1", "5_2"])
def test_gauge_independence(triangulations, name):
    tri = triangulations[name]
    forms = [reduce_partition_function(tri, gauge=g) for g in range(tri.edge_count)]
    assert all(closed_forms_equal(forms[0], f) for f in forms)
    assert {str(f) for f in forms} == {CLOSED[name]}


@pytest.mark.parametrize("name", ["trefoil", "4_1", "5_2"])
def test_order_independence(triangulations, name):
    tri = triangulations[name]
    ref = reduce_partition_function(tri)
    forms = all_closed_forms(tri)
    assert len(forms) >= tri.edge_count
    assert {str(f.delta) for f in forms} == {str(ref.delta)}
    assert all(prefactors_agree_on_support(ref, f) for f in forms)


@pytest.mark.parametrize("name", ["trefoil", "4_1", "5_2"])
def test_delta_divides_engine_factor(triangulations, name):
    tri = triangulations[name]
    cf = reduce_partition_function(tri)
    assert divides_up_to_sign(cf.delta, apoly_factor(tri).factor) in ("l", "-l")


def test_support_agreement_controls():
    a = closed_form_from_parts([("lam", "mu_dot"), ("mu", "-lam_dot - 1")], "lam*mu^3 + 1")
    # ||lam mu^3|| = 1 on the support, so lam^1 mu^3 can be traded freely
    b = closed_form_from_parts([("lam", "mu_dot + 1"), ("mu", "-lam_dot + 2")], "lam*mu^3 + 1")
    c = closed_form_from_parts([("lam", "mu_dot + 1"), ("mu", "-lam_dot + 4")], "lam*mu^3 + 1")
    assert prefactors_agree_on_support(a, b)
    assert not closed_forms_equal(a, b)
    assert not prefactors_agree_on_support(a, c)
    d = closed_form_from_parts([("lam", "mu_dot")], "lam*mu^3 - 1")
    assert not prefactors_agree_on_support(a, d)


def test_closed_form_json(triangulations):
    cf = reduce_partition_function(triangulations["trefoil"])
    js = cf.to_json()
    assert js["delta"] == "lam*mu^3 + 1"
    assert js["prefactor"][0] == {"base": "lam", "exponent": "mu_dot"}
    assert js["apoly_presentation"][0] == "A(lam, mu^(1/2)) with A(l, m) = l*m^6 + 1"


def test_trace_has_one_line_per_step(triangulations):
    cf = reduce_partition_function(triangulations["5_2"])
    assert sum(line.startswith("integrate") for line in cf.trace) == 2
    assert cf.trace[-1].startswith("result:")


def _random_chooser(draw):
    def choose(sys):
        cands = linear_candidates(sys)
        if not cands:
            return replace_delta(sys, sys.live_vars[0])
        k, v = draw(st.sampled_from(cands))
        return eliminate_delta(sys, k, v)
    return choose


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["trefoil", "4_1", "5_2"]), st.data())
def test_ledger_and_invariance_random_orders(triangulations, name, data):
    tri = triangulations[name]
    gauge = data.draw(st.integers(0, tri.edge_count - 1))
    sys = gauge_fix(build_integrand(tri), gauge)
    assert len(sys.deltas) == tri.n and len(sys.live_vars) == tri.edge_count - 1
    seen = []

    def chooser(s, inner=_random_chooser(data.draw)):
        out = inner(s)
        seen.append(len(out.deltas) - len(out.live_vars))
        return out

    terminal = run_elimination(sys, chooser)
    assert all(k == 1 for k in seen)
    assert len(terminal.deltas) == 1 and terminal.live_vars == ()
    cf = reduce_partition_function(tri, gauge=gauge, chooser=_random_chooser(data.draw))
    assert isinstance(cf, ClosedForm)
    assert prefactors_agree_on_support(reduce_partition_function(tri), cf)
