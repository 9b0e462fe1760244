from dataclasses import replace

import numpy as np
import pytest

from edgetqft.exact_algebra import Poly
from edgetqft.numeric_oracle import (NoSolution, OracleReport, check_jacobian_pullback,
                                     check_prefactor_agreement, check_support_equivalence, lam_roots,
                                     random_mu, raw_constraints, sample_support, support_samples)
from edgetqft.state_reduce import closed_form_from_parts, reduce_partition_function


@pytest.fixture(scope="module")
def forms(triangulations):
    return {name: reduce_partition_function(tri) for name, tri in triangulations.items()}


def test_trefoil_at_mu_two(triangulations, forms):
    tri, cf = triangulations["trefoil"], forms["trefoil"]
    s = sample_support(tri, cf, 2.0)
    assert s.lam == pytest.approx(-0.125, abs=1e-14)
    assert s.residual < 1e-12
    # the first tetrahedron's shape term 1/(X a) equals 3
    term = 1 / (s.edge_values["x0"] * s.angles["a0"])
    assert term == pytest.approx(3, abs=1e-12)


def test_trefoil_unit_point(triangulations, forms):
    s = sample_support(triangulations["trefoil"], forms["trefoil"], 1.0)
    assert s.lam == pytest.approx(-1, abs=1e-14)


def test_figure_eight_two_roots_on_unit_circle(triangulations, forms):
    tri, cf = triangulations["4_1"], forms["4_1"]
    rng = np.random.default_rng(11)
    for _ in range(5):
        mu = complex(np.exp(1j * rng.uniform(0.1, np.pi - 0.1)))
        roots = lam_roots(cf.delta, mu)
        assert len(roots) == 2
        samples = support_samples(tri, cf, mu, 0)
        assert len(samples) == 2
        assert max(s.residual for s in samples) < 1e-10


def test_no_solution_on_empty_curve(triangulations, forms):
    cf = replace(forms["trefoil"], delta=Poly.parse("mu - 3"))
    with pytest.raises((NoSolution, ValueError)):
        sample_support(triangulations["trefoil"], cf, 2.0)


def test_random_mu_avoids_roots_of_unity():
    rng = np.random.default_rng(0)
    for _ in range(200):
        mu = random_mu(rng)
        assert 0.5 <= abs(mu) <= 2.0
        assert abs(mu - 1) > 1e-3 and abs(mu + 1) > 1e-3


def test_raw_constraints_shape(triangulations):
    deltas, weights = raw_constraints(triangulations["5_2"], 2)
    assert len(deltas) == 3
    assert len(weights) == 6


@pytest.mark.parametrize("name, samples", [("trefoil", 100), ("4_1", 30), ("5_2", 30)])
def test_support_equivalence(triangulations, forms, name, samples):
    entry = check_support_equivalence(triangulations[name], forms[name], n_samples=samples, tol=1e-10)
    assert entry["pass"], entry
    assert entry["max_error"] < 1e-10
    assert entry["min_off_curve_residual"] > 1e-7


def test_support_equivalence_rejects_wrong_curve(triangulations, forms):
    bad = replace(forms["trefoil"], delta=Poly.parse("lam*mu^3 + 2"))
    entry = check_support_equivalence(triangulations["trefoil"], bad, n_samples=10, tol=1e-10)
    assert not entry["pass"]


@pytest.mark.parametrize("name", ["trefoil", "4_1", "5_2"])
def test_prefactor_agreement(triangulations, name):
    entry = check_prefactor_agreement(triangulations[name], n_samples=20, tol=1e-8)
    assert entry["pass"], entry
    assert entry["identical_delta"]


def test_prefactor_agreement_control(triangulations, forms):
    cf = forms["trefoil"]
    bumped = closed_form_from_parts([("lam", "mu_dot + 1"), ("mu", "-lam_dot - 1")], "lam*mu^3 + 1")
    entry = check_prefactor_agreement(triangulations["trefoil"], forms=[cf, bumped])
    assert not entry["pass"]


@pytest.mark.parametrize("name", ["trefoil", "4_1", "5_2"])
def test_jacobian_pullback(triangulations, forms, name):
    entry = check_jacobian_pullback(triangulations[name], forms[name], n_samples=20, tol=1e-8)
    assert entry["pass"], entry


def test_jacobian_pullback_rejects_shifted_exponent(triangulations, forms):
    cf = forms["trefoil"]
    shifted = closed_form_from_parts([("lam", "mu_dot + 1"), ("mu", "-lam_dot + 4")], "lam*mu^3 + 1")
    entry = check_jacobian_pullback(triangulations["trefoil"], replace(cf, prefactor=shifted.prefactor))
    assert not entry["pass"]


def test_jacobian_pullback_accepts_support_equivalent_form(triangulations, forms):
    cf = forms["trefoil"]
    traded = closed_form_from_parts([("lam", "mu_dot + 1"), ("mu", "-lam_dot + 2")], "lam*mu^3 + 1")
    entry = check_jacobian_pullback(triangulations["trefoil"], replace(cf, prefactor=traded.prefactor))
    assert entry["pass"], entry


def test_report_determinism(triangulations, forms):
    def run():
        rep = OracleReport(seed=5)
        check_support_equivalence(triangulations["5_2"], forms["5_2"], n_samples=5, seed=5, report=rep)
        check_jacobian_pullback(triangulations["5_2"], forms["5_2"], n_samples=5, seed=5, report=rep)
        return rep.to_json()

    a, b = run(), run()
    assert a == b
    assert a["pass"] and len(a["checks"]) == 2
