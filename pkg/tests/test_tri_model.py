import pytest
from hypothesis import given, settings, strategies as st

from conftest import fixture_path
from edgetqft.tri_model import (SLOT_ANGLE, HolonomyRow, QuotientMonomial, Tetrahedron, Triangulation,
                                TriangulationError, ZftSyntaxError, balance_string, edge_valences,
                                load_triangulation, parse_triangulation, serialize_triangulation,
                                tet_quotient_monomials)


def test_trefoil_parses(triangulations):
    tri = triangulations["trefoil"]
    assert tri.n == 2 and tri.edge_count == 2
    assert tri.signs == (1, 1)
    assert tri.edge_names == ("s", "t")
    assert tri.tets[0].slots == (0, 0, 1, 0, 0, 0)
    assert tri.meridian.coefficients == (-1, 0, 0, 1, 0, 0)
    assert tri.longitude.coefficients == (2, 0, -1, -2, 0, 0)


def test_figure_eight_has_negative_second_tet(triangulations):
    tri = triangulations["4_1"]
    assert tri.signs == (1, -1)
    assert tri.tets[1].sign == -1


def test_five_labels_is_syntax_error():
    text = "zft 1\ntets 1\ntet 0 + s s s s s\nmeridian 0 0 0\nlongitude 0 0 0\n"
    with pytest.raises(ZftSyntaxError) as exc:
        parse_triangulation(text)
    assert exc.value.line == 3


@pytest.mark.parametrize("text, fragment", [
    ("zft 2\ntets 1\n", "header"),
    ("zft 1\ntets x\n", "integer"),
    ("zft 1\ntets 1\ntet 0 * s s s s s s\nmeridian 0 0 0\nlongitude 0 0 0\n", "sign"),
    ("zft 1\ntets 1\ntet 0 + s s s s s s\nbogus 1\n", "keyword"),
    ("zft 1\ntets 1\ntet 0 + s s s s s s\nmeridian 0 0 x\nlongitude 0 0 0\n", "integer"),
])
def test_syntax_errors_carry_position(text, fragment):
    with pytest.raises(ZftSyntaxError) as exc:
        parse_triangulation(text)
    assert fragment in str(exc.value)
    assert exc.value.line >= 1 and exc.value.col >= 1


def test_wrong_row_length():
    text = "zft 1\ntets 1\ntet 0 + s s s s s s\nmeridian 0 0\nlongitude 0 0 0\n"
    with pytest.raises(TriangulationError, match="length 2, expected 3"):
        parse_triangulation(text)


def test_edge_count_must_match_tet_count():
    text = "zft 1\ntets 1\ntet 0 + s s s t t t\nmeridian 0 0 0\nlongitude 0 0 0\n"
    with pytest.raises(TriangulationError, match="one-cusped"):
        parse_triangulation(text)


def test_edge_index_out_of_range():
    row = HolonomyRow("meridian", (0, 0, 0))
    with pytest.raises(TriangulationError, match="out of range"):
        Triangulation((Tetrahedron(0, 1, (0, 0, 0, 0, 0, 3)),), 1, row, HolonomyRow("longitude", (0, 0, 0)))


def test_unused_edge_class():
    row = HolonomyRow("meridian", (0,) * 6)
    tets = (Tetrahedron(0, 1, (0,) * 6), Tetrahedron(1, 1, (0,) * 6))
    with pytest.raises(TriangulationError, match="not used"):
        Triangulation(tets, 2, row, HolonomyRow("longitude", (0,) * 6))


def test_tetrahedron_invariants():
    with pytest.raises(TriangulationError):
        Tetrahedron(0, 0, (0,) * 6)
    with pytest.raises(TriangulationError):
        Tetrahedron(0, 1, (0,) * 5)


def test_edge_valences(triangulations):
    assert edge_valences(triangulations["trefoil"]) == [10, 2]
    assert edge_valences(triangulations["4_1"]) == [6, 6]
    for tri in triangulations.values():
        assert sum(edge_valences(tri)) == 6 * tri.n


def single_tet():
    return parse_triangulation("zft 1\ntets 1\ntet 0 - e e e e e e\nmeridian 0 0 0\nlongitude 0 0 0\n")


def test_single_tet_valence_and_quotients():
    tri = single_tet()
    assert edge_valences(tri) == [6]
    x, z = tet_quotient_monomials(tri, 0)
    assert x.exponents == (0,) and z.exponents == (0,)


def test_quotient_monomials(triangulations):
    x, z = tet_quotient_monomials(triangulations["trefoil"], 0)
    assert x.exponents == (1, -1) and z.exponents == (0, 0)
    x, z = tet_quotient_monomials(triangulations["4_1"], 0)
    assert x.exponents == (-1, 1) and z.exponents == (2, -2)


def test_quotient_monomial_rejects_nonzero_sum():
    with pytest.raises(TriangulationError):
        QuotientMonomial((1, 0))


def test_balance_strings():
    expected = {
        "trefoil": ["2a_1+2b_1+c_1+2a_2+2b_2+c_2", "c_1+c_2"],
        "4_1": ["2a_1+c_1+2b_2+c_2", "2b_1+c_1+2a_2+c_2"],
        "5_2": ["a_1+c_1+b_2+a_3+b_3", "b_1+c_1+b_2+2c_2+a_3+c_3", "a_1+b_1+2a_2+b_3+c_3"],
    }
    for name, rows in expected.items():
        tri = load_triangulation(fixture_path(name))
        assert [balance_string(tri, i) for i in range(tri.edge_count)] == rows


def test_slot_angle_convention():
    assert {s for s, r in SLOT_ANGLE.items() if r == "a"} == {"01", "23"}
    assert {s for s, r in SLOT_ANGLE.items() if r == "b"} == {"02", "13"}
    assert {s for s, r in SLOT_ANGLE.items() if r == "c"} == {"03", "12"}


def test_round_trip(triangulations):
    for tri in triangulations.values():
        text = serialize_triangulation(tri)
        assert parse_triangulation(text) == tri
        assert serialize_triangulation(parse_triangulation(text)) == text


def test_comments_and_blank_lines_ignored():
    text = "# header comment\n\nzft 1   # version\ntets 1\ntet 0 + e e e e e e # all one class\n" \
           "meridian 0 0 0\nlongitude 0 0 0\n"
    assert parse_triangulation(text).edge_count == 1


@st.composite
def random_triangulation(draw):
    n = draw(st.integers(1, 4))
    slots = [draw(st.lists(st.integers(0, n - 1), min_size=6, max_size=6)) for _ in range(n)]
    used = {e for row in slots for e in row}
    for missing in sorted(set(range(n)) - used):
        slots[missing % n][missing % 6] = missing
    used = {e for row in slots for e in row}
    if used != set(range(n)):
        slots = [[(j + k) % n for k in range(6)] for j in range(n)]
    signs = draw(st.lists(st.sampled_from((1, -1)), min_size=n, max_size=n))
    row = lambda: tuple(draw(st.lists(st.integers(-3, 3), min_size=3 * n, max_size=3 * n)))
    tets = tuple(Tetrahedron(j, signs[j], tuple(slots[j])) for j in range(n))
    return Triangulation(tets, n, HolonomyRow("meridian", row()), HolonomyRow("longitude", row()),
                         tuple(f"e{i}" for i in range(n)))


@settings(max_examples=200, deadline=None)
@given(random_triangulation())
def test_properties_random(tri):
    assert sum(edge_valences(tri)) == 6 * tri.n
    for j in range(tri.n):
        x, z = tet_quotient_monomials(tri, j)
        assert sum(x.exponents) == 0 and sum(z.exponents) == 0
    # renumbering edges on output makes serialization canonical
    canonical = parse_triangulation(serialize_triangulation(tri))
    assert parse_triangulation(serialize_triangulation(canonical)) == canonical
