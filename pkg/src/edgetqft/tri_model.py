"""Oriented ideal triangulations as edge-identification tables.

File format (``.zft``)::

    zft 1
    tets N
    tet <j> <+|-> <e01> <e02> <e03> <e12> <e13> <e23>
    ...
    meridian <3N integers>
    longitude <3N integers>

Holonomy coefficients are grouped per tetrahedron as (a_j, b_j, c_j).  Edge
labels are free-form tokens, indexed densely in order of first appearance.
"""
from __future__ import annotations

from dataclasses import dataclass

SLOTS = ("01", "02", "03", "12", "13", "23")

# slot -> angle role: opposite edges share an angle
SLOT_ANGLE = {"01": "a", "23": "a", "02": "b", "13": "b", "03": "c", "12": "c"}


class TriangulationError(ValueError):
    """Any problem with triangulation input."""


class ZftSyntaxError(TriangulationError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Tetrahedron:
    index: int
    sign: int
    slots: tuple  # edge-class index for each slot in SLOTS order

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise TriangulationError(f"tet {self.index}: sign must be +1 or -1")
        if len(self.slots) != 6:
            raise TriangulationError(f"tet {self.index}: expected 6 slots, got {len(self.slots)}")

    def slot(self, name: str) -> int:
        return self.slots[SLOTS.index(name)]


@dataclass(frozen=True)
class HolonomyRow:
    name: str
    coefficients: tuple

    def triple(self, j: int) -> tuple:
        return tuple(self.coefficients[3 * j:3 * j + 3])


@dataclass(frozen=True)
class QuotientMonomial:
    exponents: tuple

    def __post_init__(self):
        if sum(self.exponents) != 0:
            raise TriangulationError("quotient monomial must have exponent sum 0")


@dataclass(frozen=True)
class Triangulation:
    tets: tuple
    edge_count: int
    meridian: HolonomyRow
    longitude: HolonomyRow
    edge_names: tuple = ()

    def __post_init__(self):
        n = len(self.tets)
        for t in self.tets:
            for e in t.slots:
                if not 0 <= e < self.edge_count:
                    raise TriangulationError(f"tet {t.index}: edge index {e} out of range [0, {self.edge_count})")
        used = {e for t in self.tets for e in t.slots}
        missing = sorted(set(range(self.edge_count)) - used)
        if missing:
            raise TriangulationError(f"edge classes {missing} are not used by any slot")
        for row in (self.meridian, self.longitude):
            if len(row.coefficients) != 3 * n:
                raise TriangulationError(
                    f"{row.name} row has length {len(row.coefficients)}, expected {3 * n}")
        if self.edge_count != n:
            raise TriangulationError(
                f"one-cusped check failed: {self.edge_count} edge classes for {n} tetrahedra")
        if not self.edge_names:
            object.__setattr__(self, "edge_names", tuple(f"e{i}" for i in range(self.edge_count)))

    @property
    def n(self) -> int:
        return len(self.tets)

    @property
    def signs(self) -> tuple:
        return tuple(t.sign for t in self.tets)

    def all_positive(self) -> bool:
        return all(t.sign == 1 for t in self.tets)

    def relabel(self, edge_perm=None, tet_perm=None) -> "Triangulation":
        """Renumber edge classes (old i -> edge_perm[i]) and tetrahedra (new j holds old tet_perm[j])."""
        n, m = self.n, self.edge_count
        edge_perm = list(edge_perm or range(m))
        tet_perm = list(tet_perm or range(n))
        tets = tuple(
            Tetrahedron(j, self.tets[old].sign, tuple(edge_perm[e] for e in self.tets[old].slots))
            for j, old in enumerate(tet_perm))
        names = [None] * m
        for old, new in enumerate(edge_perm):
            names[new] = self.edge_names[old]

        def perm_row(row):
            coeffs = []
            for old in tet_perm:
                coeffs.extend(row.triple(old))
            return HolonomyRow(row.name, tuple(coeffs))

        return Triangulation(tets, m, perm_row(self.meridian), perm_row(self.longitude), tuple(names))


def _ints(tokens, lineno, cols):
    out = []
    for tok, col in zip(tokens, cols):
        try:
            out.append(int(tok))
        except ValueError:
            raise ZftSyntaxError(f"expected an integer, got {tok!r}", lineno, col) from None
    return out


def _tokens(line: str):
    toks, cols = [], []
    i = 0
    while i < len(line):
        if line[i].isspace():
            i += 1
            continue
        j = i
        while j < len(line) and not line[j].isspace():
            j += 1
        toks.append(line[i:j])
        cols.append(i + 1)
        i = j
    return toks, cols


def parse_triangulation(text: str) -> Triangulation:
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0]
        toks, cols = _tokens(body)
        if toks:
            lines.append((lineno, toks, cols))
    if not lines:
        raise ZftSyntaxError("empty input", 1, 1)

    lineno, toks, cols = lines[0]
    if toks != ["zft", "1"]:
        raise ZftSyntaxError("expected header 'zft 1'", lineno, cols[0])
    if len(lines) < 2 or lines[1][1][0] != "tets" or len(lines[1][1]) != 2:
        ln = lines[1][0] if len(lines) > 1 else lineno + 1
        raise ZftSyntaxError("expected 'tets N'", ln, 1)
    lineno, toks, cols = lines[1]
    n = _ints(toks[1:], lineno, cols[1:])[0]
    if n <= 0:
        raise ZftSyntaxError("tetrahedron count must be positive", lineno, cols[1])

    names: dict = {}
    tets: dict = {}
    rows: dict = {}
    for lineno, toks, cols in lines[2:]:
        kw = toks[0]
        if kw == "tet":
            if len(toks) != 9:
                raise ZftSyntaxError(
                    f"tet line needs an index, a sign and 6 edge labels, got {len(toks) - 1} fields",
                    lineno, cols[-1])
            j = _ints(toks[1:2], lineno, cols[1:2])[0]
            if not 0 <= j < n:
                raise ZftSyntaxError(f"tet index {j} out of range", lineno, cols[1])
            if j in tets:
                raise ZftSyntaxError(f"duplicate tet {j}", lineno, cols[1])
            if toks[2] not in ("+", "-"):
                raise ZftSyntaxError(f"sign must be '+' or '-', got {toks[2]!r}", lineno, cols[2])
            slots = tuple(names.setdefault(lbl, len(names)) for lbl in toks[3:])
            tets[j] = Tetrahedron(j, 1 if toks[2] == "+" else -1, slots)
        elif kw in ("meridian", "longitude"):
            if kw in rows:
                raise ZftSyntaxError(f"duplicate {kw} row", lineno, cols[0])
            rows[kw] = HolonomyRow(kw, tuple(_ints(toks[1:], lineno, cols[1:])))
        else:
            raise ZftSyntaxError(f"unknown keyword {kw!r}", lineno, cols[0])

    if len(tets) != n:
        missing = sorted(set(range(n)) - set(tets))
        raise TriangulationError(f"missing tet lines for {missing}")
    for kw in ("meridian", "longitude"):
        if kw not in rows:
            raise TriangulationError(f"missing {kw} row")
    return Triangulation(tuple(tets[j] for j in range(n)), len(names), rows["meridian"],
                         rows["longitude"], tuple(names))


def serialize_triangulation(tri: Triangulation) -> str:
    out = ["zft 1", f"tets {tri.n}"]
    for t in tri.tets:
        labels = " ".join(tri.edge_names[e] for e in t.slots)
        out.append(f"tet {t.index} {'+' if t.sign > 0 else '-'} {labels}")
    for row in (tri.meridian, tri.longitude):
        out.append(f"{row.name} " + " ".join(str(c) for c in row.coefficients))
    return "\n".join(out) + "\n"


def load_triangulation(path) -> Triangulation:
    with open(path, encoding="utf-8") as fh:
        return parse_triangulation(fh.read())


def edge_valences(tri: Triangulation) -> list:
    val = [0] * tri.edge_count
    for t in tri.tets:
        for e in t.slots:
            val[e] += 1
    return val


def tet_quotient_monomials(tri: Triangulation, j: int):
    """(X_j, Z_j): X = x02 x13 / (x03 x12), Z = x01 x23 / (x02 x13)."""
    t = tri.tets[j]
    x = [0] * tri.edge_count
    z = [0] * tri.edge_count
    for s in ("02", "13"):
        x[t.slot(s)] += 1
        z[t.slot(s)] -= 1
    for s in ("03", "12"):
        x[t.slot(s)] -= 1
    for s in ("01", "23"):
        z[t.slot(s)] += 1
    return QuotientMonomial(tuple(x)), QuotientMonomial(tuple(z))


def angle_counts(tri: Triangulation, edge: int, j: int) -> tuple:
    """Occurrences (a, b, c) of edge class ``edge`` among the slots of tet j."""
    t = tri.tets[j]
    cnt = {"a": 0, "b": 0, "c": 0}
    for s in SLOTS:
        if t.slot(s) == edge:
            cnt[SLOT_ANGLE[s]] += 1
    return cnt["a"], cnt["b"], cnt["c"]


def balance_string(tri: Triangulation, edge: int) -> str:
    """Human-readable balance condition for one edge class, e.g. '2a_1+c_1+2b_2+c_2'."""
    parts = []
    for j in range(tri.n):
        for role, k in zip("abc", angle_counts(tri, edge, j)):
            if k:
                parts.append(f"{k if k > 1 else ''}{role}_{j + 1}")
    return "+".join(parts)
