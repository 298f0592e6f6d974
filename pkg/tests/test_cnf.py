import itertools

import numpy as np
import pytest

from helpers import random_formula
from twsum.cnf import (
    CnfFormula,
    cond_eq_rows,
    cond_neq_rows,
    dimacs_read,
    dimacs_write,
    eq_rows,
    format_dimacs,
    gadget_cond_eq,
    gadget_cond_neq,
    gadget_eq,
    gadget_neq,
    gadget_or_def,
    parse_dimacs,
    pattern_rows,
    primal_graph,
)
from twsum.encode import encode_xor_chain
from twsum.errors import ParameterError, ParseError


def models(f: CnfFormula) -> set[tuple[bool, ...]]:
    out = set()
    for bits in itertools.product([False, True], repeat=f.num_vars):
        if f.satisfied_by([False, *bits]):
            out.add(bits)
    return out


def test_add_clause_basic():
    f = CnfFormula(2)
    cid = f.add_clause([1, -2])
    assert cid == 0 and f.clauses == [(1, -2)]


def test_duplicate_literal_collapses():
    f = CnfFormula(1)
    f.add_clause([1, 1])
    assert f.clauses == [(1,)]


@pytest.mark.parametrize("lits", [[1, -1], [], [0], [3]])
def test_add_clause_rejects(lits):
    with pytest.raises(ParameterError):
        CnfFormula(2).add_clause(lits)


def test_add_clauses_block():
    f = CnfFormula(4)
    f.add_clauses(np.array([[1, 2, 0], [3, 3, -4], [-1, 0, 0]]))
    assert f.clauses == [(1, 2), (3, -4), (-1,)]
    with pytest.raises(ParameterError):
        f.add_clauses(np.array([[1, -1]]))
    with pytest.raises(ParameterError):
        f.add_clauses(np.array([[0, 0]]))
    with pytest.raises(ParameterError):
        f.add_clauses(np.array([[5]]))


def test_clause_order_mixes_blocks_and_singles():
    f = CnfFormula(3)
    f.add_clause([1])
    f.add_clauses(np.array([[2, 3]]))
    f.add_clause([-3])
    assert f.clauses == [(1,), (2, 3), (-3,)]
    assert f.num_clauses == 3


def test_tags():
    f = CnfFormula()
    a = f.new_var("s[1]")
    b, c = f.new_vars(2, ["y[1]", "x[1][0]"]).tolist()
    assert f.var("y[1]") == b and f.tag(c) == "x[1][0]" and f.tag(a) == "s[1]"
    with pytest.raises(ParameterError):
        f.set_tag(a, "y[1]")
    f.set_tag(a, "s[renamed]")
    assert f.var("s[renamed]") == a
    with pytest.raises(ParameterError):
        f.var("s[1]")


def _truth_table(build, arity: int, rule) -> None:
    f = CnfFormula(arity)
    build(f, *range(1, arity + 1))
    expected = {bits for bits in itertools.product([False, True], repeat=arity) if rule(*bits)}
    assert models(f) == expected


def test_gadget_truth_tables():
    _truth_table(gadget_eq, 2, lambda x, y: x == y)
    _truth_table(gadget_neq, 2, lambda x, y: x != y)
    _truth_table(gadget_or_def, 3, lambda y, a, b: y == (a or b))
    _truth_table(gadget_cond_eq, 3, lambda g, x, y: g or x == y)
    _truth_table(gadget_cond_neq, 3, lambda g, x, y: g or x != y)


def test_gadget_exact_forms():
    f = CnfFormula(3)
    gadget_eq(f, 1, 2)
    gadget_neq(f, 1, 2)
    gadget_or_def(f, 3, 1, 2)
    gadget_cond_eq(f, 3, 1, 2)
    assert f.clauses == [(-1, 2), (1, -2), (1, 2), (-1, -2),
                         (-1, 3), (-2, 3), (-3, 1, 2), (3, -1, 2), (3, 1, -2)]


def test_negated_guard():
    f = CnfFormula(3)
    gadget_cond_neq(f, -1, 2, 3)
    # s true forces x != y; s false leaves them free
    assert all((not s) or x != y for s, x, y in models(f))
    assert len(models(f)) == 6


def test_gadget_eq_falsified():
    f = CnfFormula(2)
    gadget_eq(f, 1, 2)
    assert not f.satisfied_by([False, True, False])


def test_gadget_rejects_repeated_variable():
    with pytest.raises(ParameterError):
        gadget_or_def(CnfFormula(2), 1, 1, 2)
    with pytest.raises(ParameterError):
        gadget_cond_eq(CnfFormula(2), -1, 1, 2)


def test_row_builders_match_gadgets():
    x, y, g = np.array([1, 4]), np.array([2, 5]), np.array([3, 6])
    f1, f2 = CnfFormula(6), CnfFormula(6)
    f1.add_clauses(eq_rows(x, y))
    f1.add_clauses(cond_eq_rows(g, x, y))
    f1.add_clauses(cond_neq_rows(g, x, y))
    for a, b, c in ((1, 2, 3), (4, 5, 6)):
        gadget_eq(f2, a, b)
    for a, b, c in ((1, 2, 3), (4, 5, 6)):
        gadget_cond_eq(f2, c, a, b)
    for a, b, c in ((1, 2, 3), (4, 5, 6)):
        gadget_cond_neq(f2, c, a, b)
    assert sorted(f1.clauses) == sorted(f2.clauses)
    rows = pattern_rows([x, y, g], [(-1, 3), (1, -2, 3)])
    assert rows.tolist() == [[-1, 3, 0], [-4, 6, 0], [1, -2, 3], [4, -5, 6]]


def test_primal_graph_small():
    f = CnfFormula(3)
    f.add_clause([1, -2, 3])
    assert primal_graph(f).edge_set() == {(1, 2), (1, 3), (2, 3)}
    g = CnfFormula(2)
    g.add_clause([1])
    g.add_clause([-2])
    pg = primal_graph(g)
    assert pg.num_vertices == 2 and pg.edges.shape == (0, 2)


def _cooccurrence(f: CnfFormula) -> set[tuple[int, int]]:
    out = set()
    for clause in f.clauses:
        vs = sorted({abs(l) for l in clause})
        out.update(itertools.combinations(vs, 2))
    return out


def test_primal_graph_of_chain_encoding():
    half = encode_xor_chain([[1, 2]], 2)
    pg = primal_graph(half.formula)
    assert pg.edge_set() == _cooccurrence(half.formula)
    assert pg.num_vertices == half.formula.num_vars
    adj = pg.neighbors()
    assert all(v not in adj[v] for v in range(1, pg.num_vertices + 1))
    assert all(a in adj[b] for a, b in pg.edge_set())


def test_primal_graph_random():
    rng = np.random.default_rng(11)
    for _ in range(20):
        f = random_formula(rng, 9, 15, max_len=4)
        assert primal_graph(f).edge_set() == _cooccurrence(f)


def test_empty_formula_dimacs():
    assert format_dimacs(CnfFormula()) == "p cnf 0 0\n"
    f = parse_dimacs("p cnf 0 0\n")
    assert f.num_vars == 0 and f.num_clauses == 0


def test_dimacs_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    f = random_formula(rng, 12, 30)
    f.set_tag(3, "x[0][1]@copy=2")
    f.set_tag(7, "carry[1][0][2]")
    path = tmp_path / "f.cnf"
    dimacs_write(path, f)
    g = dimacs_read(path)
    assert g.num_vars == f.num_vars and g.clauses == f.clauses and g.tags == f.tags
    header = [l for l in path.read_text().splitlines() if l.startswith("p ")]
    assert header == [f"p cnf 12 {len(f.clauses)}"]


def test_encoder_output_round_trips():
    f = encode_xor_chain([[1, 2, 3], [0, 3]], 2).formula
    g = parse_dimacs(format_dimacs(f))
    assert format_dimacs(g) == format_dimacs(f)


def test_parser_accepts_loose_layout():
    text = "c hello\nc var 2 y\np cnf 3 2\n1 -2\n 3 0 -1\n0\n"
    f = parse_dimacs(text)
    assert f.clauses == [(1, -2, 3), (-1,)] and f.tag(2) == "y"


@pytest.mark.parametrize("text,line", [
    ("p cnf 2 1\n1 x 0\n", 2),
    ("1 2 0\np cnf 2 1\n", 1),
    ("p cnf 2 1\n1 -1 0\n", 2),
    ("p cnf 2 1\np cnf 2 1\n1 0\n", 2),
    ("p cnf 2 1\n3 0\n", 2),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as exc:
        parse_dimacs(text)
    assert exc.value.line == line


@pytest.mark.parametrize("text", ["p cnf 2 2\n1 0\n", "p cnf 2 1\n1 2\n", "c nothing\n"])
def test_parse_errors_without_line(text):
    with pytest.raises(ParseError):
        parse_dimacs(text)
