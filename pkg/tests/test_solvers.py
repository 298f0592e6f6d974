import itertools

import numpy as np
import pytest

from helpers import elimination_decomposition, random_formula
from twsum.cnf import CnfFormula, primal_graph
from twsum.decomp import Decomposition, to_nice, validate
from twsum.encode import glue_xor
from twsum.errors import DecompositionError, ParameterError, ResourceError
from twsum.instances import (
    KSumInstance,
    KXorInstance,
    generate_no_solution,
    generate_planted,
    random_instance,
    verify_witness,
)
from twsum.seeds import make_rng
from twsum.solvers import (
    bits_to_int,
    brute_force,
    brute_sat,
    extendable_bag_values,
    meet_in_the_middle,
    solve_td,
)


def test_brute_force_finds_planted():
    for seed in range(10):
        inst, planted = generate_planted("xor", 4, 8, 12, seed)
        w = brute_force(inst)
        assert w is not None and verify_witness(inst, w)
        assert w.indices <= planted.indices


def test_brute_force_is_lexicographically_first():
    inst = KXorInstance(2, 4, 3, ((1, 2, 3, 2), (5, 3, 2, 2)))
    naive = next(t for t in itertools.product(range(1, 5), repeat=2)
                 if inst.arrays[0][t[0] - 1] == inst.arrays[1][t[1] - 1])
    assert brute_force(inst).indices == naive == (2, 3)


def test_no_solution_instances():
    for seed in range(5):
        inst = generate_no_solution("sum", 4, 16, 300, seed)
        assert brute_force(inst) is None and meet_in_the_middle(inst) is None


def test_k2_degenerate_cases():
    x = KXorInstance(2, 2, 3, ((1, 6), (7, 6)))
    assert meet_in_the_middle(x).indices == (2, 2)
    s = KSumInstance(2, 4, ((4, -3, 9, 9), (5, 3, 8, 8)))
    w = meet_in_the_middle(s)
    assert w.indices == (2, 2) and verify_witness(s, w)


def test_oracles_agree():
    rng = make_rng(8)
    found = 0
    for _ in range(100):
        kind = "xor" if rng.random() < 0.5 else "sum"
        inst = random_instance(kind, 4, 4, 6 if kind == "xor" else 12, rng)
        a, b = brute_force(inst), meet_in_the_middle(inst)
        assert (a is None) == (b is None)
        if b is not None:
            found += 1
            assert verify_witness(inst, a) and verify_witness(inst, b)
    assert 0 < found < 100


def test_planted_mitm_k4_n8():
    inst, _ = generate_planted("sum", 4, 16, 1000, 3)
    assert verify_witness(inst, meet_in_the_middle(inst))


def test_oracle_budgets():
    inst = random_instance("xor", 4, 16, 8, make_rng(0))
    with pytest.raises(ResourceError):
        brute_force(inst, budget=1000)
    with pytest.raises(ResourceError):
        meet_in_the_middle(inst, budget=10)


def test_brute_sat_examples():
    f = CnfFormula(1)
    f.add_clause([1])
    assert brute_sat(f).count == 1
    g = CnfFormula(2)
    g.add_clause([1, 2])
    res = brute_sat(g)
    assert res.sat and res.count == 3 and g.satisfied_by(res.model)
    with pytest.raises(ResourceError):
        brute_sat(CnfFormula(30))


def test_empty_formula():
    f = CnfFormula()
    d = Decomposition.from_bags([[]], [], 0)
    res = solve_td(f, d, mode="count")
    assert res.sat and res.count == 1
    g = CnfFormula(3)
    res = solve_td(g, Decomposition.from_bags([[1, 2, 3]], [], 3), mode="count")
    assert res.count == 8


def test_contradiction():
    f = CnfFormula(1)
    f.add_clause([1])
    f.add_clause([-1])
    d = Decomposition.from_bags([[1]], [], 1)
    assert not solve_td(f, d).sat
    assert solve_td(f, d, mode="count").count == 0


@pytest.mark.parametrize("engine", ["numba", "python"])
def test_solve_td_matches_brute_sat(engine):
    rng = np.random.default_rng(21)
    for _ in range(60):
        n = int(rng.integers(1, 12))
        f = random_formula(rng, n, int(rng.integers(0, 3 * n)))
        d = elimination_decomposition(f, list(rng.permutation(n) + 1))
        ref = brute_sat(f)
        res = solve_td(f, d, engine=engine)
        assert res.sat == ref.sat
        if res.sat:
            assert f.satisfied_by(res.model)
        if engine == "python":
            assert solve_td(f, d, mode="count").count == ref.count


def test_table_sizes_bounded():
    rng = np.random.default_rng(2)
    for _ in range(20):
        f = random_formula(rng, 10, 12)
        d = elimination_decomposition(f, list(range(1, 11)))
        assert solve_td(f, d).max_table <= 1 << (d.width() + 1)


def test_counts_overflow_int64():
    f = CnfFormula(70)
    d = Decomposition.path_from_bags([[v] for v in range(1, 71)], 70)
    assert solve_td(f, d, mode="count").count == 1 << 70


def test_solver_errors():
    f = CnfFormula(2)
    f.add_clause([1, 2])
    split = Decomposition.from_bags([[1], [2]], [(0, 1)], 2)
    with pytest.raises(DecompositionError):
        solve_td(f, split)
    with pytest.raises(ResourceError):
        solve_td(f, Decomposition.from_bags([[1, 2]], [], 2), budget=0)
    with pytest.raises(ParameterError):
        solve_td(f, Decomposition.from_bags([[1, 2]], [], 2), mode="enumerate")
    with pytest.raises(ParameterError):
        solve_td(f, Decomposition.from_bags([[1, 2]], [], 2), mode="count", engine="numba")


def test_solve_accepts_nice_input():
    rng = np.random.default_rng(4)
    f = random_formula(rng, 8, 10)
    d = elimination_decomposition(f, list(range(1, 9)))
    assert solve_td(f, to_nice(d)).sat == solve_td(f, d).sat == brute_sat(f).sat


def test_extendable_values_on_glued():
    g = glue_xor([[0b10]], [[0b10]], 2)
    assert extendable_bag_values(g.formula, g.decomposition, "special") == {(0, 1)}
    g = glue_xor([[0b10]], [[0b01]], 2)
    assert extendable_bag_values(g.formula, g.decomposition, "special") == set()


def test_extendable_values_by_index_and_engine():
    g = glue_xor([[1, 2, 3]], [[2, 3]], 2)
    bag = g.special_bag
    by_name = extendable_bag_values(g.formula, g.decomposition, "special")
    by_index = extendable_bag_values(g.formula, g.decomposition, bag, g.special_vars)
    slow = extendable_bag_values(g.formula, g.decomposition, "special", engine="python")
    assert by_name == by_index == slow == {(0, 1), (1, 1)}
    with pytest.raises(ParameterError):
        extendable_bag_values(g.formula, g.decomposition, bag, [g.formula.num_vars + 99])


def test_bits_to_int():
    assert bits_to_int((1, 0, 1)) == 5
    assert bits_to_int(()) == 0
