"""Shared builders for the test suite."""

from __future__ import annotations

import itertools

import numpy as np

from twsum.cnf import CnfFormula, primal_graph
from twsum.decomp import Decomposition


def random_formula(rng: np.random.Generator, num_vars: int, num_clauses: int,
                   max_len: int = 3) -> CnfFormula:
    f = CnfFormula(num_vars)
    for _ in range(num_clauses):
        size = int(rng.integers(1, min(max_len, num_vars) + 1))
        vs = rng.choice(num_vars, size=size, replace=False) + 1
        signs = rng.choice([-1, 1], size=size)
        f.add_clause((vs * signs).tolist())
    return f


def elimination_decomposition(f: CnfFormula, order: list[int]) -> Decomposition:
    """Tree decomposition from eliminating variables in ``order``: bag of v is
    v plus its later neighbours; its parent is the earliest of those."""
    adj = primal_graph(f).neighbors()
    pos = {v: i for i, v in enumerate(order)}
    bags, parents = [], []
    for v in order:
        later = {w for w in adj[v] if pos[w] > pos[v]}
        bags.append([v, *sorted(later)])
        for a in later:
            adj[a] |= later - {a}
        parents.append(min(later, key=pos.get) if later else None)
    edges = []
    for i, p in enumerate(parents):
        if p is not None:
            edges.append((i, pos[p]))
        elif i != len(order) - 1:
            edges.append((i, len(order) - 1))
    if not order:
        return Decomposition.from_bags([[]], [], 0)
    return Decomposition.from_bags(bags, edges, f.num_vars)


# --- constructible-sum oracles ----------------------------------------------------------

def xor_constructible(arrays, u: int) -> set[tuple[int, ...]]:
    """Bits (lsb first) of every XOR of one element per array."""
    out = set()
    for pick in itertools.product(*arrays):
        v = 0
        for x in pick:
            v ^= x
        out.add(tuple((v >> b) & 1 for b in range(u)))
    return out


def sum_constructible(arrays, widths) -> set[tuple[int, ...]]:
    """Bits (component-major, lsb first) of every componentwise sum mod 2**w."""
    out = set()
    for pick in itertools.product(*arrays):
        bits = []
        for j, w in enumerate(widths):
            s = sum(vec[j] for vec in pick) % (1 << w)
            bits += [(s >> b) & 1 for b in range(w)]
        out.add(tuple(bits))
    return out


def multisets(values, max_size: int):
    """Nonempty nondecreasing tuples over ``values`` of length <= max_size."""
    for size in range(1, max_size + 1):
        yield from itertools.combinations_with_replacement(values, size)


def xor_family(max_arrays: int = 2, max_n: int = 3, max_u: int = 3):
    """(arrays, u) for every XOR instance up to reordering and repetition inside an array."""
    for u in range(1, max_u + 1):
        arrays = list(multisets(range(1 << u), max_n))
        for count in range(1, max_arrays + 1):
            for combo in itertools.product(arrays, repeat=count):
                yield [list(a) for a in combo], u


def width_layouts(max_dim: int = 2, max_total: int = 4):
    for d in range(1, max_dim + 1):
        for ws in itertools.product(range(1, max_total + 1), repeat=d):
            if sum(ws) <= max_total:
                yield ws


def sum_family(max_dim: int = 2, max_total: int = 4, max_arrays: int = 2, max_n: int = 2):
    """(arrays, widths) for every SUM instance up to reordering and repetition inside an array."""
    for widths in width_layouts(max_dim, max_total):
        vectors = list(itertools.product(*(range(1 << w) for w in widths)))
        arrays = list(multisets(vectors, max_n))
        for count in range(1, max_arrays + 1):
            for combo in itertools.product(arrays, repeat=count):
                yield [list(a) for a in combo], widths


def random_2cnf(rng: np.random.Generator, max_vars: int = 4, max_clauses: int = 4):
    """(num_vars, clauses) with 1..max_clauses clauses of one or two distinct variables."""
    n = int(rng.integers(1, max_vars + 1))
    clauses = []
    for _ in range(int(rng.integers(1, max_clauses + 1))):
        size = 1 if n == 1 else int(rng.integers(1, 3))
        vs = rng.choice(n, size=size, replace=False) + 1
        clauses.append(tuple(int(v) * int(s) for v, s in zip(vs, rng.choice([-1, 1], size=size))))
    return n, tuple(clauses)


def best_cut(num_vertices: int, edges) -> int:
    """Maximum cut by plain enumeration of sides."""
    best = 0
    for side in itertools.product([0, 1], repeat=num_vertices):
        best = max(best, sum(w for a, b, w in edges if side[a - 1] != side[b - 1]))
    return best
