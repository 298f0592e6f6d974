"""Max-2-SAT -> weighted Max-Cut gadget, unweighting, and brute-force checks.

Gadget for a 2-CNF with m clauses (vertex ids are 1-based):

* one vertex per variable, then a special vertex s0;
* per clause (l1 v l2): vertices c1, c2 forming a weight-1 triangle with s0;
* positive literal x: path c - p - x, both edges of weight 2m;
* negative literal ~x: edge c - x of weight 4m.

Every literal contributes 4m when its heavy edges are cut, which forces c
onto the literal's "true" side (away from s0 exactly when the literal holds).
A triangle is cut (value 2) iff some clause vertex is away from s0. Hence the
max cut is 8m² + 2·(max satisfiable clauses) and the decision target for t
clauses is 8m² + 2t.

Unit clauses are padded to (l v l) by default, which keeps that target. With
``units="collapse"`` a unit clause instead gets a single vertex c joined to s0
by an edge of weight 2. The target is then 4m·(literal vertices) + 2t.

File formats::

    p max2sat <num_vars> <num_clauses> <t>     then one clause per line, DIMACS style
    p maxcut <num_vertices> <num_edges> <target>
    e <a> <b> <w>
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .cnf import PrimalGraph
from .decomp import Decomposition
from .errors import DecompositionError, ParameterError, ParseError, ResourceError

MAX_SAT_VARS = 16
MAX_CUT_VERTICES = 24


@dataclass(frozen=True)
class Max2SatInstance:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]
    target: int

    def __post_init__(self):
        for c in self.clauses:
            if not 1 <= len(c) <= 2:
                raise ParameterError(f"clause {c} must have one or two literals")
            if any(l == 0 or abs(l) > self.num_vars for l in c):
                raise ParameterError(f"clause {c} mentions an unknown variable")
        if not 0 <= self.target <= len(self.clauses):
            raise ParameterError(f"target {self.target} outside [0, {len(self.clauses)}]")

    @property
    def m(self) -> int:
        return len(self.clauses)

    def with_target(self, t: int) -> "Max2SatInstance":
        return Max2SatInstance(self.num_vars, self.clauses, t)

    def satisfied_count(self, assignment: Sequence[bool]) -> int:
        """``assignment[v - 1]`` is the value of variable v."""
        return sum(any((l > 0) == bool(assignment[abs(l) - 1]) for l in c)
                   for c in self.clauses)


@dataclass
class WeightedGraph:
    """Undirected multigraph on vertices 1..num_vertices with positive integer weights."""

    num_vertices: int
    edges: list[tuple[int, int, int]] = field(default_factory=list)
    target: int = 0
    roles: dict[int, str] = field(default_factory=dict)

    def add_vertex(self, role: str) -> int:
        self.num_vertices += 1
        self.roles[self.num_vertices] = role
        return self.num_vertices

    def add_edge(self, a: int, b: int, w: int = 1) -> None:
        if a == b:
            raise ParameterError("self-loops are not allowed")
        if w < 1 or int(w) != w:
            raise ParameterError(f"weight {w} is not a positive integer")
        self.edges.append((a, b, int(w)))

    def total_weight(self) -> int:
        return sum(w for _, _, w in self.edges)

    def cut_value(self, side: Sequence[bool]) -> int:
        """``side[v - 1]`` tells which side vertex v is on."""
        return sum(w for a, b, w in self.edges if side[a - 1] != side[b - 1])


@dataclass
class GadgetGraph:
    graph: WeightedGraph
    s0: int
    var_vertex: list[int]
    clause_vertices: list[tuple[int, ...]]
    midpoints: list[list[int | None]]
    base: int                  # target minus 2t

    def target_for(self, t: int) -> int:
        return self.base + 2 * t

    def decode(self, side: Sequence[bool]) -> list[bool]:
        """Variables on s0's side are false."""
        s = side[self.s0 - 1]
        return [side[v - 1] != s for v in self.var_vertex]


def max2sat_to_maxcut(inst: Max2SatInstance, units: str = "pad") -> GadgetGraph:
    if units not in ("pad", "collapse"):
        raise ParameterError(f"units must be 'pad' or 'collapse', got {units!r}")
    m = inst.m
    g = WeightedGraph(0)
    var_vertex = [g.add_vertex(f"var {v}") for v in range(1, inst.num_vars + 1)]
    s0 = g.add_vertex("s0")
    clause_vertices, midpoints = [], []
    literal_vertices = 0
    for ci, clause in enumerate(inst.clauses, 1):
        lits = clause * 2 if len(clause) == 1 and units == "pad" else clause
        cs = tuple(g.add_vertex(f"clause {ci} literal {j}") for j in range(1, len(lits) + 1))
        if len(cs) == 2:
            g.add_edge(cs[0], cs[1], 1)
            g.add_edge(cs[0], s0, 1)
            g.add_edge(cs[1], s0, 1)
        else:
            g.add_edge(cs[0], s0, 2)
        mids: list[int | None] = []
        for j, (c, lit) in enumerate(zip(cs, lits), 1):
            x = var_vertex[abs(lit) - 1]
            if lit > 0:
                p = g.add_vertex(f"clause {ci} literal {j} midpoint")
                g.add_edge(c, p, 2 * m)
                g.add_edge(p, x, 2 * m)
                mids.append(p)
            else:
                g.add_edge(c, x, 4 * m)
                mids.append(None)
        literal_vertices += len(cs)
        clause_vertices.append(cs)
        midpoints.append(mids)
    base = 4 * m * literal_vertices
    g.target = base + 2 * inst.target
    return GadgetGraph(g, s0, var_vertex, clause_vertices, midpoints, base)


def weighted_to_unweighted(g: WeightedGraph) -> tuple[WeightedGraph, WeightedGraph]:
    """(parallel-edge form, simple form). A weight-w edge becomes w parallel
    edges; then every edge becomes a path of length 3, adding 2 to the target
    per edge."""
    multi = WeightedGraph(g.num_vertices, [], g.target, dict(g.roles))
    for a, b, w in g.edges:
        for _ in range(w):
            multi.add_edge(a, b, 1)
    simple = WeightedGraph(g.num_vertices, [], g.target + 2 * len(multi.edges), dict(g.roles))
    for i, (a, b, _) in enumerate(multi.edges, 1):
        p = simple.add_vertex(f"edge {i} inner 1")
        q = simple.add_vertex(f"edge {i} inner 2")
        simple.add_edge(a, p)
        simple.add_edge(p, q)
        simple.add_edge(q, b)
    return multi, simple


# --- brute force ---------------------------------------------------------------------

def max2sat_brute(inst: Max2SatInstance,
                  max_vars: int = MAX_SAT_VARS) -> tuple[int, list[bool]]:
    """Maximum number of satisfiable clauses and the smallest assignment achieving it."""
    n = inst.num_vars
    if n > max_vars:
        raise ResourceError(f"{n} variables exceed the brute-force budget of {max_vars}")
    masks = np.arange(1 << n, dtype=np.int64)
    count = np.zeros(masks.size, dtype=np.int64)
    for c in inst.clauses:
        sat = np.zeros(masks.size, dtype=bool)
        for l in c:
            val = (masks >> (abs(l) - 1)) & 1
            sat |= val == (1 if l > 0 else 0)
        count += sat
    best = int(np.argmax(count)) if masks.size else 0
    return int(count[best]) if count.size else 0, [bool((best >> i) & 1) for i in range(n)]


def _cut_values(g: WeightedGraph) -> np.ndarray:
    """Cut value of every bipartition with vertex 1 on side 0 (bit v-2 = side of v)."""
    nv = g.num_vertices
    if nv > MAX_CUT_VERTICES:
        raise ResourceError(f"{nv} vertices exceed the brute-force budget of {MAX_CUT_VERTICES}")
    masks = np.arange(1 << max(nv - 1, 0), dtype=np.int64)
    side = lambda v: np.zeros_like(masks) if v == 1 else (masks >> (v - 2)) & 1  # noqa: E731
    values = np.zeros(masks.size, dtype=np.int64)
    for a, b, w in g.edges:
        values += w * (side(a) ^ side(b))
    return values


def _mask_to_side(mask: int, nv: int) -> list[bool]:
    return [False] + [bool((mask >> (v - 2)) & 1) for v in range(2, nv + 1)]


def maxcut_brute(g: WeightedGraph) -> tuple[int, list[bool]]:
    values = _cut_values(g)
    best = int(np.argmax(values))
    return int(values[best]), _mask_to_side(best, g.num_vertices)


@dataclass
class PairReport:
    opt_sat: int
    opt_cut: int
    base: int
    rows: list[tuple[int, bool, bool]]       # (t, sat reaches t, cut reaches target)
    heavy_cut_in_all_optima: bool
    decoded_optimum: bool                    # decoding an optimal cut reaches opt_sat

    @property
    def equivalent(self) -> bool:
        return all(a == b for _, a, b in self.rows)

    @property
    def ok(self) -> bool:
        return self.equivalent and self.heavy_cut_in_all_optima and self.decoded_optimum


def verify_reduction_pair(inst: Max2SatInstance, gadget: GadgetGraph) -> PairReport:
    """For every t: max cut >= target(t) iff some assignment satisfies >= t clauses."""
    opt_sat, _ = max2sat_brute(inst)
    values = _cut_values(gadget.graph)
    opt_cut = int(values.max())
    rows = [(t, opt_sat >= t, opt_cut >= gadget.target_for(t)) for t in range(inst.m + 1)]
    heavy = [(a, b) for a, b, w in gadget.graph.edges if w > 2]
    nv = gadget.graph.num_vertices
    all_cut = True
    decoded = True
    for mask in np.flatnonzero(values == opt_cut).tolist():
        side = _mask_to_side(mask, nv)
        if any(side[a - 1] == side[b - 1] for a, b in heavy):
            all_cut = False
        if inst.satisfied_count(gadget.decode(side)) != opt_sat:
            decoded = False
    return PairReport(opt_sat, opt_cut, gadget.base, rows, all_cut, decoded)


# --- decompositions -------------------------------------------------------------------

def gadget_decomposition(inst: Max2SatInstance, gadget: GadgetGraph,
                         d: Decomposition) -> Decomposition:
    """Decomposition of the gadget graph from one of the 2-CNF's primal graph.

    s0 joins every bag. Each clause gets a bag {x1, x2, s0, c1, c2} hung off a
    bag holding x1 and x2, and each midpoint p gets a bag {c, p, x} below it.
    Width becomes max(w + 1, 4).
    """
    bags = [list(b) + [gadget.s0] for b in d.bags]
    edges = [tuple(e) for e in d.edges.tolist()]
    holders: dict[int, set[int]] = {}
    for i, b in enumerate(d.bags):
        for v in b:
            holders.setdefault(v, set()).add(i)
    for ci, clause in enumerate(inst.clauses):
        vs = sorted({abs(l) for l in clause})
        common = set.intersection(*(holders.get(v, set()) for v in vs))
        if not common:
            raise DecompositionError(f"no bag holds the variables of clause {ci + 1}")
        host = min(common)
        cs = gadget.clause_vertices[ci]
        cbag = len(bags)
        bags.append([gadget.var_vertex[v - 1] for v in vs] + [gadget.s0, *cs])
        edges.append((host, cbag))
        lits = clause * 2 if len(cs) == 2 and len(clause) == 1 else clause
        for c, lit, p in zip(cs, lits, gadget.midpoints[ci]):
            if p is not None:
                edges.append((cbag, len(bags)))
                bags.append([c, p, gadget.var_vertex[abs(lit) - 1]])
    if not bags:
        bags = [[gadget.s0]]
    return Decomposition.from_bags(bags, edges, gadget.graph.num_vertices)


def graph_as_primal(g: WeightedGraph) -> PrimalGraph:
    """Underlying simple graph, in the form ``decomp.validate`` expects."""
    e = {(min(a, b), max(a, b)) for a, b, _ in g.edges}
    return PrimalGraph(g.num_vertices, np.array(sorted(e), dtype=np.int64).reshape(-1, 2))


# --- file formats --------------------------------------------------------------------

def format_max2sat(inst: Max2SatInstance) -> str:
    lines = [f"p max2sat {inst.num_vars} {inst.m} {inst.target}"]
    lines += [" ".join(map(str, c)) + " 0" for c in inst.clauses]
    return "\n".join(lines) + "\n"


def _data_lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line and not line.startswith("c") and not line.startswith("#"):
            yield no, line.split()


def parse_max2sat(text: str) -> Max2SatInstance:
    header = None
    clauses: list[tuple[int, ...]] = []
    for no, tok in _data_lines(text):
        if tok[0] == "p":
            if header is not None or len(tok) != 5 or tok[1] != "max2sat":
                raise ParseError("expected 'p max2sat <vars> <clauses> <t>'", no)
            try:
                header = tuple(int(x) for x in tok[2:])
            except ValueError:
                raise ParseError("non-integer header field", no) from None
            continue
        if header is None:
            raise ParseError("clause before header", no)
        try:
            lits = [int(x) for x in tok]
        except ValueError:
            raise ParseError("non-integer literal", no) from None
        if lits[-1] != 0 or 0 in lits[:-1]:
            raise ParseError("clause must end with a single 0", no)
        clauses.append(tuple(lits[:-1]))
    if header is None:
        raise ParseError("missing header")
    n, m, t = header
    if len(clauses) != m:
        raise ParseError(f"header announces {m} clauses, found {len(clauses)}")
    try:
        return Max2SatInstance(n, tuple(clauses), t)
    except ParameterError as exc:
        raise ParseError(str(exc)) from None


def format_maxcut(g: WeightedGraph) -> str:
    lines = [f"p maxcut {g.num_vertices} {len(g.edges)} {g.target}"]
    lines += [f"e {a} {b} {w}" for a, b, w in g.edges]
    return "\n".join(lines) + "\n"


def parse_maxcut(text: str) -> WeightedGraph:
    g = None
    count = 0
    for no, tok in _data_lines(text):
        try:
            vals = [int(x) for x in tok[1:] if x != "maxcut"]
        except ValueError:
            raise ParseError("non-integer field", no) from None
        if tok[0] == "p":
            if g is not None or len(tok) != 5 or tok[1] != "maxcut":
                raise ParseError("expected 'p maxcut <n> <m> <target>'", no)
            g = WeightedGraph(vals[0], [], vals[2])
            count = vals[1]
        elif tok[0] == "e":
            if g is None:
                raise ParseError("edge before header", no)
            if len(vals) != 3 or not all(1 <= v <= g.num_vertices for v in vals[:2]):
                raise ParseError("bad edge line", no)
            try:
                g.add_edge(*vals)
            except ParameterError as exc:
                raise ParseError(str(exc), no) from None
        else:
            raise ParseError(f"unknown line type {tok[0]!r}", no)
    if g is None:
        raise ParseError("missing header")
    if len(g.edges) != count:
        raise ParseError(f"header announces {count} edges, found {len(g.edges)}")
    return g


def write_gadget(prefix: str | Path, gadget: GadgetGraph) -> list[Path]:
    """``prefix.maxcut`` plus ``prefix.roles.json`` (vertex provenance)."""
    prefix = Path(prefix)
    graph_path = prefix.with_name(prefix.name + ".maxcut")
    roles_path = prefix.with_name(prefix.name + ".roles.json")
    graph_path.write_text(format_maxcut(gadget.graph))
    roles = {"s0": gadget.s0, "base": gadget.base,
             "roles": {str(v): r for v, r in sorted(gadget.graph.roles.items())}}
    roles_path.write_text(json.dumps(roles, sort_keys=True, indent=1) + "\n")
    return [graph_path, roles_path]
