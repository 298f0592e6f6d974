"""Tree and path decompositions: validation, width, nice form and .td I/O.

Bags are stored in compressed form (flat variable array plus offsets), since
pipeline decompositions hold hundreds of thousands of bags.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numba
import numpy as np

from .cnf import PrimalGraph, int_tokens
from .errors import DecompositionError, ParameterError, ParseError


@dataclass(frozen=True)
class SpecialBag:
    bag: int
    variables: tuple[int, ...]


class Decomposition:
    """Bags over variables 1..num_vertices, tree edges between bag indices
    (0-based), a shape flag and named special bags."""

    def __init__(self, bag_vars: np.ndarray, bag_offsets: np.ndarray, edges: np.ndarray,
                 num_vertices: int, shape: str = "tree",
                 special: dict[str, SpecialBag] | None = None):
        if shape not in ("path", "tree"):
            raise ParameterError(f"shape must be 'path' or 'tree', got {shape!r}")
        self.bag_vars = np.asarray(bag_vars, dtype=np.int64)
        self.bag_offsets = np.asarray(bag_offsets, dtype=np.int64)
        self.edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.num_vertices = int(num_vertices)
        self.shape = shape
        self.special: dict[str, SpecialBag] = dict(special or {})
        if self.bag_offsets.size < 2:
            raise ParameterError("a decomposition needs at least one bag")

    @classmethod
    def from_bags(cls, bags: Sequence[Iterable[int]], edges: Iterable[tuple[int, int]],
                  num_vertices: int, shape: str = "tree",
                  special: dict[str, SpecialBag] | None = None) -> "Decomposition":
        lists = [list(dict.fromkeys(int(v) for v in b)) for b in bags]
        offsets = np.zeros(len(lists) + 1, dtype=np.int64)
        np.cumsum([len(b) for b in lists], out=offsets[1:])
        flat = np.fromiter((v for b in lists for v in b), dtype=np.int64, count=int(offsets[-1]))
        return cls(flat, offsets, np.array(list(edges), dtype=np.int64), num_vertices,
                   shape, special)

    @classmethod
    def path_from_bags(cls, bags: Sequence[Iterable[int]], num_vertices: int,
                       special: dict[str, SpecialBag] | None = None) -> "Decomposition":
        edges = [(i, i + 1) for i in range(len(bags) - 1)]
        return cls.from_bags(bags, edges, num_vertices, "path", special)

    @property
    def num_bags(self) -> int:
        return self.bag_offsets.size - 1

    def bag(self, i: int) -> tuple[int, ...]:
        return tuple(self.bag_vars[self.bag_offsets[i]:self.bag_offsets[i + 1]].tolist())

    @property
    def bags(self) -> list[tuple[int, ...]]:
        flat, offs = self.bag_vars.tolist(), self.bag_offsets.tolist()
        return [tuple(flat[offs[i]:offs[i + 1]]) for i in range(len(offs) - 1)]

    def bag_sizes(self) -> np.ndarray:
        return np.diff(self.bag_offsets)

    def width(self) -> int:
        return width(self)

    def __repr__(self) -> str:
        return (f"Decomposition({self.shape}, bags={self.num_bags}, width={self.width()}, "
                f"special={len(self.special)})")


def width(d: Decomposition) -> int:
    """Max bag size minus one; a lone empty bag gives -1."""
    return int(d.bag_sizes().max()) - 1


# --- validation --------------------------------------------------------------------

@dataclass
class ValidationReport:
    missing_vertices: list[int] = field(default_factory=list)
    uncovered_edges: list[tuple[int, int]] = field(default_factory=list)
    disconnected_vertices: list[int] = field(default_factory=list)
    structure_errors: list[str] = field(default_factory=list)
    width: int = -1

    @property
    def valid(self) -> bool:
        return not (self.missing_vertices or self.uncovered_edges
                    or self.disconnected_vertices or self.structure_errors)

    def summary(self) -> str:
        if self.valid:
            return f"valid, width {self.width}"
        parts = []
        if self.structure_errors:
            parts.append("; ".join(self.structure_errors))
        if self.missing_vertices:
            parts.append(f"{len(self.missing_vertices)} vertices in no bag")
        if self.uncovered_edges:
            parts.append(f"{len(self.uncovered_edges)} uncovered edges")
        if self.disconnected_vertices:
            parts.append(f"{len(self.disconnected_vertices)} vertices with disconnected bags")
        return "invalid: " + ", ".join(parts)


def _bag_index(d: Decomposition) -> np.ndarray:
    return np.repeat(np.arange(d.num_bags, dtype=np.int64), d.bag_sizes())


def _expand(d: Decomposition, bag_ids: np.ndarray, labels: np.ndarray):
    """Members of each listed bag, each paired with the matching label."""
    counts = d.bag_sizes()[bag_ids]
    starts = np.repeat(d.bag_offsets[bag_ids], counts)
    within = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    return np.repeat(labels, counts), d.bag_vars[starts + within]


@numba.njit(cache=True)
def _scan(bag_vars, bag_offsets, bags, query):
    out = np.zeros(query.size, dtype=np.bool_)
    for i in range(query.size):
        b = bags[i]
        for j in range(bag_offsets[b], bag_offsets[b + 1]):
            if bag_vars[j] == query[i]:
                out[i] = True
                break
    return out


@numba.njit(cache=True)
def _shared_counts(bag_vars, bag_offsets, edges, num_vertices):
    # per vertex, the number of tree edges whose two bags both hold it
    out = np.zeros(num_vertices + 1, dtype=np.int64)
    for i in range(edges.shape[0]):
        a, b = edges[i, 0], edges[i, 1]
        for j in range(bag_offsets[a], bag_offsets[a + 1]):
            v = bag_vars[j]
            for t in range(bag_offsets[b], bag_offsets[b + 1]):
                if bag_vars[t] == v:
                    out[v] += 1
                    break
    return out


@numba.njit(cache=True)
def _topmost(bag_vars, bag_offsets, depth, num_vertices):
    # shallowest bag holding each vertex; ties go to the lower bag index
    top = np.full(num_vertices + 1, -1, dtype=np.int64)
    top_depth = np.full(num_vertices + 1, np.iinfo(np.int64).max, dtype=np.int64)
    for b in range(bag_offsets.size - 1):
        for j in range(bag_offsets[b], bag_offsets[b + 1]):
            v = bag_vars[j]
            if depth[b] < top_depth[v]:
                top[v] = b
                top_depth[v] = depth[b]
    return top, top_depth


def _contains(d: "Decomposition", bags: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Whether bag bags[i] holds vertex query[i]; bags are short, so scan them."""
    bags, query = np.broadcast_arrays(np.asarray(bags, dtype=np.int64),
                                      np.asarray(query, dtype=np.int64))
    return _scan(d.bag_vars, d.bag_offsets, np.ascontiguousarray(bags).ravel(),
                 np.ascontiguousarray(query).ravel()).reshape(bags.shape)


@numba.njit(cache=True)
def _bfs(num_bags, adj_ptr, adj, root):
    parent = np.full(num_bags, -1, dtype=np.int64)
    depth = np.full(num_bags, -1, dtype=np.int64)
    order = np.empty(num_bags, dtype=np.int64)
    depth[root] = 0
    order[0] = root
    head, tail = 0, 1
    while head < tail:
        x = order[head]
        head += 1
        for j in range(adj_ptr[x], adj_ptr[x + 1]):
            y = adj[j]
            if depth[y] < 0:
                depth[y] = depth[x] + 1
                parent[y] = x
                order[tail] = y
                tail += 1
    return order[:tail], parent, depth


def _csr(num_rows: int, rows: np.ndarray, cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(rows, kind="stable")
    ptr = np.zeros(num_rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=num_rows), out=ptr[1:])
    return ptr, cols[order].astype(np.int64)


def _tree_order(num_bags: int, edges: np.ndarray, root: int):
    """BFS over the tree edges: (order, parent, depth); order lists reached bags."""
    e = edges.reshape(-1, 2)
    ptr, adj = _csr(num_bags, np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])
    return _bfs(num_bags, ptr, adj, root)


def validate(d: Decomposition, graph: PrimalGraph) -> ValidationReport:
    """Check coverage of vertices (T1) and edges (T2) and connectivity (T3)."""
    rep = ValidationReport(width=width(d))
    nb = d.num_bags
    if d.bag_vars.size and (d.bag_vars.min() < 1 or d.bag_vars.max() > graph.num_vertices):
        rep.structure_errors.append("bag mentions a vertex outside the graph")
        return rep
    if d.num_vertices != graph.num_vertices:
        rep.structure_errors.append(
            f"decomposition declares {d.num_vertices} vertices, graph has {graph.num_vertices}")
    e = d.edges
    if e.size and (e.min() < 0 or e.max() >= nb or np.any(e[:, 0] == e[:, 1])):
        rep.structure_errors.append("tree edge refers to an unknown bag or is a loop")
        return rep
    if len(e) != nb - 1:
        rep.structure_errors.append(f"{len(e)} edges for {nb} bags: not a tree")
    order, parent, depth = _tree_order(nb, e, 0)
    if len(order) != nb:
        rep.structure_errors.append("tree edges do not connect all bags")
    if d.shape == "path" and nb > 1:
        degree = np.bincount(e.ravel(), minlength=nb)
        if degree.max() > 2:
            rep.structure_errors.append("path-shaped decomposition has a bag of degree > 2")
    for name, sb in d.special.items():
        if not 0 <= sb.bag < nb:
            rep.structure_errors.append(f"special bag {name} points outside the bag list")
        elif not set(sb.variables) <= set(d.bag(sb.bag)):
            rep.structure_errors.append(f"special bag {name} lists variables not in its bag")
    if rep.structure_errors:
        return rep

    occ = np.bincount(d.bag_vars, minlength=graph.num_vertices + 1)
    rep.missing_vertices = (np.flatnonzero(occ[1:] == 0) + 1).tolist()

    # T3: the bags holding v induce a subtree iff (#bags with v) - (#tree edges
    # with v at both ends) == 1.
    shared_count = _shared_counts(d.bag_vars, d.bag_offsets, np.ascontiguousarray(e),
                                  graph.num_vertices)
    bad = (occ > 0) & (occ - shared_count != 1)
    bad[0] = False
    rep.disconnected_vertices = np.flatnonzero(bad).tolist()

    # T2: with connected occurrence sets, an edge (a, b) is covered iff the
    # deeper of the two topmost bags contains the other endpoint.
    if graph.edges.size:
        top, top_depth = _topmost(d.bag_vars, d.bag_offsets, depth, graph.num_vertices)
        a, b = graph.edges[:, 0], graph.edges[:, 1]
        present = (occ[a] > 0) & (occ[b] > 0)
        a_deeper = top_depth[a] >= top_depth[b]
        host = np.where(a_deeper, top[a], top[b])
        other = np.where(a_deeper, b, a)
        covered = present & _contains(d, host, other)
        suspicious = bad[a] | bad[b]
        if suspicious.any():
            for i in np.flatnonzero(suspicious & ~covered):
                bags_a = set(np.flatnonzero(_contains(d, np.arange(nb), a[i])).tolist())
                bags_b = set(np.flatnonzero(_contains(d, np.arange(nb), b[i])).tolist())
                covered[i] = bool(bags_a & bags_b)
        rep.uncovered_edges = [(int(x), int(y)) for x, y in graph.edges[~covered]]
    return rep


# --- nice form ----------------------------------------------------------------------

LEAF, INTRODUCE, FORGET, JOIN = 0, 1, 2, 3
KIND_NAMES = ("leaf", "introduce", "forget", "join")


@dataclass
class NiceDecomposition:
    """Rooted binary nice decomposition, nodes numbered in postorder.

    ``var[i]`` is the variable introduced or forgotten at node i (0 otherwise);
    ``left``/``right`` are child indices (-1 when absent). The root is the
    last node and has an empty bag. ``anchor`` is the node whose bag equals
    the bag the tree was rooted at.
    """

    kind: np.ndarray
    var: np.ndarray
    left: np.ndarray
    right: np.ndarray
    num_vars: int
    anchor: int
    width: int

    @property
    def num_nodes(self) -> int:
        return int(self.kind.size)

    @property
    def root(self) -> int:
        return self.num_nodes - 1

    def bags(self) -> list[frozenset[int]]:
        """Reconstruct every node's bag, walking from the root downwards."""
        n = self.num_nodes
        out: list[frozenset[int]] = [frozenset()] * n
        kind, var, left, right = (self.kind.tolist(), self.var.tolist(),
                                  self.left.tolist(), self.right.tolist())
        for i in range(n - 1, -1, -1):
            b = out[i]
            k = kind[i]
            if k == INTRODUCE:
                out[left[i]] = b - {var[i]}
            elif k == FORGET:
                out[left[i]] = b | {var[i]}
            elif k == JOIN:
                out[left[i]] = b
                out[right[i]] = b
        return out

    def as_decomposition(self) -> Decomposition:
        bags = self.bags()
        edges = [(i, int(c)) for i in range(self.num_nodes)
                 for c in (self.left[i], self.right[i]) if c >= 0]
        return Decomposition.from_bags([sorted(b) for b in bags], edges, self.num_vars)

    def check(self) -> None:
        """Structural checks, recomputing bags bottom-up: leaves and root empty,
        joins over equal bags, introduce/forget change exactly one variable."""
        up: list[frozenset[int]] = []
        for i in range(self.num_nodes):
            k = int(self.kind[i])
            a, b, v = int(self.left[i]), int(self.right[i]), int(self.var[i])
            if k != LEAF and not 0 <= a < i:
                raise DecompositionError(f"node {i} lacks a child numbered before it")
            if k == LEAF:
                up.append(frozenset())
            elif k == INTRODUCE:
                if v in up[a]:
                    raise DecompositionError(f"node {i} reintroduces variable {v}")
                up.append(up[a] | {v})
            elif k == FORGET:
                if v not in up[a]:
                    raise DecompositionError(f"node {i} forgets absent variable {v}")
                up.append(up[a] - {v})
            else:
                if not 0 <= b < i or up[a] != up[b]:
                    raise DecompositionError(f"join {i} has unequal or missing children")
                up.append(up[a])
        if up and up[self.root]:
            raise DecompositionError("root bag is not empty")


def to_nice(d: Decomposition, root: int | None = None, check: bool = False,
            graph: PrimalGraph | None = None) -> NiceDecomposition:
    """Nice form rooted at bag ``root`` (default: the first special bag, else bag 0).

    With ``check`` the input is validated first (``graph`` required).
    """
    if check:
        if graph is None:
            raise ParameterError("validation requested without a primal graph")
        rep = validate(d, graph)
        if not rep.valid:
            raise DecompositionError(rep.summary())
    if root is None:
        root = next(iter(d.special.values())).bag if d.special else 0
    nb = d.num_bags
    order, parent, _ = _tree_order(nb, d.edges, root)
    if len(order) != nb:
        raise DecompositionError("tree edges do not connect all bags")

    # Per non-root bag c: variables to forget (in c, not in parent) and to
    # introduce (in parent, not in c), computed in bulk.
    bag_of = _bag_index(d)
    par_of_member = parent[bag_of]
    has_parent = par_of_member >= 0
    forget_mask = has_parent & ~_contains(d, np.maximum(par_of_member, 0), d.bag_vars)
    child_bags = np.flatnonzero(parent >= 0)
    child_rep, parent_vars = _expand(d, parent[child_bags], child_bags)
    intro_mask = ~_contains(d, child_rep, parent_vars)

    f_ptr, f_vars = _csr(nb, bag_of[forget_mask], d.bag_vars[forget_mask])
    i_ptr, i_vars = _csr(nb, child_rep[intro_mask], parent_vars[intro_mask])
    ch_ptr, ch = _csr(nb, np.maximum(parent[order[1:]], 0), order[1:])
    kind, var, left, right, anchor = _emit_nice(root, parent, d.bag_vars, d.bag_offsets,
                                                f_ptr, f_vars, i_ptr, i_vars, ch_ptr, ch)
    return NiceDecomposition(kind, var, left, right, d.num_vertices, int(anchor), width(d))


@numba.njit(cache=True)
def _emit_nice(root, parent, bag_vars, bag_offsets, f_ptr, f_vars, i_ptr, i_vars, ch_ptr, ch):
    nb = parent.size
    # leaf introduce chains and the root's forget chain can both cover a
    # bag (a lone bag is leaf and root at once)
    cap = 2 * bag_vars.size + 2 * nb + f_vars.size + i_vars.size + 1
    kind = np.zeros(cap, dtype=np.int8)
    var = np.zeros(cap, dtype=np.int64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    count = 0
    acc = np.full(nb, -1, dtype=np.int64)
    # iterative postorder; each child's chain and join is emitted as soon as
    # the child is done, so every subtree occupies a contiguous node range
    stack_b = np.empty(nb, dtype=np.int64)
    stack_i = np.empty(nb, dtype=np.int64)
    stack_b[0] = root
    stack_i[0] = 0
    sp = 1
    anchor = -1
    while sp > 0:
        b = stack_b[sp - 1]
        i = stack_i[sp - 1]
        if ch_ptr[b] + i < ch_ptr[b + 1]:
            stack_i[sp - 1] = i + 1
            stack_b[sp] = ch[ch_ptr[b] + i]
            stack_i[sp] = 0
            sp += 1
            continue
        sp -= 1
        node = acc[b]
        if node < 0:
            kind[count] = 0
            node = count
            count += 1
            for j in range(bag_offsets[b], bag_offsets[b + 1]):
                kind[count] = 1
                var[count] = bag_vars[j]
                left[count] = node
                node = count
                count += 1
        p = parent[b]
        if p < 0:
            anchor = node
            for j in range(bag_offsets[b], bag_offsets[b + 1]):
                kind[count] = 2
                var[count] = bag_vars[j]
                left[count] = node
                node = count
                count += 1
            continue
        for j in range(f_ptr[b], f_ptr[b + 1]):
            kind[count] = 2
            var[count] = f_vars[j]
            left[count] = node
            node = count
            count += 1
        for j in range(i_ptr[b], i_ptr[b + 1]):
            kind[count] = 1
            var[count] = i_vars[j]
            left[count] = node
            node = count
            count += 1
        if acc[p] < 0:
            acc[p] = node
        else:
            kind[count] = 3
            left[count] = acc[p]
            right[count] = node
            acc[p] = count
            count += 1
    return kind[:count].copy(), var[:count].copy(), left[:count].copy(), right[:count].copy(), anchor


# --- .td I/O --------------------------------------------------------------------------

def format_td(d: Decomposition) -> str:
    lines = [f"c shape {d.shape}"]
    for name, sb in d.special.items():
        lines.append(f"c special {name} {sb.bag + 1}")
        lines.append(f"c special-vars {name} " + " ".join(map(str, sb.variables)))
    max_bag = int(d.bag_sizes().max())
    lines.append(f"s td {d.num_bags} {max_bag} {d.num_vertices}")
    for i, bag in enumerate(d.bags, 1):
        lines.append(" ".join(["b", str(i), *map(str, bag)]))
    lines.extend(f"{a + 1} {b + 1}" for a, b in d.edges.tolist())
    return "\n".join(lines) + "\n"


_TD_HEADER = re.compile(r"^s td (\d+) (\d+) (\d+)\s*$", re.M)


def _parse_td_fast(text: str) -> Decomposition | None:
    """Vectorized parse for files whose bags are listed in order 1..N; None
    defers to the line-by-line parser."""
    headers = _TD_HEADER.findall(text)
    if len(headers) != 1:
        return None
    num_bags, max_bag, nv = map(int, headers[0])
    lines = text.splitlines()
    comments = [l for l in lines if l.startswith("c")]
    bag_lines = [l[2:] for l in lines if l.startswith("b ")]
    edge_lines = [l for l in lines if l and l[0].isdigit()]
    if len(comments) + len(bag_lines) + len(edge_lines) + 1 != sum(1 for l in lines if l.strip()):
        return None
    if not bag_lines or len(bag_lines) != num_bags:
        return None
    head = next(i for i, l in enumerate(lines) if l.startswith("s td"))
    if any(not l.startswith("c") for l in lines[:head] if l.strip()):
        return None
    # mark each bag's id with a -1 in front of it
    tokens = int_tokens(" -1 ".join([""] + bag_lines))
    edge_tokens = int_tokens(" ".join(edge_lines))
    if tokens is None or edge_tokens is None or edge_tokens.size % 2:
        return None
    marks = np.flatnonzero(tokens == -1)
    if marks.size != num_bags or np.any(tokens[marks + 1] != np.arange(1, num_bags + 1)):
        return None
    sizes = np.diff(np.append(marks, tokens.size)) - 2
    keep = np.ones(tokens.size, dtype=bool)
    keep[marks] = keep[marks + 1] = False
    flat = tokens[keep]
    if flat.size and (flat.min() < 1 or flat.max() > nv):
        return None
    if int(sizes.max()) != max_bag:
        return None
    offsets = np.zeros(num_bags + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    owner = np.repeat(np.arange(num_bags), sizes)
    order = np.lexsort((flat, owner))
    if np.any((np.diff(owner[order]) == 0) & (np.diff(flat[order]) == 0)):
        return None
    edges = edge_tokens.reshape(-1, 2) - 1
    if edges.size and (edges.min() < 0 or edges.max() >= num_bags):
        return None
    shape = "tree"
    special_bag: dict[str, int] = {}
    special_vars: dict[str, tuple[int, ...]] = {}
    for line in comments:
        parts = line.split()
        if len(parts) >= 3 and parts[1] == "shape":
            shape = parts[2]
        elif len(parts) == 4 and parts[1] == "special":
            special_bag[parts[2]] = int(parts[3]) - 1
        elif len(parts) >= 3 and parts[1] == "special-vars":
            special_vars[parts[2]] = tuple(int(x) for x in parts[3:])
    if shape not in ("path", "tree"):
        return None
    special = {name: SpecialBag(idx, special_vars.get(name, ()))
               for name, idx in special_bag.items()}
    return Decomposition(flat, offsets, edges, nv, shape, special)


def parse_td(text: str) -> Decomposition:
    try:
        fast = _parse_td_fast(text)
    except ValueError:
        fast = None
    if fast is not None:
        return fast
    shape = "tree"
    special_bag: dict[str, int] = {}
    special_vars: dict[str, tuple[int, ...]] = {}
    header = None
    bags: dict[int, list[int]] = {}
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split()
        if not parts:
            continue
        try:
            if parts[0] == "c":
                if len(parts) >= 3 and parts[1] == "shape":
                    shape = parts[2]
                elif len(parts) == 4 and parts[1] == "special":
                    special_bag[parts[2]] = int(parts[3]) - 1
                elif len(parts) >= 3 and parts[1] == "special-vars":
                    special_vars[parts[2]] = tuple(int(x) for x in parts[3:])
                continue
            if parts[0] == "s":
                if header is not None or len(parts) != 5 or parts[1] != "td":
                    raise ParseError(f"bad solution line {raw!r}", lineno)
                header = tuple(int(x) for x in parts[2:])
                continue
            if header is None:
                raise ParseError("content before the 's td' line", lineno)
            if parts[0] == "b":
                idx = int(parts[1])
                if not 1 <= idx <= header[0] or idx in bags:
                    raise ParseError(f"bad or repeated bag id {idx}", lineno)
                bags[idx] = [int(x) for x in parts[2:]]
                continue
            if len(parts) != 2:
                raise ParseError(f"unrecognized line {raw!r}", lineno)
            a, b = int(parts[0]), int(parts[1])
            if not (1 <= a <= header[0] and 1 <= b <= header[0]):
                raise ParseError(f"edge {a} {b} refers to an unknown bag", lineno)
            edges.append((a - 1, b - 1))
        except ValueError as exc:
            raise ParseError(f"non-integer field in {raw!r}", lineno) from exc
    if header is None:
        raise ParseError("missing 's td' line")
    num_bags, max_bag, nv = header
    if len(bags) != num_bags:
        raise ParseError(f"header announces {num_bags} bags, found {len(bags)}")
    ordered = [bags[i] for i in range(1, num_bags + 1)]
    if max(len(b) for b in ordered) != max_bag:
        raise ParseError("header bag size disagrees with the bags")
    if shape not in ("path", "tree"):
        raise ParseError(f"unknown shape {shape!r}")
    special = {name: SpecialBag(idx, special_vars.get(name, ()))
               for name, idx in special_bag.items()}
    return Decomposition.from_bags(ordered, edges, nv, shape, special)


def td_write(path: str | Path, d: Decomposition) -> None:
    Path(path).write_text(format_td(d))


def td_read(path: str | Path) -> Decomposition:
    return parse_td(Path(path).read_text())
