"""Ground-truth oracles and the tree-decomposition DP SAT solver.

The DP works on a compiled "program": the nice decomposition in postorder,
each variable mapped to a fixed bit slot (reused once the variable is
forgotten), and each clause attached, as two bitmasks (positive / negative
literals), to an introduce node whose bag holds all of its variables.
A table is the set of bag assignments (bitmasks over slots) that extend to
the clauses checked so far below the node.

Two engines run the same program: a numba kernel over sorted int64 arrays
(decision only) and a dictionary engine (decision or exact model counting).
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from functools import reduce
from operator import xor
from typing import Sequence

import numba
import numpy as np

from .cnf import CnfFormula
from .decomp import FORGET, INTRODUCE, JOIN, LEAF, Decomposition, NiceDecomposition, to_nice
from .errors import DecompositionError, ParameterError, ResourceError
from .instances import Instance, SolutionWitness, half_sum

DEFAULT_WIDTH_BUDGET = 26
DEFAULT_TUPLE_BUDGET = 10 ** 7
# table rows kept for model recovery (8 bytes each)
DEFAULT_KEEP_LIMIT = 2 * 10 ** 7


def width_budget_default() -> int:
    env = os.environ.get("TWSUM_BUDGET")
    return int(env) if env else DEFAULT_WIDTH_BUDGET


# --- k-SUM / k-XOR oracles ------------------------------------------------------------

def _combine(inst: Instance):
    if inst.kind == "xor":
        return lambda vals: reduce(xor, vals, 0)
    return sum


def _target_of_right(inst: Instance, right_value: int) -> int:
    # value the first half must reach for a solution
    if inst.kind == "xor" or getattr(inst, "balanced", False):
        return right_value
    return -right_value


def brute_force(inst: Instance, budget: int = DEFAULT_TUPLE_BUDGET) -> SolutionWitness | None:
    """First solution in lexicographic order of index tuples, or None.

    The last index is found by lookup rather than a loop; the visiting order
    and the answer are those of the plain n^k scan.
    """
    if inst.n ** inst.k > budget:
        raise ResourceError(f"n^k = {inst.n ** inst.k} exceeds tuple budget {budget}")
    half = inst.k // 2
    combine = _combine(inst)
    last: dict[int, int] = {}
    for i, v in enumerate(inst.arrays[-1]):
        last.setdefault(v, i)
    for prefix in itertools.product(range(inst.n), repeat=inst.k - 1):
        vals = [inst.arrays[j][prefix[j]] for j in range(inst.k - 1)]
        left = combine(vals[:half])
        rest = combine(vals[half:])
        if inst.kind == "xor":
            need = left ^ rest
        elif inst.balanced:
            need = left - rest
        else:
            need = -left - rest
        i = last.get(need)
        if i is not None:
            indices = tuple(p + 1 for p in prefix) + (i + 1,)
            return SolutionWitness(indices, half_sum(inst, indices))
    return None


def meet_in_the_middle(inst: Instance,
                       budget: int = DEFAULT_TUPLE_BUDGET) -> SolutionWitness | None:
    half = inst.k // 2
    if inst.n ** half > budget:
        raise ResourceError(f"n^(k/2) = {inst.n ** half} exceeds tuple budget {budget}")
    combine = _combine(inst)
    left: dict[int, tuple[int, ...]] = {}
    for idx in itertools.product(range(inst.n), repeat=half):
        value = combine([inst.arrays[j][idx[j]] for j in range(half)])
        left.setdefault(value, idx)
    for idx in itertools.product(range(inst.n), repeat=inst.k - half):
        value = combine([inst.arrays[half + j][idx[j]] for j in range(inst.k - half)])
        hit = left.get(_target_of_right(inst, value))
        if hit is not None:
            indices = tuple(i + 1 for i in hit + idx)
            return SolutionWitness(indices, half_sum(inst, indices))
    return None


# --- brute-force SAT -------------------------------------------------------------------

@dataclass
class SatResult:
    sat: bool
    count: int | None = None
    model: list[bool] | None = None
    max_table: int = 0
    note: str = ""


def brute_sat(f: CnfFormula, max_vars: int = 24, chunk: int = 1 << 16) -> SatResult:
    """Exhaustive truth-table evaluation; ``model`` is the smallest satisfying
    assignment read as a binary number with variable 1 as the low bit."""
    n = f.num_vars
    if n > max_vars:
        raise ResourceError(f"{n} variables exceed the brute-force limit {max_vars}")
    lits, offsets = f.csr()
    var_idx = np.abs(lits) - 1
    positive = lits > 0
    starts = offsets[:-1]
    count = 0
    model = None
    total = 1 << n
    for lo in range(0, total, chunk):
        rows = np.arange(lo, min(total, lo + chunk), dtype=np.int64)
        if lits.size:
            bits = ((rows[:, None] >> var_idx[None, :]) & 1).astype(bool)
            true_lit = bits == positive[None, :]
            ok = np.add.reduceat(true_lit.astype(np.int8), starts, axis=1) > 0
            good = ok.all(axis=1)
        else:
            good = np.ones(rows.size, dtype=bool)
        count += int(good.sum())
        if model is None and good.any():
            m = int(rows[np.argmax(good)])
            model = [False] + [bool((m >> i) & 1) for i in range(n)]
    return SatResult(count > 0, count, model)


# --- compiled DP program ----------------------------------------------------------------

@dataclass
class DpProgram:
    kind: np.ndarray
    var: np.ndarray
    left: np.ndarray
    right: np.ndarray
    bit: np.ndarray          # slot bit of var[i] (0 for leaf/join)
    slot: np.ndarray         # slot per variable (index 0 unused, -1 if never bagged)
    clause_ptr: np.ndarray   # clauses checked at node i: clause_ptr[i]:clause_ptr[i+1]
    cpos: np.ndarray
    cneg: np.ndarray
    anchor: int
    num_vars: int


@dataclass
class _Layout:
    bit: np.ndarray
    slot: np.ndarray
    top: np.ndarray
    lo: np.ndarray
    intro_key: np.ndarray
    intro_lo: np.ndarray


@numba.njit(cache=True)
def _assign_slots(kind, var, left, right, num_vars):
    """Top-down slot assignment: each variable takes the lowest slot free at
    its forget node. Returns (status, culprit, bit, slot, top, lo) where
    status 1 = forgotten twice, 2 = introduced but never forgotten, 3 = over 63 slots."""
    n = kind.size
    slot = np.full(num_vars + 1, -1, dtype=np.int64)
    top = np.full(num_vars + 1, -1, dtype=np.int64)
    occ = np.zeros(n, dtype=np.int64)
    bit = np.zeros(n, dtype=np.int64)
    lo = np.arange(n)
    for i in range(n - 1, -1, -1):
        k = kind[i]
        c = left[i]
        if k == 2:
            v = var[i]
            if slot[v] >= 0:
                return 1, v, bit, slot, top, lo
            s = 0
            while s < 63 and (occ[i] >> s) & 1:
                s += 1
            if s >= 63:
                return 3, v, bit, slot, top, lo
            slot[v] = s
            top[v] = c
            bit[i] = np.int64(1) << s
            occ[c] = occ[i] | bit[i]
        elif k == 1:
            v = var[i]
            if slot[v] < 0:
                return 2, v, bit, slot, top, lo
            bit[i] = np.int64(1) << slot[v]
            occ[c] = occ[i] & ~bit[i]
        elif k == 3:
            occ[c] = occ[i]
            occ[right[i]] = occ[i]
    for i in range(n):
        for c in (left[i], right[i]):
            if c >= 0 and lo[c] < lo[i]:
                lo[i] = lo[c]
    return 0, 0, bit, slot, top, lo


def _layout(nice: NiceDecomposition, num_vars: int) -> _Layout:
    status, culprit, bit, slot, top, lo = _assign_slots(
        nice.kind, nice.var, nice.left, nice.right, num_vars)
    if status == 1:
        raise DecompositionError(f"variable {culprit} forgotten twice")
    if status == 2:
        raise DecompositionError(f"variable {culprit} introduced but never forgotten")
    if status == 3:
        raise ResourceError("bag size exceeds 63 slots")
    n = nice.num_nodes
    intro = np.flatnonzero(nice.kind == INTRODUCE)
    child = nice.left[intro]
    ivar = nice.var[intro]
    order = np.lexsort((child, ivar))
    return _Layout(bit, slot, top, lo, (ivar[order] * n + child[order]).astype(np.int64),
                   lo[child[order]])


def _present(layout: _Layout, n: int, vars_: np.ndarray, at: np.ndarray) -> np.ndarray:
    """Whether variable vars_[i] is in the bag of node at[i]: the node lies in
    the subtree of the variable's top and below no introduce of it."""
    top = layout.top[vars_]
    inside = (layout.lo[top] <= at) & (at <= top)
    ikey = layout.intro_key
    if ikey.size:
        # the only candidate subtree is the one rooted at the first child >= at
        pos = np.searchsorted(ikey, vars_ * n + at, side="left")
        posc = np.minimum(pos, ikey.size - 1)
        same_var = (pos < ikey.size) & (ikey[posc] // n == vars_)
        inside &= ~(same_var & (layout.intro_lo[posc] <= at))
    return inside


def compile_program(f: CnfFormula, nice: NiceDecomposition,
                    layout: _Layout | None = None) -> DpProgram:
    """Assign slots and place clauses; raises if some clause fits in no bag.

    A clause is checked at every introduce node of one of its variables whose
    bag holds the whole clause. Every clause that fits in some bag has such a
    node (walk down from that bag until a clause variable disappears), and
    checking there, rather than higher up, keeps tables small.
    """
    if f.num_vars != nice.num_vars:
        raise DecompositionError("formula and decomposition disagree on variable count")
    if layout is None:
        layout = _layout(nice, f.num_vars)
    n = nice.num_nodes
    slot_a = layout.slot

    lits, offsets = f.csr()
    nclauses = offsets.size - 1
    if nclauses == 0:
        empty = np.zeros(0, dtype=np.int64)
        return DpProgram(nice.kind, nice.var, nice.left, nice.right, layout.bit, slot_a,
                         np.zeros(n + 1, dtype=np.int64), empty, empty, nice.anchor, f.num_vars)

    vars_ = np.abs(lits)
    if np.any(slot_a[vars_] < 0):
        missing = int(vars_[np.argmax(slot_a[vars_] < 0)])
        raise DecompositionError(f"variable {missing} occurs in a clause but in no bag")
    lens = np.diff(offsets)
    clause_of_lit = np.repeat(np.arange(nclauses), lens)

    # candidate (clause, introduce node) pairs from every literal
    intro = np.flatnonzero(nice.kind == INTRODUCE)
    ivar = nice.var[intro]
    order = np.argsort(ivar, kind="stable")
    intro, ivar = intro[order], ivar[order]
    first = np.searchsorted(ivar, vars_, side="left")
    count = np.searchsorted(ivar, vars_, side="right") - first
    pair_clause = np.repeat(clause_of_lit, count)
    starts = np.repeat(first - (np.cumsum(count) - count), count)
    pair_node = intro[starts + np.arange(pair_clause.size)]
    # no duplicates: distinct variables of a clause have distinct introduce nodes

    # keep the pairs whose node holds every variable of the clause
    plen = lens[pair_clause]
    lit_idx = np.repeat(offsets[pair_clause] - (np.cumsum(plen) - plen), plen) \
        + np.arange(int(plen.sum()))
    ok = _present(layout, n, vars_[lit_idx], np.repeat(pair_node, plen))
    pstart = np.zeros(pair_clause.size, dtype=np.int64)
    np.cumsum(plen[:-1], out=pstart[1:])
    full = np.logical_and.reduceat(ok, pstart) if pair_clause.size else ok[:0]
    pair_clause, pair_node = pair_clause[full], pair_node[full]
    placed = np.zeros(nclauses, dtype=bool)
    placed[pair_clause] = True
    if not placed.all():
        bad = int(np.argmax(~placed))
        raise DecompositionError(f"clause {bad} is not contained in any bag")

    lit_bit = np.left_shift(np.int64(1), slot_a[vars_])
    cpos = np.bitwise_or.reduceat(np.where(lits > 0, lit_bit, 0), offsets[:-1])
    cneg = np.bitwise_or.reduceat(np.where(lits < 0, lit_bit, 0), offsets[:-1])
    order = np.argsort(pair_node, kind="stable")
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(pair_node, minlength=n), out=ptr[1:])
    chosen = pair_clause[order]
    return DpProgram(nice.kind, nice.var, nice.left, nice.right, layout.bit, slot_a, ptr,
                     cpos[chosen].astype(np.int64), cneg[chosen].astype(np.int64),
                     nice.anchor, f.num_vars)


# Reductions of one shape share variables and bags and differ only in clauses,
# so the rooted nice tree and its slot layout are reused across calls.
_STRUCTURE_CACHE: dict[tuple, tuple[NiceDecomposition, _Layout]] = {}
_STRUCTURE_CACHE_SIZE = 256
_STRUCTURE_CACHE_MAX_ENTRIES = 1 << 16


def _rooted_structure(decomp: Decomposition, root: int) -> tuple[NiceDecomposition, _Layout]:
    if decomp.bag_vars.size > _STRUCTURE_CACHE_MAX_ENTRIES:
        nice = to_nice(decomp, root=root)
        return nice, _layout(nice, nice.num_vars)
    key = (decomp.bag_vars.tobytes(), decomp.bag_offsets.tobytes(),
           decomp.edges.tobytes(), decomp.num_vertices, root)
    hit = _STRUCTURE_CACHE.get(key)
    if hit is None:
        nice = to_nice(decomp, root=root)
        hit = (nice, _layout(nice, nice.num_vars))
        if len(_STRUCTURE_CACHE) >= _STRUCTURE_CACHE_SIZE:
            _STRUCTURE_CACHE.pop(next(iter(_STRUCTURE_CACHE)))
        _STRUCTURE_CACHE[key] = hit
    return hit


# --- numba engine ------------------------------------------------------------------------

@numba.njit(cache=True)
def _merge_union(a, b):
    out = np.empty(a.size + b.size, dtype=np.int64)
    i = j = k = 0
    while i < a.size and j < b.size:
        x, y = a[i], b[j]
        if x < y:
            out[k] = x
            i += 1
        elif y < x:
            out[k] = y
            j += 1
        else:
            out[k] = x
            i += 1
            j += 1
        k += 1
    while i < a.size:
        out[k] = a[i]
        i += 1
        k += 1
    while j < b.size:
        out[k] = b[j]
        j += 1
        k += 1
    return out[:k]


@numba.njit(cache=True)
def _intersect(a, b):
    out = np.empty(min(a.size, b.size), dtype=np.int64)
    i = j = k = 0
    while i < a.size and j < b.size:
        x, y = a[i], b[j]
        if x < y:
            i += 1
        elif y < x:
            j += 1
        else:
            out[k] = x
            k += 1
            i += 1
            j += 1
    return out[:k]


@numba.njit(cache=True)
def _run_decide(kind, bit, clause_ptr, cpos, cneg, anchor, keep_all, keep_limit):
    n = kind.size
    kept_rows = 0
    stack = [np.zeros(1, dtype=np.int64)]
    stack.pop()
    kept = [np.zeros(0, dtype=np.int64)]
    kept.pop()
    anchor_table = np.zeros(0, dtype=np.int64)
    max_table = 0
    for i in range(n):
        k = kind[i]
        if k == 0:
            t = np.zeros(1, dtype=np.int64)
        elif k == 1:
            a = stack.pop()
            t = _merge_union(a, a | bit[i])
        elif k == 2:
            a = stack.pop()
            b = bit[i]
            low = a[(a & b) == 0]
            high = a[(a & b) != 0] ^ b
            t = _merge_union(low, high)
        else:
            r = stack.pop()
            l = stack.pop()
            t = _intersect(l, r)
        c0, c1 = clause_ptr[i], clause_ptr[i + 1]
        if c1 > c0 and t.size:
            keep = np.ones(t.size, dtype=np.bool_)
            for c in range(c0, c1):
                p, q = cpos[c], cneg[c]
                for x in range(t.size):
                    if keep[x] and (t[x] & p) == 0 and (~t[x] & q) == 0:
                        keep[x] = False
            t = t[keep]
        if t.size > max_table:
            max_table = t.size
        if i == anchor:
            anchor_table = t.copy()
        if keep_all:
            kept_rows += t.size
            if kept_rows > keep_limit:
                keep_all = False
                kept.clear()
            else:
                kept.append(t)
        stack.append(t)
    root = stack.pop()
    sizes = np.zeros(len(kept) + 1, dtype=np.int64)
    for i in range(len(kept)):
        sizes[i + 1] = sizes[i] + kept[i].size
    flat = np.empty(sizes[-1], dtype=np.int64)
    for i in range(len(kept)):
        flat[sizes[i]:sizes[i + 1]] = kept[i]
    return root.size > 0, anchor_table, max_table, flat, sizes, keep_all


@numba.njit(cache=True)
def _reconstruct_flat(kind, var, left, right, bit, flat, ptr, num_vars):
    n = kind.size
    row = np.zeros(n, dtype=np.int64)
    model = np.zeros(num_vars + 1, dtype=np.bool_)
    for i in range(n - 1, -1, -1):
        k = kind[i]
        r = row[i]
        if k == 1:
            model[var[i]] = (r & bit[i]) != 0
            row[left[i]] = r & ~bit[i]
        elif k == 2:
            c = left[i]
            t = flat[ptr[c]:ptr[c + 1]]
            j = np.searchsorted(t, r)
            row[c] = r if (j < t.size and t[j] == r) else r | bit[i]
        elif k == 3:
            row[left[i]] = r
            row[right[i]] = r
    return model


# --- dictionary engine ----------------------------------------------------------------------

def _run_dict(prog: DpProgram, count: bool, keep_all: bool):
    kind = prog.kind.tolist()
    bit = prog.bit.tolist()
    ptr = prog.clause_ptr.tolist()
    cpos = prog.cpos.tolist()
    cneg = prog.cneg.tolist()
    stack: list[dict[int, int]] = []
    kept: list[dict[int, int]] = []
    anchor_table: dict[int, int] = {}
    max_table = 0
    for i, k in enumerate(kind):
        if k == LEAF:
            t = {0: 1}
        elif k == INTRODUCE:
            a = stack.pop()
            b = bit[i]
            t = dict(a)
            t.update((x | b, c) for x, c in a.items())
        elif k == FORGET:
            a = stack.pop()
            b = bit[i]
            t = {}
            for x, c in a.items():
                y = x & ~b
                t[y] = t.get(y, 0) + c
        else:
            r = stack.pop()
            l = stack.pop()
            if len(r) < len(l):
                l, r = r, l
            t = {x: c * r[x] for x, c in l.items() if x in r}
        for c in range(ptr[i], ptr[i + 1]):
            p, q = cpos[c], cneg[c]
            t = {x: v for x, v in t.items() if (x & p) or (~x & q)}
        if not count:
            t = dict.fromkeys(t, 1)
        max_table = max(max_table, len(t))
        if i == prog.anchor:
            anchor_table = t
        if keep_all:
            kept.append(t)
        stack.append(t)
    root = stack.pop()
    return root.get(0, 0), anchor_table, max_table, kept


def _reconstruct(prog: DpProgram, contains) -> list[bool]:
    n = prog.kind.size
    kind, var = prog.kind.tolist(), prog.var.tolist()
    left, right, bit = prog.left.tolist(), prog.right.tolist(), prog.bit.tolist()
    row = [0] * n
    model = [False] * (prog.num_vars + 1)
    for i in range(n - 1, -1, -1):
        k = kind[i]
        r = row[i]
        if k == INTRODUCE:
            model[var[i]] = bool(r & bit[i])
            row[left[i]] = r & ~bit[i]
        elif k == FORGET:
            c = left[i]
            row[c] = r if contains(c, r) else r | bit[i]
        elif k == JOIN:
            row[left[i]] = r
            row[right[i]] = r
    return model


def solve_td(f: CnfFormula, nice: NiceDecomposition | Decomposition, mode: str = "decide",
             budget: int | None = None, want_model: bool = True,
             engine: str = "auto", keep_limit: int = DEFAULT_KEEP_LIMIT) -> SatResult:
    """Decide (or count models of) ``f`` by dynamic programming over ``nice``.

    ``engine`` is "numba", "python" or "auto" (numba for decisions, the
    dictionary engine for counting).
    """
    if mode not in ("decide", "count"):
        raise ParameterError(f"mode must be 'decide' or 'count', got {mode!r}")
    if isinstance(nice, Decomposition):
        nice = to_nice(nice)
    budget = width_budget_default() if budget is None else budget
    if nice.width > budget:
        raise ResourceError(f"width {nice.width} exceeds DP budget {budget}")
    prog = compile_program(f, nice)
    if engine == "auto":
        engine = "python" if mode == "count" else "numba"
    if engine == "numba":
        if mode == "count":
            raise ParameterError("the numba engine only decides; use engine='python' to count")
        sat, _, max_table, flat, ptr, kept = _run_decide(
            prog.kind, prog.bit, prog.clause_ptr, prog.cpos, prog.cneg, prog.anchor,
            want_model, keep_limit)
        model, note = None, ""
        if sat and want_model:
            if kept:
                model = _reconstruct_flat(prog.kind, prog.var, prog.left, prog.right, prog.bit,
                                          flat, ptr, prog.num_vars).tolist()
            else:
                note = f"model omitted: tables exceed {keep_limit} kept rows"
        return SatResult(bool(sat), None, model, int(max_table), note)
    if engine != "python":
        raise ParameterError(f"unknown engine {engine!r}")
    total, _, max_table, kept = _run_dict(prog, mode == "count", want_model)
    model = None
    if total and want_model:
        model = _reconstruct(prog, lambda node, r: r in kept[node])
    return SatResult(total > 0, total if mode == "count" else None, model, max_table)


def extendable_bag_values(f: CnfFormula, decomp: Decomposition, special_bag: str | int,
                          variables: Sequence[int] | None = None,
                          budget: int | None = None,
                          engine: str = "numba") -> set[tuple[int, ...]]:
    """Assignments to ``variables`` (default: the special bag's listed ones)
    that extend to a model of ``f``, as tuples of 0/1 in the given order."""
    if isinstance(special_bag, str):
        sb = decomp.special[special_bag]
        bag_index = sb.bag
        if variables is None:
            variables = sb.variables
    else:
        bag_index = special_bag
        if variables is None:
            variables = decomp.bag(bag_index)
    if not set(variables) <= set(decomp.bag(bag_index)):
        raise ParameterError("requested variables are not all in the bag")
    budget = width_budget_default() if budget is None else budget
    if decomp.width() > budget:
        raise ResourceError(f"width {decomp.width()} exceeds DP budget {budget}")
    nice, layout = _rooted_structure(decomp, bag_index)
    prog = compile_program(f, nice, layout=layout)
    if engine == "numba":
        table = _run_decide(prog.kind, prog.bit, prog.clause_ptr, prog.cpos,
                            prog.cneg, prog.anchor, False, 0)[1]
        rows = table.tolist()
    else:
        rows = list(_run_dict(prog, False, False)[1])
    slots = [int(prog.slot[v]) for v in variables]
    return {tuple((r >> s) & 1 for s in slots) for r in rows}


def bits_to_int(bits: Sequence[int]) -> int:
    """Read a 0/1 tuple with the first entry as the least significant bit."""
    return sum(b << i for i, b in enumerate(bits))
