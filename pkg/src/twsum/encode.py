"""Subset-sum encoders: arrays of vectors -> CNF with a path decomposition.

A chain walks the arrays element by element, guessing one selected element
per array and maintaining the running sum in a block of "x" variables. Its
decomposition is a path whose final bag holds exactly the running-sum
variables, so an assignment to that bag extends to a model iff it equals some
constructible sum. Two chains sharing their final variables ("glued") encode
"first-half sum == second-half sum" and expose the shared bag as special.

XOR chains add vectors over GF(2); SUM chains add vectors of integers with
component j taken modulo 2**widths[j], using ripple-carry clauses.

Variable allocation order (deterministic): optional initial block x[.][0],
then per array and per element i: s, y, the t new x bits, then the carries.
Bit p of the running sum (p = 0..t-1) is component-major, least significant
bit first within each component.

Bags per element (X = current running-sum block, which trades old bits for
new ones one at a time):
    selection  X + {y_prev, s, y}
    add bit p  X + {s, y, x_new[p]}             (SUM also: carry in, carry out)
    drop bit p X - x_old[p] + x_new[p] + {s, y} (SUM also: carry out)
and one terminal bag X at the end of the chain. This gives width t + 2 for
XOR and at most t + 4 for SUM (t + 2 + min(max width - 1, 2)).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .cnf import CnfFormula, cond_eq_rows, cond_neq_rows, eq_rows, pattern_rows
from .decomp import Decomposition, SpecialBag
from .errors import ParameterError
from .instances import VectorSubsetSumInstance


# --- bag lists ----------------------------------------------------------------------

class BagList:
    """Append-only list of bags in compressed form."""

    def __init__(self):
        self._flat: list[np.ndarray] = []
        self._sizes: list[np.ndarray] = []
        self.count = 0

    def add_rows(self, rows: np.ndarray) -> None:
        """Add one bag per row of a zero-padded matrix."""
        mask = rows != 0
        self._flat.append(rows[mask])
        self._sizes.append(mask.sum(axis=1))
        self.count += rows.shape[0]

    def add_bag(self, bag: Sequence[int]) -> None:
        self._flat.append(np.asarray(bag, dtype=np.int64))
        self._sizes.append(np.array([len(bag)], dtype=np.int64))
        self.count += 1

    def extend(self, other: "BagList") -> None:
        self._flat.extend(other._flat)
        self._sizes.extend(other._sizes)
        self.count += other.count

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        flat = np.concatenate(self._flat) if self._flat else np.zeros(0, dtype=np.int64)
        sizes = np.concatenate(self._sizes) if self._sizes else np.zeros(0, dtype=np.int64)
        offsets = np.zeros(sizes.size + 1, dtype=np.int64)
        np.cumsum(sizes, out=offsets[1:])
        return flat.astype(np.int64), offsets

    def reversed(self, drop_last: int = 0) -> "BagList":
        flat, offsets = self.arrays()
        keep = self.count - drop_last
        sizes = np.diff(offsets)[:keep][::-1]
        starts = offsets[:keep][::-1]
        within = np.arange(sizes.sum()) - np.repeat(np.cumsum(sizes) - sizes, sizes)
        out = BagList()
        out._flat.append(flat[np.repeat(starts, sizes) + within])
        out._sizes.append(sizes.copy())
        out.count = keep
        return out


# --- results ------------------------------------------------------------------------

@dataclass
class EncodedHalf:
    formula: CnfFormula
    bags: BagList
    last_vars: tuple[int, ...]
    widths: tuple[int, ...]
    kind: str

    @property
    def decomposition(self) -> Decomposition:
        flat, offsets = self.bags.arrays()
        edges = np.stack([np.arange(self.bags.count - 1), np.arange(1, self.bags.count)], 1)
        return Decomposition(flat, offsets, edges, self.formula.num_vars, "path",
                             {"last": SpecialBag(self.bags.count - 1, self.last_vars)})


@dataclass
class GluedEncoding:
    formula: CnfFormula
    decomposition: Decomposition
    special_vars: tuple[int, ...]
    widths: tuple[int, ...]

    @property
    def special_bag(self) -> int:
        return self.decomposition.special["special"].bag


# --- chain builder --------------------------------------------------------------------

def _bits_matrix(values: Sequence, widths: Sequence[int]) -> np.ndarray:
    """(n, t) bool matrix of the per-element bits in running-sum order."""
    t = sum(widths)
    out = np.zeros((len(values), t), dtype=bool)
    for i, val in enumerate(values):
        comps = (val,) if isinstance(val, (int, np.integer)) else tuple(val)
        if len(comps) != len(widths):
            raise ParameterError(f"element {val} does not match layout {tuple(widths)}")
        p = 0
        for c, w in zip(comps, widths):
            c = int(c)
            if not 0 <= c < (1 << w):
                raise ParameterError(f"component {c} overflows {w} bits")
            for b in range(w):
                out[i, p + b] = (c >> b) & 1
            p += w
    return out


def _bit_names(widths: Sequence[int], kind: str) -> list[str]:
    if kind == "xor":
        return [str(j) for j in range(1, widths[0] + 1)]
    return [f"{j1}][{j2}" for j1, w in enumerate(widths, 1) for j2 in range(1, w + 1)]


def build_chain(formula: CnfFormula, arrays: Sequence[Sequence], widths: Sequence[int],
                kind: str, labels: Sequence[int] | None = None, suffix: str = "",
                first_x: Sequence[int] | None = None,
                targets: Sequence[int] | None = None) -> tuple[BagList, np.ndarray]:
    """Append the clauses of one chain to ``formula``; return (bags, final x block).

    Without ``first_x`` a fresh initial block is allocated and pinned to zero by
    unit clauses. With ``targets`` the final element's new x bits are those
    variables instead of fresh ones (this is how two halves get glued).
    """
    if kind not in ("xor", "sum"):
        raise ParameterError(f"unknown chain kind {kind!r}")
    widths = tuple(int(w) for w in widths)
    if not widths or any(w < 1 for w in widths):
        raise ParameterError("widths must be positive")
    if kind == "xor" and len(widths) != 1:
        raise ParameterError("xor chains have a single component")
    t = sum(widths)
    if not arrays:
        raise ParameterError("need at least one array")
    if any(len(a) == 0 for a in arrays):
        raise ParameterError("empty arrays are not allowed")
    labels = list(labels) if labels is not None else list(range(1, len(arrays) + 1))
    names = _bit_names(widths, kind)
    bags = BagList()

    if first_x is None:
        x = formula.new_vars(t, [f"x[A{labels[0]}][0][{b}]{suffix}" for b in names])
        formula.add_clauses(-x[:, None])
    else:
        x = np.asarray(first_x, dtype=np.int64)
        if x.size != t:
            raise ParameterError(f"initial block has {x.size} variables, layout needs {t}")

    # carries exist for every bit except the top bit of each component
    top_bit = np.zeros(t, dtype=bool)
    top_bit[np.cumsum(widths) - 1] = True
    low_bit = np.zeros(t, dtype=bool)
    low_bit[np.r_[0, np.cumsum(widths)[:-1]]] = True
    carry_names = [nm for nm, top in zip(names, top_bit) if not top]
    nc = len(carry_names) if kind == "sum" else 0

    for a_idx, values in enumerate(arrays):
        label = labels[a_idx]
        bits = _bits_matrix(values, widths)
        n = bits.shape[0]
        last_array = a_idx == len(arrays) - 1
        per = 2 + t + nc
        S = np.zeros(n, dtype=np.int64)
        Y = np.zeros(n, dtype=np.int64)
        XN = np.zeros((n, t), dtype=np.int64)
        C = np.zeros((n, t), dtype=np.int64)
        glue_at = n - 1 if targets is not None and last_array else -1
        tags = []
        for i in range(n):
            tags += [f"s[A{label}][{i + 1}]{suffix}", f"y[A{label}][{i + 1}]{suffix}"]
            if i != glue_at:
                tags += [f"x[A{label}][{i + 1}][{b}]{suffix}" for b in names]
            if nc:
                tags += [f"carry[A{label}][{i + 1}][{b}]{suffix}" for b in carry_names]
        ids = formula.new_vars(len(tags), tags)
        full = ids[:(n if glue_at < 0 else n - 1) * per].reshape(-1, per)
        S[:full.shape[0]], Y[:full.shape[0]] = full[:, 0], full[:, 1]
        XN[:full.shape[0]] = full[:, 2:2 + t]
        if nc:
            C[:full.shape[0], ~top_bit] = full[:, 2 + t:]
        if glue_at >= 0:
            rest = ids[full.size:]
            S[-1], Y[-1] = rest[0], rest[1]
            target = np.asarray(targets, dtype=np.int64)
            if target.size != t:
                raise ParameterError(f"{target.size} target variables, layout needs {t}")
            XN[-1] = target
            if nc:
                C[-1, ~top_bit] = rest[2:]
        XO = np.vstack([x[None, :], XN[:-1]])

        # selection and exactly-one clauses
        rows = [eq_rows(Y[:1], S[:1])]
        if n > 1:
            yp, s, y = Y[:-1], S[1:], Y[1:]
            rows.append(pattern_rows([yp, s, y], [(-1, 3), (-2, 3), (-3, 1, 2), (-2, -1)]))
        rows.append(np.array([[Y[-1]]]))
        Sg = S[:, None]
        rows.append(cond_eq_rows(Sg, XO, XN))
        if kind == "xor":
            rows.append(cond_neq_rows(-Sg.repeat(t, 1)[bits], XO[bits], XN[bits]))
            rows.append(cond_eq_rows(-Sg.repeat(t, 1)[~bits], XO[~bits], XN[~bits]))
        else:
            rows.append(_sum_clauses(S, XO, XN, C, bits, low_bit))
        formula.add_clauses(_pad_rows(rows))

        # bags for this array
        steps = 2 * t + 1
        new_mask = np.zeros((steps, t), dtype=bool)
        for p in range(t):
            new_mask[1 + 2 * p, :p] = True          # add bit p
            new_mask[2 + 2 * p, :p + 1] = True      # drop old bit p
        xpart = np.where(new_mask[None, :, :], XN[:, None, :], XO[:, None, :])
        extra_w = 5 if kind == "sum" else 3
        extra = np.zeros((n, steps, extra_w), dtype=np.int64)
        extra[1:, 0, 0] = Y[:-1]
        extra[:, 0, 1] = S
        extra[:, 0, 2] = Y
        extra[:, 1:, 0] = S[:, None]
        extra[:, 1:, 1] = Y[:, None]
        for p in range(t):
            extra[:, 1 + 2 * p, 2] = XN[:, p]
            if kind == "sum":
                if p > 0 and not low_bit[p]:
                    extra[:, 1 + 2 * p, 3] = C[:, p - 1]
                extra[:, 1 + 2 * p, 4] = C[:, p]
                extra[:, 2 + 2 * p, 3] = C[:, p]
        bags.add_rows(np.concatenate([xpart, extra], axis=2).reshape(n * steps, t + extra_w))
        x = XN[-1]

    bags.add_bag(x.tolist())
    return bags, x


def _pad_rows(blocks: list[np.ndarray]) -> np.ndarray:
    blocks = [b for b in blocks if b.size]
    width = max(b.shape[1] for b in blocks)
    out = np.zeros((sum(b.shape[0] for b in blocks), width), dtype=np.int64)
    row = 0
    for b in blocks:
        out[row:row + b.shape[0], :b.shape[1]] = b
        row += b.shape[0]
    return out


def _parity_patterns(a: int) -> list[tuple[int, ...]]:
    # forbid every (x_old, carry_in, x_new) with the wrong parity, guarded by s
    forb = [(xo, cp, 1 - (xo ^ cp ^ a)) for xo in (0, 1) for cp in (0, 1)]
    return [(_G, *(col * (1 - 2 * bad) for col, bad in zip((_XO, _CP, _XN), f)))
            for f in forb]


# columns of the adder clause table (sign = literal polarity)
_G, _XO, _XN, _C, _CP = 1, 2, 3, 4, 5

# one entry per bit class, in emission order: (class, clause patterns).
# Classes: 0 low bit, a=1; 1 low bit, a=0; 2 high bit, a=0; 3 high bit, a=1;
# 4-7 the same four, restricted to bits that have a carry out.
_ADDER_BLOCKS = [
    # lowest bit of a component: x_new = x_old + a, no carry in
    (0, [(_G, _XO, _XN), (_G, -_XO, -_XN)]),
    (1, [(_G, -_XO, _XN), (_G, _XO, -_XN)]),
    # higher bits: x_new = x_old XOR carry_in XOR a
    (2, _parity_patterns(0)),
    (3, _parity_patterns(1)),
    # carry out of the lowest bit: x_old AND a
    (5, [(-_C,)]),
    (4, [(-_C, _XO), (_C, -_XO)]),
    # higher bits: majority(x_old, a, carry_in)
    (6, [(-_C, _XO), (-_C, _CP), (_C, -_XO, -_CP)]),
    (7, [(_C, -_XO), (_C, -_CP), (-_C, _XO, _CP)]),
]
_ADDER_CLASS = np.array([c for c, pats in _ADDER_BLOCKS for _ in pats], dtype=np.int64)
_ADDER_PATTERNS = np.array([list(p) + [0] * (4 - len(p)) for _, pats in _ADDER_BLOCKS
                            for p in pats], dtype=np.int64)


@numba.njit(cache=True)
def _adder_rows(S, XO, XN, C, CP, bits, low, classes, patterns):
    n, t = XO.shape
    out = np.zeros((patterns.shape[0] * n * t, 4), dtype=np.int64)
    cols = np.empty(6, dtype=np.int64)
    r = 0
    for q in range(patterns.shape[0]):
        cls = classes[q]
        for i in range(n):
            for p in range(t):
                lo, bt = low[p], bits[i, p]
                if cls >= 4:
                    if C[i, p] == 0:
                        continue
                    cls_here = cls - 4
                else:
                    cls_here = cls
                if lo != (cls_here < 2) or bt != (cls_here == 0 or cls_here == 3):
                    continue
                cols[1], cols[2], cols[3] = -S[i], XO[i, p], XN[i, p]
                cols[4], cols[5] = C[i, p], CP[i, p]
                for j in range(4):
                    ref = patterns[q, j]
                    if ref > 0:
                        out[r, j] = cols[ref]
                    elif ref < 0:
                        out[r, j] = -cols[-ref]
                r += 1
    return out[:r]


def _sum_clauses(S: np.ndarray, XO: np.ndarray, XN: np.ndarray, C: np.ndarray,
                 bits: np.ndarray, low_bit: np.ndarray) -> np.ndarray:
    """Ripple-carry clauses for ``XN = XO + A`` when s = 1, bit by bit.

    Sum bits are guarded by s; carries are defined unconditionally from the
    old bits, so they are determined whether or not the element is selected.
    """
    CP = np.zeros_like(C)
    CP[:, 1:] = C[:, :-1]
    CP[:, low_bit] = 0
    return _adder_rows(S, XO, XN, C, CP, bits, low_bit, _ADDER_CLASS, _ADDER_PATTERNS)


# --- public encoders ---------------------------------------------------------------------

def encode_xor_chain(arrays: Sequence[Sequence[int]], u: int,
                     labels: Sequence[int] | None = None) -> EncodedHalf:
    """Chain over arrays of u-bit vectors; final bag = XOR of one element per array."""
    f = CnfFormula()
    bags, last = build_chain(f, arrays, (u,), "xor", labels)
    return EncodedHalf(f, bags, tuple(last.tolist()), (u,), "xor")


def encode_sum_chain(instance: VectorSubsetSumInstance,
                     labels: Sequence[int] | None = None) -> EncodedHalf:
    """Chain over arrays of integer vectors; final bag = componentwise sum mod 2**widths."""
    f = CnfFormula()
    bags, last = build_chain(f, instance.arrays, instance.widths, "sum", labels)
    return EncodedHalf(f, bags, tuple(last.tolist()), tuple(instance.widths), "sum")


def _assemble(formula: CnfFormula, first: BagList, second: BagList,
              special_vars: Sequence[int], widths: tuple[int, ...]) -> GluedEncoding:
    path = BagList()
    path.extend(first)
    path.extend(second.reversed(drop_last=1))
    flat, offsets = path.arrays()
    edges = np.stack([np.arange(path.count - 1), np.arange(1, path.count)], 1)
    special = tuple(int(v) for v in special_vars)
    d = Decomposition(flat, offsets, edges, formula.num_vars, "path",
                      {"special": SpecialBag(first.count - 1, special)})
    return GluedEncoding(formula, d, special, widths)


def encode_glued(first_arrays: Sequence[Sequence], second_arrays: Sequence[Sequence],
                 widths: Sequence[int], kind: str,
                 formula: CnfFormula | None = None, suffix: str = "",
                 first_labels: Sequence[int] | None = None,
                 second_labels: Sequence[int] | None = None) -> GluedEncoding:
    """Two chains whose final running-sum variables are shared.

    The path runs through the first chain, the shared (special) bag, then the
    second chain backwards to its pinned initial block.
    """
    formula = CnfFormula() if formula is None else formula
    widths = tuple(widths)
    if first_labels is None:
        first_labels = range(1, len(first_arrays) + 1)
    if second_labels is None:
        second_labels = range(len(first_arrays) + 1, len(first_arrays) + len(second_arrays) + 1)
    b1, last = build_chain(formula, first_arrays, widths, kind, first_labels, suffix)
    b2, _ = build_chain(formula, second_arrays, widths, kind, second_labels, suffix,
                        targets=last)
    return _assemble(formula, b1, b2, last.tolist(), widths)


def glue_halves(first: EncodedHalf, second: EncodedHalf) -> GluedEncoding:
    """Merge two separately built halves, identifying their final variables in order.

    The second half's variables are renumbered after the first half's, with
    its final block substituted by the first half's final block.
    """
    if first.widths != second.widths or first.kind != second.kind:
        raise ParameterError(f"layouts differ: {first.widths} vs {second.widths}")
    f = CnfFormula()
    f.new_vars(first.formula.num_vars, first.formula.tags)
    for c in first.formula.clauses:
        f.add_clause(c)
    shared = dict(zip(second.last_vars, first.last_vars))
    remap = np.zeros(second.formula.num_vars + 1, dtype=np.int64)
    for v in range(1, second.formula.num_vars + 1):
        if v in shared:
            remap[v] = shared[v]
        else:
            tag = second.formula.tag(v)
            if tag is not None and tag in f._tag_index:
                tag += "@half=2"
            remap[v] = f.new_var(tag)
    lits, offsets = second.formula.csr()
    mapped = np.sign(lits) * remap[np.abs(lits)]
    for i in range(offsets.size - 1):
        f.add_clause(mapped[offsets[i]:offsets[i + 1]].tolist())
    b2 = BagList()
    flat, offs = second.bags.arrays()
    b2._flat.append(remap[flat])
    b2._sizes.append(np.diff(offs))
    b2.count = second.bags.count
    return _assemble(f, first.bags, b2, first.last_vars, first.widths)


def glue_xor(first_arrays: Sequence[Sequence[int]], second_arrays: Sequence[Sequence[int]],
             u: int) -> GluedEncoding:
    return encode_glued(first_arrays, second_arrays, (u,), "xor")


def glue_sum(first: VectorSubsetSumInstance, second: VectorSubsetSumInstance) -> GluedEncoding:
    if first.widths != second.widths:
        raise ParameterError("both halves need the same component widths")
    return encode_glued(first.arrays, second.arrays, first.widths, "sum")
