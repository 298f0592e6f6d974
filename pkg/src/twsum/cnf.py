"""Clause database with role-tagged variables, primal graphs and DIMACS I/O.

Clauses are kept in compressed form (one flat literal array plus per-clause
lengths) so encoders can append hundreds of thousands of clauses as numpy
blocks. Variables are 1-indexed; literal ``-v`` is the negation of ``v``.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError, ParseError


class CnfFormula:
    def __init__(self, num_vars: int = 0):
        self.num_vars = 0
        self._tags: list[str | None] = []
        self._tag_index: dict[str, int] = {}
        self._chunks: list[tuple[np.ndarray, np.ndarray]] = []
        self._lits = np.zeros(0, dtype=np.int64)
        self._lens = np.zeros(0, dtype=np.int64)
        self._small: list[tuple[int, ...]] = []
        if num_vars:
            self.new_vars(num_vars)

    # -- variables --

    def new_var(self, tag: str | None = None) -> int:
        self.num_vars += 1
        self._tags.append(None)
        if tag is not None:
            self.set_tag(self.num_vars, tag)
        return self.num_vars

    def new_vars(self, count: int, tags: Sequence[str] | None = None) -> np.ndarray:
        """Allocate ``count`` consecutive variables and return their ids."""
        start = self.num_vars + 1
        self.num_vars += count
        self._tags.extend([None] * count)
        if tags is not None:
            if len(tags) != count:
                raise ParameterError("tag list length differs from variable count")
            for v, t in zip(range(start, start + count), tags):
                self.set_tag(v, t)
        return np.arange(start, start + count, dtype=np.int64)

    def set_tag(self, var: int, tag: str) -> None:
        owner = self._tag_index.get(tag)
        if owner is not None and owner != var:
            raise ParameterError(f"tag {tag!r} already names variable {owner}")
        old = self._tags[var - 1]
        if old is not None:
            del self._tag_index[old]
        self._tags[var - 1] = tag
        self._tag_index[tag] = var

    def tag(self, var: int) -> str | None:
        return self._tags[var - 1]

    def var(self, tag: str) -> int:
        try:
            return self._tag_index[tag]
        except KeyError:
            raise ParameterError(f"no variable tagged {tag!r}") from None

    @property
    def tags(self) -> list[str | None]:
        return list(self._tags)

    # -- clauses --

    def add_clause(self, literals: Iterable[int]) -> int:
        seen: list[int] = []
        for lit in literals:
            lit = int(lit)
            if lit == 0 or abs(lit) > self.num_vars:
                raise ParameterError(f"literal {lit} out of range 1..{self.num_vars}")
            if -lit in seen:
                raise ParameterError(f"tautological clause containing {lit} and {-lit}")
            if lit not in seen:
                seen.append(lit)
        if not seen:
            raise ParameterError("empty clause")
        self._small.append(tuple(seen))
        return self.num_clauses - 1

    def add_clauses(self, rows: np.ndarray) -> None:
        """Append a block of clauses given as rows padded with zeros.

        Duplicate literals inside a row are dropped; tautologies and empty
        rows raise, as with :meth:`add_clause`.
        """
        rows = np.array(rows, dtype=np.int64, ndmin=2)
        if rows.size == 0:
            return
        if np.abs(rows).max() > self.num_vars:
            raise ParameterError("literal out of range in clause block")
        width = rows.shape[1]
        repeated = False
        if width > 1:
            key = np.sort(np.abs(rows), axis=1)
            repeated = bool(np.any((key[:, 1:] == key[:, :-1]) & (key[:, 1:] != 0)))
        if repeated:
            upper = np.triu(np.ones((width, width), dtype=bool), 1)
            nonzero = rows != 0
            if np.any((rows[:, :, None] == -rows[:, None, :]) & nonzero[:, :, None] & upper):
                raise ParameterError("tautological clause in block")
            dup = ((rows[:, :, None] == rows[:, None, :]) & nonzero[:, :, None] & upper).any(1)
            if dup.any():
                rows = np.where(dup, 0, rows)
        mask = rows != 0
        lens = mask.sum(axis=1)
        if np.any(lens == 0):
            raise ParameterError("empty clause in block")
        self._flush_small()
        self._chunks.append((rows[mask], lens))

    def _flush_small(self) -> None:
        if self._small:
            lens = np.fromiter((len(c) for c in self._small), dtype=np.int64,
                               count=len(self._small))
            lits = np.fromiter((l for c in self._small for l in c), dtype=np.int64,
                               count=int(lens.sum()))
            self._chunks.append((lits, lens))
            self._small = []

    def _compact(self) -> None:
        self._flush_small()
        if self._chunks:
            self._lits = np.concatenate([self._lits] + [c[0] for c in self._chunks])
            self._lens = np.concatenate([self._lens] + [c[1] for c in self._chunks])
            self._chunks = []

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(literals, offsets): clause i is ``literals[offsets[i]:offsets[i+1]]``."""
        self._compact()
        offsets = np.zeros(self._lens.size + 1, dtype=np.int64)
        np.cumsum(self._lens, out=offsets[1:])
        return self._lits, offsets

    @property
    def num_clauses(self) -> int:
        return (int(self._lens.size) + sum(int(c[1].size) for c in self._chunks)
                + len(self._small))

    @property
    def clauses(self) -> list[tuple[int, ...]]:
        lits, offsets = self.csr()
        flat = lits.tolist()
        bounds = offsets.tolist()
        return [tuple(flat[bounds[i]:bounds[i + 1]]) for i in range(len(bounds) - 1)]

    def satisfied_by(self, assignment: Sequence[bool] | np.ndarray) -> bool:
        """``assignment[v]`` is the value of variable v (index 0 ignored)."""
        values = np.asarray(assignment, dtype=bool)
        if values.size < self.num_vars + 1:
            raise ParameterError("assignment shorter than variable count")
        lits, offsets = self.csr()
        if lits.size == 0:
            return True
        true_lit = values[np.abs(lits)] == (lits > 0)
        per_clause = np.add.reduceat(true_lit.astype(np.int64), offsets[:-1])
        return bool(np.all(per_clause > 0))

    def __repr__(self) -> str:
        return f"CnfFormula(vars={self.num_vars}, clauses={self.num_clauses})"


# --- gadgets ----------------------------------------------------------------------

def _distinct(*vars_: int) -> None:
    if len({abs(v) for v in vars_}) != len(vars_):
        raise ParameterError(f"gadget variables must be distinct, got {vars_}")


def gadget_eq(f: CnfFormula, x: int, y: int) -> list[int]:
    _distinct(x, y)
    return [f.add_clause((-x, y)), f.add_clause((x, -y))]


def gadget_neq(f: CnfFormula, x: int, y: int) -> list[int]:
    _distinct(x, y)
    return [f.add_clause((x, y)), f.add_clause((-x, -y))]


def gadget_or_def(f: CnfFormula, y: int, a: int, b: int) -> list[int]:
    """y = a OR b."""
    _distinct(y, a, b)
    return [f.add_clause((-a, y)), f.add_clause((-b, y)), f.add_clause((-y, a, b))]


def gadget_cond_eq(f: CnfFormula, guard: int, x: int, y: int) -> list[int]:
    """guard false implies x = y. Pass ``-s`` to condition on s being true."""
    _distinct(guard, x, y)
    return [f.add_clause((guard, -x, y)), f.add_clause((guard, x, -y))]


def gadget_cond_neq(f: CnfFormula, guard: int, x: int, y: int) -> list[int]:
    """guard false implies x != y."""
    _distinct(guard, x, y)
    return [f.add_clause((guard, x, y)), f.add_clause((guard, -x, -y))]


# Row builders used by the encoders: same clause forms, vectorized over arrays
# of variable ids. Each returns an (N, width) block for CnfFormula.add_clauses.

def _columns(cols: list[np.ndarray]) -> list[np.ndarray]:
    cols = [np.asarray(c) for c in cols]
    shape = cols[0].shape
    for c in cols:
        if c.shape != shape:
            cols = np.broadcast_arrays(*cols)
            break
    return [c.ravel() for c in cols]


def _signed_rows(cols: list[np.ndarray], signs: list[tuple[int, ...]]) -> np.ndarray:
    cols = _columns(cols)
    n = cols[0].size
    out = np.empty((len(signs) * n, len(cols)), dtype=np.int64)
    for r, sign in enumerate(signs):
        for j, (c, s) in enumerate(zip(cols, sign)):
            out[r * n:(r + 1) * n, j] = c if s > 0 else -c
    return out


def pattern_rows(cols: list[np.ndarray], patterns: list[tuple[int, ...]]) -> np.ndarray:
    """One block of clauses per pattern; pattern entry ``±(j+1)`` is column j,
    negated for a minus sign. Shorter patterns are zero-padded."""
    cols = _columns(cols)
    n = cols[0].size
    out = np.zeros((len(patterns) * n, max(map(len, patterns))), dtype=np.int64)
    for r, pat in enumerate(patterns):
        block = out[r * n:(r + 1) * n]
        for j, ref in enumerate(pat):
            block[:, j] = cols[ref - 1] if ref > 0 else -cols[-ref - 1]
    return out


def eq_rows(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return _signed_rows([x, y], [(-1, 1), (1, -1)])


def cond_eq_rows(g: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return _signed_rows([g, x, y], [(1, -1, 1), (1, 1, -1)])


def cond_neq_rows(g: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return _signed_rows([g, x, y], [(1, 1, 1), (1, -1, -1)])


# --- primal graph -------------------------------------------------------------------

@dataclass(frozen=True)
class PrimalGraph:
    """Vertices 1..num_vertices; ``edges`` is an (E, 2) array with a < b, sorted, unique."""

    num_vertices: int
    edges: np.ndarray

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(a), int(b)) for a, b in self.edges}

    def neighbors(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.num_vertices + 1)]
        for a, b in self.edges.tolist():
            adj[a].add(b)
            adj[b].add(a)
        return adj


def primal_graph(f: CnfFormula) -> PrimalGraph:
    lits, offsets = f.csr()
    lens = np.diff(offsets)
    variables = np.abs(lits)
    parts = [np.zeros((0, 2), dtype=np.int64)]
    for width in np.unique(lens).tolist():
        if width < 2:
            continue
        starts = offsets[:-1][lens == width]
        block = variables[starts[:, None] + np.arange(width)]
        for i in range(width):
            for j in range(i + 1, width):
                parts.append(np.stack([block[:, i], block[:, j]], axis=1))
    edges = np.concatenate(parts)
    edges = np.sort(edges, axis=1)
    edges = edges[edges[:, 0] != edges[:, 1]]
    key = np.unique(edges[:, 0] * (f.num_vars + 1) + edges[:, 1])
    edges = np.stack([key // (f.num_vars + 1), key % (f.num_vars + 1)], axis=1)
    return PrimalGraph(f.num_vars, edges)


# --- DIMACS ---------------------------------------------------------------------------

def format_dimacs(f: CnfFormula) -> str:
    lines = [f"c var {v} {t}" for v, t in enumerate(f.tags, 1) if t is not None]
    lines.append(f"p cnf {f.num_vars} {f.num_clauses}")
    lines.extend(" ".join(map(str, c)) + " 0" for c in f.clauses)
    return "\n".join(lines) + "\n"


def int_tokens(text: str) -> np.ndarray | None:
    """All whitespace-separated integers in ``text``, or None if anything else is there."""
    if not text.strip():
        return np.zeros(0, dtype=np.int64)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        try:
            return np.fromstring(text, dtype=np.int64, sep=" ")
        except (DeprecationWarning, ValueError):
            return None


_HEADER = re.compile(r"^p\s+cnf\s+(\d+)\s+(\d+)\s*$", re.M)
_NON_CLAUSE = re.compile(r"^\s*[cp%].*$", re.M)
_TAG = re.compile(r"^\s*c\s+var\s+(\d+)\s+(.+?)\s*$", re.M)
_MAX_FAST_WIDTH = 32


def _parse_dimacs_fast(text: str) -> CnfFormula | None:
    """Vectorized parse of well-formed files; None sends the caller to the
    line-by-line parser, which reports errors with line numbers."""
    headers = _HEADER.findall(text)
    if len(headers) != 1 or "%" in text:
        return None
    first_clause = re.search(r"^\s*[-\d]", text, re.M)
    if first_clause and first_clause.start() < _HEADER.search(text).start():
        return None
    nv, nc = int(headers[0][0]), int(headers[0][1])
    tokens = int_tokens(_NON_CLAUSE.sub("", text))
    if tokens is None or (tokens.size and tokens[-1] != 0):
        return None
    ends = np.flatnonzero(tokens == 0)
    lens = np.diff(np.concatenate([[-1], ends])) - 1
    if ends.size != nc or np.any(lens == 0) or (lens.size and lens.max() > _MAX_FAST_WIDTH):
        return None
    if tokens.size and np.abs(tokens).max() > nv:
        return None
    f = CnfFormula(nv)
    for v, t in _TAG.findall(text):
        if not 1 <= int(v) <= nv:
            return None
        f.set_tag(int(v), t)
    if nc:
        rows = np.zeros((nc, int(lens.max())), dtype=np.int64)
        starts = ends - lens
        col = np.arange(tokens.size) - np.repeat(starts, lens + 1)
        keep = tokens != 0
        rows[np.repeat(np.arange(nc), lens + 1)[keep], col[keep]] = tokens[keep]
        try:
            f.add_clauses(rows)
        except ParameterError:
            return None
    return f


def parse_dimacs(text: str) -> CnfFormula:
    fast = _parse_dimacs_fast(text)
    if fast is not None:
        return fast
    tags: dict[int, str] = {}
    header: tuple[int, int] | None = None
    formula: CnfFormula | None = None
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if line.startswith("c"):
            parts = line.split(maxsplit=3)
            if len(parts) == 4 and parts[1] == "var":
                try:
                    tags[int(parts[2])] = parts[3]
                except ValueError as exc:
                    raise ParseError(f"bad variable tag line {line!r}", lineno) from exc
            continue
        if line.startswith("p"):
            parts = line.split()
            if header is not None or len(parts) != 4 or parts[1] != "cnf":
                raise ParseError(f"bad problem line {line!r}", lineno)
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError as exc:
                raise ParseError(f"bad problem line {line!r}", lineno) from exc
            formula = CnfFormula(header[0])
            for v, t in tags.items():
                if not 1 <= v <= header[0]:
                    raise ParseError(f"tag for unknown variable {v}")
                formula.set_tag(v, t)
            continue
        if formula is None:
            raise ParseError("clause before problem line", lineno)
        try:
            tokens = [int(tok) for tok in line.split()]
        except ValueError as exc:
            raise ParseError(f"non-integer token in {line!r}", lineno) from exc
        for lit in tokens:
            if lit == 0:
                try:
                    formula.add_clause(current)
                except ParameterError as exc:
                    raise ParseError(str(exc), lineno) from exc
                current = []
            else:
                current.append(lit)
    if formula is None:
        raise ParseError("missing problem line")
    if current:
        raise ParseError("last clause not terminated by 0")
    if formula.num_clauses != header[1]:
        raise ParseError(f"header announces {header[1]} clauses, found {formula.num_clauses}")
    return formula


def dimacs_write(path: str | Path, f: CnfFormula) -> None:
    Path(path).write_text(format_dimacs(f))


def dimacs_read(path: str | Path) -> CnfFormula:
    return parse_dimacs(Path(path).read_text())
