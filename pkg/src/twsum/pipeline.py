"""Randomized reductions from k-XOR and k-SUM to SAT with a tree decomposition.

Both reductions follow the same recipe. A shared *main* hash compresses each
element to about (k/2)·log n bits and L independent *secondary* hashes add a
few more bits. Copy ℓ hashes the instance with (main, secondary ℓ), encodes
the hashed instance as a glued pair of chains and exposes the shared bag.
Equality clauses tie the main-hash variables of consecutive copies, and the
tree decomposition joins consecutive special bags with a swap chain.

Random draws are taken in a fixed order (main hash first, then secondary
hashes 1, 2, ...), so the artifact built with L copies is a prefix of the one
built with more copies under the same seed.

Bundle layout for ``ReductionArtifact.write(prefix)``:

``prefix.cnf``
    DIMACS with ``c var <id> <tag>`` lines. Tags end in ``@copy=<ℓ>``.
``prefix.td``
    Tree decomposition (see :func:`twsum.decomp.format_td`). Bags named
    ``special[ℓ]`` are the copies' shared bags.
``prefix.meta.json``
    ``kind``, ``seed``, ``params`` (including ``copies`` and
    ``copies_default``), ``hashes`` (GF(2) rows as hex strings, or Dietz
    ``[u, m, a, b]`` lists), ``special`` (per copy: bag index, ``main`` and
    ``secondary`` variable ids in bit order, least significant first),
    ``copy_vars`` (per copy: first and last variable id), ``width``,
    ``warnings`` and, for k-SUM, ``normalization``.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np

from .cnf import CnfFormula, dimacs_read, dimacs_write, eq_rows
from .decomp import Decomposition, SpecialBag, td_read, td_write
from .encode import encode_glued
from .errors import ParameterError, ResourceError
from .hashing import (
    DietzHash,
    Gf2LinearHash,
    concat_bits,
    dietz_sample,
    gf2_sample,
)
from .instances import KSumInstance, KXorInstance, log_n, normalize_ksum
from .seeds import make_rng

DEFAULT_DELTA = 0.05
DEFAULT_CORRECTION_CAP = 10 ** 6
XOR_WIDTH_SLACK = 4
SUM_WIDTH_SLACK = 8


def default_copies(k: int, n: int) -> int:
    return 10 * k * log_n(n)


# --- parameters --------------------------------------------------------------------

@dataclass(frozen=True)
class XorPipelineParams:
    k: int
    n: int
    u: int
    r0: int
    r1: int
    copies: int
    seed: int

    @classmethod
    def for_instance(cls, inst: KXorInstance, seed: int,
                     copies: int | None = None) -> "XorPipelineParams":
        r0 = inst.k // 2 * log_n(inst.n) + 1
        r1 = max(1, math.ceil(3 * math.log2(r0)))
        L = default_copies(inst.k, inst.n) if copies is None else copies
        if L < 1:
            raise ParameterError(f"need at least one copy, got {L}")
        return cls(inst.k, inst.n, inst.u, r0, r1, L, seed)

    def as_dict(self) -> dict[str, int]:
        return {"k": self.k, "n": self.n, "u": self.u, "r0": self.r0, "r1": self.r1,
                "copies": self.copies, "copies_default": default_copies(self.k, self.n),
                "seed": self.seed}


@dataclass(frozen=True)
class SumPipelineParams:
    k: int
    n: int
    W: int
    u: int
    m: int
    m2: int
    delta: float
    copies: int
    seed: int
    correction_cap: int = DEFAULT_CORRECTION_CAP

    @classmethod
    def for_instance(cls, inst: KSumInstance, seed: int, copies: int | None = None,
                     delta: float = DEFAULT_DELTA,
                     correction_cap: int = DEFAULT_CORRECTION_CAP) -> "SumPipelineParams":
        """``inst`` must be balanced (non-negative, second half negated)."""
        if not inst.balanced:
            raise ParameterError("parameters are derived from the normalized instance")
        if not delta > 0:
            raise ParameterError(f"delta must be positive, got {delta}")
        k, n, W = inst.k, inst.n, inst.W
        u = 1
        while u <= k * W:
            u *= 2
        bound = 4 * k * k * n ** (4 * delta * k)
        m2 = 1
        while m2 <= bound:
            m2 *= 2
        L = default_copies(k, n) if copies is None else copies
        if L < 1:
            raise ParameterError(f"need at least one copy, got {L}")
        return cls(k, n, W, u, 1 << k, m2, float(delta), L, seed, correction_cap)

    @property
    def main_components(self) -> int:
        return log_n(self.n) // 2

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.k,) * self.main_components + (self.m2.bit_length() - 1,)

    @property
    def correction_size(self) -> int:
        return (self.k + 1) ** (self.main_components + 1)

    @property
    def soundness_condition(self) -> bool:
        """Whether log k < delta * k, the regime where the soundness argument applies."""
        return math.log2(self.k) < self.delta * self.k

    def as_dict(self) -> dict[str, Any]:
        return {"k": self.k, "n": self.n, "W": self.W, "u": self.u, "m": self.m,
                "m_secondary": self.m2, "delta": self.delta, "copies": self.copies,
                "copies_default": default_copies(self.k, self.n), "seed": self.seed,
                "correction_cap": self.correction_cap, "widths": list(self.widths)}


# --- artifact ------------------------------------------------------------------------

@dataclass
class ReductionArtifact:
    kind: str
    formula: CnfFormula
    decomposition: Decomposition
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def copies(self) -> int:
        return len(self.meta["special"])

    def special_name(self, copy: int) -> str:
        return f"special[{copy}]"

    def main_vars(self, copy: int) -> list[int]:
        return list(self.meta["special"][copy - 1]["main"])

    def write(self, prefix: str | Path) -> list[Path]:
        prefix = Path(prefix)
        paths = [prefix.with_name(prefix.name + ext) for ext in (".cnf", ".td", ".meta.json")]
        dimacs_write(paths[0], self.formula)
        td_write(paths[1], self.decomposition)
        paths[2].write_text(json.dumps(self.meta, sort_keys=True, indent=1) + "\n")
        return paths

    @classmethod
    def read(cls, prefix: str | Path) -> "ReductionArtifact":
        prefix = Path(prefix)
        formula = dimacs_read(prefix.with_name(prefix.name + ".cnf"))
        decomp = td_read(prefix.with_name(prefix.name + ".td"))
        meta = json.loads(prefix.with_name(prefix.name + ".meta.json").read_text())
        return cls(meta["kind"], formula, decomp, meta)


Artifact = ReductionArtifact


# --- shared assembly -------------------------------------------------------------------

def _assemble(formula: CnfFormula, copies: list, main_bits: int) -> tuple[Decomposition, list]:
    """Join the copies' path decompositions into one tree.

    Between the special bags of copies ℓ and ℓ+1 we insert 2·main_bits bags
    that first add x_j of copy ℓ+1 and then drop x_j of copy ℓ, for each main
    bit j in turn. The equality clause x_j == x'_j lies in the bag after the add.
    """
    flats, sizes, edges, specials = [], [], [], []
    base = 0
    special_idx = []
    for enc in copies:
        d = enc.decomposition
        flats.append(d.bag_vars)
        sizes.append(np.diff(d.bag_offsets))
        edges.append(d.edges + base)
        special_idx.append(base + enc.special_bag)
        base += d.num_bags
    for c in range(len(copies) - 1):
        cur = list(copies[c].special_vars)
        nxt = copies[c + 1].special_vars
        prev = special_idx[c]
        for j in range(main_bits):
            cur = cur + [nxt[j]]
            add = cur
            cur = [v for v in cur if v != copies[c].special_vars[j]]
            for bag in (add, cur):
                flats.append(np.asarray(bag, dtype=np.int64))
                sizes.append(np.array([len(bag)], dtype=np.int64))
                edges.append(np.array([[prev, base]], dtype=np.int64))
                prev = base
                base += 1
        edges.append(np.array([[prev, special_idx[c + 1]]], dtype=np.int64))
    size_arr = np.concatenate(sizes)
    offsets = np.zeros(size_arr.size + 1, dtype=np.int64)
    np.cumsum(size_arr, out=offsets[1:])
    for c, enc in enumerate(copies, 1):
        specials.append((f"special[{c}]", SpecialBag(special_idx[c - 1], enc.special_vars)))
    d = Decomposition(np.concatenate(flats), offsets, np.concatenate(edges).reshape(-1, 2),
                      formula.num_vars, "tree", dict(specials))
    return d, special_idx


def _tie_copies(formula: CnfFormula, copies: list, main_bits: int) -> None:
    for a, b in zip(copies, copies[1:]):
        formula.add_clauses(eq_rows(np.asarray(a.special_vars[:main_bits]),
                                    np.asarray(b.special_vars[:main_bits])))


def _copy_meta(copies: list, ranges: list[tuple[int, int]], special_idx: list[int],
               main_bits: int) -> tuple[list, list]:
    special = [{"copy": c, "bag": int(special_idx[c - 1]),
                "main": list(enc.special_vars[:main_bits]),
                "secondary": list(enc.special_vars[main_bits:])}
               for c, enc in enumerate(copies, 1)]
    return special, [list(r) for r in ranges]


def _build(kind: str, formula: CnfFormula, per_copy_arrays: list, widths: tuple[int, ...],
           labels1: list[int], labels2: list[int], main_bits: int):
    """Encode every copy; ``labels1``/``labels2`` pick (and name) the arrays of
    each half, in the order the chains visit them."""
    copies, ranges = [], []
    for c, arrays in enumerate(per_copy_arrays, 1):
        start = formula.num_vars + 1
        base = min(labels1)
        first = [arrays[j - base] for j in labels1]
        second = [arrays[j - base] for j in labels2]
        enc = encode_glued(first, second, widths, kind, formula=formula,
                           suffix=f"@copy={c}", first_labels=labels1, second_labels=labels2)
        copies.append(enc)
        ranges.append((start, formula.num_vars))
    # encode_glued returns each copy's decomposition sized for the formula at
    # that moment; rebuild with the final vertex count
    for enc in copies:
        d = enc.decomposition
        enc.decomposition = Decomposition(d.bag_vars, d.bag_offsets, d.edges, formula.num_vars,
                                          d.shape, d.special)
    _tie_copies(formula, copies, main_bits)
    decomp, special_idx = _assemble(formula, copies, main_bits)
    return decomp, special_idx, copies, ranges


# --- k-XOR --------------------------------------------------------------------------------

def sample_xor_hashes(params: XorPipelineParams) -> tuple[Gf2LinearHash, list[Gf2LinearHash]]:
    rng = make_rng(params.seed)
    main = gf2_sample(params.u, params.r0, rng)
    secondary = [gf2_sample(params.u, params.r1, rng) for _ in range(params.copies)]
    return main, secondary


def hashed_xor_arrays(inst: KXorInstance, main: Gf2LinearHash,
                      secondary: Gf2LinearHash) -> list[list[int]]:
    """Arrays of copy ℓ: main hash in the low r0 bits, secondary hash above."""
    main_of = {v: main(v) for arr in inst.arrays for v in arr}
    return [[concat_bits([(main_of[v], main.r), (secondary(v), secondary.r)]) for v in arr]
            for arr in inst.arrays]


def reduce_kxor(inst: KXorInstance, seed: int = 0, copies: int | None = None,
                params: XorPipelineParams | None = None) -> ReductionArtifact:
    if params is None:
        params = XorPipelineParams.for_instance(inst, seed, copies)
    main, secondary = sample_xor_hashes(params)
    per_copy = [hashed_xor_arrays(inst, main, h) for h in secondary]
    formula = CnfFormula()
    t = params.r0 + params.r1
    half = inst.k // 2
    decomp, special_idx, encs, ranges = _build(
        "xor", formula, per_copy, (t,), list(range(1, half + 1)),
        list(range(half + 1, inst.k + 1)), params.r0)
    special, copy_vars = _copy_meta(encs, ranges, special_idx, params.r0)
    meta = {
        "kind": "xor",
        "seed": params.seed,
        "params": params.as_dict(),
        "hashes": {"main": main.to_hex(), "secondary": [h.to_hex() for h in secondary]},
        "special": special,
        "copy_vars": copy_vars,
        "width": decomp.width(),
        "warnings": [],
    }
    return ReductionArtifact("xor", formula, decomp, meta)


# --- k-SUM --------------------------------------------------------------------------------

def sample_sum_hashes(params: SumPipelineParams) -> tuple[list[DietzHash], list[DietzHash]]:
    rng = make_rng(params.seed)
    main = [dietz_sample(params.u, params.m, rng) for _ in range(params.main_components)]
    secondary = [dietz_sample(params.u, params.m2, rng) for _ in range(params.copies)]
    return main, secondary


def correction_vectors(main: list[DietzHash], secondary: DietzHash, k: int,
                       widths: tuple[int, ...]) -> list[tuple[int, ...]]:
    """Offset corrections: (⌊b/u⌋ per component) + v for every v in [0, k]^d, wrapped per width."""
    base = [h.b // h.u for h in main] + [secondary.b // secondary.u]
    mods = [1 << w for w in widths]
    return [tuple((b + x) % md for b, x, md in zip(base, v, mods))
            for v in itertools.product(range(k + 1), repeat=len(base))]


def hashed_sum_arrays(inst: KSumInstance, main: list[DietzHash],
                      secondary: DietzHash, k: int,
                      widths: tuple[int, ...]) -> list[list[tuple[int, ...]]]:
    """Arrays B_0..B_{k+1} of one copy, using the hashes with their offsets removed."""
    main_of = {v: tuple(h.stripped(v) for h in main) for arr in inst.arrays for v in arr}
    body = [[main_of[v] + (secondary.stripped(v),) for v in arr] for arr in inst.arrays]
    corr = correction_vectors(main, secondary, k, widths)
    return [corr] + body + [list(corr)]


def reduce_ksum(inst: KSumInstance, seed: int = 0, copies: int | None = None,
                delta: float = DEFAULT_DELTA, correction_cap: int = DEFAULT_CORRECTION_CAP,
                strict: bool = False,
                params: SumPipelineParams | None = None) -> ReductionArtifact:
    """Reduce a k-SUM instance (raw or already balanced).

    When log k >= delta·k the soundness argument does not cover the chosen
    parameters; this raises with ``strict`` and otherwise warns and records
    the fact in the metadata.
    """
    record = None
    if not inst.balanced:
        inst, record = normalize_ksum(inst)
    if params is None:
        params = SumPipelineParams.for_instance(inst, seed, copies, delta, correction_cap)
    if log_n(params.n) % 2:
        raise ParameterError("n must be a power of 4")
    notes = []
    if not params.soundness_condition:
        msg = (f"log2 k = {math.log2(params.k):g} is not below delta*k = "
               f"{params.delta * params.k:g}; completeness still holds")
        if strict:
            raise ParameterError(msg)
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    if params.correction_size > params.correction_cap:
        raise ResourceError(f"correction arrays need {params.correction_size} vectors, "
                            f"above the cap of {params.correction_cap}")
    main, secondary = sample_sum_hashes(params)
    widths = params.widths
    per_copy = [hashed_sum_arrays(inst, main, h, params.k, widths) for h in secondary]
    formula = CnfFormula()
    main_bits = params.k * params.main_components
    k = params.k
    # the second chain visits its correction array first: the DP tables then
    # only grow to the number of half-sums on the chain's last array
    decomp, special_idx, encs, ranges = _build(
        "sum", formula, per_copy, widths, list(range(0, k // 2 + 1)),
        [k + 1] + list(range(k // 2 + 1, k + 1)), main_bits)
    special, copy_vars = _copy_meta(encs, ranges, special_idx, main_bits)
    meta = {
        "kind": "sum",
        "seed": params.seed,
        "params": params.as_dict(),
        "hashes": {"main": [h.to_list() for h in main],
                   "secondary": [h.to_list() for h in secondary]},
        "special": special,
        "copy_vars": copy_vars,
        "width": decomp.width(),
        "warnings": notes,
        "soundness_condition": params.soundness_condition,
        "normalization": None if record is None else
        {"shift": record.shift, "negated_arrays": list(record.negated_arrays), "W": record.W},
    }
    return ReductionArtifact("sum", formula, decomp, meta)


def reduce(inst: Union[KXorInstance, KSumInstance], seed: int = 0, copies: int | None = None,
           **options) -> ReductionArtifact:
    if inst.kind == "xor":
        return reduce_kxor(inst, seed, copies)
    return reduce_ksum(inst, seed, copies, **options)


# --- width report ------------------------------------------------------------------------

@dataclass(frozen=True)
class WidthReport:
    kind: str
    measured: int
    leading_term: float
    bound: float
    formula: str

    @property
    def slack(self) -> float:
        return self.bound - self.measured

    @property
    def within(self) -> bool:
        return self.measured <= self.bound

    def lines(self) -> list[str]:
        return [f"width {self.measured}",
                f"bound {self.bound:g} ({self.formula})",
                f"leading {self.leading_term:g}",
                f"slack {self.slack:g}",
                f"within {'yes' if self.within else 'no'}"]


def measured_width_report(artifact: ReductionArtifact) -> WidthReport:
    """Measured width against r0 + r1 + 4 (XOR) or
    (k/2)·log n + 4δk·log n + 2·log k + 8 (SUM)."""
    p = artifact.meta["params"]
    measured = artifact.decomposition.width()
    k, lg = p["k"], log_n(p["n"])
    leading = k / 2 * lg
    if artifact.kind == "xor":
        bound = p["r0"] + p["r1"] + XOR_WIDTH_SLACK
        text = f"r0 + r1 + {XOR_WIDTH_SLACK}"
    else:
        bound = leading + 4 * p["delta"] * k * lg + 2 * math.log2(k) + SUM_WIDTH_SLACK
        text = f"(k/2)log n + 4 delta k log n + 2 log k + {SUM_WIDTH_SLACK}"
    return WidthReport(artifact.kind, measured, leading, bound, text)
