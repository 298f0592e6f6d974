"""k-XOR and k-SUM instances: model, generation, normalization and file I/O.

Bitvectors are stored as Python ints. Bit position ``j`` (1-indexed) of a
vector ``v`` is ``(v >> (j - 1)) & 1``; instance files print vectors msb first.
Array and element indices in witnesses are 1-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import reduce
from operator import xor
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import GenerationError, ParameterError, ParseError
from .seeds import make_rng

MAX_MAGNITUDE = (1 << 63) - 1


def is_power_of(x: int, base: int) -> bool:
    if x < 1:
        return False
    while x % base == 0:
        x //= base
    return x == 1


def log2_exact(x: int) -> int:
    if x < 1 or x & (x - 1):
        raise ParameterError(f"{x} is not a power of 2")
    return x.bit_length() - 1


def _check_k(k: int) -> None:
    if k < 2 or k % 2:
        raise ParameterError(f"k must be even and >= 2, got {k}")


@dataclass(frozen=True)
class KXorInstance:
    k: int
    n: int
    u: int
    arrays: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        _check_k(self.k)
        if not is_power_of(self.n, 2):
            raise ParameterError(f"n must be a power of 2, got {self.n}")
        if self.u < 1:
            raise ParameterError("u must be positive")
        if len(self.arrays) != self.k:
            raise ParameterError(f"expected {self.k} arrays, got {len(self.arrays)}")
        for arr in self.arrays:
            if len(arr) != self.n:
                raise ParameterError(f"every array must hold {self.n} entries")
            for v in arr:
                if not 0 <= v < (1 << self.u):
                    raise ParameterError(f"vector {v} does not fit in {self.u} bits")

    kind = "xor"


@dataclass(frozen=True)
class KSumInstance:
    """A k-SUM instance.

    In the raw form (``balanced=False``) a solution picks one entry per array
    with total sum zero. The balanced form produced by :func:`normalize_ksum`
    asks instead for a common value of the first-half and second-half sums.
    """

    k: int
    n: int
    arrays: tuple[tuple[int, ...], ...]
    balanced: bool = False

    def __post_init__(self):
        _check_k(self.k)
        if not is_power_of(self.n, 4):
            raise ParameterError(f"n must be a power of 4, got {self.n}")
        if len(self.arrays) != self.k:
            raise ParameterError(f"expected {self.k} arrays, got {len(self.arrays)}")
        for arr in self.arrays:
            if len(arr) != self.n:
                raise ParameterError(f"every array must hold {self.n} entries")
            for v in arr:
                if abs(v) > MAX_MAGNITUDE:
                    raise ParameterError(f"entry {v} exceeds 63-bit magnitude")
        if self.balanced and any(v < 0 for arr in self.arrays for v in arr):
            raise ParameterError("balanced instances must be non-negative")

    kind = "sum"

    @property
    def W(self) -> int:
        return max((v for arr in self.arrays for v in arr), default=0)


@dataclass(frozen=True)
class VectorSubsetSumInstance:
    """Arrays of d-dimensional vectors; component j lives in [0, 2**widths[j])."""

    widths: tuple[int, ...]
    arrays: tuple[tuple[tuple[int, ...], ...], ...]

    def __post_init__(self):
        if not self.widths or any(w < 1 for w in self.widths):
            raise ParameterError("widths must be a nonempty list of positive ints")
        for arr in self.arrays:
            for vec in arr:
                if len(vec) != len(self.widths):
                    raise ParameterError(f"vector {vec} has wrong dimension")
                for c, w in zip(vec, self.widths):
                    if not 0 <= c < (1 << w):
                        raise ParameterError(f"component {c} overflows {w} bits")

    @property
    def d(self) -> int:
        return len(self.widths)


@dataclass(frozen=True)
class SolutionWitness:
    indices: tuple[int, ...]
    value: int


@dataclass(frozen=True)
class NormalizationRecord:
    shift: int
    negated_arrays: tuple[int, ...]
    W: int


Instance = Union[KXorInstance, KSumInstance]


# --- random generation -------------------------------------------------------

def _random_vectors(rng: np.random.Generator, u: int, count: int) -> list[int]:
    chunks = (u + 31) // 32
    raw = rng.integers(0, 1 << 32, size=(count, chunks), dtype=np.uint64)
    mask = (1 << u) - 1
    out = []
    for row in raw.tolist():
        v = 0
        for c in row:
            v = (v << 32) | c
        out.append(v & mask)
    return out


def _random_ints(rng: np.random.Generator, bound: int, count: int) -> list[int]:
    if bound < 0 or bound > MAX_MAGNITUDE // 2:
        raise ParameterError(f"range bound {bound} out of supported interval")
    return rng.integers(-bound, bound + 1, size=count, dtype=np.int64).tolist()


def _check_shape(kind: str, k: int, n: int) -> None:
    _check_k(k)
    if kind == "xor" and not is_power_of(n, 2):
        raise ParameterError(f"k-XOR needs n a power of 2, got {n}")
    if kind == "sum" and not is_power_of(n, 4):
        raise ParameterError(f"k-SUM needs n a power of 4, got {n}")
    if kind not in ("xor", "sum"):
        raise ParameterError(f"unknown instance kind {kind!r}")


def random_instance(kind: str, k: int, n: int, u_or_range: int,
                    rng: np.random.Generator) -> Instance:
    _check_shape(kind, k, n)
    if kind == "xor":
        arrays = tuple(tuple(_random_vectors(rng, u_or_range, n)) for _ in range(k))
        return KXorInstance(k, n, u_or_range, arrays)
    arrays = tuple(tuple(_random_ints(rng, u_or_range, n)) for _ in range(k))
    return KSumInstance(k, n, arrays)


def generate_planted(kind: str, k: int, n: int, u_or_range: int,
                     seed: int) -> tuple[Instance, SolutionWitness]:
    """Random instance with one planted zero-sum tuple at uniform positions."""
    _check_shape(kind, k, n)
    rng = make_rng(seed)
    inst = random_instance(kind, k, n, u_or_range, rng)
    arrays = [list(a) for a in inst.arrays]
    positions = rng.integers(0, n, size=k).tolist()
    if kind == "xor":
        arrays[-1][positions[-1]] = reduce(
            xor, (arrays[j][positions[j]] for j in range(k - 1)), 0)
        inst = KXorInstance(k, n, u_or_range, tuple(map(tuple, arrays)))
    else:
        for _ in range(10_000):
            partial = sum(arrays[j][positions[j]] for j in range(k - 1))
            if abs(partial) <= u_or_range:
                break
            for j in range(k - 1):
                arrays[j][positions[j]] = _random_ints(rng, u_or_range, 1)[0]
        else:
            raise GenerationError("could not plant a zero-sum tuple within range")
        arrays[-1][positions[-1]] = -partial
        inst = KSumInstance(k, n, tuple(map(tuple, arrays)))
    indices = tuple(p + 1 for p in positions)
    return inst, SolutionWitness(indices, half_sum(inst, indices))


def _blocked_instance(kind: str, k: int, n: int, u_or_range: int,
                      rng: np.random.Generator) -> Instance:
    """Random instance that cannot have a solution.

    k-XOR: bit 1 is set only in the last array, so it survives every XOR.
    k-SUM: every entry is 1 mod (k+1), so any k of them sum to k mod (k+1).
    """
    if kind == "xor":
        arrays = [[v & ~1 for v in _random_vectors(rng, u_or_range, n)] for _ in range(k)]
        arrays[-1] = [v | 1 for v in arrays[-1]]
        return KXorInstance(k, n, u_or_range, tuple(map(tuple, arrays)))
    lo = -((u_or_range + 1) // (k + 1))
    hi = (u_or_range - 1) // (k + 1)
    if u_or_range < 1:
        raise GenerationError("range too small for a solution-free k-SUM instance")
    steps = rng.integers(lo, hi + 1, size=(k, n)).tolist()
    arrays = tuple(tuple(1 + (k + 1) * t for t in row) for row in steps)
    return KSumInstance(k, n, arrays)


def generate_no_solution(kind: str, k: int, n: int, u_or_range: int, seed: int,
                         max_retries: int = 100) -> Instance:
    """Instance certified solution-free by the meet-in-the-middle oracle.

    Uniform draws are tried first. If ``max_retries`` of them all have a
    solution (dense k-SUM ranges almost always do), a draw from a family
    with no solutions by construction is certified and returned instead.
    """
    from .solvers import meet_in_the_middle

    _check_shape(kind, k, n)
    rng = make_rng(seed)
    for _ in range(max_retries):
        inst = random_instance(kind, k, n, u_or_range, rng)
        if meet_in_the_middle(inst) is None:
            return inst
    inst = _blocked_instance(kind, k, n, u_or_range, rng)
    if meet_in_the_middle(inst) is not None:
        raise GenerationError("blocked instance has a solution")   # unreachable by design
    return inst


# --- witnesses ----------------------------------------------------------------

def half_sum(inst: Instance, indices: Sequence[int]) -> int:
    """Value of the first-half selection (XOR or integer sum)."""
    half = inst.k // 2
    picked = [inst.arrays[j][indices[j] - 1] for j in range(half)]
    if inst.kind == "xor":
        return reduce(xor, picked, 0)
    return sum(picked)


def verify_witness(inst: Instance, witness: SolutionWitness) -> bool:
    idx = witness.indices
    if len(idx) != inst.k or any(not 1 <= i <= inst.n for i in idx):
        raise ParameterError(f"witness indices {idx} out of range")
    half = inst.k // 2
    picked = [inst.arrays[j][idx[j] - 1] for j in range(inst.k)]
    if inst.kind == "xor":
        left = reduce(xor, picked[:half], 0)
        right = reduce(xor, picked[half:], 0)
    elif inst.balanced:
        left, right = sum(picked[:half]), sum(picked[half:])
    else:
        left, right = sum(picked[:half]), -sum(picked[half:])
    return left == right == witness.value


def normalize_ksum(inst: KSumInstance) -> tuple[KSumInstance, NormalizationRecord]:
    """Negate the second half, then shift every entry by the max magnitude.

    A tuple solves the raw instance iff its two half-sums agree in the result.
    """
    if inst.balanced:
        raise ParameterError("instance is already normalized")
    half = inst.k // 2
    shift = max((abs(v) for arr in inst.arrays for v in arr), default=0)
    arrays = []
    for j, arr in enumerate(inst.arrays):
        sign = -1 if j >= half else 1
        arrays.append(tuple(sign * v + shift for v in arr))
    out = KSumInstance(inst.k, inst.n, tuple(arrays), balanced=True)
    return out, NormalizationRecord(shift, tuple(range(half + 1, inst.k + 1)), out.W)


def pad_arrays(arrays: Sequence[Sequence[int]], base: int) -> list[list[int]]:
    """Duplicate each array's last entry until the common length is a power of ``base``.

    Duplicating an existing element never creates or removes a solution.
    """
    if any(len(a) == 0 for a in arrays):
        raise ParameterError("cannot pad an empty array")
    size = max(len(a) for a in arrays)
    target = 1
    while target < size:
        target *= base
    return [list(a) + [a[-1]] * (target - len(a)) for a in arrays]


# --- file I/O -----------------------------------------------------------------

def format_instance(inst: Instance) -> str:
    lines = []
    if inst.kind == "xor":
        lines.append(f"kxor {inst.k} {inst.n} {inst.u}")
        for j, arr in enumerate(inst.arrays, 1):
            lines.append(f"# array {j}")
            lines.extend(format(v, f"0{inst.u}b") for v in arr)
    else:
        if inst.balanced:
            lines.append("# balanced form: first-half sum equals second-half sum")
        lines.append(f"ksum {inst.k} {inst.n}")
        for j, arr in enumerate(inst.arrays, 1):
            lines.append(f"# array {j}")
            lines.extend(str(v) for v in arr)
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> Instance:
    header = None
    balanced = False
    values: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.startswith("# balanced form"):
                balanced = True
            continue
        if header is None:
            parts = line.split()
            try:
                if parts[0] == "kxor" and len(parts) == 4:
                    header = ("xor", int(parts[1]), int(parts[2]), int(parts[3]))
                elif parts[0] == "ksum" and len(parts) == 3:
                    header = ("sum", int(parts[1]), int(parts[2]), 0)
                else:
                    raise ParseError(f"bad header {line!r}", lineno)
            except ValueError as exc:
                raise ParseError(f"bad header {line!r}", lineno) from exc
            continue
        kind, _, _, u = header
        try:
            if kind == "xor":
                if len(line) != u or set(line) - {"0", "1"}:
                    raise ParseError(f"expected {u}-bit binary string, got {line!r}", lineno)
                values.append(int(line, 2))
            else:
                values.append(int(line))
        except ValueError as exc:
            raise ParseError(f"bad entry {line!r}", lineno) from exc
    if header is None:
        raise ParseError("missing header line")
    kind, k, n, u = header
    if len(values) != k * n:
        raise ParseError(f"expected {k * n} entries, found {len(values)}")
    arrays = tuple(tuple(values[j * n:(j + 1) * n]) for j in range(k))
    if kind == "xor":
        return KXorInstance(k, n, u, arrays)
    return KSumInstance(k, n, arrays, balanced=balanced)


def write_instance(path: str | Path, inst: Instance) -> None:
    Path(path).write_text(format_instance(inst))


def read_instance(path: str | Path) -> Instance:
    return parse_instance(Path(path).read_text())


def write_witness(path: str | Path, inst: Instance, witness: SolutionWitness) -> None:
    value = (format(witness.value, f"0{inst.u}b") if inst.kind == "xor"
             else witness.value)
    payload = {"indices": list(witness.indices), "value": value}
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n")


def read_witness(path: str | Path, inst: Instance) -> SolutionWitness:
    payload = json.loads(Path(path).read_text())
    value = payload["value"]
    if inst.kind == "xor":
        value = int(value, 2)
    return SolutionWitness(tuple(payload["indices"]), int(value))


def log_n(n: int) -> int:
    return int(round(math.log2(n)))
