"""Hash families used by the reductions, and exact/statistical checks on them.

Two families live here. ``Gf2LinearHash`` is a random linear map over GF(2)
given by an r x u bit matrix. ``DietzHash`` is the multiply-shift family
``h(x) = ((a*x + b) mod (u*m)) // u`` on the universe [0, u); dropping ``b``
gives the almost-linear variant used to hash arrays before encoding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvariantViolation, ParameterError

_MAX_RANGE = 1 << 63


# --- GF(2) linear hashing -----------------------------------------------------

@dataclass(frozen=True)
class Gf2LinearHash:
    """Linear map {0,1}^u -> {0,1}^r.

    ``rows[i]`` packs matrix row i as an int whose bit j multiplies input bit j.
    Output bit i of ``h(v)`` is the parity of ``rows[i] & v``.
    """

    u: int
    r: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if len(self.rows) != self.r:
            raise ParameterError(f"expected {self.r} rows, got {len(self.rows)}")
        if any(not 0 <= row < (1 << self.u) for row in self.rows):
            raise ParameterError(f"matrix rows must fit in {self.u} bits")

    def __call__(self, v: int) -> int:
        return gf2_apply(self, v)

    def to_hex(self) -> list[str]:
        width = max(1, (self.u + 3) // 4)
        return [format(row, f"0{width}x") for row in self.rows]

    @classmethod
    def from_hex(cls, u: int, rows: Sequence[str]) -> "Gf2LinearHash":
        return cls(u, len(rows), tuple(int(s, 16) for s in rows))


def gf2_sample(u: int, r: int, rng: np.random.Generator) -> Gf2LinearHash:
    if u < 1 or r < 1:
        raise ParameterError("u and r must be positive")
    bits = rng.integers(0, 2, size=(r, u), dtype=np.uint8)
    rows = tuple(int("".join(map(str, row[::-1])), 2) for row in bits.tolist())
    return Gf2LinearHash(u, r, rows)


def gf2_apply(h: Gf2LinearHash, v: int) -> int:
    if not 0 <= v < (1 << h.u):
        raise ParameterError(f"input {v} is not a {h.u}-bit vector")
    out = 0
    for i, row in enumerate(h.rows):
        out |= (bin(row & v).count("1") & 1) << i
    return out


def concat_bits(parts: Sequence[tuple[int, int]]) -> int:
    """Concatenate (value, width) pairs; the first part occupies the low bits."""
    out, shift = 0, 0
    for value, width in parts:
        out |= value << shift
        shift += width
    return out


# --- Dietzfelbinger multiply-shift ----------------------------------------------

@dataclass(frozen=True)
class DietzHash:
    u: int
    m: int
    a: int
    b: int

    def __post_init__(self):
        for name in ("u", "m"):
            val = getattr(self, name)
            if val < 1 or val & (val - 1):
                raise ParameterError(f"{name} must be a power of 2, got {val}")
        if self.u * self.m >= _MAX_RANGE:
            raise ParameterError("u*m must stay below 2^63")
        if not (0 <= self.a < self.r and 0 <= self.b < self.r):
            raise ParameterError(f"a and b must lie in [0, {self.r})")

    @property
    def r(self) -> int:
        return self.u * self.m

    def __call__(self, x: int) -> int:
        return dietz_apply(self, x, with_offset=True)

    def stripped(self, x: int) -> int:
        return dietz_apply(self, x, with_offset=False)

    def to_list(self) -> list[int]:
        return [self.u, self.m, self.a, self.b]


def dietz_sample(u: int, m: int, rng: np.random.Generator) -> DietzHash:
    r = u * m
    if r >= _MAX_RANGE:
        raise ParameterError("u*m must stay below 2^63")
    a, b = rng.integers(0, r, size=2, dtype=np.int64).tolist()
    return DietzHash(u, m, a, b)


def dietz_apply(h: DietzHash, x: int, with_offset: bool = True) -> int:
    if not 0 <= x < h.u:
        raise ParameterError(f"{x} lies outside the universe [0, {h.u})")
    b = h.b if with_offset else 0
    return ((h.a * x + b) % h.r) // h.u


def almost_linearity_defect(h: DietzHash, x1: int, x2: int) -> int:
    """The carry kappa with hat(x1+x2) = hat(x1) + hat(x2) + kappa (mod m)."""
    if x1 < 0 or x2 < 0 or x1 + x2 >= h.u:
        raise ParameterError("x1, x2 and x1 + x2 must all lie in the universe")
    kappa = (h.stripped(x1 + x2) - h.stripped(x1) - h.stripped(x2)) % h.m
    if kappa not in (0, 1):
        raise InvariantViolation(f"defect {kappa} for {h} at ({x1}, {x2})")
    return kappa


@dataclass(frozen=True)
class ConcatenatedMainHash:
    """Several Dietzfelbinger hashes applied side by side, giving a vector."""

    components: tuple[DietzHash, ...]

    def __post_init__(self):
        if not self.components:
            raise ParameterError("need at least one component")
        first = self.components[0]
        if any((c.u, c.m) != (first.u, first.m) for c in self.components):
            raise ParameterError("components must share u and m")

    def __call__(self, x: int, with_offset: bool = True) -> tuple[int, ...]:
        return main_hash_apply(self, x, with_offset)


def main_hash_apply(H: ConcatenatedMainHash, x: int,
                    with_offset: bool = True) -> tuple[int, ...]:
    return tuple(dietz_apply(h, x, with_offset) for h in H.components)


# --- exact checks -----------------------------------------------------------------

@dataclass
class PairwiseReport:
    u: int
    m: int
    pairs_checked: int
    expected: int
    violations: list[tuple[int, int, int, int, int]] = field(default_factory=list)

    @property
    def exact(self) -> bool:
        return not self.violations


def pairwise_independence_exhaustive(u: int, m: int,
                                     max_params: int = 1 << 22) -> PairwiseReport:
    """Count, over all (a, b), how often each pair (x1, x2) lands on each (y1, y2).

    Every count must equal (u*m)^2 / m^2. Violations are listed as
    (x1, x2, y1, y2, count).
    """
    r = u * m
    if u < 2 or m < 1 or u & (u - 1) or m & (m - 1):
        raise ParameterError("u and m must be powers of 2 with u >= 2")
    if r * r > max_params:
        raise ParameterError(f"{r * r} parameter pairs exceed enumeration cap {max_params}")
    a = np.repeat(np.arange(r, dtype=np.int64), r)[:, None]
    b = np.tile(np.arange(r, dtype=np.int64), r)[:, None]
    xs = np.arange(u, dtype=np.int64)[None, :]
    table = ((a * xs + b) % r) // u
    expected = (r * r) // (m * m)
    report = PairwiseReport(u, m, 0, expected)
    for x1 in range(u):
        for x2 in range(u):
            if x1 == x2:
                continue
            counts = np.bincount(table[:, x1] * m + table[:, x2], minlength=m * m)
            report.pairs_checked += 1
            for cell in np.flatnonzero(counts != expected).tolist():
                report.violations.append((x1, x2, cell // m, cell % m, int(counts[cell])))
    return report


def defect_scan(u: int, m: int) -> dict[int, int]:
    """Histogram of the almost-linearity defect over every a in [0, u*m) and
    every pair (x1, x2) with x1 + x2 < u."""
    r = u * m
    a = np.arange(r, dtype=np.int64)[:, None, None]
    x1 = np.arange(u, dtype=np.int64)[None, :, None]
    x2 = np.arange(u, dtype=np.int64)[None, None, :]
    valid = np.broadcast_to((x1 + x2) < u, (r, u, u))
    hat = lambda x: ((a * x) % r) // u
    kappa = (hat(x1 + x2) - hat(x1) - hat(x2)) % m
    vals, counts = np.unique(kappa[valid], return_counts=True)
    return dict(zip(vals.tolist(), counts.tolist()))


def max_load(h: Callable[[int], object], S: Iterable[int]) -> tuple[object, int]:
    """Fullest bucket of ``h`` over ``S``; ties go to the smallest bucket."""
    loads: dict = {}
    for x in S:
        y = h(x)
        loads[y] = loads.get(y, 0) + 1
    if not loads:
        return None, 0
    best = max(loads.values())
    return min(y for y, c in loads.items() if c == best), best


# --- Monte-Carlo suites --------------------------------------------------------------

@dataclass(frozen=True)
class RateEstimate:
    """Observed event frequency against a bound, with a 3-sigma acceptance band."""

    name: str
    trials: int
    hits: int
    bound: float

    @property
    def rate(self) -> float:
        return self.hits / self.trials

    @property
    def sigma(self) -> float:
        p = min(max(self.bound, 0.0), 1.0)
        return math.sqrt(p * (1 - p) / self.trials)

    @property
    def passed(self) -> bool:
        return self.rate <= self.bound + 3 * self.sigma


def _random_matrices(rng: np.random.Generator, trials: int, r: int, u: int) -> np.ndarray:
    """Packed random GF(2) rows, shape (trials, r), as uint64 (u <= 64)."""
    if u > 64:
        raise ParameterError("vectorized GF(2) suites support u <= 64")
    bits = rng.integers(0, 2, size=(trials, r, u), dtype=np.uint64)
    weights = np.left_shift(np.uint64(1), np.arange(u, dtype=np.uint64))
    return (bits * weights).sum(axis=2, dtype=np.uint64)


def gf2_collision_rate(u: int, r: int, x1: int, x2: int, trials: int,
                       rng: np.random.Generator) -> RateEstimate:
    """Frequency of h(x1) == h(x2) over random linear maps; bound 2^-r."""
    if x1 == x2:
        raise ParameterError("collision test needs distinct inputs")
    rows = _random_matrices(rng, trials, r, u)
    parity = np.bitwise_count(rows & np.uint64(x1 ^ x2)) & 1
    hits = int(np.all(parity == 0, axis=1).sum())
    return RateEstimate("gf2_collision", trials, hits, 2.0 ** -r)


def gf2_max_loads(u: int, r: int, size: int, trials: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Max bucket load of random linear maps on random sets of ``size`` distinct vectors."""
    if size > (1 << u):
        raise ParameterError("set larger than the universe")
    loads = np.empty(trials, dtype=np.int64)
    weights = (1 << np.arange(r, dtype=np.int64))
    for t in range(trials):
        S = _distinct_vectors(rng, u, size)
        bits = ((S[:, None] >> np.arange(u, dtype=np.uint64)) & np.uint64(1)).astype(np.int64)
        R = rng.integers(0, 2, size=(u, r), dtype=np.int64)
        keys = ((bits @ R) & 1) @ weights
        loads[t] = np.bincount(keys).max()
    return loads


def _distinct_vectors(rng: np.random.Generator, u: int, size: int) -> np.ndarray:
    if u <= 20:
        return rng.choice(1 << u, size=size, replace=False).astype(np.uint64)
    out = np.unique(rng.integers(0, 1 << min(u, 63), size=size * 2, dtype=np.uint64))
    while out.size < size:
        more = rng.integers(0, 1 << min(u, 63), size=size, dtype=np.uint64)
        out = np.unique(np.concatenate([out, more]))
    return rng.permutation(out)[:size]


def _dietz_table(rng: np.random.Generator, u: int, m: int, trials: int,
                 xs: np.ndarray, with_offset: bool = True) -> np.ndarray:
    r = u * m
    if r >= 1 << 31:
        raise ParameterError("vectorized Dietzfelbinger suites need u*m < 2^31")
    a = rng.integers(0, r, size=(trials, 1), dtype=np.int64)
    b = rng.integers(0, r, size=(trials, 1), dtype=np.int64) if with_offset else 0
    return ((a * xs[None, :] + b) % r) // u


def chebyshev_overload_rate(u: int, m: int, size: int, delta: float, trials: int,
                            rng: np.random.Generator, y: int = 0) -> RateEstimate:
    """Frequency of bucket ``y`` receiving >= (1+delta)|S|/m elements of a fixed
    random S; bound m / (delta^2 |S|)."""
    xs = rng.choice(u, size=size, replace=False).astype(np.int64)
    table = _dietz_table(rng, u, m, trials, xs)
    load = (table == y).sum(axis=1)
    hits = int((load >= (1 + delta) * size / m).sum())
    return RateEstimate("chebyshev_overload", trials, hits, m / (delta * delta * size))


def strong_collision_rate(u: int, m: int, k: int, trials: int,
                          rng: np.random.Generator, size: int | None = None) -> RateEstimate:
    """Frequency of two elements of a random S landing within circular distance
    k-1 of each other; bound 1/2 whenever |S| <= sqrt(m)/k."""
    if size is None:
        size = max(2, int(math.isqrt(m) // k))
    if size * k > math.isqrt(m):
        raise ParameterError(f"|S| = {size} exceeds sqrt(m)/k")
    xs = rng.choice(u, size=size, replace=False).astype(np.int64)
    table = np.sort(_dietz_table(rng, u, m, trials, xs), axis=1)
    gaps = np.diff(table, axis=1)
    wrap = table[:, :1] + m - table[:, -1:]
    closest = np.minimum(gaps.min(axis=1), wrap[:, 0]) if size > 1 else wrap[:, 0]
    hits = int((closest <= k - 1).sum())
    return RateEstimate("strong_collision", trials, hits, 0.5)


def concatenated_max_loads(u: int, m: int, components: int, size: int, trials: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Max joint-bucket load of ``components`` stripped hashes on random sets."""
    loads = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        xs = rng.choice(u, size=min(size, u), replace=False).astype(np.int64)
        key = np.zeros(xs.size, dtype=np.int64)
        for _ in range(components):
            key = key * m + _dietz_table(rng, u, m, 1, xs, with_offset=False)[0]
        _, counts = np.unique(key, return_counts=True)
        loads[t] = counts.max()
    return loads
