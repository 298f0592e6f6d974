"""Seeded end-to-end trials: reduce, solve with the DP, compare with ground truth.

Trial i of a run uses ``derive_seed(seed, i)`` for everything random in it,
so results do not depend on ``jobs`` or on the order workers finish.
"""

from __future__ import annotations

import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import ResourceError
from .instances import (
    Instance,
    generate_no_solution,
    generate_planted,
)
from .pipeline import reduce
from .seeds import derive_seed
from .solvers import meet_in_the_middle, solve_td


@dataclass(frozen=True)
class TrialResult:
    index: int
    seed: int
    copies: int
    expected: bool          # ground truth: the instance has a solution
    sat: bool
    width: int
    seconds: float


@dataclass
class TrialSummary:
    label: str
    results: list[TrialResult] = field(default_factory=list)

    @property
    def trials(self) -> int:
        return len(self.results)

    @property
    def positives(self) -> list[TrialResult]:
        return [r for r in self.results if r.expected]

    @property
    def negatives(self) -> list[TrialResult]:
        return [r for r in self.results if not r.expected]

    @property
    def completeness(self) -> float | None:
        pos = self.positives
        return sum(r.sat for r in pos) / len(pos) if pos else None

    @property
    def false_positive_rate(self) -> float | None:
        neg = self.negatives
        return sum(r.sat for r in neg) / len(neg) if neg else None

    @property
    def max_width(self) -> int:
        return max((r.width for r in self.results), default=-1)

    def report_lines(self, timings: bool = False) -> list[str]:
        def fmt(x: float | None) -> str:
            return "n/a" if x is None else f"{x:.4f}"
        lines = [f"run {self.label}",
                 f"trials {self.trials}",
                 f"positives {len(self.positives)}",
                 f"negatives {len(self.negatives)}",
                 f"completeness {fmt(self.completeness)}",
                 f"false_positive_rate {fmt(self.false_positive_rate)}",
                 f"max_width {self.max_width}"]
        if timings:
            secs = [r.seconds for r in self.results]
            lines.append(f"seconds_total {sum(secs):.3f}")
            lines.append(f"seconds_max {max(secs, default=0.0):.3f}")
        return lines


def _solve_once(inst: Instance, expected: bool, index: int, seed: int, copies: int | None,
                options: dict, budget: int | None) -> TrialResult:
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        art = reduce(inst, seed, copies, **options)
    res = solve_td(art.formula, art.decomposition, budget=budget, want_model=False)
    return TrialResult(index, seed, art.meta["params"]["copies"], expected, res.sat,
                       art.decomposition.width(), time.perf_counter() - start)


def _run(tasks: Sequence[tuple], worker: Callable, jobs: int) -> list:
    if jobs <= 1:
        return [worker(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(worker, *t) for t in tasks]
        return [f.result() for f in futures]


def _planted_task(kind: str, k: int, n: int, size: int, i: int, seed: int,
                  copies: int | None, options: dict, budget: int | None) -> TrialResult:
    s = derive_seed(seed, i)
    inst, _ = generate_planted(kind, k, n, size, s)
    return _solve_once(inst, True, i, s, copies, options, budget)


def completeness_trials(kind: str, k: int, n: int, size: int, trials: int, seed: int,
                        copies: int | None = None, jobs: int = 1, budget: int | None = None,
                        **options) -> TrialSummary:
    """Fresh planted instance and fresh reduction seed per trial."""
    tasks = [(kind, k, n, size, i, seed, copies, options, budget) for i in range(trials)]
    summary = TrialSummary(f"planted {kind} k={k} n={n} size={size} copies={copies}")
    summary.results = _run(tasks, _planted_task, jobs)
    return summary


def _nosol_task(kind: str, k: int, n: int, size: int, i: int, seed: int,
                copies_list: Sequence[int], options: dict,
                budget: int | None) -> list[TrialResult]:
    s = derive_seed(seed, i)
    inst = generate_no_solution(kind, k, n, size, s)
    return [_solve_once(inst, False, i, s, L, options, budget) for L in copies_list]


def soundness_trials(kind: str, k: int, n: int, size: int, trials: int, seed: int,
                     copies_list: Sequence[int], jobs: int = 1, budget: int | None = None,
                     **options) -> dict[int, TrialSummary]:
    """Certified no-solution instances, each reduced at every L in ``copies_list``
    with the same reduction seed (so smaller L gives a sub-formula)."""
    tasks = [(kind, k, n, size, i, seed, tuple(copies_list), options, budget)
             for i in range(trials)]
    out = {L: TrialSummary(f"nosol {kind} k={k} n={n} size={size} copies={L}")
           for L in copies_list}
    for row in _run(tasks, _nosol_task, jobs):
        for L, res in zip(copies_list, row):
            out[L].results.append(res)
    return out


def _instance_task(inst: Instance, expected: bool, i: int, seed: int, copies: int | None,
                   options: dict, budget: int | None) -> TrialResult:
    s = derive_seed(seed, i)
    return _solve_once(inst, expected, i, s, copies, options, budget)


def verify_instance(inst: Instance, trials: int, seed: int, copies: int | None = None,
                    jobs: int = 1, budget: int | None = None, **options) -> TrialSummary:
    """Re-reduce one instance under ``trials`` derived seeds and compare every
    DP verdict with the meet-in-the-middle answer."""
    truth = meet_in_the_middle(inst) is not None
    tasks = [(inst, truth, i, seed, copies, options, budget) for i in range(trials)]
    summary = TrialSummary(f"verify {inst.kind} k={inst.k} n={inst.n} copies={copies}")
    try:
        summary.results = _run(tasks, _instance_task, jobs)
    except MemoryError as exc:
        raise ResourceError("DP tables exhausted memory") from exc
    return summary
