"""``twsum`` command line.

Exit codes: 0 success, 1 check failed (verdict printed), 2 usage or input
error, 3 reduction failure, 4 resource budget exceeded.

Options shared by every command may also come from a ``--config`` file of
``key = value`` lines (``#`` starts a comment; keys are option names such as
``budget``, ``jobs``, ``seed``). Precedence: flags, then the config file,
then the ``TWSUM_BUDGET`` environment variable (budget only), then defaults.

``--budget B`` caps the DP width at B and both brute-force tuple counts and
correction-array sizes at 2^B.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import warnings
from pathlib import Path
from typing import Sequence

from . import downstream, hashing
from .cnf import dimacs_read, primal_graph
from .decomp import td_read, td_write, validate
from .errors import (
    DecompositionError,
    GenerationError,
    ParameterError,
    ParseError,
    ResourceError,
    TwsumError,
)
from .experiments import TrialSummary, completeness_trials, soundness_trials, verify_instance
from .instances import (
    generate_no_solution,
    generate_planted,
    log_n,
    read_instance,
    write_instance,
    write_witness,
)
from .pipeline import (
    DEFAULT_CORRECTION_CAP,
    DEFAULT_DELTA,
    ReductionArtifact,
    default_copies,
    measured_width_report,
    reduce,
)
from .seeds import derive_seed, make_rng
from .solvers import DEFAULT_TUPLE_BUDGET, DEFAULT_WIDTH_BUDGET, meet_in_the_middle, solve_td

SHARED_DEFAULTS = {"seed": 0, "budget": None, "jobs": 1, "timings": False}
CSV_COLUMNS = ["family", "u", "r|m", "|S|", "trials", "mean_max_load", "p_violation", "bound"]


class Failure(Exception):
    """Carry an exit code and message up to ``main``."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# --- options -----------------------------------------------------------------------

def read_config(path: str | Path) -> dict[str, str]:
    out = {}
    for no, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value' in config, got {raw!r}", no)
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _coerce(value: str, like):
    if isinstance(like, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


def resolve_options(args: argparse.Namespace, defaults: dict) -> None:
    """Fill options left unset on the command line (value None)."""
    config = read_config(args.config) if getattr(args, "config", None) else {}
    env_budget = os.environ.get("TWSUM_BUDGET")
    for key, default in defaults.items():
        if getattr(args, key, None) is not None:
            continue
        if key in config:
            like = default if default is not None else 0
            setattr(args, key, _coerce(config[key], like))
        elif key == "budget" and env_budget:
            args.budget = int(env_budget)
        else:
            setattr(args, key, default)


def width_cap(args) -> int:
    return DEFAULT_WIDTH_BUDGET if args.budget is None else args.budget


def tuple_cap(args) -> int:
    return DEFAULT_TUPLE_BUDGET if args.budget is None else 1 << args.budget


def correction_cap(args) -> int:
    return DEFAULT_CORRECTION_CAP if args.budget is None else 1 << args.budget


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _pair_list(text: str) -> list[tuple[int, int]]:
    try:
        return [tuple(int(x) for x in item.split(":")) for item in text.split(",") if item]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected u:m pairs, got {text!r}")


def _kind(text: str) -> str:
    kinds = {"kxor": "xor", "xor": "xor", "ksum": "sum", "sum": "sum"}
    if text not in kinds:
        raise argparse.ArgumentTypeError(f"kind must be kxor or ksum, got {text!r}")
    return kinds[text]


def _emit(lines: Sequence[str]) -> None:
    for line in lines:
        print(line)


# --- commands ----------------------------------------------------------------------

def _range_or_u(args, parser_error) -> int:
    if args.kind == "xor":
        if args.u is None:
            parser_error("kxor needs --u")
        return args.u
    if args.range is None:
        parser_error("ksum needs --range")
    return args.range


def cmd_gen(args) -> int:
    size = _range_or_u(args, args.parser_error)
    if args.nosol:
        inst = generate_no_solution(args.kind, args.k, args.n, size, args.seed)
        witness = None
    else:
        inst, witness = generate_planted(args.kind, args.k, args.n, size, args.seed)
    out = Path(args.out)
    write_instance(out, inst)
    print(f"wrote {out}")
    if witness is not None:
        wpath = out.with_name(out.name + ".witness.json")
        write_witness(wpath, inst, witness)
        print(f"wrote {wpath}")
    return 0


def _sum_options(args) -> dict:
    return {"delta": args.delta, "strict": args.strict, "correction_cap": correction_cap(args)}


def cmd_reduce(args) -> int:
    inst = read_instance(args.instance)
    options = _sum_options(args) if inst.kind == "sum" else {}
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            art = reduce(inst, args.seed, args.copies, **options)
    except (ParameterError, GenerationError) as exc:
        raise Failure(3, f"reduction failed: {exc}") from None
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    paths = art.write(args.out)
    _emit(f"wrote {p}" for p in paths)
    p = art.meta["params"]
    _emit([f"kind {art.kind}", f"copies {p['copies']}", f"seed {art.meta['seed']}",
           f"variables {art.formula.num_vars}", f"clauses {art.formula.num_clauses}",
           f"bags {art.decomposition.num_bags}"])
    _emit(measured_width_report(art).lines())
    return 0


def _summary_lines(summaries: Sequence[TrialSummary], timings: bool) -> list[str]:
    lines = []
    for s in summaries:
        lines += s.report_lines(timings)
    return lines


def _verify_exit(summaries: Sequence[TrialSummary]) -> int:
    perfect = all(s.completeness in (None, 1.0) for s in summaries)
    print(f"completeness_perfect {'yes' if perfect else 'no'}")
    return 0 if perfect else 1


def cmd_verify(args) -> int:
    options = {}
    kind = None
    if args.instance:
        inst = read_instance(args.instance)
        kind = inst.kind
    elif args.corpus:
        if args.kind is None or args.k is None or args.n is None:
            args.parser_error("--corpus needs --kind, --k and --n")
        kind = args.kind
        size = _range_or_u(args, args.parser_error)
    else:
        args.parser_error("give an instance file or --corpus")
    if kind == "sum":
        options = _sum_options(args)
    copies = args.copies
    lines = []
    if args.artifact:
        art = ReductionArtifact.read(args.artifact)
        res = solve_td(art.formula, art.decomposition, budget=width_cap(args),
                       want_model=False)
        lines += [f"artifact {args.artifact}",
                  f"artifact_result {'SAT' if res.sat else 'UNSAT'}",
                  f"artifact_width {art.decomposition.width()}"]
        if copies is None:
            copies = [art.meta["params"]["copies"]]
    if args.instance:
        summaries = [verify_instance(inst, args.trials, args.seed, L, jobs=args.jobs,
                                     budget=width_cap(args), **options)
                     for L in copies or [None]]
    elif args.corpus == "planted":
        summaries = [completeness_trials(kind, args.k, args.n, size, args.trials, args.seed,
                                         L, jobs=args.jobs, budget=width_cap(args), **options)
                     for L in copies or [None]]
    else:
        Ls = copies or [default_copies(args.k, args.n)]
        by_L = soundness_trials(kind, args.k, args.n, size, args.trials, args.seed, Ls,
                                jobs=args.jobs, budget=width_cap(args), **options)
        summaries = [by_L[L] for L in Ls]
    lines += _summary_lines(summaries, args.timings)
    _emit(lines)
    if args.figure:
        from .plotting import trial_figure
        trial_figure([s.label for s in summaries], [s.completeness for s in summaries],
                     [s.false_positive_rate for s in summaries], args.figure)
        print(f"figure {args.figure}")
    return _verify_exit(summaries)


def cmd_solve(args) -> int:
    f = dimacs_read(args.cnf)
    d = td_read(args.td)
    res = solve_td(f, d, mode=args.mode, budget=width_cap(args), want_model=args.model)
    lines = [f"result {'SAT' if res.sat else 'UNSAT'}", f"width {d.width()}",
             f"max_table {res.max_table}"]
    if res.count is not None:
        lines.append(f"count {res.count}")
    if res.model is not None:
        lits = [str(v if val else -v) for v, val in enumerate(res.model, 1)]
        lines.append("model " + " ".join(lits) + " 0")
    if res.note:
        lines.append(f"note {res.note}")
    _emit(lines)
    return 0


def cmd_check_td(args) -> int:
    f = dimacs_read(args.cnf)
    d = td_read(args.td)
    rep = validate(d, primal_graph(f))
    _emit([f"valid {'yes' if rep.valid else 'no'}", f"width {d.width()}",
           f"detail {rep.summary()}"])
    return 0 if rep.valid else 1


def cmd_mitm(args) -> int:
    inst = read_instance(args.instance)
    w = meet_in_the_middle(inst, budget=tuple_cap(args))
    if w is None:
        print("result NONE")
        return 0
    value = format(w.value, f"0{inst.u}b") if inst.kind == "xor" else str(w.value)
    _emit(["result FOUND", "witness " + " ".join(map(str, w.indices)), f"value {value}"])
    return 0


def cmd_maxcut(args) -> int:
    inst = downstream.parse_max2sat(Path(args.max2sat).read_text())
    gadget = downstream.max2sat_to_maxcut(inst, units=args.units)
    g = gadget.graph
    paths = downstream.write_gadget(args.out, gadget)
    lines = [f"wrote {p}" for p in paths]
    lines += [f"vertices {g.num_vertices}", f"edges {len(g.edges)}", f"target {g.target}",
              f"base {gadget.base}"]
    ok = True
    if args.unweighted:
        _, simple = downstream.weighted_to_unweighted(g)
        upath = Path(args.out).with_name(Path(args.out).name + ".unweighted.maxcut")
        upath.write_text(downstream.format_maxcut(simple))
        lines += [f"wrote {upath}", f"unweighted_vertices {simple.num_vertices}",
                  f"unweighted_edges {len(simple.edges)}", f"unweighted_target {simple.target}"]
    if args.td:
        d = td_read(args.td)
        gd = downstream.gadget_decomposition(inst, gadget, d)
        tpath = Path(args.out).with_name(Path(args.out).name + ".td")
        td_write(tpath, gd)
        rep = validate(gd, downstream.graph_as_primal(g))
        ok &= rep.valid
        lines += [f"wrote {tpath}", f"width {gd.width()}",
                  f"width_increase {gd.width() - d.width()}",
                  f"valid {'yes' if rep.valid else 'no'}"]
    if args.verify:
        rep = downstream.verify_reduction_pair(inst, gadget)
        ok &= rep.ok
        lines += [f"opt_sat {rep.opt_sat}", f"opt_cut {rep.opt_cut}"]
        lines += [f"t {t} sat {'yes' if a else 'no'} cut {'yes' if b else 'no'}"
                  for t, a, b in rep.rows]
        lines += [f"equivalent {'yes' if rep.equivalent else 'no'}",
                  f"heavy_edges_cut {'yes' if rep.heavy_cut_in_all_optima else 'no'}"]
    _emit(lines)
    return 0 if ok else 1


# --- hash statistics ---------------------------------------------------------------

HASH_FAMILIES = ("gf2", "gf2-collision", "dietz-exact", "dietz-defect", "chebyshev",
                 "strong", "concat")


def _fmt(x) -> str:
    if isinstance(x, (str, int)):
        return str(x)
    return f"{x:.6g}"


def hash_stats_rows(family: str, sizes: Sequence, trials: int, seed: int,
                    u: int, m: int, k: int, delta: float) -> list[tuple[dict, bool]]:
    """One CSV row per size, each with a pass flag; row i draws from derive_seed(seed, i).
    For dietz-exact the sizes are (u, m) pairs."""
    rows = []
    for i, s in enumerate(sizes):
        rng = make_rng(derive_seed(seed, i))
        if family == "gf2":
            loads = hashing.gf2_max_loads(u, s, 1 << s, trials, rng)
            bound = s * math.log2(s)
            row = dict(u=u, rm=s, S=1 << s, mean=float(loads.mean()),
                       p=float((loads > bound).mean()), bound=bound)
            ok = row["mean"] <= bound
        elif family == "gf2-collision":
            est = hashing.gf2_collision_rate(u, s, 1, 2, trials, rng)
            row = dict(u=u, rm=s, S=2, mean="", p=est.rate, bound=est.bound)
            ok = est.passed
        elif family == "dietz-exact":
            uu, mm = s
            rep = hashing.pairwise_independence_exhaustive(uu, mm)
            row = dict(u=uu, rm=mm, S=uu, mean="", trials=(uu * mm) ** 2,
                       p=len(rep.violations) / max(rep.pairs_checked, 1), bound=0)
            ok = rep.exact
        elif family == "dietz-defect":
            hist = hashing.defect_scan(u, s)
            total = sum(hist.values())
            bad = sum(c for v, c in hist.items() if v not in (0, 1))
            row = dict(u=u, rm=s, S=u, mean="", trials=total, p=bad / total, bound=0)
            ok = bad == 0
        elif family == "chebyshev":
            est = hashing.chebyshev_overload_rate(u, m, s, delta, trials, rng)
            row = dict(u=u, rm=m, S=s, mean="", p=est.rate, bound=est.bound)
            ok = est.passed
        elif family == "strong":
            size = max(2, math.isqrt(s) // k)
            est = hashing.strong_collision_rate(u, s, k, trials, rng, size)
            row = dict(u=u, rm=s, S=size, mean="", p=est.rate, bound=est.bound)
            ok = est.passed
        elif family == "concat":
            comps = log_n(s) // 2
            mm = 1 << k
            size = s ** (k // 2)
            loads = hashing.concatenated_max_loads(u, mm, comps, size, trials, rng)
            bound = s ** (delta * k)
            row = dict(u=u, rm=mm, S=size, mean=float(loads.mean()),
                       p=float((loads >= bound).mean()), bound=bound)
            ok = True            # trend table only
        else:
            raise ParameterError(f"unknown hash family {family!r}")
        row.setdefault("trials", trials)
        rows.append(({"family": family, "u": row["u"], "r|m": row["rm"], "|S|": row["S"],
                      "trials": row["trials"], "mean_max_load": row["mean"],
                      "p_violation": row["p"], "bound": row["bound"]}, ok))
    return rows


DEFAULT_SIZES = {"gf2": [8, 10, 12], "gf2-collision": [4, 6, 8],
                 "dietz-exact": [(4, 2), (8, 2), (8, 4), (16, 4)], "dietz-defect": [4],
                 "chebyshev": [256, 1024], "strong": [1024, 4096], "concat": [16, 64]}
DEFAULT_HASH_U = {"gf2": 32, "gf2-collision": 32, "dietz-exact": 16, "dietz-defect": 16,
                  "chebyshev": 1 << 16, "strong": 1 << 16, "concat": 1 << 20}


def cmd_hash_stats(args) -> int:
    if args.family == "dietz-exact":
        sizes = args.pairs or DEFAULT_SIZES[args.family]
    else:
        sizes = args.sizes or DEFAULT_SIZES[args.family]
    u = args.u or DEFAULT_HASH_U[args.family]
    trials = args.trials if args.trials is not None else 10_000
    delta = args.delta
    if delta is None:
        delta = DEFAULT_DELTA if args.family == "concat" else 0.5
    rows = hash_stats_rows(args.family, sizes, trials, args.seed, u, args.m, args.k, delta)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row, _ in rows:
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    if args.out:
        Path(args.out).write_text(buf.getvalue())
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(buf.getvalue())
    all_ok = all(ok for _, ok in rows)
    verdict = ("exact pass" if all_ok else "exact fail") if args.family.startswith("dietz") \
        else ("pass" if all_ok else "fail")
    print(verdict, file=sys.stderr if not args.out else sys.stdout)
    if args.figure:
        from .plotting import hash_stats_figure
        hash_stats_figure([r for r, _ in rows], args.figure)
        print(f"figure {args.figure}", file=sys.stderr if not args.out else sys.stdout)
    return 0 if all_ok else 1


# --- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=None)
    shared.add_argument("--budget", type=int, default=None,
                        help="DP width cap B; tuple and correction-array caps 2^B")
    shared.add_argument("--config", default=None, help="key = value option file")
    shared.add_argument("--jobs", type=int, default=None, help="worker processes for trials")
    shared.add_argument("--timings", action="store_const", const=True, default=None,
                        help="add wall-clock lines to reports")

    parser = argparse.ArgumentParser(prog="twsum", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def instance_shape(p, need: bool):
        p.add_argument("--k", type=int, required=need)
        p.add_argument("--n", type=int, required=need)
        p.add_argument("--u", type=int, help="vector width (kxor)")
        p.add_argument("--range", type=int, help="entry magnitude bound (ksum)")

    p = sub.add_parser("gen", parents=[shared], help="generate an instance")
    p.add_argument("kind", type=_kind)
    instance_shape(p, True)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--planted", action="store_true")
    mode.add_argument("--nosol", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen, parser_error=p.error)

    def sum_flags(p):
        p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
        p.add_argument("--strict", action="store_true",
                       help="refuse k-SUM parameters outside the soundness regime")

    p = sub.add_parser("reduce", parents=[shared], help="reduce an instance to CNF + TD")
    p.add_argument("instance")
    p.add_argument("--out", required=True, help="output prefix")
    p.add_argument("--copies", type=int, default=None)
    sum_flags(p)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("verify", parents=[shared], help="end-to-end seeded trials")
    p.add_argument("instance", nargs="?")
    p.add_argument("--artifact", help="bundle prefix written by reduce")
    p.add_argument("--corpus", choices=("planted", "nosol"))
    p.add_argument("--kind", type=_kind)
    instance_shape(p, False)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--copies", type=_int_list, default=None,
                   help="copy count; for --corpus nosol a comma list")
    p.add_argument("--figure", help="write a bar chart (needs matplotlib)")
    sum_flags(p)
    p.set_defaults(func=cmd_verify, parser_error=p.error)

    p = sub.add_parser("solve", parents=[shared], help="DP SAT solve over a decomposition")
    p.add_argument("cnf")
    p.add_argument("td")
    p.add_argument("--mode", choices=("decide", "count"), default="decide")
    p.add_argument("--model", action="store_true", help="print a model when SAT")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check-td", parents=[shared], help="validate a decomposition")
    p.add_argument("cnf")
    p.add_argument("td")
    p.set_defaults(func=cmd_check_td)

    p = sub.add_parser("mitm", parents=[shared], help="meet-in-the-middle oracle")
    p.add_argument("instance")
    p.set_defaults(func=cmd_mitm)

    p = sub.add_parser("maxcut", parents=[shared], help="Max-2-SAT to Max-Cut gadget")
    p.add_argument("max2sat")
    p.add_argument("--out", required=True, help="output prefix")
    p.add_argument("--units", choices=("pad", "collapse"), default="pad")
    p.add_argument("--unweighted", action="store_true", help="also write the simple-graph form")
    p.add_argument("--td", help="decomposition of the 2-CNF primal graph to transform")
    p.add_argument("--verify", action="store_true", help="brute-force both sides for every t")
    p.set_defaults(func=cmd_maxcut)

    p = sub.add_parser("hash-stats", parents=[shared], help="hash family statistics as CSV")
    p.add_argument("--family", choices=HASH_FAMILIES, required=True)
    p.add_argument("--sizes", type=_int_list, default=None,
                   help="r (gf2*), m (dietz-defect, strong), |S| (chebyshev), n (concat)")
    p.add_argument("--pairs", type=_pair_list, default=None,
                   help="u:m list for dietz-exact")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--u", type=int, default=None)
    p.add_argument("--m", type=int, default=16, help="range for chebyshev")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--delta", type=float, default=None,
                   help="overload margin (chebyshev, default 0.5) or load exponent "
                        "(concat, default 0.05)")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--figure", help="write a load plot (needs matplotlib)")
    p.set_defaults(func=cmd_hash_stats)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        resolve_options(args, SHARED_DEFAULTS)
        return args.func(args)
    except Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ParseError, ParameterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ResourceError, MemoryError) as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 4
    except (GenerationError, DecompositionError, TwsumError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
