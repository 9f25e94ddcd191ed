"""Command line experiment runner.

Every output starts with the fully resolved configuration (a ``# config:``
line for CSV, a ``"config"`` key for JSON) and contains no timestamps or
timings, so re-running a command with the embedded configuration reproduces
the file byte for byte. Replicates are spread over ``ALPHATHETA_WORKERS``
processes without changing any output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .params import Params, frac_str, parameter_grid, to_fraction
from .rng import run_replicates, stream

DEFAULT_SEED = 1


def _rational(text: str) -> Fraction:
    try:
        return to_fraction(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def _add_common(p: argparse.ArgumentParser, alpha="1/2", theta="1/2"):
    p.add_argument("--alpha", type=_rational, default=_rational(alpha) if alpha else None,
                   help="alpha as p/q or decimal")
    p.add_argument("--theta", type=_rational, default=_rational(theta) if theta else None,
                   help="theta as p/q or decimal")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default="-", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="alphatheta", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("grow", help="grow (alpha, theta) trees; histogram or tree list")
    _add_common(g)
    g.add_argument("--n", type=_positive_int, default=5)
    g.add_argument("--reps", type=_positive_int, default=1000)
    g.add_argument("--trees", action="store_true", help="list every tree instead of counts")

    c = sub.add_parser("crp", help="ordered Chinese restaurant compositions")
    _add_common(c)
    c.add_argument("--n", type=_positive_int, default=10)
    c.add_argument("--reps", type=_positive_int, default=1000)
    c.add_argument("--exact", action="store_true", help="exact law of the composition")

    e = sub.add_parser("exact", help="exact rational identity checks")
    _add_common(e, alpha=None, theta=None)
    e.add_argument("--n", type=_positive_int, default=None)
    e.add_argument("--check", default="all",
                   choices=("all", "decrement", "lemma12", "dsym", "weak", "exchangeability",
                            "first-split", "spinal", "markov", "perturbed", "tree-law"))

    li = sub.add_parser("limits", help="limit objects: partitions, strings, tables")
    _add_common(li)
    mode = li.add_mutually_exclusive_group()
    mode.add_argument("--phi-table", action="store_true", help="Laplace exponent grid")
    mode.add_argument("--moments", action="store_true", help="local time moments")
    mode.add_argument("--partition", choices=("ordered", "recursive"))
    mode.add_argument("--beads", action="store_true", help="strings of beads")
    mode.add_argument("--local-time", action="store_true", help="local time samples")
    li.add_argument("--k", type=_positive_int, default=1000, help="tables for --partition ordered")
    li.add_argument("--eps", type=_positive_float, default=1e-3)
    li.add_argument("--budget", type=_positive_int, default=1000)
    li.add_argument("--reps", type=_positive_int, default=1)

    b = sub.add_parser("beads", help="bead-crushing chain")
    _add_common(b)
    b.add_argument("--k", type=_positive_int, default=3)
    b.add_argument("--budget", type=_positive_int, default=1000)
    b.add_argument("--reps", type=_positive_int, default=1)
    b.add_argument("--newick", action="store_true", help="skeletons as Newick with lengths")

    v = sub.add_parser("verify", help="acceptance suite")
    v.add_argument("--suite", choices=("quick", "full"), default="quick")
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--only", type=int, nargs="*", help="criterion numbers")
    v.add_argument("--out", default="-")
    v.add_argument("--format", choices=("csv", "json"), default="json")
    return ap


# ---------------------------------------------------------------------------
# output


def _config(args, **extra) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "out"}
    cfg.update(extra)
    return {k: (frac_str(v) if isinstance(v, Fraction) else v) for k, v in sorted(cfg.items())}


def _csv_text(config: dict, rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def _json_text(config: dict, body: dict) -> str:
    return json.dumps({"config": config, **body}, sort_keys=True, indent=1) + "\n"


def _emit(args, text: str):
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _params(args, parser) -> Params:
    try:
        return Params(args.alpha, args.theta)
    except ValueError as exc:
        parser.error(str(exc))


def _fmt(x) -> str:
    return frac_str(x) if isinstance(x, Fraction) else x


# ---------------------------------------------------------------------------
# commands


def cmd_grow(args, parser) -> int:
    from .exact import MAX_EXACT_N, exact_tree_dist
    from .newick import to_newick
    from .verify import _histogram, chunk_tree_histories

    p = _params(args, parser)
    fmt = args.format or "csv"
    cfg = _config(args, format=fmt)
    rows = np.asarray(run_replicates(chunk_tree_histories, args.reps, args.seed, args.n, p))
    if args.trees:
        from .growth import tree_from_history

        trees = [to_newick(tree_from_history(r)) for r in rows]
        if fmt == "csv":
            text = _csv_text(cfg, [("rep", "tree")] + list(enumerate(trees)))
        else:
            text = _json_text(cfg, {"trees": trees})
        _emit(args, text)
        return 0
    hist = _histogram(rows) if args.n > 1 else {}
    if args.n == 1:
        from .trees import LabeledBinaryTree

        hist = {LabeledBinaryTree.single(): args.reps}
    law = exact_tree_dist(args.n, p) if args.n < MAX_EXACT_N else None
    items = sorted(((to_newick(t), c, law[t] if law else None) for t, c in hist.items()))
    if fmt == "csv":
        head = ("tree", "count") + (("exact_probability",) if law else ())
        body = [(t, c) + ((frac_str(q),) if law else ()) for t, c, q in items]
        text = _csv_text(cfg, [head] + body)
    else:
        text = _json_text(cfg, {"histogram": [
            {"tree": t, "count": c, **({"exact_probability": frac_str(q)} if law else {})}
            for t, c, q in items]})
    _emit(args, text)
    return 0


def cmd_crp(args, parser) -> int:
    from .crp import Composition, exact_composition_dist
    from .verify import chunk_crp

    p = _params(args, parser)
    fmt = args.format or "csv"
    cfg = _config(args, format=fmt)
    if args.exact:
        if args.n > 20:
            parser.error("--exact needs n <= 20")
        dist = exact_composition_dist(args.n, p)
        items = sorted((str(Composition(c)), frac_str(q)) for c, q in dist.items() if q)
        if fmt == "csv":
            text = _csv_text(cfg, [("composition", "probability")] + items)
        else:
            text = _json_text(cfg, {"law": dict(items)})
        _emit(args, text)
        return 0
    x = np.asarray(run_replicates(chunk_crp, args.reps, args.seed, args.n, p))
    n = args.n
    recs = []
    for r, row in enumerate(x):
        k = int(row[n])
        recs.append((r, ",".join(str(int(v)) for v in row[:k]), k, int(row[n + 1]) + 1))
    if fmt == "csv":
        text = _csv_text(cfg, [("rep", "composition", "K", "customer1_block")] + recs)
    else:
        text = _json_text(cfg, {"samples": [
            {"composition": c, "K": k, "customer1_block": b} for _, c, k, b in recs]})
    _emit(args, text)
    return 0


def _exact_reports(check: str, grid: list, n: Optional[int]) -> list:
    from . import exact
    from .crp import check_decrement_recursion, check_row_sums, decrement_q
    from .params import ALPHA_GRID

    out = []

    def add(res, p=None, **info):
        rep = exact.report(res, p)
        rep.update({k: _fmt(v) for k, v in info.items()})
        out.append(rep)

    want = (lambda name: check in ("all", name))
    if want("decrement"):
        for p in grid:
            add(check_row_sums(n or 50, p), p)
            add(check_decrement_recursion(n or 50, p), p)
    if want("lemma12"):
        alphas = sorted({p.alpha for p in grid}) if len(grid) < 20 else ALPHA_GRID
        for a in alphas:
            add(exact.check_lemma12(n or 20, a), None, alpha=a)
    if want("dsym"):
        from .crp import CheckResult

        for p in grid:
            d13, closed = exact.d_sym(1, 3, p), exact.d_sym_13_closed(p)
            ok = exact.d_sym(1, 1, p) == 0 and exact.d_sym(1, 2, p) == 0 and d13 == closed
            add(CheckResult("dsym", ok, None if ok else {"d13": d13, "closed": closed}), p,
                d13=d13, zero=d13 == 0)
    if want("weak"):
        for p in grid:
            for m in ([n] if n else range(1, 7)):
                res = exact.weak_consistency_check(m, p)
                add(res, p, n=m, tv_gap=res.details["tv_gap"])
    if want("exchangeability"):
        for p in grid:
            for m in ([n] if n else range(2, 6)):
                add(exact.exchangeability_check(m, p), p, n=m)
    for name, fn in (("first-split", exact.check_first_split), ("spinal", exact.check_spinal),
                     ("markov", exact.check_markov_branching)):
        if want(name):
            for p in grid:
                for m in ([n] if n else range(2, 7)):
                    add(fn(m, p), p, n=m)
    if check == "perturbed":
        def q_bad(m_, j, p):
            v = decrement_q(m_, j, p)
            return v * Fraction(11, 10) if (m_, j) == (3, 1) else v

        for p in grid:
            add(check_decrement_recursion(n or 10, p, q_bad), p, control="perturbed q(3,1)")
    return out


def cmd_exact(args, parser) -> int:
    from . import exact

    fmt = args.format or "json"
    if args.check == "lemma12" and args.alpha is not None and args.theta is None:
        # the lemma compares two theta lines, so alpha alone is enough
        args.theta = 1 - args.alpha
    if (args.alpha is None) != (args.theta is None):
        parser.error("give both --alpha and --theta, or neither for the whole grid")
    grid = [_params(args, parser)] if args.alpha is not None else parameter_grid()
    cfg = _config(args, format=fmt)
    if args.check == "tree-law":
        if len(grid) != 1 or args.n is None:
            parser.error("tree-law needs --alpha, --theta and --n")
        if args.n > exact.MAX_EXACT_N:
            parser.error(f"tree-law needs n <= {exact.MAX_EXACT_N}")
        from .newick import to_newick

        law = sorted((to_newick(t), frac_str(q)) for t, q in
                     exact.exact_tree_dist(args.n, grid[0]).items())
        if fmt == "csv":
            text = _csv_text(cfg, [("tree", "probability")] + law)
        else:
            text = _json_text(cfg, {"law": dict(law)})
        _emit(args, text)
        return 0
    reports = _exact_reports(args.check, grid, args.n)
    if fmt == "csv":
        rows = [("check", "params", "pass", "witness")]
        for r in reports:
            rows.append((r["check"], json.dumps(r["params"], sort_keys=True), int(r["pass"]),
                         json.dumps(r["witness"], sort_keys=True)))
        text = _csv_text(cfg, rows)
    else:
        text = _json_text(cfg, {"reports": reports,
                                "pass": all(r["pass"] for r in reports)})
    _emit(args, text)
    return 0


def cmd_limits(args, parser) -> int:
    from . import limits

    fmt = args.format or ("json" if args.moments else "csv")
    if args.phi_table:
        cfg = _config(args, format=fmt, s_values=list(limits.PHI_S_VALUES))
        rows = limits.phi_table(parameter_grid(), limits.PHI_S_VALUES)
        head = ("alpha", "theta", "s", "closed_form", "quadrature")
        if fmt == "csv":
            text = _csv_text(cfg, [head] + rows)
        else:
            text = _json_text(cfg, {"table": [dict(zip(head, r)) for r in rows]})
        _emit(args, text)
        return 0
    if args.moments:
        cfg = _config(args, format=fmt, orders=[1, 2, 3, 4])
        obj = json.loads(limits.moments_json(parameter_grid(), (1, 2, 3, 4)))
        if fmt == "csv":
            rows = [("alpha", "theta", "order", "moment")]
            rows += [(o["alpha"], o["theta"], k, v) for o in obj for k, v in o["moments"].items()]
            text = _csv_text(cfg, rows)
        else:
            text = _json_text(cfg, {"moments": obj})
        _emit(args, text)
        return 0
    p = _params(args, parser)
    if not 0 < p.alpha < 1:
        parser.error("limit objects need 0 < alpha < 1")
    cfg = _config(args, format=fmt)
    rng = stream(args.seed)
    if args.local_time:
        xs = limits.sample_local_time(p, args.reps, rng)
        rows = [("rep", "L")] + [(i, float(x)) for i, x in enumerate(xs)]
        text = (_csv_text(cfg, rows) if fmt == "csv"
                else _json_text(cfg, {"samples": [float(x) for x in xs]}))
        _emit(args, text)
        return 0
    objs = []
    for _ in range(args.reps):
        if args.beads:
            objs.append(limits.string_of_beads(p, args.budget, rng))
        elif args.partition == "recursive":
            objs.append(limits.build_interval_partition_recursive(p, args.eps, rng))
        else:
            objs.append(limits.build_interval_partition_ordered(p, args.k, rng))
    if args.beads:
        if fmt == "csv":
            rows = [("rep", "position", "mass")]
            rows += [(i, x, m) for i, s in enumerate(objs) for x, m in s.csv_rows()]
            text = _csv_text(cfg, rows)
        else:
            text = _json_text(cfg, {"strings": [s.to_json_obj() for s in objs]})
    else:
        if fmt == "csv":
            rows = [("rep", "g", "d", "mass")]
            rows += [(i, *r) for i, ip in enumerate(objs) for r in ip.csv_rows()]
            text = _csv_text(cfg, rows)
        else:
            text = _json_text(cfg, {"partitions": [
                {"intervals": [list(r) for r in ip.csv_rows()], "leftover": ip.leftover}
                for ip in objs]})
    _emit(args, text)
    return 0


def cmd_beads(args, parser) -> int:
    from .beads import sample_Rk
    from .newick import to_newick

    p = _params(args, parser)
    if not 0 < p.alpha < 1:
        parser.error("bead trees need 0 < alpha < 1")
    fmt = args.format or "json"
    cfg = _config(args, format=fmt)
    trees = [sample_Rk(args.k, p, args.budget, stream(args.seed, i)) for i in range(args.reps)]
    if args.newick:
        sk = [to_newick(bt.skeleton()) for bt in trees]
        text = (_csv_text(cfg, [("rep", "newick")] + list(enumerate(sk))) if fmt == "csv"
                else _json_text(cfg, {"skeletons": sk}))
    elif fmt == "csv":
        rows = [("rep", "block", "position", "mass")]
        for i, bt in enumerate(trees):
            for b in bt.shape.sorted_blocks():
                s = bt.edges[frozenset(b)]
                label = " ".join(map(str, b))
                rows += [(i, label, x, m) for x, m in s.csv_rows()]
        text = _csv_text(cfg, rows)
    else:
        text = _json_text(cfg, {"bead_trees": [bt.to_json_obj() for bt in trees]})
    _emit(args, text)
    return 0


def cmd_verify(args, parser) -> int:
    from . import verify

    seed = verify.DEFAULT_SEED if args.seed is None else args.seed
    only = args.only or None
    if only and any(n not in verify.CRITERIA for n in only):
        parser.error(f"criteria are numbered 1..{len(verify.CRITERIA)}")

    def progress(r):
        print(r.line(), file=sys.stderr, flush=True)

    results = verify.run_suite(args.suite, seed, only=only, progress=progress)
    cfg = {"command": "verify", "suite": args.suite, "seed": seed, "only": only,
           "format": args.format}
    if args.format == "csv":
        rows = [("criterion", "title", "checks", "failed_checks", "limit_seconds", "pass")]
        for r in results:
            rows.append((r.number, r.title, len(r.checks),
                         sum(not c["pass"] for c in r.checks), r.limit_seconds,
                         int(r.checks_passed)))
        text = _csv_text(cfg, rows)
    else:
        tests = sum(r.n_statistical for r in results)
        text = _json_text(cfg, {
            "criteria": [{**r.payload(), "limit_seconds": r.limit_seconds,
                          "pass": r.checks_passed} for r in results],
            "statistical_tests": tests, "level": verify.LEVEL,
            "familywise_bound": tests * verify.LEVEL})
    _emit(args, text)
    ok = all(r.passed for r in results)
    print(f"{'ALL PASS' if ok else 'FAILURES'}: {sum(r.passed for r in results)}/"
          f"{len(results)} criteria", file=sys.stderr)
    return 0 if ok else 1


COMMANDS = {"grow": cmd_grow, "crp": cmd_crp, "exact": cmd_exact, "limits": cmd_limits,
            "beads": cmd_beads, "verify": cmd_verify}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return COMMANDS[args.command](args, parser)


if __name__ == "__main__":
    sys.exit(main())
