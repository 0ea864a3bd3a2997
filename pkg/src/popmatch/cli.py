"""Command-line interface: ``popmatch <command> ...``.

Exit codes: 0 success (or "yes"), 1 a negative answer (no popular matching,
matching not popular, cross-check mismatch), 2 usage or input errors,
3 inputs too large for an exponential-time method.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import NoPopularMatchingError, PopmatchError, SizeLimitError
from .fpras import build_reduction, count_popular_hat
from .hardness import cross_check, parse_graph, reduce_matching_to_cha
from .hat import find_popular_hat, is_popular_hat
from .instance import (
    Instance,
    add_last_resorts,
    format_matching,
    instance_to_dict,
    parse_instance,
    parse_matching,
    serialize_instance,
)
from .oracle import oracle_count_popular
from .switching import (
    build_switching_graph,
    count_popular_cha,
    find_popular_cha,
    format_switching_graph,
    is_popular_cha,
)

METHODS = ("switching", "fpras", "exact-pm", "oracle")


class UsageError(PopmatchError):
    pass


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _load(path, err) -> Instance:
    inst = parse_instance(_read(path))
    if not inst.last_resorts_added:
        print("note: last-resort houses added", file=err)
        inst = add_last_resorts(inst)
    return inst


def _uses_cha(inst: Instance) -> bool:
    return inst.kind == "CHA"


def _find(inst):
    return find_popular_cha(inst) if _uses_cha(inst) else find_popular_hat(inst)


def _emit(args, out, record: dict, text: str):
    if args.output == "json":
        out.write(json.dumps(record, sort_keys=True) + "\n")
    else:
        out.write(text if text.endswith("\n") else text + "\n")


def _fmt_count(value) -> str:
    if isinstance(value, int):
        return str(value)
    return np.format_float_positional(value, trim="-")


# -- commands -------------------------------------------------------------------------


def cmd_check(args, out, err):
    m = _find(_load(args.file, err))
    exists = m is not None
    _emit(
        args, out, {"popular_matching_exists": exists},
        "popular matching exists" if exists else "no popular matching exists",
    )
    return 0 if exists else 1


def cmd_find(args, out, err):
    m = _find(_load(args.file, err))
    if m is None:
        _emit(args, out, {"matching": None}, "no popular matching exists")
        return 1
    _emit(args, out, {"matching": dict(sorted(m.items()))}, format_matching(m))
    return 0


def cmd_count(args, out, err):
    inst = _load(args.file, err)
    record = {"count": None, "method": args.method, "epsilon": None, "delta": None, "seed": None}
    if args.method == "oracle":
        record["count"] = oracle_count_popular(inst)
    elif args.method == "switching":
        if not inst.is_strict:
            raise UsageError("--method switching needs strict preference lists")
        if inst.kind == "HAT":
            inst = inst.with_kind("HA")
        record["count"] = count_popular_cha(inst)
    else:
        if inst.kind == "CHA" and any(inst.capacity(h) > 1 for h in inst.houses):
            raise UsageError(f"--method {args.method} needs unit capacities")
        if inst.kind == "CHA":
            inst = inst.with_kind("HA")
        if args.method == "exact-pm":
            record["count"] = count_popular_hat(inst, "exact").value
        else:
            if args.seed is None:
                raise UsageError("--method fpras needs --seed")
            if not (0 < args.epsilon < 1 and 0 < args.delta < 1):
                raise UsageError("--epsilon and --delta must lie in (0, 1)")
            res = count_popular_hat(inst, "estimate", args.epsilon, args.delta, args.seed)
            record.update(count=res.value, epsilon=args.epsilon, delta=args.delta, seed=args.seed)
    _emit(args, out, record, _fmt_count(record["count"]))
    return 0


def cmd_reduce_hat(args, out, err):
    inst = _load(args.file, err)
    if inst.kind == "CHA":
        raise UsageError("reduce-hat needs an HA or HAT instance")
    try:
        red = build_reduction(inst)
    except NoPopularMatchingError as exc:
        _emit(args, out, {"dummy_count": None}, f"no popular matching exists: {exc}")
        return 1
    g = red.graph
    edges = sorted(g.edges, key=lambda e: (g.left.index(e[0]), g.right.index(e[1])))
    record = {
        "dummy_count": red.dummy_count,
        "left": list(g.left),
        "right": list(g.right),
        "edges": [list(e) for e in edges],
        "left_blocks": {u: b.value for u, b in red.block_of_left.items()},
        "right_blocks": {v: b.value for v, b in red.block_of_right.items()},
        "removed_houses": sorted(red.removed_houses),
    }
    lines = [
        f"# dummies {red.dummy_count}",
        "# left " + " ".join(g.left),
        "# right " + " ".join(g.right),
        *(f"{u} {v}" for u, v in edges),
    ]
    _emit(args, out, record, "\n".join(lines))
    return 0


def cmd_reduce_cha(args, out, err):
    res = reduce_matching_to_cha(parse_graph(_read(args.graph)))
    record = {"instance": instance_to_dict(res.instance), "base_matching": res.base_matching}
    _emit(args, out, record, serialize_instance(res.instance))
    return 0


def cmd_export_switching(args, out, err):
    inst = _load(args.file, err)
    if not inst.is_strict:
        raise UsageError("switching graphs need strict preference lists")
    if inst.kind == "HAT":
        inst = inst.with_kind("HA")
    if args.matching:
        m = parse_matching(_read(args.matching))
    else:
        m = find_popular_cha(inst)
        if m is None:
            _emit(args, out, {"edges": None}, "no popular matching exists")
            return 1
    sg = build_switching_graph(inst, m)
    record = {
        "edges": [{"src": e.src, "dst": e.dst, "weight": e.weight, "agent": e.agent} for e in sg.edges],
        "unsat": sg.unsat,
    }
    _emit(args, out, record, format_switching_graph(sg))
    return 0


def cmd_cross_check(args, out, err):
    report = cross_check(parse_graph(_read(args.graph)))
    record = report.to_dict()
    if report.degenerate:
        text = f"degenerate: no edges, {report.graph_matchings} matching"
    else:
        verdict = "equal" if report.ok else "MISMATCH"
        text = (
            f"{verdict}: graph matchings {report.graph_matchings}, "
            f"switching count {report.switching_count}, oracle count {report.oracle_count}, "
            f"switching graph reproduced {report.reproduces_switching_graph}"
        )
    _emit(args, out, record, text)
    return 0 if report.ok else 1


def cmd_validate(args, out, err):
    inst = _load(args.file, err)
    m = parse_matching(_read(args.matching))
    verdict = is_popular_cha(inst, m) if _uses_cha(inst) else is_popular_hat(inst, m)
    witness = verdict.witness
    record = {
        "popular": verdict.popular,
        "condition": verdict.condition,
        "witness": list(witness) if isinstance(witness, tuple) else witness,
        "message": verdict.message,
    }
    text = "popular" if verdict else f"not popular: {verdict.condition}: {verdict.message}"
    _emit(args, out, record, text)
    return 0 if verdict else 1


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=("text", "json"), default="text")

    p = argparse.ArgumentParser(prog="popmatch", description="Popular matchings in house allocation.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func)
        return sp

    add("check", cmd_check, "does a popular matching exist").add_argument("file")
    add("find", cmd_find, "print one popular matching").add_argument("file")

    sp = add("count", cmd_count, "count popular matchings")
    sp.add_argument("file")
    sp.add_argument("--method", choices=METHODS, required=True)
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.add_argument("--delta", type=float, default=0.1)
    sp.add_argument("--seed", type=int)

    add("reduce-hat", cmd_reduce_hat, "emit the perfect-matching graph and dummy count").add_argument("file")
    add("reduce-cha", cmd_reduce_cha, "CHA instance from a bipartite graph").add_argument("graph")

    sp = add("export-switching", cmd_export_switching, "print the switching graph of a popular matching")
    sp.add_argument("file")
    sp.add_argument("--matching")

    add("cross-check", cmd_cross_check, "compare graph matchings with popular matchings of the reduction").add_argument("graph")

    sp = add("validate", cmd_validate, "test a matching for popularity")
    sp.add_argument("file")
    sp.add_argument("--matching", required=True)
    return p


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out, err)
    except SizeLimitError as exc:
        print(f"error: {exc}", file=err)
        return 3
    except PopmatchError as exc:
        if isinstance(exc, AssertionError):
            raise
        print(f"error: {exc}", file=err)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
