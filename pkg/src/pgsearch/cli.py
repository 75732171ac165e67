"""Command-line interface.

Exit codes: 0 for a COMPLETE search, 3 for INCONCLUSIVE, 4 for usage or
input errors, 5 for runtime failures such as an exceeded orbit cap.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .constraints import derive_targets
from .galois import classify_pair, conjecture_order_class, predicted_presentation
from .io import InputError, emit_results, parse_input, render_input
from .pcgroup import PcError, parse_pc, render_pc
from .pcover import (
    OrbitCapExceeded,
    automorphism_group_elements,
    immediate_descendants,
    p_cover,
    p_quotient,
    parse_presentation,
)
from .search import resume_search, run_search

EXIT_COMPLETE = 0
EXIT_INCONCLUSIVE = 3
EXIT_USAGE = 4
EXIT_RUNTIME = 5


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _cmd_search(args) -> int:
    spec = parse_input(_read(args.input))
    cfg = spec.config
    if args.width:
        from dataclasses import replace

        cfg = replace(cfg, width=args.width)
    checkpoint = args.checkpoint or (
        str(Path(args.out) / "checkpoint.json") if args.checkpoint_every else None
    )
    result = run_search(cfg, checkpoint_path=checkpoint, checkpoint_every=args.checkpoint_every)
    doc = emit_results(result, args.out, figure=not args.no_figure)
    print(f"verdict: {result.verdict}")
    print(f"nodes: {doc['total_nodes']}  candidates: {len(result.candidates)}")
    for entry in doc["candidates"]:
        print(
            f"  candidate {entry['node']}: order 2^{entry['order_exponent']}"
            if cfg.p == 2
            else f"  candidate {entry['node']}: order {cfg.p}^{entry['order_exponent']}",
            f"p-class {entry['p_class']}",
        )
    print(f"results written to {args.out}/")
    return EXIT_COMPLETE if result.verdict == "COMPLETE" else EXIT_INCONCLUSIVE


def _cmd_resume(args) -> int:
    document = json.loads(_read(args.checkpoint))
    source = document.get("source_text", "")
    if not source:
        print("checkpoint carries no input text; pass the original input with --input",
              file=sys.stderr)
        if not args.input:
            return EXIT_USAGE
    if args.input:
        source = _read(args.input)
    spec = parse_input(source)
    result = resume_search(
        spec.config,
        document,
        checkpoint_path=args.checkpoint,
        checkpoint_every=args.checkpoint_every,
    )
    doc = emit_results(result, args.out, figure=not args.no_figure)
    print(f"verdict: {result.verdict}")
    print(f"nodes: {doc['total_nodes']}  candidates: {len(result.candidates)}")
    return EXIT_COMPLETE if result.verdict == "COMPLETE" else EXIT_INCONCLUSIVE


def _cmd_pquotient(args) -> int:
    pres = parse_presentation(args.presentation)
    res = p_quotient(pres, args.p, args.max_class)
    g = res.group
    print(f"order: {args.p}^{g.n}")
    print(f"p-class: {g.p_class}")
    print(f"nilpotency class: {g.nilpotency_class()}")
    print(f"abelianization: {g.abelianization().render(args.p)}")
    print(f"maximal quotient reached: {'yes' if res.reached_maximal else 'no'}")
    if args.out:
        Path(args.out).write_text(render_pc(g), encoding="utf-8")
        print(f"presentation written to {args.out}")
    return 0


def _cmd_descendants(args) -> int:
    group = parse_pc(_read(args.group))
    if group.weights is None:
        raise PcError(
            "the presentation lacks weight annotations; regenerate it with pquotient"
        )
    auts = automorphism_group_elements(group, cap=args.aut_cap)
    records = immediate_descendants(group, auts, with_stabilizers=False)
    cover = p_cover(group)
    print(f"multiplicator rank: {cover.mult_rank}, nuclear rank: {cover.nuclear_rank}")
    if not records:
        print("terminal group: no immediate descendants")
        return 0
    for k, rec in enumerate(records):
        q = rec.quotient
        print(
            f"descendant {k}: step {rec.step}, order {group.p}^{q.n}, "
            f"class {q.p_class}, abelianization {q.abelianization().render(group.p)}, "
            f"orbit {rec.orbit_size}"
        )
        if args.out_dir:
            out = Path(args.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"descendant_{k}.pc").write_text(render_pc(q), encoding="utf-8")
    return 0


def _cmd_classify(args) -> int:
    c = classify_pair(args.p, args.q)
    print(f"case: {c.case}")
    print(f"roles: p={c.p}, q={c.q}, k={c.k}")
    if c.order_exponent is not None:
        print(f"predicted order exponent: {c.order_exponent}")
    if c.p_class is not None:
        print(f"predicted class: {c.p_class}")
    if c.case == "Conjecture_S3":
        exp, cls = conjecture_order_class(args.p, args.q)
        print(f"conjectured (order exponent, nilpotency class): ({exp}, {cls})")
    try:
        for pres in predicted_presentation(c):
            print(f"presentation: {pres}")
    except PcError as exc:
        print(f"presentation: {exc}")
    return 0


def _cmd_abelian(args) -> int:
    group = parse_pc(_read(args.group))
    print(f"index 1: {group.abelianization().render(group.p)}")
    if args.index >= group.p:
        for H in group.low_index_subgroups(args.index):
            if H.index == 1:
                continue
            label = ""
            if H.index == group.p:
                label = " label " + "".join(str(v) for v in H.character_label())
            print(f"index {H.index}{label}: {H.abelian_invariants().render(group.p)}")
    return 0


def _cmd_verify(args) -> int:
    group = parse_pc(_read(args.group))
    ok, witness = group.is_consistent()
    if ok:
        print(f"consistent presentation of order {group.p}^{group.n}")
        return 0
    print(f"INCONSISTENT: {witness}")
    return EXIT_RUNTIME


def _cmd_render(args) -> int:
    spec = parse_input(_read(args.input))
    sys.stdout.write(render_input(spec))
    print(f"# config hash: {spec.config_hash}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pgsearch",
        description="Descendant-tree search for pro-p Galois groups with "
        "restricted ramification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("search", help="run a pruned descendant search from an input file")
    sp.add_argument("input")
    sp.add_argument("--out", default="out", help="output directory")
    sp.add_argument("--width", type=int, default=0, help="override parallelism width")
    sp.add_argument("--checkpoint", default=None, help="checkpoint file path")
    sp.add_argument(
        "--checkpoint-every", type=int, default=0, metavar="N",
        help="checkpoint after every N expanded nodes",
    )
    sp.add_argument("--no-figure", action="store_true", help="skip the tree figure")
    sp.set_defaults(func=_cmd_search)

    sp = sub.add_parser("resume", help="continue a checkpointed search")
    sp.add_argument("checkpoint")
    sp.add_argument("--input", default=None, help="original input file (optional)")
    sp.add_argument("--out", default="out")
    sp.add_argument("--checkpoint-every", type=int, default=0)
    sp.add_argument("--no-figure", action="store_true")
    sp.set_defaults(func=_cmd_resume)

    sp = sub.add_parser("pquotient", help="maximal p-quotient of a finite presentation")
    sp.add_argument("presentation", help='e.g. "<a,b | a^2, b^-1*a*b*a*b*a*b^3*a>"')
    sp.add_argument("-p", type=int, default=2)
    sp.add_argument("-c", "--max-class", type=int, default=10)
    sp.add_argument("--out", default=None, help="write the pc presentation here")
    sp.set_defaults(func=_cmd_pquotient)

    sp = sub.add_parser("descendants", help="immediate descendants of a pc group file")
    sp.add_argument("group")
    sp.add_argument("--out-dir", default=None)
    sp.add_argument("--aut-cap", type=int, default=1 << 18)
    sp.set_defaults(func=_cmd_descendants)

    sp = sub.add_parser("classify", help="classify a pair of odd primes")
    sp.add_argument("p", type=int)
    sp.add_argument("q", type=int)
    sp.set_defaults(func=_cmd_classify)

    sp = sub.add_parser("abelian", help="abelianizations of low-index subgroups")
    sp.add_argument("group")
    sp.add_argument("--index", type=int, default=2, choices=(1, 2, 3, 4, 9))
    sp.set_defaults(func=_cmd_abelian)

    sp = sub.add_parser("verify", help="consistency-check a pc presentation file")
    sp.add_argument("group")
    sp.set_defaults(func=_cmd_verify)

    sp = sub.add_parser("render", help="canonicalise an input file")
    sp.add_argument("input")
    sp.set_defaults(func=_cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OrbitCapExceeded as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except PcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
