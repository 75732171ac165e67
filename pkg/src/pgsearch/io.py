"""Input-file parsing and result serialisation.

The input format is INI-style.  A full example:

    [problem]
    p = 2
    d = 2
    max_class = 12
    # optional: rank_gap_bound, comparison_depth, strict_from_class,
    # orbit_cap, parallelism

    [start]
    kind = elementary_abelian
    # or: kind = pc with an inline presentation, or kind = presentation
    # with a finite presentation and a class to quotient to

    [place.5]
    prime = 5
    classes = g1

    [place.infinity]
    infinity = yes
    classes = g2

    [targets]
    index1 = [2, 4]
    index2.10 = [2, 2, 2]
    index2.01 = [4, 4]
    index2.11 = [2, 16]

Abelian types are written as lists of cyclic orders, the way the class-field
data is usually quoted; index-2 targets are keyed by the character bit-string
over the root generators.  parse_input(render_input(spec)) round-trips.
"""

from __future__ import annotations

import configparser
import csv
import io as _io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .constraints import INFINITE_PLACE, PlaceConstraint, TargetData
from .pcgroup import AbelianType, PcError, PcGroup, parse_pc, render_pc
from .pcover import DEFAULT_ORBIT_CAP, p_quotient, parse_presentation
from .search import SearchConfig, SearchResult, emit_tree, natural_key

_PROBLEM_KEYS = {
    "p",
    "d",
    "max_class",
    "rank_gap_bound",
    "comparison_depth",
    "strict_from_class",
    "orbit_cap",
    "parallelism",
    "lift_witnesses",
    "require_generation",
}
_START_KEYS = {"kind", "pc", "presentation", "class"}
_PLACE_KEYS = {"prime", "infinity", "classes"}


class InputError(PcError):
    """Malformed or inconsistent input file."""


@dataclass(frozen=True)
class InputSpec:
    config: SearchConfig
    source_text: str

    @property
    def config_hash(self) -> str:
        return self.config.config_hash()


def _parse_orders(text: str) -> list[int]:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise InputError(f"abelian type must look like [2, 4], got {text!r}")
    body = text[1:-1].strip()
    return [int(x) for x in body.split(",")] if body else []


def _word_to_element(word: str, group: PcGroup):
    word = word.strip()
    if word in ("1", ""):
        return group.identity
    items = []
    for factor in word.split("*"):
        factor = factor.strip()
        if "^" in factor:
            name, exp = factor.split("^", 1)
            e = int(exp)
        else:
            name, e = factor, 1
        if not name.startswith("g"):
            raise InputError(f"bad generator {factor!r} in class word")
        idx = int(name[1:]) - 1
        if not (0 <= idx < group.n):
            raise InputError(f"class word references undefined generator {factor!r}")
        items.append((idx, e))
    return group.evaluate_word(items)


def parse_input(text: str) -> InputSpec:
    """Parse and validate an input file into a runnable configuration."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep case and digits of keys
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise InputError(f"cannot parse input: {exc}") from exc

    if "problem" not in cp:
        raise InputError("missing [problem] section")
    prob = cp["problem"]
    for key in prob:
        if key not in _PROBLEM_KEYS:
            raise InputError(f"unknown key {key!r} in [problem]")
    try:
        p = int(prob["p"])
        d = int(prob["d"])
        max_class = int(prob["max_class"])
    except KeyError as exc:
        raise InputError(f"[problem] is missing {exc}") from exc
    rank_gap = int(prob["rank_gap_bound"]) if "rank_gap_bound" in prob else None
    depth_raw = prob.get("comparison_depth", str(p))
    depth = {"p": p, "p2": p * p}.get(depth_raw.strip(), None)
    if depth is None:
        depth = int(depth_raw)
    strict_from = (
        int(prob["strict_from_class"]) if "strict_from_class" in prob else None
    )
    orbit_cap = int(prob.get("orbit_cap", DEFAULT_ORBIT_CAP))
    width = int(prob.get("parallelism", 1))
    lift = prob.get("lift_witnesses", "yes").strip().lower() not in ("no", "false", "0")
    gen_req = prob.get("require_generation", "no").strip().lower() in ("yes", "true", "1")

    if "start" not in cp:
        raise InputError("missing [start] section")
    start = cp["start"]
    for key in start:
        if key not in _START_KEYS:
            raise InputError(f"unknown key {key!r} in [start]")
    kind = start.get("kind", "elementary_abelian").strip()
    if kind == "elementary_abelian":
        root = PcGroup.elementary_abelian(p, d)
    elif kind == "pc":
        root = parse_pc(start["pc"])
        if root.weights is None:
            raise InputError("inline pc root needs weight and definition annotations")
    elif kind == "presentation":
        pres = parse_presentation(start["presentation"])
        cls = int(start.get("class", max_class))
        root = p_quotient(pres, p, cls).group
    else:
        raise InputError(f"unknown start kind {kind!r}")

    constraints = []
    seen_places = set()
    for section in cp.sections():
        if not section.startswith("place."):
            continue
        sec = cp[section]
        for key in sec:
            if key not in _PLACE_KEYS:
                raise InputError(f"unknown key {key!r} in [{section}]")
        if sec.get("infinity", "no").strip().lower() in ("yes", "true", "1"):
            place = INFINITE_PLACE
        else:
            if "prime" not in sec:
                raise InputError(f"[{section}] needs a prime or infinity")
            place = int(sec["prime"])
        if place in seen_places:
            raise InputError(f"duplicate place {place}")
        seen_places.add(place)
        words = [w.strip() for w in sec.get("classes", "").split(",") if w.strip()]
        if not words:
            raise InputError(f"[{section}] needs at least one allowed class")
        reps = tuple(_word_to_element(w, root) for w in words)
        constraints.append(PlaceConstraint(place, reps))
    constraints.sort(key=lambda c: (c.place == INFINITE_PLACE, str(c.place)))

    if "targets" not in cp:
        raise InputError("missing [targets] section")
    tsec = cp["targets"]
    index1: Optional[AbelianType] = None
    index_p: dict = {}
    index_p2: list = []
    for key, value in tsec.items():
        if key == "index1":
            index1 = AbelianType.from_orders(_parse_orders(value), p)
        elif key.startswith(f"index{p}."):
            label = key.split(".", 1)[1]
            if len(label) != d or any(ch not in "0123456789" for ch in label):
                raise InputError(f"bad character label {label!r}")
            chi = tuple(int(ch) for ch in label)
            if not any(chi):
                raise InputError(f"character label {label!r} is zero")
            if max(chi) >= p:
                raise InputError(f"character label {label!r} has digits >= p")
            lead = next(v for v in chi if v)
            if lead != 1:
                raise InputError(f"character label {label!r} is not normalised")
            index_p[chi] = AbelianType.from_orders(_parse_orders(value), p)
        elif key == f"index{p*p}":
            for part in value.split(";"):
                part = part.strip()
                if part:
                    index_p2.append(AbelianType.from_orders(_parse_orders(part), p))
        else:
            raise InputError(f"unknown key {key!r} in [targets]")
    if index1 is None:
        raise InputError("missing index1 target")
    targets = TargetData(
        index1=index1,
        index_p=index_p,
        index_p2=tuple(index_p2),
        comparison_depth=depth,
        strict_from_class=strict_from,
    )

    try:
        cfg = SearchConfig(
            p=p,
            d=d,
            root=root,
            constraints=tuple(constraints),
            targets=targets,
            max_class=max_class,
            rank_gap_bound=rank_gap,
            orbit_cap=orbit_cap,
            width=width,
            lift_witnesses=lift,
            require_generation=gen_req,
            source_text=text,
        )
    except PcError as exc:
        raise InputError(str(exc)) from exc
    return InputSpec(config=cfg, source_text=text)


def _element_to_word(x, group: PcGroup) -> str:
    parts = []
    for i, e in enumerate(x):
        if e == 1:
            parts.append(f"g{i+1}")
        elif e:
            parts.append(f"g{i+1}^{e}")
    return "*".join(parts) if parts else "1"


def render_input(spec_or_config) -> str:
    """Canonical input text; parsing it reproduces the configuration."""
    cfg = spec_or_config.config if isinstance(spec_or_config, InputSpec) else spec_or_config
    p = cfg.p
    lines = ["[problem]"]
    lines.append(f"p = {cfg.p}")
    lines.append(f"d = {cfg.d}")
    lines.append(f"max_class = {cfg.max_class}")
    lines.append(f"rank_gap_bound = {cfg.gap_bound}")
    lines.append(f"comparison_depth = {cfg.targets.comparison_depth}")
    if cfg.targets.strict_from_class is not None:
        lines.append(f"strict_from_class = {cfg.targets.strict_from_class}")
    lines.append(f"orbit_cap = {cfg.orbit_cap}")
    lines.append(f"parallelism = {cfg.width}")
    if not cfg.lift_witnesses:
        lines.append("lift_witnesses = no")
    if cfg.require_generation:
        lines.append("require_generation = yes")
    lines.append("")
    lines.append("[start]")
    if cfg.root.p_class == 1 and cfg.root.n == cfg.d:
        lines.append("kind = elementary_abelian")
    else:
        lines.append("kind = pc")
        pc_text = render_pc(cfg.root).strip().replace("\n", "\n    ")
        lines.append(f"pc = {pc_text}")
    for pc_ in sorted(cfg.constraints, key=lambda c: (c.place == INFINITE_PLACE, str(c.place))):
        lines.append("")
        if pc_.place == INFINITE_PLACE:
            lines.append("[place.infinity]")
            lines.append("infinity = yes")
        else:
            lines.append(f"[place.{pc_.place}]")
            lines.append(f"prime = {pc_.place}")
        words = ", ".join(_element_to_word(x, cfg.root) for x in pc_.allowed)
        lines.append(f"classes = {words}")
    lines.append("")
    lines.append("[targets]")
    lines.append(f"index1 = {cfg.targets.index1.render(p)}")
    for chi in sorted(cfg.targets.index_p):
        label = "".join(str(v) for v in chi)
        lines.append(f"index{p}.{label} = {cfg.targets.index_p[chi].render(p)}")
    if cfg.targets.index_p2:
        multi = " ; ".join(t.render(p) for t in cfg.targets.index_p2)
        lines.append(f"index{p*p} = {multi}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Result emission


def results_document(result: SearchResult) -> dict:
    """Deterministic JSON document summarising a search."""
    cfg = result.config
    nodes = [result.nodes[k].row() for k in sorted(result.nodes, key=natural_key)]
    candidates = []
    for idx, cid in enumerate(result.candidates):
        g = result.groups[cid]
        table = {"1": g.abelianization().orders(cfg.p)}
        for H in g.low_index_subgroups(cfg.targets.comparison_depth):
            if H.index == cfg.p:
                label = "".join(str(v) for v in H.character_label())
                table[label] = H.abelian_invariants().orders(cfg.p)
        candidates.append(
            {
                "node": cid,
                "order_exponent": g.n,
                "p_class": g.p_class,
                "nilpotency_class": g.nilpotency_class(),
                "abelianization": g.abelianization().orders(cfg.p),
                "subgroup_abelianizations": table,
                "presentation_file": f"candidate_{idx}.pc",
            }
        )
    return {
        "format_version": 1,
        "verdict": result.verdict.lower(),
        "config_hash": cfg.config_hash(),
        "prime": cfg.p,
        "generator_rank": cfg.d,
        "max_class": cfg.max_class,
        "counts": result.status_counts(),
        "total_nodes": len(result.nodes),
        "class_limit_nodes": sum(
            1 for n in result.nodes.values() if n.status == "class_limit"
        ),
        "candidates": candidates,
        "nodes": nodes,
    }


def nodes_csv_text(result: SearchResult) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["id", "parent", "order_exponent", "p_class", "status", "step", "reason"]
    )
    for k in sorted(result.nodes, key=natural_key):
        n = result.nodes[k]
        writer.writerow(
            [n.node_id, n.parent_id or "", n.order_exponent, n.p_class, n.status, n.step, n.reason]
        )
    return buf.getvalue()


def emit_results(result: SearchResult, outdir, figure: bool = True) -> dict:
    """Write results.json, tree.dot, nodes.csv, candidate presentations, and
    (optionally) the rendered tree figure into ``outdir``."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    doc = results_document(result)
    (out / "results.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out / "tree.dot").write_text(emit_tree(result), encoding="utf-8")
    (out / "nodes.csv").write_text(nodes_csv_text(result), encoding="utf-8")
    for idx, cid in enumerate(result.candidates):
        (out / f"candidate_{idx}.pc").write_text(
            render_pc(result.groups[cid]), encoding="utf-8"
        )
    if figure:
        from .report import render_tree_figure

        render_tree_figure(result, out / "tree.png")
    return doc
