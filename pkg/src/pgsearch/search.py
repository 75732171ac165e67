"""Depth-first descendant-tree search with arithmetic pruning.

Starting from a class-1 (or deeper) root quotient, the driver repeatedly
computes immediate descendants, applies the witness, abelianization, and
rank-gap tests to each, records candidates (terminal groups matching every
target exactly), and descends into survivors until the class limit.

Node ids are dot-separated child indices ("0.2.1"), assigned in the
deterministic descendant enumeration order, so runs are reproducible across
parallelism widths and across checkpoint/resume boundaries.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, replace
from typing import Optional

from .constraints import (
    PlaceConstraint,
    TargetData,
    TestReport,
    WitnessSet,
    abelianization_test,
    allowed_element_sets,
    candidate_test,
    generation_check,
    rank_gap_test,
    witness_test,
)
from .pcgroup import PcError, PcGroup, parse_pc, render_pc, truncation_homomorphism
from .pcover import (
    DEFAULT_ORBIT_CAP,
    Automorphism,
    OrbitCapExceeded,
    automorphism_group_elements,
    immediate_descendants,
    p_cover,
    propagate_automorphisms,
    stabilizer_generators,
)

CHECKPOINT_VERSION = 1

STATUS_OPEN = "open"
STATUS_PRUNED = "pruned"
STATUS_DEAD = "dead"
STATUS_CANDIDATE = "candidate"
STATUS_CLASS_LIMIT = "class_limit"


@dataclass(frozen=True)
class SearchConfig:
    """Everything a search needs; hashable for checkpoint integrity."""

    p: int
    d: int
    root: PcGroup
    constraints: tuple[PlaceConstraint, ...]
    targets: TargetData
    max_class: int
    rank_gap_bound: Optional[int] = None
    orbit_cap: int = DEFAULT_ORBIT_CAP
    width: int = 1
    lift_witnesses: bool = True
    require_generation: bool = False
    aut_enumeration_cap: int = 1 << 18
    source_text: str = ""

    def __post_init__(self):
        if self.max_class < self.root.p_class:
            raise PcError("max_class is below the class of the root quotient")
        if self.root.generator_rank() != self.d:
            raise PcError("root quotient has the wrong generator rank")
        self.targets.validate(self.p, self.d)

    @property
    def gap_bound(self) -> int:
        return self.rank_gap_bound if self.rank_gap_bound is not None else self.d

    def semantic_dict(self) -> dict:
        places = []
        for pc in sorted(self.constraints, key=lambda c: c.key()):
            places.append(
                {"place": pc.key(), "classes": sorted(list(r) for r in pc.allowed)}
            )
        tgt = {
            "index1": list(self.targets.index1.exponents),
            "index_p": {
                "".join(map(str, chi)): list(t.exponents)
                for chi, t in sorted(self.targets.index_p.items())
            },
            "index_p2": sorted(list(t.exponents) for t in self.targets.index_p2),
            "depth": self.targets.comparison_depth,
            "strict_from_class": self.targets.strict_from_class,
        }
        return {
            "p": self.p,
            "d": self.d,
            "root": render_pc(self.root),
            "places": places,
            "targets": tgt,
            "max_class": self.max_class,
            "rank_gap_bound": self.gap_bound,
            "orbit_cap": self.orbit_cap,
            "lift_witnesses": self.lift_witnesses,
            "require_generation": self.require_generation,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class SearchNode:
    """One node of the descendant tree."""

    node_id: str
    parent_id: Optional[str]
    order_exponent: int
    p_class: int
    status: str
    reason: str = ""
    step: int = 0
    descendant_count: int = -1  # children created on expansion, -1 = not expanded

    def row(self) -> dict:
        return {
            "id": self.node_id,
            "parent": self.parent_id,
            "order_exponent": self.order_exponent,
            "p_class": self.p_class,
            "status": self.status,
            "reason": self.reason,
            "step": self.step,
            "descendants": self.descendant_count,
        }


@dataclass
class SearchResult:
    config: SearchConfig
    nodes: dict
    groups: dict
    witnesses: dict
    candidates: list
    orphan_error: Optional[str] = None

    @property
    def verdict(self) -> str:
        limit = any(n.status == STATUS_CLASS_LIMIT for n in self.nodes.values())
        return "INCONCLUSIVE" if limit else "COMPLETE"

    def candidate_groups(self) -> list[PcGroup]:
        return [self.groups[i] for i in self.candidates]

    def status_counts(self) -> dict:
        counts: dict = {}
        for n in self.nodes.values():
            counts[n.status] = counts.get(n.status, 0) + 1
        return counts


def natural_key(node_id: str) -> tuple:
    return tuple(int(part) for part in node_id.split("."))


@dataclass
class _Task:
    node_id: str
    group: PcGroup
    witnesses: WitnessSet
    auts: list
    cover: Optional[object] = None  # dropped on checkpoint, recomputed on resume


class _Driver:
    def __init__(self, cfg: SearchConfig, checkpoint_path=None, checkpoint_every=0):
        self.cfg = cfg
        self.allowed = allowed_element_sets(cfg.root, cfg.constraints)
        self.nodes: dict = {}
        self.groups: dict = {}
        self.witnesses: dict = {}
        self.candidates: list = []
        self.stack: list[_Task] = []
        self._pending_auts: dict = {}
        self.lock = threading.Lock()
        self.checkpoint_path = checkpoint_path
        self.checkpoint_every = checkpoint_every
        self.completed_since_checkpoint = 0
        self.error: Optional[BaseException] = None

    # -- per-node work -------------------------------------------------------

    def to_root(self, Q: PcGroup):
        return truncation_homomorphism(Q, self.cfg.root)

    def evaluate(self, Q: PcGroup, parent_witnesses: Optional[WitnessSet]):
        """Run the three tests; returns (report, cover or None)."""
        cfg = self.cfg
        proj = self.to_root(Q)
        wit, wit_reason = witness_test(
            Q,
            proj,
            cfg.constraints,
            self.allowed,
            parent_witnesses if cfg.lift_witnesses else None,
        )
        if wit is not None and cfg.require_generation and not generation_check(Q, wit):
            wit, wit_reason = None, "witnesses do not generate the group"
        if wit is None:
            return TestReport(False, wit_reason, False, "", False, "", False, None), None
        ab_ok, ab_reason = abelianization_test(Q, cfg.targets, Q.p_class)
        if not ab_ok:
            return TestReport(True, "", False, ab_reason, False, "", False, wit), None
        cover = p_cover(Q)
        gap_ok, gap_reason = rank_gap_test(cover, cfg.gap_bound)
        if not gap_ok:
            return TestReport(True, "", True, "", False, gap_reason, False, wit), cover
        cand = candidate_test(Q, cover, cfg.targets, cfg.d)
        return TestReport(True, "", True, "", True, "", cand, wit), cover

    def process_root(self):
        cfg = self.cfg
        root = cfg.root
        report, cover = self.evaluate(root, None)
        self._finish_node("0", None, root, report, cover, step=0)

    def _finish_node(self, node_id, parent_id, Q, report, cover, step):
        """Record the node and queue it for expansion when it survives."""
        cfg = self.cfg
        node = SearchNode(
            node_id=node_id,
            parent_id=parent_id,
            order_exponent=Q.n,
            p_class=Q.p_class,
            status=STATUS_OPEN,
            step=step,
        )
        with self.lock:
            self.groups[node_id] = Q
        if not report.passed:
            node.status = STATUS_PRUNED
            node.reason = (
                report.witness_reason or report.abelian_reason or report.rank_gap_reason
            )
            node.descendant_count = 0
            self._record(node, None)
            return
        if report.candidate:
            # candidates are leaves; soundness demands that descent would be
            # vacuous.  Trivial Schur multiplier usually means terminal, but
            # not for cyclic groups, so non-terminal candidates get their
            # descendants tested on the side instead of being assumed away.
            if cover is None:
                raise PcError(f"candidate {node_id} lost its cover")
            if cover.nuclear_rank != 0:
                self._assert_candidate_descendants_fail(node_id, Q, cover, report)
            node.status = STATUS_CANDIDATE
            node.descendant_count = 0
            self._record(node, report.witnesses, candidate=True)
            return
        if Q.p_class >= cfg.max_class:
            node.status = STATUS_CLASS_LIMIT
            node.descendant_count = 0
            self._record(node, report.witnesses)
            return
        self._record(node, report.witnesses)
        auts = self._automorphisms_for(node_id, parent_id)
        with self.lock:
            self.stack.append(
                _Task(node_id, Q, report.witnesses, auts, cover)
            )

    def _assert_candidate_descendants_fail(self, node_id, Q, cover, report):
        """Every immediate descendant of a non-terminal candidate must fail
        the tests, otherwise the candidate list would not be exhaustive."""
        ident = [Automorphism.identity(Q)]
        records = immediate_descendants(
            Q, ident, cover=cover, orbit_cap=self.cfg.orbit_cap, with_stabilizers=False
        )
        for rec in records:
            child_report, _ = self.evaluate(rec.quotient, report.witnesses)
            if child_report.passed:
                raise PcError(
                    f"candidate {node_id} has a surviving descendant; "
                    "the tests are not strong enough to stop here"
                )

    def _automorphisms_for(self, node_id, parent_id) -> list:
        if parent_id is None:
            return _root_automorphisms(self.cfg, self.allowed)
        with self.lock:
            return self._pending_auts.pop(node_id)

    def _record(self, node: SearchNode, wit, candidate=False):
        with self.lock:
            self.nodes[node.node_id] = node
            if wit is not None:
                self.witnesses[node.node_id] = wit
            if candidate:
                self.candidates.append(node.node_id)

    def expand(self, task: _Task):
        cfg = self.cfg
        Q = task.group
        cover = task.cover if task.cover is not None else p_cover(Q)
        try:
            descendants = immediate_descendants(
                Q, task.auts, cover=cover, orbit_cap=cfg.orbit_cap, with_stabilizers=False
            )
        except OrbitCapExceeded as exc:
            raise OrbitCapExceeded(f"node {task.node_id}: {exc}") from exc
        with self.lock:
            self.nodes[task.node_id].descendant_count = len(descendants)
        for k, rec in enumerate(descendants):
            child_id = f"{task.node_id}.{k}"
            report, child_cover = self.evaluate(rec.quotient, task.witnesses)
            survives = report.passed and not report.candidate
            needs_auts = survives and rec.quotient.p_class < cfg.max_class
            if needs_auts:
                try:
                    stab = stabilizer_generators(
                        cover, task.auts, rec.subspace, cfg.orbit_cap
                    )
                except OrbitCapExceeded as exc:
                    raise OrbitCapExceeded(f"node {child_id}: {exc}") from exc
                rec_with_stab = replace(rec, stabilizer_generators=stab)
                with self.lock:
                    self._pending_auts[child_id] = propagate_automorphisms(rec_with_stab)
            self._finish_node(
                child_id, task.node_id, rec.quotient, report, child_cover, rec.step
            )

    # -- main loop -------------------------------------------------------------

    def run(self) -> SearchResult:
        if not self.nodes:
            self.process_root()
        width = max(1, self.cfg.width)
        if width == 1:
            while self.stack:
                task = self.stack.pop()
                self.expand(task)
                self._maybe_checkpoint()
        else:
            self._run_parallel(width)
        if self.error is not None:
            raise self.error
        _mark_dead(self.nodes)
        self.candidates.sort(key=natural_key)
        return SearchResult(
            config=self.cfg,
            nodes=self.nodes,
            groups=self.groups,
            witnesses=self.witnesses,
            candidates=self.candidates,
        )

    def _run_parallel(self, width: int):
        active = [0]
        done = threading.Event()

        def worker():
            while not done.is_set():
                with self.lock:
                    task = self.stack.pop() if self.stack else None
                    if task is not None:
                        active[0] += 1
                    elif active[0] == 0:
                        done.set()
                        return
                if task is None:
                    done.wait(0.002)
                    continue
                try:
                    self.expand(task)
                    self._maybe_checkpoint()
                except BaseException as exc:  # surface the first failure
                    with self.lock:
                        if self.error is None:
                            self.error = exc
                    done.set()
                finally:
                    with self.lock:
                        active[0] -= 1

        threads = [threading.Thread(target=worker, daemon=True) for _ in range(width)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

    # -- checkpointing -----------------------------------------------------------

    def _maybe_checkpoint(self):
        if not self.checkpoint_path or self.checkpoint_every <= 0:
            return
        doc = None
        with self.lock:
            self.completed_since_checkpoint += 1
            if self.completed_since_checkpoint >= self.checkpoint_every:
                self.completed_since_checkpoint = 0
                doc = self._checkpoint_doc_locked()
        if doc is not None:
            with open(self.checkpoint_path, "w", encoding="utf-8") as fh:
                fh.write(json.dumps(doc, sort_keys=True))

    def _checkpoint_doc_locked(self) -> dict:
        return checkpoint_document(
            self.cfg, self.nodes, self.groups, self.witnesses, self.candidates,
            self.stack, self._pending_auts,
        )


def _root_automorphisms(cfg: SearchConfig, allowed: dict) -> list:
    """Automorphisms of the root respecting every allowed class set and the
    index-p target labelling; orbit fusion beyond this subgroup could merge
    descendants that the arithmetic data tells apart."""
    root = cfg.root
    elements = automorphism_group_elements(root, cap=cfg.aut_enumeration_cap)
    keep = []
    d = cfg.d
    for aut in elements:
        ok = True
        for pc in cfg.constraints:
            pool = allowed[pc.key()]
            if any(aut.apply(rep) not in pool for rep in pc.allowed):
                ok = False
                break
        if ok and cfg.targets.comparison_depth >= cfg.p:
            # chi o phi as a functional is A*chi with A[r] = image of g_r
            frattini_matrix = [aut.images[i][:d] for i in range(d)]
            for chi, target in cfg.targets.index_p.items():
                moved = [
                    sum(frattini_matrix[r][c] * chi[c] for c in range(d)) % cfg.p
                    for r in range(d)
                ]
                lead = next((v for v in moved if v), 0)
                if lead == 0:
                    ok = False
                    break
                if lead != 1:
                    inv = pow(lead, -1, cfg.p)
                    moved = [(v * inv) % cfg.p for v in moved]
                if cfg.targets.index_p.get(tuple(moved)) != target:
                    ok = False
                    break
        if ok:
            keep.append(aut)
    return keep


def _mark_dead(nodes: dict):
    """A node is dead when it was expanded and every child is pruned or dead."""
    children: dict = {}
    for n in nodes.values():
        if n.parent_id is not None:
            children.setdefault(n.parent_id, []).append(n.node_id)
    for node_id in sorted(nodes, key=natural_key, reverse=True):
        node = nodes[node_id]
        if node.status != STATUS_OPEN:
            continue
        kids = children.get(node_id, [])
        if kids and all(
            nodes[k].status in (STATUS_PRUNED, STATUS_DEAD) for k in kids
        ):
            node.status = STATUS_DEAD


def run_search(
    cfg: SearchConfig,
    checkpoint_path: Optional[str] = None,
    checkpoint_every: int = 0,
) -> SearchResult:
    """Run the full pruned descendant search for a configuration."""
    return _Driver(cfg, checkpoint_path, checkpoint_every).run()


# ---------------------------------------------------------------------------
# Checkpoint documents


def checkpoint_document(cfg, nodes, groups, witnesses, candidates, stack, pending_auts) -> dict:
    tasks = []
    for t in stack:
        tasks.append(
            {
                "id": t.node_id,
                "group": render_pc(t.group),
                "witnesses": {
                    k: [list(x) for x in v] for k, v in t.witnesses.classes.items()
                },
                "auts": [[list(img) for img in a.images] for a in t.auts],
            }
        )
    return {
        "version": CHECKPOINT_VERSION,
        "config_hash": cfg.config_hash(),
        "source_text": cfg.source_text,
        "nodes": [nodes[k].row() for k in sorted(nodes, key=natural_key)],
        "witness_counts": {k: w.count() for k, w in witnesses.items()},
        "candidates": sorted(candidates, key=natural_key),
        "candidate_groups": {i: render_pc(groups[i]) for i in candidates},
        "pending": tasks,
    }


def write_checkpoint(result_or_doc, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(result_or_doc, sort_keys=True))


def resume_search(
    cfg: SearchConfig,
    document: dict,
    checkpoint_path: Optional[str] = None,
    checkpoint_every: int = 0,
) -> SearchResult:
    """Continue a checkpointed run; the final result is identical to an
    uninterrupted one."""
    if document.get("version") != CHECKPOINT_VERSION:
        raise PcError(f"checkpoint version {document.get('version')} unsupported")
    if document.get("config_hash") != cfg.config_hash():
        raise PcError("checkpoint does not match this configuration")
    driver = _Driver(cfg, checkpoint_path, checkpoint_every)
    for row in document["nodes"]:
        node = SearchNode(
            node_id=row["id"],
            parent_id=row["parent"],
            order_exponent=row["order_exponent"],
            p_class=row["p_class"],
            status=row["status"] if row["status"] != STATUS_DEAD else STATUS_OPEN,
            reason=row["reason"],
            step=row["step"],
        )
        node.descendant_count = row["descendants"]
        driver.nodes[node.node_id] = node
    driver.candidates = list(document["candidates"])
    for node_id, text in document.get("candidate_groups", {}).items():
        driver.groups[node_id] = parse_pc(text)
    for t in document["pending"]:
        group = parse_pc(t["group"])
        wits = WitnessSet(
            {k: tuple(tuple(x) for x in v) for k, v in t["witnesses"].items()}
        )
        auts = [
            Automorphism._trusted(group, tuple(tuple(img) for img in images))
            for images in t["auts"]
        ]
        driver.groups[t["id"]] = group
        driver.stack.append(_Task(t["id"], group, wits, auts, None))
    return driver.run()


# ---------------------------------------------------------------------------
# DOT emission


_DOT_SHAPE = {
    STATUS_OPEN: "plaintext",
    STATUS_PRUNED: "circle",
    STATUS_DEAD: "circle",
    STATUS_CANDIDATE: "box",
    STATUS_CLASS_LIMIT: "diamond",
}


def emit_tree(result: SearchResult) -> str:
    """Render the search tree as DOT: labels carry the order exponents,
    circles mark pruned and dead branches, boxes the candidates, diamonds
    class-limited leaves."""
    lines = ["digraph search {", "  rankdir=TB;", '  node [fontsize=10];']
    for node_id in sorted(result.nodes, key=natural_key):
        node = result.nodes[node_id]
        shape = _DOT_SHAPE[node.status]
        tooltip = node.reason.replace('"', "'") if node.reason else node.status
        lines.append(
            f'  "{node_id}" [label="{node.order_exponent}", shape={shape},'
            f' tooltip="{tooltip}"];'
        )
    for node_id in sorted(result.nodes, key=natural_key):
        node = result.nodes[node_id]
        if node.parent_id is not None:
            lines.append(f'  "{node.parent_id}" -> "{node_id}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
