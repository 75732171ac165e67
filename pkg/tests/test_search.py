import json

import pytest

from pgsearch.constraints import (
    INFINITE_PLACE,
    PlaceConstraint,
    TargetData,
    abelianization_test,
    derive_targets,
)
from pgsearch.pcgroup import AbelianType, PcError, PcGroup, truncation_homomorphism
from pgsearch.pcover import automorphism_group_elements, immediate_descendants, p_quotient, parse_presentation
from pgsearch.search import (
    SearchConfig,
    checkpoint_document,
    emit_tree,
    natural_key,
    resume_search,
    run_search,
)

from conftest import build_sd16
from oracles import are_isomorphic


def sd16_config(**overrides) -> SearchConfig:
    base = dict(
        p=2,
        d=2,
        root=PcGroup.elementary_abelian(2, 2),
        constraints=(
            PlaceConstraint(3, ((0, 1), (1, 1))),
            PlaceConstraint(7, ((1, 0), (1, 1))),
            PlaceConstraint(INFINITE_PLACE, ((1, 0),)),
        ),
        targets=derive_targets(build_sd16(), comparison_depth=2),
        max_class=6,
    )
    base.update(overrides)
    return SearchConfig(**base)


def cyclic_chain_config(k=3, q=17) -> SearchConfig:
    # one ramified prime with 2^(k+1) | q - 1 keeps the chain alive to C_2^k;
    # the index-2 subgroup of the cyclic target abelianizes to C_2^(k-1)
    return SearchConfig(
        p=2,
        d=1,
        root=PcGroup.elementary_abelian(2, 1),
        constraints=(PlaceConstraint(q, ((1,),)),),
        targets=TargetData(
            index1=AbelianType((k,)),
            index_p={(1,): AbelianType((k - 1,))},
            comparison_depth=2,
        ),
        max_class=k + 2,
    )


@pytest.fixture(scope="module")
def sd16_result():
    return run_search(sd16_config())


class TestCyclicChain:
    def test_chain_shape_and_candidate(self):
        result = run_search(cyclic_chain_config())
        assert result.verdict == "COMPLETE"
        assert len(result.candidates) == 1
        g = result.groups[result.candidates[0]]
        assert g.n == 3 and g.p_class == 3
        # the tree is the cyclic chain C2 -> C4 -> C8, candidate at the leaf
        ids = sorted(result.nodes, key=natural_key)
        assert ids == ["0", "0.0", "0.0.0"]
        assert result.nodes["0.0.0"].status == "candidate"


class TestSemidihedralRun:
    def test_verdict_and_candidate(self, sd16_result):
        assert sd16_result.verdict == "COMPLETE"
        assert len(sd16_result.candidates) == 1
        g = sd16_result.groups[sd16_result.candidates[0]]
        assert g.n == 4 and g.p_class == 3
        assert are_isomorphic(g, build_sd16())

    def test_pruning_narrative(self, sd16_result):
        # the dihedral branch survives to order 2^5 and dies on the labelled
        # index-2 comparison; a quaternion node dies on the infinite place
        reasons = {n.reason for n in sd16_result.nodes.values()}
        assert any("[16]" in r and "[8]" in r for r in reasons)
        assert any("infinity" in r for r in reasons)
        order32_pruned = [
            n
            for n in sd16_result.nodes.values()
            if n.order_exponent == 5 and n.status == "pruned" and "[16]" in n.reason
        ]
        assert order32_pruned

    def test_candidate_not_descended(self, sd16_result):
        cid = sd16_result.candidates[0]
        assert sd16_result.nodes[cid].descendant_count == 0
        assert not any(
            n.parent_id == cid for n in sd16_result.nodes.values()
        )

    def test_dead_marking(self, sd16_result):
        for n in sd16_result.nodes.values():
            if n.status == "dead":
                kids = [
                    c for c in sd16_result.nodes.values() if c.parent_id == n.node_id
                ]
                assert kids
                assert all(c.status in ("pruned", "dead") for c in kids)

    def test_class_limits_absent(self, sd16_result):
        assert all(n.status != "class_limit" for n in sd16_result.nodes.values())

    def test_witness_projection_soundness_on_every_edge(self, sd16_result):
        # the image of every witness class is a witness class of the parent
        for node_id, wits in sd16_result.witnesses.items():
            node = sd16_result.nodes[node_id]
            if node.parent_id is None or node.parent_id not in sd16_result.witnesses:
                continue
            child = sd16_result.groups[node_id]
            parent = sd16_result.groups[node.parent_id]
            proj = truncation_homomorphism(child, parent)
            parent_wits = sd16_result.witnesses[node.parent_id]
            for key, reps in wits.classes.items():
                for rep in reps:
                    img = proj.apply(rep)
                    assert any(
                        parent.are_conjugate(img, w)[0]
                        for w in parent_wits.classes[key]
                    ), (node_id, key)

    def test_determinism_across_widths(self, sd16_result):
        wide = run_search(sd16_config(width=3))
        assert wide.candidates == sd16_result.candidates
        assert {k: n.status for k, n in wide.nodes.items()} == {
            k: n.status for k, n in sd16_result.nodes.items()
        }
        assert {k: n.reason for k, n in wide.nodes.items()} == {
            k: n.reason for k, n in sd16_result.nodes.items()
        }

    def test_lift_witnesses_debug_flag_agrees(self, sd16_result):
        unlifted = run_search(sd16_config(lift_witnesses=False))
        assert unlifted.candidates == sd16_result.candidates
        assert {k: n.status for k, n in unlifted.nodes.items()} == {
            k: n.status for k, n in sd16_result.nodes.items()
        }

    def test_pruned_dominance_node_fails_exhaustively(self, sd16_result):
        # expand one node pruned by the abelianization test and check that
        # every immediate descendant fails it too (dominance is inherited)
        target_node = next(
            n
            for n in sd16_result.nodes.values()
            if n.status == "pruned" and "[16]" in n.reason
        )
        group = sd16_result.groups[target_node.node_id]
        cfg = sd16_result.config
        auts = automorphism_group_elements(group)
        for rec in immediate_descendants(group, auts, with_stabilizers=False):
            ok, _ = abelianization_test(rec.quotient, cfg.targets, rec.quotient.p_class)
            assert not ok

    def test_max_class_verdict_inconclusive(self):
        result = run_search(sd16_config(max_class=2))
        assert result.verdict == "INCONCLUSIVE"
        limits = [n for n in result.nodes.values() if n.status == "class_limit"]
        assert limits
        for n in limits:
            assert n.p_class == 2


class TestCheckpointResume:
    def test_checkpoint_after_root_then_resume(self, tmp_path, sd16_result):
        path = tmp_path / "ck.json"
        cfg = sd16_config()
        run_search(cfg, checkpoint_path=str(path), checkpoint_every=1)
        document = json.loads(path.read_text())
        resumed = resume_search(cfg, document)
        assert resumed.candidates == sd16_result.candidates
        assert {k: n.status for k, n in resumed.nodes.items()} == {
            k: n.status for k, n in sd16_result.nodes.items()
        }

    def test_mid_run_checkpoint_resumes_identically(self, tmp_path, sd16_result):
        cfg = sd16_config()
        # capture a checkpoint part-way: run a fresh driver manually
        from pgsearch.search import _Driver

        driver = _Driver(cfg)
        driver.process_root()
        for _ in range(2):
            if driver.stack:
                driver.expand(driver.stack.pop())
        doc = checkpoint_document(
            cfg,
            driver.nodes,
            driver.groups,
            driver.witnesses,
            driver.candidates,
            driver.stack,
            driver._pending_auts,
        )
        resumed = resume_search(cfg, json.loads(json.dumps(doc)))
        assert resumed.candidates == sd16_result.candidates
        assert {k: n.status for k, n in resumed.nodes.items()} == {
            k: n.status for k, n in sd16_result.nodes.items()
        }

    def test_resume_rejects_altered_config(self, tmp_path):
        cfg = sd16_config()
        path = tmp_path / "ck.json"
        run_search(cfg, checkpoint_path=str(path), checkpoint_every=1)
        document = json.loads(path.read_text())
        altered = sd16_config(max_class=9)
        with pytest.raises(PcError):
            resume_search(altered, document)

    def test_config_hash_sensitivity(self):
        a = sd16_config()
        b = sd16_config(max_class=7)
        assert a.config_hash() != b.config_hash()
        c = sd16_config(width=4)  # scheduling is not semantic
        assert a.config_hash() == c.config_hash()


class TestDotEmission:
    def test_shapes_and_labels(self, sd16_result):
        dot = emit_tree(sd16_result)
        assert dot.startswith("digraph search {")
        assert dot.rstrip().endswith("}")
        assert "shape=box" in dot  # the candidate
        assert "shape=circle" in dot  # pruned branches
        cid = sd16_result.candidates[0]
        assert f'"{cid}" [label="4", shape=box' in dot

    def test_every_edge_present(self, sd16_result):
        dot = emit_tree(sd16_result)
        for n in sd16_result.nodes.values():
            if n.parent_id is not None:
                assert f'"{n.parent_id}" -> "{n.node_id}";' in dot

    def test_cyclic_chain_path_graph(self):
        result = run_search(cyclic_chain_config())
        dot = emit_tree(result)
        assert dot.count("->") == len(result.nodes) - 1
        assert dot.count("shape=box") == 1

    def test_root_always_present(self, sd16_result):
        assert '"0"' in emit_tree(sd16_result)


class TestRootHandling:
    def test_root_can_be_the_candidate(self):
        cfg = SearchConfig(
            p=2,
            d=1,
            root=PcGroup.elementary_abelian(2, 1),
            constraints=(PlaceConstraint(17, ((1,),)),),
            targets=TargetData(
                index1=AbelianType((1,)),
                index_p={(1,): AbelianType(())},
                comparison_depth=2,
            ),
            max_class=3,
        )
        result = run_search(cfg)
        assert result.candidates == ["0"]
        assert result.verdict == "COMPLETE"

    def test_max_class_below_root_rejected(self):
        with pytest.raises(PcError):
            sd16_config(max_class=0)

    def test_deeper_start_quotient(self):
        # start from the class-2 quotient on the road to the semidihedral
        # group instead of the class-1 one; same single candidate
        d8 = p_quotient(
            parse_presentation("<a, b | a^2, b^4, a^-1*b*a*b>"), 2, 2
        ).group
        cfg = sd16_config(
            root=d8,
            constraints=(
                PlaceConstraint(3, ((0, 1, 0), (1, 1, 0))),
                PlaceConstraint(7, ((1, 0, 0), (1, 1, 0))),
                PlaceConstraint(INFINITE_PLACE, ((1, 0, 0),)),
            ),
        )
        result = run_search(cfg)
        assert len(result.candidates) == 1
        g = result.groups[result.candidates[0]]
        assert are_isomorphic(g, build_sd16())
