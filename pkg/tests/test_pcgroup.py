import itertools
import random

import pytest

from pgsearch.pcgroup import (
    AbelianType,
    Homomorphism,
    PcError,
    PcGroup,
    parse_pc,
    render_pc,
    truncation_homomorphism,
)
from pgsearch.pcover import p_quotient, parse_presentation, pc_as_finite_presentation

from oracles import are_isomorphic, brute_conjugacy_orbit


class TestCollection:
    def test_sd16_collect_swap(self, sd16):
        # b*a collects to a*b*b^2 because b^a = b^3
        assert sd16.collect([(1, 1), (0, 1)]) == (1, 1, 1, 0)

    def test_sd16_power_relation(self, sd16):
        assert sd16.collect([(1, 1), (1, 1)]) == (0, 0, 1, 0)

    def test_sd16_b4_squares_to_identity(self, sd16):
        g4 = sd16.generator(3)
        assert sd16.mul(g4, g4) == sd16.identity

    def test_unknown_generator_rejected(self, sd16):
        with pytest.raises(PcError):
            sd16.collect([(7, 1)])

    def test_normal_form_uniqueness_random_words(self, sd16, q8, m4_2):
        rng = random.Random(17)
        for group in (sd16, q8, m4_2):
            for _ in range(300):
                w1 = [(rng.randrange(group.n), rng.randrange(1, group.p)) for _ in range(4)]
                w2 = [(rng.randrange(group.n), rng.randrange(1, group.p)) for _ in range(4)]
                lhs = group.collect(list(w1) + list(w2))
                rhs = group.mul(group.collect(w1), group.collect(w2))
                assert lhs == rhs

    def test_inverses(self, sd16):
        for x in sd16.elements():
            assert sd16.mul(x, sd16.inv(x)) == sd16.identity
            assert sd16.mul(sd16.inv(x), x) == sd16.identity


class TestConsistency:
    def test_sd16_consistent(self, sd16):
        ok, witness = sd16.is_consistent()
        assert ok and witness is None

    def test_altered_relation_detected(self):
        # change b^a from b^3 to b*b^4: collection collapses the order
        broken = PcGroup(
            2,
            4,
            power=[(), ((2, 1),), ((3, 1),), ()],
            conj={(1, 0): ((1, 1), (3, 1)), (2, 0): ((2, 1), (3, 1))},
        )
        ok, witness = broken.is_consistent()
        assert not ok
        assert witness

    def test_elementary_abelian_consistent(self):
        ok, _ = PcGroup.elementary_abelian(2, 3).is_consistent()
        assert ok

    def test_every_fixture_consistent(self, sd16, d8, q8, m4_2, q16):
        for g in (sd16, d8, q8, m4_2, q16):
            assert g.is_consistent()[0]


class TestElementOps:
    def test_sd16_orders(self, sd16):
        a, b = sd16.generator(0), sd16.generator(1)
        assert sd16.order_of(a) == 2
        assert sd16.order_of(b) == 8
        assert sd16.order_of(sd16.mul(a, b)) == 4

    def test_power_edge_cases(self, sd16):
        x = sd16.generator(1)
        assert sd16.pow_element(x, 1) == x
        assert sd16.pow_element(x, 0) == sd16.identity
        assert sd16.pow_element(x, -1) == sd16.inv(x)
        assert sd16.pow_element(x, 19) == sd16.pow_element(x, 19 % 8)

    def test_commutator_identity(self, sd16):
        a, b = sd16.generator(0), sd16.generator(1)
        lhs = sd16.commutator(b, a)
        # [b, a] = b^-1 * b^a = b^-1 * b^3 = b^2
        assert lhs == sd16.collect([(2, 1)])


class TestSeries:
    def test_c2_squared(self):
        g = PcGroup.elementary_abelian(2, 2)
        series = g.exponent_p_central_series()
        assert len(series) == 2
        assert g.p_class == 1

    def test_sd16_series(self, sd16):
        series = sd16.exponent_p_central_series()
        assert [s.rank for s in series] == [4, 2, 1, 0]
        assert sd16.p_class == 3

    def test_m4_2_series(self, m4_2):
        series = m4_2.exponent_p_central_series()
        assert [s.rank for s in series] == [4, 2, 1, 0]
        assert m4_2.p_class == 3
        assert m4_2.nilpotency_class() == 2

    def test_weight_fast_path_matches_closure(self, sd16, q8, m4_2):
        for g in (sd16, q8, m4_2):
            fast = [s.key() for s in g.exponent_p_central_series()]
            slow_group = PcGroup(g.p, g.n, g.power, g.conj)  # weights stripped
            slow = [s.key() for s in slow_group.exponent_p_central_series()]
            assert fast == slow

    def test_layers_elementary_abelian(self, sd16):
        series = sd16.exponent_p_central_series()
        for upper, lower in zip(series, series[1:]):
            for x in upper.sequence:
                assert lower.contains(sd16.pow_element(x, sd16.p))

    def test_class_one_iff_elementary_abelian(self):
        assert PcGroup.elementary_abelian(3, 2).p_class == 1
        g = PcGroup.abelian(2, AbelianType((2,)))
        assert g.p_class == 2


class TestSubgroups:
    def test_index_p_count_formula(self, sd16, q8, d8):
        for g in (sd16, q8, d8):
            d = g.generator_rank()
            subs = g.low_index_subgroups(g.p)
            assert len(subs) == 1 + (g.p**d - 1) // (g.p - 1)

    def test_c2_squared_index2(self):
        g = PcGroup.elementary_abelian(2, 2)
        subs = g.low_index_subgroups(2)
        assert len(subs) == 4  # whole group + 3 hyperplanes

    def test_sd16_maximal_subgroups(self, sd16):
        types = sorted(
            H.abelian_invariants().render(2)
            for H in sd16.low_index_subgroups(2)
            if H.index == 2
        )
        assert types == ["[2, 2]", "[2, 2]", "[8]"]

    def test_q8_unique_index4_subgroup(self, q8):
        subs = [H for H in q8.low_index_subgroups(4) if H.index == 4]
        assert len(subs) == 1  # the centre is the only subgroup of order 2
        assert subs[0].rank == 1

    def test_subgroup_orders_divide(self, sd16):
        for H in sd16.low_index_subgroups(4):
            assert (sd16.p**sd16.n) % H.order == 0

    def test_membership_against_enumeration(self, sd16):
        for H in sd16.low_index_subgroups(4):
            members = {x for x in sd16.elements() if H.contains(x)}
            assert len(members) == H.order

    def test_canonical_sequence_stable_under_generation(self, sd16):
        rng = random.Random(3)
        for H in sd16.low_index_subgroups(2):
            members = [x for x in sd16.elements() if H.contains(x)]
            for _ in range(5):
                gens = [rng.choice(members) for _ in range(4)]
                rebuilt = sd16.subgroup_closure(gens)
                if rebuilt.order == H.order:
                    assert rebuilt.key() == H.key()


class TestInducedPresentation:
    def test_whole_group_roundtrip(self, sd16):
        H = sd16.whole_group()
        induced = H.induced_presentation()
        assert induced.n == sd16.n
        assert induced.is_consistent()[0]

    def test_cyclic_subgroup_of_sd16(self, sd16):
        b = sd16.generator(1)
        H = sd16.subgroup_closure([b])
        induced = H.induced_presentation()
        assert induced.n == 3
        assert induced.abelianization() == AbelianType((3,))

    def test_quaternion_subgroup_of_sd16(self, sd16, q8):
        ab = sd16.mul(sd16.generator(0), sd16.generator(1))
        H = sd16.subgroup_closure([ab, sd16.collect([(2, 1)])])
        assert H.order == 8
        induced = H.induced_presentation()
        assert induced.is_consistent()[0]
        # x^2 = y^2 and y^x = y^-1: the quaternion signature is the unique
        # involution; count elements of order 2
        involutions = sum(
            1 for x in induced.elements() if x != induced.identity and induced.order_of(x) == 2
        )
        assert involutions == 1

    def test_abelian_invariants_round_trip(self):
        # all abelian 2-groups of order <= 64
        seen = []
        for total in range(1, 7):
            for split in _partitions(total):
                g = PcGroup.abelian(2, AbelianType(tuple(split)))
                assert g.abelianization() == AbelianType(tuple(split))
                seen.append(split)
        assert len(seen) > 10


def _partitions(total):
    if total == 0:
        yield ()
        return
    for first in range(total, 0, -1):
        for rest in _partitions(total - first):
            if not rest or rest[0] <= first:
                yield (first,) + tuple(rest)


class TestConjugacy:
    def test_sd16_b_conjugate_b3(self, sd16):
        b = sd16.generator(1)
        ok, conjugator = sd16.are_conjugate(b, sd16.pow_element(b, 3))
        assert ok
        assert sd16.conjugate(b, conjugator) == sd16.pow_element(b, 3)

    def test_sd16_a_conjugate_ab6(self, sd16):
        a = sd16.generator(0)
        target = sd16.mul(a, sd16.pow_element(sd16.generator(1), 6))
        ok, conjugator = sd16.are_conjugate(a, target)
        assert ok

    def test_reflexive(self, sd16, q8):
        for g in (sd16, q8):
            for x in g.elements():
                ok, _ = g.are_conjugate(x, x)
                assert ok

    def test_against_brute_force(self, sd16, q8, m4_2, d8):
        for g in (sd16, q8, m4_2, d8):
            elements = list(g.elements())
            for x in elements[: min(16, len(elements))]:
                orbit = brute_conjugacy_orbit(g, x)
                for y in elements:
                    ok, conj = g.are_conjugate(x, y)
                    assert ok == (y in orbit)
                    if ok:
                        assert g.conjugate(x, conj) == y

    def test_sd16_class_structure(self, sd16):
        classes = sd16.conjugacy_classes()
        assert len(classes) == 7
        assert sum(size for _, size in classes) == 16
        for _, size in classes:
            assert 16 % size == 0

    def test_q8_class_sizes(self, q8):
        sizes = sorted(size for _, size in q8.conjugacy_classes())
        assert sizes == [1, 1, 2, 2, 2]

    def test_abelian_all_singletons(self):
        g = PcGroup.elementary_abelian(2, 2)
        classes = g.conjugacy_classes()
        assert len(classes) == 4
        assert all(size == 1 for _, size in classes)

    def test_restricted_class_representatives(self, sd16):
        root = PcGroup.elementary_abelian(2, 2)
        proj = truncation_homomorphism(sd16, root)
        allowed = {(0, 1)}
        classes = sd16.class_representatives(over=proj, allowed=allowed)
        assert classes
        for rep, _ in classes:
            assert proj.apply(rep) == (0, 1)


class TestDerivedSubgroup:
    def test_abelian_trivial(self):
        assert PcGroup.elementary_abelian(2, 3).derived_subgroup().rank == 0

    def test_sd16(self, sd16):
        der = sd16.derived_subgroup()
        assert der.rank == 2  # <b^2> of order 4
        assert der.contains(sd16.collect([(2, 1)]))

    def test_q8(self, q8):
        der = q8.derived_subgroup()
        assert der.order == 2


class TestHomomorphism:
    def test_truncation_valid(self, sd16):
        root = PcGroup.elementary_abelian(2, 2)
        proj = truncation_homomorphism(sd16, root)
        assert proj.apply(sd16.generator(1)) == (0, 1)
        assert proj.is_surjective_on_frattini_quotient()

    def test_ill_defined_map_rejected(self, sd16, q8):
        # sending both generators of Q8 to order-2 elements of SD16 cannot
        # respect x^2 = y^2 with y^x = y^-1 of order 4
        with pytest.raises(PcError):
            Homomorphism(
                q8,
                sd16,
                (sd16.generator(0), sd16.generator(0), q8.identity[:0] + sd16.identity, sd16.identity),
            )

    def test_compose(self, sd16):
        root = PcGroup.elementary_abelian(2, 2)
        proj = truncation_homomorphism(sd16, root)
        ident = truncation_homomorphism(root, root)
        comp = ident.compose(proj)
        assert comp.apply(sd16.generator(0)) == (1, 0)


class TestTextFormat:
    def test_round_trip_weighted(self, sd16, m4_2, q16):
        for g in (sd16, m4_2, q16):
            text = render_pc(g)
            back = parse_pc(text)
            assert render_pc(back) == text
            assert back.weights == g.weights
            assert back.definitions == g.definitions
            assert back.power == g.power
            assert back.conj == g.conj

    def test_round_trip_unweighted(self, sd16):
        H = sd16.subgroup_closure([sd16.generator(1)])
        induced = H.induced_presentation()
        text = render_pc(induced)
        back = parse_pc(text)
        assert back.weights is None
        assert render_pc(back) == text

    def test_spec_header_shape(self, sd16):
        text = render_pc(sd16)
        lines = text.splitlines()
        assert lines[0].startswith("group p=2 n=4")
        assert any("def=pow(g2)" in ln for ln in lines)

    def test_bad_header(self):
        with pytest.raises(PcError):
            parse_pc("grup p=2 n=1")

    def test_undefined_generator_in_word(self):
        with pytest.raises(PcError):
            parse_pc("group p=2 n=2\ng1^2 = g5\n")


class TestPQuotientRoundTrip:
    def test_pc_groups_reproduce_their_order(self, sd16, q8, d8, m4_2):
        for g in (sd16, q8, d8, m4_2):
            pres = pc_as_finite_presentation(g)
            rebuilt = p_quotient(pres, g.p, g.p_class + 1)
            assert rebuilt.group.n == g.n
            assert rebuilt.reached_maximal
            assert are_isomorphic(g, rebuilt.group)

    def test_iso_oracle_distinguishes(self, d8, q8):
        assert not are_isomorphic(d8, q8)
        assert are_isomorphic(d8, d8)
