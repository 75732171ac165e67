"""Arithmetic pruning tests applied to every node of the descendant search.

Three tests gate each group Q mapping onto the root quotient P:

* the witness test: Q must contain, for every constrained place, an element
  conjugate to its q-th power (an element of order two for the infinite
  place) whose image in P lies in one of the allowed classes;
* the abelianization test: the abelianizations of the low-index subgroups of
  Q must be quotients of the corresponding targets, matched by character
  label at index p and by multiset dominance at index p^2;
* the rank gap test: the multiplicator rank of Q may exceed its nuclear rank
  by at most a configured bound.

A surviving group is a candidate when its multiplicator rank equals the
generator rank (trivial Schur multiplier, hence terminal) and the
abelianization comparison holds with equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .linalg import FpMatrix, Subspace, solve as _solve
from .pcgroup import AbelianType, Element, Homomorphism, PcError, PcGroup
from .pcover import PCoverData

INFINITE_PLACE = "infinity"


@dataclass(frozen=True)
class PlaceConstraint:
    """Allowed image classes in the root quotient for one ramified place."""

    place: object  # odd prime int, or INFINITE_PLACE
    allowed: tuple[Element, ...]

    def __post_init__(self):
        if self.place != INFINITE_PLACE:
            q = int(self.place)
            if q < 3 or q % 2 == 0:
                raise PcError(f"place must be an odd prime or infinity, got {self.place}")
        if not self.allowed:
            raise PcError("a place needs at least one allowed class")

    def validate_against_root(self, root: PcGroup):
        for rep in self.allowed:
            if len(rep) != root.n:
                raise PcError("allowed class representative has wrong length")
            if self.place == INFINITE_PLACE and root.order_of(rep) != 2:
                raise PcError(
                    "allowed classes at the infinite place must have order exactly 2"
                )

    def key(self) -> str:
        return str(self.place)


@dataclass(frozen=True)
class WitnessSet:
    """Conjugacy class representatives passing the witness test, per place."""

    classes: dict

    def count(self) -> dict:
        return {k: len(v) for k, v in self.classes.items()}


@dataclass(frozen=True)
class TargetData:
    """Abelianization targets for the subgroups of index 1, p, and p^2."""

    index1: AbelianType
    index_p: dict  # normalised character tuple -> AbelianType
    index_p2: tuple = ()
    comparison_depth: int = 2  # maximal index compared: p or p^2
    strict_from_class: Optional[int] = None

    def validate(self, p: int, d: int):
        if self.comparison_depth not in (1, p, p * p):
            raise PcError(f"comparison depth {self.comparison_depth} not in (1, {p}, {p*p})")
        if self.comparison_depth >= p:
            expected = (p**d - 1) // (p - 1)
            if len(self.index_p) != expected:
                raise PcError(
                    f"index-{p} targets must label all {expected} characters, got {len(self.index_p)}"
                )
            for chi in self.index_p:
                if len(chi) != d or not any(chi):
                    raise PcError(f"bad character label {chi}")
                lead = next(v for v in chi if v)
                if lead != 1 or any(not 0 <= v < p for v in chi):
                    raise PcError(f"character label {chi} is not normalised")

    def strict_at(self, current_class: int) -> bool:
        return self.strict_from_class is not None and current_class >= self.strict_from_class


@dataclass(frozen=True)
class TestReport:
    """Outcome of the three tests on one group."""

    witness_ok: bool
    witness_reason: str
    abelian_ok: bool
    abelian_reason: str
    rank_gap_ok: bool
    rank_gap_reason: str
    candidate: bool
    witnesses: Optional[WitnessSet]

    @property
    def passed(self) -> bool:
        return self.witness_ok and self.abelian_ok and self.rank_gap_ok


def dominated(a: AbelianType, b: AbelianType) -> bool:
    """True when a is a quotient of b."""
    return a.dominated_by(b)


def allowed_element_sets(root: PcGroup, constraints: Sequence[PlaceConstraint]) -> dict:
    """Expand each place's allowed class representatives into full classes."""
    gens = [root.generator(i) for i in range(root.n)]
    out = {}
    for pc in constraints:
        pc.validate_against_root(root)
        elements: set[Element] = set()
        for rep in pc.allowed:
            orbit = {rep}
            frontier = [rep]
            while frontier:
                y = frontier.pop()
                for g in gens:
                    z = root.conjugate(y, g)
                    if z not in orbit:
                        orbit.add(z)
                        frontier.append(z)
            elements |= orbit
        out[pc.key()] = frozenset(elements)
    return out


def _power_exponent(place) -> Optional[int]:
    return None if place == INFINITE_PLACE else int(place)


def _is_witness(Q: PcGroup, x: Element, place) -> bool:
    if place == INFINITE_PLACE:
        return Q.order_of(x) == 2
    q = _power_exponent(place)
    ok, _ = Q.are_conjugate(x, Q.pow_element(x, q))
    return ok


def witness_test(
    Q: PcGroup,
    to_root: Homomorphism,
    constraints: Sequence[PlaceConstraint],
    allowed_sets: dict,
    parent_witnesses: Optional[WitnessSet] = None,
    root_class_cap: int = 1 << 14,
) -> tuple[Optional[WitnessSet], str]:
    """Find witness classes for every place, or name the first failing place.

    With parent witnesses supplied, only the fibre of the new central layer
    over each parent witness class is searched; a witness in Q projects to a
    witness of the parent, so the restriction loses nothing.  The fibre
    collapses to a single linear condition because the layer is central: for
    x = x0*l the obstruction to x ~ x^q is independent of l (p = 2) or an
    affine function of l, and fibre elements are conjugate exactly when they
    differ by the commutator image space of the layer.
    """
    classes: dict = {}
    for pc in constraints:
        key = pc.key()
        allowed = allowed_sets[key]
        found: list[Element] = []
        if parent_witnesses is None:
            if Q.p**Q.n > root_class_cap:
                raise PcError("root group too large for a full witness sweep")
            for rep, _size in Q.conjugacy_classes():
                if to_root.apply(rep) not in allowed:
                    continue
                if _is_witness(Q, rep, pc.place):
                    found.append(rep)
        else:
            for w in parent_witnesses.classes.get(key, ()):
                x0 = tuple(w) + (0,) * (Q.n - len(w))
                found.extend(_fiber_witnesses(Q, to_root, allowed, pc.place, x0))
        if not found:
            return None, f"no witness at place {key}"
        classes[key] = tuple(found)
    return WitnessSet(classes), ""


def _fiber_witnesses(Q: PcGroup, to_root, allowed, place, x0: Element) -> list[Element]:
    """Witness class representatives within the fibre x0 * (newest layer)."""
    p = Q.p
    c = Q.p_class
    layer = [i for i in range(Q.n) if Q.weights[i] == c]
    if to_root.apply(x0) not in allowed:
        # the whole fibre projects like x0 does
        return []
    whole_fibre = True
    if place == INFINITE_PLACE:
        # (x0*l)^2 = x0^2 for p = 2, so the square is constant on the fibre
        if Q.pow_element(x0, 2) != Q.identity:
            return []
        solved, _, _cent, images = Q.conjugacy_lift(x0, x0)
        assert solved
        coset = [0] * len(layer)
    else:
        q = int(place)
        if q % p == 0:
            raise PcError("ramified places must be prime to p")
        y0 = Q.pow_element(x0, q)
        solved, g, cent, _ = Q.conjugacy_lift(x0, y0, stop_before=c)
        if not solved:
            raise PcError("parent witness failed to lift; soundness broken")
        images = []
        for s in cent:
            com = Q.commutator(y0, s)
            if any(com[i] and Q.weights[i] < c for i in range(Q.n)):
                raise PcError("centraliser commutator escaped the top layer")
            images.append([com[i] for i in layer])
        z = Q.mul(Q.inv(y0), Q.conjugate(x0, g))
        if any(z[i] and Q.weights[i] < c for i in range(Q.n)):
            raise PcError("fibre obstruction escaped the top layer")
        m = [z[i] for i in layer]
        qbar = q % p
        if qbar == 1:
            # obstruction independent of l: all of the fibre or nothing
            mat = FpMatrix.from_rows(images, p, cols=len(layer))
            if _solve(mat, m) is None:
                return []
            coset = [0] * len(layer)
        else:
            # (qbar - 1) l = m modulo the commutator space; one coset survives
            inv = pow(qbar - 1, -1, p)
            coset = [(inv * v) % p for v in m]
            whole_fibre = False
    span = Subspace.from_vectors(
        [row for row in images if any(row)], len(layer), p
    )
    deltas = (
        _coset_representatives(span, len(layer), p)
        if whole_fibre
        else [tuple([0] * len(layer))]
    )
    reps = []
    for delta in deltas:
        l_vec = [(a + b) % p for a, b in zip(coset, delta)]
        elt = list(x0)
        for k, i in enumerate(layer):
            elt[i] = (elt[i] + l_vec[k]) % p
        reps.append(tuple(elt))
    return reps


def _coset_representatives(span: "Subspace", dim: int, p: int):
    """One representative per coset of the span in F_p^dim: free coordinates
    are the non-pivots."""
    import itertools as _it

    free = [i for i in range(dim) if i not in span.pivots]
    for combo in _it.product(range(p), repeat=len(free)):
        v = [0] * dim
        for k, i in enumerate(free):
            v[i] = combo[k]
        yield tuple(v)


def generation_check(Q: PcGroup, witnesses: WitnessSet, cap: int = 1 << 12) -> bool:
    """Optional stricter reading of the witness test: some choice of one
    witness per place generates Q."""
    import itertools as _it

    if Q.p**Q.n > cap:
        raise PcError("generation check only supported for small groups")
    gens = [Q.generator(i) for i in range(Q.n)]
    pools = []
    for reps in witnesses.classes.values():
        pool: set[Element] = set()
        for rep in reps:
            orbit = {rep}
            frontier = [rep]
            while frontier:
                y = frontier.pop()
                for g in gens:
                    z = Q.conjugate(y, g)
                    if z not in orbit:
                        orbit.add(z)
                        frontier.append(z)
            pool |= orbit
        pools.append(sorted(pool))
    for combo in _it.product(*pools):
        if Q.subgroup_closure(combo).rank == Q.n:
            return True
    return False


def _compare(a: AbelianType, b: AbelianType, strict: bool) -> bool:
    return a == b if strict else a.dominated_by(b)


def abelianization_test(
    Q: PcGroup,
    targets: TargetData,
    current_class: Optional[int] = None,
    force_strict: bool = False,
) -> tuple[bool, str]:
    """Compare subgroup abelianizations of Q against the targets.

    Index-p subgroups are matched to targets through their character on the
    Frattini quotient; index-p^2 subgroups must admit an injective matching
    into the target multiset under dominance.
    """
    p = Q.p
    strict = force_strict or (
        current_class is not None and targets.strict_at(current_class)
    )
    own = Q.abelianization()
    if not _compare(own, targets.index1, strict):
        return False, (
            f"index 1: {own.render(p)} vs {targets.index1.render(p)}"
            + (" (equality required)" if strict else "")
        )
    if targets.comparison_depth < p:
        return True, ""
    subgroups = Q.low_index_subgroups(targets.comparison_depth)
    p2_types = []
    for H in subgroups:
        if H.index == 1:
            continue
        if H.index == p:
            chi = H.character_label()
            target = targets.index_p.get(chi)
            if target is None:
                raise PcError(f"no target labelled {chi}")
            ab = H.abelian_invariants()
            if not _compare(ab, target, strict):
                label = "".join(str(v) for v in chi)
                return False, (
                    f"index {p} label {label}: {ab.render(p)} vs {target.render(p)}"
                    + (" (equality required)" if strict else "")
                )
        else:
            p2_types.append(H.abelian_invariants())
    if targets.comparison_depth >= p * p and p2_types:
        if not _injective_matching(p2_types, list(targets.index_p2), strict):
            return False, (
                f"index {p*p}: no matching of "
                f"{[t.render(p) for t in p2_types]} into "
                f"{[t.render(p) for t in targets.index_p2]}"
            )
    return True, ""


def _injective_matching(left: list, right: list, strict: bool) -> bool:
    """Left-saturating bipartite matching with dominance (or equality) edges."""
    if len(left) > len(right):
        return False
    adjacency = [
        [j for j, t in enumerate(right) if _compare(a, t, strict)] for a in left
    ]
    match_right: dict[int, int] = {}

    def augment(i: int, seen: set) -> bool:
        for j in adjacency[i]:
            if j in seen:
                continue
            seen.add(j)
            if j not in match_right or augment(match_right[j], seen):
                match_right[j] = i
                return True
        return False

    for i in range(len(left)):
        if not augment(i, set()):
            return False
    return True


def rank_gap_test(cover: PCoverData, bound: int) -> tuple[bool, str]:
    """Multiplicator rank may exceed nuclear rank by at most ``bound``."""
    gap = cover.mult_rank - cover.nuclear_rank
    if gap > bound:
        return False, f"rank gap {cover.mult_rank}-{cover.nuclear_rank}={gap} > {bound}"
    return True, ""


def candidate_test(
    Q: PcGroup, cover: PCoverData, targets: TargetData, d: int
) -> bool:
    """Trivial Schur multiplier plus exact abelianization match."""
    if cover.mult_rank != d:
        return False
    ok, _ = abelianization_test(Q, targets, force_strict=True)
    return ok


def derive_targets(
    model: PcGroup,
    comparison_depth: Optional[int] = None,
    strict_from_class: Optional[int] = None,
) -> TargetData:
    """Read the target data off a model group (labels from its own basis)."""
    p = model.p
    depth = comparison_depth if comparison_depth is not None else p
    index_p: dict = {}
    index_p2 = []
    if depth >= p:
        for H in model.low_index_subgroups(depth):
            if H.index == p:
                index_p[H.character_label()] = H.abelian_invariants()
            elif H.index == p * p:
                index_p2.append(H.abelian_invariants())
    return TargetData(
        index1=model.abelianization(),
        index_p=index_p,
        index_p2=tuple(index_p2),
        comparison_depth=depth,
        strict_from_class=strict_from_class,
    )
