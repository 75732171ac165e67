"""Covering groups, automorphism actions, immediate descendants, and the
p-quotient algorithm.

The cover of a group G of class c is built by hanging a new central generator
(a tail) on every relation that is not a definition and whose value can meet
the new class-(c+1) layer, then letting the consistency test words cut the
tails down to the multiplicator M.  Immediate descendants are the quotients
G*/U for allowable subgroups U (proper, U + N = M with N the nucleus), one
per orbit of the automorphism action on M.  Iterating cover-and-quotient
against the relators of a finite presentation is the p-quotient algorithm.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .linalg import FpMatrix, Subspace, enumerate_supplements, rref
from .pcgroup import (
    Element,
    Homomorphism,
    PcError,
    PcGroup,
    Word,
    truncation_homomorphism,
)


class OrbitCapExceeded(RuntimeError):
    """An orbit or allowable-subgroup enumeration outgrew the configured cap."""


DEFAULT_ORBIT_CAP = 1 << 22

RelationKey = tuple  # ("pow", i) or ("conj", j, i)


@dataclass(frozen=True)
class PCoverData:
    """Cover of a group together with its multiplicator and nucleus."""

    base: PcGroup
    cover: PcGroup
    multiplicator: Subspace
    nucleus: Subspace
    projection: Homomorphism
    # reduced tail vector (length mult_rank) attached to each base relation
    relation_tails: dict
    # for each tail coordinate, the relation that introduced it
    intro_relation: tuple

    @property
    def mult_rank(self) -> int:
        return self.multiplicator.dim

    @property
    def nuclear_rank(self) -> int:
        return self.nucleus.dim

    @property
    def is_terminal(self) -> bool:
        return self.nuclear_rank == 0


def _relation_keys(group: PcGroup) -> list[RelationKey]:
    keys: list[RelationKey] = [("pow", i) for i in range(group.n)]
    for j in range(group.n):
        for i in range(j):
            keys.append(("conj", j, i))
    return keys


def p_cover(group: PcGroup) -> PCoverData:
    """Covering group, multiplicator and nucleus of a weighted presentation."""
    group.require_weights()
    p, n = group.p, group.n
    c = group.p_class
    weights = group.weights
    definitions = set((group.definitions or {}).values())

    # 1. decide which relations receive a tail
    tail_of: dict[RelationKey, int] = {}
    order: list[RelationKey] = []
    for key in _relation_keys(group):
        if key in definitions:
            continue
        if key[0] == "conj":
            _, j, i = key
            if weights[j] + weights[i] > c + 1:
                if (j, i) in group.conj:
                    raise PcError("heavy conjugate relation should already be trivial")
                continue
        tail_of[key] = len(order)
        order.append(key)
    q = len(order)

    provisional = _build_cover_presentation(group, tail_of, None)

    # 2. consistency rows in the provisional cover
    rows = _consistency_rows(provisional, n, q, weights, c)
    relation_matrix, pivots = rref(FpMatrix.from_rows(rows, p, cols=q))
    kill = Subspace(q, relation_matrix, tuple(pivots))
    surviving = [o for o in range(q) if o not in kill.pivots]

    # 3. final cover with dependent tails substituted away
    reduced_tails: dict[RelationKey, tuple[int, ...]] = {}
    for key, o in tail_of.items():
        unit = [0] * q
        unit[o] = 1
        red = kill.reduce_vector(unit)
        reduced_tails[key] = tuple(red[s] for s in surviving)
    cover = _build_cover_presentation(group, tail_of, (reduced_tails, surviving))

    mult_rank = len(surviving)
    multiplicator = Subspace.full(mult_rank, p)
    projection = truncation_homomorphism(cover, group)

    # 4. nucleus = next term of the exponent-p central series of the cover
    nucleus_rows = []
    class_c_gens = [i for i in range(n) if weights[i] == c]
    for x in class_c_gens:
        val = cover.collect(cover.power[x])
        nucleus_rows.append(_tail_part(val, n, mult_rank))
        gx = cover.generator(x)
        for m in range(n):
            if m == x:
                continue
            com = cover.commutator(gx, cover.generator(m))
            nucleus_rows.append(_tail_part(com, n, mult_rank))
    nucleus = Subspace.from_vectors(
        [r for r in nucleus_rows if any(r)], mult_rank, p
    )

    intro = tuple(order[s] for s in surviving)
    rel_tails = {k: v for k, v in reduced_tails.items() if any(v)}
    return PCoverData(
        base=group,
        cover=cover,
        multiplicator=multiplicator,
        nucleus=nucleus,
        projection=projection,
        relation_tails=rel_tails,
        intro_relation=intro,
    )


def _tail_part(x: Element, n: int, q: int) -> tuple[int, ...]:
    if any(x[:n]):
        raise PcError("expected a central tail element")
    return tuple(x[n : n + q])


def _build_cover_presentation(group, tail_of, reduction) -> PcGroup:
    """Presentation with tails attached; with ``reduction`` given, dependent
    tails are substituted away and the result carries weights/definitions."""
    p, n = group.p, group.n
    c = group.p_class

    if reduction is None:
        q = len(tail_of)

        def tail_word(key, offset=n):
            o = tail_of.get(key)
            return ((offset + o, 1),) if o is not None else ()

        weights = None
        definitions = None
    else:
        reduced_tails, surviving = reduction
        q = len(surviving)

        def tail_word(key, offset=n):
            vec = reduced_tails.get(key)
            if vec is None:
                return ()
            return tuple((offset + k, v) for k, v in enumerate(vec) if v)

        weights = list(group.weights) + [c + 1] * q
        definitions = dict(group.definitions)

    total = n + q
    power: list[Word] = []
    for i in range(n):
        power.append(tuple(group.power[i]) + tail_word(("pow", i)))
    power.extend(() for _ in range(q))
    conj: dict[tuple[int, int], Word] = {}
    for j in range(n):
        for i in range(j):
            base_word = group.conj.get((j, i), ((j, 1),))
            tw = tail_word(("conj", j, i))
            if tw or (j, i) in group.conj:
                conj[(j, i)] = tuple(base_word) + tw
    if reduction is not None:
        reduced_tails, surviving = reduction
        order = sorted(tail_of, key=tail_of.get)
        for k, o in enumerate(surviving):
            key = order[o]
            if key[0] == "pow":
                definitions[n + k] = ("pow", key[1])
            else:
                definitions[n + k] = ("conj", key[1], key[2])
    return PcGroup(p, total, power, conj, weights=weights, definitions=definitions)


def _consistency_rows(cover, n, q, weights, c):
    """Tail relations implied by the weight-bounded consistency test words."""
    p = cover.p
    gens = [cover.generator(i) for i in range(n)]
    pow_val = [cover.collect(cover.power[i]) for i in range(n)]
    rows = []

    def row_of(u, v):
        if u[:n] != v[:n]:
            raise PcError("consistency discrepancy escaped the tail space")
        return [(u[n + t] - v[n + t]) % p for t in range(q)]

    for k in range(n):
        for j in range(k):
            if weights[k] + weights[j] + 1 > c + 1:
                continue
            kj = cover.mul(gens[k], gens[j])
            for i in range(j):
                if weights[k] + weights[j] + weights[i] > c + 1:
                    continue
                lhs = cover.mul(kj, gens[i])
                rhs = cover.mul(gens[k], cover.mul(gens[j], gens[i]))
                rows.append(row_of(lhs, rhs))
    for j in range(n):
        for i in range(j):
            if weights[j] + weights[i] + 1 > c + 1:
                continue
            lhs = cover.mul(pow_val[j], gens[i])
            rhs = cover.mul(
                cover.pow_element(gens[j], p - 1), cover.mul(gens[j], gens[i])
            )
            rows.append(row_of(lhs, rhs))
            lhs = cover.mul(cover.mul(gens[j], gens[i]), cover.pow_element(gens[i], p - 1))
            rhs = cover.mul(gens[j], pow_val[i])
            rows.append(row_of(lhs, rhs))
    for i in range(n):
        if weights[i] + 2 > c + 1:
            continue
        lhs = cover.mul(pow_val[i], gens[i])
        rhs = cover.mul(gens[i], pow_val[i])
        rows.append(row_of(lhs, rhs))
    return [r for r in rows if any(r)] or [[0] * q]


# ---------------------------------------------------------------------------
# Automorphisms


@dataclass(frozen=True)
class Automorphism:
    """Automorphism of a pc group, stored as images of all generators.

    Constructed objects are verified unless they arise as compositions or
    inverses of verified ones, which are automorphisms by closure.
    """

    group: PcGroup
    images: tuple[Element, ...]

    @classmethod
    def identity(cls, group: PcGroup) -> "Automorphism":
        return cls._trusted(group, tuple(group.generator(i) for i in range(group.n)))

    @classmethod
    def _trusted(cls, group, images) -> "Automorphism":
        obj = object.__new__(cls)
        object.__setattr__(obj, "group", group)
        object.__setattr__(obj, "images", tuple(images))
        return obj

    @classmethod
    def from_images(cls, group: PcGroup, images: Sequence[Element], verify: bool = True) -> "Automorphism":
        obj = cls._trusted(group, images)
        if verify:
            obj.verify()
        return obj

    @classmethod
    def from_minimal_images(
        cls, group: PcGroup, minimal_images: Sequence[Element], verify: bool = True
    ) -> "Automorphism":
        """Extend images of the weight-1 generators through the definitions."""
        group.require_weights()
        d = group.generator_rank()
        if len(minimal_images) != d:
            raise PcError("need one image per weight-1 generator")
        images: list[Optional[Element]] = [None] * group.n
        for i in range(d):
            images[i] = tuple(minimal_images[i])
        for k in range(d, group.n):
            images[k] = _definition_image(group, k, images)
        obj = cls._trusted(group, tuple(images))
        if verify:
            obj.verify()
        return obj

    def verify(self):
        Homomorphism(self.group, self.group, self.images)  # relation check
        seq = self.group.subgroup_closure(self.images)
        if seq.rank != self.group.n:
            raise PcError("generator images do not span the group")

    def apply(self, x: Element) -> Element:
        return self.group.evaluate_word(self.group.to_word(x), self.images)

    def then(self, other: "Automorphism") -> "Automorphism":
        """Composite that applies self first, then other."""
        if other.group is not self.group:
            raise PcError("composition across different groups")
        return Automorphism._trusted(
            self.group, tuple(other.apply(img) for img in self.images)
        )

    def inverse(self) -> "Automorphism":
        G = self.group
        ech: dict[int, tuple[Element, Element]] = {}
        queue: list[tuple[Element, Element]] = [
            (self.images[i], G.generator(i)) for i in range(G.n)
        ]
        while queue:
            h, u = queue.pop()
            while True:
                i = G.leading_index(h)
                if i == G.n or i in ech:
                    if i == G.n:
                        break
                    s, v = ech[i]
                    e = G.p - h[i]
                    h = G.mul(h, G.pow_element(s, e))
                    u = G.mul(u, G.pow_element(v, e))
                else:
                    cexp = pow(h[i], -1, G.p)
                    h2, u2 = G.pow_element(h, cexp), G.pow_element(u, cexp)
                    ech[i] = (h2, u2)
                    queue.append((G.pow_element(h2, G.p), G.pow_element(u2, G.p)))
                    for s, v in list(ech.values()):
                        if s != h2:
                            queue.append((G.commutator(h2, s), G.commutator(u2, v)))
                            queue.append((G.commutator(s, h2), G.commutator(v, u2)))
                    break
        if len(ech) != G.n:
            raise PcError("automorphism images failed to span; no inverse")
        inv_images = []
        for i in range(G.n):
            x = G.generator(i)
            pre = G.identity
            while True:
                j = G.leading_index(x)
                if j == G.n:
                    break
                s, v = ech[j]
                e = x[j]
                # peel the factor s^e off the left; its preimage is v^e
                x = G.mul(G.inv(G.pow_element(s, e)), x)
                pre = G.mul(pre, G.pow_element(v, e))
            inv_images.append(pre)
        return Automorphism._trusted(G, tuple(inv_images))

    def matrix_on_multiplicator(self, cv: PCoverData) -> FpMatrix:
        """Induced invertible action on the multiplicator of the base's cover."""
        cover = cv.cover
        base = cv.base
        n, q = base.n, cv.mult_rank
        if self.group is not base:
            raise PcError("automorphism belongs to a different group")
        images: list[Optional[Element]] = [None] * cover.n
        d = base.generator_rank()
        for i in range(d):
            img = self.images[i]
            images[i] = tuple(img) + (0,) * q
        for k in range(d, cover.n):
            images[k] = _definition_image(cover, k, images)
        rows = []
        for s in range(q):
            val = images[n + s]
            rows.append(_tail_part(val, n, q))
        mat = FpMatrix.from_rows(rows, base.p, cols=q)
        if len(rref(mat)[1]) != q:
            raise PcError("multiplicator action came out singular")
        return mat

    def key(self) -> tuple:
        return self.images

    def is_identity(self) -> bool:
        return all(
            self.images[i] == self.group.generator(i) for i in range(self.group.n)
        )


def _definition_image(group: PcGroup, k: int, images) -> Element:
    """Image of a defined generator from the images of earlier ones."""
    defn = group.definitions[k]
    if defn[0] == "pow":
        i = defn[1]
        rel = group.power[i]
        if not rel or rel[-1] != (k, 1):
            raise PcError(f"definition of g{k+1} does not trail its relation")
        w = rel[:-1]
        head = group.pow_element(images[i], group.p)
    else:
        _, j, i = defn
        rel = group.conj.get((j, i))
        if not rel or rel[0] != (j, 1) or rel[-1] != (k, 1):
            raise PcError(f"definition of g{k+1} does not trail its relation")
        w = rel[1:-1]
        head = group.commutator(images[j], images[i])
    wval = group.evaluate_word(w, images)
    return group.mul(group.inv(wval), head)


def lift_to_quotient(aut: Automorphism, descendant: "DescendantRecord") -> Automorphism:
    """Carry an automorphism of the base that fixes U down to the descendant."""
    Q = descendant.quotient
    d = Q.generator_rank()
    base_n = aut.group.n
    minimal = []
    for i in range(d):
        img = aut.images[i]
        minimal.append(tuple(img) + (0,) * (Q.n - base_n))
    return Automorphism.from_minimal_images(Q, minimal, verify=False)


def central_automorphisms(Q: PcGroup) -> list[Automorphism]:
    """Maps g -> g * (last-layer element) on one weight-1 generator each."""
    Q.require_weights()
    d = Q.generator_rank()
    c = Q.p_class
    layer = [i for i in range(Q.n) if Q.weights[i] == c]
    out = []
    if c < 2:
        return out
    for t in range(d):
        for l in layer:
            images = [Q.generator(i) for i in range(Q.n)]
            images[t] = Q.mul(Q.generator(t), Q.generator(l))
            out.append(Automorphism._trusted(Q, tuple(images)))
    return out


# ---------------------------------------------------------------------------
# Orbits of allowable subgroups


def _act(U: Subspace, mat: FpMatrix) -> Subspace:
    if U.dim == 0:
        return U
    moved = np.mod(U.basis.data @ mat.data, U.prime)
    return Subspace.from_vectors(moved, U.ambient_dim, U.prime)


def _orbit(U: Subspace, mats: list[FpMatrix], cap: int) -> dict[bytes, Subspace]:
    orbit = {U.key(): U}
    frontier = [U]
    while frontier:
        x = frontier.pop(0)
        for m in mats:
            y = _act(x, m)
            k = y.key()
            if k not in orbit:
                if len(orbit) >= cap:
                    raise OrbitCapExceeded(f"orbit exceeded cap {cap}")
                orbit[k] = y
                frontier.append(y)
    return orbit


@dataclass(frozen=True)
class DescendantRecord:
    """One immediate descendant: the subgroup U, the quotient, and context."""

    step: int
    subspace: Subspace
    quotient: PcGroup
    projection: Homomorphism
    stabilizer_generators: tuple[Automorphism, ...]
    orbit_size: int

    @property
    def order_exponent(self) -> int:
        return self.quotient.n


def quotient_by_subspace(cv: PCoverData, U: Subspace) -> PcGroup:
    """The quotient of the cover by a subspace of the multiplicator."""
    base = cv.base
    p, n, q = base.p, base.n, cv.mult_rank
    if U.ambient_dim != q:
        raise PcError("subspace lives in the wrong space")
    c = base.p_class
    new_coords = [o for o in range(q) if o not in U.pivots]
    coord_pos = {o: k for k, o in enumerate(new_coords)}
    s_count = len(new_coords)

    def tail_word(key) -> Word:
        vec = cv.relation_tails.get(key)
        if vec is None:
            return ()
        red = U.reduce_vector(vec)
        return tuple((n + coord_pos[o], red[o]) for o in new_coords if red[o])

    power: list[Word] = []
    for i in range(n):
        power.append(tuple(base.power[i]) + tail_word(("pow", i)))
    power.extend(() for _ in range(s_count))
    conj: dict[tuple[int, int], Word] = {}
    for j in range(n):
        for i in range(j):
            tw = tail_word(("conj", j, i))
            base_word = base.conj.get((j, i))
            if tw or base_word is not None:
                conj[(j, i)] = tuple(base_word or ((j, 1),)) + tw
    weights = list(base.weights) + [c + 1] * s_count
    definitions = dict(base.definitions)
    for o in new_coords:
        definitions[n + coord_pos[o]] = cv.intro_relation[o]
    return PcGroup(p, n + s_count, power, conj, weights=weights, definitions=definitions)


def immediate_descendants(
    group: PcGroup,
    auts: Sequence[Automorphism],
    cover: Optional[PCoverData] = None,
    orbit_cap: int = DEFAULT_ORBIT_CAP,
    with_stabilizers: bool = True,
    max_step: Optional[int] = None,
) -> list[DescendantRecord]:
    """One representative per orbit of allowable subgroups, as quotients.

    Descendants come out in deterministic order: step ascending, then the
    lexicographically least subspace of each orbit.  Empty exactly when the
    group is terminal.
    """
    cv = cover if cover is not None else p_cover(group)
    if cv.nuclear_rank == 0:
        return []
    mats = [a.matrix_on_multiplicator(cv) for a in auts]
    out = []
    top_step = cv.nuclear_rank if max_step is None else min(max_step, cv.nuclear_rank)
    for step in range(1, top_step + 1):
        allowable = enumerate_supplements(cv.mult_rank, cv.nucleus, step)
        if len(allowable) > orbit_cap:
            raise OrbitCapExceeded(
                f"{len(allowable)} allowable subgroups at step {step} exceed cap {orbit_cap}"
            )
        visited: set[bytes] = set()
        for U in allowable:
            if U.key() in visited:
                continue
            orbit = _orbit(U, mats, orbit_cap)
            visited.update(orbit.keys())
            quotient = quotient_by_subspace(cv, U)
            stab: tuple[Automorphism, ...] = ()
            if with_stabilizers:
                stab = _stabilizer_generators(U, auts, mats, orbit_cap)
            out.append(
                DescendantRecord(
                    step=step,
                    subspace=U,
                    quotient=quotient,
                    projection=truncation_homomorphism(quotient, group),
                    stabilizer_generators=stab,
                    orbit_size=len(orbit),
                )
            )
    return out


def _stabilizer_generators(
    U: Subspace,
    auts: Sequence[Automorphism],
    mats: Sequence[FpMatrix],
    cap: int,
) -> tuple[Automorphism, ...]:
    """Schreier generators of the stabiliser of U in <auts>."""
    if not auts:
        return ()
    group = auts[0].group
    ident = Automorphism.identity(group)
    trans: dict[bytes, Automorphism] = {U.key(): ident}
    points: dict[bytes, Subspace] = {U.key(): U}
    order = [U.key()]
    idx = 0
    while idx < len(order):
        k = order[idx]
        idx += 1
        x = points[k]
        for a, m in zip(auts, mats):
            y = _act(x, m)
            yk = y.key()
            if yk not in trans:
                if len(trans) >= cap:
                    raise OrbitCapExceeded(f"stabiliser orbit exceeded cap {cap}")
                trans[yk] = trans[k].then(a)
                points[yk] = y
                order.append(yk)
    inverses: dict[bytes, Automorphism] = {}
    gens: list[Automorphism] = []
    seen: set[tuple] = set()
    for k in order:
        x = points[k]
        for a, m in zip(auts, mats):
            yk = _act(x, m).key()
            t_inv = inverses.get(yk)
            if t_inv is None:
                t_inv = trans[yk].inverse()
                inverses[yk] = t_inv
            sigma = trans[k].then(a).then(t_inv)
            key = sigma.key()
            if key in seen or sigma.is_identity():
                continue
            seen.add(key)
            gens.append(sigma)
    return tuple(gens)


def stabilizer_generators(
    cover: PCoverData,
    auts: Sequence[Automorphism],
    U: Subspace,
    cap: int = DEFAULT_ORBIT_CAP,
) -> tuple[Automorphism, ...]:
    """Schreier generators of the stabiliser of U under the given action."""
    mats = [a.matrix_on_multiplicator(cover) for a in auts]
    return _stabilizer_generators(U, auts, mats, cap)


def propagate_automorphisms(
    record: DescendantRecord, include_identity: bool = True
) -> list[Automorphism]:
    """Automorphism generators for a descendant: lifted stabiliser generators
    extended by all central automorphisms into the new layer."""
    Q = record.quotient
    out: list[Automorphism] = []
    if include_identity:
        out.append(Automorphism.identity(Q))
    for a in record.stabilizer_generators:
        out.append(lift_to_quotient(a, record))
    out.extend(central_automorphisms(Q))
    deduped = []
    seen = set()
    for a in out:
        if a.key() not in seen:
            seen.add(a.key())
            deduped.append(a)
    return deduped


# ---------------------------------------------------------------------------
# Automorphism group generation (small groups and elementary abelian roots)


def gl_elements(d: int, p: int, cap: int = 1 << 20) -> list[FpMatrix]:
    """Every invertible d x d matrix over F_p (small d only)."""
    if p**(d * d) > cap:
        raise PcError(f"GL({d},{p}) enumeration exceeds cap")
    out = []
    for entries in itertools.product(range(p), repeat=d * d):
        mat = FpMatrix.from_rows(
            [entries[r * d : (r + 1) * d] for r in range(d)], p, cols=d
        )
        if len(rref(mat)[1]) == d:
            out.append(mat)
    return out


def automorphism_group_elements(group: PcGroup, cap: int = 1 << 18) -> list[Automorphism]:
    """All automorphisms of a small group, by brute force over images of the
    weight-1 generators."""
    group.require_weights()
    d = group.generator_rank()
    if group.n == 0:
        return [Automorphism.identity(group)]
    if group.p_class == 1:
        out = []
        for m in gl_elements(d, group.p):
            images = [tuple(int(v) for v in m.data[i]) for i in range(d)]
            out.append(Automorphism._trusted(group, tuple(images)))
        return out
    total = (group.p**group.n) ** d
    if total > cap:
        raise PcError(
            f"automorphism enumeration of order {group.p}^{group.n} with rank {d} exceeds cap"
        )
    elements = list(group.elements())
    out = []
    for combo in itertools.product(elements, repeat=d):
        # images must be independent modulo the Frattini subgroup
        mat = FpMatrix.from_rows([x[:d] for x in combo], group.p, cols=d)
        if len(rref(mat)[1]) != d:
            continue
        try:
            aut = Automorphism.from_minimal_images(group, combo, verify=True)
        except PcError:
            continue
        out.append(aut)
    return out


# ---------------------------------------------------------------------------
# Finite presentations and the p-quotient algorithm


@dataclass(frozen=True)
class FinitePresentation:
    """Abstract presentation: generator names and relator words."""

    generators: tuple[str, ...]
    relators: tuple[Word, ...]

    def __str__(self):
        rels = []
        for w in self.relators:
            rels.append(
                "*".join(
                    f"{self.generators[g]}" + (f"^{e}" if e != 1 else "")
                    for g, e in w
                )
                or "1"
            )
        return f"<{', '.join(self.generators)} | {', '.join(rels)}>"


_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")


def parse_presentation(text: str) -> FinitePresentation:
    """Parse ``<a, b | a^2, b^-1*a*b*a*b^3*a>``."""
    text = text.strip()
    if text.startswith("<") and text.endswith(">"):
        text = text[1:-1]
    if "|" not in text:
        raise PcError("presentation needs a '|' between generators and relators")
    gen_part, rel_part = text.split("|", 1)
    names = [g.strip() for g in gen_part.split(",") if g.strip()]
    if not names or any(not _NAME_RE.fullmatch(g) for g in names):
        raise PcError(f"bad generator list {gen_part!r}")
    index = {g: i for i, g in enumerate(names)}
    relators = []
    for rel in rel_part.split(","):
        rel = rel.strip()
        if not rel:
            continue
        word = []
        for factor in rel.split("*"):
            factor = factor.strip()
            if "^" in factor:
                name, exp_s = factor.split("^", 1)
                e = int(exp_s)
            else:
                name, e = factor, 1
            name = name.strip()
            if name == "1" and e == 1:
                continue
            if name not in index:
                raise PcError(f"relator references undefined generator {name!r}")
            word.append((index[name], e))
        relators.append(tuple(word))
    return FinitePresentation(tuple(names), tuple(relators))


@dataclass(frozen=True)
class PQuotientResult:
    group: PcGroup
    reached_maximal: bool
    images: tuple[Element, ...]  # images of the abstract generators


def p_quotient(
    presentation: FinitePresentation, p: int, max_class: int
) -> PQuotientResult:
    """Maximal quotient of p-class <= max_class of a finitely presented group.

    Iterates cover construction and relator imposition one class at a time.
    Redundant generators (nonzero exponent sums mod p in some relator) do not
    cut the multiplicator; those relators instead update the images of the
    redundant generators, and only relator combinations with zero exponent
    sums impose conditions.  ``reached_maximal`` is true when a further class
    would add nothing, i.e. the maximal p-quotient itself has been found.
    """
    if max_class < 1:
        raise PcError("max_class must be at least 1")
    g_count = len(presentation.generators)
    r_count = len(presentation.relators)
    exp_rows = []
    for w in presentation.relators:
        row = [0] * g_count
        for g, e in w:
            row[g] += e
        exp_rows.append([v % p for v in row])
    mat, pivots = rref(FpMatrix.from_rows(exp_rows, p, cols=g_count))
    span = Subspace(g_count, mat, tuple(pivots))
    free_cols = [j for j in range(g_count) if j not in pivots]
    d = len(free_cols)
    if d == 0:
        trivial = PcGroup(p, 0, [], {}, weights=[], definitions={})
        return PQuotientResult(trivial, True, tuple(() for _ in range(g_count)))
    group = PcGroup.elementary_abelian(p, d)
    pos = {c: k for k, c in enumerate(free_cols)}
    images = []
    for i in range(g_count):
        unit = [0] * g_count
        unit[i] = 1
        red = span.reduce_vector(unit)
        vec = [0] * d
        for c in free_cols:
            vec[pos[c]] = red[c]
        images.append(tuple(vec))
    images = tuple(images)

    # RREF of [E | I]: rows with zero E-part give the relator combinations
    # whose values constrain the multiplicator; pivot rows solve for image
    # adjustments of the redundant generators.
    if r_count:
        aug = np.concatenate(
            [np.array(exp_rows, dtype=np.int64), np.eye(r_count, dtype=np.int64)],
            axis=1,
        )
        reduced, _ = rref(FpMatrix(p, aug))
        kernel_combos = []
        pivot_rows = []  # (generator column, E-part, relator combination)
        for i in range(reduced.rows):
            e_part = reduced.data[i, :g_count]
            combo = [int(x) for x in reduced.data[i, g_count:]]
            if e_part.any():
                lead = next(c for c in range(g_count) if e_part[c])
                pivot_rows.append((lead, [int(x) for x in e_part], combo))
            else:
                kernel_combos.append(combo)
    else:
        kernel_combos = []
        pivot_rows = []

    while True:
        cv = p_cover(group)
        q = cv.mult_rank
        lifted = tuple(img + (0,) * q for img in images)
        values = []
        for w in presentation.relators:
            val = cv.cover.evaluate_word(w, lifted)
            values.append(_tail_part(val, group.n, q))
        rows = []
        for combo in kernel_combos:
            acc = [0] * q
            for coeff, vec in zip(combo, values):
                if coeff:
                    for t in range(q):
                        acc[t] = (acc[t] + coeff * vec[t]) % p
            if any(acc):
                rows.append(acc)
        U = Subspace.from_vectors(rows, q, p)
        if U.dim == q:
            return PQuotientResult(group, True, images)
        if U.sum(cv.nucleus).dim != q:
            raise PcError("relator subspace is not allowable; quotient tower broken")
        if group.p_class >= max_class:
            return PQuotientResult(group, False, images)
        # image adjustments for redundant generators: with non-pivot
        # adjustments fixed to zero, X_lead = -(combo . values)
        adjust = {}
        for lead, _e_part, combo in pivot_rows:
            acc = [0] * q
            for coeff, vec in zip(combo, values):
                if coeff:
                    for t in range(q):
                        acc[t] = (acc[t] + coeff * vec[t]) % p
            adjust[lead] = tuple((-a) % p for a in acc)
        adjusted = []
        for i in range(g_count):
            vec = lifted[i]
            delta = adjust.get(i)
            if delta:
                vec = vec[: group.n] + tuple(
                    (a + b) % p for a, b in zip(vec[group.n :], delta)
                )
            adjusted.append(vec)
        quotient = quotient_by_subspace(cv, U)
        images = tuple(
            _reduce_into_quotient(img, U, group.n, quotient.n) for img in adjusted
        )
        group = quotient


def _reduce_into_quotient(x: Element, U: Subspace, n: int, qn: int) -> Element:
    tail = U.reduce_vector(x[n:])
    new_coords = [o for o in range(U.ambient_dim) if o not in U.pivots]
    return tuple(x[:n]) + tuple(tail[o] for o in new_coords)


def pc_as_finite_presentation(group: PcGroup) -> FinitePresentation:
    """Read a pc presentation back as an abstract presentation.

    Trivial conjugate relations are spelled out; dropping them would present
    a larger group.
    """
    names = tuple(f"g{i+1}" for i in range(group.n))
    relators = []
    for i in range(group.n):
        w = [(i, group.p)]
        for g, e in group.power[i]:
            w.append((g, -e))
        relators.append(tuple(w))
    for j in range(group.n):
        for i in range(j):
            word = group.conj_word(j, i)
            w = [(i, -1), (j, 1), (i, 1)]
            for g, e in reversed(word):
                w.append((g, -e))
            relators.append(tuple(w))
    return FinitePresentation(names, tuple(relators))
