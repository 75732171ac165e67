"""Finite p-groups as weighted power-conjugate presentations.

A group of order p^n is presented on generators g_1..g_n with relations

    g_i^p        = (normal word in g_{i+1}..g_n)          for every i,
    g_j ^ g_i    = (normal word starting with g_j)        for every j > i,

where x^y means y^-1 x y.  Every element has a unique normal form
g_1^{e_1} ... g_n^{e_n} with 0 <= e_i < p, computed by collection from the
left.  Groups produced by the quotient machinery additionally carry weights
(the class at which each generator enters) and definitions (the single
relation that introduces each generator of weight >= 2); both are needed by
the covering-group construction.

Generators are 0-indexed internally; the text format and reprs use g1..gn.
Elements are exponent tuples.  Words are tuples of (generator, exponent)
pairs; exponents may be negative in user input but are normalised away.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .linalg import FpMatrix, cokernel_invariants, rref as _rref, solve as _solve

Word = tuple[tuple[int, int], ...]
Element = tuple[int, ...]

_COLLECT_STEP_CAP = 200_000_000


class PcError(ValueError):
    """Structural problem with a presentation, word, or map."""


@dataclass(frozen=True)
class AbelianType:
    """Finite abelian p-group as a weakly decreasing list of exponents.

    ``AbelianType((1, 1, 4))`` with p = 2 is C2 x C2 x C16, printed in cyclic
    order notation as [2, 2, 16] (ascending, the conventional way round).
    """

    exponents: tuple[int, ...]

    def __post_init__(self):
        exps = tuple(sorted((int(e) for e in self.exponents), reverse=True))
        if any(e < 1 for e in exps):
            raise ValueError("exponents must be positive")
        object.__setattr__(self, "exponents", exps)

    @classmethod
    def from_orders(cls, orders: Sequence[int], p: int) -> "AbelianType":
        exps = []
        for m in orders:
            m = int(m)
            e = 0
            while m > 1:
                if m % p:
                    raise ValueError(f"{m} is not a power of {p}")
                m //= p
                e += 1
            if e:
                exps.append(e)
        return cls(tuple(exps))

    def orders(self, p: int) -> list[int]:
        return sorted(p**e for e in self.exponents)

    def render(self, p: int) -> str:
        return "[" + ", ".join(str(v) for v in self.orders(p)) + "]"

    def dominated_by(self, other: "AbelianType") -> bool:
        """True when this group is a quotient of ``other``.

        Componentwise comparison of the descending exponent lists, padded
        with zeros; standard quotient criterion for abelian p-groups.
        """
        a, b = self.exponents, other.exponents
        size = max(len(a), len(b))
        a = a + (0,) * (size - len(a))
        b = b + (0,) * (size - len(b))
        return all(x <= y for x, y in zip(a, b))

    def __len__(self):
        return len(self.exponents)


class PcGroup:
    """Consistent weighted power-conjugate presentation of a finite p-group."""

    __slots__ = (
        "p",
        "n",
        "power",
        "conj",
        "weights",
        "definitions",
        "_noncomm_mask",
        "_pow_rev",
        "_conj_rev",
        "_gen_inverses",
        "_cache",
    )

    def __init__(
        self,
        p: int,
        n: int,
        power: Sequence[Word],
        conj: dict[tuple[int, int], Word],
        weights: Optional[Sequence[int]] = None,
        definitions: Optional[dict[int, tuple]] = None,
    ):
        if p < 2:
            raise PcError("p must be a prime >= 2")
        self.p = p
        self.n = n
        self.power = tuple(tuple(w) for w in power)
        if len(self.power) != n:
            raise PcError("need one power relation per generator")
        clean: dict[tuple[int, int], Word] = {}
        for (j, i), w in conj.items():
            if not (0 <= i < j < n):
                raise PcError(f"bad conjugate relation pair ({j}, {i})")
            w = tuple(w)
            if w != ((j, 1),):
                clean[(j, i)] = w
        self.conj = clean
        self.weights = tuple(int(w) for w in weights) if weights is not None else None
        self.definitions = dict(definitions) if definitions is not None else None
        self._validate_words()
        if self.weights is not None:
            if len(self.weights) != n:
                raise PcError("need one weight per generator")
            if any(w < 1 for w in self.weights):
                raise PcError("weights must be positive")
            if any(a > b for a, b in zip(self.weights, self.weights[1:])):
                raise PcError("generators must be sorted by weight")
            if self.definitions is None:
                raise PcError("weighted presentations need definition data")
            expected = {i for i in range(n) if self.weights[i] >= 2}
            if set(self.definitions) != expected:
                raise PcError("every generator of weight >= 2 needs exactly one definition")
        # Per-generator bitmask of higher generators that do not commute past it.
        masks = [0] * n
        for (j, i) in clean:
            masks[i] |= 1 << j
        self._noncomm_mask = masks
        self._pow_rev = [tuple(reversed(w)) for w in self.power]
        self._conj_rev = {k: tuple(reversed(w)) for k, w in clean.items()}
        self._gen_inverses: list[Optional[Element]] = [None] * n
        self._cache: dict = {}

    # -- construction helpers ------------------------------------------------

    @classmethod
    def elementary_abelian(cls, p: int, d: int) -> "PcGroup":
        return cls(p, d, [()] * d, {}, weights=[1] * d, definitions={})

    @classmethod
    def abelian(cls, p: int, type_: AbelianType) -> "PcGroup":
        """Abelian p-group of the given type, one pc generator per layer."""
        cols: list[list[int]] = [list(range(len(type_.exponents)))]
        # generator index grid: chain k has exponents[k] generators
        gen_of: dict[tuple[int, int], int] = {}
        idx = 0
        weights = []
        for level in range(max(type_.exponents, default=0)):
            for k, e in enumerate(type_.exponents):
                if level < e:
                    gen_of[(k, level)] = idx
                    weights.append(level + 1)
                    idx += 1
        n = idx
        power: list[Word] = [()] * n
        defs: dict[int, tuple] = {}
        for (k, level), g in gen_of.items():
            if level + 1 < type_.exponents[k]:
                nxt = gen_of[(k, level + 1)]
                power[g] = ((nxt, 1),)
                defs[nxt] = ("pow", g)
        return cls(p, n, power, {}, weights=weights, definitions=defs)

    def _validate_words(self):
        for i, w in enumerate(self.power):
            for g, e in w:
                if not (0 <= g < self.n):
                    raise PcError(f"power relation of g{i+1} references unknown generator")
                if not (0 < e < self.p):
                    raise PcError(f"power relation of g{i+1} has exponent {e} out of range")
                if g <= i:
                    raise PcError(f"power relation of g{i+1} is not a tail word")
        for (j, i), w in self.conj.items():
            if not w or w[0] != (j, 1):
                raise PcError(f"conjugate relation g{j+1}^g{i+1} must start with g{j+1}")
            last = -1
            for g, e in w:
                if not (0 <= g < self.n) or not (0 < e < self.p):
                    raise PcError(f"conjugate relation g{j+1}^g{i+1} malformed")
                if g <= last:
                    raise PcError(f"conjugate relation g{j+1}^g{i+1} not in normal order")
                last = g

    # -- basic data ----------------------------------------------------------

    @property
    def order_exponent(self) -> int:
        return self.n

    @property
    def identity(self) -> Element:
        return (0,) * self.n

    def generator(self, i: int) -> Element:
        if not (0 <= i < self.n):
            raise PcError(f"unknown generator index {i}")
        e = [0] * self.n
        e[i] = 1
        return tuple(e)

    @property
    def is_weighted(self) -> bool:
        return self.weights is not None

    @property
    def p_class(self) -> int:
        if self.weights is not None:
            return max(self.weights, default=0)
        return len(self.exponent_p_central_series()) - 1

    def require_weights(self):
        if self.weights is None or self.definitions is None:
            raise PcError("operation requires a weighted presentation with definitions")

    def conj_word(self, j: int, i: int) -> Word:
        return self.conj.get((j, i), ((j, 1),))

    # -- collection ----------------------------------------------------------

    def collect(self, items: Iterable[tuple[int, int]]) -> Element:
        """Normal form of a word with nonnegative exponents.

        Collection from the left: the exponent vector ``a`` holds the
        collected prefix, the stack the uncollected suffix with the leftmost
        letter on top.
        """
        p = self.p
        n = self.n
        a = [0] * n
        occupied = 0
        masks = self._noncomm_mask
        pow_rev = self._pow_rev
        conj_rev = self._conj_rev
        stack: list[tuple[int, int]] = []
        buf = list(items)
        for g, e in reversed(buf):
            if e < 0:
                raise PcError("collect requires nonnegative exponents")
            if e:
                if not (0 <= g < n):
                    raise PcError(f"unknown generator index {g}")
                stack.append((g, e))
        steps = 0
        while stack:
            steps += 1
            if steps > _COLLECT_STEP_CAP:
                raise PcError("collection did not terminate (inconsistent input?)")
            i, e = stack.pop()
            above = occupied >> (i + 1)
            if above:
                if (occupied & masks[i]) == 0 and a[i] + e < p:
                    # everything above commutes with g_i and no power overflow
                    a[i] += e
                    occupied |= 1 << i
                    continue
                # full split: move the tail out, conjugated by one g_i
                if e > 1:
                    stack.append((i, e - 1))
                j = i + 1
                rest = above
                tail = []
                while rest:
                    if rest & 1 and a[j]:
                        tail.append((j, a[j]))
                        a[j] = 0
                        occupied &= ~(1 << j)
                    rest >>= 1
                    j += 1
                for j, ej in reversed(tail):
                    rel = conj_rev.get((j, i))
                    if rel is None:
                        stack.append((j, ej))
                    else:
                        for _ in range(ej):
                            stack.extend(rel)
                a[i] += 1
                if a[i] == p:
                    a[i] = 0
                    occupied &= ~(1 << i)
                    stack.extend(pow_rev[i])
                else:
                    occupied |= 1 << i
            else:
                a[i] += e
                while a[i] >= p:
                    a[i] -= p
                    stack.extend(pow_rev[i])
                if a[i]:
                    occupied |= 1 << i
                else:
                    occupied &= ~(1 << i)
        return tuple(a)

    @staticmethod
    def to_word(x: Element) -> Word:
        return tuple((i, e) for i, e in enumerate(x) if e)

    def mul(self, x: Element, y: Element) -> Element:
        return self.collect(self.to_word(x) + self.to_word(y))

    def inv(self, x: Element) -> Element:
        """Right inverse, built coordinate by coordinate."""
        p = self.p
        out = [0] * self.n
        w = x
        for i in range(self.n):
            e = w[i]
            if e:
                c = p - e
                out[i] = c
                w = self.collect(self.to_word(w) + ((i, c),))
        return tuple(out)

    def gen_inverse(self, i: int) -> Element:
        cached = self._gen_inverses[i]
        if cached is None:
            cached = self.inv(self.generator(i))
            self._gen_inverses[i] = cached
        return cached

    def conjugate(self, x: Element, g: Element) -> Element:
        return self.mul(self.mul(self.inv(g), x), g)

    def commutator(self, x: Element, y: Element) -> Element:
        # [x, y] = x^-1 y^-1 x y
        return self.mul(self.inv(self.mul(y, x)), self.mul(x, y))

    def pow_element(self, x: Element, m: int) -> Element:
        if m < 0:
            return self.pow_element(self.inv(x), -m)
        m %= self.p**self.n
        result = self.identity
        base = x
        while m:
            if m & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            m >>= 1
        return result

    def order_of(self, x: Element) -> int:
        order = 1
        y = x
        while y != self.identity:
            y = self.pow_element(y, self.p)
            order *= self.p
            if order > self.p**self.n:
                raise PcError("order computation overran the group")
        return order

    def evaluate_word(self, word: Iterable[tuple[int, int]], images: Optional[Sequence[Element]] = None) -> Element:
        """Evaluate a word (negative exponents allowed) at the generators or
        at the supplied images."""
        result = self.identity
        for g, e in word:
            base = images[g] if images is not None else self.generator(g)
            if e:
                result = self.mul(result, self.pow_element(base, e))
        return result

    # -- consistency ---------------------------------------------------------

    def is_consistent(self) -> tuple[bool, Optional[str]]:
        """Run the full associativity and power-overlap test battery.

        Compares the two collection orders of g_k g_j g_i for all k > j > i,
        plus g_j^p g_i, g_j g_i^p, and g_i^p g_i overlaps.  Returns the first
        violated test word if any.
        """
        p = self.p
        gens = [self.generator(i) for i in range(self.n)]
        pow_val = [self.collect(self.power[i]) for i in range(self.n)]
        for k in range(self.n - 1, -1, -1):
            for j in range(k):
                kj = self.mul(gens[k], gens[j])
                for i in range(j):
                    lhs = self.mul(kj, gens[i])
                    rhs = self.mul(gens[k], self.mul(gens[j], gens[i]))
                    if lhs != rhs:
                        return False, f"(g{k+1}*g{j+1})*g{i+1} != g{k+1}*(g{j+1}*g{i+1})"
        for j in range(self.n):
            gj_pm1 = self.pow_element(gens[j], p - 1)
            for i in range(j):
                lhs = self.mul(pow_val[j], gens[i])
                rhs = self.mul(gj_pm1, self.mul(gens[j], gens[i]))
                if lhs != rhs:
                    return False, f"g{j+1}^{p}*g{i+1} overlap"
                lhs = self.mul(self.mul(gens[j], gens[i]), self.pow_element(gens[i], p - 1))
                rhs = self.mul(gens[j], pow_val[i])
                if lhs != rhs:
                    return False, f"g{j+1}*g{i+1}^{p} overlap"
        for i in range(self.n):
            if self.mul(pow_val[i], gens[i]) != self.mul(gens[i], pow_val[i]):
                return False, f"g{i+1}^{p}*g{i+1} overlap"
        return True, None

    # -- subgroups -----------------------------------------------------------

    def leading_index(self, x: Element) -> int:
        for i, e in enumerate(x):
            if e:
                return i
        return self.n

    def sift(self, x: Element, seq: dict[int, Element]) -> Element:
        """Reduce x through an echelonised sequence keyed by pivot index."""
        p = self.p
        while True:
            i = self.leading_index(x)
            if i == self.n:
                return x
            s = seq.get(i)
            if s is None:
                return x
            # leading coefficient of s is 1, so s^(p - x_i) clears position i
            x = self.mul(x, self.pow_element(s, p - x[i]))

    def _normalise_leading(self, x: Element) -> Element:
        i = self.leading_index(x)
        if i == self.n:
            return x
        c = x[i]
        if c == 1:
            return x
        return self.pow_element(x, pow(c, -1, self.p))

    def subgroup_closure(self, generators: Iterable[Element], normal: bool = False) -> "SubgroupRecord":
        """Echelonised generating sequence for <generators> (or its normal
        closure), by sifting with power/commutator/conjugate saturation."""
        seq: dict[int, Element] = {}
        queue = [tuple(g) for g in generators]
        group_gens = [self.generator(i) for i in range(self.n)] if normal else []
        while queue:
            x = self.sift(queue.pop(), seq)
            if self.leading_index(x) == self.n:
                continue
            x = self._normalise_leading(x)
            seq[self.leading_index(x)] = x
            queue.append(self.pow_element(x, self.p))
            for s in list(seq.values()):
                if s != x:
                    queue.append(self.commutator(x, s))
                    queue.append(self.commutator(s, x))
            if normal:
                for g in group_gens:
                    queue.append(self.commutator(x, g))
        return SubgroupRecord.from_echelon(self, seq)

    def normal_closure(self, generators: Iterable[Element]) -> "SubgroupRecord":
        return self.subgroup_closure(generators, normal=True)

    def whole_group(self) -> "SubgroupRecord":
        return SubgroupRecord.from_echelon(
            self, {i: self.generator(i) for i in range(self.n)}
        )

    def trivial_subgroup(self) -> "SubgroupRecord":
        return SubgroupRecord.from_echelon(self, {})

    def derived_subgroup(self) -> "SubgroupRecord":
        gens = []
        for j in range(self.n):
            for i in range(j):
                c = self.commutator(self.generator(j), self.generator(i))
                if c != self.identity:
                    gens.append(c)
        return self.normal_closure(gens)

    def frattini_subgroup(self) -> "SubgroupRecord":
        gens = [self.collect(self.power[i]) for i in range(self.n)]
        gens.extend(
            self.commutator(self.generator(j), self.generator(i))
            for j in range(self.n)
            for i in range(j)
        )
        return self.normal_closure([g for g in gens if g != self.identity])

    def generator_rank(self) -> int:
        if self.weights is not None:
            return sum(1 for w in self.weights if w == 1)
        return self.n - self.frattini_subgroup().rank

    def exponent_p_central_series(self) -> list["SubgroupRecord"]:
        """Descending chain P_1 = G >= P_2 >= ... ending at the trivial group,
        with P_{i+1} = [P_i, G] P_i^p."""
        cached = self._cache.get("series")
        if cached is not None:
            return cached
        series = [self.whole_group()]
        if self.weights is not None:
            c = self.p_class
            for k in range(2, c + 1):
                seq = {
                    i: self.generator(i)
                    for i in range(self.n)
                    if self.weights[i] >= k
                }
                series.append(SubgroupRecord.from_echelon(self, seq))
            series.append(self.trivial_subgroup())
        else:
            current = series[0]
            while current.rank > 0:
                gens = []
                for x in current.sequence:
                    gens.append(self.pow_element(x, self.p))
                    for i in range(self.n):
                        gens.append(self.commutator(x, self.generator(i)))
                nxt = self.normal_closure([g for g in gens if g != self.identity])
                series.append(nxt)
                current = nxt
        self._cache["series"] = series
        return series

    def nilpotency_class(self) -> int:
        """Length of the lower central series (gamma_1 = G, gamma_{i+1} = [gamma_i, G])."""
        if self.n == 0:
            return 0
        current = self.whole_group()
        cls = 0
        while current.rank > 0:
            gens = []
            for x in current.sequence:
                for i in range(self.n):
                    c = self.commutator(x, self.generator(i))
                    if c != self.identity:
                        gens.append(c)
            current = self.normal_closure(gens)
            cls += 1
            if cls > self.n:
                raise PcError("lower central series failed to terminate")
        return cls

    def low_index_subgroups(self, max_index: int) -> list["SubgroupRecord"]:
        """All subgroups of index dividing max_index (p or p^2), index 1 included."""
        p = self.p
        if max_index not in (1, p, p * p):
            raise PcError(f"index bound {max_index} unsupported (use {p} or {p*p})")
        out = [self.whole_group()]
        if max_index == 1 or self.n == 0:
            return out
        d = self.generator_rank()
        frattini = self._frattini_echelon()
        if set(frattini) != set(range(d, self.n)):
            raise PcError(
                "low_index_subgroups needs the weight-1 generators first; "
                "rebuild the presentation through the quotient machinery"
            )
        # Index p: kernels of the nonzero characters of G/Phi(G).
        for chi in _characters(d, p):
            seq = dict(frattini)
            for v in _character_kernel_basis(chi, p):
                x = [0] * self.n
                for t in range(d):
                    x[t] = v[t]
                elt = tuple(x)
                seq[self.leading_index(elt)] = elt
            out.append(SubgroupRecord.from_echelon(self, seq))
        if max_index == p:
            return out
        seen = {rec.key(): rec for rec in out}
        # Index p^2, family one: kernels of codimension-2 subspaces of G/Phi.
        if d >= 2:
            for cols in itertools.combinations(range(d), 2):
                for rows in _codim2_kernels(d, p, cols):
                    seq = dict(frattini)
                    for v in rows:
                        x = [0] * self.n
                        for t in range(d):
                            x[t] = v[t]
                        elt = tuple(x)
                        seq[self.leading_index(elt)] = elt
                    rec = SubgroupRecord.from_echelon(self, seq)
                    seen.setdefault(rec.key(), rec)
        # Family two: maximal subgroups of maximal subgroups.
        for maximal in out[1:]:
            for rec in _maximal_subgroups_of(self, maximal):
                seen.setdefault(rec.key(), rec)
        result = list(seen.values())
        result.sort(key=lambda r: (self.n - r.rank, r.key()))
        return result

    def _frattini_echelon(self) -> dict[int, Element]:
        if self.weights is not None:
            return {
                i: self.generator(i) for i in range(self.n) if self.weights[i] >= 2
            }
        return dict(self.frattini_subgroup().echelon)

    # -- abelian invariants ----------------------------------------------------

    def abelianization(self) -> AbelianType:
        rows = []
        for i in range(self.n):
            row = [0] * self.n
            row[i] = self.p
            for g, e in self.power[i]:
                row[g] -= e
            rows.append(row)
        for (j, i), w in self.conj.items():
            row = [0] * self.n
            row[j] -= 1
            for g, e in w:
                row[g] += e
            rows.append(row)
        inv = cokernel_invariants(rows, self.n)
        if any(d == 0 for d in inv):
            raise PcError("abelianisation came out infinite; presentation broken")
        return AbelianType.from_orders(inv, self.p)

    # -- conjugacy -------------------------------------------------------------

    def are_conjugate(self, x: Element, y: Element) -> tuple[bool, Optional[Element]]:
        """Decide conjugacy by lifting along the exponent-p central series.

        In each central layer the problem is an affine one: h ranges over the
        centraliser computed so far and [y, h] sweeps a subspace of the layer.
        Requires a weighted presentation.
        """
        ok, g, _, _ = self.conjugacy_lift(x, y)
        if ok:
            z = self.conjugate(x, g)
            if z != y:
                raise PcError("conjugacy lifting produced a bad conjugator")
        return (True, g) if ok else (False, None)

    def conjugacy_lift(
        self, x: Element, y: Element, stop_before: Optional[int] = None
    ) -> tuple[bool, Optional[Element], list[Element], list[list[int]]]:
        """Central-series conjugacy lifting with its working state exposed.

        Returns (solved, conjugator g with x^g = y mod the first unprocessed
        layer, centraliser generators of y modulo that layer, commutator
        images of those generators in the last processed layer).  With
        ``stop_before`` = k the lift stops before imposing the weight-k layer,
        which callers use to reason about whole central fibres at once.
        """
        self.require_weights()
        c = self.p_class
        weights = self.weights

        def trunc(v: Element, k: int) -> Element:
            return tuple(v[i] if weights[i] <= k else 0 for i in range(self.n))

        top = c if stop_before is None else min(c, stop_before - 1)
        if trunc(x, 1) != trunc(y, 1):
            return False, None, [], []
        g = self.identity
        cent: list[Element] = [self.generator(i) for i in range(self.n)]
        images: list[list[int]] = []
        for k in range(2, top + 1):
            layer = [i for i in range(self.n) if weights[i] == k]
            z = self.conjugate(x, g)
            w = trunc(self.mul(self.inv(y), z), k)
            if any(w[i] and weights[i] < k for i in range(self.n)):
                raise PcError("conjugacy lifting lost its invariant")
            target = [(-w[i]) % self.p for i in layer]
            images = []
            for s in cent:
                com = trunc(self.commutator(y, s), k)
                images.append([com[i] for i in layer])
            mat = FpMatrix.from_rows(images, self.p, cols=len(layer))
            coeffs = _solve(mat, target)
            if coeffs is None:
                return False, None, cent, images
            h = self.identity
            for s, a in zip(cent, coeffs):
                if a:
                    h = self.mul(h, self.pow_element(s, a))
            g = self.mul(g, h)
            # new centraliser generators: kernel combinations plus the layer
            new_cent = []
            kernel = _kernel_combinations(images, self.p)
            for combo in kernel:
                elt = self.identity
                for s, a in zip(cent, combo):
                    if a:
                        elt = self.mul(elt, self.pow_element(s, a))
                if elt != self.identity:
                    new_cent.append(elt)
            new_cent.extend(self.generator(i) for i in layer)
            cent = new_cent
        return True, g, cent, images

    def conjugacy_classes(self) -> list[tuple[Element, int]]:
        """All classes by direct orbit enumeration; meant for small groups."""
        if self.p**self.n > 1 << 14:
            raise PcError("conjugacy_classes is a small-group routine; use are_conjugate")
        gens = [self.generator(i) for i in range(self.n)]
        seen: set[Element] = set()
        classes: list[tuple[Element, int]] = []
        for x in self.elements():
            if x in seen:
                continue
            orbit = {x}
            frontier = [x]
            while frontier:
                y = frontier.pop()
                for g in gens:
                    z = self.conjugate(y, g)
                    if z not in orbit:
                        orbit.add(z)
                        frontier.append(z)
            seen |= orbit
            classes.append((min(orbit), len(orbit)))
        classes.sort()
        return classes

    def class_representatives(
        self,
        over: Optional["Homomorphism"] = None,
        allowed: Optional[set[Element]] = None,
    ) -> list[tuple[Element, int]]:
        """Conjugacy classes, optionally restricted to those whose image under
        ``over`` lies in ``allowed``."""
        classes = self.conjugacy_classes()
        if over is None:
            return classes
        if allowed is None:
            raise PcError("class restriction needs the allowed image set")
        return [(r, s) for r, s in classes if over.apply(r) in allowed]

    def elements(self):
        for combo in itertools.product(range(self.p), repeat=self.n):
            yield tuple(combo)

    # -- rendering -------------------------------------------------------------

    def describe(self) -> str:
        return f"pc group of order {self.p}^{self.n}"

    def __repr__(self):
        return f"PcGroup(p={self.p}, n={self.n})"


def _characters(d: int, p: int):
    """Nonzero characters of F_p^d up to scalar, leading coefficient 1."""
    out = []
    for vec in itertools.product(range(p), repeat=d):
        if not any(vec):
            continue
        lead = next(v for v in vec if v)
        if lead != 1:
            continue
        out.append(vec)
    return out


def _character_kernel_basis(chi: Sequence[int], p: int) -> list[tuple[int, ...]]:
    """Echelonised basis of ker(chi), eliminating the last nonzero coordinate
    so the leading indices stay distinct."""
    d = len(chi)
    last = max(i for i, v in enumerate(chi) if v)
    inv = pow(chi[last], -1, p)
    basis = []
    for i in range(d):
        if i == last:
            continue
        v = [0] * d
        v[i] = 1
        v[last] = (-chi[i] * inv) % p
        basis.append(tuple(v))
    return basis


def _codim2_kernels(d: int, p: int, pivots: tuple[int, int]):
    """RREF bases of (d-2)-dimensional subspaces of F_p^d with free columns
    exactly at ``pivots``."""
    rows_idx = [i for i in range(d) if i not in pivots]
    free = []
    for r, ri in enumerate(rows_idx):
        for c in pivots:
            if c > ri:
                free.append((r, c))
    for values in itertools.product(range(p), repeat=len(free)):
        rows = []
        mat = {(r, c): 0 for r in range(len(rows_idx)) for c in range(d)}
        for r, ri in enumerate(rows_idx):
            mat[(r, ri)] = 1
        for (r, c), v in zip(free, values):
            mat[(r, c)] = v
        for r in range(len(rows_idx)):
            rows.append(tuple(mat[(r, c)] for c in range(d)))
        yield rows


def _maximal_subgroups_of(group: PcGroup, sub: "SubgroupRecord") -> list["SubgroupRecord"]:
    """Maximal subgroups of a subgroup, computed inside the parent group."""
    seq = sub.sequence
    if not seq:
        return []
    phi_gens = [group.pow_element(s, group.p) for s in seq]
    phi_gens += [group.commutator(a, b) for a in seq for b in seq if a != b]
    phi = group.subgroup_closure([g for g in phi_gens if g != group.identity])
    # greedy basis of H mod Phi(H): accept members independent of Phi plus
    # the ones accepted so far
    ech = dict(phi.echelon)
    basis = []
    for s in seq:
        x = group.sift(s, ech)
        if group.leading_index(x) < group.n:
            x = group._normalise_leading(x)
            ech[group.leading_index(x)] = x
            basis.append(s)
    d = len(basis)
    if group.p**d * phi.order != sub.order:
        raise PcError("Frattini basis of subgroup came out wrong")
    out = []
    for chi in _characters(d, group.p):
        last = max(i for i, v in enumerate(chi) if v)
        inv = pow(chi[last], -1, group.p)
        gens = list(phi.sequence)
        for i in range(d):
            if i == last:
                continue
            g = group.mul(
                basis[i], group.pow_element(basis[last], (-chi[i] * inv) % group.p)
            )
            gens.append(g)
        out.append(group.subgroup_closure(gens))
    return out


def _kernel_combinations(rows: list[list[int]], p: int) -> list[list[int]]:
    """Basis of the left kernel of the matrix whose rows are ``rows``."""
    nrows = len(rows)
    if nrows == 0:
        return []
    ncols = len(rows[0]) if rows[0] else 0
    data = np.concatenate(
        [
            np.array(rows, dtype=np.int64).reshape(nrows, ncols),
            np.eye(nrows, dtype=np.int64),
        ],
        axis=1,
    )
    reduced, _ = _rref(FpMatrix(p, data))
    out = []
    for i in range(reduced.rows):
        if not reduced.data[i, :ncols].any():
            out.append([int(x) for x in reduced.data[i, ncols:]])
    return out


@dataclass(frozen=True)
class SubgroupRecord:
    """Subgroup held as a canonical echelonised generating sequence.

    The sequence has strictly increasing leading indices, leading
    coefficients 1, and every entry reduced at the later pivots, so equal
    subgroups produce identical sequences.
    """

    group: PcGroup
    sequence: tuple[Element, ...]

    @classmethod
    def from_echelon(cls, group: PcGroup, seq: dict[int, Element]) -> "SubgroupRecord":
        items = [seq[i] for i in sorted(seq)]
        items = [group._normalise_leading(x) for x in items]
        # reduce each entry at the pivots of the later ones
        for k in range(len(items) - 1, -1, -1):
            for l in range(k + 1, len(items)):
                pl = group.leading_index(items[l])
                c = items[k][pl]
                if c:
                    items[k] = group.mul(
                        items[k], group.pow_element(items[l], group.p - c)
                    )
        return cls(group, tuple(items))

    @property
    def pivots(self) -> tuple[int, ...]:
        return tuple(self.group.leading_index(x) for x in self.sequence)

    @property
    def rank(self) -> int:
        return len(self.sequence)

    @property
    def echelon(self) -> dict[int, Element]:
        return {self.group.leading_index(x): x for x in self.sequence}

    @property
    def index(self) -> int:
        return self.group.p ** (self.group.n - self.rank)

    @property
    def order(self) -> int:
        return self.group.p**self.rank

    def key(self) -> tuple:
        return self.sequence

    def contains(self, x: Element) -> bool:
        return self.group.leading_index(self.group.sift(x, self.echelon)) == self.group.n

    def express(self, x: Element) -> Optional[list[int]]:
        """Coefficients of x over the sequence (x = prod s_k^{c_k} in order),
        or None when not a member.  Peels factors off the left, so the
        coefficients are exact, not merely leading-coordinate matches."""
        coeffs = [0] * self.rank
        ech = self.echelon
        order = {self.group.leading_index(s): k for k, s in enumerate(self.sequence)}
        while True:
            i = self.group.leading_index(x)
            if i == self.group.n:
                return coeffs
            s = ech.get(i)
            if s is None:
                return None
            e = x[i]
            coeffs[order[i]] = e
            x = self.group.mul(self.group.inv(self.group.pow_element(s, e)), x)

    def character_label(self) -> Optional[tuple[int, ...]]:
        """For an index-p subgroup: the normalised character it kills."""
        group = self.group
        if self.index != group.p:
            return None
        d = group.generator_rank()
        rows = []
        for s in self.sequence:
            lead = group.leading_index(s)
            if lead < d:
                rows.append([s[i] for i in range(d)])
        mat, pivots = _rref(FpMatrix.from_rows(rows, group.p, cols=d))
        free = [i for i in range(d) if i not in pivots]
        if len(free) != 1:
            raise PcError("index-p subgroup with bad Frattini image")
        j = free[0]
        chi = [0] * d
        chi[j] = 1
        for r, pc in enumerate(pivots):
            chi[pc] = (-int(mat.data[r, j])) % group.p
        lead = next(v for v in chi if v)
        if lead != 1:
            inv = pow(lead, -1, group.p)
            chi = [(v * inv) % group.p for v in chi]
        return tuple(chi)

    def induced_presentation(self) -> PcGroup:
        """Consistent pc presentation of this subgroup on its sequence."""
        group = self.group
        seq = list(self.sequence)
        r = len(seq)
        lookup = {group.leading_index(s): k for k, s in enumerate(seq)}

        def express_tail(x: Element, after: int) -> Word:
            word = []
            while True:
                i = group.leading_index(x)
                if i == group.n:
                    return tuple(word)
                k = lookup.get(i)
                if k is None or k <= after:
                    raise PcError("subgroup sequence is not closed")
                e = x[i]
                word.append((k, e))
                x = group.mul(group.inv(group.pow_element(seq[k], e)), x)

        power: list[Word] = []
        for k, s in enumerate(seq):
            power.append(express_tail(group.pow_element(s, group.p), k))
        conj: dict[tuple[int, int], Word] = {}
        for l in range(r):
            for k in range(l):
                y = group.conjugate(seq[l], seq[k])
                if y == seq[l]:
                    continue
                i = group.leading_index(y)
                if lookup.get(i) != l or y[i] != 1:
                    raise PcError("conjugate fell outside the expected tail")
                rest = group.mul(group.inv(seq[l]), y)
                word = ((l, 1),) + express_tail(rest, l)
                conj[(l, k)] = word
        return PcGroup(group.p, r, power, conj)

    def abelian_invariants(self) -> AbelianType:
        if self.rank == self.group.n:
            return self.group.abelianization()
        return self.induced_presentation().abelianization()


@dataclass(frozen=True)
class Homomorphism:
    """Map between pc groups given by generator images, checked on creation."""

    source: PcGroup
    target: PcGroup
    images: tuple[Element, ...]

    def __post_init__(self):
        if len(self.images) != self.source.n:
            raise PcError("need one image per source generator")
        for img in self.images:
            if len(img) != self.target.n:
                raise PcError("image has wrong length")
        src, tgt = self.source, self.target
        for i in range(src.n):
            lhs = tgt.pow_element(self.images[i], src.p)
            rhs = tgt.evaluate_word(src.power[i], self.images)
            if lhs != rhs:
                raise PcError(f"power relation of g{i+1} not respected")
        # trivial conjugate relations (commuting pairs) are implicit but must
        # be respected too
        for j in range(src.n):
            for i in range(j):
                lhs = tgt.conjugate(self.images[j], self.images[i])
                rhs = tgt.evaluate_word(src.conj_word(j, i), self.images)
                if lhs != rhs:
                    raise PcError(f"conjugate relation g{j+1}^g{i+1} not respected")

    def apply(self, x: Element) -> Element:
        return self.target.evaluate_word(self.source.to_word(x), self.images)

    def compose(self, inner: "Homomorphism") -> "Homomorphism":
        """self o inner (apply inner first)."""
        if inner.target is not self.source:
            raise PcError("composition mismatch")
        imgs = tuple(self.apply(img) for img in inner.images)
        return Homomorphism(inner.source, self.target, imgs)

    def is_surjective_on_frattini_quotient(self) -> bool:
        tgt = self.target
        d = tgt.generator_rank()
        phi = tgt._frattini_echelon()
        seq = dict(phi)
        for img in self.images:
            x = tgt.sift(img, seq)
            if tgt.leading_index(x) < tgt.n:
                x = tgt._normalise_leading(x)
                seq[tgt.leading_index(x)] = x
        return len(seq) == tgt.n if d else True


def truncation_homomorphism(source: PcGroup, target: PcGroup) -> Homomorphism:
    """Projection that forgets the generators beyond those of the target."""
    if target.n > source.n:
        raise PcError("target has more generators than source")
    images = []
    for i in range(source.n):
        if i < target.n:
            images.append(target.generator(i))
        else:
            images.append(target.identity)
    return Homomorphism(source, target, tuple(images))


# ----------------------------------------------------------------------------
# Text format


def render_pc(group: PcGroup) -> str:
    """Serialise a presentation in the line-based text format.

    Omitted relation lines mean a trivial right-hand side.  A ``weighted``
    header flag plus trailing ``; w=.. def=..`` annotations on the defining
    lines carry the weight data (undefined generators have weight 1).
    """
    header = f"group p={group.p} n={group.n}"
    if group.weights is not None:
        header += " weighted"
    lines = [header]
    definitions = group.definitions or {}
    def_of_relation: dict[tuple, int] = {}
    for k, rel in definitions.items():
        def_of_relation[rel] = k

    def fmt_word(w: Word) -> str:
        if not w:
            return "1"
        parts = []
        for g, e in w:
            parts.append(f"g{g+1}" if e == 1 else f"g{g+1}^{e}")
        return "*".join(parts)

    for i in range(group.n):
        w = group.power[i]
        key = ("pow", i)
        annot = ""
        if key in def_of_relation:
            k = def_of_relation[key]
            annot = f" ; w={group.weights[k]} def=pow(g{i+1})"
        if w or annot:
            lines.append(f"g{i+1}^{group.p} = {fmt_word(w)}{annot}")
    for j in range(group.n):
        for i in range(j):
            w = group.conj.get((j, i))
            key = ("conj", j, i)
            annot = ""
            if key in def_of_relation:
                k = def_of_relation[key]
                annot = f" ; w={group.weights[k]} def=conj(g{j+1},g{i+1})"
            if w is not None or annot:
                lines.append(
                    f"g{j+1}^g{i+1} = {fmt_word(w if w is not None else ((j, 1),))}{annot}"
                )
    return "\n".join(lines) + "\n"


def _parse_word(text: str, n: int) -> Word:
    text = text.strip()
    if text in ("1", ""):
        return ()
    out = []
    for factor in text.split("*"):
        factor = factor.strip()
        if "^" in factor:
            gen_s, exp_s = factor.split("^", 1)
            e = int(exp_s)
        else:
            gen_s, e = factor, 1
        if not gen_s.startswith("g"):
            raise PcError(f"bad factor {factor!r}")
        g = int(gen_s[1:]) - 1
        if not (0 <= g < n):
            raise PcError(f"word references undefined generator {factor!r}")
        out.append((g, e))
    return tuple(out)


def parse_pc(text: str) -> PcGroup:
    """Parse the text format produced by :func:`render_pc`."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("group"):
        raise PcError("missing 'group p=.. n=..' header")
    header = lines[0].split()
    weighted = "weighted" in header[1:]
    fields = dict(part.split("=") for part in header[1:] if "=" in part)
    p = int(fields["p"])
    n = int(fields["n"])
    power: list[Word] = [()] * n
    conj: dict[tuple[int, int], Word] = {}
    weight_of: dict[int, int] = {}
    definitions: dict[int, tuple] = {}
    for ln in lines[1:]:
        annot = None
        if ";" in ln:
            ln, annot = [part.strip() for part in ln.split(";", 1)]
        if "=" not in ln:
            raise PcError(f"malformed relation line {ln!r}")
        lhs, rhs = [part.strip() for part in ln.split("=", 1)]
        word = _parse_word(rhs, n)
        if "^g" in lhs:
            left_s, right_s = lhs.split("^g")
            j = int(left_s[1:]) - 1
            i = int(right_s) - 1
            conj[(j, i)] = word
            rel = ("conj", j, i)
        else:
            gen_s, exp_s = lhs.split("^")
            i = int(gen_s[1:]) - 1
            if int(exp_s) != p:
                raise PcError(f"power relation with exponent {exp_s}, expected {p}")
            power[i] = word
            rel = ("pow", i)
        if annot and "def=" in annot:
            if not word:
                raise PcError("definition line with trivial right-hand side")
            defined = word[-1][0]
            definitions[defined] = rel
            for part in annot.split():
                if part.startswith("w="):
                    weight_of[defined] = int(part[2:])
    if not weighted:
        return PcGroup(p, n, power, conj)
    weights = [weight_of.get(i, 1) for i in range(n)]
    return PcGroup(p, n, power, conj, weights=weights, definitions=definitions)
