"""Brute-force oracles used only by the test suite.

These deliberately avoid the production code paths: ranks by minor
enumeration, subspaces by element sweeps, isomorphism by exhaustive
generator-image search on small groups, and abelian quotient existence by
explicit subgroup enumeration.
"""

from __future__ import annotations

import itertools

from pgsearch.pcgroup import PcGroup


def brute_rank_f2(rows: list[tuple[int, ...]]) -> int:
    """GF(2) rank via exhaustive search for the largest independent subset."""
    n = len(rows)
    best = 0
    for r in range(n, 0, -1):
        for subset in itertools.combinations(range(n), r):
            # independent iff no nonempty subset XORs to zero
            ok = True
            for mask in range(1, 1 << r):
                acc = None
                for k in range(r):
                    if mask >> k & 1:
                        v = rows[subset[k]]
                        acc = v if acc is None else tuple(a ^ b for a, b in zip(acc, v))
                if acc is not None and not any(acc):
                    ok = False
                    break
            if ok:
                return r
        if best:
            break
    return 0


def subspace_elements(basis: list[tuple[int, ...]], p: int, dim: int) -> set:
    """All vectors of the span, by sweeping every coefficient combination."""
    out = set()
    for coeffs in itertools.product(range(p), repeat=len(basis)):
        v = [0] * dim
        for c, row in zip(coeffs, basis):
            for i in range(dim):
                v[i] = (v[i] + c * row[i]) % p
        out.add(tuple(v))
    return out


def minimal_expressions(group: PcGroup) -> list:
    """Expression of every generator as nested powers/commutators of the
    weight-1 generators, via the definition chain."""
    group.require_weights()
    d = group.generator_rank()
    exprs: list = [("gen", i) for i in range(d)]
    for k in range(d, group.n):
        defn = group.definitions[k]
        if defn[0] == "pow":
            i = defn[1]
            w = group.power[i][:-1]
            exprs.append(("pow", i, w))
        else:
            _, j, i = defn
            w = group.conj[(j, i)][1:-1]
            exprs.append(("comm", j, i, w))
    return exprs


def evaluate_expression(exprs, k, images, target: PcGroup):
    kind = exprs[k][0]
    if kind == "gen":
        return images[exprs[k][1]]
    if kind == "pow":
        _, i, w = exprs[k]
        head = target.pow_element(evaluate_expression(exprs, i, images, target), target.p)
    else:
        _, j, i, w = exprs[k]
        head = target.commutator(
            evaluate_expression(exprs, j, images, target),
            evaluate_expression(exprs, i, images, target),
        )
    wval = target.identity
    for g, e in w:
        wval = target.mul(wval, target.pow_element(evaluate_expression(exprs, g, images, target), e))
    return target.mul(target.inv(wval), head)


def are_isomorphic(g1: PcGroup, g2: PcGroup) -> bool:
    """Exhaustive isomorphism test for small groups (order <= 2^6 or so)."""
    if g1.p != g2.p or g1.n != g2.n:
        return False
    if g1.n == 0:
        return True
    g1.require_weights()
    d = g1.generator_rank()
    if d != g2.generator_rank():
        return False
    exprs = minimal_expressions(g1)
    elements = list(g2.elements())
    full = g2.whole_group().key()
    for combo in itertools.product(elements, repeat=d):
        images = list(combo)
        ok = True
        values = {}
        for k in range(g1.n):
            values[k] = evaluate_expression(exprs, k, images, g2)
        # relations must hold
        for i in range(g1.n):
            lhs = g2.pow_element(values[i], g1.p)
            rhs = g2.identity
            for g, e in g1.power[i]:
                rhs = g2.mul(rhs, g2.pow_element(values[g], e))
            if lhs != rhs:
                ok = False
                break
        if ok:
            for j in range(g1.n):
                for i in range(j):
                    w = g1.conj_word(j, i)
                    lhs = g2.conjugate(values[j], values[i])
                    rhs = g2.identity
                    for g, e in w:
                        rhs = g2.mul(rhs, g2.pow_element(values[g], e))
                    if lhs != rhs:
                        ok = False
                        break
                if not ok:
                    break
        if not ok:
            continue
        if g2.subgroup_closure(combo).key() == full:
            return True
    return False


def brute_conjugacy_orbit(group: PcGroup, x) -> set:
    orbit = {x}
    frontier = [x]
    gens = [group.generator(i) for i in range(group.n)]
    while frontier:
        y = frontier.pop()
        for g in gens:
            z = group.conjugate(y, g)
            if z not in orbit:
                orbit.add(z)
                frontier.append(z)
    return orbit


def abelian_group_elements(orders: list[int]):
    return itertools.product(*(range(m) for m in orders))


def abelian_subgroups(orders: list[int]):
    """All subgroups of an abelian group given as a product of cyclics,
    as frozensets of element tuples.  Exponential; keep orders tiny."""
    elements = list(abelian_group_elements(orders))

    def add(a, b):
        return tuple((x + y) % m for x, y, m in zip(a, b, orders))

    def closure(gens):
        seen = {tuple(0 for _ in orders)}
        frontier = list(seen)
        while frontier:
            x = frontier.pop()
            for g in gens:
                y = add(x, g)
                if y not in seen:
                    seen.add(y)
                    frontier.append(y)
        return frozenset(seen)

    subgroups = {closure([])}
    frontier = [closure([])]
    while frontier:
        H = frontier.pop()
        for x in elements:
            if x not in H:
                H2 = closure(list(H) + [x])
                if H2 not in subgroups:
                    subgroups.add(H2)
                    frontier.append(H2)
    return subgroups


def abelian_quotient_types(orders: list[int], p: int) -> set:
    """Multisets of cyclic orders of every quotient of the abelian group."""
    from pgsearch.linalg import cokernel_invariants

    out = set()
    elements = list(abelian_group_elements(orders))
    for H in abelian_subgroups(orders):
        rows = [[m if i == k else 0 for k in range(len(orders))] for i, m in enumerate(orders)]
        rows += [list(h) for h in sorted(H)]
        inv = cokernel_invariants(rows, len(orders))
        out.add(tuple(sorted(d for d in inv if d > 1)))
    _ = elements
    return out
