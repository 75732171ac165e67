"""Number-theoretic front matter for two-prime and three-prime searches.

Covers: Legendre symbols, classification of a prime pair into the known
explicit families (semidihedral, modular, the P_k family, and the conjectural
family with its order/class formulas), the Golod-Shafarevich infiniteness
screen, the quadratic ramification frame for setting up search inputs, and a
Hausdorff dimension utility for tree representations of infinite quotients.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .pcgroup import PcError
from .pcover import FinitePresentation


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _check_odd_prime(q: int):
    if q == 2 or not _is_prime(q):
        raise PcError(f"{q} is not an odd prime")


def legendre(a: int, q: int) -> int:
    """Legendre symbol (a/q) by Euler's criterion."""
    _check_odd_prime(q)
    a %= q
    if a == 0:
        return 0
    r = pow(a, (q - 1) // 2, q)
    return 1 if r == 1 else -1


def _v2(n: int) -> int:
    k = 0
    while n % 2 == 0:
        n //= 2
        k += 1
    return k


def _is_fourth_power(a: int, q: int) -> bool:
    """a in (F_q^x)^4, for q = 1 mod 4."""
    a %= q
    if a == 0:
        return False
    return pow(a, (q - 1) // 4, q) == 1


@dataclass(frozen=True)
class PairClassification:
    """Which explicit family a pair of odd primes falls into, if any."""

    case: str  # Thm2 | Thm3 | Thm4_1 | Thm4_2 | Conjecture_S3 | Unclassified
    p: int
    q: int
    k: int = 0
    order_exponent: Optional[int] = None
    p_class: Optional[int] = None


def classify_pair(p: int, q: int) -> PairClassification:
    """Test the family hypotheses in order and return the first match.

    Roles are assigned internally, so the result is symmetric in the inputs.
    """
    _check_odd_prime(p)
    _check_odd_prime(q)
    if p == q:
        raise PcError("the two primes must be distinct")
    if p % 4 == 3 and q % 4 == 3:
        # exactly one of the two is a residue of the other (reciprocity)
        if legendre(p, q) == 1:
            pp, qq = p, q
        else:
            pp, qq = q, p
        k = _v2(qq * qq - 1)
        return PairClassification("Thm2", pp, qq, k, order_exponent=k + 1, p_class=k)
    if p % 4 == 3 and q % 4 == 1:
        pp, qq = p, q
    elif q % 4 == 3 and p % 4 == 1:
        pp, qq = q, p
    else:
        return PairClassification("Unclassified", min(p, q), max(p, q))
    if legendre(pp, qq) == -1:
        k = _v2(qq - 1)
        return PairClassification("Thm3", pp, qq, k, order_exponent=k + 2, p_class=k + 1)
    k = _v2(qq - 1)
    if k == 2 and _is_fourth_power(pp, qq):
        return PairClassification("Thm4_1", pp, qq, k, order_exponent=3 * k + 1)
    if k >= 3 and legendre(pp, qq) == 1 and not _is_fourth_power(pp, qq):
        return PairClassification("Thm4_2", pp, qq, k, order_exponent=3 * k + 1)
    if (
        qq % 8 == 5
        and legendre(pp, qq) == 1
        and not _is_fourth_power(pp, qq)
    ):
        kk = _v2(pp + 1)
        return PairClassification(
            "Conjecture_S3", pp, qq, kk,
            order_exponent=5 * kk + 9, p_class=4 * kk + 3,
        )
    return PairClassification("Unclassified", min(p, q), max(p, q))


_T5_RELATORS = (
    # two known presentations for the k = 2 member of the conjectural family
    ((1, 1), (0, 1), (1, 2), (0, 1), (1, -5), (0, 1), (1, 5), (0, 1), (1, 9),
     (0, 1), (1, -1), (0, 1), (1, 5), (0, 1), (1, -4), (0, 1)),
    ((1, -7), (0, 1), (1, -6), (0, 1), (1, 3), (0, 1), (1, -3), (0, 1), (1, 1),
     (0, 1), (1, -1), (0, 1), (1, -3), (0, 1), (1, -4), (0, 1)),
)


def predicted_presentation(c: PairClassification) -> tuple[FinitePresentation, ...]:
    """Defining presentations for the classified family member.

    Returns one presentation for the explicit families and the two known
    presentations for the k = 2 conjectural case; raises for conjectural
    members with k >= 3, where no short presentations are known.
    """
    names = ("a", "b")
    if c.case == "Thm2":
        k = c.k
        rel = (
            ((0, 2),),
            ((1, 2**k),),
            ((0, -1), (1, 1), (0, 1), (1, -(-1 + 2 ** (k - 1)))),
        )
        return (FinitePresentation(names, rel),)
    if c.case == "Thm3":
        k = c.k
        rel = (
            ((0, 2),),
            ((1, 2 ** (k + 1)),),
            ((0, -1), (1, 1), (0, 1), (1, -(1 + 2**k))),
        )
        return (FinitePresentation(names, rel),)
    if c.case in ("Thm4_1", "Thm4_2"):
        k = c.k
        rel = (
            ((0, 2),),
            ((1, -1), (0, 1), (1, 1), (0, 1), (1, 1), (0, 1), (1, 2**k - 1), (0, 1)),
        )
        return (FinitePresentation(names, rel),)
    if c.case == "Conjecture_S3":
        if c.k != 2:
            raise PcError(
                f"no known presentation for the conjectural family with k={c.k}"
            )
        return tuple(FinitePresentation(names, (((0, 2),), rel)) for rel in _T5_RELATORS)
    raise PcError(f"no presentation for case {c.case}")


def conjecture_order_class(p: int, q: int, n_value: Optional[int] = None) -> tuple[int, int]:
    """Conjectured order exponent 5k+9 and nilpotency class 4k+3.

    ``n_value`` is the exponent n of the [2, 2^n] index-2 target when known;
    the formulas are only claimed for n = 4.
    """
    c = classify_pair(p, q)
    if c.case != "Conjecture_S3":
        raise PcError(f"pair ({p}, {q}) is not in the conjectural family")
    if n_value is not None and n_value != 4:
        raise PcError(f"no prediction for [2, 2^n] targets with n={n_value}")
    return 5 * c.k + 9, 4 * c.k + 3


def golod_shafarevich_infinite(d: int, r: int) -> bool:
    """True when a pro-p group with d generators and r relations must be
    infinite: r <= d^2/4."""
    if d < 0 or r < 0:
        raise PcError("generator and relation counts must be nonnegative")
    return 4 * r <= d * d


def hausdorff_ratios(order_exponents: Sequence[int]) -> list[Fraction]:
    """Exact ratios e_n / (2^n - 1) of level-n image order exponents against
    the full binary tree automorphism tower; the liminf is the caller's."""
    out = []
    for n, e in enumerate(order_exponents, start=1):
        if e < 0:
            raise PcError("order exponents must be nonnegative")
        out.append(Fraction(int(e), 2**n - 1))
    return out


@dataclass(frozen=True)
class RamificationFrame:
    """Coordinates for a class-1 root quotient in the inertia basis.

    For odd primes q_1 < ... < q_d, generator i of the root is the image of a
    tame inertia generator at q_i.  Characters of the root correspond to the
    quadratic fields Q(sqrt(prod q_i^*)) with q^* = (-1)^((q-1)/2) q; such a
    field ramifies at q_i exactly when i lies in the defining subset, and
    complex conjugation is visible exactly on the negative-discriminant
    fields.
    """

    primes: tuple[int, ...]

    def __post_init__(self):
        for q in self.primes:
            _check_odd_prime(q)
        if len(set(self.primes)) != len(self.primes):
            raise PcError("primes must be distinct")

    @property
    def d(self) -> int:
        return len(self.primes)

    def inertia_vector(self, q: int) -> tuple[int, ...]:
        i = self.primes.index(q)
        return tuple(1 if k == i else 0 for k in range(self.d))

    def conjugation_vector(self) -> tuple[int, ...]:
        return tuple(1 if q % 4 == 3 else 0 for q in self.primes)

    def character_of_subset(self, subset: Sequence[int]) -> tuple[int, ...]:
        """Character of the quadratic field built from the given primes."""
        chi = [0] * self.d
        for q in subset:
            chi[self.primes.index(q)] ^= 1
        if not any(chi):
            raise PcError("subset must be nonempty")
        return tuple(chi)

    def discriminant_of_subset(self, subset: Sequence[int]) -> int:
        disc = 1
        for q in subset:
            disc *= -q if q % 4 == 3 else q
        return disc
