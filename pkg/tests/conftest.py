import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import pytest

from pgsearch.pcgroup import PcGroup
from pgsearch.pcover import p_quotient, parse_presentation


def build_sd16() -> PcGroup:
    """Semidihedral group of order 16 with its standard weighted presentation."""
    return PcGroup(
        2,
        4,
        power=[(), ((2, 1),), ((3, 1),), ()],
        conj={(1, 0): ((1, 1), (2, 1)), (2, 0): ((2, 1), (3, 1))},
        weights=[1, 1, 2, 3],
        definitions={2: ("pow", 1), 3: ("pow", 2)},
    )


@pytest.fixture(scope="session")
def sd16() -> PcGroup:
    return build_sd16()


@pytest.fixture(scope="session")
def d8() -> PcGroup:
    return p_quotient(parse_presentation("<a, b | a^2, b^4, a^-1*b*a*b>"), 2, 5).group


@pytest.fixture(scope="session")
def q8() -> PcGroup:
    return p_quotient(parse_presentation("<a, b | a^4, b^4, a^2*b^2, b^-1*a*b*a>"), 2, 5).group


@pytest.fixture(scope="session")
def m4_2() -> PcGroup:
    return p_quotient(parse_presentation("<a, b | a^2, b^8, a^-1*b*a*b^-5>"), 2, 6).group


@pytest.fixture(scope="session")
def q16() -> PcGroup:
    return p_quotient(
        parse_presentation("<a, b | b^8, a^2*b^4, a^-1*b*a*b>"), 2, 6
    ).group


def run_extended() -> bool:
    return os.environ.get("RUN_EXTENDED", "") not in ("", "0", "no")


extended = pytest.mark.skipif(
    not (os.environ.get("RUN_EXTENDED", "") not in ("", "0", "no")),
    reason="extended tier: set RUN_EXTENDED=1 (documented multi-minute runtimes)",
)
