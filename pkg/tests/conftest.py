import pytest

from cartan_lab import coeff
from cartan_lab import groupoid as gpd
from cartan_lab import twist
from cartan_lab.steinberg import Context


def make_context(g, ring, cocycle=None):
    return Context(g, ring, cocycle or twist.trivial_cocycle(g, ring))


KLEIN_TABLE = [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]]

# two units, two parallel arrows each way plus two isotropy loops per unit side
K2XZ2_PERMS = [[0, 1], [1, 0], [0, 1], [1, 0]]


def klein_bicharacter(g, ring):
    """Cocycle from the biadditive pairing (a, b) -> (-1)^(a_low * b_high).

    Arrow ids equal group-element indices here because the identity is
    element 0 of the table.
    """
    table = {}
    minus = ring.normalize(-1)
    for a in range(4):
        for b in range(4):
            if (a & 1) and (b >> 1) & 1:
                table[(a, b)] = minus
    return twist.Cocycle(g, ring, table)


@pytest.fixture(scope="session")
def rings():
    return {
        "Q": coeff.Ring(coeff.RATIONALS),
        "F2": coeff.Ring(coeff.PRIME_FIELD, 2),
        "F3": coeff.Ring(coeff.PRIME_FIELD, 3),
        "F5": coeff.Ring(coeff.PRIME_FIELD, 5),
        "Z6": coeff.Ring(coeff.INT_MOD_M, 6),
    }


@pytest.fixture(scope="session")
def pair3_f3(rings):
    return make_context(gpd.pair_groupoid(3), rings["F3"])


@pytest.fixture(scope="session")
def pair3_f2(rings):
    return make_context(gpd.pair_groupoid(3), rings["F2"])


@pytest.fixture(scope="session")
def z2_f3(rings):
    return make_context(gpd.from_group(gpd.cyclic_table(2)), rings["F3"])


@pytest.fixture(scope="session")
def z3_f5(rings):
    return make_context(gpd.from_group(gpd.cyclic_table(3)), rings["F5"])


@pytest.fixture(scope="session")
def k2xz2_f3(rings):
    g = gpd.from_action(KLEIN_TABLE, K2XZ2_PERMS, label="k2xz2")
    return make_context(g, rings["F3"])


def arrow_between(g, s, t, skip_units=True):
    for a in range(g.num_arrows):
        if skip_units and g.is_unit(a):
            continue
        if int(g.src[a]) == s and int(g.tgt[a]) == t:
            return a
    raise AssertionError(f"no arrow {s} -> {t}")
