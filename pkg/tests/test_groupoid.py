import numpy as np
import pytest

from cartan_lab import groupoid as gpd
from cartan_lab.errors import InputError

from conftest import K2XZ2_PERMS, KLEIN_TABLE


def test_pair_groupoid_counts():
    g = gpd.pair_groupoid(3)
    assert g.n_units == 3
    assert g.num_arrows == 9
    ok, msg = g.validate()
    assert ok, msg
    assert g.is_principal()
    # units come first and are their own endpoints
    for u in g.units():
        assert g.is_unit(u)
        assert int(g.src[u]) == u == int(g.tgt[u])


def test_pair_groupoid_has_one_arrow_per_ordered_pair():
    g = gpd.pair_groupoid(4)
    for v in range(4):
        for w in range(4):
            assert len(g.arrows_between(v, w)) == 1


def test_group_as_one_unit_groupoid():
    g = gpd.from_group(gpd.cyclic_table(5))
    assert g.n_units == 1
    assert g.num_arrows == 5
    assert not g.is_principal()
    ok, msg = g.validate()
    assert ok, msg


def test_group_table_without_identity_rejected():
    with pytest.raises(InputError):
        gpd.from_group([[1, 0], [1, 0]])


def test_composition_axioms_exhaustive():
    for g in (gpd.pair_groupoid(3), gpd.from_group(gpd.cyclic_table(4)),
              gpd.sign_flip_groupoid(2)):
        n = g.num_arrows
        for a in range(n):
            for b in range(n):
                defined = int(g.src[a]) == int(g.tgt[b])
                assert (g.comp[a, b] >= 0) == defined
        for a in range(n):
            ia = int(g.inv[a])
            assert int(g.comp[a, ia]) == int(g.tgt[a])
            assert int(g.comp[ia, a]) == int(g.src[a])


def test_action_groupoid_two_parallel_arrows():
    g = gpd.from_action(KLEIN_TABLE, K2XZ2_PERMS)
    assert g.n_units == 2
    assert g.num_arrows == 8
    ok, msg = g.validate()
    assert ok, msg
    # exactly two arrows in every hom set; two distinct units joined by two
    # arrows rule out the isolated-isotropy property
    for v in range(2):
        for w in range(2):
            assert len(g.arrows_between(v, w)) == 2
    assert not g.is_principal()
    assert not g.is_i2i()


def test_action_groupoid_rejects_non_permutation():
    with pytest.raises(InputError):
        gpd.from_action(gpd.cyclic_table(2), [[0, 1], [0, 0]])


def test_sign_flip_shape():
    g = gpd.sign_flip_groupoid(2)
    assert g.n_units == 5
    assert g.num_arrows == 10
    # the centre point carries the only nontrivial isotropy
    sizes = g.iso_sizes()
    assert sorted(sizes.values()) == [1, 1, 1, 1, 2]
    assert not g.is_principal()
    assert g.is_i2i()


def test_disjoint_union_validates():
    g = gpd.disjoint_union([gpd.pair_groupoid(2), gpd.from_group(gpd.cyclic_table(3))])
    assert g.n_units == 3
    assert g.num_arrows == 7
    ok, msg = g.validate()
    assert ok, msg
    assert not g.is_principal()


def test_attach_isotropy_needs_an_isolated_unit():
    with pytest.raises(InputError):
        gpd.attach_isotropy(gpd.pair_groupoid(2), 1, gpd.cyclic_table(3))


def test_attach_isotropy_at_isolated_unit():
    base = gpd.disjoint_union([gpd.pair_groupoid(2), gpd.pair_groupoid(1)])
    g = gpd.attach_isotropy(base, 2, gpd.cyclic_table(3))
    ok, msg = g.validate()
    assert ok, msg
    assert g.n_units == 3
    assert g.num_arrows == 7
    assert len(g.arrows_between(2, 2)) == 3
    assert len(g.arrows_between(0, 0)) == 1


def test_wide_subgroupoids_pair3():
    g = gpd.pair_groupoid(3)
    wides = g.wide_subgroupoids()
    # one per partition of the three units
    assert len(wides) == 5
    for h in wides:
        assert g.is_wide_subgroupoid(frozenset(h))


def test_wide_subgroupoids_group_z2():
    g = gpd.from_group(gpd.cyclic_table(2))
    wides = g.wide_subgroupoids()
    assert len(wides) == 2


def test_close_arrow_set_is_a_closure():
    g = gpd.pair_groupoid(3)
    units = set(g.units())
    seed = units | {3}
    closed = g.close_arrow_set(seed)
    assert g.is_wide_subgroupoid(closed)
    assert closed == g.close_arrow_set(closed)
    assert seed <= closed


def test_restrict_to_invariant_units():
    g = gpd.disjoint_union([gpd.pair_groupoid(2), gpd.from_group(gpd.cyclic_table(3))])
    sub, arrow_map = g.restrict([0, 1])
    ok, msg = sub.validate()
    assert ok, msg
    assert sub.n_units == 2
    assert sub.num_arrows == 4
    assert len(arrow_map) == 4
    # a transitive groupoid has no proper invariant unit sets
    with pytest.raises(InputError):
        gpd.pair_groupoid(3).restrict([0, 1])


def test_json_roundtrip_explicit_tables():
    g = gpd.from_action(KLEIN_TABLE, K2XZ2_PERMS)
    g.build_json = None  # force the explicit-table encoding
    data = g.to_json()
    h = gpd.from_json(data)
    assert h.num_arrows == g.num_arrows
    assert np.array_equal(h.comp, g.comp)
    assert np.array_equal(h.inv, g.inv)


def test_json_roundtrip_build_spec():
    g = gpd.build_from_json({"kind": "pair", "n": 3})
    data = g.to_json()
    assert data == {"build": {"kind": "pair", "n": 3}}
    h = gpd.from_json(data)
    assert h.num_arrows == 9


def test_invalid_tables_are_refused():
    with pytest.raises(InputError):
        gpd.from_json({"units": 1,
                       "arrows": [{"id": 0, "src": 0, "tgt": 0},
                                  {"id": 1, "src": 0, "tgt": 0}],
                       "comp": [[0, 0, 0], [0, 1, 1], [1, 0, 1]],
                       "inv": [0, 1]})
