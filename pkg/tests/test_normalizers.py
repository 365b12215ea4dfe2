import itertools
import random

import numpy as np
import pytest

from cartan_lab import coeff, exactlin, twist
from cartan_lab import groupoid as gpd
from cartan_lab import normalizers as nz
from cartan_lab.errors import GuardExceeded
from cartan_lab.inclusions import diagonal_basis, subgroupoid_algebra
from cartan_lab.steinberg import Context

from conftest import KLEIN_TABLE, arrow_between, klein_bicharacter, make_context


# -- certificates and daggers ------------------------------------------------

def test_unit_indicator_normalizer(pair3_f3):
    cert = nz.is_normalizer(pair3_f3, pair3_f3.one())
    assert cert is not None
    assert cert.verify()
    assert cert.dagger == pair3_f3.one()


def test_dagger_closed_form_inverts_bisections(pair3_f3):
    ctx = pair3_f3
    a = arrow_between(ctx.groupoid, 0, 1)
    n = ctx.delta(a) + ctx.delta(arrow_between(ctx.groupoid, 1, 2))
    k = nz.dagger_closed_form(ctx, n)
    assert k is not None
    cert = nz.NormalizerCert(n, k)
    assert cert.verify()
    # trivial twist: the dagger of an indicator is the indicator of the inverses
    inv_support = {int(ctx.groupoid.inv[x]) for x in n.coeffs}
    assert set(k.coeffs) == inv_support


def test_dagger_closed_form_with_bicharacter_twist():
    r = coeff.Ring(coeff.PRIME_FIELD, 3)
    g = gpd.from_group(KLEIN_TABLE)
    ctx = Context(g, r, klein_bicharacter(g, r))
    for a in range(1, 4):
        n = ctx.delta(a)
        k = nz.dagger_closed_form(ctx, n)
        assert k is not None
        ia = int(g.inv[a])
        expected = ctx.delta(ia, r.try_inv(ctx.cocycle.omega(ia, a)))
        assert k == expected
        assert nz.NormalizerCert(n, k).verify()


def test_dagger_closed_form_refuses_non_bisections(z3_f5):
    n = z3_f5.delta(1) + z3_f5.delta(2)
    assert nz.dagger_closed_form(z3_f5, n) is None


def test_dagger_unique_for_symmetric_sum(z3_f5):
    # invertible element of a commutative algebra: the partner is forced
    w = z3_f5.delta(1) + z3_f5.delta(2)
    partners = nz.exhaustive_partners(z3_f5, w)
    assert len(partners) == 1
    k = partners[0]
    assert k == z3_f5.element({0: 2, 1: 3, 2: 3})
    cert = nz.is_normalizer(z3_f5, w)
    assert cert is not None and cert.dagger == k


def test_dagger_unique_across_enumerated_sample(pair3_f3):
    certs = nz.enumerate_normalizers(pair3_f3)
    rng = random.Random(29)
    sample = rng.sample([c for c in certs if not c.n.is_zero()], 12)
    for cert in sample:
        partners = nz.exhaustive_partners(pair3_f3, cert.n)
        assert partners == [cert.dagger]


def test_closed_form_agrees_with_exhaustive_search_under_twist():
    r = coeff.Ring(coeff.PRIME_FIELD, 3)
    g = gpd.from_group(KLEIN_TABLE)
    ctx = Context(g, r, klein_bicharacter(g, r))
    # groups have one unit, so bisections are single arrows
    for a in range(4):
        for lam in (1, 2):
            n = ctx.delta(a, lam)
            k = nz.dagger_closed_form(ctx, n)
            partners = nz.exhaustive_partners(ctx, n)
            assert partners == [k]


def test_two_arrows_element_refuted(k2xz2_f3):
    ctx = k2xz2_f3
    g = ctx.groupoid
    u, v = 0, 1
    g1, g2 = g.arrows_between(u, v)
    f = ctx.delta(g1) + ctx.delta(g2)
    assert (f * f).is_zero()
    assert nz.is_normalizer(ctx, f) is None


# -- enumeration -------------------------------------------------------------

def test_enumerate_full_pair3(pair3_f3):
    certs = nz.enumerate_normalizers(pair3_f3)
    assert len(certs) == 139
    for cert in certs:
        assert cert.verify()
    free = [c for c in certs if nz.is_free_normalizer(c)]
    assert len(free) == 39


def test_enumerate_f3z2(z2_f3):
    certs = nz.enumerate_normalizers(z2_f3)
    got = sorted(repr(c.n) for c in certs)
    assert got == ["0", "1@0", "1@1", "2@0", "2@1"]


def test_enumerate_f5z3_counts(z3_f5):
    # zero plus the 96 invertibles; only the diagonal scalars are free
    certs = nz.enumerate_normalizers(z3_f5)
    assert len(certs) == 97
    free = [c for c in certs if nz.is_free_normalizer(c)]
    assert len(free) == 5


def test_enumerate_diagonal_only(pair3_f3):
    certs = nz.enumerate_normalizers(pair3_f3, diagonal_basis(pair3_f3))
    assert len(certs) == 27
    for cert in certs:
        assert all(pair3_f3.groupoid.is_unit(a) for a in cert.n.coeffs)


def test_example_subalgebra_normalizers_leave_d(z3_f5):
    # span{delta_0, delta_1 + delta_2}: w itself is an invertible normalizer,
    # so the span of N(C,D) recovers all of C
    from cartan_lab.steinberg import algebra_closure, span_closure
    w = z3_f5.delta(1) + z3_f5.delta(2)
    c = algebra_closure(z3_f5, [w])
    certs = nz.enumerate_normalizers(z3_f5, c)
    span = span_closure(z3_f5, [cert.n for cert in certs])
    assert span.key() == c.key()


def test_structured_fast_path_is_contained_in_full_scan(pair3_f3, z2_f3):
    for ctx in (pair3_f3, z2_f3):
        full = {c.n for c in nz.enumerate_normalizers(ctx)}
        structured = nz.structured_unit_bisection_normalizers(ctx)
        assert structured, "structured scan found nothing"
        for cert in structured:
            assert cert.verify()
            assert cert.n in full


def test_enumeration_guard(pair3_f3):
    with pytest.raises(GuardExceeded):
        nz.enumerate_normalizers(pair3_f3, guard=100)


# -- order and filters -------------------------------------------------------

def test_leq_is_a_partial_order(z2_f3):
    ns = [c.n for c in nz.enumerate_normalizers(z2_f3) if not c.n.is_zero()]
    for n in ns:
        assert nz.leq(n, n)
    for n in ns:
        for m in ns:
            if nz.leq(n, m) and nz.leq(m, n):
                assert n == m
            for k in ns:
                if nz.leq(n, m) and nz.leq(m, k):
                    assert nz.leq(n, k)


def test_leq_restriction_characterization(pair3_f3):
    ctx = pair3_f3
    certs = nz.enumerate_normalizers(ctx)
    ns = [c.n for c in certs if not c.n.is_zero()]
    rng = random.Random(31)
    g = ctx.groupoid
    for m in rng.sample(ns, 20):
        source_units = {int(g.src[a]) for a in m.coeffs}
        for k in range(len(source_units) + 1):
            for subset in itertools.islice(itertools.combinations(sorted(source_units), k), 4):
                n = nz.restriction(m, subset)
                assert nz.leq(n, m)


def test_minimals_are_ultrafilter_representatives(z2_f3):
    ultra = nz.UltraStructure(z2_f3)
    assert sorted(repr(m) for m in ultra.minimals) == ["1@0", "1@1", "2@0", "2@1"]
    for m in ultra.minimals:
        ultra.assert_ultra(m)
        assert ultra.is_filter(ultra.up_set(m))


def test_ultrafilter_counts_match_total_groupoid(pair3_f2, z2_f3):
    for ctx in (pair3_f2, z2_f3):
        ultra = nz.UltraStructure(ctx)
        expected = len(ctx.ring.units()) * ctx.groupoid.num_arrows
        assert len(ultra.minimals) == expected


def test_filters_are_principal_up_sets(z2_f3):
    # every filter in the finite order is the up-set of its least element
    ultra = nz.UltraStructure(z2_f3)
    ns = ultra.nonzero
    for size in (1, 2, 3):
        for subset in itertools.combinations(ns, size):
            if not ultra.is_filter(set(subset)):
                continue
            least = [n for n in subset if all(nz.leq(n, m) for m in subset)]
            assert len(least) == 1
            assert set(subset) == set(ultra.up_set(least[0]))


def test_subsemigroup_filter_calculus(pair3_f3):
    """Filters of N(C,D) interact with N(A,D) by up-closure and intersection."""
    ctx = pair3_f3
    big = nz.UltraStructure(ctx)
    big_set = set(big.nonzero)
    proper = [h for h in ctx.groupoid.wide_subgroupoids()
              if len(h) not in (ctx.groupoid.n_units, ctx.groupoid.num_arrows)]
    for h in proper[:2]:
        sub = nz.UltraStructure(ctx, subgroupoid_algebra(ctx, h))
        s_set = set(sub.nonzero)
        assert s_set <= big_set
        # up-closure of a sub-ultrafilter is an ultrafilter upstairs
        for m in sub.minimals:
            assert m in big.minimals
            up_t = big.up_set(m)
            # and intersecting back recovers the original filter
            assert set(sub.up_set(m)) == set(up_t) & s_set
        # ambient ultrafilters that meet S are recovered from the trace
        for m in big.minimals:
            trace = set(big.up_set(m)) & s_set
            if not trace:
                continue
            reclosed = set()
            for x in trace:
                reclosed |= big.up_set(x)
            assert reclosed == set(big.up_set(m))


def test_ultrafilter_products_independent_of_representatives(z2_f3):
    # pair(2) has proper up-sets (monomials below invertibles), so the
    # product check is not vacuous there
    pair2 = make_context(gpd.pair_groupoid(2), coeff.Ring(coeff.PRIME_FIELD, 3))
    for ctx in (z2_f3, pair2):
        ultra = nz.UltraStructure(ctx)

        def upclose(elements):
            out = set()
            for x in elements:
                if x.is_zero():
                    continue
                out |= ultra.up_set(x)
            return out

        seen_proper_upset = False
        for u0 in ultra.minimals:
            if len(ultra.up_set(u0)) > 1:
                seen_proper_upset = True
            for v0 in ultra.minimals:
                if not ultra.composable(u0, v0, full_check=True):
                    continue
                member_products = {u * v for u in ultra.up_set(u0)
                                   for v in ultra.up_set(v0)}
                assert upclose(member_products) == upclose({u0 * v0})
        if ctx is pair2:
            assert seen_proper_upset


# -- reconstruction ----------------------------------------------------------

def test_reconstruction_pair2_f2():
    ctx = make_context(gpd.pair_groupoid(2), coeff.Ring(coeff.PRIME_FIELD, 2))
    rep = nz.phi_check(ctx)
    assert rep["reconstructed"]
    assert rep["total_size_matches"]


def test_reconstruction_z2_f3(z2_f3):
    rep = nz.phi_check(z2_f3)
    assert rep["reconstructed"]
    # sigma' has one ultrafilter per (unit scalar, arrow)
    assert rep["ultrafilter_count"] == 4
    assert rep["orbit_count"] == 2


def test_reconstruction_quotient_shape(pair3_f2):
    sigma_prime, quotient, info = nz.ultrafilter_groupoid(pair3_f2)
    assert quotient is not None
    ok, msg = quotient.validate()
    assert ok, msg
    assert quotient.num_arrows == pair3_f2.groupoid.num_arrows
    assert info["quotient_well_defined"]


# -- batched linear algebra --------------------------------------------------

def test_batch_rank_matches_single(pair3_f3):
    rng = np.random.default_rng(5)
    for p in (2, 3, 5):
        mats = rng.integers(0, p, size=(40, 5, 4))
        ranks = exactlin.batch_rank_mod_p(mats, p)
        for i in range(mats.shape[0]):
            assert ranks[i] == exactlin.rank_mod_p(mats[i], p)


def test_batch_solvable_matches_brute_force():
    rng = np.random.default_rng(7)
    for p in (2, 3):
        mats = rng.integers(0, p, size=(30, 4, 3))
        rhs = rng.integers(0, p, size=(30, 4))
        got = exactlin.batch_solvable_mod_p(mats, rhs, p)
        for i in range(30):
            brute = False
            for x in itertools.product(range(p), repeat=3):
                if ((mats[i] @ np.array(x)) % p == rhs[i] % p).all():
                    brute = True
                    break
            assert got[i] == brute
