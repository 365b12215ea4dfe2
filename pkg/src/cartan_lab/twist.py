"""Discrete twists: normalized 2-cocycles with values in the units of the ring,
the associated total groupoid on R^x x G, and the contravariant-function model.
"""

from dataclasses import dataclass, field

import numpy as np

from cartan_lab.coeff import Ring
from cartan_lab.errors import InputError, InternalCheckError
from cartan_lab.groupoid import Groupoid


@dataclass
class Cocycle:
    groupoid: Groupoid
    ring: Ring
    table: dict = field(default_factory=dict)   # (a, b) -> unit value; missing means 1

    def omega(self, a: int, b: int):
        if not self.groupoid.composable(a, b):
            raise InputError(f"omega asked on non-composable pair ({a},{b})")
        return self.table.get((a, b), self.ring.one)

    def is_trivial(self) -> bool:
        return all(v == self.ring.one for v in self.table.values())

    def validate(self):
        """Normalization and the cocycle identity, exhaustively.
        Returns (True, None) or (False, first-violation message)."""
        g = self.groupoid
        r = self.ring
        for (a, b), v in self.table.items():
            if not g.composable(a, b):
                return False, f"table entry on non-composable pair ({a},{b})"
            if r.try_inv(v) is None:
                return False, f"omega({a},{b}) = {v} is not a unit"
        for a in range(g.num_arrows):
            u, w = int(g.tgt[a]), int(g.src[a])
            if self.omega(u, a) != r.one:
                return False, f"normalization fails: omega(tgt,{a}) != 1"
            if self.omega(a, w) != r.one:
                return False, f"normalization fails: omega({a},src) != 1"
        pairs = g.composable_pairs()
        right_of = {}
        for b, z in pairs:
            right_of.setdefault(b, []).append(z)
        for a, b in pairs:
            ab = int(g.comp[a, b])
            for z in right_of.get(b, []):
                bz = int(g.comp[b, z])
                lhs = r.mul(self.omega(a, b), self.omega(ab, z))
                rhs = r.mul(self.omega(a, bz), self.omega(b, z))
                if lhs != rhs:
                    return False, f"cocycle identity fails on ({a},{b},{z})"
        for a in range(g.num_arrows):
            ia = int(g.inv[a])
            if self.omega(a, ia) != self.omega(ia, a):
                return False, f"omega({a},{a}^-1) != omega({a}^-1,{a})"
        return True, None

    def omega_inv_pair(self, a: int):
        """omega(a, a^-1), which equals omega(a^-1, a)."""
        return self.omega(a, int(self.groupoid.inv[a]))

    def to_json(self):
        return [{"a": a, "b": b, "value": self.ring.coeff_str(v)}
                for (a, b), v in sorted(self.table.items())]


def trivial_cocycle(g: Groupoid, r: Ring) -> Cocycle:
    return Cocycle(g, r, {})


def cocycle_from_json(g: Groupoid, r: Ring, entries) -> Cocycle:
    table = {}
    for rec in entries or []:
        a, b = int(rec["a"]), int(rec["b"])
        v = r.coeff_from_str(str(rec["value"]))
        if v != r.one:
            table[(a, b)] = v
    c = Cocycle(g, r, table)
    ok, msg = c.validate()
    if not ok:
        raise InputError(f"invalid cocycle: {msg}")
    return c


# -- total groupoid ----------------------------------------------------------

def sigma_total(cocycle: Cocycle):
    """The total groupoid on R^x x G for a validated twist.

    Returns (sigma, pair_of, id_of, q) where pair_of maps sigma arrow ids to
    (t, gamma), id_of inverts that, and q projects sigma arrows onto G.
    Asserts that the unit-fiber copies of R^x are central in each isotropy.
    """
    g = cocycle.groupoid
    r = cocycle.ring
    if not r.is_finite:
        raise InputError("total groupoid needs a finite coefficient ring")
    units = r.units()
    ids = {}
    for u in g.units():
        ids[(r.one, u)] = u
    nxt = g.n_units
    for t in units:
        for a in range(g.num_arrows):
            if (t, a) in ids:
                continue
            ids[(t, a)] = nxt
            nxt += 1
    total = nxt
    pair_of = {v: k for k, v in ids.items()}
    src = np.zeros(total, dtype=np.int64)
    tgt = np.zeros(total, dtype=np.int64)
    for (t, a), sid in ids.items():
        src[sid] = int(g.src[a])
        tgt[sid] = int(g.tgt[a])
    comp = -np.ones((total, total), dtype=np.int64)
    for (t, a), sa in ids.items():
        for (t2, b), sb in ids.items():
            c = g.comp[a, b]
            if c >= 0:
                tv = r.mul(r.mul(t, t2), cocycle.omega(a, b))
                comp[sa, sb] = ids[(tv, int(c))]
    inv = np.zeros(total, dtype=np.int64)
    for (t, a), sa in ids.items():
        ti = r.mul(r.try_inv(t), r.try_inv(cocycle.omega_inv_pair(a)))
        inv[sa] = ids[(ti, int(g.inv[a]))]
    sigma = Groupoid(g.n_units, src, tgt, comp, inv,
                     label=f"total({g.label})")
    ok, msg = sigma.validate()
    if not ok:
        raise InternalCheckError(f"total groupoid invalid: {msg}")
    # fibers of the projection all have size |R^x|
    q = np.array([pair_of[sid][1] for sid in range(total)], dtype=np.int64)
    fiber = np.bincount(q, minlength=g.num_arrows)
    if not (fiber == len(units)).all():
        raise InternalCheckError("projection fibers are not uniform")
    # centrality of the unit fibers: (t, u) commutes with every loop at u
    for t in units:
        for (t2, a), sa in ids.items():
            u, w = int(g.tgt[a]), int(g.src[a])
            left = comp[ids[(t, u)], sa]
            right = comp[sa, ids[(t, w)]]
            if left != right:
                raise InternalCheckError("unit fiber is not central")
    return sigma, pair_of, ids, q


# -- contravariant function model --------------------------------------------

def _conv_twisted(cocycle: Cocycle, f: dict, h: dict) -> dict:
    """Local twisted convolution on G over coefficient dicts (independent of
    the main algebra implementation on purpose; this is a cross-check)."""
    g = cocycle.groupoid
    r = cocycle.ring
    out = {}
    for a, fa in f.items():
        for b, hb in h.items():
            c = g.comp[a, b]
            if c < 0:
                continue
            c = int(c)
            out[c] = r.add(out.get(c, r.zero), r.mul(cocycle.omega(a, b), r.mul(fa, hb)))
    return {k: v for k, v in out.items() if v != r.zero}


def contravariant_roundtrip(cocycle: Cocycle, f: dict, h: dict) -> dict:
    """Check the function-model equivalence on a pair of elements.

    Lifts f to F(t, gamma) = t^-1 f(gamma), checks contravariance under the
    scaling action, checks that restriction to t = 1 returns f, and checks
    that the lift intertwines the twisted convolution on G with the plain
    transversal convolution on the total groupoid.  Returns a report dict.
    """
    g = cocycle.groupoid
    r = cocycle.ring
    if not r.is_finite:
        raise InputError("roundtrip check needs a finite coefficient ring")
    units = r.units()

    def lift(fn):
        return {(t, a): r.mul(r.try_inv(t), v)
                for t in units for a, v in fn.items()}

    F, H = lift(f), lift(h)
    contravariant = all(
        F.get((r.mul(t2, t), a), r.zero) == r.mul(r.try_inv(t2), v)
        for (t, a), v in F.items() for t2 in units)
    back = {a: v for (t, a), v in F.items() if t == r.one}
    returns = back == {a: v for a, v in f.items() if v != r.zero}

    conv_g = _conv_twisted(cocycle, f, h)
    lifted_conv = lift(conv_g)

    # transversal convolution on the total groupoid: for gamma = alpha.beta
    # lift alpha at t = 1, then the second factor is forced
    def sigma_conv(F1, F2):
        out = {}
        for t in units:
            for a in range(g.num_arrows):
                for b in range(g.num_arrows):
                    c = g.comp[a, b]
                    if c < 0:
                        continue
                    t2 = r.mul(t, r.try_inv(cocycle.omega(a, b)))
                    term = r.mul(F1.get((r.one, a), r.zero), F2.get((t2, b), r.zero))
                    key = (t, int(c))
                    out[key] = r.add(out.get(key, r.zero), term)
        return {k: v for k, v in out.items() if v != r.zero}

    # the same sum over a different transversal (second factor at t = 1) must agree
    def sigma_conv_shifted(F1, F2):
        out = {}
        for t in units:
            for a in range(g.num_arrows):
                for b in range(g.num_arrows):
                    c = g.comp[a, b]
                    if c < 0:
                        continue
                    t1 = r.mul(t, r.try_inv(cocycle.omega(a, b)))
                    term = r.mul(F1.get((t1, a), r.zero), F2.get((r.one, b), r.zero))
                    key = (t, int(c))
                    out[key] = r.add(out.get(key, r.zero), term)
        return {k: v for k, v in out.items() if v != r.zero}

    sc = sigma_conv(F, H)
    sc2 = sigma_conv_shifted(F, H)
    return {
        "contravariant": contravariant,
        "restriction_returns": returns,
        "intertwines": sc == lifted_conv,
        "transversal_independent": sc == sc2,
    }
