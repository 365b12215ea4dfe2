"""Convolution algebras of finite groupoids with a discrete twist.

A Context bundles groupoid + ring + cocycle and precomputes the factorization
table of the composition: for every product arrow c the list of pairs (a, b)
with a.b = c, together with omega(a, b).  Convolution is a single scatter-add
over that table.  Prime-field contexts also expose a batched numpy path used
by the normalizer scan.

Elements are sparse dicts {arrow: coefficient} with zeros purged, so
structural equality is mathematical equality.
"""

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from cartan_lab import coeff as coeffmod
from cartan_lab import groupoid as gpd
from cartan_lab import twist as twistmod
from cartan_lab.coeff import Ring, parse_ring
from cartan_lab.errors import InputError, InternalCheckError

CLOSURE_ROUND_SLACK = 1


class Context:
    """A groupoid, a coefficient ring, and a validated twist."""

    def __init__(self, groupoid: gpd.Groupoid, ring: Ring,
                 cocycle: twistmod.Cocycle | None = None, label: str | None = None):
        self.groupoid = groupoid
        self.ring = ring
        self.cocycle = cocycle or twistmod.trivial_cocycle(groupoid, ring)
        if self.cocycle.groupoid is not groupoid:
            raise InputError("cocycle built on a different groupoid")
        ok, msg = self.cocycle.validate()
        if not ok:
            raise InputError(f"invalid cocycle: {msg}")
        self.label = label or f"{groupoid.label}/{ring}"
        self.dim = groupoid.num_arrows
        self.n_units = groupoid.n_units
        pairs = groupoid.composable_pairs()
        self._fact = pairs
        self._omega = [self.cocycle.omega(a, b) for a, b in pairs]
        self.is_fp = ring.kind == coeffmod.PRIME_FIELD
        if self.is_fp:
            self.p = ring.modulus
            self._A = np.array([a for a, b in pairs], dtype=np.int64)
            self._B = np.array([b for a, b in pairs], dtype=np.int64)
            self._C = np.array([int(groupoid.comp[a, b]) for a, b in pairs],
                               dtype=np.int64)
            self._W = np.array([int(w) for w in self._omega], dtype=np.int64)

    # -- element constructors ------------------------------------------------

    def element(self, coeffs: dict) -> "El":
        return El(self, coeffs)

    def zero(self) -> "El":
        return El(self, {})

    def delta(self, arrow: int, value=None) -> "El":
        v = self.ring.one if value is None else value
        return El(self, {int(arrow): v})

    def indicator(self, arrows, value=None) -> "El":
        v = self.ring.one if value is None else value
        return El(self, {int(a): v for a in arrows})

    def unit_deltas(self):
        return [self.delta(u) for u in self.groupoid.units()]

    def one(self) -> "El":
        return self.indicator(self.groupoid.units())

    def basis_deltas(self):
        return [self.delta(a) for a in range(self.dim)]

    # -- numpy bridge (prime fields) -----------------------------------------

    def vec(self, el: "El") -> np.ndarray:
        v = np.zeros(self.dim, dtype=np.int64)
        for a, c in el.coeffs.items():
            v[a] = int(c)
        return v

    def el_of_vec(self, v) -> "El":
        return El(self, {int(a): int(v[a]) % self.p
                         for a in range(self.dim) if v[a] % self.p})

    def conv_vec(self, f: np.ndarray, g: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.int64)
        np.add.at(out, self._C, self._W * f[self._A] * g[self._B])
        return out % self.p

    def conv_batch(self, F: np.ndarray, G: np.ndarray) -> np.ndarray:
        """Row-wise convolution of two (B, dim) batches."""
        nb = F.shape[0]
        out = np.zeros((nb, self.dim), dtype=np.int64)
        prod = (self._W[None, :] * F[:, self._A] % self.p) * G[:, self._B] % self.p
        np.add.at(out, (np.arange(nb)[:, None], self._C[None, :]), prod)
        return out % self.p

    def conv_batch_single(self, F: np.ndarray, g: np.ndarray) -> np.ndarray:
        nb = F.shape[0]
        out = np.zeros((nb, self.dim), dtype=np.int64)
        prod = F[:, self._A] * (self._W * g[self._B])[None, :] % self.p
        np.add.at(out, (np.arange(nb)[:, None], self._C[None, :]), prod)
        return out % self.p

    def conv_single_batch(self, f: np.ndarray, G: np.ndarray) -> np.ndarray:
        nb = G.shape[0]
        out = np.zeros((nb, self.dim), dtype=np.int64)
        prod = (self._W * f[self._A])[None, :] * G[:, self._B] % self.p
        np.add.at(out, (np.arange(nb)[:, None], self._C[None, :]), prod)
        return out % self.p

    # -- core operations -----------------------------------------------------

    def convolve(self, f: "El", g: "El") -> "El":
        r = self.ring
        out = {}
        comp = self.groupoid.comp
        for a, fa in f.coeffs.items():
            row = comp[a]
            for b, gb in g.coeffs.items():
                c = row[b]
                if c < 0:
                    continue
                c = int(c)
                w = self.cocycle.omega(a, b)
                out[c] = r.add(out.get(c, r.zero), r.mul(w, r.mul(fa, gb)))
        return El(self, out)

    def delta_expectation(self, f: "El") -> "El":
        return El(self, {a: v for a, v in f.coeffs.items()
                         if self.groupoid.is_unit(a)})

    def off_unit_part(self, f: "El") -> "El":
        return El(self, {a: v for a, v in f.coeffs.items()
                         if not self.groupoid.is_unit(a)})

    def local_unit(self, f: "El") -> "El":
        g = self.groupoid
        touched = set()
        for a in f.coeffs:
            touched.add(int(g.src[a]))
            touched.add(int(g.tgt[a]))
        return self.indicator(sorted(touched))

    def random_element(self, rng, support=None) -> "El":
        arrows = range(self.dim) if support is None else support
        r = self.ring
        out = {}
        for a in arrows:
            if r.kind == coeffmod.RATIONALS:
                v = Fraction(rng.randint(-6, 6), rng.randint(1, 4))
            else:
                v = r.normalize(rng.randrange(r.modulus))
            if v != r.zero:
                out[int(a)] = v
        return El(self, out)

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        out = {"groupoid": self.groupoid.to_json(), "ring": str(self.ring)}
        cj = self.cocycle.to_json()
        out["cocycle"] = cj if cj else None
        if self.label:
            out["label"] = self.label
        return out

    def canonical_hash(self) -> str:
        g = self.groupoid
        payload = {
            "units": g.n_units,
            "src": [int(x) for x in g.src],
            "tgt": [int(x) for x in g.tgt],
            "comp": [[int(a), int(b), int(g.comp[a, b])] for a, b in self._fact],
            "inv": [int(x) for x in g.inv],
            "ring": str(self.ring),
            "cocycle": self.cocycle.to_json(),
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def context_from_json(data: dict) -> Context:
    try:
        g = gpd.from_json(data["groupoid"])
        ring = parse_ring(data["ring"])
    except KeyError as exc:
        raise InputError(f"context JSON missing {exc}") from exc
    entries = data.get("cocycle")
    coc = twistmod.cocycle_from_json(g, ring, entries) if entries else None
    return Context(g, ring, coc, label=data.get("label"))


@dataclass(frozen=True)
class El:
    """Sparse algebra element; coefficients are canonical and zero-purged."""

    ctx: Context
    coeffs: dict

    def __post_init__(self):
        r = self.ctx.ring
        clean = {}
        for a, v in self.coeffs.items():
            v = r.normalize(v)
            if v != r.zero:
                clean[int(a)] = v
        object.__setattr__(self, "coeffs", clean)

    def value(self, arrow: int):
        return self.coeffs.get(int(arrow), self.ctx.ring.zero)

    def support(self) -> frozenset:
        return frozenset(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "El") -> "El":
        r = self.ctx.ring
        out = dict(self.coeffs)
        for a, v in other.coeffs.items():
            out[a] = r.add(out.get(a, r.zero), v)
        return El(self.ctx, out)

    def __sub__(self, other: "El") -> "El":
        r = self.ctx.ring
        out = dict(self.coeffs)
        for a, v in other.coeffs.items():
            out[a] = r.sub(out.get(a, r.zero), v)
        return El(self.ctx, out)

    def scale(self, lam) -> "El":
        r = self.ctx.ring
        return El(self.ctx, {a: r.mul(lam, v) for a, v in self.coeffs.items()})

    def __mul__(self, other: "El") -> "El":
        return self.ctx.convolve(self, other)

    def __eq__(self, other) -> bool:
        return isinstance(other, El) and self.ctx is other.ctx and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(sorted(self.coeffs.items())))

    def key(self):
        """Canonical sortable form."""
        return tuple(sorted((a, str(v)) for a, v in self.coeffs.items()))

    def to_json(self) -> dict:
        r = self.ctx.ring
        return {str(a): r.coeff_str(v) for a, v in sorted(self.coeffs.items())}

    def __repr__(self):
        if not self.coeffs:
            return "0"
        return " + ".join(f"{v}@{a}" for a, v in sorted(self.coeffs.items()))


def el_from_json(ctx: Context, data: dict) -> El:
    out = {}
    for k, v in data.items():
        a = int(k)
        if not (0 <= a < ctx.dim):
            raise InputError(f"arrow id {a} out of range")
        out[a] = ctx.ring.coeff_from_str(str(v))
    return El(ctx, out)


class Basis:
    """Echelon basis of a subspace, ordered by leading arrow id.

    Field coefficients only.  Each vector has leading coefficient 1 at its
    pivot arrow, and pivot arrows are strictly increasing.
    """

    def __init__(self, ctx: Context):
        if not ctx.ring.is_field:
            raise InputError("span computations need a field")
        self.ctx = ctx
        self.rows: list[El] = []
        self.pivots: list[int] = []

    @property
    def dim(self) -> int:
        return len(self.rows)

    def reduce(self, el: El) -> El:
        r = self.ctx.ring
        cur = el
        for piv, row in zip(self.pivots, self.rows):
            c = cur.value(piv)
            if c != r.zero:
                cur = cur - row.scale(c)
        return cur

    def contains(self, el: El) -> bool:
        return self.reduce(el).is_zero()

    def extend(self, el: El) -> bool:
        """Add el to the span; returns True when the dimension grew."""
        r = self.ctx.ring
        res = self.reduce(el)
        if res.is_zero():
            return False
        piv = min(res.coeffs)
        lead = res.value(piv)
        res = res.scale(r.try_inv(lead))
        # re-reduce existing rows against the new one to keep RREF
        idx = 0
        while idx < len(self.pivots) and self.pivots[idx] < piv:
            idx += 1
        self.pivots.insert(idx, piv)
        self.rows.insert(idx, res)
        for i in range(len(self.rows)):
            if i == idx:
                continue
            c = self.rows[i].value(piv)
            if c != r.zero:
                self.rows[i] = self.rows[i] - res.scale(c)
        return True

    def elements(self):
        """Every element of the span (finite field only)."""
        r = self.ctx.ring
        if not r.is_finite:
            raise InputError("cannot enumerate a span over Q")
        vals = r.elements()
        out = [self.ctx.zero()]
        for row in self.rows:
            nxt = []
            for base in out:
                for lam in vals:
                    nxt.append(base + row.scale(lam))
            out = nxt
        return out

    def copy(self) -> "Basis":
        b = Basis(self.ctx)
        b.rows = list(self.rows)
        b.pivots = list(self.pivots)
        return b

    def key(self):
        return tuple(row.key() for row in self.rows)

    def to_json(self):
        return [row.to_json() for row in self.rows]


def span_closure(ctx: Context, elements) -> Basis:
    b = Basis(ctx)
    for el in elements:
        b.extend(el)
    return b


def intersect_spans(b1: Basis, b2: Basis) -> Basis:
    """Intersection of two spans via rank counting over the joint span."""
    ctx = b1.ctx
    joint = span_closure(ctx, list(b1.rows) + list(b2.rows))
    # solve: x in span(b1) with x in span(b2); use the standard kernel trick
    # over the concatenated coefficient matrix
    r = ctx.ring
    rows1, rows2 = b1.rows, b2.rows
    n1, n2 = len(rows1), len(rows2)
    if n1 == 0 or n2 == 0:
        return Basis(ctx)
    arrows = sorted({a for row in rows1 + rows2 for a in row.coeffs})
    aidx = {a: i for i, a in enumerate(arrows)}
    if ctx.is_fp:
        from cartan_lab import exactlin
        m = np.zeros((len(arrows), n1 + n2), dtype=np.int64)
        for j, row in enumerate(rows1):
            for a, v in row.coeffs.items():
                m[aidx[a], j] = int(v)
        for j, row in enumerate(rows2):
            for a, v in row.coeffs.items():
                m[aidx[a], n1 + j] = (-int(v)) % ctx.p
        null = exactlin.nullspace_mod_p(m, ctx.p)
        out = Basis(ctx)
        for vec in null:
            el = ctx.zero()
            for j in range(n1):
                if vec[j]:
                    el = el + rows1[j].scale(int(vec[j]))
            out.extend(el)
        return out
    # rationals: same trick with Fractions
    from cartan_lab import exactlin
    m = [[Fraction(0)] * (n1 + n2) for _ in arrows]
    for j, row in enumerate(rows1):
        for a, v in row.coeffs.items():
            m[aidx[a]][j] = Fraction(v)
    for j, row in enumerate(rows2):
        for a, v in row.coeffs.items():
            m[aidx[a]][n1 + j] = -Fraction(v)
    red, pivots = exactlin.rref_frac(m)
    free = [c for c in range(n1 + n2) if c not in pivots]
    out = Basis(ctx)
    for fc in free:
        colvec = [Fraction(0)] * (n1 + n2)
        colvec[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            colvec[pc] = -red[i][fc]
        el = ctx.zero()
        for j in range(n1):
            if colvec[j] != 0:
                el = el + rows1[j].scale(colvec[j])
        out.extend(el)
    return out


def algebra_closure(ctx: Context, generators, include_units: bool = True) -> Basis:
    """Smallest subalgebra span containing the generators (and the unit
    indicators unless told otherwise).  Rounds are capped at dim(A) plus slack;
    exceeding the cap means a bug, not bad input."""
    seed = list(generators)
    if include_units:
        seed = ctx.unit_deltas() + seed
    basis = span_closure(ctx, seed)
    cap = ctx.dim + CLOSURE_ROUND_SLACK
    rounds = 0
    changed = True
    while changed:
        changed = False
        rounds += 1
        if rounds > cap:
            raise InternalCheckError("algebra closure failed to stabilize")
        snapshot = list(basis.rows)
        for f in snapshot:
            for g in snapshot:
                if basis.extend(ctx.convolve(f, g)):
                    changed = True
    return basis


# -- bisection decomposition -------------------------------------------------

def is_bisection(g: gpd.Groupoid, arrows) -> bool:
    arrows = list(arrows)
    tg = [int(g.tgt[a]) for a in arrows]
    sr = [int(g.src[a]) for a in arrows]
    return len(set(tg)) == len(arrows) and len(set(sr)) == len(arrows)


def decompose_bisections(f: El, refined: bool = False):
    """Write f as a sum of constant multiples of bisection indicators.

    Plain mode greedily packs equal-coefficient arrows into bisections.
    Refined mode additionally keeps every non-unit piece's target set disjoint
    from its source set (which needs a principal groupoid) and keeps unit
    arrows in unit-only pieces.  Deterministic: arrows are scanned ascending.
    Returns a list of (value, arrows_frozenset, kind) with kind in
    {"unit", "offunit", "mixed"}.
    """
    ctx = f.ctx
    g = ctx.groupoid
    if refined and not g.is_principal():
        raise InputError("refined decomposition needs a principal groupoid")
    by_value: dict = {}
    for a in sorted(f.coeffs):
        by_value.setdefault(f.coeffs[a], []).append(a)
    pieces = []
    for value, arrows in sorted(by_value.items(), key=lambda kv: str(kv[0])):
        groups: list[dict] = []
        for a in arrows:
            unit = g.is_unit(a)
            ta, sa = int(g.tgt[a]), int(g.src[a])
            placed = False
            for grp in groups:
                if refined and grp["unit"] != unit:
                    continue
                if ta in grp["tgts"] or sa in grp["srcs"]:
                    continue
                if refined and not unit:
                    if ta in grp["srcs"] or sa in grp["tgts"] or ta == sa:
                        continue
                grp["arrows"].append(a)
                grp["tgts"].add(ta)
                grp["srcs"].add(sa)
                grp["unit"] = grp["unit"] and unit
                placed = True
                break
            if not placed:
                groups.append({"arrows": [a], "tgts": {ta}, "srcs": {sa}, "unit": unit})
        for grp in groups:
            if all(g.is_unit(a) for a in grp["arrows"]):
                kind = "unit"
            elif all(not g.is_unit(a) for a in grp["arrows"]):
                kind = "offunit"
            else:
                kind = "mixed"
            pieces.append((value, frozenset(grp["arrows"]), kind))
    # exact reassembly is part of the contract
    back = ctx.zero()
    for value, arrows, _ in pieces:
        back = back + ctx.indicator(sorted(arrows), value)
    if back != f:
        raise InternalCheckError("bisection decomposition does not reassemble")
    for _, arrows, _ in pieces:
        if not is_bisection(g, arrows):
            raise InternalCheckError("decomposition produced a non-bisection piece")
    return pieces


def restriction_map(ctx: Context, f: El, unit_subset):
    """Restrict to an invariant unit set; returns (sub_context, restricted f)."""
    sub_g, arrow_map = ctx.groupoid.restrict(unit_subset)
    table = {}
    for (a, b), v in ctx.cocycle.table.items():
        if a in arrow_map and b in arrow_map:
            table[(arrow_map[a], arrow_map[b])] = v
    sub_ctx = Context(sub_g, ctx.ring, twistmod.Cocycle(sub_g, ctx.ring, table),
                      label=f"{ctx.label}|restricted")
    out = {arrow_map[a]: v for a, v in f.coeffs.items() if a in arrow_map}
    return sub_ctx, El(sub_ctx, out)
