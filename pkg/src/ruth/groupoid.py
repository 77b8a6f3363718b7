"""
Finite groupoids, their nerves, actions on finite sets, and Haar data.

Objects and arrows carry user-facing ids (strings) but everything internal
uses integer positions in declaration order. A k-string is a tuple of arrow
positions (g_1, ..., g_k) with t(g_i) = s(g_{i-1}); a 0-string is the
one-tuple ``(x,)`` holding an object position. The length is always passed
alongside, so the two never get confused.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import (
    AxiomViolation,
    BadComposite,
    BadInverse,
    BadUnit,
    IndexOutOfRange,
    InvalidAction,
    MissingComposite,
    NonAssociative,
    NotAFunctor,
    SchemaError,
    DanglingReference,
)

__all__ = [
    "FiniteGroupoid",
    "GSpace",
    "GroupoidMorphism",
    "HaarCutoff",
    "validate_groupoid",
    "composable_strings",
    "face",
    "degeneracy",
    "action_groupoid",
    "orbits_and_quotient",
    "haar_cutoff",
    "unit_groupoid",
    "cyclic_group",
    "symmetric_group",
    "group_groupoid",
    "pair_groupoid",
    "disjoint_union",
    "identity_functor",
    "inclusion_of_units",
]


def _raise_all(violations):
    if violations:
        first = violations[0]
        first.violations = list(violations)
        raise first


class FiniteGroupoid:
    """A finite groupoid given extensionally.

    Build one through :func:`validate_groupoid` or the constructors below;
    the raw ``__init__`` trusts its input and ``check()`` runs every axiom.
    """

    def __init__(self, objects, arrows, src, tgt, unit, inv, comp, name=None):
        self.objects = tuple(objects)
        self.arrows = tuple(arrows)
        self.src = tuple(src)
        self.tgt = tuple(tgt)
        self.unit = tuple(unit)
        self.inv = tuple(inv)
        self.comp = dict(comp)
        self.name = name
        self._obj_pos = {o: i for i, o in enumerate(self.objects)}
        self._arr_pos = {a: i for i, a in enumerate(self.arrows)}
        self._strings: dict[int, tuple] = {}
        self._string_index: dict[int, dict] = {}
        self._unit_set = frozenset(self.unit)
        by_t: dict[int, list[int]] = {x: [] for x in range(len(self.objects))}
        by_s: dict[int, list[int]] = {x: [] for x in range(len(self.objects))}
        for g in range(len(self.arrows)):
            by_t[self.tgt[g]].append(g)
            by_s[self.src[g]].append(g)
        self._by_t = {x: tuple(v) for x, v in by_t.items()}
        self._by_s = {x: tuple(v) for x, v in by_s.items()}

    # ids <-> positions ----------------------------------------------------

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @property
    def n_arrows(self) -> int:
        return len(self.arrows)

    def obj(self, oid) -> int:
        try:
            return self._obj_pos[oid]
        except KeyError:
            raise KeyError("unknown object %r" % (oid,)) from None

    def arr(self, aid) -> int:
        try:
            return self._arr_pos[aid]
        except KeyError:
            raise KeyError("unknown arrow %r" % (aid,)) from None

    def string_ids(self, k: int, sigma: tuple) -> list:
        if k == 0:
            return [self.objects[sigma[0]]]
        return [self.arrows[g] for g in sigma]

    def string_from_ids(self, k: int, ids: Sequence) -> tuple:
        if k == 0:
            if len(ids) != 1:
                raise ValueError("a 0-string is a single object id")
            return (self.obj(ids[0]),)
        sigma = tuple(self.arr(a) for a in ids)
        if len(sigma) != k or not self.is_string(k, sigma):
            raise ValueError("not a composable %d-string: %r" % (k, list(ids)))
        return sigma

    # structure ------------------------------------------------------------

    def s(self, g: int) -> int:
        return self.src[g]

    def t(self, g: int) -> int:
        return self.tgt[g]

    def mul(self, g: int, h: int) -> int:
        """The composite gh (first h, then g); requires s(g) = t(h)."""
        try:
            return self.comp[g, h]
        except KeyError:
            raise ValueError("arrows %r, %r are not composable" % (self.arrows[g], self.arrows[h])) from None

    def is_unit(self, g: int) -> bool:
        return g in self._unit_set

    def arrows_into(self, x: int) -> tuple:
        """The target fiber t^{-1}(x)."""
        return self._by_t[x]

    def arrows_out_of(self, x: int) -> tuple:
        return self._by_s[x]

    def hom(self, x: int, y: int) -> list[int]:
        return [g for g in self._by_s[x] if self.tgt[g] == y]

    def is_group(self) -> bool:
        return self.n_objects == 1

    # nerve ----------------------------------------------------------------

    def is_string(self, k: int, sigma: tuple) -> bool:
        if k == 0:
            return len(sigma) == 1 and 0 <= sigma[0] < self.n_objects
        if len(sigma) != k:
            return False
        return all(self.tgt[sigma[i]] == self.src[sigma[i - 1]] for i in range(1, k))

    def strings(self, k: int) -> tuple:
        """All k-strings in lexicographic order of arrow positions."""
        if k < 0:
            raise IndexOutOfRange("negative string length %d" % k)
        got = self._strings.get(k)
        if got is not None:
            return got
        if k == 0:
            out = tuple((x,) for x in range(self.n_objects))
        elif k == 1:
            out = tuple((g,) for g in range(self.n_arrows))
        else:
            out = tuple(sigma + (h,) for sigma in self.strings(k - 1)
                        for h in self._by_t[self.src[sigma[-1]]])
        self._strings[k] = out
        return out

    def string_index(self, k: int) -> dict:
        got = self._string_index.get(k)
        if got is None:
            got = {sigma: i for i, sigma in enumerate(self.strings(k))}
            self._string_index[k] = got
        return got

    def source(self, k: int, sigma: tuple) -> int:
        """s(sigma) = s(g_k); for a 0-string the object itself."""
        return sigma[0] if k == 0 else self.src[sigma[-1]]

    def target(self, k: int, sigma: tuple) -> int:
        """t(sigma) = t(g_1); for a 0-string the object itself."""
        return sigma[0] if k == 0 else self.tgt[sigma[0]]

    def face(self, k: int, i: int, sigma: tuple) -> tuple:
        if k < 1 or not 0 <= i <= k:
            raise IndexOutOfRange("face d_%d on a %d-string" % (i, k))
        if k == 1:
            g = sigma[0]
            return (self.src[g],) if i == 0 else (self.tgt[g],)
        if i == 0:
            return sigma[1:]
        if i == k:
            return sigma[:-1]
        return sigma[:i - 1] + (self.comp[sigma[i - 1], sigma[i]],) + sigma[i + 1:]

    def degeneracy(self, k: int, i: int, sigma: tuple) -> tuple:
        """Insert a unit so that it becomes entry i+1 of the (k+1)-string."""
        if not 0 <= i <= k:
            raise IndexOutOfRange("degeneracy s_%d on a %d-string" % (i, k))
        if k == 0:
            return (self.unit[sigma[0]],)
        if i == 0:
            u = self.unit[self.tgt[sigma[0]]]
        else:
            u = self.unit[self.src[sigma[i - 1]]]
        return sigma[:i] + (u,) + sigma[i:]

    def head(self, k: int, sigma: tuple, i: int) -> tuple:
        """(g_1..g_i); the 0-head is t(sigma)."""
        if i == 0:
            return (self.target(k, sigma),)
        return sigma[:i]

    def tail(self, k: int, sigma: tuple, i: int) -> tuple:
        """(g_{i+1}..g_k), i.e. d_0 applied i times; the 0-tail is s(sigma)."""
        if i == k:
            return (self.source(k, sigma),)
        if i == 0:
            return sigma
        return sigma[i:]

    def is_degenerate(self, k: int, sigma: tuple) -> bool:
        return k > 0 and any(g in self._unit_set for g in sigma)

    def reverse_inverse(self, k: int, sigma: tuple) -> tuple:
        """(g_k^{-1}, ..., g_1^{-1})."""
        if k == 0:
            return sigma
        return tuple(self.inv[g] for g in reversed(sigma))

    # checks ---------------------------------------------------------------

    def check(self) -> list[AxiomViolation]:
        """Every axiom violation, each carrying the offending ids."""
        A, O = self.arrows, self.objects
        out: list[AxiomViolation] = []
        for x in range(self.n_objects):
            u = self.unit[x]
            if self.src[u] != x or self.tgt[u] != x:
                out.append(BadUnit("unit of %r is %r with wrong endpoints" % (O[x], A[u]), (O[x], A[u])))
        for (g, h), gh in self.comp.items():
            if self.src[g] != self.tgt[h]:
                out.append(BadComposite("composite given for non-composable pair (%r, %r)" % (A[g], A[h]), (A[g], A[h])))
            elif self.src[gh] != self.src[h] or self.tgt[gh] != self.tgt[g]:
                out.append(BadComposite("composite of (%r, %r) is %r with wrong endpoints" % (A[g], A[h], A[gh]),
                                        (A[g], A[h], A[gh])))
        for g in range(self.n_arrows):
            for h in self._by_t[self.src[g]]:
                if (g, h) not in self.comp:
                    out.append(MissingComposite("no composite for (%r, %r)" % (A[g], A[h]), (A[g], A[h])))
        if out:
            return out
        for g in range(self.n_arrows):
            if self.comp[self.unit[self.tgt[g]], g] != g or self.comp[g, self.unit[self.src[g]]] != g:
                out.append(BadUnit("unit law fails at %r" % (A[g],), (A[g],)))
            gi = self.inv[g]
            if (self.src[gi], self.tgt[gi]) != (self.tgt[g], self.src[g]) \
                    or self.comp[g, gi] != self.unit[self.tgt[g]] \
                    or self.comp[gi, g] != self.unit[self.src[g]]:
                out.append(BadInverse("%r is not inverse to %r" % (A[gi], A[g]), (A[g], A[gi])))
        for f, g, h in self.strings(3):
            if self.comp[self.comp[f, g], h] != self.comp[f, self.comp[g, h]]:
                out.append(NonAssociative("(fg)h != f(gh) for (%r, %r, %r)" % (A[f], A[g], A[h]), (A[f], A[g], A[h])))
        return out

    def __repr__(self):
        label = self.name or "FiniteGroupoid"
        return "<%s: %d objects, %d arrows>" % (label, self.n_objects, self.n_arrows)

    def __eq__(self, other):
        if not isinstance(other, FiniteGroupoid):
            return NotImplemented
        return (self.objects, self.arrows, self.src, self.tgt, self.unit, self.inv, self.comp) == \
            (other.objects, other.arrows, other.src, other.tgt, other.unit, other.inv, other.comp)

    def __hash__(self):
        return hash((self.objects, self.arrows))

    # raw description ------------------------------------------------------

    def to_raw(self) -> dict:
        A, O = self.arrows, self.objects
        return {
            "objects": list(O),
            "arrows": [{"id": A[g], "src": O[self.src[g]], "tgt": O[self.tgt[g]]} for g in range(self.n_arrows)],
            "units": {O[x]: A[self.unit[x]] for x in range(self.n_objects)},
            "inverses": {A[g]: A[self.inv[g]] for g in range(self.n_arrows)},
            "comp": [[A[g], A[h], A[gh]] for (g, h), gh in sorted(self.comp.items())],
        }


def validate_groupoid(raw: Mapping, path: str = "$.groupoid") -> FiniteGroupoid:
    """Build a FiniteGroupoid from its raw description, checking every axiom.

    Schema problems raise SchemaError/DanglingReference; axiom failures raise
    the class of the first violation with ``.violations`` listing all of them.
    """
    try:
        objects = list(raw["objects"])
        arrows = list(raw["arrows"])
        units = raw["units"]
        inverses = raw["inverses"]
        comp = raw["comp"]
    except (KeyError, TypeError) as e:
        raise SchemaError("missing field %s" % e, path) from None
    if len(set(objects)) != len(objects):
        raise SchemaError("duplicate object ids", path + ".objects")
    opos = {o: i for i, o in enumerate(objects)}
    ids, src, tgt = [], [], []
    for j, a in enumerate(arrows):
        p = "%s.arrows[%d]" % (path, j)
        if not isinstance(a, Mapping) or not {"id", "src", "tgt"} <= set(a):
            raise SchemaError("arrow needs id, src, tgt", p)
        for end in ("src", "tgt"):
            if a[end] not in opos:
                raise DanglingReference("unknown object %r" % (a[end],), p + "." + end)
        ids.append(a["id"])
        src.append(opos[a["src"]])
        tgt.append(opos[a["tgt"]])
    if len(set(ids)) != len(ids):
        raise SchemaError("duplicate arrow ids", path + ".arrows")
    apos = {a: i for i, a in enumerate(ids)}

    def arrow(aid, p):
        if aid not in apos:
            raise DanglingReference("unknown arrow %r" % (aid,), p)
        return apos[aid]

    unit = []
    for o in objects:
        if o not in units:
            raise SchemaError("no unit for object %r" % (o,), path + ".units")
        unit.append(arrow(units[o], "%s.units.%s" % (path, o)))
    for o in units:
        if o not in opos:
            raise DanglingReference("unknown object %r" % (o,), path + ".units")
    inv = []
    for a in ids:
        if a not in inverses:
            raise SchemaError("no inverse for arrow %r" % (a,), path + ".inverses")
        inv.append(arrow(inverses[a], "%s.inverses.%s" % (path, a)))
    table = {}
    for j, entry in enumerate(comp):
        p = "%s.comp[%d]" % (path, j)
        if len(entry) != 3:
            raise SchemaError("composition entries are [g, h, gh]", p)
        g, h, gh = (arrow(e, p) for e in entry)
        if (g, h) in table and table[g, h] != gh:
            raise SchemaError("conflicting composites for (%r, %r)" % (entry[0], entry[1]), p)
        table[g, h] = gh
    G = FiniteGroupoid(objects, ids, src, tgt, unit, inv, table, name=raw.get("name"))
    _raise_all(G.check())
    return G


def composable_strings(G: FiniteGroupoid, k: int) -> list:
    return list(G.strings(k))


def face(G: FiniteGroupoid, k: int, i: int, sigma: tuple) -> tuple:
    return G.face(k, i, sigma)


def degeneracy(G: FiniteGroupoid, k: int, i: int, sigma: tuple) -> tuple:
    return G.degeneracy(k, i, sigma)


# ---------------------------------------------------------------------------
# constructors


def _from_ids(objects, arrows, src, tgt, unit, inv, mul, name=None) -> FiniteGroupoid:
    """Assemble from id-level data; ``mul(g, h)`` returns the id of gh."""
    opos = {o: i for i, o in enumerate(objects)}
    apos = {a: i for i, a in enumerate(arrows)}
    s = [opos[src[a]] for a in arrows]
    t = [opos[tgt[a]] for a in arrows]
    comp = {}
    for g in range(len(arrows)):
        for h in range(len(arrows)):
            if s[g] == t[h]:
                comp[g, h] = apos[mul(arrows[g], arrows[h])]
    G = FiniteGroupoid(objects, arrows, s, t, [apos[unit[o]] for o in objects],
                       [apos[inv[a]] for a in arrows], comp, name=name)
    _raise_all(G.check())
    return G


def unit_groupoid(n: int) -> FiniteGroupoid:
    objs = ["x%d" % i for i in range(n)]
    arrs = ["1_" + o for o in objs]
    ends = {a: o for a, o in zip(arrs, objs)}
    return _from_ids(objs, arrs, ends, ends, dict(zip(objs, arrs)), {a: a for a in arrs},
                     lambda g, h: g, name="unit(%d)" % n)


def group_groupoid(elements: Sequence, mul, unit, inverse=None, name=None) -> FiniteGroupoid:
    """One-object groupoid from a group; element ids become arrow ids."""
    elements = list(elements)
    ids = [str(e) for e in elements]
    back = dict(zip(ids, elements))
    fwd = dict(zip(elements, ids))
    if inverse is None:
        inverse = lambda g: next(h for h in elements if mul(g, h) == unit)
    ends = {a: "*" for a in ids}
    return _from_ids(["*"], ids, ends, ends, {"*": fwd[unit]},
                     {a: fwd[inverse(back[a])] for a in ids},
                     lambda g, h: fwd[mul(back[g], back[h])], name=name)


def cyclic_group(n: int) -> FiniteGroupoid:
    """Z/n as a one-object groupoid; arrow ``g%d`` is the residue."""
    ids = ["g%d" % i for i in range(n)]
    ends = {a: "*" for a in ids}
    num = lambda a: int(a[1:])
    return _from_ids(["*"], ids, ends, ends, {"*": "g0"}, {a: "g%d" % (-num(a) % n) for a in ids},
                     lambda g, h: "g%d" % ((num(g) + num(h)) % n), name="Z/%d" % n)


def symmetric_group(n: int) -> FiniteGroupoid:
    """S_n acting on {0..n-1}; composition (gh)(i) = g(h(i))."""
    perms = sorted(itertools.permutations(range(n)))
    ident = tuple(range(n))
    mul = lambda g, h: tuple(g[h[i]] for i in range(n))
    inv = lambda g: tuple(sorted(range(n), key=lambda i: g[i]))
    fmt = lambda p: "".join(str(i) for i in p)
    G = group_groupoid([fmt(p) for p in perms],
                       lambda a, b: fmt(mul(tuple(map(int, a)), tuple(map(int, b)))),
                       fmt(ident), lambda a: fmt(inv(tuple(map(int, a)))), name="S%d" % n)
    return G


def pair_groupoid(n: int) -> FiniteGroupoid:
    """Objects 0..n-1 with exactly one arrow ``i<j`` from j to i."""
    objs = [str(i) for i in range(n)]
    arrs = ["%d<%d" % (i, j) for i in range(n) for j in range(n)]
    src = {a: a.split("<")[1] for a in arrs}
    tgt = {a: a.split("<")[0] for a in arrs}
    return _from_ids(objs, arrs, src, tgt, {o: "%s<%s" % (o, o) for o in objs},
                     {a: "%s<%s" % (src[a], tgt[a]) for a in arrs},
                     lambda g, h: "%s<%s" % (tgt[g], src[h]), name="pair(%d)" % n)


def disjoint_union(*Gs: FiniteGroupoid) -> FiniteGroupoid:
    """Ids are prefixed by the summand index, ``"0:x"``, ``"1:g"``, ..."""
    objects, arrows, src, tgt, unit, inv, comp = [], [], [], [], [], [], {}
    for n, G in enumerate(Gs):
        oo, ao = len(objects), len(arrows)
        objects += ["%d:%s" % (n, o) for o in G.objects]
        arrows += ["%d:%s" % (n, a) for a in G.arrows]
        src += [oo + x for x in G.src]
        tgt += [oo + x for x in G.tgt]
        unit += [ao + u for u in G.unit]
        inv += [ao + g for g in G.inv]
        for (g, h), gh in G.comp.items():
            comp[ao + g, ao + h] = ao + gh
    H = FiniteGroupoid(objects, arrows, src, tgt, unit, inv, comp,
                       name=" + ".join(G.name or "G" for G in Gs))
    _raise_all(H.check())
    return H


# ---------------------------------------------------------------------------
# functors


class GroupoidMorphism:
    """A functor given by its object and arrow maps (on positions)."""

    def __init__(self, source: FiniteGroupoid, target: FiniteGroupoid,
                 obj_map: Sequence[int], arrow_map: Sequence[int], check=True):
        self.source = source
        self.target = target
        self.obj_map = tuple(obj_map)
        self.arrow_map = tuple(arrow_map)
        if check:
            _raise_all(self.check())

    @classmethod
    def from_ids(cls, source, target, obj_map: Mapping, arrow_map: Mapping) -> "GroupoidMorphism":
        om = [target.obj(obj_map[o]) for o in source.objects]
        am = [target.arr(arrow_map[a]) for a in source.arrows]
        return cls(source, target, om, am)

    def check(self) -> list:
        H, G = self.source, self.target
        out = []
        if len(self.obj_map) != H.n_objects or len(self.arrow_map) != H.n_arrows:
            return [NotAFunctor("object/arrow maps have the wrong size")]
        f, F = self.obj_map, self.arrow_map
        for h in range(H.n_arrows):
            if G.src[F[h]] != f[H.src[h]] or G.tgt[F[h]] != f[H.tgt[h]]:
                out.append(NotAFunctor("arrow %r is not sent over its endpoints" % (H.arrows[h],), (H.arrows[h],)))
        for x in range(H.n_objects):
            if F[H.unit[x]] != G.unit[f[x]]:
                out.append(NotAFunctor("unit of %r is not preserved" % (H.objects[x],), (H.objects[x],)))
        if out:
            return out
        for (g, h), gh in H.comp.items():
            if G.comp[F[g], F[h]] != F[gh]:
                out.append(NotAFunctor("composite (%r, %r) is not preserved" % (H.arrows[g], H.arrows[h]),
                                       (H.arrows[g], H.arrows[h])))
        return out

    def on_string(self, k: int, sigma: tuple) -> tuple:
        if k == 0:
            return (self.obj_map[sigma[0]],)
        return tuple(self.arrow_map[g] for g in sigma)

    def __matmul__(self, other: "GroupoidMorphism") -> "GroupoidMorphism":
        """Composite self after other."""
        if other.target is not self.source and other.target != self.source:
            raise NotAFunctor("functors are not composable")
        return GroupoidMorphism(other.source, self.target,
                                [self.obj_map[x] for x in other.obj_map],
                                [self.arrow_map[g] for g in other.arrow_map])


def identity_functor(G: FiniteGroupoid) -> GroupoidMorphism:
    return GroupoidMorphism(G, G, range(G.n_objects), range(G.n_arrows))


def inclusion_of_units(G: FiniteGroupoid) -> GroupoidMorphism:
    """The unit groupoid on G's objects, included in G."""
    U = unit_groupoid(G.n_objects)
    return GroupoidMorphism(U, G, range(G.n_objects), [G.unit[x] for x in range(G.n_objects)])


# ---------------------------------------------------------------------------
# actions


class GSpace:
    """A finite set with a left G-action along the moment map ``nu``.

    ``act[g, p]`` is defined exactly when s(g) = nu(p). Points are ids; use
    positions via ``pos``.
    """

    def __init__(self, G: FiniteGroupoid, points: Sequence, moment: Sequence[int],
                 act: Mapping[tuple, int], check=True):
        self.G = G
        self.points = tuple(points)
        self.moment = tuple(moment)
        self.act = dict(act)
        self.pos = {p: i for i, p in enumerate(self.points)}
        if check:
            _raise_all(self.check())

    @classmethod
    def from_ids(cls, G, points, moment: Mapping, act: Iterable) -> "GSpace":
        pos = {p: i for i, p in enumerate(points)}
        mom = [G.obj(moment[p]) for p in points]
        table = {}
        for g, p, q in act:
            table[G.arr(g), pos[p]] = pos[q]
        return cls(G, points, mom, table)

    def __len__(self):
        return len(self.points)

    def check(self) -> list:
        G, P = self.G, self.points
        out = []
        for p in range(len(P)):
            for g in G.arrows_out_of(self.moment[p]):
                if (g, p) not in self.act:
                    out.append(InvalidAction("g.p undefined for (%r, %r)" % (G.arrows[g], P[p]), (G.arrows[g], P[p])))
        for (g, p), q in self.act.items():
            if G.src[g] != self.moment[p]:
                out.append(InvalidAction("action defined off the fiber product at (%r, %r)" % (G.arrows[g], P[p]),
                                         (G.arrows[g], P[p])))
            elif self.moment[q] != G.tgt[g]:
                out.append(InvalidAction("moment map not equivariant at (%r, %r)" % (G.arrows[g], P[p]),
                                         (G.arrows[g], P[p])))
        if out:
            return out
        for p in range(len(P)):
            if self.act[G.unit[self.moment[p]], p] != p:
                out.append(InvalidAction("unit does not act trivially on %r" % (P[p],), (P[p],)))
            for h in G.arrows_out_of(self.moment[p]):
                hp = self.act[h, p]
                for g in G.arrows_out_of(G.tgt[h]):
                    if self.act[G.comp[g, h], p] != self.act[g, hp]:
                        out.append(InvalidAction("(gh).p != g.(h.p) at (%r, %r, %r)" % (G.arrows[g], G.arrows[h], P[p]),
                                                 (G.arrows[g], G.arrows[h], P[p])))
        return out

    def fiber_product(self):
        """G x_M P as (g, p) pairs with s(g) = nu(p), in lexicographic order."""
        return [(g, p) for g in range(self.G.n_arrows) for p in range(len(self.points))
                if self.G.src[g] == self.moment[p]]


def action_groupoid(G: FiniteGroupoid, P: GSpace) -> FiniteGroupoid:
    """G ⋉ P: objects P, arrows (g, p) from p to g.p, (g, hp)(h, p) = (gh, p)."""
    if P.G is not G and P.G != G:
        raise InvalidAction("action is over a different groupoid")
    pairs = P.fiber_product()
    idx = {gp: i for i, gp in enumerate(pairs)}
    objects = [str(p) for p in P.points]
    if len(set(objects)) != len(objects):
        objects = ["p%d" % i for i in range(len(P.points))]
    arrows = ["(%s,%s)" % (G.arrows[g], objects[p]) for g, p in pairs]
    src = [p for g, p in pairs]
    tgt = [P.act[g, p] for g, p in pairs]
    unit = [idx[G.unit[P.moment[p]], p] for p in range(len(P.points))]
    inv = [idx[G.inv[g], P.act[g, p]] for g, p in pairs]
    comp = {}
    for a, (g, q) in enumerate(pairs):
        for b in [idx[h, p] for h, p in pairs if P.act[h, p] == q]:
            h, p = pairs[b]
            comp[a, b] = idx[G.comp[g, h], p]
    H = FiniteGroupoid(objects, arrows, src, tgt, unit, inv, comp, name="%s ⋉ P" % (G.name or "G"))
    H.action_pairs = pairs
    _raise_all(H.check())
    return H


def action_projection(G: FiniteGroupoid, P: GSpace, GP: FiniteGroupoid) -> GroupoidMorphism:
    """The functor G ⋉ P -> G, (g, p) |-> g, p |-> nu(p)."""
    return GroupoidMorphism(GP, G, P.moment, [g for g, p in GP.action_pairs])


def orbits_and_quotient(P: GSpace):
    """Return (orbits, projection, is_free).

    ``orbits`` is a list of sorted point-position lists, ordered by their
    smallest point; ``projection[p]`` is the orbit index of p; the action is
    free when (g, p) -> (p, g.p) is a bijection onto P x_B P.
    """
    n = len(P.points)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for (g, p), q in P.act.items():
        ra, rb = find(p), find(q)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = sorted({find(p) for p in range(n)})
    rindex = {r: i for i, r in enumerate(roots)}
    proj = [rindex[find(p)] for p in range(n)]
    orbits = [[p for p in range(n) if proj[p] == i] for i in range(len(roots))]
    image = {}
    injective = True
    for g, p in P.fiber_product():
        key = (p, P.act[g, p])
        if key in image:
            injective = False
        image[key] = g
    fib = {(p, q) for p in range(n) for q in range(n) if proj[p] == proj[q]}
    return orbits, proj, injective and set(image) == fib


# ---------------------------------------------------------------------------
# Haar systems


@dataclass(frozen=True)
class HaarCutoff:
    G: FiniteGroupoid = field(repr=False)
    weights: tuple
    cutoff: tuple

    def normalization_defects(self) -> dict:
        """Objects x where Σ_{g ∈ t^{-1}(x)} c(s(g)) w(g) differs from 1."""
        G = self.G
        out = {}
        for x in range(G.n_objects):
            tot = sum(self.cutoff[G.src[g]] * self.weights[g] for g in G.arrows_into(x))
            if tot != 1:
                out[G.objects[x]] = tot
        return out

    def is_left_invariant(self) -> bool:
        """Left translation by g: x -> y carries t^{-1}(x) bijectively onto
        t^{-1}(y) and preserves the weights."""
        G = self.G
        for g in range(G.n_arrows):
            x = G.src[g]
            image = [G.comp[g, h] for h in G.arrows_into(x)]
            if sorted(image) != sorted(G.arrows_into(G.tgt[g])):
                return False
            if any(self.weights[G.comp[g, h]] != self.weights[h] for h in G.arrows_into(x)):
                return False
        return True


def haar_cutoff(G: FiniteGroupoid) -> HaarCutoff:
    """Counting measure and the orbit-constant cutoff 1/|t^{-1}(x)|."""
    weights = tuple(1 for _ in range(G.n_arrows))
    cutoff = tuple(Fraction(1, len(G.arrows_into(y))) for y in range(G.n_objects))
    return HaarCutoff(G, weights, cutoff)
