"""
Reading and writing workspaces in the JSON interchange format.

A document has the sections

    groupoid    objects, arrows [{id, src, tgt}], units, inverses, comp [[g, h, gh]]
    groupoids   further named groupoids (the main one is called "G")
    reps        name -> {groupoid?, bundle: {amplitude, dims}, R: [block]}
    morphisms   name -> {source, target, Phi: [block]}
    functors    name -> {source, target, objects: {..}, arrows: {..}}
    gspaces     name -> {groupoid?, points, moment: {..}, action: [[g, p, gp]]}
    tasks       [{command, ...flags}]

A block is {k, string: [arrow ids] (or [object id] for k = 0), l, matrix}: the
piece of the k-th component leaving the degree-l fiber at the source of the
string, with rows of rational strings "p/q". Omitted blocks are zero. The
shorthand sections `bundle` + `rep` (and `morphism`) define a representation
named "E" (and a morphism named "Phi").
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

import numpy as np

from .cochains import GradedBundle, Tensor, zeros
from .errors import DanglingReference, SchemaError, TruncationViolation
from .exactla import rational_str, to_rational
from .groupoid import FiniteGroupoid, GroupoidMorphism, GSpace, validate_groupoid
from .rep import RepUpToHomotopy, RuthMorphism

__all__ = ["Workspace", "parse", "load", "dumps", "serialize", "rep_to_raw", "morphism_to_raw", "FORMAT"]

FORMAT = "ruth-workspace/1"


@dataclass
class Workspace:
    groupoids: dict = field(default_factory=dict)
    reps: dict = field(default_factory=dict)
    morphisms: dict = field(default_factory=dict)
    functors: dict = field(default_factory=dict)
    gspaces: dict = field(default_factory=dict)
    tasks: list = field(default_factory=list)

    @property
    def G(self) -> FiniteGroupoid:
        return self.groupoids["G"]

    def rep(self, name=None) -> RepUpToHomotopy:
        return _lookup(self.reps, name, "rep")

    def morphism(self, name=None) -> RuthMorphism:
        return _lookup(self.morphisms, name, "morphism")

    def functor(self, name=None) -> GroupoidMorphism:
        return _lookup(self.functors, name, "functor")

    def gspace(self, name=None) -> GSpace:
        return _lookup(self.gspaces, name, "gspace")


def _lookup(table, name, what):
    if not table:
        raise DanglingReference("the workspace has no %s" % what, "$")
    if name is None:
        return next(iter(table.values()))
    if name not in table:
        raise DanglingReference("unknown %s %r" % (what, name), "$")
    return table[name]


def _need(raw, key, path):
    if not isinstance(raw, Mapping) or key not in raw:
        raise SchemaError("missing field %r" % key, path)
    return raw[key]


def _rational(v, path):
    try:
        if isinstance(v, str):
            return to_rational(Fraction(v.strip()))
        return to_rational(v)
    except (ValueError, TypeError, ZeroDivisionError):
        raise SchemaError("not an exact rational: %r" % (v,), path) from None


def _parse_bundle(G: FiniteGroupoid, raw, path) -> GradedBundle:
    amp = _need(raw, "amplitude", path)
    if not (isinstance(amp, list) and len(amp) == 2 and all(isinstance(a, int) for a in amp) and amp[0] <= amp[1]):
        raise SchemaError("amplitude must be [a, b] with a <= b", path + ".amplitude")
    dims = {}
    for o, per in _need(raw, "dims", path).items():
        if o not in G._obj_pos:
            raise DanglingReference("unknown object %r" % (o,), "%s.dims.%s" % (path, o))
        for l, n in per.items():
            try:
                l_int = int(l)
            except ValueError:
                raise SchemaError("degree must be an integer", "%s.dims.%s.%s" % (path, o, l)) from None
            if not isinstance(n, int) or n < 0:
                raise SchemaError("dimension must be a non-negative integer", "%s.dims.%s.%s" % (path, o, l))
            if n and not amp[0] <= l_int <= amp[1]:
                raise SchemaError("degree %d outside the amplitude" % l_int, "%s.dims.%s.%s" % (path, o, l))
            if n:
                dims[G.obj(o), l_int] = n
    return GradedBundle(G, dims, tuple(amp))


def _parse_blocks(G, src: GradedBundle, tgt: GradedBundle, degree: int, blocks, path, name="R") -> dict:
    comps: dict = {}
    if not isinstance(blocks, list):
        raise SchemaError("expected a list of blocks", path)
    max_k = degree + src.b - tgt.a
    for i, blk in enumerate(blocks):
        bp = "%s[%d]" % (path, i)
        k = _need(blk, "k", bp)
        ids = _need(blk, "string", bp)
        l = _need(blk, "l", bp)
        rows = _need(blk, "matrix", bp)
        if not isinstance(k, int) or k < 0:
            raise SchemaError("k must be a non-negative integer", bp + ".k")
        for a in ids:
            if (k == 0 and a not in G._obj_pos) or (k > 0 and a not in G._arr_pos):
                raise DanglingReference("unknown %s %r" % ("object" if k == 0 else "arrow", a), bp + ".string")
        try:
            sigma = G.string_from_ids(k, ids)
        except ValueError as e:
            raise SchemaError(str(e), bp + ".string") from None
        x, y = G.source(k, sigma), G.target(k, sigma)
        lt = l + degree - k
        M = [[_rational(v, "%s.matrix[%d][%d]" % (bp, r, c)) for c, v in enumerate(row)] for r, row in enumerate(rows)]
        if not any(v for row in M for v in row):
            continue
        if k > max_k:
            raise TruncationViolation("%s: nonzero %s_%d but the target Hom bundle vanishes above k=%d"
                                      % (bp, name, k, max_k))
        shape = (tgt.dim(y, lt), src.dim(x, l))
        if len(M) != shape[0] or any(len(row) != shape[1] for row in M):
            raise SchemaError("block has shape %dx%d, expected %dx%d (fiber degrees %d -> %d)"
                              % (len(M), len(M[0]) if M else 0, shape[0], shape[1], l, lt), bp + ".matrix")
        T = comps.setdefault(k, {}).get(sigma)
        if T is None:
            T = zeros(tgt.total(y), src.total(x))
            comps[k][sigma] = T
        rs, cs = tgt.block(y, lt), src.block(x, l)
        T[rs, cs] = np.array(M, dtype=object)
    return comps


def _parse_gspace(G: FiniteGroupoid, raw, path) -> GSpace:
    points = list(_need(raw, "points", path))
    moment = _need(raw, "moment", path)
    act = _need(raw, "action", path)
    for p in points:
        if p not in moment:
            raise SchemaError("point %r has no moment" % (p,), path + ".moment")
        if moment[p] not in G._obj_pos:
            raise DanglingReference("unknown object %r" % (moment[p],), "%s.moment.%s" % (path, p))
    pset = set(points)
    for i, t in enumerate(act):
        if len(t) != 3:
            raise SchemaError("action entries are [arrow, point, image]", "%s.action[%d]" % (path, i))
        g, p, q = t
        if g not in G._arr_pos:
            raise DanglingReference("unknown arrow %r" % (g,), "%s.action[%d]" % (path, i))
        if p not in pset or q not in pset:
            raise DanglingReference("unknown point in %r" % (t,), "%s.action[%d]" % (path, i))
    return GSpace.from_ids(G, points, moment, act)


def parse(doc: Mapping | str) -> Workspace:
    """Validated workspace from a JSON document (text or already decoded)."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as e:
            raise SchemaError("invalid JSON: %s" % e, "$") from None
    if not isinstance(doc, Mapping):
        raise SchemaError("a workspace is a JSON object", "$")
    W = Workspace()
    W.groupoids["G"] = validate_groupoid(_need(doc, "groupoid", "$"), "$.groupoid")
    for name, raw in (doc.get("groupoids") or {}).items():
        if name == "G":
            raise SchemaError("the name G is reserved for the main groupoid", "$.groupoids.G")
        W.groupoids[name] = validate_groupoid(raw, "$.groupoids.%s" % name)

    def groupoid_of(raw, path):
        gname = raw.get("groupoid", "G") if isinstance(raw, Mapping) else "G"
        if gname not in W.groupoids:
            raise DanglingReference("unknown groupoid %r" % (gname,), path + ".groupoid")
        return W.groupoids[gname]

    reps = dict(doc.get("reps") or {})
    if "bundle" in doc or "rep" in doc:
        if "E" in reps:
            raise SchemaError("rep E defined twice", "$.rep")
        reps = {"E": {"bundle": _need(doc, "bundle", "$"), "R": doc.get("rep", [])}, **reps}
    for name, raw in reps.items():
        path = "$.reps.%s" % name
        G = groupoid_of(raw, path)
        B = _parse_bundle(G, _need(raw, "bundle", path), path + ".bundle")
        comps = _parse_blocks(G, B, B, 1, raw.get("R", []), path + ".R")
        W.reps[name] = RepUpToHomotopy(B, comps, name=name)

    morphs = dict(doc.get("morphisms") or {})
    if "morphism" in doc:
        morphs = {"Phi": doc["morphism"], **morphs}
    for name, raw in morphs.items():
        path = "$.morphisms.%s" % name
        s, t = _need(raw, "source", path), _need(raw, "target", path)
        for key, v in (("source", s), ("target", t)):
            if v not in W.reps:
                raise DanglingReference("unknown rep %r" % (v,), "%s.%s" % (path, key))
        E, F = W.reps[s], W.reps[t]
        if E.G is not F.G:
            raise SchemaError("source and target live over different groupoids", path)
        comps = _parse_blocks(E.G, E.bundle, F.bundle, 0, raw.get("Phi", []), path + ".Phi", name="Phi")
        W.morphisms[name] = RuthMorphism(E, F, comps, name=name)

    for name, raw in (doc.get("functors") or {}).items():
        path = "$.functors.%s" % name
        s, t = _need(raw, "source", path), _need(raw, "target", path)
        for key, v in (("source", s), ("target", t)):
            if v not in W.groupoids:
                raise DanglingReference("unknown groupoid %r" % (v,), "%s.%s" % (path, key))
        H, G = W.groupoids[s], W.groupoids[t]
        om, am = _need(raw, "objects", path), _need(raw, "arrows", path)
        for o in H.objects:
            if o not in om:
                raise SchemaError("object %r is not mapped" % (o,), path + ".objects")
            if om[o] not in G._obj_pos:
                raise DanglingReference("unknown object %r" % (om[o],), "%s.objects.%s" % (path, o))
        for a in H.arrows:
            if a not in am:
                raise SchemaError("arrow %r is not mapped" % (a,), path + ".arrows")
            if am[a] not in G._arr_pos:
                raise DanglingReference("unknown arrow %r" % (am[a],), "%s.arrows.%s" % (path, a))
        W.functors[name] = GroupoidMorphism.from_ids(H, G, om, am)

    for name, raw in (doc.get("gspaces") or {}).items():
        path = "$.gspaces.%s" % name
        W.gspaces[name] = _parse_gspace(groupoid_of(raw, path), raw, path)

    tasks = doc.get("tasks", [])
    if not isinstance(tasks, list):
        raise SchemaError("tasks must be a list", "$.tasks")
    for i, t in enumerate(tasks):
        _need(t, "command", "$.tasks[%d]" % i)
    W.tasks = [dict(t) for t in tasks]
    return W


def load(path) -> Workspace:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse(text)


# ---------------------------------------------------------------------------
# writing


def _blocks_to_raw(T: Tensor) -> list:
    G, src, tgt = T.src.G, T.src, T.tgt
    out = []
    for k in sorted(T.comps):
        order = G.string_index(k)
        for sigma in sorted(T.comps[k], key=order.__getitem__):
            M = T.comps[k][sigma]
            x, y = G.source(k, sigma), G.target(k, sigma)
            for l in range(src.a, src.b + 1):
                lt = l + T.degree - k
                rs, cs = tgt.block(y, lt), src.block(x, l)
                if rs.stop == rs.start or cs.stop == cs.start:
                    continue
                blk = M[rs, cs]
                if not any(v != 0 for v in blk.flat):
                    continue
                out.append({"k": k, "string": G.string_ids(k, sigma), "l": l,
                            "matrix": [[rational_str(v) for v in row] for row in blk.tolist()]})
    return out


def bundle_to_raw(B: GradedBundle) -> dict:
    G = B.G
    dims = {}
    for (x, l), n in sorted(B.dims().items()):
        if n:
            dims.setdefault(G.objects[x], {})[str(l)] = n
    return {"amplitude": [B.a, B.b], "dims": dims}


def rep_to_raw(E: RepUpToHomotopy, groupoid_name: str = "G") -> dict:
    raw = {"bundle": bundle_to_raw(E.bundle), "R": _blocks_to_raw(E.R)}
    if groupoid_name != "G":
        raw = {"groupoid": groupoid_name, **raw}
    return raw


def morphism_to_raw(Phi: RuthMorphism, source: str, target: str) -> dict:
    return {"source": source, "target": target, "Phi": _blocks_to_raw(Phi.Phi)}


def serialize(W: Workspace) -> dict:
    """Canonical document: fixed section order, blocks sorted by (k, string, l)."""
    gname = {id(G): n for n, G in W.groupoids.items()}
    rname = {id(E): n for n, E in W.reps.items()}
    doc: dict[str, Any] = {"format": FORMAT, "groupoid": W.G.to_raw()}
    extra = {n: G.to_raw() for n, G in W.groupoids.items() if n != "G"}
    if extra:
        doc["groupoids"] = extra
    doc["reps"] = {n: rep_to_raw(E, gname[id(E.G)]) for n, E in W.reps.items()}
    if W.morphisms:
        doc["morphisms"] = {n: morphism_to_raw(P, rname[id(P.source)], rname[id(P.target)])
                            for n, P in W.morphisms.items()}
    if W.functors:
        doc["functors"] = {
            n: {"source": gname[id(F.source)], "target": gname[id(F.target)],
                "objects": {F.source.objects[x]: F.target.objects[F.obj_map[x]] for x in range(F.source.n_objects)},
                "arrows": {F.source.arrows[a]: F.target.arrows[F.arrow_map[a]] for a in range(F.source.n_arrows)}}
            for n, F in W.functors.items()}
    if W.gspaces:
        gs = {}
        for n, P in W.gspaces.items():
            G = P.G
            raw = {"points": list(P.points),
                   "moment": {P.points[p]: G.objects[P.moment[p]] for p in range(len(P.points))},
                   "action": [[G.arrows[g], P.points[p], P.points[q]] for (g, p), q in sorted(P.act.items())]}
            if gname[id(G)] != "G":
                raw = {"groupoid": gname[id(G)], **raw}
            gs[n] = raw
        doc["gspaces"] = gs
    if W.tasks:
        doc["tasks"] = [dict(t) for t in W.tasks]
    return doc


def dumps(W: Workspace) -> str:
    return json.dumps(serialize(W), indent=1, ensure_ascii=False)
