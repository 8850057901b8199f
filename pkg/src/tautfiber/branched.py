"""Pinched branched surfaces, their guts, complexity and product checks.

Pinching keeps one disk of every carried type in each tetrahedron.  The
complement of those disks in a tetrahedron consists of

* a corner region ``c<v>`` between vertex ``v`` and its carried triangle;
* one middle region ``m`` when no quad is carried, or two middle regions
  ``m0`` / ``m1`` on the two sides of the carried quad (``m0`` holds
  vertex 0).

Regions glue across triangles through face regions: one per corner that
carries an arc plus the central region.  Guts components are the resulting
connected unions.  Product slabs between parallel copies of one disk type
are collapsed by the pinch and counted separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import groups
from .errors import PreconditionError, ZeroSurface
from .normal import (
    QUAD_PAIRS,
    NormalCoordinates,
    _arcs_of,
    is_admissible,
    quad_separating,
    quad_side,
    quad_splits,
    surface_topology,
)
from .triangulation import EDGE_INDEX, Triangulation, _UnionFind

REGION_ORDER = ("c0", "c1", "c2", "c3", "m", "m0", "m1")


@dataclass(frozen=True)
class BranchedSurfaceModel:
    num_tetrahedra: int
    support: frozenset[int]
    # transverse sign per carried disk position; None when copies disagree
    orientation: Optional[tuple[tuple[int, int], ...]] = None
    # product slabs between parallel copies, per tetrahedron
    collapsed: tuple[int, ...] = ()

    def has(self, t: int, kind: int) -> bool:
        return 7 * t + kind in self.support

    def quad(self, t: int) -> Optional[int]:
        for k in (4, 5, 6):
            if self.has(t, k):
                return k
        return None

    def kinds(self, t: int) -> list[int]:
        return [k for k in range(7) if self.has(t, k)]

    def sign(self, t: int, kind: int) -> Optional[int]:
        if self.orientation is None:
            return None
        return dict(self.orientation).get(7 * t + kind)

    @property
    def oriented(self) -> bool:
        return self.orientation is not None

    def regions(self, t: int) -> list[str]:
        out = [f"c{v}" for v in range(4) if self.has(t, v)]
        q = self.quad(t)
        out += ["m"] if q is None else ["m0", "m1"]
        return out

    def middle(self, t: int, v: int) -> str:
        """Middle region on the side of vertex ``v``."""
        q = self.quad(t)
        if q is None:
            return "m"
        return f"m{quad_side(q, v)}"

    def vertex_region(self, t: int, v: int) -> str:
        return f"c{v}" if self.has(t, v) else self.middle(t, v)

    def arc_present(self, t: int, f: int, w: int) -> bool:
        return self.has(t, w) or self.has(t, quad_separating(w, f))

    def face_regions(self, t: int, f: int) -> dict:
        """Face region key -> region of tetrahedron ``t`` touching it."""
        out = {}
        for w in range(4):
            if w != f and self.arc_present(t, f, w):
                out[("corner", w)] = f"c{w}" if self.has(t, w) else self.middle(t, w)
        q = self.quad(t)
        # the central part of face f lies beyond every arc
        out[("central",)] = "m" if q is None else f"m{1 - quad_side(q, f)}"
        return out

    def side_region(self, t: int, kind: int, side: int) -> str:
        """Region faced by one side of a pinched disk (side 0 = reference side)."""
        if kind < 4:
            return f"c{kind}" if side == 0 else self.middle(t, kind)
        return f"m{side}"

    def to_json(self) -> dict:
        return {
            "num_tetrahedra": self.num_tetrahedra,
            "support": sorted(self.support),
            "orientation": None if self.orientation is None else [list(p) for p in self.orientation],
            "collapsed": list(self.collapsed),
        }


def pinch(tri: Triangulation, x: Sequence[int], signs: Optional[dict] = None) -> BranchedSurfaceModel:
    """Identify normally parallel disks of ``x``.

    ``signs`` maps disk copies ``(t, kind, i)`` to transverse signs; by
    default the canonical component orientations are used.  The model is
    oriented when all copies of each carried type agree.
    """
    x = NormalCoordinates(x)
    if x.is_zero():
        raise ZeroSurface("cannot pinch the empty surface")
    if not is_admissible(x):
        raise PreconditionError("surface is not admissible")
    if len(x) != 7 * tri.size:
        raise PreconditionError("coordinate length does not match the triangulation")
    if signs is None:
        signs = surface_topology(tri, x).disk_signs
    per_type: dict[int, set] = {}
    for (t, k, _), s in signs.items():
        per_type.setdefault(7 * t + k, set()).add(s)
    orientation = None
    if all(len(v) == 1 for v in per_type.values()):
        orientation = tuple(sorted((pos, next(iter(v))) for pos, v in per_type.items()))
    collapsed = tuple(sum(max(v - 1, 0) for v in x.tet(t)) for t in range(tri.size))
    return BranchedSurfaceModel(tri.size, x.support, orientation, collapsed)


def empty_model(tri: Triangulation) -> BranchedSurfaceModel:
    return BranchedSurfaceModel(tri.size, frozenset(), (), (0,) * tri.size)


# -- local complexity ---------------------------------------------------------


def local_complexity(model: BranchedSurfaceModel, t: int, region: str) -> int:
    """Disk types of tetrahedron ``t`` that are stuck in ``region``.

    An uncarried triangle at ``v`` is stuck in the middle region holding
    ``v``; an uncarried quad can only be compatible when no quad is carried
    and then crosses the single middle region.  Carried types slide into the
    fibered neighbourhood, corner regions trap nothing.
    """
    if region.startswith("c"):
        return 0
    q = model.quad(t)
    tris = [v for v in range(4) if not model.has(t, v) and model.middle(t, v) == region]
    if q is None:
        return len(tris) + 3
    return len(tris)


# -- guts ---------------------------------------------------------------------


@dataclass
class SuturedData:
    r_plus: list[dict]  # each: {"sides": n, "euler": chi}
    r_minus: list[dict]
    cusp_arcs: int
    boundary_arcs: int
    oriented: bool

    @property
    def annuli(self) -> int:
        """Vertical boundary pieces: cusps plus arcs on dM (a count of arcs, not curves)."""
        return self.cusp_arcs + self.boundary_arcs

    def to_json(self) -> dict:
        return {
            "r_plus": self.r_plus,
            "r_minus": self.r_minus,
            "cusp_arcs": self.cusp_arcs,
            "boundary_arcs": self.boundary_arcs,
            "oriented": self.oriented,
        }


@dataclass
class GutsComponent:
    regions: tuple[tuple[int, str], ...]
    complexity: int
    disk_types: frozenset[int]
    sutured: SuturedData
    # spine: loop generators as exit lists, plus the group data used by the checks
    loops: list[list[tuple[int, int]]] = field(repr=False)
    _spine: "_Spine" = field(repr=False)
    # horizontal boundary data shared by the product and relator checks
    _segments: list = field(default_factory=list, repr=False)
    _sides: list = field(default_factory=list, repr=False)
    _pairs: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "regions": [f"{t}:{r}" for t, r in self.regions],
            "complexity": self.complexity,
            "disk_types": sorted(self.disk_types),
            "sutured": self.sutured.to_json(),
            "loops": len(self.loops),
        }


@dataclass
class GutsDecomposition:
    model: BranchedSurfaceModel
    components: list[GutsComponent]
    product_pieces: int
    pieces: int

    @property
    def complexity(self) -> int:
        return max((c.complexity for c in self.components), default=0)

    def to_json(self) -> dict:
        return {
            "complexity": self.complexity,
            "product_pieces": self.product_pieces,
            "pieces": self.pieces,
            "components": [c.to_json() for c in self.components],
        }


def _edge_key_across(tri: Triangulation, t: int, f: int, key: tuple) -> tuple:
    """Face-region key seen from the other side of triangle (t, f)."""
    _, p = tri.gluings[t][f]
    if key[0] == "corner":
        return ("corner", p[key[1]])
    return key


class _Spine:
    """Dual graph of a guts component with edge-segment relators."""

    def __init__(self, tri: Triangulation, model: BranchedSurfaceModel, regions: set):
        self.tri = tri
        self.model = model
        self.regions = regions
        self.nodes = sorted(regions, key=lambda r: (r[0], REGION_ORDER.index(r[1])))
        self.edges: list[tuple] = []  # (u, v, (t, f), key) with (t, f) the representative side
        self.edge_index: dict = {}
        for k in tri.interior_triangles:
            (t, f), (t2, f2) = tri.triangles[k]
            fr = model.face_regions(t, f)
            fr2 = model.face_regions(t2, f2)
            for key, reg in fr.items():
                u = (t, reg)
                if u not in regions:
                    continue
                key2 = _edge_key_across(tri, t, f, key)
                v = (t2, fr2[key2])
                self.edge_index[(t, f, key)] = len(self.edges)
                self.edges.append((u, v, (t, f), key))
        self._tree()

    def _tree(self) -> None:
        adj: dict = {n: [] for n in self.nodes}
        for i, (u, v, _, _) in enumerate(self.edges):
            adj[u].append((i, v, 1))
            adj[v].append((i, u, -1))
        root = self.nodes[0]
        self.parent: dict = {root: None}  # node -> (edge, direction, prev)
        order = [root]
        for n in order:
            for i, m, d in adj[n]:
                if m not in self.parent:
                    self.parent[m] = (i, d, n)
                    order.append(m)
        self.tree_edges = {p[0] for p in self.parent.values() if p is not None}
        self.generators = [i for i in range(len(self.edges)) if i not in self.tree_edges]
        self.gen_number = {e: j + 1 for j, e in enumerate(self.generators)}

    def path_from_root(self, node) -> list[tuple[int, int]]:
        """Signed edge list from the root to ``node``."""
        out = []
        while self.parent[node] is not None:
            i, d, prev = self.parent[node]
            out.append((i, d))
            node = prev
        return list(reversed(out))

    def loop_edges(self, edge: int) -> list[tuple[int, int]]:
        u, v, _, _ = self.edges[edge]
        back = [(i, -d) for i, d in reversed(self.path_from_root(v))]
        return self.path_from_root(u) + [(edge, 1)] + back

    def exits(self, signed_edges: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
        """Dual crossings (tet, face) for a signed edge path."""
        out = []
        for i, d in signed_edges:
            _, _, (t, f), _ = self.edges[i]
            if d > 0:
                out.append((t, f))
            else:
                t2, p = self.tri.gluings[t][f]
                out.append((t2, p[f]))
        return out

    def word(self, signed_edges: Sequence[tuple[int, int]]) -> groups.Word:
        w = []
        for i, d in signed_edges:
            g = self.gen_number.get(i)
            if g is not None:
                w.append(g * d)
        return groups.free_reduce(w)

    def closed_walk_word(self, signed_edges: Sequence[tuple[int, int]]) -> groups.Word:
        """Word of a closed walk starting anywhere, conjugated to the root."""
        if not signed_edges:
            return ()
        i, d = signed_edges[0]
        u, v, _, _ = self.edges[i]
        start = u if d > 0 else v
        pre = self.path_from_root(start)
        back = [(j, -e) for j, e in reversed(pre)]
        return self.word(pre + list(signed_edges) + back)

    def crossing(self, t: int, f: int, key: tuple) -> tuple[int, int]:
        """Signed edge for leaving tet t through face f inside face region ``key``."""
        k = self.tri.triangle_of(t, f)
        rep = self.tri.triangles[k][0]
        if rep == (t, f):
            return self.edge_index[(t, f, key)], 1
        key2 = _edge_key_across(self.tri, t, f, key)
        return self.edge_index[(rep[0], rep[1], key2)], -1


def _edge_segments(tri: Triangulation, model: BranchedSurfaceModel, e: int):
    """For an interior edge, the regions and face regions met by each segment.

    Returns a list over segments; each entry lists (t, region, exit face,
    face-region key) along the edge walk.
    """
    walk = tri.edge_walk(e)
    n = len(walk)
    uf = _UnionFind()
    nodes = []  # per state: ordered disk kinds on edge a -> b
    for i, (t, (a, b, c, d)) in enumerate(walk):
        seq = []
        if model.has(t, a):
            seq.append(a)
        q = model.quad(t)
        if q is not None and quad_splits(q, a, b):
            seq.append(q)
        if model.has(t, b):
            seq.append(b)
        nodes.append(seq)
        for k in seq:
            uf.add((i, k))
        if q is not None and quad_splits(q, a, b):
            for k in seq:
                uf.union((i, seq[0]), (i, k))

    def corner_kinds(t: int, face: int, w: int) -> list[int]:
        out = []
        if model.has(t, w):
            out.append(w)
        qk = quad_separating(w, face)
        if model.has(t, qk):
            out.append(qk)
        return out

    for i, (t, (a, b, c, d)) in enumerate(walk):
        j = (i + 1) % n
        t2, (a2, b2, c2, d2) = walk[j]
        for w, w2 in ((a, a2), (b, b2)):
            here = [(i, k) for k in corner_kinds(t, d, w)]
            there = [(j, k) for k in corner_kinds(t2, c2, w2)]
            group = here + there
            for x in group[1:]:
                uf.union(group[0], x)
    # global order of point classes along the edge, read from state 0
    order: list = []
    for k in nodes[0]:
        r = uf.find((0, k))
        if not order or order[-1] != r:
            order.append(r)
    rank = {r: i for i, r in enumerate(order)}
    m = len(order)
    segments = []
    for s in range(m + 1):
        entry = []
        for i, (t, (a, b, c, d)) in enumerate(walk):
            before = [k for k in nodes[i] if rank[uf.find((i, k))] < s]
            if not before:
                region = model.vertex_region(t, a)
            else:
                last = before[-1]
                if last == a:
                    region = model.middle(t, a)
                elif last == b:
                    region = f"c{b}"
                else:
                    region = model.middle(t, b)
            # which face region of the exit face holds the segment
            ca = corner_kinds(t, d, a)
            cb = corner_kinds(t, d, b)
            if ca and s <= rank[uf.find((i, ca[0]))]:
                key = ("corner", a)
            elif cb and s > rank[uf.find((i, cb[0]))]:
                key = ("corner", b)
            else:
                key = ("central",)
            if model.face_regions(t, d)[key] != region:
                raise AssertionError("edge segment and face region disagree")
            entry.append((t, region, d, key))
        segments.append(entry)
    return segments


def _horizontal(tri: Triangulation, model: BranchedSurfaceModel):
    """Disk sides, their arc gluings and corner identifications.

    A side is ``(t, kind, side)``; side 0 faces the reference side.
    Returns (sides, glued, corner_uf, edges) where ``glued`` maps
    (side, face, corner) to the glued partner side and ``edges`` lists the
    glued pairs with the spine crossing they correspond to.
    """
    sides = [(t, k, s) for t in range(tri.size) for k in model.kinds(t) for s in (0, 1)]
    glued: dict = {}
    pairs = []
    for kk in tri.interior_triangles:
        (t, f), (t2, f2) = tri.triangles[kk]
        _, p = tri.gluings[t][f]
        for w in range(4):
            if w == f or not model.arc_present(t, f, w):
                continue
            w2 = p[w]
            for inner in (True, False):
                a = _arc_side(model, t, f, w, inner)
                b = _arc_side(model, t2, f2, w2, inner)
                glued[(a, f, w)] = (b, f2, w2)
                glued[(b, f2, w2)] = (a, f, w)
                key = ("corner", w) if inner else ("central",)
                pairs.append((a, b, (t, f), key, (f, w), (f2, w2)))
    cuf = _UnionFind()
    for t, k, s in sides:
        for v in _corners_of(k):
            cuf.add((t, k, s, v))
    for a, b, _, _, (f, w), (f2, w2) in pairs:
        t, k, s = a
        t2, k2, s2 = b
        _, p = tri.gluings[t][f]
        for u in range(4):
            if u in (f, w):
                continue
            e1 = _edge(w, u)
            e2 = _edge(p[w], p[u])
            cuf.union((t, k, s, e1), (t2, k2, s2, e2))
    return sides, glued, cuf, pairs


def _edge(a: int, b: int) -> int:
    return EDGE_INDEX[(min(a, b), max(a, b))]


def _corners_of(kind: int) -> list[int]:
    if kind < 4:
        return [_edge(kind, u) for u in range(4) if u != kind]
    (a, b), (c, d) = QUAD_PAIRS[kind - 4]
    return [_edge(u, v) for u in (a, b) for v in (c, d)]


def _arc_side(model: BranchedSurfaceModel, t: int, f: int, w: int, inner: bool) -> tuple[int, int, int]:
    """Disk side bounding the face region next to the arc at corner w of face f."""
    qk = quad_separating(w, f)
    if inner:
        if model.has(t, w):
            return (t, w, 0)
        return (t, qk, 0 if quad_side(qk, w) == 0 else 1)
    if model.has(t, qk):
        return (t, qk, 1 if quad_side(qk, w) == 0 else 0)
    return (t, w, 1)


def guts(tri: Triangulation, model: BranchedSurfaceModel) -> "GutsDecomposition":
    """Complementary components of the pinched branched surface."""
    uf = _UnionFind()
    for t in range(tri.size):
        for r in model.regions(t):
            uf.add((t, r))
    for k in tri.interior_triangles:
        (t, f), (t2, f2) = tri.triangles[k]
        fr, fr2 = model.face_regions(t, f), model.face_regions(t2, f2)
        for key, reg in fr.items():
            uf.union((t, reg), (t2, fr2[_edge_key_across(tri, t, f, key)]))
    groups_of: dict = {}
    for t in range(tri.size):
        for r in model.regions(t):
            groups_of.setdefault(uf.find((t, r)), set()).add((t, r))
    comps_regions = sorted(
        groups_of.values(), key=lambda g: min((t, REGION_ORDER.index(r)) for t, r in g)
    )
    sides, glued, cuf, pairs = _horizontal(tri, model)
    segments = [(e, _edge_segments(tri, model, e)) for e in tri.interior_edges]
    comps = []
    for regs in comps_regions:
        spine = _Spine(tri, model, regs)
        loops = [spine.exits(spine.loop_edges(g)) for g in spine.generators]
        c = sum(local_complexity(model, t, r) for t, r in regs)
        types = frozenset(
            7 * t + k for t, k, s in sides if (t, model.side_region(t, k, s)) in regs
        )
        sut = _sutured(tri, model, regs, sides, glued, cuf)
        own = [seg for _, segs in segments for seg in segs if (seg[0][0], seg[0][1]) in regs]
        comps.append(GutsComponent(tuple(spine.nodes), c, types, sut, loops, spine, own, sides, pairs))
    pieces = sum(len(model.regions(t)) for t in range(tri.size))
    return GutsDecomposition(model, comps, sum(model.collapsed), pieces)


def _plus(model: BranchedSurfaceModel, t: int, k: int, s: int) -> Optional[bool]:
    """Does the normal of this side point out of the region it faces?"""
    sign = model.sign(t, k)
    if sign is None:
        return None
    toward = 0 if sign > 0 else 1
    return toward != s


def _sutured(tri, model, regs, sides, glued, cuf) -> SuturedData:
    mine = [sd for sd in sides if (sd[0], model.side_region(sd[0], sd[1], sd[2])) in regs]
    oriented = model.oriented
    cusp = bnd = 0
    for t, k, s in mine:
        for f, w in _arcs_of(k):
            if (((t, k, s), f, w)) in glued:
                continue
            if tri.gluings[t][f] is None:
                bnd += 1
            else:
                cusp += 1
    plus_parts, minus_parts = [], []
    if oriented:
        for want, bucket in ((True, plus_parts), (False, minus_parts)):
            chosen = {sd for sd in mine if _plus(model, *sd) == want}
            bucket.extend(_surface_pieces(tri, chosen, glued, cuf))
        for (a, f, w), (b, _, _) in glued.items():
            if a in set(mine) and _plus(model, *a) != _plus(model, *b):
                oriented = False
    return SuturedData(plus_parts, minus_parts, cusp, bnd, oriented)


def _surface_pieces(tri, chosen: set, glued: dict, cuf) -> list[dict]:
    """Connected pieces of a horizontal boundary with their Euler characteristics."""
    uf = _UnionFind()
    for sd in chosen:
        uf.add(sd)
    arcs_glued = 0
    for (a, f, w), (b, _, _) in glued.items():
        if a in chosen and b in chosen:
            uf.union(a, b)
    out: dict = {}
    for sd in sorted(chosen):
        r = uf.find(sd)
        d = out.setdefault(r, {"sides": 0, "arcs": 0, "verts": set(), "members": []})
        d["sides"] += 1
        d["members"].append(sd)
        t, k, s = sd
        for f, w in _arcs_of(k):
            partner = glued.get((sd, f, w))
            if partner is None or partner[0] not in chosen:
                d["arcs"] += 2  # counted twice below
            else:
                d["arcs"] += 1
        for v in _corners_of(k):
            d["verts"].add(cuf.find((t, k, s, v)))
    pieces = []
    for r, d in out.items():
        arcs = d["arcs"] // 2
        euler = len(d["verts"]) - arcs + d["sides"]
        pieces.append({"sides": d["sides"], "euler": euler, "members": d["members"]})
    pieces.sort(key=lambda p: p["members"][0])
    return [{"sides": p["sides"], "euler": p["euler"], "first": list(p["members"][0])} for p in pieces]


def complexity(tri: Triangulation, model: BranchedSurfaceModel, q: GutsComponent) -> int:
    return sum(local_complexity(model, t, r) for t, r in q.regions)


def check_killing(tri: Triangulation, g: GutsDecomposition) -> list[bool]:
    """Per component: does every spine loop vanish in H_1(M)/torsion?"""
    grp = tri.homology_group(1)
    out = []
    for comp in g.components:
        ok = True
        for loop in comp.loops:
            if any(grp.free_coordinates(tri.dual_loop_chain(loop))):
                ok = False
                break
        out.append(ok)
    return out


def surviving_loops(tri: Triangulation, comp: GutsComponent) -> list[list[int]]:
    """Images in H_1(M)/torsion of the component's spine loops."""
    grp = tri.homology_group(1)
    return [grp.free_coordinates(tri.dual_loop_chain(loop)) for loop in comp.loops]


# -- product certificate --------------------------------------------------------


@dataclass
class ProductCertificate:
    fibered: bool
    reason: str
    rank: Optional[int] = None
    euler: Optional[int] = None

    def to_json(self) -> dict:
        return {"fibered": self.fibered, "reason": self.reason, "rank": self.rank, "euler": self.euler}


def _relators(comp: GutsComponent) -> list[groups.Word]:
    spine = comp._spine
    rels = []
    for seg in comp._segments:
        walk = [spine.crossing(t, d, key) for t, _, d, key in seg]
        rels.append(spine.closed_walk_word(walk))
    return rels


def _horizontal_loops(comp: GutsComponent, want_plus: bool, model: BranchedSurfaceModel):
    """Spine words of a generating set of loops of one horizontal piece."""
    spine = comp._spine
    chosen = [
        sd
        for sd in comp._sides
        if (sd[0], model.side_region(*sd)) in spine.regions and _plus(model, *sd) == want_plus
    ]
    chosen_set = set(chosen)
    adj: dict = {sd: [] for sd in chosen}
    for a, b, (t, f), key, _, _ in comp._pairs:
        if a in chosen_set and b in chosen_set:
            e, d = spine.crossing(t, f, key)
            adj[a].append((b, (e, d)))
            adj[b].append((a, (e, -d)))
    if not chosen:
        return [], 0
    root = min(chosen)
    parent = {root: None}
    order = [root]
    for u in order:
        for v, step in adj[u]:
            if v not in parent:
                parent[v] = (u, step)
                order.append(v)
    if len(parent) != len(chosen):
        return None, len(chosen)  # disconnected

    def path(sd):
        out = []
        while parent[sd] is not None:
            u, step = parent[sd]
            out.append(step)
            sd = u
        return list(reversed(out))

    words = []
    seen = set()
    for u in chosen:
        for v, step in adj[u]:
            if parent.get(v) is not None and parent[v][0] == u and parent[v][1] == step:
                continue
            if parent.get(u) is not None and parent[u][0] == v and parent[u][1] == (step[0], -step[1]):
                continue
            key = (min(u, v), max(u, v), step[0])
            if key in seen:
                continue
            seen.add(key)
            back = [(e, -d) for e, d in reversed(path(v))]
            walk = path(u) + [step] + back
            if not walk:
                continue
            # walk is a closed path in the spine starting at the region of root
            words.append(spine.closed_walk_word(walk))
    return words, len(chosen)


def certify_product(tri: Triangulation, model: BranchedSurfaceModel, comp: GutsComponent) -> ProductCertificate:
    """Sufficient check that a guts component is a product sutured manifold.

    R+ and R- must each be one connected surface with boundary and the
    same Euler characteristic; pi_1 of the component must reduce by Tietze
    moves to a free group of rank 1 - chi(R+); and the loops of R+ and of R-
    must each generate that free group (checked by Stallings folding).
    Surjectivity between free groups of equal rank is an isomorphism, so
    both inclusions are pi_1-isomorphisms and the component is R+ x I.
    """
    sut = comp.sutured
    if not model.oriented or not sut.oriented:
        return ProductCertificate(False, "branched surface is not coherently oriented")
    if len(sut.r_plus) != 1 or len(sut.r_minus) != 1:
        return ProductCertificate(
            False, f"R+ has {len(sut.r_plus)} pieces and R- has {len(sut.r_minus)}"
        )
    chi = sut.r_plus[0]["euler"]
    if sut.r_minus[0]["euler"] != chi:
        return ProductCertificate(False, "R+ and R- have different Euler characteristic")
    if sut.annuli == 0:
        return ProductCertificate(False, "horizontal boundary is closed")
    if chi > 1:
        return ProductCertificate(False, "horizontal boundary has a sphere")
    rank = 1 - chi
    tracked = []
    plus, _ = _horizontal_loops(comp, True, model)
    minus, _ = _horizontal_loops(comp, False, model)
    if plus is None or minus is None:
        return ProductCertificate(False, "horizontal boundary is disconnected")
    res = groups.tietze_eliminate(len(comp._spine.generators), _relators(comp), plus + minus)
    if not res.is_free:
        return ProductCertificate(False, "could not reduce pi_1 to a free group", euler=chi)
    if res.rank != rank:
        return ProductCertificate(False, f"pi_1 has rank {res.rank}, expected {rank}", res.rank, chi)
    wp = res.tracked[: len(plus)]
    wm = res.tracked[len(plus) :]
    if not groups.generates_free_group(wp, rank):
        return ProductCertificate(False, "R+ does not carry pi_1", rank, chi)
    if not groups.generates_free_group(wm, rank):
        return ProductCertificate(False, "R- does not carry pi_1", rank, chi)
    return ProductCertificate(True, "product", rank, chi)


def is_product_guts(tri: Triangulation, g: GutsDecomposition) -> str:
    """'fibered' when every component carries a product certificate."""
    for comp in g.components:
        if not certify_product(tri, g.model, comp).fibered:
            return "not_detected"
    return "fibered"
