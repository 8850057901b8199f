"""Normal surfaces in standard (triangle + quadrilateral) coordinates.

Disk-type ordering inside tetrahedron ``t`` occupies coordinates
``7t .. 7t+6``:

    ===== ==========================================
    kind  meaning
    ===== ==========================================
    0..3  triangle cutting off vertex 0..3
    4     quadrilateral separating {0,1} from {2,3}
    5     quadrilateral separating {0,2} from {1,3}
    6     quadrilateral separating {0,3} from {1,2}
    ===== ==========================================

Transverse orientation convention: a disk with sign +1 has its normal
pointing toward the vertex it cuts off (triangles) or toward the pair
containing vertex 0 (quadrilaterals).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import gcd
from typing import Iterable, Optional, Sequence

from . import linalg
from .errors import IncompatibleQuadTypes, PreconditionError, ResourceBudgetExceeded
from .triangulation import EDGE_INDEX, EDGES, Triangulation, _UnionFind

QUAD_PAIRS = (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2)))


def quad_separating(a: int, b: int) -> int:
    """Disk kind (4..6) of the quadrilateral with ``a`` and ``b`` on the same side."""
    for i, (p, q) in enumerate(QUAD_PAIRS):
        if {a, b} == set(p) or {a, b} == set(q):
            return 4 + i
    raise ValueError((a, b))


def quad_side(kind: int, v: int) -> int:
    """0 if ``v`` lies on the side of the quad containing vertex 0, else 1."""
    return 0 if v in QUAD_PAIRS[kind - 4][0] else 1


def quad_splits(kind: int, a: int, b: int) -> bool:
    return quad_side(kind, a) != quad_side(kind, b)


_QSIDE = {k: tuple(quad_side(k, v) for v in range(4)) for k in (4, 5, 6)}


def _edge_count(x: Sequence[int], t: int, a: int, b: int) -> int:
    """Number of disk corners on edge ab of tet t."""
    n = x[7 * t + a] + x[7 * t + b]
    for k in (4, 5, 6):
        if _QSIDE[k][a] != _QSIDE[k][b]:
            n += x[7 * t + k]
    return n


def _disk_on_edge(x: Sequence[int], t: int, lo: int, hi: int, j: int, n: int) -> tuple[int, int, int]:
    """Disk copy meeting edge (lo, hi) of tet t at position j from lo."""
    nlo = x[7 * t + lo]
    if j < nlo:
        return (t, lo, j)
    nhi = x[7 * t + hi]
    if j >= n - nhi:
        return (t, hi, n - 1 - j)
    for k in (4, 5, 6):
        q = x[7 * t + k]
        if q and _QSIDE[k][lo] != _QSIDE[k][hi]:
            f = j - nlo
            return (t, k, f if _QSIDE[k][lo] == 0 else q - 1 - f)
    raise PreconditionError("edge position out of range")


def disk_index(t: int, kind: int) -> int:
    return 7 * t + kind


@dataclass(frozen=True)
class DiskTypeIndex:
    tet: int
    kind: int

    @property
    def position(self) -> int:
        return 7 * self.tet + self.kind

    @property
    def is_quad(self) -> bool:
        return self.kind >= 4

    def __str__(self) -> str:
        if self.kind < 4:
            return f"T{self.tet}.{self.kind}"
        (a, b), (c, d) = QUAD_PAIRS[self.kind - 4]
        return f"Q{self.tet}.{a}{b}|{c}{d}"


class NormalCoordinates(tuple):
    """A 7t-tuple of nonnegative integers."""

    def __new__(cls, values: Iterable[int]):
        vals = tuple(int(v) for v in values)
        if len(vals) % 7:
            raise PreconditionError("normal coordinate length must be a multiple of 7")
        if any(v < 0 for v in vals):
            raise PreconditionError("normal coordinates must be nonnegative")
        return super().__new__(cls, vals)

    @property
    def num_tetrahedra(self) -> int:
        return len(self) // 7

    def tet(self, t: int) -> tuple[int, ...]:
        return tuple(self[7 * t : 7 * t + 7])

    @property
    def support(self) -> frozenset[int]:
        return frozenset(i for i, v in enumerate(self) if v)

    def quad_type(self, t: int) -> Optional[int]:
        """The unique quad kind present in tetrahedron t (None if none; -1 if several)."""
        q = [k for k in (4, 5, 6) if self[7 * t + k]]
        if not q:
            return None
        return q[0] if len(q) == 1 else -1

    def scaled(self, n: int) -> "NormalCoordinates":
        return NormalCoordinates(n * v for v in self)

    def is_zero(self) -> bool:
        return not any(self)

    def __add__(self, other):  # coordinate-wise, not concatenation
        if isinstance(other, NormalCoordinates):
            return NormalCoordinates(a + b for a, b in zip(self, other))
        return NotImplemented

    def __repr__(self) -> str:
        return f"NormalCoordinates({' '.join(map(str, self))})"


@dataclass(frozen=True)
class MatchingSystem:
    num_coords: int
    equations: tuple[tuple[int, int, int, int], ...]

    def matrix(self) -> linalg.Matrix:
        rows = []
        for i, j, k, l in self.equations:
            row = [0] * self.num_coords
            row[i] += 1
            row[j] += 1
            row[k] -= 1
            row[l] -= 1
            rows.append(row)
        return rows

    def satisfied_by(self, x: Sequence) -> bool:
        return all(x[i] + x[j] == x[k] + x[l] for i, j, k, l in self.equations)


def matching_system(tri: Triangulation) -> MatchingSystem:
    """One equation x_i + x_j = x_k + x_l per arc type per interior triangle."""
    eqs = []
    for k in tri.interior_triangles:
        (t, f), (t2, f2) = tri.triangles[k]
        _, p = tri.gluings[t][f]
        for v in range(4):
            if v == f:
                continue
            w = p[v]
            eqs.append(
                (
                    disk_index(t, v),
                    disk_index(t, quad_separating(v, f)),
                    disk_index(t2, w),
                    disk_index(t2, quad_separating(w, f2)),
                )
            )
    return MatchingSystem(7 * tri.size, tuple(eqs))


def is_admissible(x: Sequence[int]) -> bool:
    """At most one nonzero quadrilateral coordinate per tetrahedron."""
    for t in range(len(x) // 7):
        if sum(1 for k in (4, 5, 6) if x[7 * t + k]) > 1:
            return False
    return True


def _quad_masks(n: int) -> list[int]:
    """Bitmask per tetrahedron of its three quad coordinates."""
    return [sum(1 << (7 * t + k) for k in (4, 5, 6)) for t in range(n // 7)]


def _support_admissible(support: int, masks: list[int]) -> bool:
    for m in masks:
        s = support & m
        if s & (s - 1):
            return False
    return True


@dataclass(frozen=True)
class VertexSurface:
    coords: NormalCoordinates
    admissible: bool


def enumerate_vertex_surfaces(
    tri: Triangulation,
    *,
    admissible_only: bool = False,
    max_rays: int = 200_000,
) -> list[VertexSurface]:
    """Extreme rays of the matching cone, as primitive integer vectors.

    Incremental double description over the matching equations starting
    from the nonnegative orthant.  With ``admissible_only`` intermediate rays
    whose support violates the quad constraints are discarded, which returns
    exactly the admissible vertices while keeping the run small.  Output is
    sorted lexicographically.
    """
    ms = matching_system(tri)
    n = ms.num_coords
    full = (1 << n) - 1
    masks = _quad_masks(n)
    # ray = (vector, zero-set bitmask)
    rays: list[tuple[tuple[int, ...], int]] = []
    for i in range(n):
        v = [0] * n
        v[i] = 1
        rays.append((tuple(v), full & ~(1 << i)))
    processed: list[list[int]] = []
    eq_rows = _order_equations(ms)
    for row in eq_rows:
        if linalg.rank(processed + [row]) == len(processed):
            continue  # dependent equation
        processed.append(row)
        cone_dim = n - len(processed) + 1  # dimension before this cut
        pos, neg, zero = [], [], []
        for vec, z in rays:
            s = sum(row[i] * vec[i] for i in range(n) if vec[i])
            if s > 0:
                pos.append((vec, z, s))
            elif s < 0:
                neg.append((vec, z, s))
            else:
                zero.append((vec, z))
        new = list(zero)
        all_z = [z for _, z in rays]
        need = cone_dim - 2
        for pv, pz, ps in pos:
            for nv, nz, ns in neg:
                common = pz & nz
                if admissible_only and not _support_admissible(full & ~common, masks):
                    continue
                if common.bit_count() < need:
                    continue
                adjacent = True
                for z in all_z:
                    if z & common == common and z != pz and z != nz:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                vec = [ps * a - ns * b for a, b in zip(nv, pv)]
                vec = list(linalg.primitive(vec))
                zmask = 0
                for i, x in enumerate(vec):
                    if not x:
                        zmask |= 1 << i
                new.append((tuple(vec), zmask))
                if len(new) > max_rays:
                    raise ResourceBudgetExceeded(f"more than {max_rays} intermediate rays")
        if admissible_only:
            new = [(v, z) for v, z in new if _support_admissible(full & ~z, masks)]
        rays = new
    out = []
    seen = set()
    for vec, _ in rays:
        if vec in seen or not any(vec):
            continue
        seen.add(vec)
        out.append(VertexSurface(NormalCoordinates(vec), is_admissible(vec)))
    out.sort(key=lambda s: tuple(s.coords))
    return out


def _order_equations(ms: MatchingSystem) -> list[list[int]]:
    """Process equations touching few coordinates first, grouped by tetrahedron."""
    rows = ms.matrix()
    return sorted(rows, key=lambda r: (max(i for i, x in enumerate(r) if x) if any(r) else 0, r))


def haken_sum(g: NormalCoordinates, h: NormalCoordinates) -> NormalCoordinates:
    """Coordinate-wise sum of two quad-compatible surfaces."""
    if len(g) != len(h):
        raise PreconditionError("surfaces live in different triangulations")
    s = NormalCoordinates(a + b for a, b in zip(g, h))
    if not is_admissible(s):
        raise IncompatibleQuadTypes("the two surfaces use different quads in some tetrahedron")
    return s


def compatible(g: Sequence[int], h: Sequence[int]) -> bool:
    return is_admissible([a + b for a, b in zip(g, h)])


def edge_weights(tri: Triangulation, x: Sequence[int]) -> list[int]:
    """Number of intersection points with each edge class."""
    out = []
    for t, e in tri.edge_representatives:
        a, b = EDGES[e]
        w = x[7 * t + a] + x[7 * t + b]
        for k in (4, 5, 6):
            if quad_splits(k, a, b):
                w += x[7 * t + k]
        out.append(w)
    return out


def weight(tri: Triangulation, x: Sequence[int]) -> int:
    return sum(edge_weights(tri, x))


# -- surface reconstruction ---------------------------------------------------


def _arcs_of(kind: int) -> list[tuple[int, int]]:
    """(face, corner) pairs for the arcs of a disk kind."""
    if kind < 4:
        return [(f, kind) for f in range(4) if f != kind]
    (a, b), (c, d) = QUAD_PAIRS[kind - 4]
    partner = {a: b, b: a, c: d, d: c}
    # in face f the quad arc cuts off the partner of f
    return [(f, partner[f]) for f in range(4)]


def _ref_contains(kind: int, v: int) -> bool:
    """Does the reference side of the disk contain vertex ``v``?"""
    if kind < 4:
        return v == kind
    return quad_side(kind, v) == 0


def _corner_position(x: Sequence[int], t: int, f: int, w: int, kind: int, i: int) -> int:
    """Position (from corner w outward) of copy ``i`` of ``kind`` among arcs at corner w of face f."""
    ntri = x[7 * t + w]
    if kind < 4:
        return i
    q = x[7 * t + kind]
    # quad copies are indexed from the side containing vertex 0
    return ntri + (i if quad_side(kind, w) == 0 else q - 1 - i)


def _disk_at_position(x: Sequence[int], t: int, f: int, w: int, pos: int) -> tuple[int, int]:
    ntri = x[7 * t + w]
    if pos < ntri:
        return (w, pos)
    k = quad_separating(w, f)
    q = x[7 * t + k]
    j = pos - ntri
    return (k, j if quad_side(k, w) == 0 else q - 1 - j)


@dataclass(frozen=True)
class Component:
    coords: NormalCoordinates
    euler: int
    orientable: bool
    boundary_curves: int
    weight: int
    homology_class: Optional[tuple[int, ...]]  # None if one-sided

    @property
    def chi_minus(self) -> int:
        return max(-self.euler, 0)


@dataclass(frozen=True)
class SurfaceTopology:
    coords: NormalCoordinates
    components: tuple[Component, ...]
    weight: int
    # per-disk transverse sign and owning component, keyed by (tet, kind, copy)
    disk_signs: dict = field(repr=False, compare=False, default_factory=dict)
    disk_component: dict = field(repr=False, compare=False, default_factory=dict)

    @property
    def num_components(self) -> int:
        return len(self.components)

    @property
    def euler(self) -> int:
        return sum(c.euler for c in self.components)

    @property
    def orientable(self) -> bool:
        return all(c.orientable for c in self.components)

    @property
    def boundary_curves(self) -> int:
        return sum(c.boundary_curves for c in self.components)

    @property
    def homology_class(self) -> Optional[tuple[int, ...]]:
        """Class with every component in its canonical orientation."""
        if not self.orientable:
            return None
        if not self.components:
            return ()
        vecs = [c.homology_class for c in self.components]
        return tuple(sum(col) for col in zip(*vecs))

    @property
    def chi_minus(self) -> int:
        return sum(c.chi_minus for c in self.components)


def class_cocycle(tri: Triangulation, x: Sequence[int], signs: dict) -> list[int]:
    """1-cocycle on interior triangles counting signed quad crossings.

    The dual arc through a triangle runs between fixed base points; only
    quadrilaterals separate those base points, so triangles never contribute.
    """
    height = {}
    for t in range(tri.size):
        q = None
        for k in (4, 5, 6):
            if x[7 * t + k]:
                q = k
        for f in range(4):
            h = 0
            if q is not None and quad_side(q, f) == 0:
                # face centre lies beyond every copy of the quad
                for i in range(x[7 * t + q]):
                    h -= signs.get((t, q, i), 0)
            height[(t, f)] = h
    out = []
    for k in tri.interior_triangles:
        (t, f), (t2, f2) = tri.triangles[k]
        out.append(height[(t, f)] - height[(t2, f2)])
    return out


def class_coordinates(tri: Triangulation, cocycle: Sequence[int]) -> tuple[int, ...]:
    """Coordinates in H_2(M, dM) = H^1(M) of a cocycle on interior triangles."""
    grp = tri.cohomology_group(1)
    return tuple(grp.free_coordinates(cocycle))


def surface_topology(tri: Triangulation, x: Sequence[int]) -> SurfaceTopology:
    """Rebuild the surface disk by disk and read off its topology."""
    x = NormalCoordinates(x)
    if len(x) != 7 * tri.size:
        raise PreconditionError("coordinate length does not match the triangulation")
    if not is_admissible(x):
        raise PreconditionError("surface is not admissible")
    disks = [(t, k, i) for t in range(tri.size) for k in range(7) for i in range(x[7 * t + k])]
    uf = _UnionFind()
    for d in disks:
        uf.add(d)
    # arc gluings with their transverse-consistency relation
    links: list[tuple[tuple, tuple, int]] = []
    boundary_arcs: list[tuple[tuple, int, int]] = []  # (disk, face, corner)
    for t, k, i in disks:
        for f, w in _arcs_of(k):
            g = tri.gluings[t][f]
            pos = _corner_position(x, t, f, w, k, i)
            if g is None:
                boundary_arcs.append(((t, k, i), f, w))
                continue
            t2, p = g
            f2, w2 = p[f], p[w]
            if (t2, f2) < (t, f):
                continue  # counted from the other side
            if (t2, f2) == (t, f):
                raise PreconditionError("face glued to itself")
            k2, i2 = _disk_at_position(x, t2, f2, w2, pos)
            other = (t2, k2, i2)
            uf.union((t, k, i), other)
            rel = (1 if _ref_contains(k, w) else -1) * (1 if _ref_contains(k2, w2) else -1)
            links.append(((t, k, i), other, rel))
    # transverse orientation by propagation
    adj: dict = {d: [] for d in disks}
    for a, b, rel in links:
        adj[a].append((b, rel))
        adj[b].append((a, rel))
    sign: dict = {}
    comp_orientable: dict = {}
    for d in disks:
        if d in sign:
            continue
        root = uf.find(d)
        sign[d] = 1
        ok = True
        stack = [d]
        while stack:
            u = stack.pop()
            for v, rel in adj[u]:
                want = sign[u] * rel
                if v not in sign:
                    sign[v] = want
                    stack.append(v)
                elif sign[v] != want:
                    ok = False
        comp_orientable[root] = ok
    # vertices: points on edges; a point is (edge class, position from the
    # class representative's low endpoint)
    frames = tri.edge_frames
    on_edge = [[_edge_count(x, t, a, b) for a, b in EDGES] for t in range(tri.size)]

    def point_of(t: int, a: int, b: int, k: int, i: int) -> tuple:
        """Point where copy i of disk kind k meets edge ab of tet t."""
        lo, hi = (a, b) if a < b else (b, a)
        e = EDGE_INDEX[(lo, hi)]
        n = on_edge[t][e]
        if k == lo:
            j = i
        elif k == hi:
            j = n - 1 - i
        else:
            q = x[7 * t + k]
            j = x[7 * t + lo] + (i if _QSIDE[k][lo] == 0 else q - 1 - i)
        cls, flip = frames[(t, e)]
        return (cls, n - 1 - j if flip else j)

    comp_of = {d: uf.find(d) for d in disks}
    comp_points: dict = {}
    comp_faces: dict = {}
    comp_arcs: dict = {}
    for t, e in tri.edge_representatives:
        lo, hi = EDGES[e]
        n = on_edge[t][e]
        for j in range(n):
            r = comp_of[_disk_on_edge(x, t, lo, hi, j, n)]
            comp_points[r] = comp_points.get(r, 0) + 1
    for d in disks:
        r = comp_of[d]
        comp_faces[r] = comp_faces.get(r, 0) + 1
    for a, b, rel in links:
        r = comp_of[a]
        comp_arcs[r] = comp_arcs.get(r, 0) + 1
    for d, f, w in boundary_arcs:
        r = comp_of[d]
        comp_arcs[r] = comp_arcs.get(r, 0) + 1
    # boundary curves: boundary arcs joined at shared boundary points
    buf = _UnionFind()
    arc_ends = []
    for d, f, w in boundary_arcs:
        t, k, i = d
        o1, o2 = [u for u in range(4) if u not in (f, w)]
        p1 = point_of(t, w, o1, k, i)
        p2 = point_of(t, w, o2, k, i)
        buf.add(p1)
        buf.add(p2)
        buf.union(p1, p2)
        arc_ends.append((d, p1))
    curves_per_comp: dict = {}
    seen_roots = set()
    for d, p1 in arc_ends:
        root = buf.find(p1)
        if root in seen_roots:
            continue
        seen_roots.add(root)
        r = comp_of[d]
        curves_per_comp[r] = curves_per_comp.get(r, 0) + 1

    roots: list = []
    members_of: dict = {}
    for d in disks:
        r = comp_of[d]
        if r not in members_of:
            roots.append(r)
            members_of[r] = []
        members_of[r].append(d)
    comps = []
    for r in roots:
        members = members_of[r]
        cx = [0] * len(x)
        for t, k, i in members:
            cx[7 * t + k] += 1
        cx = NormalCoordinates(cx)
        euler = comp_points.get(r, 0) - comp_arcs.get(r, 0) + comp_faces[r]
        orientable = comp_orientable[r]
        if orientable:
            csigns = {d: sign[d] for d in members}
            cls = class_coordinates(tri, class_cocycle(tri, x, csigns))
        else:
            cls = None
        comps.append(
            Component(cx, euler, orientable, curves_per_comp.get(r, 0), weight(tri, cx), cls)
        )
    index = {r: n for n, r in enumerate(roots)}
    owner = {d: index[comp_of[d]] for d in disks}
    return SurfaceTopology(x, tuple(comps), weight(tri, x), disk_signs=dict(sign), disk_component=owner)


def vertex_link(tri: Triangulation, v: int) -> NormalCoordinates:
    """Coordinates of the link of vertex class ``v``."""
    x = [0] * (7 * tri.size)
    for t in range(tri.size):
        for w in range(4):
            if tri.vertex_of(t, w) == v:
                x[7 * t + w] += 1
    return NormalCoordinates(x)


def format_surface(name: str, x: Sequence[int]) -> str:
    return f"surf {name}: " + " ".join(str(v) for v in x)


def parse_surfaces(text: str) -> dict[str, NormalCoordinates]:
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not line.startswith("surf "):
            raise PreconditionError(f"cannot parse surface line {raw!r}")
        head, _, body = line[5:].partition(":")
        out[head.strip()] = NormalCoordinates(int(v) for v in body.split())
    return out
