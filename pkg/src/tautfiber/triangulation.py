"""Triangulated 3-manifolds given by face-gluing tables.

A tetrahedron has vertices 0..3; face ``f`` is the face opposite vertex
``f``.  A gluing of face ``f`` of tetrahedron ``t`` is a pair
``(t2, perm)`` where ``perm`` is a permutation of {0,1,2,3} sending the
vertices of face ``f`` onto the vertices of face ``perm[f]`` of ``t2``.

Ideal vertices (closed vertex links that are not spheres) are treated as
truncated: they do not count as points of the manifold, and their links
contribute to the boundary.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import linalg
from .errors import MalformedGluing, NonOrientable, PreconditionError

Perm = tuple[int, int, int, int]
Gluing = Optional[tuple[int, Perm]]

IDENTITY: Perm = (0, 1, 2, 3)
EDGES: tuple[tuple[int, int], ...] = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
EDGE_INDEX = {e: i for i, e in enumerate(EDGES)}
EDGE_INDEX.update({(b, a): i for (a, b), i in list(EDGE_INDEX.items())})


def perm_sign(p: Sequence[int]) -> int:
    s = 1
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                s = -s
    return s


def perm_inverse(p: Sequence[int]) -> Perm:
    inv = [0] * 4
    for i, x in enumerate(p):
        inv[x] = i
    return tuple(inv)  # type: ignore[return-value]


def perm_compose(p: Sequence[int], q: Sequence[int]) -> Perm:
    """p after q."""
    return tuple(p[q[i]] for i in range(4))  # type: ignore[return-value]


def parse_perm(word: str) -> Perm:
    if len(word) != 4 or sorted(word) != ["0", "1", "2", "3"]:
        raise MalformedGluing(f"bad permutation word {word!r}")
    return tuple(int(c) for c in word)  # type: ignore[return-value]


def perm_word(p: Sequence[int]) -> str:
    return "".join(str(x) for x in p)


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


@dataclass(frozen=True)
class HomologyProfile:
    degree: int
    relative: bool
    betti: int
    torsion: tuple[int, ...]
    basis: tuple[tuple[int, ...], ...]

    def signature(self) -> tuple[int, int, tuple[int, ...]]:
        return (self.degree, self.betti, self.torsion)


@dataclass(frozen=True)
class BoundaryComponent:
    kind: str  # "real" (boundary triangles) or "cusp" (ideal vertex link)
    euler: int
    triangles: tuple[tuple[int, int], ...] = ()
    vertex: Optional[int] = None

    @property
    def genus(self) -> int:
        return (2 - self.euler) // 2


class Triangulation:
    """Immutable gluing table with derived skeleta.

    Construct via :func:`build_from_gluings`, :func:`parse` or :func:`load`.
    """

    def __init__(self, gluings: Sequence[Sequence[Gluing]]):
        self.gluings: tuple[tuple[Gluing, ...], ...] = tuple(
            tuple(None if g is None else (int(g[0]), tuple(g[1])) for g in row) for row in gluings
        )
        self._validate()

    # -- construction checks -------------------------------------------------

    def _validate(self) -> None:
        if self.size < 1:
            raise MalformedGluing("need at least one tetrahedron")
        for t, row in enumerate(self.gluings):
            if len(row) != 4:
                raise MalformedGluing(f"tetrahedron {t} needs 4 face entries")
            for f, g in enumerate(row):
                if g is None:
                    continue
                t2, p = g
                if not 0 <= t2 < self.size:
                    raise MalformedGluing(f"tet {t} face {f}: target {t2} out of range")
                if sorted(p) != [0, 1, 2, 3]:
                    raise MalformedGluing(f"tet {t} face {f}: {p} is not a permutation")
                f2 = p[f]
                if t2 == t and f2 == f:
                    raise MalformedGluing(f"tet {t} face {f} glued to itself")
                back = self.gluings[t2][f2]
                if back is None or back[0] != t or perm_compose(back[1], p) != IDENTITY:
                    raise MalformedGluing(f"tet {t} face {f}: gluing is not involutive")
        if self.orientation is None:
            raise NonOrientable("no consistent orientation of the tetrahedra")

    # -- basic data ---------------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.gluings)

    def glued(self, t: int, f: int) -> Gluing:
        return self.gluings[t][f]

    @cached_property
    def orientation(self) -> Optional[tuple[int, ...]]:
        """Per-tetrahedron sign making every gluing orientation-reversing."""
        sign: list[Optional[int]] = [None] * self.size
        for start in range(self.size):
            if sign[start] is not None:
                continue
            sign[start] = 1
            stack = [start]
            while stack:
                t = stack.pop()
                for f in range(4):
                    g = self.gluings[t][f]
                    if g is None:
                        continue
                    t2, p = g
                    want = -perm_sign(p) * sign[t]
                    if sign[t2] is None:
                        sign[t2] = want
                        stack.append(t2)
                    elif sign[t2] != want:
                        return None
        return tuple(sign)  # type: ignore[arg-type]

    @cached_property
    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            t = stack.pop()
            for g in self.gluings[t]:
                if g is not None and g[0] not in seen:
                    seen.add(g[0])
                    stack.append(g[0])
        return len(seen) == self.size

    # -- skeleta ----------------------------------------------------------

    @cached_property
    def _triangle_data(self):
        classes = []
        index = {}
        for t in range(self.size):
            for f in range(4):
                if (t, f) in index:
                    continue
                g = self.gluings[t][f]
                k = len(classes)
                if g is None:
                    classes.append(((t, f), None))
                    index[(t, f)] = k
                else:
                    t2, p = g
                    classes.append(((t, f), (t2, p[f])))
                    index[(t, f)] = k
                    index[(t2, p[f])] = k
        return classes, index

    @property
    def triangles(self) -> list[tuple[tuple[int, int], Optional[tuple[int, int]]]]:
        """Triangle classes as (representative side, other side or None)."""
        return self._triangle_data[0]

    def triangle_of(self, t: int, f: int) -> int:
        return self._triangle_data[1][(t, f)]

    @cached_property
    def interior_triangles(self) -> list[int]:
        return [i for i, (_, other) in enumerate(self.triangles) if other is not None]

    @cached_property
    def boundary_triangles(self) -> list[tuple[int, int]]:
        return [rep for rep, other in self.triangles if other is None]

    @cached_property
    def _edge_data(self):
        uf = _UnionFind()
        for t in range(self.size):
            for e in range(6):
                uf.add((t, e))
        for t in range(self.size):
            for f in range(4):
                g = self.gluings[t][f]
                if g is None:
                    continue
                t2, p = g
                for a, b in EDGES:
                    if f in (a, b):
                        continue
                    uf.union((t, EDGE_INDEX[(a, b)]), (t2, EDGE_INDEX[(p[a], p[b])]))
        roots = sorted({uf.find(x) for x in uf.parent})
        cls = {r: i for i, r in enumerate(roots)}
        of = {x: cls[uf.find(x)] for x in uf.parent}
        return roots, of

    @property
    def num_edges(self) -> int:
        return len(self._edge_data[0])

    def edge_of(self, t: int, e: int) -> int:
        return self._edge_data[1][(t, e)]

    @cached_property
    def edge_frames(self) -> dict:
        """(t, e) -> (edge class, flip); flip is 1 when the local low endpoint
        corresponds to the high endpoint of the class representative."""
        out: dict = {}
        for rep in self.edge_representatives:
            cls = self.edge_of(*rep)
            out[rep] = (cls, 0)
            todo = [rep]
            while todo:
                t, e = todo.pop()
                a, b = EDGES[e]
                flip = out[(t, e)][1]
                for f in range(4):
                    if f in (a, b):
                        continue
                    g = self.gluings[t][f]
                    if g is None:
                        continue
                    t2, p = g
                    a2, b2 = p[a], p[b]
                    e2 = EDGE_INDEX[(min(a2, b2), max(a2, b2))]
                    if (t2, e2) in out:
                        continue
                    out[(t2, e2)] = (cls, flip ^ (1 if a2 > b2 else 0))
                    todo.append((t2, e2))
        return out

    @cached_property
    def edge_representatives(self) -> list[tuple[int, int]]:
        return list(self._edge_data[0])

    @cached_property
    def _vertex_data(self):
        uf = _UnionFind()
        for t in range(self.size):
            for v in range(4):
                uf.add((t, v))
        for t in range(self.size):
            for f in range(4):
                g = self.gluings[t][f]
                if g is None:
                    continue
                t2, p = g
                for v in range(4):
                    if v != f:
                        uf.union((t, v), (t2, p[v]))
        roots = sorted({uf.find(x) for x in uf.parent})
        cls = {r: i for i, r in enumerate(roots)}
        of = {x: cls[uf.find(x)] for x in uf.parent}
        return roots, of

    @property
    def num_vertices(self) -> int:
        return len(self._vertex_data[0])

    def vertex_of(self, t: int, v: int) -> int:
        return self._vertex_data[1][(t, v)]

    @cached_property
    def vertex_links(self) -> list[dict]:
        """Per vertex class: Euler characteristic of the link and whether it is closed."""
        out = [dict(euler=0, closed=True, corners=0) for _ in range(self.num_vertices)]
        # link vertices = ends of tetrahedron edges at the vertex, up to gluing
        end_uf = _UnionFind()
        for t in range(self.size):
            for v in range(4):
                for w in range(4):
                    if w != v:
                        end_uf.add((t, v, w))
        for t in range(self.size):
            for f in range(4):
                g = self.gluings[t][f]
                if g is None:
                    continue
                t2, p = g
                for v in range(4):
                    for w in range(4):
                        if v != f and w != f and v != w:
                            end_uf.union((t, v, w), (t2, p[v], p[w]))
        ends = {end_uf.find(x) for x in end_uf.parent}
        for root in ends:
            t, v, _ = root
            out[self.vertex_of(t, v)]["euler"] += 1
        for t in range(self.size):
            for v in range(4):
                k = self.vertex_of(t, v)
                out[k]["corners"] += 1
                out[k]["euler"] += 1  # link triangle
                for f in range(4):
                    if f == v:
                        continue
                    g = self.gluings[t][f]
                    if g is None:
                        out[k]["euler"] -= 1
                        out[k]["closed"] = False
                    elif (t, f) < (g[0], g[1][f]):
                        out[k]["euler"] -= 1
                    elif (t, f) == (g[0], g[1][f]):
                        out[k]["euler"] -= 1
        for d in out:
            if not d["closed"]:
                d["kind"] = "boundary"
            elif d["euler"] == 2:
                d["kind"] = "interior"
            else:
                d["kind"] = "ideal"
        return out

    @cached_property
    def ideal_vertices(self) -> list[int]:
        return [i for i, d in enumerate(self.vertex_links) if d["kind"] == "ideal"]

    @cached_property
    def interior_vertices(self) -> list[int]:
        return [i for i, d in enumerate(self.vertex_links) if d["kind"] == "interior"]

    @cached_property
    def boundary_edges(self) -> set[int]:
        out = set()
        for t, f in self.boundary_triangles:
            for a, b in EDGES:
                if f not in (a, b):
                    out.add(self.edge_of(t, EDGE_INDEX[(a, b)]))
        return out

    @cached_property
    def interior_edges(self) -> list[int]:
        return [e for e in range(self.num_edges) if e not in self.boundary_edges]

    @cached_property
    def euler_characteristic(self) -> int:
        """Euler characteristic of the compact (truncated) manifold."""
        chi = self.num_vertices - self.num_edges + len(self.triangles) - self.size
        for v in self.ideal_vertices:
            chi += self.vertex_links[v]["euler"] - 1
        return chi

    @property
    def is_closed(self) -> bool:
        return not self.boundary_triangles and not self.ideal_vertices

    # -- edge walks and the dual chain complex ----------------------------

    def edge_walk(self, e: int) -> list[tuple[int, tuple[int, int, int, int]]]:
        """Walk around an interior edge class.

        Returns the successive states ``(t, (a, b, c, d))``: the edge is
        ``a -> b`` in tetrahedron ``t`` and the walk leaves ``t`` through the
        face opposite ``d``.  The start is chosen so that the rotation agrees
        with the manifold orientation.
        """
        t, ei = self.edge_representatives[e]
        a, b = EDGES[ei]
        c, d = [x for x in range(4) if x not in (a, b)]
        if self.orientation[t] * perm_sign((a, b, c, d)) < 0:
            c, d = d, c
        start = (t, (a, b, c, d))
        states = []
        state = start
        while True:
            states.append(state)
            t, (a, b, c, d) = state
            g = self.gluings[t][d]
            if g is None:
                raise PreconditionError(f"edge {e} is a boundary edge")
            t2, p = g
            state = (t2, (p[a], p[b], p[d], p[c]))
            if state == start:
                return states
            if len(states) > 6 * self.size:
                raise MalformedGluing("edge walk does not close up")

    @cached_property
    def dual_complex(self):
        """Cellular chain complex of the dual handle decomposition.

        Degree 0: tetrahedra; 1: interior triangles (oriented from the
        representative side to the other side); 2: interior edges;
        3: interior vertices.  Its homology is H_*(M).
        """
        tri_col = {k: i for i, k in enumerate(self.interior_triangles)}
        n0, n1 = self.size, len(tri_col)
        n2, n3 = len(self.interior_edges), len(self.interior_vertices)
        d1 = linalg.zeros(n0, n1)
        for k, i in tri_col.items():
            (t, _), (t2, _) = self.triangles[k]
            d1[t2][i] += 1
            d1[t][i] -= 1
        d2 = linalg.zeros(n1, n2)
        for j, e in enumerate(self.interior_edges):
            for t, (a, b, c, d) in self.edge_walk(e):
                k = self.triangle_of(t, d)
                rep = self.triangles[k][0]
                d2[tri_col[k]][j] += 1 if rep == (t, d) else -1
        d3 = linalg.zeros(n2, n3)
        vcol = {v: i for i, v in enumerate(self.interior_vertices)}
        for j, e in enumerate(self.interior_edges):
            t, ei = self.edge_representatives[e]
            a, b = EDGES[ei]
            va, vb = self.vertex_of(t, a), self.vertex_of(t, b)
            if vb in vcol:
                d3[j][vcol[vb]] += 1
            if va in vcol:
                d3[j][vcol[va]] -= 1
        return (n0, n1, n2, n3), (d1, d2, d3)

    def dual_loop_chain(self, crossings: Iterable[tuple[int, int]]) -> list[int]:
        """1-chain of a dual path given as a list of (tet, face) exits."""
        chain = [0] * len(self.interior_triangles)
        col = {k: i for i, k in enumerate(self.interior_triangles)}
        for t, f in crossings:
            k = self.triangle_of(t, f)
            chain[col[k]] += 1 if self.triangles[k][0] == (t, f) else -1
        return chain

    # -- homology --------------------------------------------------------------

    @cached_property
    def _homology_groups(self) -> dict:
        (n0, n1, n2, n3), (d1, d2, d3) = self.dual_complex
        dims = [n0, n1, n2, n3]
        ds = [None, d1, d2, d3]
        out = {}
        for k in range(4):
            d_out = ds[k] if k >= 1 else []
            out_rows = dims[k - 1] if k >= 1 else 0
            d_in = ds[k + 1] if k < 3 else []
            in_cols = dims[k + 1] if k < 3 else 0
            out[("abs", k)] = linalg.homology(d_out, d_in, dims[k], out_rows, in_cols)
        # cohomology H^j from the transposed complex; H_k(M, dM) = H^{3-k}(M)
        ts = [None] + [linalg.transpose(ds[k], dims[k - 1], dims[k]) for k in (1, 2, 3)]
        for j in range(4):
            # coboundary out of C^j is ts[j+1] (dims[j+1] x dims[j]); into C^j is ts[j]
            d_out = ts[j + 1] if j < 3 else []
            out_rows = dims[j + 1] if j < 3 else 0
            d_in = ts[j] if j >= 1 else []
            in_cols = dims[j - 1] if j >= 1 else 0
            out[("co", j)] = linalg.homology(d_out, d_in, dims[j], out_rows, in_cols)
        return out

    def homology_group(self, k: int, rel_boundary: bool = False) -> linalg.HomologyGroup:
        if k not in (0, 1, 2, 3):
            raise PreconditionError("degree must be 0..3")
        if rel_boundary:
            return self._homology_groups[("co", 3 - k)]
        return self._homology_groups[("abs", k)]

    def cohomology_group(self, j: int) -> linalg.HomologyGroup:
        return self._homology_groups[("co", j)]

    # -- I/O -------------------------------------------------------------------

    def to_text(self, comment: str | None = None) -> str:
        lines = [f"# {comment}"] if comment else []
        for t, row in enumerate(self.gluings):
            parts = ["-" if g is None else f"{g[0]}:{perm_word(g[1])}" for g in row]
            lines.append(f"tet {t}: " + " ".join(parts))
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "tetrahedra": [
                [None if g is None else {"tet": g[0], "perm": perm_word(g[1])} for g in row]
                for row in self.gluings
            ]
        }

    def __eq__(self, other) -> bool:
        return isinstance(other, Triangulation) and self.gluings == other.gluings

    def __hash__(self) -> int:
        return hash(self.gluings)

    def __repr__(self) -> str:
        return f"Triangulation(t={self.size}, vertices={self.num_vertices}, edges={self.num_edges})"


def build_from_gluings(spec: Sequence[Sequence[Gluing]]) -> Triangulation:
    return Triangulation(spec)


_TET_LINE = re.compile(r"^tet\s+(\d+)\s*:\s*(.*)$")


def parse(text: str) -> Triangulation:
    """Parse the ``tet <i>: <g0> <g1> <g2> <g3>`` text format."""
    rows: dict[int, list[Gluing]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _TET_LINE.match(line)
        if not m:
            raise MalformedGluing(f"line {lineno}: cannot parse {raw!r}")
        i = int(m.group(1))
        fields = m.group(2).split()
        if len(fields) != 4:
            raise MalformedGluing(f"line {lineno}: expected 4 face entries")
        row: list[Gluing] = []
        for fld in fields:
            if fld == "-":
                row.append(None)
                continue
            try:
                j, word = fld.split(":")
                row.append((int(j), parse_perm(word)))
            except ValueError as exc:
                raise MalformedGluing(f"line {lineno}: bad entry {fld!r}") from exc
        if i in rows:
            raise MalformedGluing(f"line {lineno}: tetrahedron {i} listed twice")
        rows[i] = row
    if sorted(rows) != list(range(len(rows))):
        raise MalformedGluing("tetrahedra must be numbered 0..t-1")
    return Triangulation([rows[i] for i in range(len(rows))])


def from_json(data: dict) -> Triangulation:
    rows = []
    for row in data["tetrahedra"]:
        rows.append([None if g is None else (g["tet"], parse_perm(g["perm"])) for g in row])
    return Triangulation(rows)


def load(path: str | Path) -> Triangulation:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        return from_json(json.loads(text))
    return parse(text)


def homology(tri: Triangulation, k: int, rel_boundary: bool = False) -> HomologyProfile:
    """Integral homology H_k(M) or H_k(M, dM) via Smith normal form."""
    g = tri.homology_group(k, rel_boundary)
    return HomologyProfile(
        degree=k,
        relative=rel_boundary,
        betti=g.betti,
        torsion=tuple(g.torsion),
        basis=tuple(tuple(v) for v in g.generators),
    )


def boundary_surface(tri: Triangulation) -> list[BoundaryComponent]:
    """Boundary components with their Euler characteristics.

    Real boundary components come from boundary triangles; each ideal vertex
    contributes its link as a cusp component.
    """
    comps: list[BoundaryComponent] = []
    bt = tri.boundary_triangles
    if bt:
        uf = _UnionFind()
        by_edge: dict[int, list] = {}
        for t, f in bt:
            uf.add((t, f))
            for a, b in EDGES:
                if f not in (a, b):
                    by_edge.setdefault(tri.edge_of(t, EDGE_INDEX[(a, b)]), []).append((t, f))
        for faces in by_edge.values():
            for x in faces[1:]:
                uf.union(faces[0], x)
        groups: dict = {}
        for x in bt:
            groups.setdefault(uf.find(x), []).append(x)
        for root in sorted(groups):
            faces = groups[root]
            edges = {e for e, fs in by_edge.items() if any(x in faces for x in fs)}
            verts = {tri.vertex_of(t, v) for t, f in faces for v in range(4) if v != f}
            comps.append(BoundaryComponent("real", len(verts) - len(edges) + len(faces), tuple(faces)))
    for v in tri.ideal_vertices:
        comps.append(BoundaryComponent("cusp", tri.vertex_links[v]["euler"], vertex=v))
    return comps


# the four sub-tetrahedra of a stellar subdivision: new vertex replaces
# vertex f of the old tetrahedron in sub-tetrahedron f
def stellar_subdivide(tri: Triangulation, targets: Iterable[int]) -> Triangulation:
    """Cone each target tetrahedron from a new interior vertex.

    Sub-tetrahedron ``f`` of a target keeps the old face ``f`` (with the same
    vertex labels) and has the new vertex in position ``f``.
    """
    tset = set(targets)
    if not tset:
        raise PreconditionError("stellar subdivision needs at least one target")
    if any(not 0 <= x < tri.size for x in tset):
        raise PreconditionError("target tetrahedron out of range")
    # new index of (old tet, face) piece
    index: dict[tuple[int, int], int] = {}
    n = 0
    for t in range(tri.size):
        if t in tset:
            for f in range(4):
                index[(t, f)] = n
                n += 1
        else:
            index[(t, -1)] = n
            n += 1

    def piece(t: int, f: int) -> int:
        return index[(t, f)] if t in tset else index[(t, -1)]

    rows: list[list[Gluing]] = [[None] * 4 for _ in range(n)]
    for t in range(tri.size):
        for f in range(4):
            g = tri.gluings[t][f]
            src = piece(t, f)
            if g is None:
                continue
            t2, p = g
            rows[src][f] = (piece(t2, p[f]), p)
        if t in tset:
            # internal faces: sub-tet f, face g (g != f) meets sub-tet g, face f
            for f in range(4):
                for h in range(4):
                    if h == f:
                        continue
                    swap = list(range(4))
                    swap[f], swap[h] = h, f
                    rows[index[(t, f)]][h] = (index[(t, h)], tuple(swap))
    return Triangulation(rows)


def disjoint_union(a: Triangulation, b: Triangulation) -> Triangulation:
    rows = [list(r) for r in a.gluings]
    off = a.size
    for row in b.gluings:
        rows.append([None if g is None else (g[0] + off, g[1]) for g in row])
    return Triangulation(rows)


def all_perms() -> list[Perm]:
    return list(permutations(range(4)))  # type: ignore[arg-type]
