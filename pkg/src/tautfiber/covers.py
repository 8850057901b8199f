"""Fundamental groups from the dual spine and finite abelian covers.

A cover is described by labelling every interior triangle with an element
of a finite abelian group ``A``; crossing the triangle from its
representative side adds the label.  Tetrahedra upstairs are pairs
``(t, a)`` stored at index ``t * |A| + index(a)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence

from . import groups, linalg
from .errors import Disconnected, IllDefinedOnRelators, PreconditionError
from .normal import NormalCoordinates
from .triangulation import Triangulation

Element = tuple[int, ...]


@dataclass(frozen=True)
class FundamentalPresentation:
    basepoint: int
    tree: frozenset[int]  # triangle classes in the spanning tree
    generators: tuple[int, ...]  # triangle class of each generator
    relators: tuple[groups.Word, ...]

    @property
    def num_generators(self) -> int:
        return len(self.generators)

    def presentation(self) -> groups.Presentation:
        return groups.Presentation(
            self.num_generators, list(self.relators), [f"g{k}" for k in self.generators]
        )

    def abelianization(self) -> tuple[int, list[int]]:
        return self.presentation().abelianization()


def _exit_word(tri: Triangulation, gen_of: dict, exits: Iterable[tuple[int, int]]) -> groups.Word:
    w = []
    for t, f in exits:
        k = tri.triangle_of(t, f)
        g = gen_of.get(k)
        if g is None:
            continue
        w.append(g if tri.triangles[k][0] == (t, f) else -g)
    return groups.free_reduce(w)


def presentation(tri: Triangulation) -> FundamentalPresentation:
    """Generators are interior triangles off a BFS spanning tree; relators are edge cycles."""
    if not tri.is_connected:
        raise Disconnected("triangulation is not connected")
    seen = {0}
    tree = set()
    order = [0]
    for t in order:
        for f in range(4):
            g = tri.gluings[t][f]
            if g is None:
                continue
            t2 = g[0]
            if t2 not in seen:
                seen.add(t2)
                order.append(t2)
                tree.add(tri.triangle_of(t, f))
    gens = tuple(k for k in tri.interior_triangles if k not in tree)
    gen_of = {k: i + 1 for i, k in enumerate(gens)}
    rels = []
    for e in tri.interior_edges:
        exits = [(t, d) for t, (a, b, c, d) in tri.edge_walk(e)]
        rels.append(_exit_word(tri, gen_of, exits))
    return FundamentalPresentation(0, frozenset(tree), gens, tuple(rels))


def _elements(factors: Sequence[int]) -> list[Element]:
    return [tuple(e) for e in itertools.product(*(range(n) for n in factors))]


def _add(a: Element, b: Element, factors: Sequence[int]) -> Element:
    return tuple((x + y) % n for x, y, n in zip(a, b, factors))


def _neg(a: Element, factors: Sequence[int]) -> Element:
    return tuple((-x) % n for x, n in zip(a, factors))


@dataclass(frozen=True)
class CoverSpec:
    factors: tuple[int, ...]
    assignment: tuple[Element, ...]  # image of each presentation generator
    labels: tuple[tuple[int, Element], ...]  # (triangle class, element); tree triangles map to 0

    @property
    def order(self) -> int:
        out = 1
        for n in self.factors:
            out *= n
        return out

    def label(self, tri: Triangulation, t: int, f: int) -> Element:
        """Group element added when leaving tetrahedron t through face f."""
        k = tri.triangle_of(t, f)
        lab = dict(self.labels).get(k, tuple(0 for _ in self.factors))
        if tri.triangles[k][0] == (t, f):
            return lab
        return _neg(lab, self.factors)

    def evaluate(self, tri: Triangulation, exits: Iterable[tuple[int, int]]) -> Element:
        acc = tuple(0 for _ in self.factors)
        for t, f in exits:
            acc = _add(acc, self.label(tri, t, f), self.factors)
        return acc

    def to_json(self) -> dict:
        return {
            "factors": list(self.factors),
            "assignment": [list(a) for a in self.assignment],
            "labels": {str(k): list(e) for k, e in self.labels},
        }


def cover_spec(
    tri: Triangulation,
    factors: Sequence[int],
    assignment: Sequence[Sequence[int]],
    pres: Optional[FundamentalPresentation] = None,
) -> CoverSpec:
    """Validate a homomorphism from the presentation to ``A``."""
    factors = tuple(int(n) for n in factors)
    if not factors or any(n < 2 for n in factors):
        raise PreconditionError("the quotient group must be nontrivial and finite")
    pres = pres or presentation(tri)
    if len(assignment) != pres.num_generators:
        raise PreconditionError(f"need an image for each of {pres.num_generators} generators")
    assign = tuple(tuple(int(v) % n for v, n in zip(a, factors)) for a in assignment)
    for r in pres.relators:
        acc = tuple(0 for _ in factors)
        for x in r:
            el = assign[abs(x) - 1]
            acc = _add(acc, el if x > 0 else _neg(el, factors), factors)
        if any(acc):
            raise IllDefinedOnRelators(f"relator {r} maps to {acc}")
    labels = tuple((k, assign[i]) for i, k in enumerate(pres.generators))
    return CoverSpec(factors, assign, labels)


def cover_spec_from_labels(tri: Triangulation, factors: Sequence[int], labels: dict) -> CoverSpec:
    """Spec from arbitrary triangle labels (need not vanish on the tree)."""
    factors = tuple(factors)
    zero = tuple(0 for _ in factors)
    norm = {k: tuple(int(v) % n for v, n in zip(labels.get(k, zero), factors)) for k in tri.interior_triangles}
    for e in tri.interior_edges:
        acc = zero
        for t, (a, b, c, d) in tri.edge_walk(e):
            k = tri.triangle_of(t, d)
            lab = norm[k] if tri.triangles[k][0] == (t, d) else _neg(norm[k], factors)
            acc = _add(acc, lab, factors)
        if any(acc):
            raise IllDefinedOnRelators(f"edge {e} cycle maps to {acc}")
    pres = presentation(tri)
    assign = tuple(norm[k] for k in pres.generators)
    return CoverSpec(factors, assign, tuple(sorted(norm.items())))


@dataclass
class CoveringTriangulation:
    base: Triangulation
    spec: CoverSpec
    triangulation: Triangulation
    elements: list[Element]

    @property
    def degree(self) -> int:
        return len(self.elements)

    def index(self, t: int, a: Element) -> int:
        return t * self.degree + self._elt_index[a]

    @cached_property
    def _elt_index(self) -> dict:
        return {a: i for i, a in enumerate(self.elements)}

    def projection(self, i: int) -> int:
        return i // self.degree

    def element(self, i: int) -> Element:
        return self.elements[i % self.degree]

    def deck(self, g: Element, i: int) -> int:
        return self.index(self.projection(i), _add(self.element(i), g, self.spec.factors))

    def is_covering(self) -> bool:
        """Gluings project to gluings and commute with the deck action."""
        up, down = self.triangulation, self.base
        for i in range(up.size):
            t = self.projection(i)
            for f in range(4):
                gu, gd = up.gluings[i][f], down.gluings[t][f]
                if (gu is None) != (gd is None):
                    return False
                if gu is None:
                    continue
                if self.projection(gu[0]) != gd[0] or tuple(gu[1]) != tuple(gd[1]):
                    return False
                for g in self.elements:
                    j = self.deck(g, i)
                    gj = up.gluings[j][f]
                    if gj[0] != self.deck(g, gu[0]):
                        return False
        return True

    def fiber(self, t: int) -> list[int]:
        return [self.index(t, a) for a in self.elements]

    def is_connected(self) -> bool:
        return self.triangulation.is_connected


def build_cover(tri: Triangulation, spec: CoverSpec) -> CoveringTriangulation:
    """The |A|-sheeted cover determined by the triangle labels."""
    if spec.order < 2:
        raise PreconditionError("the quotient group must be nontrivial")
    for e in tri.interior_edges:
        exits = [(t, d) for t, (a, b, c, d) in tri.edge_walk(e)]
        if any(spec.evaluate(tri, exits)):
            raise IllDefinedOnRelators(f"edge {e} cycle does not vanish")
    elements = _elements(spec.factors)
    pos = {a: i for i, a in enumerate(elements)}
    n = len(elements)
    glue = []
    for t in range(tri.size):
        for a in elements:
            row = []
            for f in range(4):
                g = tri.gluings[t][f]
                if g is None:
                    row.append(None)
                    continue
                t2, p = g
                b = _add(a, spec.label(tri, t, f), spec.factors)
                row.append((t2 * n + pos[b], p))
            glue.append(row)
    return CoveringTriangulation(tri, spec, Triangulation(glue), elements)


def lift_surface(cover: CoveringTriangulation, x: Sequence[int]) -> NormalCoordinates:
    base = cover.base
    if len(x) != 7 * base.size:
        raise PreconditionError("surface does not live on the base triangulation")
    out = []
    for t in range(base.size):
        for _ in cover.elements:
            out.extend(x[7 * t : 7 * t + 7])
    return NormalCoordinates(out)


def lift_signs(cover: CoveringTriangulation, signs: dict) -> dict:
    """Transverse signs of lifted disk copies."""
    out = {}
    for (t, k, i), s in signs.items():
        for a in cover.elements:
            out[(cover.index(t, a), k, i)] = s
    return out


def lift_cocycle(cover: CoveringTriangulation, cocycle: Sequence[int]) -> list[int]:
    """Pull back a cocycle on base interior triangles."""
    base, up = cover.base, cover.triangulation
    col = {k: i for i, k in enumerate(base.interior_triangles)}
    out = []
    for k in up.interior_triangles:
        (i, f), _ = up.triangles[k]
        t = cover.projection(i)
        kb = base.triangle_of(t, f)
        v = cocycle[col[kb]]
        out.append(v if base.triangles[kb][0] == (t, f) else -v)
    return out


def lifts_trivially(tri: Triangulation, spec: CoverSpec, loops: Iterable[Sequence[tuple[int, int]]]) -> bool:
    """Do all the given dual loops map to zero in A?"""
    return all(not any(spec.evaluate(tri, loop)) for loop in loops)


def _gf2_nullspace(rows: list[list[int]], n: int) -> list[list[int]]:
    m = [[v & 1 for v in r] for r in rows]
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        for i in range(len(m)):
            if i != r and m[i][c]:
                m[i] = [x ^ y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [0] * n
        v[fc] = 1
        for i, pc in enumerate(pivots):
            v[pc] = m[i][fc]
        basis.append(v)
    return basis


def z2_quotients(tri: Triangulation) -> list[CoverSpec]:
    """Every surjection H_1(M) -> Z/2, as cover specs (deterministic order)."""
    pres = presentation(tri)
    n = pres.num_generators
    rows = pres.presentation().relation_matrix()
    basis = _gf2_nullspace(rows, n) if n else []
    out = []
    for coeffs in itertools.product((0, 1), repeat=len(basis)):
        if not any(coeffs):
            continue
        v = [0] * n
        for c, b in zip(coeffs, basis):
            if c:
                v = [x ^ y for x, y in zip(v, b)]
        out.append(cover_spec(tri, (2,), [(x,) for x in v], pres))
    return out


def generator_loops(tri: Triangulation, pres: Optional[FundamentalPresentation] = None) -> list[list[tuple[int, int]]]:
    """Dual loop (list of exits) for each presentation generator."""
    pres = pres or presentation(tri)
    parent: dict = {pres.basepoint: None}
    order = [pres.basepoint]
    for t in order:
        for f in range(4):
            g = tri.gluings[t][f]
            if g is None or tri.triangle_of(t, f) not in pres.tree:
                continue
            t2 = g[0]
            if t2 not in parent:
                parent[t2] = (t, f)
                order.append(t2)

    def path(t):
        out = []
        while parent[t] is not None:
            out.append(parent[t])
            t = parent[t][0]
        return list(reversed(out))

    loops = []
    for k in pres.generators:
        (t, f), (t2, f2) = tri.triangles[k]
        back = [(tt, ff) for tt, ff in reversed(path(t2))]
        back = [(tri.gluings[tt][ff][0], tri.gluings[tt][ff][1][ff]) for tt, ff in back]
        loops.append(path(t) + [(t, f)] + back)
    return loops


def free_quotient_specs(tri: Triangulation, n: int, limit: int = 64) -> list[CoverSpec]:
    """Maps H_1(M)/torsion -> Z/n given by coefficient vectors, first nonzero entry 1."""
    grp = tri.homology_group(1)
    b = grp.betti
    if b == 0 or n < 2:
        return []
    pres = presentation(tri)
    loops = generator_loops(tri, pres)
    coords = [grp.free_coordinates(tri.dual_loop_chain(loop)) for loop in loops]
    out = []
    for c in itertools.product(range(n), repeat=b):
        nz = [v for v in c if v]
        if not nz or nz[0] != 1:
            continue
        assign = [(sum(ci * xi for ci, xi in zip(c, x)) % n,) for x in coords]
        out.append(cover_spec(tri, (n,), assign, pres))
        if len(out) >= limit:
            break
    return out


def quotient_group_orders(spec: CoverSpec) -> int:
    return spec.order


def homology_rank_upstairs(cover: CoveringTriangulation) -> int:
    return cover.triangulation.homology_group(1).betti


def triangle_labels_from_cochain(tri: Triangulation, values: Sequence[int], n: int) -> dict:
    """Labels in Z/n from an integer 1-cochain on interior triangles."""
    return {k: (values[i] % n,) for i, k in enumerate(tri.interior_triangles)}


def abelianization_matches(tri: Triangulation) -> bool:
    """Cross-check: abelianized presentation equals H_1 from the chain complex."""
    rank, torsion = presentation(tri).abelianization()
    grp = tri.homology_group(1)
    return rank == grp.betti and sorted(torsion) == sorted(grp.torsion)


def pullback_class(cover: CoveringTriangulation, cocycle: Sequence[int]) -> tuple[int, ...]:
    up = cover.triangulation
    return tuple(up.cohomology_group(1).free_coordinates(lift_cocycle(cover, cocycle)))


__all__ = [
    "FundamentalPresentation",
    "CoverSpec",
    "CoveringTriangulation",
    "presentation",
    "cover_spec",
    "cover_spec_from_labels",
    "build_cover",
    "lift_surface",
    "lift_signs",
    "lift_cocycle",
    "lifts_trivially",
    "z2_quotients",
    "free_quotient_specs",
    "generator_loops",
    "abelianization_matches",
    "pullback_class",
]
