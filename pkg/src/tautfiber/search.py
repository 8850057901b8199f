"""Search for a fibered class in a tower of finite abelian covers.

Start from a witness surface for a class, pinch it and read the guts.  A
product certificate ends the search.  Otherwise scan cyclic quotients of
``H_1/torsion``, lift the witness to each cover and look for a guts loop
that is no longer rationally null upstairs.  Such a cover is promising: the
lifted witness cannot be taut there, so perturbing the pulled-back class
may shrink the guts.  A step is accepted only when the guts complexity
strictly drops, so the number of accepted steps is bounded by the initial
complexity.

Positive answers carry a certificate that :func:`replay` rechecks from
scratch.  Negative answers only mean nothing was found within budget.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Callable, Iterable, Optional, Sequence

from . import branched as B
from . import covers as C
from .errors import NoProgress, NoRepresentativeFound, PreconditionError, TautFiberError
from .norm import DEFAULT_DEPTH, TautCandidate, ranked_candidates
from .normal import NormalCoordinates, class_coordinates, class_cocycle, surface_topology
from .triangulation import Triangulation, boundary_surface, from_json

log = logging.getLogger(__name__)

FIBERED = "fibered"
NOT_DETECTED = "not_detected"
BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass
class Witness:
    """An oriented surface together with its pinched model and guts."""

    coords: NormalCoordinates
    signs: dict
    model: B.BranchedSurfaceModel
    guts: B.GutsDecomposition
    killing: list[bool]
    candidate: Optional[TautCandidate] = None
    demoted: list[TautCandidate] = field(default_factory=list)
    _product: Optional[list] = field(default=None, repr=False)

    @property
    def complexity(self) -> int:
        return self.guts.complexity

    @property
    def kills(self) -> bool:
        return all(self.killing)

    def certificates(self, tri: Triangulation) -> list[B.ProductCertificate]:
        if self._product is None:
            self._product = [B.certify_product(tri, self.model, q) for q in self.guts.components]
        return self._product

    def fibered(self, tri: Triangulation) -> bool:
        return all(c.fibered for c in self.certificates(tri))

    def to_json(self) -> dict:
        return {
            "coords": list(self.coords),
            "signs": [[t, k, i, s] for (t, k, i), s in sorted(self.signs.items())],
            "complexity": self.complexity,
            "killing": list(self.killing),
            "guts": self.guts.to_json(),
            "candidate": self.candidate.to_json() if self.candidate else None,
            "demoted": [c.to_json() for c in self.demoted],
        }


def witness_from_surface(tri: Triangulation, coords: Sequence[int], signs: Optional[dict] = None) -> Witness:
    """Pinch an explicit oriented surface (canonical orientation by default)."""
    coords = NormalCoordinates(coords)
    if signs is None:
        signs = surface_topology(tri, coords).disk_signs
    model = B.pinch(tri, coords, signs)
    g = B.guts(tri, model)
    return Witness(coords, dict(signs), model, g, B.check_killing(tri, g))


def surface_class(tri: Triangulation, coords: Sequence[int], signs: dict) -> tuple[int, ...]:
    return class_coordinates(tri, class_cocycle(tri, coords, signs))


def select_witness(
    tri: Triangulation, z: Sequence[int], depth: int = DEFAULT_DEPTH, keep: int = 8
) -> Witness:
    """Best candidate for ``z`` whose guts pass the killing check.

    Candidates are tried best first; one whose guts carry a loop that
    survives in ``H_1(M)/torsion`` cannot be taut and is demoted.
    """
    z = tuple(int(v) for v in z)
    if not any(z):
        raise PreconditionError("the zero class has no witness to pinch")
    demoted = []
    for cand in ranked_candidates(tri, z, depth, keep=keep):
        if cand.verdict == "not_taut":
            demoted.append(cand)
            continue
        w = witness_from_surface(tri, cand.coords, cand.disk_signs(tri))
        if not w.kills:
            log.info("demoting witness for %s: guts loop survives in homology", z)
            demoted.append(cand.with_verdict("not_taut"))
            continue
        w.candidate = cand
        w.demoted = demoted
        return w
    raise NoRepresentativeFound(f"every candidate for {z} at depth {depth} was demoted")


def classify_class(tri: Triangulation, z: Sequence[int], depth: int = DEFAULT_DEPTH) -> str:
    """'fibered' when the selected witness carries a product certificate."""
    try:
        w = select_witness(tri, z, depth)
    except NoRepresentativeFound:
        return NOT_DETECTED
    return FIBERED if w.fibered(tri) else NOT_DETECTED


# -- state --------------------------------------------------------------------


@dataclass
class SearchState:
    base: Triangulation
    z: tuple[int, ...]
    witness: Witness
    covers: list[C.CoveringTriangulation] = field(default_factory=list)
    history: list[dict] = field(default_factory=list)
    rejected: list[dict] = field(default_factory=list)

    @property
    def triangulation(self) -> Triangulation:
        return self.covers[-1].triangulation if self.covers else self.base

    @property
    def stage(self) -> int:
        return len(self.covers)

    @property
    def complexity(self) -> int:
        return self.witness.complexity

    def accept(self, cover: C.CoveringTriangulation, z: tuple[int, ...], witness: Witness) -> None:
        if not cover.is_covering():
            raise TautFiberError("stage is not a covering of the previous one")
        if witness.complexity >= self.complexity:
            raise NoProgress(f"complexity {witness.complexity} does not improve on {self.complexity}")
        self.covers.append(cover)
        self.z = z
        self.witness = witness
        self.history.append(
            {"stage": self.stage, "cover": cover.spec.to_json(), "class": list(z), "complexity": witness.complexity}
        )

    def accepted_complexities(self) -> list[int]:
        return [h["complexity"] for h in self.history]

    def to_json(self) -> dict:
        return {
            "stage": self.stage,
            "class": list(self.z),
            "complexity": self.complexity,
            "history": self.history,
            "rejected": self.rejected,
            "tower": [c.spec.to_json() for c in self.covers],
            "stage_sizes": [self.base.size] + [c.triangulation.size for c in self.covers],
        }


@dataclass
class Verdict:
    kind: str  # fibered | not_detected | budget_exhausted
    stage: int
    reason: str
    state: SearchState
    certificate: Optional[dict] = None

    @property
    def fibered(self) -> bool:
        return self.kind == FIBERED

    def to_json(self) -> dict:
        return {
            "verdict": self.kind,
            "stage": self.stage,
            "reason": self.reason,
            "state": self.state.to_json(),
            "witness": self.state.witness.to_json(),
            "certificate": self.certificate,
        }


def certificate(state: SearchState) -> dict:
    tri = state.triangulation
    w = state.witness
    return {
        "base": state.base.to_json(),
        "tower": [c.spec.to_json() for c in state.covers],
        "class": list(state.z),
        "surface": list(w.coords),
        "signs": [[t, k, i, s] for (t, k, i), s in sorted(w.signs.items())],
        "product": [c.to_json() for c in w.certificates(tri)],
    }


def replay(cert: dict) -> str:
    """Rebuild the tower and the pinched witness and rerun the product check."""
    tri = from_json(cert["base"])
    for spec in cert["tower"]:
        labels = {int(k): tuple(v) for k, v in spec["labels"].items()}
        cov = C.build_cover(tri, C.cover_spec_from_labels(tri, spec["factors"], labels))
        if not cov.is_covering():
            return NOT_DETECTED
        tri = cov.triangulation
    signs = {(t, k, i): s for t, k, i, s in cert["signs"]}
    coords = NormalCoordinates(cert["surface"])
    z = tuple(cert["class"])
    cls = surface_class(tri, coords, signs)
    if not _positive_multiple(cls, z):
        return NOT_DETECTED
    g = B.guts(tri, B.pinch(tri, coords, signs))
    return B.is_product_guts(tri, g)


def _positive_multiple(c: Sequence[int], z: Sequence[int]) -> bool:
    m = None
    for a, b in zip(c, z):
        if b == 0:
            if a:
                return False
            continue
        r = Fraction(a, b)
        if r <= 0 or (m is not None and r != m):
            return False
        m = r
    return m is not None


# -- descent ------------------------------------------------------------------


def _primitive(v: Sequence[int]) -> tuple[int, ...]:
    g = 0
    for x in v:
        g = gcd(g, x)
    return tuple(x // g for x in v) if g else tuple(v)


def _multiplicity(tri: Triangulation, w: Witness, z: Sequence[int]) -> Fraction:
    c = surface_class(tri, w.coords, w.signs)
    return next(Fraction(a, b) for a, b in zip(c, z) if b)


def _pulled_back(raw: Sequence[int], m: Fraction) -> tuple[int, ...]:
    """Pullback of the class from the lift of a surface representing m times it."""
    q = [Fraction(x) / m for x in raw]
    if all(v.denominator == 1 for v in q):
        return tuple(int(v) for v in q)
    return _primitive(raw)


def _perturbations(rank: int, radius: int) -> list[tuple[int, ...]]:
    vs = list(itertools.product(range(-radius, radius + 1), repeat=rank))
    return sorted(vs, key=lambda v: (max((abs(x) for x in v), default=0), v))


def _pmap(fn: Callable, items: Iterable, threads: int) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _lift(state: SearchState, spec: C.CoverSpec) -> tuple[C.CoveringTriangulation, Witness]:
    cover = C.build_cover(state.triangulation, spec)
    w = state.witness
    up = witness_from_surface(
        cover.triangulation, C.lift_surface(cover, w.coords), C.lift_signs(cover, w.signs)
    )
    return cover, up


def _best_perturbation(
    cover: C.CoveringTriangulation,
    base_class: tuple[int, ...],
    radius: int,
    depth: int,
    threads: int,
    max_scale: int = 3,
) -> Optional[tuple[tuple, tuple[int, ...], Witness]]:
    """Minimise guts complexity over classes n * base_class + g'."""
    up = cover.triangulation
    rank = len(base_class)

    def attempt(g):
        for n in range(1, max_scale + 1):
            z = tuple(n * a + b for a, b in zip(base_class, g))
            if not any(z):
                return None
            try:
                w = select_witness(up, z, depth)
            except (NoRepresentativeFound, TautFiberError):
                continue
            return (w.complexity, g), z, w
        return None

    found = [r for r in _pmap(attempt, _perturbations(rank, radius), threads) if r is not None]
    return min(found, key=lambda r: r[0]) if found else None


def descend_step(
    state: SearchState,
    nmax: int = 6,
    radius: int = 1,
    depth: int = DEFAULT_DEPTH,
    max_cover_tets: int = 20,
    threads: int = 1,
) -> "SearchState | Verdict":
    """One step of the descent; returns the new state or a final verdict."""
    tri = state.triangulation
    w = state.witness
    if not w.guts.components or w.fibered(tri):
        if w.candidate is not None:
            # a product certificate makes the norm bound exact on this cone
            w.candidate = w.candidate.with_verdict("taut")
        return Verdict(FIBERED, state.stage, "guts are a product", state, certificate(state))
    skipped = 0
    candidates = 0
    for n in range(2, nmax + 1):
        specs = C.free_quotient_specs(tri, n)
        if specs and tri.size * n > max_cover_tets:
            skipped += len(specs)
            continue
        for spec, (cover, lifted) in zip(specs, _pmap(lambda s: _lift(state, s), specs, threads)):
            if lifted.kills:
                continue
            candidates += 1
            up = cover.triangulation
            base_class = _pulled_back(
                surface_class(up, lifted.coords, lifted.signs), _multiplicity(tri, w, state.z)
            )
            best = _best_perturbation(cover, base_class, radius, depth, threads)
            entry = {"stage": state.stage, "cover": spec.to_json(), "lifted_complexity": lifted.complexity}
            if best is None:
                entry["reason"] = "no perturbed class has a witness"
                state.rejected.append(entry)
                continue
            (cx, g), z, nw = best
            entry.update({"class": list(z), "complexity": cx})
            if cx >= state.complexity:
                entry["reason"] = f"NoProgress: {cx} >= {state.complexity}"
                entry["fibered_upstairs"] = nw.fibered(up)
                state.rejected.append(entry)
                continue
            state.accept(cover, z, nw)
            return state
    if candidates:
        reason = f"{candidates} promising quotients up to Z/{nmax}, none decreased complexity"
    elif skipped:
        reason = f"no promising quotient; {skipped} quotients exceeded {max_cover_tets} tetrahedra"
    else:
        reason = f"no quotient up to Z/{nmax} exposes a surviving guts loop"
    return Verdict(NOT_DETECTED, state.stage, reason, state)


def chi_zero(tri: Triangulation) -> bool:
    """Closed, or every boundary component a torus."""
    return all(c.euler == 0 for c in boundary_surface(tri))


def run(
    tri: Triangulation,
    z: Sequence[int],
    max_stages: int = 3,
    depth: int = DEFAULT_DEPTH,
    nmax: int = 6,
    radius: int = 1,
    max_cover_tets: int = 20,
    threads: int = 1,
    surface: Optional[Sequence[int]] = None,
    signs: Optional[dict] = None,
) -> Verdict:
    """Descend until the witness guts are a product or the budget runs out.

    ``surface`` (with optional ``signs``) replaces the selected witness at
    stage 0; it must represent a positive multiple of ``z``.
    """
    if not chi_zero(tri):
        raise PreconditionError("boundary has a component that is not a torus")
    z = tuple(int(v) for v in z)
    if not any(z):
        raise PreconditionError("the zero class has no witness to pinch")
    if surface is None:
        w = select_witness(tri, z, depth)
    else:
        w = witness_from_surface(tri, surface, signs)
        if not _positive_multiple(surface_class(tri, w.coords, w.signs), z):
            raise PreconditionError("surface does not represent a positive multiple of the class")
    state = SearchState(tri, z, w)
    state.history.append({"stage": 0, "cover": None, "class": list(z), "complexity": w.complexity})
    while True:
        if state.stage >= max_stages and w.guts.components and not w.fibered(state.triangulation):
            return Verdict(BUDGET_EXHAUSTED, state.stage, f"stopped after {max_stages} stages", state)
        out = descend_step(state, nmax, radius, depth, max_cover_tets, threads)
        if isinstance(out, Verdict):
            return out
        state = out
        w = state.witness


def strictly_descending(history: Sequence[dict]) -> bool:
    """The invariant over a logged run: complexities strictly drop."""
    cx = [h["complexity"] for h in history]
    return all(a > b for a, b in zip(cx, cx[1:])) and len(cx) - 1 <= (cx[0] if cx else 0)
