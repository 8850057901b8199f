"""Words, finite presentations, Tietze elimination and Stallings folding.

A word is a tuple of nonzero ints: ``i`` stands for generator ``i - 1`` and
``-i`` for its inverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import linalg

Word = tuple[int, ...]


def free_reduce(w: Iterable[int]) -> Word:
    out: list[int] = []
    for x in w:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def cyclic_reduce(w: Iterable[int]) -> Word:
    w = list(free_reduce(w))
    i, j = 0, len(w) - 1
    while i < j and w[i] == -w[j]:
        i += 1
        j -= 1
    return tuple(w[i : j + 1])


def inverse(w: Sequence[int]) -> Word:
    return tuple(-x for x in reversed(w))


def exponent_sums(w: Sequence[int], n: int) -> list[int]:
    v = [0] * n
    for x in w:
        v[abs(x) - 1] += 1 if x > 0 else -1
    return v


@dataclass
class Presentation:
    num_generators: int
    relators: list[Word]
    names: list[str] = field(default_factory=list)

    def relation_matrix(self) -> linalg.Matrix:
        """Rows are relators, columns generators (exponent sums)."""
        return [exponent_sums(r, self.num_generators) for r in self.relators]

    def abelianization(self) -> tuple[int, list[int]]:
        """(free rank, torsion invariant factors)."""
        n = self.num_generators
        if n == 0:
            return 0, []
        rows = self.relation_matrix()
        if not rows:
            return n, []
        sf = linalg.smith_normal_form(rows, len(rows), n)
        torsion = [d for d in sf.diagonal if d > 1]
        return n - sf.rank, torsion


def substitute(w: Sequence[int], gen: int, image: Sequence[int]) -> Word:
    """Replace generator ``gen`` (1-based) by ``image`` in ``w``."""
    inv = inverse(image)
    out: list[int] = []
    for x in w:
        if x == gen:
            out.extend(image)
        elif x == -gen:
            out.extend(inv)
        else:
            out.append(x)
    return free_reduce(out)


@dataclass
class TietzeResult:
    generators: list[int]  # surviving original generators (1-based)
    relators: list[Word]  # over the surviving generators, renumbered 1..r
    tracked: list[Word]  # tracked words, renumbered

    @property
    def is_free(self) -> bool:
        return not self.relators

    @property
    def rank(self) -> int:
        return len(self.generators)


def tietze_eliminate(
    num_generators: int,
    relators: Iterable[Sequence[int]],
    tracked: Iterable[Sequence[int]] = (),
    max_length: int = 200_000,
) -> TietzeResult:
    """Eliminate generators that occur exactly once in some relator.

    Deterministic: shortest such relator first, then smallest generator.
    Stops when no relator offers a free generator or words grow beyond
    ``max_length``.
    """
    rels = [cyclic_reduce(r) for r in relators]
    rels = [r for r in rels if r]
    words = [free_reduce(w) for w in tracked]
    alive = set(range(1, num_generators + 1))
    while rels:
        pick = None
        for idx, r in sorted(enumerate(rels), key=lambda p: (len(p[1]), p[0])):
            counts: dict[int, int] = {}
            for x in r:
                counts[abs(x)] = counts.get(abs(x), 0) + 1
            once = sorted(g for g, c in counts.items() if c == 1)
            if once:
                pick = (idx, once[0])
                break
        if pick is None:
            break
        idx, g = pick
        r = rels.pop(idx)
        k = next(i for i, x in enumerate(r) if abs(x) == g)
        rot = r[k + 1 :] + r[:k]  # r ~ g^e * rot
        e = r[k]
        # g^e rot = 1  =>  g^e = rot^-1
        image = inverse(rot) if e > 0 else tuple(rot)
        rels = [cyclic_reduce(substitute(x, g, image)) for x in rels]
        rels = [x for x in rels if x]
        words = [substitute(w, g, image) for w in words]
        alive.discard(g)
        if any(len(x) > max_length for x in rels) or any(len(w) > max_length for w in words):
            break
    order = sorted(alive)
    renum = {g: i + 1 for i, g in enumerate(order)}

    def rn(w: Sequence[int]) -> Word:
        return tuple(renum[abs(x)] * (1 if x > 0 else -1) for x in w)

    # dedupe relators up to cyclic rotation and inversion is not needed for correctness
    return TietzeResult(order, [rn(r) for r in rels], [rn(w) for w in words])


class _Folder:
    """Stallings folding of a based graph labelled by free generators."""

    def __init__(self):
        self.parent: list[int] = [0]
        self.out: list[dict[int, int]] = [{}]

    def find(self, v: int) -> int:
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def new(self) -> int:
        self.parent.append(len(self.parent))
        self.out.append({})
        return len(self.parent) - 1

    def add_edge(self, u: int, label: int, v: int) -> None:
        pending = [(u, label, v)]
        while pending:
            u, label, v = pending.pop()
            u, v = self.find(u), self.find(v)
            for a, lab, b in ((u, label, v), (v, -label, u)):
                a, b = self.find(a), self.find(b)
                tgt = self.out[a].get(lab)
                if tgt is None:
                    self.out[a][lab] = b
                else:
                    tgt = self.find(tgt)
                    if tgt != b:
                        self._merge(tgt, b, pending)

    def _merge(self, a: int, b: int, pending: list) -> None:
        a, b = self.find(a), self.find(b)
        if a == b:
            return
        if b < a:
            a, b = b, a
        self.parent[b] = a
        for lab, tgt in self.out[b].items():
            pending.append((a, lab, tgt))
        self.out[b] = {}

    def add_loop(self, word: Sequence[int]) -> None:
        cur = 0
        for i, x in enumerate(word):
            nxt = 0 if i == len(word) - 1 else self.new()
            self.add_edge(cur, x, nxt)
            cur = nxt

    def vertices(self) -> set[int]:
        return {self.find(v) for v in range(len(self.parent))}


def generates_free_group(words: Iterable[Sequence[int]], rank: int) -> bool:
    """Do the words generate the whole free group of the given rank?

    Folds the wedge of loops spelled by the words; the subgroup is everything
    exactly when the folded graph is a single vertex carrying every label.
    """
    f = _Folder()
    for w in words:
        w = free_reduce(w)
        if w:
            f.add_loop(w)
    if rank == 0:
        return True
    verts = f.vertices()
    # discard vertices not reachable by reduced paths back to the base is
    # unnecessary: every vertex lies on a loop through the base
    if len(verts) != 1:
        return False
    labels = {abs(k) for k in f.out[f.find(0)]}
    return labels == set(range(1, rank + 1))
