"""Exact integer and rational linear algebra.

Matrices are plain lists of rows of Python ints (or Fractions where noted).
Everything here is exact; nothing touches floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Sequence

Matrix = list[list[int]]


def zeros(rows: int, cols: int) -> Matrix:
    return [[0] * cols for _ in range(rows)]


def identity(n: int) -> Matrix:
    m = zeros(n, n)
    for i in range(n):
        m[i][i] = 1
    return m


def transpose(a: Matrix, rows: int | None = None, cols: int | None = None) -> Matrix:
    if rows is None:
        rows = len(a)
    if cols is None:
        cols = len(a[0]) if a else 0
    return [[a[i][j] for i in range(rows)] for j in range(cols)]


def matmul(a: Matrix, b: Matrix, inner: int | None = None, cols: int | None = None) -> Matrix:
    if inner is None:
        inner = len(b)
    if cols is None:
        cols = len(b[0]) if b else 0
    out = []
    for row in a:
        nz = [(k, v) for k, v in enumerate(row) if v]
        acc = [0] * cols
        for k, v in nz:
            brow = b[k]
            for j in range(cols):
                if brow[j]:
                    acc[j] += v * brow[j]
        out.append(acc)
    return out


def matvec(a: Matrix, v: Sequence[int]) -> list[int]:
    return [sum(x * y for x, y in zip(row, v) if x) for row in a]


def is_zero(a: Matrix) -> bool:
    return all(not x for row in a for x in row)


def primitive(v: Sequence[int]) -> tuple[int, ...]:
    """Divide an integer vector by the gcd of its entries."""
    g = 0
    for x in v:
        g = gcd(g, x)
    if g <= 1:
        return tuple(v)
    return tuple(x // g for x in v)


def rank(a: Sequence[Sequence[int | Fraction]]) -> int:
    """Rank over Q by fraction-free Gaussian elimination."""
    rows = [list(r) for r in a if any(r)]
    if not rows:
        return 0
    ncols = len(rows[0])
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        p = rows[r]
        for i in range(r + 1, len(rows)):
            f = rows[i][c]
            if f:
                rows[i] = [p[c] * x - f * y for x, y in zip(rows[i], p)]
                g = 0
                for x in rows[i]:
                    g = gcd(g, x) if isinstance(x, int) else 1
                if g > 1:
                    rows[i] = [x // g for x in rows[i]]
        r += 1
        if r == len(rows):
            break
    return r


def solve_rational(a: Matrix, b: Sequence[int]) -> list[Fraction] | None:
    """One solution of a x = b over Q, or None if inconsistent."""
    m = len(a)
    n = len(a[0]) if m else 0
    aug = [[Fraction(x) for x in a[i]] + [Fraction(b[i])] for i in range(m)]
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if aug[i][c]), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = 1 / aug[r][c]
        aug[r] = [x * inv for x in aug[r]]
        for i in range(m):
            if i != r and aug[i][c]:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
    if any(aug[i][n] for i in range(r, m)):
        return None
    x = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        x[c] = aug[i][n]
    return x


@dataclass
class SmithForm:
    """U @ A @ V == D with U, V unimodular; inverses kept alongside."""

    diagonal: list[int]
    U: Matrix
    U_inv: Matrix
    V: Matrix
    V_inv: Matrix

    @property
    def rank(self) -> int:
        return len(self.diagonal)


def smith_normal_form(a: Matrix, rows: int | None = None, cols: int | None = None) -> SmithForm:
    """Smith normal form of an integer matrix.

    Returns the nonzero invariant factors (each dividing the next) together
    with the row and column transforms and their inverses.
    """
    m = len(a) if rows is None else rows
    n = (len(a[0]) if a else 0) if cols is None else cols
    A = [list(r) for r in a]
    U, Ui, V, Vi = identity(m), identity(m), identity(n), identity(n)

    def row_add(dst, src, k):  # row_dst += k * row_src
        if not k:
            return
        A[dst] = [x + k * y for x, y in zip(A[dst], A[src])]
        U[dst] = [x + k * y for x, y in zip(U[dst], U[src])]
        for r in Ui:  # Ui <- Ui R^{-1}: col_src -= k * col_dst
            r[src] -= k * r[dst]

    def row_swap(i, j):
        if i == j:
            return
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]
        for r in Ui:
            r[i], r[j] = r[j], r[i]

    def row_neg(i):
        A[i] = [-x for x in A[i]]
        U[i] = [-x for x in U[i]]
        for r in Ui:
            r[i] = -r[i]

    def col_add(dst, src, k):  # col_dst += k * col_src
        if not k:
            return
        for r in A:
            r[dst] += k * r[src]
        for r in V:
            r[dst] += k * r[src]
        Vi[src] = [x - k * y for x, y in zip(Vi[src], Vi[dst])]

    def col_swap(i, j):
        if i == j:
            return
        for r in A:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]
        Vi[i], Vi[j] = Vi[j], Vi[i]

    diag: list[int] = []
    t = 0
    while t < min(m, n):
        # smallest nonzero entry in the remaining block
        best = None
        for i in range(t, m):
            row = A[i]
            for j in range(t, n):
                x = row[j]
                if x and (best is None or abs(x) < best[0]):
                    best = (abs(x), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        row_swap(t, i)
        col_swap(t, j)
        while True:
            done = True
            p = A[t][t]
            for i in range(t + 1, m):
                if A[i][t]:
                    row_add(i, t, -(A[i][t] // p))
                    if A[i][t]:
                        done = False
            for j in range(t + 1, n):
                if A[t][j]:
                    col_add(j, t, -(A[t][j] // p))
                    if A[t][j]:
                        done = False
            if not done:
                # move a smaller remainder into pivot position and retry
                best = None
                for i in range(t, m):
                    if A[i][t] and (best is None or abs(A[i][t]) < best[0]):
                        best = (abs(A[i][t]), i, t)
                for j in range(t, n):
                    if A[t][j] and (best is None or abs(A[t][j]) < best[0]):
                        best = (abs(A[t][j]), t, j)
                _, i, j = best
                row_swap(t, i)
                col_swap(t, j)
                continue
            # divisibility of the remaining block
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if A[i][j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            row_add(t, bad, 1)
        if A[t][t] < 0:
            row_neg(t)
        diag.append(A[t][t])
        t += 1
    return SmithForm(diag, U, Ui, V, Vi)


@dataclass
class HomologyGroup:
    """ker(d_out) / im(d_in) with explicit generators.

    ``generators[i]`` is a cycle (vector in the chain group) whose class has
    order ``orders[i]`` (0 means infinite order).  Classes of order one are
    dropped.
    """

    dim: int
    betti: int
    torsion: list[int]
    generators: list[list[int]]
    orders: list[int]
    _V_inv_kernel: Matrix = field(repr=False, default_factory=list)
    _P: Matrix = field(repr=False, default_factory=list)
    _offset: int = field(repr=False, default=0)
    _trivial: int = field(repr=False, default=0)

    @property
    def free_generators(self) -> list[list[int]]:
        return [g for g, o in zip(self.generators, self.orders) if o == 0]

    def coordinates(self, cycle: Sequence[int]) -> list[int]:
        """Coordinates of a cycle against ``generators``.

        Torsion coordinates are reduced modulo their order.  The caller must
        pass a genuine cycle.
        """
        y = matvec(self._V_inv_kernel, cycle)
        c = matvec(self._P, y) if self._P else y
        out = []
        for k, o in enumerate(self.orders):
            v = c[self._trivial + k]
            out.append(v % o if o else v)
        return out

    def free_coordinates(self, cycle: Sequence[int]) -> list[int]:
        coords = self.coordinates(cycle)
        return [v for v, o in zip(coords, self.orders) if o == 0]


def homology(d_out: Matrix, d_in: Matrix, dim: int, out_rows: int, in_cols: int) -> HomologyGroup:
    """Homology at a chain group of rank ``dim``.

    ``d_out`` maps C_k -> C_{k-1} (out_rows x dim); ``d_in`` maps
    C_{k+1} -> C_k (dim x in_cols).
    """
    if dim == 0:
        return HomologyGroup(0, 0, [], [], [])
    if out_rows:
        sf = smith_normal_form(d_out, out_rows, dim)
        r = sf.rank
        V, Vi = sf.V, sf.V_inv
    else:
        r = 0
        V, Vi = identity(dim), identity(dim)
    kdim = dim - r
    if kdim == 0:
        return HomologyGroup(dim, 0, [], [], [])
    K = [row[r:] for row in V]  # dim x kdim
    Vi_k = Vi[r:]  # kdim x dim
    if in_cols:
        coeff = matmul(Vi_k, d_in, dim, in_cols)  # kdim x in_cols
        sf2 = smith_normal_form(coeff, kdim, in_cols)
        P, Pi = sf2.U, sf2.U_inv
        inv = sf2.diagonal
    else:
        P, Pi = identity(kdim), identity(kdim)
        inv = []
    Kp = matmul(K, Pi, kdim, kdim)  # new basis of ker
    trivial = sum(1 for d in inv if d == 1)
    gens, orders = [], []
    for k in range(trivial, kdim):
        gens.append([Kp[i][k] for i in range(dim)])
        orders.append(inv[k] if k < len(inv) else 0)
    torsion = [d for d in inv if d > 1]
    betti = kdim - len(inv)
    return HomologyGroup(dim, betti, torsion, gens, orders, Vi_k, P, 0, trivial)
