"""Brute-force reference computations, independent of the package internals.

Only the gluing table and the matching equations are taken from the
package; everything else (rational elimination, extreme-ray test, Euler
characteristic count) is redone here from first principles.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import gcd


def rref(rows, ncols):
    """Reduced row echelon form over Q; returns (rows, pivot columns)."""
    m = [[Fraction(v) for v in r] for r in rows]
    piv = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        lead = m[r][c]
        m[r] = [v / lead for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        piv.append(c)
        r += 1
    return m[:r], piv


def rank(rows, ncols):
    return len(rref(rows, ncols)[1]) if rows else 0


def nullity_on_support(matrix, support, ncols):
    cols = sorted(support)
    sub = [[row[c] for c in cols] for row in matrix]
    return len(cols) - rank(sub, len(cols))


def extreme_rays(matrix, ncols, bound):
    """Primitive extreme rays of {x >= 0, Ax = 0} with entries at most ``bound``.

    Every nonnegative integer solution with entries <= bound is found by
    scanning the free variables of the reduced system; a solution is an
    extreme ray exactly when the columns of its support have a
    one-dimensional kernel.
    """
    red, piv = rref(matrix, ncols) if matrix else ([], [])
    free = [c for c in range(ncols) if c not in piv]
    found = set()
    for vals in itertools.product(range(bound + 1), repeat=len(free)):
        if not any(vals):
            continue
        x = [Fraction(0)] * ncols
        for c, v in zip(free, vals):
            x[c] = Fraction(v)
        ok = True
        for row, pc in zip(red, piv):
            val = -sum(row[c] * x[c] for c in free)
            if val < 0 or val > bound or val.denominator != 1:
                ok = False
                break
            x[pc] = val
        if not ok:
            continue
        xi = [int(v) for v in x]
        g = 0
        for v in xi:
            g = gcd(g, v)
        xi = tuple(v // g for v in xi)
        if xi in found:
            continue
        support = {i for i, v in enumerate(xi) if v}
        if nullity_on_support(matrix, support, ncols) == 1:
            found.add(xi)
    return found


# disk corner counts: triangles meet 3 edges, quads 4
_ARCS = [3, 3, 3, 3, 4, 4, 4]
_QUAD_EDGES = {4: [(0, 2), (0, 3), (1, 2), (1, 3)], 5: [(0, 1), (0, 3), (1, 2), (2, 3)], 6: [(0, 1), (0, 2), (1, 3), (2, 3)]}


def normal_euler(tri, x):
    """chi = V - E + F counted from disks, arcs and edge points."""
    faces = sum(x)
    arcs = 0
    boundary_arcs = 0
    for t in range(tri.size):
        for k in range(7):
            n = x[7 * t + k]
            if not n:
                continue
            arcs += n * _ARCS[k]
            for f in range(4):
                # a disk has an arc on face f unless it is the triangle at f
                if tri.gluings[t][f] is None and k != f:
                    boundary_arcs += n
    edges = (arcs + boundary_arcs) // 2
    # points on edges: one per disk corner, shared around the edge class
    seen = {}
    for t in range(tri.size):
        for a, b in itertools.combinations(range(4), 2):
            e = tri.edge_of(t, _edge_index(a, b))
            if e in seen:
                continue
            w = x[7 * t + a] + x[7 * t + b]
            for q, es in _QUAD_EDGES.items():
                if (a, b) in es:
                    w += x[7 * t + q]
            seen[e] = w
    return sum(seen.values()) - edges + faces


def _edge_index(a, b):
    from tautfiber.triangulation import EDGE_INDEX

    return EDGE_INDEX[(a, b)]
