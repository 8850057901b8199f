import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from conftest import corpus_tri
from tautfiber import norm
from tautfiber.errors import IncompatibleQuadTypes
from tautfiber.normal import (
    NormalCoordinates,
    enumerate_vertex_surfaces,
    format_surface,
    haken_sum,
    is_admissible,
    matching_system,
    parse_surfaces,
    surface_topology,
    vertex_link,
    weight,
)
from tautfiber.triangulation import build_from_gluings

SMALL = ["ball", "cusped3", "fig8", "l31", "l52", "s3", "solid_torus"]


def test_matching_counts():
    assert matching_system(build_from_gluings([[None] * 4])).equations == ()
    assert len(matching_system(corpus_tri("fig8")).equations) == 12
    for name in ("s3", "l31", "l52"):
        t = corpus_tri(name)
        assert len(matching_system(t).equations) == 3 * 2 * t.size


def test_admissibility():
    assert is_admissible([0] * 7)
    assert not is_admissible([0, 0, 0, 0, 1, 1, 0])
    assert is_admissible(vertex_link(corpus_tri("fig8"), 0))


def test_ball_vertices_are_unit_vectors():
    vs = enumerate_vertex_surfaces(build_from_gluings([[None] * 4]))
    assert sorted(v.coords for v in vs) == sorted(
        tuple(1 if i == j else 0 for i in range(7)) for j in range(7)
    )


@pytest.mark.parametrize("name", SMALL)
def test_vertices_satisfy_equations(name):
    t = corpus_tri(name)
    ms = matching_system(t)
    for v in enumerate_vertex_surfaces(t):
        assert ms.satisfied_by(v.coords)
        assert v.admissible == is_admissible(v.coords)


@pytest.mark.parametrize("name", SMALL)
def test_admissible_only_is_the_filtered_set(name):
    t = corpus_tri(name)
    full = {v.coords for v in enumerate_vertex_surfaces(t) if v.admissible}
    assert {v.coords for v in enumerate_vertex_surfaces(t, admissible_only=True)} == full


@pytest.mark.parametrize("name", SMALL)
def test_enumeration_matches_brute_force(name):
    t = corpus_tri(name)
    dd = {tuple(v.coords) for v in enumerate_vertex_surfaces(t)}
    bound = max(max(v) for v in dd)
    ms = matching_system(t)
    assert oracle.extreme_rays(ms.matrix(), ms.num_coords, bound) == dd


def test_haken_sum_identity_and_links():
    t = corpus_tri("s3")
    a = vertex_link(t, 0)
    zero = NormalCoordinates([0] * len(a))
    assert haken_sum(a, zero) == a
    x = haken_sum(a, a)
    assert surface_topology(t, x).num_components == 2


def test_haken_sum_conflict():
    t = corpus_tri("fig8_bounded")
    verts = [x for x, _ in norm.admissible_vertices(t)]
    g, h = next(
        (g, h)
        for g, h in itertools.combinations(verts, 2)
        if not is_admissible([a + b for a, b in zip(g, h)])
    )
    with pytest.raises(IncompatibleQuadTypes):
        haken_sum(g, h)


def test_vertex_link_sphere_in_closed_manifold():
    t = corpus_tri("s3")
    topo = surface_topology(t, vertex_link(t, 0))
    assert topo.num_components == 1
    c = topo.components[0]
    assert (c.euler, c.orientable, c.homology_class) == (2, True, ())


def test_cusp_torus_in_figure_eight():
    t = corpus_tri("fig8")
    topo = surface_topology(t, vertex_link(t, 0))
    c = topo.components[0]
    assert (topo.num_components, c.euler, c.orientable, c.homology_class) == (1, 0, True, (0,))


def test_figure_eight_spanning_surface():
    t = corpus_tri("fig8_bounded")
    best = None
    for x, topo in norm.admissible_vertices(t):
        for c in topo.components:
            if c.homology_class in ((1,), (-1,)):
                if best is None or c.chi_minus < best.chi_minus:
                    best = c
    assert best is not None
    assert (best.euler, best.boundary_curves, best.orientable) == (-1, 1, True)


@pytest.mark.parametrize("name", SMALL + ["trefoil_bounded"])
def test_euler_against_cell_count(name):
    t = corpus_tri(name)
    for v in enumerate_vertex_surfaces(t, admissible_only=True):
        assert surface_topology(t, v.coords).euler == oracle.normal_euler(t, v.coords)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=2, max_size=4))
def test_linearity_on_random_sums(mults):
    t = corpus_tri("trefoil_bounded")
    verts = [x for x, _ in norm.admissible_vertices(t)]
    # all multiples of one vertex plus a compatible partner
    g = verts[mults[0] % len(verts)]
    for h in verts:
        if is_admissible([a + b for a, b in zip(g, h)]):
            break
    a, b = mults[1] + 1, (mults[-1] % 3) + 1
    x = NormalCoordinates([a * p + b * q for p, q in zip(g, h)])
    tx, tg, th = surface_topology(t, x), surface_topology(t, g), surface_topology(t, h)
    assert tx.euler == a * tg.euler + b * th.euler
    assert weight(t, x) == a * weight(t, g) + b * weight(t, h)


def test_surface_text_round_trip():
    x = NormalCoordinates([0, 1, 0, 0, 2, 0, 0])
    assert parse_surfaces(format_surface("s", x)) == {"s": x}
