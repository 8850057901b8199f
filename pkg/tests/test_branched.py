import pytest

from conftest import corpus_tri
from tautfiber import branched as B
from tautfiber import norm
from tautfiber.errors import ZeroSurface
from tautfiber.normal import NormalCoordinates, vertex_link
from tautfiber.triangulation import build_from_gluings

BALL = build_from_gluings([[None] * 4])


def _local(x):
    m = B.pinch(BALL, x)
    return {r: B.local_complexity(m, 0, r) for r in m.regions(0)}


def test_local_contributions():
    # three triangles: middle region holds one stuck triangle and three quads
    assert _local([1, 1, 1, 0, 0, 0, 0]) == {"c0": 0, "c1": 0, "c2": 0, "m": 4}
    # quad plus a triangle: the side with one free corner traps that triangle
    assert _local([1, 0, 0, 0, 1, 0, 0]) == {"c0": 0, "m0": 1, "m1": 2}
    # a lone triangle leaves three triangles and three quads in the big region
    assert _local([1, 0, 0, 0, 0, 0, 0])["m"] == 6


def test_pinch_is_support_determined():
    t = corpus_tri("s3")
    x = vertex_link(t, 0)
    a = B.pinch(t, x)
    b = B.pinch(t, NormalCoordinates([2 * v for v in x]))
    assert a.support == b.support == x.support
    assert a.orientation == b.orientation


def test_zero_surface():
    with pytest.raises(ZeroSurface):
        B.pinch(BALL, [0] * 7)


def test_sphere_link_guts():
    t = corpus_tri("s3")
    g = B.guts(t, B.pinch(t, vertex_link(t, 0)))
    assert len(g.components) == 2
    assert B.check_killing(t, g) == [True, True]


def test_empty_support_guts_is_everything():
    t = corpus_tri("trefoil_bounded")
    g = B.guts(t, B.empty_model(t))
    assert len(g.components) == 1
    assert len(g.components[0].regions) == t.size
    # whole manifold with H_1 of rank one: the identity does not kill
    assert B.check_killing(t, g) == [False]
    assert B.is_product_guts(t, g) == "not_detected"


def test_empty_guts_is_product():
    t = corpus_tri("trefoil_bounded")
    g = B.GutsDecomposition(B.empty_model(t), [], 0, 0)
    assert B.is_product_guts(t, g) == "fibered"
    assert g.complexity == 0


@pytest.mark.parametrize("name", ["trefoil_bounded", "fig8_bounded"])
def test_fiber_witness_guts(name):
    t = corpus_tri(name)
    _, wit = norm.norm_of_class(t, (1,))
    m = B.pinch(t, wit.coords, wit.disk_signs(t))
    assert m.support == wit.coords.support and m.oriented
    g = B.guts(t, m)
    assert all(B.check_killing(t, g))
    assert B.is_product_guts(t, g) == "fibered"
    assert g.complexity == max(B.complexity(t, m, q) for q in g.components)


def test_pieces_tile():
    t = corpus_tri("trefoil_bounded")
    _, wit = norm.norm_of_class(t, (1,))
    g = B.guts(t, B.pinch(t, wit.coords))
    regions = [r for q in g.components for r in q.regions]
    assert len(regions) == len(set(regions)) == g.pieces


def test_incoherent_orientation_not_product():
    t = corpus_tri("trefoil_bounded")
    _, wit = norm.norm_of_class(t, (1,))
    signs = wit.disk_signs(t)
    first = next(iter(signs))
    signs[first] = -signs[first]
    m = B.pinch(t, wit.coords, signs)
    assert not m.oriented
    assert B.is_product_guts(t, B.guts(t, m)) == "not_detected"
