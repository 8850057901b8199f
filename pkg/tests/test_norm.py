from fractions import Fraction

import pytest

from conftest import corpus_tri
from tautfiber import norm
from tautfiber.errors import NoRepresentativeFound, PreconditionError, ResourceBudgetExceeded
from tautfiber.normal import Component, NormalCoordinates, SurfaceTopology, class_cocycle, class_coordinates


def _topo(eulers):
    comps = tuple(Component(NormalCoordinates([0] * 7), e, True, 0, 0, ()) for e in eulers)
    return SurfaceTopology(NormalCoordinates([0] * 7), comps, 0)


def test_chi_minus():
    assert norm.chi_minus(_topo([2])) == 0
    assert norm.chi_minus(_topo([-1])) == 1
    assert norm.chi_minus(_topo([0, -2])) == 2


def test_zero_class():
    value, wit = norm.norm_of_class(corpus_tri("trefoil_bounded"), (0,))
    assert value == 0 and wit.is_empty


def test_depth_zero():
    with pytest.raises(NoRepresentativeFound):
        norm.norm_of_class(corpus_tri("trefoil_bounded"), (1,), depth=0)


def test_wrong_length():
    with pytest.raises(PreconditionError):
        norm.norm_of_class(corpus_tri("trefoil_bounded"), (1, 0))


@pytest.mark.parametrize("name", ["fig8_bounded", "trefoil_bounded"])
def test_genus_one_fibers(name):
    t = corpus_tri(name)
    value, wit = norm.norm_of_class(t, (1,))
    assert value == 1
    assert wit.chi_minus == 1 and wit.multiplicity == 1
    # the witness, with the chosen orientations, represents the class
    cls = class_coordinates(t, class_cocycle(t, wit.coords, wit.disk_signs(t)))
    assert cls == (1,)


def test_ideal_figure_eight_has_no_closed_witness():
    with pytest.raises(NoRepresentativeFound):
        norm.norm_of_class(corpus_tri("fig8"), (1,))


def test_solid_torus_norm_zero():
    value, wit = norm.norm_of_class(corpus_tri("solid_torus"), (1,))
    assert value == 0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_homogeneity_and_symmetry(n):
    t = corpus_tri("trefoil_bounded")
    v1, _ = norm.norm_of_class(t, (1,))
    vn, _ = norm.norm_of_class(t, (n,))
    vm, _ = norm.norm_of_class(t, (-n,))
    assert vn == n * v1 == vm


def test_sum_budget():
    with pytest.raises(ResourceBudgetExceeded):
        norm.ranked_candidates(corpus_tri("trefoil_bounded"), (2,), depth=3, max_sums=3)


def test_rank_one_ball():
    ball = norm.norm_ball(corpus_tri("trefoil_bounded"))
    assert ball.rank == 1
    assert sorted(ball.vertices) == [(Fraction(-1),), (Fraction(1),)]
    assert {f["marking"] for f in ball.faces} == {"fibered"}


def test_rank_zero_ball():
    with pytest.raises(PreconditionError):
        norm.norm_ball(corpus_tri("s3"))


def test_hull_is_symmetric_polygon():
    pts = [(Fraction(a), Fraction(b)) for a, b in [(1, 0), (0, 1), (-1, 0), (0, -1), (0, 0), (Fraction(1, 2), Fraction(1, 4))]]
    hull = norm._hull_2d(pts)
    assert sorted(hull) == sorted(p for p in pts if p not in [(0, 0), (Fraction(1, 2), Fraction(1, 4))])
    assert sorted(hull) == sorted((-a, -b) for a, b in hull)


def test_integral_direction():
    assert norm._integral_direction([Fraction(1, 2), Fraction(-1, 3)]) == (3, -2)
