import json

import pytest

from conftest import corpus_tri
from tautfiber import covers as C
from tautfiber import norm
from tautfiber import search as S
from tautfiber.errors import NoProgress, NoRepresentativeFound, PreconditionError
from tautfiber.normal import NormalCoordinates, is_admissible, surface_topology
from tautfiber.triangulation import build_from_gluings


def _fiber(t):
    return norm.norm_of_class(t, (1,))[1]


def _oriented(t, x, z, flip_component=None):
    """Signs for x making it represent a positive multiple of z."""
    topo = surface_topology(t, x)
    signs = {d: s * (-1 if topo.disk_component[d] == flip_component else 1) for d, s in topo.disk_signs.items()}
    if S.surface_class(t, x, signs)[0] * z[0] < 0:
        signs = {d: -s for d, s in signs.items()}
    return signs


@pytest.fixture(scope="module")
def trefoil():
    return corpus_tri("trefoil_bounded")


@pytest.fixture(scope="module")
def three_sheets(trefoil):
    """Three parallel fibers with the middle one reversed: class 1, not a product."""
    x = NormalCoordinates([3 * v for v in _fiber(trefoil).coords])
    return x, _oriented(trefoil, x, (1,), flip_component=1)


def test_zero_class(trefoil):
    with pytest.raises(PreconditionError):
        S.select_witness(trefoil, (0,))


def test_no_representative():
    with pytest.raises(NoRepresentativeFound):
        S.select_witness(corpus_tri("fig8"), (1,))


def test_witness_is_the_norm_witness(trefoil):
    w = S.select_witness(trefoil, (1,))
    assert w.coords == _fiber(trefoil).coords
    assert w.kills and not w.demoted
    assert S.classify_class(trefoil, (1,)) == "fibered"
    assert S.classify_class(corpus_tri("fig8"), (1,)) == "not_detected"


def test_run_fibered_at_stage_zero(trefoil):
    v = S.run(trefoil, (1,))
    assert v.kind == "fibered" and v.stage == 0
    cert = json.loads(json.dumps(v.certificate))
    assert S.replay(cert) == "fibered"
    assert S.strictly_descending(v.state.history)


def test_tampered_certificate(trefoil):
    cert = S.run(trefoil, (1,)).certificate
    cert = json.loads(json.dumps(cert))
    cert["signs"][0][3] *= -1
    assert S.replay(cert) == "not_detected"
    cert["class"] = [-1]
    assert S.replay(cert) == "not_detected"


def test_solid_torus_meridian_disk():
    v = S.run(corpus_tri("solid_torus"), (1,))
    assert v.kind == "fibered"
    assert S.replay(v.certificate) == "fibered"


def test_chi_gate():
    with pytest.raises(PreconditionError):
        S.run(build_from_gluings([[None] * 4]), ())


def test_budget_exhausted(trefoil, three_sheets):
    x, signs = three_sheets
    w = S.witness_from_surface(trefoil, x, signs)
    assert w.guts.components and not w.fibered(trefoil)
    v = S.run(trefoil, (1,), max_stages=0, surface=x, signs=signs)
    assert v.kind == "budget_exhausted"


def test_honest_not_detected(trefoil, three_sheets):
    x, signs = three_sheets
    v = S.run(trefoil, (1,), max_stages=2, surface=x, signs=signs)
    assert v.kind == "not_detected"
    assert "exceeded" in v.reason
    assert S.strictly_descending(v.state.history)


def test_surface_must_represent_class(trefoil, three_sheets):
    x, signs = three_sheets
    with pytest.raises(PreconditionError):
        S.run(trefoil, (-1,), surface=x, signs=signs)


def test_empty_guts_is_fibered(trefoil):
    state = S.SearchState(trefoil, (1,), S.select_witness(trefoil, (1,)))
    state.witness.guts.components.clear()
    v = S.descend_step(state)
    assert v.kind == "fibered"


def test_accept_requires_strict_decrease(trefoil, three_sheets):
    x, signs = three_sheets
    state = S.SearchState(trefoil, (1,), S.witness_from_surface(trefoil, x, signs))
    state.history.append({"stage": 0, "cover": None, "class": [1], "complexity": state.complexity})
    spec = C.z2_quotients(trefoil)[0]
    cover = C.build_cover(trefoil, spec)
    up = cover.triangulation
    lifted = S.witness_from_surface(up, C.lift_surface(cover, x), C.lift_signs(cover, signs))
    with pytest.raises(NoProgress):
        state.accept(cover, (1,), lifted)
    # fiber plus a boundary-parallel disk: same class, smaller guts
    fiber = _fiber(trefoil).coords
    disk = next(
        v for v, topo in norm.admissible_vertices(trefoil)
        if topo.components[0].euler == 1 and is_admissible(fiber + v)
    )
    y = fiber + disk
    ys = _oriented(trefoil, y, (1,))
    better = S.witness_from_surface(up, C.lift_surface(cover, y), C.lift_signs(cover, ys))
    z_up = S.surface_class(up, better.coords, better.signs)
    state.accept(cover, z_up, better)
    assert state.stage == 1
    assert state.accepted_complexities() == [10, 0]
    assert S.strictly_descending(state.history)


def test_threads_do_not_change_the_answer(trefoil, three_sheets):
    x, signs = three_sheets
    a = S.run(trefoil, (1,), max_stages=1, surface=x, signs=signs, max_cover_tets=15, nmax=3)
    b = S.run(trefoil, (1,), max_stages=1, surface=x, signs=signs, max_cover_tets=15, nmax=3, threads=2)
    assert a.to_json() == b.to_json()
    assert a.kind == "not_detected"
