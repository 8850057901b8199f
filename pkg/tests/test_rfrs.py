import pytest

from tautfiber import rfrs as R
from tautfiber.errors import NonAbelianQuotient, PreconditionError, UnverifiedInput


@pytest.fixture(scope="module")
def dihedral_tower():
    return R.reflection_tower(R.infinite_dihedral(), 3)


@pytest.fixture(scope="module")
def pentagon_tower():
    return R.reflection_tower(R.pentagon(), 2)


def test_abelianizations():
    assert R.coxeter_abelianization(R.infinite_dihedral()) == [2, 2]
    assert R.coxeter_abelianization(R.pentagon()) == [2] * 5
    assert R.coxeter_abelianization(R.RACGPresentation(0, frozenset())) == []


def test_parse_graph():
    g = R.parse_graph("vertices: 5\nedges: 0-1 1-2\nedges: 2-3 3-4 4-0\n")
    assert g == R.pentagon()
    with pytest.raises(Exception):
        R.parse_graph("vertices: 2\nedges: 0-0\n")


def test_racg_reduce():
    p = R.pentagon()
    assert R.racg_reduce(p, (0, 0)) == ()
    assert R.racg_reduce(p, (0, 1, 0)) == (1,)  # 0 and 1 commute
    assert R.racg_reduce(p, (0, 2, 0)) == (0, 2, 0)


def test_dihedral_tower(dihedral_tower):
    t = dihedral_tower
    assert t.stage_indices == [4, 8, 16, 32]
    assert t.verified()
    assert all(s.certificate == "verified" for s in t.steps)
    assert t.h1_ranks == [1, 1, 1, 1]


def test_pentagon_tower(pentagon_tower):
    t = pentagon_tower
    assert t.verified()
    assert t.stage_indices == [32, 64, 128]
    assert t.h1_ranks == [10, 18, 34]
    assert any(b > a for a, b in zip(t.h1_ranks, t.h1_ranks[1:]))


def test_depth_zero():
    with pytest.raises(PreconditionError):
        R.reflection_tower(R.pentagon(), 0)


def test_indices_multiply(pentagon_tower):
    t = pentagon_tower
    for step, (a, b) in zip(t.steps, zip(t.stage_indices, t.stage_indices[1:])):
        assert b == a * step.index


def test_z_to_2z():
    t = R.cyclic_tower(3)
    assert t.stage_indices == [1, 2, 4, 8] and t.verified()


def test_translation_subgroup_keeps_torsion():
    pres = R.infinite_dihedral().presentation()
    one = R.trivial_table(2)
    trans, proj = R.extend_by_cocycle(one, (2,), lambda c, x: (1,))
    w = R.rational_derived_check(pres, one, trans, proj)
    # H_1(D_inf) = (Z/2)^2 is all torsion and it maps onto the quotient
    assert w.verdict == "failed"
    assert w.h1_torsion == [2, 2]


def test_non_normal_step():
    pres = R.infinite_dihedral().presentation()
    t3 = R.CosetTable(((0, 2, 1), (1, 0, 2)))
    assert t3.satisfies(pres)
    with pytest.raises(NonAbelianQuotient):
        R.rational_derived_check(pres, R.trivial_table(2), t3, [0, 0, 0])


def test_direct_product():
    z = R.cyclic_tower(3)
    d = R.product_towers(z, z, "direct")
    assert d.stage_indices == [1, 4, 16, 64] and d.verified()


def test_free_product_reproduces_dihedral(dihedral_tower):
    z2 = R.reflection_tower(R.RACGPresentation(1, frozenset()), 3, skip_trivial=False)
    f = R.product_towers(z2, z2, "free", 3)
    assert f.stage_indices == [4, 8, 16, 32]
    assert all(R.tables_equal(a, b) for a, b in zip(f.stages, dihedral_tower.stages))


def test_free_product_pentagons(pentagon_tower):
    f = R.product_towers(pentagon_tower, pentagon_tower, "free", 2)
    ranks = R.free_ranks(f)
    assert ranks[0] == 961
    assert R.strictly_growing(ranks)


def test_unverified_input():
    t = R.cyclic_tower(2)
    t.steps[0].certificate = "unknown"
    with pytest.raises(UnverifiedInput):
        R.product_towers(t, R.cyclic_tower(2), "direct")


def test_word_exclusion():
    g = R.pentagon()
    words = R.racg_test_words(g, 20)
    assert len(words) == 20
    assert all(R.racg_reduce(g, [abs(x) - 1 for x in w]) for w in words)
    tower = R.reflection_tower(g, 8)
    stages = R.word_exclusion(tower, words)
    assert all(s is not None for s in stages)


def test_core_normalization(dihedral_tower):
    t = dihedral_tower
    pres = R.infinite_dihedral().presentation()
    cores = [R.core(s) for s in t.stages]
    for i in range(len(t.stages) - 1):
        (c0, p0), (c1, p1) = cores[i], cores[i + 1]
        proj = R.core_projection(p1, p0, t.projections[i + 1])
        assert R.rational_derived_check(pres, c0, c1, proj).verdict == "verified"


def test_subgroup_closure(dihedral_tower):
    t = dihedral_tower
    pres = R.infinite_dihedral().presentation()
    h = R.CosetTable(((0, 2, 1), (1, 0, 2)))  # index three, not normal
    inter = [R.intersect(s, h) for s in t.stages]
    for i in range(len(inter) - 1):
        (pt, pa, pb), (ct, ca, cb) = inter[i], inter[i + 1]
        where = {(a, b): c for c, (a, b) in enumerate(zip(pa, pb))}
        proj = [where[(t.projections[i + 1][a], b)] for a, b in zip(ca, cb)]
        # step G_i ∩ H > G_{i+1} ∩ H
        step = R._step_from_tables(pres, pt, ct, proj)
        assert step.certificate == "verified"
