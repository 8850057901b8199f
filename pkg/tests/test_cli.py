import json

import pytest

from tautfiber import search as S
from tautfiber.cli import load_corpus, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_enumerate_ball(capsys):
    code, out, _ = run(capsys, "--json", "enumerate", "ball.tri")
    assert code == 0
    vs = json.loads(out)["vertices"]
    assert len(vs) == 7 and all(sum(v["coords"]) == 1 for v in vs)


def test_unknown_command(capsys):
    code, _, err = run(capsys, "bogus")
    assert code == 2 and "usage" in err


def test_missing_command(capsys):
    assert run(capsys)[0] == 2


def test_missing_file(capsys):
    assert run(capsys, "norm", "nope.tri", "--class", "1")[0] == 2


def test_domain_error(capsys):
    code, _, err = run(capsys, "norm", "fig8.tri", "--class", "1")
    assert code == 1 and "NoRepresentativeFound" in err


def test_norm(capsys):
    code, out, _ = run(capsys, "norm", "trefoil_bounded.tri", "--class", "1", "--json")
    assert code == 0 and json.loads(out)["value"] == "1"


def test_budget_env(capsys, monkeypatch):
    monkeypatch.setenv("TAUTFIBER_BUDGET", "0")
    code, _, err = run(capsys, "norm", "trefoil_bounded.tri", "--class", "1")
    assert code == 1 and "NoRepresentativeFound" in err
    monkeypatch.setenv("TAUTFIBER_BUDGET", "x")
    assert run(capsys, "norm", "trefoil_bounded.tri", "--class", "1")[0] == 2


def test_normball(capsys):
    code, out, _ = run(capsys, "--json", "normball", "trefoil_bounded.tri")
    data = json.loads(out)
    assert code == 0 and data["rank"] == 1
    assert {f["marking"] for f in data["faces"]} == {"fibered"}


def test_guts(capsys):
    code, out, _ = run(capsys, "--json", "guts", "s3.tri", "--surf", "1 0 0 0 0 0 0 1 0 0 0 0 0 0")
    data = json.loads(out)
    assert code == 0 and len(data["components"]) == 2


def test_cover(capsys, tmp_path):
    code, out, _ = run(capsys, "cover", "fig8.tri", "--quotient", "2", "--labels", "0=1")
    assert code == 1
    # a well-defined label set: the unique Z/2 quotient
    from tautfiber import covers
    from tautfiber.triangulation import parse

    from conftest import corpus_tri

    (spec,) = covers.z2_quotients(corpus_tri("fig8"))
    labels = ",".join(f"{i}={a[0]}" for i, a in enumerate(spec.assignment))
    code, out, _ = run(capsys, "cover", "fig8.tri", "--quotient", "2", "--labels", labels)
    assert code == 0
    assert parse(out).size == 4
    assert run(capsys, "cover", "fig8.tri", "--quotient", "2", "--labels", "zz")[0] == 2


def test_rfrs(capsys, tmp_path):
    g = tmp_path / "pent.graph"
    g.write_text("vertices: 5\nedges: 0-1 1-2 2-3 3-4 4-0\n")
    code, out, _ = run(capsys, "--json", "rfrs", str(g), "--depth", "2")
    data = json.loads(out)
    assert code == 0 and data["verified"]
    assert data["tower"]["h1_ranks"] == [10, 18, 34]
    code, out, _ = run(capsys, "rfrs", "dihedral", "--depth", "3", "--faces", "0,1")
    assert code == 0 and "verified True" in out


def test_vfiber_round_trip(capsys):
    code, out, _ = run(capsys, "--json", "vfiber", "trefoil_bounded.tri", "--class", "1")
    data = json.loads(out)
    assert code == 0 and data["verdict"] == "fibered" and data["stage"] == 0
    assert S.replay(data["certificate"]) == "fibered"


def test_corpus(capsys):
    code, out, _ = run(capsys, "--json", "corpus")
    data = json.loads(out)
    assert code == 0 and "fig8" in data


def test_corpus_provenance():
    for e in load_corpus():
        for fact in e.facts.values():
            assert fact["provenance"] in ("TRIVIAL", "DERIVED")
        t = e.triangulation()
        assert t.size == e.fact("tetrahedra")
        assert t.euler_characteristic == e.fact("euler")
        assert t.homology_group(1).betti == e.fact("h1_rank")
        assert list(t.homology_group(1).torsion) == e.fact("h1_torsion")
