"""Command-line front end: ``tautfiber <command> ...``.

Exit status is 0 on success, 1 on a domain error (the message names the
error class) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import branched as B
from . import covers as C
from . import norm as Nm
from . import rfrs as R
from . import search as S
from .errors import TautFiberError
from .normal import NormalCoordinates, enumerate_vertex_surfaces, surface_topology
from .triangulation import Triangulation, homology, load, parse


class UsageError(Exception):
    pass


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise UsageError(f"expected integers, got {text!r}") from None


def _default_budget() -> int:
    env = os.environ.get("TAUTFIBER_BUDGET")
    if env is None:
        return Nm.DEFAULT_DEPTH
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"TAUTFIBER_BUDGET must be an integer, got {env!r}") from None


def _budget(args) -> int:
    return args.budget if args.budget is not None else _default_budget()


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    raise TypeError(type(o).__name__)


def _emit(args, data: dict, text: str) -> None:
    if args.json:
        json.dump(data, sys.stdout, indent=2, sort_keys=True, default=_json_default)
        sys.stdout.write("\n")
    else:
        sys.stdout.write(text.rstrip("\n") + "\n")


def _table(rows: Sequence[Sequence], header: Sequence[str]) -> str:
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells)


def _load_tri(path: str) -> Triangulation:
    p = Path(path)
    if not p.exists():
        ref = resources.files("tautfiber") / "corpus" / path
        if ref.is_file():
            return parse(ref.read_text(encoding="utf-8"))
        raise UsageError(f"no such triangulation file: {path}")
    return load(p)


# -- corpus -------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    file: str
    facts: dict  # fact name -> {"value": ..., "provenance": "TRIVIAL" | "DERIVED", "note": ...}

    def triangulation(self) -> Triangulation:
        return parse((resources.files("tautfiber") / "corpus" / self.file).read_text(encoding="utf-8"))

    def fact(self, key: str):
        return self.facts[key]["value"]


def load_corpus() -> list[CorpusEntry]:
    data = json.loads((resources.files("tautfiber") / "corpus" / "metadata.json").read_text(encoding="utf-8"))
    out = []
    for name in sorted(data):
        entry = data[name]
        for key, fact in entry["facts"].items():
            if fact.get("provenance") not in ("TRIVIAL", "DERIVED"):
                raise ValueError(f"{name}.{key} has no provenance tag")
        out.append(CorpusEntry(name, entry["file"], entry["facts"]))
    return out


# -- commands -----------------------------------------------------------------


def cmd_enumerate(args) -> int:
    tri = _load_tri(args.tri)
    verts = enumerate_vertex_surfaces(tri, admissible_only=args.admissible)
    rows, data = [], []
    for i, v in enumerate(verts):
        row = {"coords": list(v.coords), "admissible": v.admissible}
        if v.admissible:
            topo = surface_topology(tri, v.coords)
            row.update(
                euler=topo.euler,
                weight=topo.weight,
                orientable=topo.orientable,
                components=topo.num_components,
                boundary_curves=topo.boundary_curves,
                homology_class=list(topo.homology_class) if topo.homology_class is not None else None,
            )
        data.append(row)
        rows.append(
            [
                i,
                " ".join(map(str, v.coords)),
                "yes" if v.admissible else "no",
                row.get("euler", "-"),
                row.get("weight", "-"),
                row.get("homology_class", "-"),
            ]
        )
    _emit(args, {"vertices": data}, _table(rows, ["#", "coords", "admissible", "chi", "weight", "class"]))
    return 0


def cmd_norm(args) -> int:
    tri = _load_tri(args.tri)
    value, wit = Nm.norm_of_class(tri, _ints(args.cls), _budget(args))
    text = f"xhat{tuple(wit.z)} = {value}  (chi_- = {wit.chi_minus}, multiplicity {wit.multiplicity}, weight {wit.weight})\n"
    text += f"witness: {' '.join(map(str, wit.coords))}"
    _emit(args, {"value": str(value), "witness": wit.to_json()}, text)
    return 0


def cmd_normball(args) -> int:
    tri = _load_tri(args.tri)
    ball = Nm.norm_ball(tri, _budget(args), bound=args.bound, mark_faces=not args.no_marking)
    lines = [f"rank {ball.rank}"]
    lines += [f"vertex {i}: ({', '.join(map(str, v))})" for i, v in enumerate(ball.vertices)]
    lines += [f"face {f['vertices']}: class {list(f['class'])} {f['marking']}" for f in ball.faces]
    if ball.null_directions:
        lines.append(f"norm-zero classes: {ball.null_directions}")
    _emit(args, ball.to_json(), "\n".join(lines))
    return 0


def cmd_guts(args) -> int:
    tri = _load_tri(args.tri)
    x = NormalCoordinates(_ints(args.surf))
    w = S.witness_from_surface(tri, x)
    certs = w.certificates(tri)
    rows = []
    comps = []
    for i, (q, k, c) in enumerate(zip(w.guts.components, w.killing, certs)):
        rows.append([i, len(q.regions), q.complexity, "yes" if k else "no", "product" if c.fibered else c.reason])
        comps.append({**q.to_json(), "killing": k, "product": c.to_json()})
    verdict = S.FIBERED if all(c.fibered for c in certs) else S.NOT_DETECTED
    text = _table(rows, ["#", "regions", "c(Q)", "kills", "product"])
    text += f"\nc(Guts) = {w.complexity}, verdict {verdict}"
    _emit(args, {"complexity": w.complexity, "components": comps, "verdict": verdict}, text)
    return 0


def _parse_labels(text: str, factors: Sequence[int], ngens: int) -> list[tuple[int, ...]]:
    out = [tuple(0 for _ in factors) for _ in range(ngens)]
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise UsageError(f"label {item!r} is not gen=element")
        g, e = item.split("=", 1)
        try:
            gi = int(g)
            el = tuple(int(v) for v in e.split(":"))
        except ValueError:
            raise UsageError(f"label {item!r} is not gen=element") from None
        if not 0 <= gi < ngens:
            raise UsageError(f"generator {gi} out of range 0..{ngens - 1}")
        if len(el) != len(factors):
            raise UsageError(f"element {e!r} needs {len(factors)} components")
        out[gi] = el
    return out


def cmd_cover(args) -> int:
    tri = _load_tri(args.tri)
    factors = _ints(args.quotient)
    pres = C.presentation(tri)
    assign = _parse_labels(args.labels, factors, pres.num_generators)
    cover = C.build_cover(tri, C.cover_spec(tri, factors, assign, pres))
    up = cover.triangulation
    proj = [[i, cover.projection(i), list(cover.element(i))] for i in range(up.size)]
    text = up.to_text(f"{cover.degree}-sheeted cover, quotient {list(factors)}")
    text += "\n# projection: cover tet -> (base tet, sheet)\n"
    text += "\n".join(f"# {i} -> {t} {':'.join(map(str, a))}" for i, t, a in proj)
    _emit(
        args,
        {"spec": cover.spec.to_json(), "triangulation": up.to_json(), "projection": proj, "connected": cover.is_connected()},
        text,
    )
    return 0


def cmd_rfrs(args) -> int:
    path = Path(args.graph)
    if path.exists():
        g = R.parse_graph(path.read_text(encoding="utf-8"))
    elif args.graph == "pentagon":
        g = R.pentagon()
    elif args.graph in ("dihedral", "infinite_dihedral"):
        g = R.infinite_dihedral()
    else:
        raise UsageError(f"no such graph file: {args.graph}")
    faces = list(_ints(args.faces)) if args.faces else None
    tower = R.reflection_tower(g, args.depth, faces)
    ok = tower.verified()
    text = f"indices {tower.stage_indices}\nH1 ranks {tower.h1_ranks}\nverified {ok}"
    _emit(args, {"graph": g.to_json(), "tower": tower.to_json(), "verified": ok}, text)
    return 0 if ok else 1


def cmd_vfiber(args) -> int:
    tri = _load_tri(args.tri)
    v = S.run(
        tri,
        _ints(args.cls),
        max_stages=args.max_stages,
        depth=_budget(args),
        nmax=args.nmax,
        radius=args.radius,
        max_cover_tets=args.max_cover_tets,
        threads=args.threads,
    )
    hist = " > ".join(str(h["complexity"]) for h in v.state.history)
    text = f"{v.kind} at stage {v.stage}: {v.reason}\ncomplexities {hist}"
    if v.certificate:
        text += f"\ncertificate replays to {S.replay(v.certificate)}"
    _emit(args, v.to_json(), text)
    return 0


def cmd_corpus(args) -> int:
    entries = load_corpus()
    rows = []
    data = {}
    for e in entries:
        tri = e.triangulation()
        h1 = homology(tri, 1)
        rows.append([e.name, tri.size, tri.euler_characteristic, h1.betti, list(h1.torsion), e.fact("description")])
        data[e.name] = {"file": e.file, "tetrahedra": tri.size, "facts": e.facts}
    _emit(args, data, _table(rows, ["name", "tets", "chi", "b1", "torsion", "description"]))
    return 0


# -- parser -------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tautfiber", description=__doc__.splitlines()[0])
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--threads", type=int, default=1, help="cap on worker threads")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
        sp.add_argument("--threads", type=int, default=argparse.SUPPRESS)

    sp = sub.add_parser("enumerate", help="vertex normal surfaces")
    sp.add_argument("tri")
    sp.add_argument("--admissible", action="store_true", help="drop inadmissible rays during the run")
    common(sp)
    sp.set_defaults(func=cmd_enumerate)

    sp = sub.add_parser("norm", help="upper bound on the Thurston norm of a class")
    sp.add_argument("tri")
    sp.add_argument("--class", dest="cls", required=True)
    sp.add_argument("--budget", type=int, help="maximum number of vertex surfaces per sum")
    common(sp)
    sp.set_defaults(func=cmd_norm)

    sp = sub.add_parser("normball", help="unit ball of the norm bound")
    sp.add_argument("tri")
    sp.add_argument("--budget", type=int)
    sp.add_argument("--bound", type=int, default=3, help="sample primitive classes with entries up to this")
    sp.add_argument("--no-marking", action="store_true", help="skip the fibered-face check")
    common(sp)
    sp.set_defaults(func=cmd_normball)

    sp = sub.add_parser("guts", help="pinch a surface and report its guts")
    sp.add_argument("tri")
    sp.add_argument("--surf", required=True)
    common(sp)
    sp.set_defaults(func=cmd_guts)

    sp = sub.add_parser("cover", help="abelian cover from generator labels")
    sp.add_argument("tri")
    sp.add_argument("--quotient", required=True, help="invariant factors, e.g. 2 or 2,2")
    sp.add_argument("--labels", default="", help="gen=element list, element components joined by ':'")
    common(sp)
    sp.set_defaults(func=cmd_cover)

    sp = sub.add_parser("rfrs", help="reflection tower of a right-angled Coxeter group")
    sp.add_argument("graph", help="graph file, or 'pentagon' / 'dihedral'")
    sp.add_argument("--depth", type=int, default=2)
    sp.add_argument("--faces", help="cyclic sequence of generator types to reflect in")
    common(sp)
    sp.set_defaults(func=cmd_rfrs)

    sp = sub.add_parser("vfiber", help="search a tower of covers for a fibered class")
    sp.add_argument("tri")
    sp.add_argument("--class", dest="cls", required=True)
    sp.add_argument("--max-stages", type=int, default=3)
    sp.add_argument("--budget", type=int)
    sp.add_argument("--nmax", type=int, default=6)
    sp.add_argument("--radius", type=int, default=1)
    sp.add_argument("--max-cover-tets", type=int, default=20)
    common(sp)
    sp.set_defaults(func=cmd_vfiber)

    sp = sub.add_parser("corpus", help="list the bundled triangulations")
    common(sp)
    sp.set_defaults(func=cmd_corpus)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing command")
        return args.func(args)
    except UsageError as e:
        sys.stderr.write(f"usage error: {e}\n")
        return 2
    except (TautFiberError, ValueError) as e:
        sys.stderr.write(f"{type(e).__name__}: {e}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
