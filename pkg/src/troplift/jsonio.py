"""JSON input schemas and deterministic serialization for the CLI.

Every input file is an object with a "kind" field: fan, cone, subdivision,
type, plmap, monoid, puncturing, ideal, classes, classmap, diagram, table.
Rationals are written as "p/q" strings (or plain integers).
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Dict, List, Optional

from .errors import InvalidInputError
from .cones import LatticeCone, cone_from_generators
from .complexes import (
    ConeComplex,
    PLMap,
    Subdivision,
    complex_from_cones,
    find_cone,
    plmap_from_matrix,
    subdivision_from_fans,
)
from .lattice import Lattice, LatticeMap, mat_tuple
from .moduli import TropGraph, TropicalType
from .monoids import FineMonoid, MonoidHom, MonoidIdeal, fine_monoid, monoid_ideal
from .scattering import (
    CurveClassMonoid,
    MirrorTable,
    ScatteringDiagram,
    TruncatedSeries,
    Wall,
    curve_classes,
    make_series,
    mirror_table,
)


def parse_rational(x) -> Fraction:
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInputError(f"bad rational {x!r}") from exc
    raise InvalidInputError(f"bad rational {x!r}")


def format_rational(x: Fraction) -> str:
    return str(Fraction(x))


def load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict) or "kind" not in data:
        raise InvalidInputError(f"{path}: expected an object with a 'kind' field")
    return data


def dump_json(path: str, data) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _int_vec(v, what="vector"):
    if not isinstance(v, list) or not all(isinstance(x, int) for x in v):
        raise InvalidInputError(f"bad {what}: {v!r}")
    return tuple(v)


def build_fan(data: dict) -> ConeComplex:
    if data.get("kind") != "fan":
        raise InvalidInputError("expected kind 'fan'")
    rank = data.get("ambient_rank")
    rays = [_int_vec(r, "ray") for r in data.get("rays", [])]
    cone_lists = []
    for cone_spec in data.get("cones", []):
        gens = []
        for idx in cone_spec:
            if not isinstance(idx, int) or not 0 <= idx < len(rays):
                raise InvalidInputError(f"bad ray index {idx!r}")
            gens.append(rays[idx])
        cone_lists.append(gens)
    if not cone_lists:
        cone_lists = [[r] for r in rays] or [[]]
    try:
        return complex_from_cones(rank, cone_lists)
    except Exception as exc:
        raise InvalidInputError(f"cannot build fan: {exc}") from exc


def build_cone(data: dict) -> LatticeCone:
    if data.get("kind") != "cone":
        raise InvalidInputError("expected kind 'cone'")
    rank = data["rank"]
    return cone_from_generators(rank, [_int_vec(g, "generator")
                                       for g in data.get("generators", [])])


def build_subdivision(data: dict, target: Optional[ConeComplex] = None) -> Subdivision:
    if data.get("kind") != "subdivision":
        raise InvalidInputError("expected kind 'subdivision'")
    tgt = target if target is not None else build_fan(data["target"])
    src = build_fan(data["source"])
    return subdivision_from_fans(src, tgt)


def _resolve_cone_id(fan: ConeComplex, gens, what) -> int:
    cone = cone_from_generators(fan.ambient.rank, [_int_vec(g) for g in gens])
    idx = find_cone(fan, cone)
    if idx is None:
        raise InvalidInputError(f"{what}: cone {gens!r} is not in the fan")
    return idx


def build_type(data: dict, fan: ConeComplex) -> TropicalType:
    if data.get("kind") != "type":
        raise InvalidInputError("expected kind 'type'")
    vertices = data.get("vertices", [])
    genus = tuple(int(v.get("genus", 0)) for v in vertices)
    sigma_v = tuple(_resolve_cone_id(fan, v["cone"], "vertex") for v in vertices)
    edges = []
    sigma_e = []
    u_e = []
    for e in data.get("edges", []):
        edges.append((int(e["from"]), int(e["to"])))
        sigma_e.append(_resolve_cone_id(fan, e["cone"], "edge"))
        u_e.append(_int_vec(e["u"], "contact order"))
    legs = []
    sigma_l = []
    u_l = []
    for l in data.get("legs", []):
        legs.append((int(l["vertex"]), bool(l.get("punctured", False))))
        sigma_l.append(_resolve_cone_id(fan, l["cone"], "leg"))
        u_l.append(_int_vec(l["u"], "contact order"))
    graph = TropGraph(genus, tuple(edges), tuple(legs))
    return TropicalType(graph, fan, sigma_v, tuple(sigma_e), tuple(sigma_l),
                        tuple(u_e), tuple(u_l))


def build_plmap(data: dict) -> PLMap:
    if data.get("kind") != "plmap":
        raise InvalidInputError("expected kind 'plmap'")
    src = build_fan(data["source"])
    tgt = build_fan(data["target"])
    matrix = [_int_vec(r, "matrix row") for r in data["matrix"]]
    return plmap_from_matrix(src, tgt, matrix)


def build_monoid(data: dict) -> FineMonoid:
    if data.get("kind") != "monoid":
        raise InvalidInputError("expected kind 'monoid'")
    return fine_monoid(data["rank"], [_int_vec(g, "generator")
                                      for g in data.get("generators", [])])


def build_ideal(data: dict) -> MonoidIdeal:
    if data.get("kind") != "ideal":
        raise InvalidInputError("expected kind 'ideal'")
    m = build_monoid(data["monoid"])
    return monoid_ideal(m, [_int_vec(g, "generator")
                            for g in data.get("generators", [])])


def build_classes(data: dict) -> CurveClassMonoid:
    if data.get("kind") != "classes":
        raise InvalidInputError("expected kind 'classes'")
    return curve_classes(data["rank"],
                         [_int_vec(g, "class") for g in data.get("effective", [])],
                         name=data.get("name", "Q"))


def build_classmap(data: dict) -> MonoidHom:
    if data.get("kind") != "classmap":
        raise InvalidInputError("expected kind 'classmap'")
    src = build_classes(data["source"])
    tgt = build_classes(data["target"])
    matrix = mat_tuple([_int_vec(r, "matrix row") for r in data["matrix"]])
    lmap = LatticeMap(matrix, src.ambient, tgt.ambient)
    return MonoidHom(src.monoid(), tgt.monoid(), lmap)


def _ideal_over(classes: CurveClassMonoid, data: dict) -> MonoidIdeal:
    gens = [_int_vec(g, "ideal generator") for g in data.get("generators", [])]
    return monoid_ideal(classes.monoid(), gens)


def build_diagram(data: dict) -> ScatteringDiagram:
    if data.get("kind") != "diagram":
        raise InvalidInputError("expected kind 'diagram'")
    fan = build_fan(data["target"])
    classes = build_classes(data["classes"])
    ideal = _ideal_over(classes, data["ideal"])
    skeleton = tuple(sorted(_resolve_cone_id(fan, gens, "skeleton")
                            for gens in data.get("skeleton", [])))
    walls = []
    for w in data.get("walls", []):
        support = cone_from_generators(fan.ambient.rank,
                                       [_int_vec(g) for g in w["support"]])
        direction = _int_vec(w["direction"], "direction")
        terms = {}
        for term in w.get("function", []):
            key = (_int_vec(term["z"], "z exponent"), _int_vec(term["A"], "class"))
            terms[key] = parse_rational(term["c"])
        func = make_series(fan.ambient.rank, classes, ideal, terms)
        walls.append(Wall(support, direction, func))
    return ScatteringDiagram(fan, skeleton, tuple(walls))


def build_table(data: dict) -> MirrorTable:
    if data.get("kind") != "table":
        raise InvalidInputError("expected kind 'table'")
    classes = build_classes(data["classes"])
    ideal = _ideal_over(classes, data["ideal"])
    points = [str(p) for p in data.get("points", [])]
    entries = {}
    for e in data.get("entries", []):
        key = (str(e["p"]), str(e["q"]), str(e["r"]), _int_vec(e["A"], "class"))
        entries[key] = parse_rational(e["N"])
    return mirror_table(classes, ideal, points, entries)


def series_to_json(f: TruncatedSeries) -> List[dict]:
    return [{"z": list(m), "A": list(a), "c": format_rational(c)}
            for (m, a), c in f.terms]


def diagram_to_json(d: ScatteringDiagram) -> dict:
    return {
        "kind": "diagram-report",
        "skeleton": [sorted(list(map(list, d.target.cones[c].generators)))
                     for c in d.skeleton],
        "walls": [{
            "support": [list(g) for g in w.support.generators],
            "direction": list(w.direction),
            "function": series_to_json(w.function),
        } for w in d.walls],
    }
