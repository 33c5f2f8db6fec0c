"""Command line interface.

    troplift validate|lift|index|push-sub|pull-sub|hilbert|monoid|wall|
             scatter-push|mirror-check <files...> [--out path]

Exit codes: 0 ok, 2 unrealizable/semantic, 3 invalid input, 4 truncation or
ideal errors.  Reports are deterministic: identical inputs give identical
bytes.  TROPLIFT_THREADS caps internal parallelism (the current
implementation is sequential, so any positive value is accepted).
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

from .errors import (
    GenerationBoundError,
    IdealMismatchError,
    InvalidInputError,
    NonIntegralAmalgamationError,
    NotAConeError,
    TropliftError,
    TruncationError,
    UnrealizableError,
)
from . import jsonio
from .cones import cone_dim, hilbert_basis, is_pointed
from .complexes import (
    maximal_cone_ids,
    pullback_subdivision,
    pushforward_subdivision,
    validate_complex,
    validate_plmap,
    validate_subdivision,
)
from .moduli import (
    enumerate_lifts,
    lattice_index,
    lift_partial_order,
    moduli_cone,
    universal_family,
    validate_type,
)
from .monoids import (
    is_saturated,
    membership,
    prestable_monoid,
    puncturing_monoid_Ql,
    saturation,
)
from .lattice import Lattice, LatticeMap, identity_map, mat_tuple
from .scattering import (
    diagrams_equivalent,
    kappa,
    mirror_pushforward_check,
    pushforward_diagram,
    skeleton_from_coefficients,
    validate_wall_type,
)

EXIT_OK = 0
EXIT_SEMANTIC = 2
EXIT_INPUT = 3
EXIT_TRUNCATION = 4


def _threads_from_env():
    raw = os.environ.get("TROPLIFT_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise InvalidInputError("TROPLIFT_THREADS must be an integer")
    if n < 1:
        raise InvalidInputError("TROPLIFT_THREADS must be positive")
    return n


def _vec(v):
    return "(" + ",".join(str(x) for x in v) + ")"


def _cone_str(c):
    if not c.generators:
        return "<0>"
    return "<" + ",".join(_vec(g) for g in c.generators) + ">"


def _row(r):
    return "[" + ",".join(jsonio.format_rational(Fraction(x)) for x in r) + "]"


class CommandError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _load(path):
    return jsonio.load_json(path)


def _load_lift_inputs(fan_path, sub_path, type_path):
    fan = jsonio.build_fan(_load(fan_path))
    rep = validate_complex(fan)
    if not rep.ok:
        raise CommandError(EXIT_INPUT, "invalid fan: " + "; ".join(rep.violations))
    sub = jsonio.build_subdivision(_load(sub_path), target=fan)
    rep = validate_subdivision(sub)
    if not rep.ok:
        raise CommandError(EXIT_INPUT, "invalid subdivision: " + "; ".join(rep.violations))
    t = jsonio.build_type(_load(type_path), fan)
    rep = validate_type(t)
    if not rep.ok:
        raise CommandError(EXIT_INPUT, "invalid type: " + "; ".join(rep.violations))
    return fan, sub, t


def _lift_lines(lifts, sub):
    lines = []
    fan = sub.map.source
    for n, lift in enumerate(lifts):
        g = lift.gamma.graph
        lines.append(f"lift {n}: {'maximal' if lift.maximal else 'truncated'}")
        lines.append(f"  lattice index m: {lift.index}")
        lines.append("  truncation: " + " ".join(
            f"leg{i}:{j}" for i, j in enumerate(lift.truncation_choice)))
        for v in range(g.n_vertices):
            lines.append(f"  vertex v{v}: genus {g.genus[v]} sigma "
                         + _cone_str(fan.cones[lift.gamma.sigma_v[v]]))
        for i, (a, b) in enumerate(g.edges):
            lines.append(
                f"  edge e{i}: v{a}->v{b} sigma "
                + _cone_str(fan.cones[lift.gamma.sigma_e[i]])
                + f" u {_vec(lift.gamma.u_e[i])} length {_row(lift.edge_lengths[i])}")
        for i, (v, punct) in enumerate(g.legs):
            kind = "punctured" if punct else "ordinary"
            lines.append(
                f"  leg l{i}: at v{v} {kind} sigma "
                + _cone_str(fan.cones[lift.gamma.sigma_l[i]])
                + f" u {_vec(lift.gamma.u_l[i])}")
    order = lift_partial_order(lifts)
    if order:
        lines.append("truncation order: " + " ".join(
            f"{i}<{j}" for i, j in sorted(order)))
    return lines


def _lift_json(lifts):
    out = []
    for lift in lifts:
        g = lift.gamma.graph
        out.append({
            "maximal": lift.maximal,
            "lattice_index": lift.index,
            "truncation": list(lift.truncation_choice),
            "vertices": [{"genus": g.genus[v],
                          "sigma": [list(x) for x in
                                    lift.gamma.target.cones[lift.gamma.sigma_v[v]].generators]}
                         for v in range(g.n_vertices)],
            "edges": [{"from": a, "to": b,
                       "u": list(lift.gamma.u_e[i]),
                       "length": [jsonio.format_rational(Fraction(x))
                                  for x in lift.edge_lengths[i]]}
                      for i, (a, b) in enumerate(g.edges)],
            "legs": [{"vertex": v, "punctured": p,
                      "u": list(lift.gamma.u_l[i])}
                     for i, (v, p) in enumerate(g.legs)],
        })
    return {"kind": "lift-report", "lifts": out}


def cmd_validate(args):
    lines = []
    ok = True
    for path in args.files:
        data = _load(path)
        kind = data["kind"]
        if kind == "fan":
            rep = validate_complex(jsonio.build_fan(data))
        elif kind == "subdivision":
            rep = validate_subdivision(jsonio.build_subdivision(data))
        elif kind == "type":
            fan = jsonio.build_fan(data["target"])
            rep = validate_type(jsonio.build_type(data, fan))
        elif kind == "diagram":
            from .scattering import validate_diagram
            rep = validate_diagram(jsonio.build_diagram(data))
        elif kind in ("monoid", "ideal", "classes", "classmap", "table", "cone",
                      "plmap", "puncturing"):
            _BUILDERS[kind](data)
            rep = None
        else:
            raise CommandError(EXIT_INPUT, f"{path}: unknown kind {kind!r}")
        if rep is None or rep.ok:
            lines.append(f"{path}: valid {kind}")
        else:
            ok = False
            lines.append(f"{path}: INVALID {kind}")
            for v in rep.violations:
                lines.append(f"  - {v}")
    return lines, {"kind": "validate-report", "lines": lines}, \
        EXIT_OK if ok else EXIT_SEMANTIC


_BUILDERS = {
    "monoid": jsonio.build_monoid,
    "ideal": jsonio.build_ideal,
    "classes": jsonio.build_classes,
    "classmap": jsonio.build_classmap,
    "table": jsonio.build_table,
    "cone": jsonio.build_cone,
    "plmap": jsonio.build_plmap,
    "puncturing": lambda data: data,
}


def cmd_hilbert(args):
    cone = jsonio.build_cone(_load(args.files[0]))
    basis = hilbert_basis(cone)
    lines = [f"cone: {_cone_str(cone)}",
             f"hilbert basis ({len(basis)} elements):"]
    lines += ["  " + _vec(v) for v in basis]
    return lines, {"kind": "hilbert-report",
                   "basis": [list(v) for v in basis]}, EXIT_OK


def cmd_lift(args):
    fan, sub, t = _load_lift_inputs(args.fan, args.subdivision, args.type)
    mc = moduli_cone(t)
    if mc is None:
        raise CommandError(EXIT_SEMANTIC, "type is not realizable")
    lifts = enumerate_lifts(mc, sub)
    lines = [f"moduli dimension: {mc.dim}", f"lifts: {len(lifts)}"]
    lines += _lift_lines(lifts, sub)
    return lines, _lift_json(lifts), EXIT_OK


def cmd_index(args):
    fan, sub, t = _load_lift_inputs(args.fan, args.subdivision, args.type)
    mc = moduli_cone(t)
    if mc is None:
        raise CommandError(EXIT_SEMANTIC, "type is not realizable")
    lifts = enumerate_lifts(mc, sub)
    lines = [f"lifts: {len(lifts)}"]
    for n, lift in enumerate(lifts):
        flag = "maximal" if lift.maximal else "truncated"
        lines.append(f"lift {n}: m = {lift.index} ({flag})")
    data = {"kind": "index-report",
            "indices": [lift.index for lift in lifts]}
    return lines, data, EXIT_OK


def cmd_push_sub(args):
    fan, sub, t = _load_lift_inputs(args.fan, args.subdivision, args.type)
    mc = moduli_cone(t)
    if mc is None:
        raise CommandError(EXIT_SEMANTIC, "type is not realizable")
    fam = universal_family(mc)
    pb = pullback_subdivision(fam.to_target, sub)
    from .complexes import PLMap
    proj_assignment = tuple(fam.to_base.assignment[pb.map.assignment[i][0]]
                            for i in range(len(pb.map.source.cones)))
    proj = PLMap(pb.map.source, fam.base, proj_assignment)
    push = pushforward_subdivision(proj)
    chambers = [push.map.source.cones[i] for i in maximal_cone_ids(push.map.source)]
    lines = [f"moduli dimension: {mc.dim}",
             f"moduli cone: {_cone_str(mc.cone)}",
             f"chambers: {len(chambers)}"]
    lines += ["  " + _cone_str(c) for c in sorted(chambers, key=lambda c: c.generators)]
    data = {"kind": "push-sub-report",
            "chambers": sorted([list(map(list, c.generators)) for c in chambers])}
    return lines, data, EXIT_OK


def cmd_pull_sub(args):
    plm = jsonio.build_plmap(_load(args.plmap))
    rep = validate_plmap(plm)
    if not rep.ok:
        raise CommandError(EXIT_INPUT, "invalid plmap: " + "; ".join(rep.violations))
    sub = jsonio.build_subdivision(_load(args.subdivision), target=plm.target)
    rep = validate_subdivision(sub)
    if not rep.ok:
        raise CommandError(EXIT_INPUT, "invalid subdivision: " + "; ".join(rep.violations))
    pb = pullback_subdivision(plm, sub)
    maxima = sorted(maximal_cone_ids(pb.map.source))
    lines = [f"refined cones: {len(maxima)} maximal"]
    for i in maxima:
        c = pb.map.source.cones[i]
        lines.append(f"  {_cone_str(c)} over source cone {pb.map.assignment[i][0]}")
    data = {"kind": "pull-sub-report",
            "maximal_cones": [list(map(list, pb.map.source.cones[i].generators))
                              for i in maxima]}
    return lines, data, EXIT_OK


def cmd_monoid(args):
    data = _load(args.files[0])
    if data["kind"] == "puncturing":
        gamma_dual = jsonio.build_monoid(data["gamma_dual"])
        r = gamma_dual.ambient.rank
        if "pullback" in data:
            matrix = mat_tuple([tuple(row) for row in data["pullback"]])
            pullback = LatticeMap(matrix, Lattice(len(matrix[0])), Lattice(r + 1))
        else:
            pullback = identity_map(Lattice(r + 1))
        mu_dual = [tuple(v) for v in data.get("mu_dual", [])]
        ql = puncturing_monoid_Ql(gamma_dual, mu_dual, pullback)
        lines = [f"Q_l generators: " + " ".join(_vec(g) for g in ql.generators)]
        out = {"kind": "monoid-report", "Q_l": [list(g) for g in ql.generators]}
        if "rho" in data:
            pre = prestable_monoid(ql, tuple(data["rho"]))
            lines.append("prestable generators: "
                         + " ".join(_vec(g) for g in pre.generators))
            out["prestable"] = [list(g) for g in pre.generators]
        return lines, out, EXIT_OK
    m = jsonio.build_monoid(data)
    sat = saturation(m)
    lines = [
        "canonical generators: " + " ".join(_vec(g) for g in m.generators),
        f"saturated: {'yes' if is_saturated(m) else 'no'}",
        "saturation generators: " + " ".join(_vec(g) for g in sat.generators),
    ]
    out = {"kind": "monoid-report",
           "generators": [list(g) for g in m.generators],
           "saturated": is_saturated(m),
           "saturation": [list(g) for g in sat.generators]}
    return lines, out, EXIT_OK


def cmd_wall(args):
    fan = jsonio.build_fan(_load(args.fan))
    t = jsonio.build_type(_load(args.type), fan)
    if args.coeffs is not None:
        coeffs = [jsonio.parse_rational(x) for x in args.coeffs.split(",")]
        skeleton = skeleton_from_coefficients(fan, coeffs)
    else:
        skeleton = tuple(range(len(fan.cones)))
    rep = validate_wall_type(t, skeleton, fan.ambient.rank)
    lines = []
    if rep.ok:
        lines.append("wall type: valid")
        k = kappa(t)
        lines.append(f"kappa: {k}")
        data = {"kind": "wall-report", "valid": True, "kappa": k}
        return lines, data, EXIT_OK
    lines.append("wall type: INVALID")
    lines += ["  - " + v for v in rep.violations]
    return lines, {"kind": "wall-report", "valid": False,
                   "violations": list(rep.violations)}, EXIT_SEMANTIC


def cmd_scatter_push(args):
    diagram = jsonio.build_diagram(_load(args.diagram))
    sub = jsonio.build_subdivision(_load(args.subdivision),
                                   target=None if args.base_fan is None
                                   else jsonio.build_fan(_load(args.base_fan)))
    classmap_data = _load(args.classmap)
    hom = jsonio.build_classmap(classmap_data)
    kwargs = {"target_classes": jsonio.build_classes(classmap_data["target"])}
    if args.target_classes:
        kwargs["target_classes"] = jsonio.build_classes(_load(args.target_classes))
    if args.target_ideal:
        ideal_data = _load(args.target_ideal)
        classes = kwargs.get("target_classes")
        if classes is None:
            raise CommandError(EXIT_INPUT, "--target-ideal requires --target-classes")
        kwargs["target_ideal"] = jsonio._ideal_over(classes, ideal_data)
    pushed = pushforward_diagram(diagram, sub, hom, **kwargs)
    lines = [f"walls: {len(pushed.walls)}"]
    for w in pushed.walls:
        lines.append(f"  support {_cone_str(w.support)} direction {_vec(w.direction)}")
        for (m, a), c in w.function.terms:
            lines.append(f"    z^{_vec(m)} q^{_vec(a)} : {jsonio.format_rational(c)}")
    data = jsonio.diagram_to_json(pushed)
    code = EXIT_OK
    if args.reference:
        ref = jsonio.build_diagram(_load(args.reference))
        ok, wit = diagrams_equivalent(pushed, ref)
        if ok:
            lines.append("equivalence: equivalent")
            data["equivalent"] = True
        else:
            lines.append("equivalence: inequivalent")
            lines.append(f"  witness support {wit[0]} monomial z^{_vec(wit[1][0])}"
                         f" q^{_vec(wit[1][1])}: {jsonio.format_rational(wit[2])}"
                         f" != {jsonio.format_rational(wit[3])}")
            data["equivalent"] = False
            data["witness"] = {
                "support": [list(g) for g in wit[0]],
                "z": list(wit[1][0]), "A": list(wit[1][1]),
                "lhs": jsonio.format_rational(wit[2]),
                "rhs": jsonio.format_rational(wit[3]),
            }
            code = EXIT_SEMANTIC
    return lines, data, code


def cmd_mirror_check(args):
    up = jsonio.build_table(_load(args.upstairs))
    down = jsonio.build_table(_load(args.downstairs))
    hom = jsonio.build_classmap(_load(args.classmap))
    ok, witnesses = mirror_pushforward_check(up, down, hom)
    lines = [f"verdict: {'pass' if ok else 'fail'}"]
    for p, q, r, a in witnesses:
        lines.append(f"  violated at (p={p}, q={q}, r={r}, A={_vec(a)})")
    data = {"kind": "mirror-report", "pass": ok,
            "witnesses": [{"p": p, "q": q, "r": r, "A": list(a)}
                          for p, q, r, a in witnesses]}
    return lines, data, EXIT_OK if ok else EXIT_SEMANTIC


def make_parser():
    parser = argparse.ArgumentParser(prog="troplift", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("validate", help="validate input files")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = subs.add_parser("hilbert", help="Hilbert basis of a pointed cone")
    p.add_argument("files", nargs=1)
    p.set_defaults(func=cmd_hilbert)

    for name, func in (("lift", cmd_lift), ("index", cmd_index),
                       ("push-sub", cmd_push_sub)):
        p = subs.add_parser(name)
        p.add_argument("fan")
        p.add_argument("subdivision")
        p.add_argument("type")
        p.set_defaults(func=func)

    p = subs.add_parser("pull-sub")
    p.add_argument("plmap")
    p.add_argument("subdivision")
    p.set_defaults(func=cmd_pull_sub)

    p = subs.add_parser("monoid")
    p.add_argument("files", nargs=1)
    p.set_defaults(func=cmd_monoid)

    p = subs.add_parser("wall")
    p.add_argument("fan")
    p.add_argument("type")
    p.add_argument("--coeffs", default=None,
                   help="comma-separated anticanonical coefficients per ray")
    p.set_defaults(func=cmd_wall)

    p = subs.add_parser("scatter-push")
    p.add_argument("diagram")
    p.add_argument("subdivision")
    p.add_argument("classmap")
    p.add_argument("--reference", default=None)
    p.add_argument("--base-fan", default=None)
    p.add_argument("--target-classes", default=None)
    p.add_argument("--target-ideal", default=None)
    p.set_defaults(func=cmd_scatter_push)

    p = subs.add_parser("mirror-check")
    p.add_argument("upstairs")
    p.add_argument("downstairs")
    p.add_argument("classmap")
    p.set_defaults(func=cmd_mirror_check)

    for p in subs.choices.values():
        p.add_argument("--out", default=None, help="write a JSON report")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        _threads_from_env()
        lines, data, code = args.func(args)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (TruncationError, IdealMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except (GenerationBoundError, NonIntegralAmalgamationError, NotAConeError,
            UnrealizableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TropliftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC
    for line in lines:
        print(line)
    if args.out:
        jsonio.dump_json(args.out, data)
    return code


if __name__ == "__main__":
    sys.exit(main())
