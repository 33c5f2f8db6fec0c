"""Tropical types of punctured maps, their moduli cones, and tropical lifts.

A type assigns to each vertex, edge, and leg of a graph a cone of an embedded
target complex, and to each edge/leg an integral contact order.  Moduli cones
are cut out exactly (strict feasibility decided by rational Fourier-Motzkin
elimination); the lift enumeration follows the pullback / pushforward /
chain-classification / truncation pipeline, with lattice coarsenings making
edge lengths integral.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import (
    EmbeddingRequiredError,
    FiberBoundError,
    InvalidInputError,
    TropliftError,
    UnrealizableError,
)
from .cones import (
    LatticeCone,
    cone_contains,
    cone_dim,
    cone_from_generators,
    cone_from_inequalities,
    cones_equal,
    interior_point,
    is_pointed,
    positive_grading,
    relative_volume,
    span_rows,
)
from .complexes import (
    ConeComplex,
    PLMap,
    Report,
    Subdivision,
    abstract_complex,
    complex_from_cones,
    find_cone,
    maximal_cone_ids,
    minimal_containing_cone,
    pullback_subdivision,
    pushforward_subdivision,
    validate_subdivision,
)
from .lattice import (
    IntVector,
    Lattice,
    LatticeMap,
    coords_in_basis,
    identity_map,
    integral_sublattice,
    kernel_basis,
    mat_identity,
    mat_tuple,
    mat_vec,
    primitive,
    smith_torsion,
    solve_rational,
    transpose,
    vec_add,
    vec_dot,
    vec_neg,
    vec_sub,
)


@dataclass(frozen=True)
class TropGraph:
    """A finite connected graph with genus, oriented edges, and legs."""

    genus: Tuple[int, ...]
    edges: Tuple[Tuple[int, int], ...]
    legs: Tuple[Tuple[int, bool], ...]  # (vertex, punctured)

    @property
    def n_vertices(self) -> int:
        return len(self.genus)

    def incident(self, v: int) -> List[Tuple[str, int]]:
        out = []
        for i, (a, b) in enumerate(self.edges):
            if a == v:
                out.append(("e", i))
            if b == v:
                out.append(("e", i))
        for i, (w, _) in enumerate(self.legs):
            if w == v:
                out.append(("l", i))
        return out

    def is_connected(self) -> bool:
        n = self.n_vertices
        if n == 0:
            return False
        seen = {0}
        frontier = [0]
        while frontier:
            v = frontier.pop()
            for a, b in self.edges:
                for x, y in ((a, b), (b, a)):
                    if x == v and y not in seen:
                        seen.add(y)
                        frontier.append(y)
        return len(seen) == n


@dataclass(frozen=True)
class TropicalType:
    """Combinatorial type of a family of punctured tropical maps."""

    graph: TropGraph
    target: ConeComplex
    sigma_v: Tuple[int, ...]
    sigma_e: Tuple[int, ...]
    sigma_l: Tuple[int, ...]
    u_e: Tuple[IntVector, ...]
    u_l: Tuple[IntVector, ...]


@dataclass(frozen=True)
class DecoratedType:
    """A tropical type with a curve class attached to every vertex."""

    type: TropicalType
    classes: object  # CurveClassMonoid (duck-typed: .ambient, .effective_generators)
    decoration: Tuple[IntVector, ...]


@dataclass(frozen=True)
class ModuliCone:
    """Universal moduli cone of a realizable type, in minimal coordinates."""

    type: TropicalType
    cone: LatticeCone
    vertex_maps: Tuple[Tuple[IntVector, ...], ...]  # n x d matrix per vertex
    edge_lengths: Tuple[IntVector, ...]             # length functional per edge

    @property
    def dim(self) -> int:
        return cone_dim(self.cone)


@dataclass(frozen=True)
class Family:
    """Universal family of a moduli cone as an abstract cone complex."""

    complex: ConeComplex
    to_target: PLMap
    to_base: PLMap
    base: ConeComplex
    items: Tuple[Tuple[str, int], ...]  # per family cone: ("v"|"e"|"l", index)


# ------------------------------------------------------------- type checking

def validate_type(t: TropicalType) -> Report:
    bad: List[str] = []
    g = t.graph
    if not t.target.embedded:
        bad.append("target complex is not embedded")
        return Report(tuple(bad))
    if not g.is_connected():
        bad.append("graph is not connected")
    pairs = t.target.face_pairs()
    for i, (a, b) in enumerate(g.edges):
        for v in (a, b):
            if (t.sigma_v[v], t.sigma_e[i]) not in pairs:
                bad.append(f"sigma(v{v}) is not a face of sigma(e{i})")
        u = t.u_e[i]
        span = span_rows(t.target.cones[t.sigma_e[i]])
        if coords_in_basis(span, u) is None:
            bad.append(f"u(e{i}) is not in the lattice of sigma(e{i})")
        contracted = (t.sigma_e[i] == t.sigma_v[a] == t.sigma_v[b])
        if all(x == 0 for x in u) and not contracted:
            bad.append(f"edge e{i} has zero contact order but is not contracted")
    for i, (v, _) in enumerate(g.legs):
        if (t.sigma_v[v], t.sigma_l[i]) not in pairs:
            bad.append(f"sigma(v{v}) is not a face of sigma(l{i})")
        span = span_rows(t.target.cones[t.sigma_l[i]])
        if coords_in_basis(span, t.u_l[i]) is None:
            bad.append(f"u(l{i}) is not in the lattice of sigma(l{i})")
    return Report(tuple(bad))


def is_balanced(t: TropicalType) -> bool:
    """Ambient-lattice balancing: outgoing contact orders sum to zero at
    every vertex (embedded targets only)."""
    if not t.target.embedded:
        raise EmbeddingRequiredError("balancing requires embedding")
    n = t.target.ambient.rank
    for v in range(t.graph.n_vertices):
        total = (0,) * n
        for i, (a, b) in enumerate(t.graph.edges):
            if a == v:
                total = vec_add(total, t.u_e[i])
            if b == v:
                total = vec_sub(total, t.u_e[i])
        for i, (w, _) in enumerate(t.graph.legs):
            if w == v:
                total = vec_add(total, t.u_l[i])
        if any(x != 0 for x in total):
            return False
    return True


# -------------------------------------------------- strict rational LP (FM)

def _fm_strictly_feasible(rows: List[Tuple[tuple, bool]]) -> bool:
    """Decide feasibility of a homogeneous system of (functional, strict) rows
    by Fourier-Motzkin elimination with exact rationals."""

    def normalize(rs):
        seen = {}
        for coeffs, strict in rs:
            fr = [Fraction(x) for x in coeffs]
            if all(x == 0 for x in fr):
                if strict:
                    return None
                continue
            lcm = 1
            for x in fr:
                lcm = lcm * x.denominator // _gcd(lcm, x.denominator)
            iv = tuple(int(x * lcm) for x in fr)
            iv = primitive(iv)
            seen[iv] = seen.get(iv, False) or strict
        return [(k, v) for k, v in seen.items()]

    def _gcd(a, b):
        from math import gcd as _g
        return _g(a, b)

    current = normalize(rows)
    if current is None:
        return False
    if not current:
        return True
    nvars = len(current[0][0])
    alive = list(range(nvars))
    while alive:
        # pick the variable with the fewest pos*neg combinations
        best_var, best_cost = None, None
        for var in alive:
            pos = sum(1 for c, _ in current if c[var] > 0)
            neg = sum(1 for c, _ in current if c[var] < 0)
            cost = pos * neg
            if best_cost is None or cost < best_cost:
                best_cost, best_var = cost, var
        var = best_var
        pos = [(c, s) for c, s in current if c[var] > 0]
        neg = [(c, s) for c, s in current if c[var] < 0]
        zero = [(c, s) for c, s in current if c[var] == 0]
        new = list(zero)
        for (cp, sp), (cn, sn) in itertools.product(pos, neg):
            comb = tuple(cp[var] * x - cn[var] * y for x, y in zip(cn, cp))
            new.append((comb, sp or sn))
        current = normalize(new)
        if current is None:
            return False
        alive.remove(var)
        if not current:
            return True
    return True


# ---------------------------------------------------------------- moduli

def _static_realizability(t: TropicalType) -> Optional[str]:
    """Checks with no moduli content; returns a reason when unrealizable."""
    g = t.graph
    tgt = t.target
    for i, (a, b) in enumerate(g.edges):
        ce = tgt.cones[t.sigma_e[i]]
        contracted = (t.sigma_e[i] == t.sigma_v[a] == t.sigma_v[b])
        if contracted:
            continue
        ca, cb = tgt.cones[t.sigma_v[a]], tgt.cones[t.sigma_v[b]]
        for f in ce.facets:
            if all(vec_dot(f, x) == 0 for x in ca.generators) and \
               all(vec_dot(f, x) == 0 for x in cb.generators):
                if any(vec_dot(f, x) != 0 for x in ce.generators):
                    return f"edge e{i} cannot meet the interior of sigma(e{i})"
    for i, (v, punctured) in enumerate(g.legs):
        cl = tgt.cones[t.sigma_l[i]]
        cv = tgt.cones[t.sigma_v[v]]
        u = t.u_l[i]
        if not punctured and not cone_contains(cl, u):
            return f"ordinary leg l{i} has direction outside sigma(l{i})"
        if t.sigma_l[i] != t.sigma_v[v]:
            for f in cl.facets:
                vanishes = all(vec_dot(f, x) == 0 for x in cv.generators)
                proper = any(vec_dot(f, x) != 0 for x in cl.generators)
                if vanishes and proper and vec_dot(f, u) <= 0:
                    return f"leg l{i} does not enter the interior of sigma(l{i})"
    return None


def moduli_cone(t: TropicalType) -> Optional[ModuliCone]:
    """Universal moduli cone of a type, or None when unrealizable."""
    rep = validate_type(t)
    if not rep.ok:
        raise InvalidInputError("; ".join(rep.violations))
    if _static_realizability(t) is not None:
        return None
    g = t.graph
    n = t.target.ambient.rank
    nv, ne = g.n_vertices, len(g.edges)
    nvars = n * nv + ne

    def h_slot(v, coord):
        return v * n + coord

    def unit(i):
        row = [0] * nvars
        row[i] = 1
        return row

    equalities = []
    for i, (a, b) in enumerate(g.edges):
        for coord in range(n):
            row = [0] * nvars
            row[h_slot(b, coord)] += 1
            row[h_slot(a, coord)] -= 1
            row[n * nv + i] -= t.u_e[i][coord]
            equalities.append(row)
    kernel = kernel_basis(equalities, nvars) if equalities else mat_tuple(mat_identity(nvars))

    weak_rows: List[tuple] = []
    strict_rows: List[tuple] = []
    for v in range(nv):
        cv = t.target.cones[t.sigma_v[v]]
        for f in cv.facets:
            row = [0] * nvars
            for coord in range(n):
                row[h_slot(v, coord)] = f[coord]
            weak_rows.append(tuple(row))
            if any(vec_dot(f, x) != 0 for x in cv.generators):
                strict_rows.append(tuple(row))
        if not cv.generators:
            # vertex pinned to the zero cone
            for coord in range(n):
                weak_rows.append(tuple(unit(h_slot(v, coord))))
                weak_rows.append(tuple([-x for x in unit(h_slot(v, coord))]))
    for i in range(ne):
        row = tuple(unit(n * nv + i))
        weak_rows.append(row)
        strict_rows.append(row)

    def to_kernel(row):
        return tuple(vec_dot(row, b) for b in kernel)

    weak_k = [to_kernel(r) for r in weak_rows]
    strict_k = [to_kernel(r) for r in strict_rows]
    feasible = _fm_strictly_feasible(
        [(r, False) for r in weak_k] + [(r, True) for r in strict_k])
    if not feasible:
        return None
    k0 = len(kernel)
    weak_cone = cone_from_inequalities(k0, weak_k) if k0 else cone_from_generators(0, [])
    span = span_rows(weak_cone)
    d = len(span)
    # x = kernel^T . y, y = span^T . z
    m_full = []
    for i in range(nvars):
        m_full.append(tuple(
            sum(kernel[j][i] * span[t2][j] for j in range(k0)) for t2 in range(d)))
    gens_z = []
    for gcone in weak_cone.generators:
        coords = coords_in_basis(span, gcone)
        assert coords is not None and all(c.denominator == 1 for c in coords)
        gens_z.append(tuple(int(c) for c in coords))
    cone_final = cone_from_generators(d, gens_z)
    vertex_maps = tuple(
        tuple(m_full[h_slot(v, coord)] for coord in range(n)) for v in range(nv))
    edge_rows = tuple(m_full[n * nv + i] for i in range(ne))
    return ModuliCone(t, cone_final, vertex_maps, edge_rows)


def universal_family(mc: ModuliCone) -> Family:
    """The universal family over a moduli cone, as an abstract complex."""
    t = mc.type
    g = t.graph
    n = t.target.ambient.rank
    d = cone_dim(mc.cone)
    tau = mc.cone
    cones: List[LatticeCone] = []
    items: List[Tuple[str, int]] = []
    to_target: List[Tuple[int, LatticeMap]] = []
    to_base: List[Tuple[int, LatticeMap]] = []
    faces: List[Tuple[int, int, LatticeMap]] = []

    base = complex_from_cones(d, [tau.generators])
    tau_id = find_cone(base, tau)
    proj_rows = mat_tuple([list(row) + [0] for row in mat_identity(d)])

    def lifted_rows(rows):
        return [tuple(list(r) + [0]) for r in rows]

    vertex_cone_id = {}
    for v in range(g.n_vertices):
        vertex_cone_id[v] = len(cones)
        cones.append(tau)
        items.append(("v", v))
        to_target.append((t.sigma_v[v], LatticeMap(mc.vertex_maps[v], Lattice(d), Lattice(n))))
        to_base.append((tau_id, identity_map(Lattice(d))))

    def ray_row():
        return tuple([0] * d + [1])

    for i, (a, b) in enumerate(g.edges):
        rows = lifted_rows(tau.facets) + [ray_row()]
        rows.append(tuple(list(mc.edge_lengths[i]) + [-1]))
        c = cone_from_inequalities(d + 1, rows)
        idx = len(cones)
        cones.append(c)
        items.append(("e", i))
        mat = mat_tuple([list(mc.vertex_maps[a][coord]) + [t.u_e[i][coord]]
                         for coord in range(n)])
        to_target.append((t.sigma_e[i], LatticeMap(mat, Lattice(d + 1), Lattice(n))))
        to_base.append((tau_id, LatticeMap(proj_rows, Lattice(d + 1), Lattice(d))))
        tail_map = LatticeMap(mat_tuple([list(r) for r in mat_identity(d)] + [[0] * d]),
                              Lattice(d), Lattice(d + 1))
        head_map = LatticeMap(mat_tuple([list(r) for r in mat_identity(d)] +
                                        [list(mc.edge_lengths[i])]),
                              Lattice(d), Lattice(d + 1))
        faces.append((vertex_cone_id[a], idx, tail_map))
        faces.append((vertex_cone_id[b], idx, head_map))

    for i, (v, _) in enumerate(g.legs):
        rows = lifted_rows(tau.facets) + [ray_row()]
        cl = t.target.cones[t.sigma_l[i]]
        for f in cl.facets:
            hrow = [vec_dot(f, tuple(mc.vertex_maps[v][coord][j] for coord in range(n)))
                    for j in range(d)]
            rows.append(tuple(hrow + [vec_dot(f, t.u_l[i])]))
        c = cone_from_inequalities(d + 1, rows)
        idx = len(cones)
        cones.append(c)
        items.append(("l", i))
        mat = mat_tuple([list(mc.vertex_maps[v][coord]) + [t.u_l[i][coord]]
                         for coord in range(n)])
        to_target.append((t.sigma_l[i], LatticeMap(mat, Lattice(d + 1), Lattice(n))))
        to_base.append((tau_id, LatticeMap(proj_rows, Lattice(d + 1), Lattice(d))))
        tail_map = LatticeMap(mat_tuple([list(r) for r in mat_identity(d)] + [[0] * d]),
                              Lattice(d), Lattice(d + 1))
        faces.append((vertex_cone_id[v], idx, tail_map))

    complex_ = abstract_complex(cones, faces)
    f_target = PLMap(complex_, t.target, tuple(to_target))
    f_base = PLMap(complex_, base, tuple(to_base))
    return Family(complex_, f_target, f_base, base, tuple(items))


# ----------------------------------------------------------- lift machinery

@dataclass(frozen=True)
class TropicalLift:
    """A tropical lift of a base type under a target subdivision."""

    gamma: TropicalType
    tau: TropicalType
    inclusion: LatticeMap
    cone: LatticeCone
    maximal: bool
    truncation_choice: Tuple[int, ...]
    index: int
    contraction: Tuple[int, ...]
    edge_lengths: Tuple[tuple, ...]
    chambers: Tuple[LatticeCone, ...]
    leg_intervals: Tuple[Tuple[tuple, Optional[tuple]], ...] = field(compare=False)


def lattice_index(l: TropicalLift) -> int:
    return smith_torsion(l.inclusion)[0]


def _row_fraction(row) -> tuple:
    return tuple(Fraction(x) for x in row)


def _piece_graph_faces(piece: LatticeCone, d: int):
    """Faces of a (d+1)-cone that are graphs of linear functions over the base."""
    out = []
    for f in piece.facets:
        if all(vec_dot(f, g) == 0 for g in piece.generators):
            continue
        face = cone_from_inequalities(d + 1, list(piece.facets) + [f, vec_neg(f)])
        if cone_dim(face) != d:
            continue
        if d == 0:
            out.append(((), face))
            continue
        ys = [g[:d] for g in face.generators]
        if len(ys) == 0 or _rank(ys) != d:
            continue
        rho = solve_rational(ys, [g[d] for g in face.generators])
        if rho is None:
            continue
        out.append((_row_fraction(rho), face))
    dedup = {}
    for rho, face in out:
        dedup[rho] = face
    return sorted(dedup.items())


def _rank(rows):
    from .lattice import rational_rank
    return rational_rank(rows)


def _eval_row(row, point):
    return sum(Fraction(a) * Fraction(b) for a, b in zip(row, point))


class _ChainPiece:
    def __init__(self, cone, lo, hi, lo_face, hi_face, sigma):
        self.cone = cone
        self.lo = lo
        self.hi = hi            # None for an unbounded top piece
        self.lo_face = lo_face
        self.hi_face = hi_face
        self.sigma = sigma


def _restrict_to_chamber(piece: LatticeCone, omega: LatticeCone, d: int) -> LatticeCone:
    rows = list(piece.facets) + [tuple(list(f) + [0]) for f in omega.facets]
    return cone_from_inequalities(d + 1, rows)


def _sigma_of(sub_source: ConeComplex, mat, cone: LatticeCone) -> int:
    pts = [mat_vec(mat, g) for g in cone.generators]
    pts.append(mat_vec(mat, interior_point(cone)))
    return minimal_containing_cone(sub_source, pts)


def enumerate_lifts(tau: ModuliCone, s: Subdivision) -> List[TropicalLift]:
    """All tropical lifts of a realizable type under a target subdivision.

    Follows the pipeline: pull the subdivision back along the universal
    family, push forward to subdivide the moduli cone, classify family cones
    over each chamber into vertices/edges/legs, coarsen the lattice to make
    edge lengths integral, and enumerate leg-chain truncations.  Output is
    canonically ordered and deduplicated across chambers.
    """
    if s.map.target != tau.type.target:
        raise InvalidInputError("subdivision target does not match the type's target")
    rep = validate_subdivision(s)
    if not rep.ok:
        raise InvalidInputError("invalid subdivision: " + "; ".join(rep.violations))
    fam = universal_family(tau)
    pb = pullback_subdivision(fam.to_target, s)
    refined = pb.map.source
    d = cone_dim(tau.cone)
    # projection of the refined family to the base cone complex
    proj_assignment = []
    for i in range(len(refined.cones)):
        orig = pb.map.assignment[i][0]
        proj_assignment.append(fam.to_base.assignment[orig])
    proj = PLMap(refined, fam.base, tuple(proj_assignment))
    push = pushforward_subdivision(proj)
    chamber_ids = [i for i in maximal_cone_ids(push.map.source)
                   if cone_dim(push.map.source.cones[i]) == d]
    chambers = [push.map.source.cones[i] for i in chamber_ids]

    fam_cone_of_item = {item: idx for idx, item in enumerate(fam.items)}
    sub_source = s.map.source
    g = tau.type.graph
    nl = len(g.legs)

    candidates: Dict[tuple, dict] = {}
    for omega in chambers:
        y_star = interior_point(omega)
        vertex_sigma = {}
        for v in range(g.n_vertices):
            hv = tau.vertex_maps[v]
            pts = [mat_vec(hv, gg) for gg in omega.generators]
            pts.append(mat_vec(hv, y_star))
            vertex_sigma[v] = minimal_containing_cone(sub_source, pts)
        chains: Dict[Tuple[str, int], List[_ChainPiece]] = {}
        for kind, idx in [("e", i) for i in range(len(g.edges))] + \
                         [("l", i) for i in range(nl)]:
            fam_idx = fam_cone_of_item[(kind, idx)]
            mat = fam.to_target.assignment[fam_idx][1].matrix
            pieces = []
            for r_idx in range(len(refined.cones)):
                if pb.map.assignment[r_idx][0] != fam_idx:
                    continue
                pc = _restrict_to_chamber(refined.cones[r_idx], omega, d)
                if cone_dim(pc) != d + 1:
                    continue
                graph_faces = _piece_graph_faces(pc, d)
                if not 1 <= len(graph_faces) <= 2:
                    raise TropliftError("unexpected chain piece geometry")
                if len(graph_faces) == 2:
                    (r1, f1), (r2, f2) = graph_faces
                    if _eval_row(r1, y_star) <= _eval_row(r2, y_star):
                        lo, lo_face, hi, hi_face = r1, f1, r2, f2
                    else:
                        lo, lo_face, hi, hi_face = r2, f2, r1, f1
                else:
                    (lo, lo_face), = graph_faces
                    hi, hi_face = None, None
                sigma = _sigma_of(sub_source, mat, pc)
                pieces.append(_ChainPiece(pc, lo, hi, lo_face, hi_face, sigma))
            pieces.sort(key=lambda p: _eval_row(p.lo, y_star))
            if any(p is not pieces[-1] and p.hi is None for p in pieces):
                raise TropliftError("unbounded chain piece below the top")
            dedup = []
            for p in pieces:
                if not any(cones_equal(p.cone, q.cone) for q in dedup):
                    dedup.append(p)
            chains[(kind, idx)] = dedup
        node_sigma: Dict[Tuple[str, int, int], int] = {}
        for key, pieces in chains.items():
            kind, idx = key
            fam_idx = fam_cone_of_item[key]
            mat = fam.to_target.assignment[fam_idx][1].matrix
            for j in range(len(pieces) - 1):
                face = pieces[j].hi_face
                if face is None:
                    raise TropliftError("missing junction between chain pieces")
                node_sigma[(kind, idx, j)] = _sigma_of(sub_source, mat, face)
        # enumerate truncation choices
        leg_counts = [len(chains[("l", i)]) for i in range(nl)]
        if any(c == 0 for c in leg_counts):
            raise TropliftError("a leg chain is empty over a chamber")
        for choice in itertools.product(*[range(1, c + 1) for c in leg_counts]):
            cand = _assemble_candidate(tau, s, omega, vertex_sigma, chains,
                                       node_sigma, choice, leg_counts)
            key = cand["key"]
            if key in candidates:
                entry = candidates[key]
                if not any(cones_equal(omega, c) for c in entry["chambers"]):
                    entry["chambers"].append(omega)
                    entry["leg_intervals"].append(cand["leg_intervals"][0])
                if entry["maximal"] != cand["maximal"]:
                    raise TropliftError("inconsistent maximality across chambers")
            else:
                candidates[key] = cand

    lifts = []
    for key in sorted(candidates):
        cand = candidates[key]
        cone_union = cone_from_generators(
            d, [gg for c in cand["chambers"] for gg in c.generators])
        if len(cand["chambers"]) > 1:
            ell = positive_grading(tau.cone) if d else ()
            span = span_rows(tau.cone)
            if d:
                total = relative_volume(cone_union, span, ell)
                covered = sum((relative_volume(c, span, ell) for c in cand["chambers"]),
                              start=total * 0)
                if covered != total:
                    raise TropliftError("lift support is not a cone")
        basis, index = integral_sublattice(
            d, [row for row in cand["edge_lengths"]])
        inclusion = LatticeMap(mat_tuple(transpose(basis)) if d else (),
                               Lattice(d), Lattice(d))
        lifts.append(TropicalLift(
            gamma=cand["gamma"],
            tau=tau.type,
            inclusion=inclusion,
            cone=cone_union,
            maximal=cand["maximal"],
            truncation_choice=tuple(cand["choice"]),
            index=index,
            contraction=tuple(cand["contraction"]),
            edge_lengths=tuple(cand["edge_lengths"]),
            chambers=tuple(cand["chambers"]),
            leg_intervals=tuple(cand["leg_intervals"][0]),
        ))
    return lifts


def _assemble_candidate(tau, s, omega, vertex_sigma, chains, node_sigma,
                        choice, leg_counts):
    g = tau.type.graph
    vertices: List[Tuple[str, tuple]] = []  # ("base", (v,)) or ("node", (kind, idx, j))
    vid: Dict[tuple, int] = {}

    def add_vertex(tag, genus, sigma):
        vid[tag] = len(vertices)
        vertices.append((tag, genus, sigma))
        return vid[tag]

    for v in range(g.n_vertices):
        add_vertex(("v", v), g.genus[v], vertex_sigma[v])
    for key, pieces in sorted(chains.items()):
        kind, idx = key
        limit = len(pieces) - 1 if kind == "e" else choice[idx] - 1
        for j in range(limit):
            add_vertex((kind, idx, j), 0, node_sigma[(kind, idx, j)])

    edges = []
    sigma_e = []
    u_e = []
    lengths = []
    legs = []
    sigma_l = []
    u_l = []
    leg_intervals = []
    contraction = []
    for tag, _, _ in vertices:
        if tag[0] == "v":
            contraction.append(tag[1])
        else:
            kind, idx, _ = tag
            if kind == "e":
                contraction.append(g.edges[idx][0])
            else:
                contraction.append(g.legs[idx][0])

    for i, (a, b) in enumerate(g.edges):
        pieces = chains[("e", i)]
        prev = vid[("v", a)]
        for j, p in enumerate(pieces):
            nxt = vid[("v", b)] if j == len(pieces) - 1 else vid[("e", i, j)]
            edges.append((prev, nxt))
            sigma_e.append(p.sigma)
            u_e.append(tau.type.u_e[i])
            hi = p.hi if p.hi is not None else tuple(
                Fraction(x) for x in tau.edge_lengths[i])
            lengths.append(tuple(x - y for x, y in zip(hi, p.lo)))
            prev = nxt
    for i in range(len(g.legs)):
        pieces = chains[("l", i)]
        j_keep = choice[i]
        base_v, base_punct = g.legs[i]
        prev = vid[("v", base_v)]
        for j in range(j_keep - 1):
            p = pieces[j]
            nxt = vid[("l", i, j)]
            edges.append((prev, nxt))
            sigma_e.append(p.sigma)
            u_e.append(tau.type.u_l[i])
            lengths.append(tuple(x - y for x, y in zip(p.hi, p.lo)))
            prev = nxt
        top = pieces[j_keep - 1]
        legs.append((prev, True if j_keep < len(pieces) else base_punct))
        sigma_l.append(top.sigma)
        u_l.append(tau.type.u_l[i])
        leg_intervals.append((top.lo, top.hi))

    graph = TropGraph(tuple(genus for _, genus, _ in vertices),
                      tuple(edges), tuple(legs))
    gamma = TropicalType(graph, s.map.source,
                         tuple(sig for _, _, sig in vertices),
                         tuple(sigma_e), tuple(sigma_l),
                         tuple(u_e), tuple(u_l))
    key = canonical_type_key(gamma, edge_extra=tuple(lengths))
    maximal = all(choice[i] == leg_counts[i] for i in range(len(leg_counts)))
    return {
        "key": key,
        "gamma": gamma,
        "edge_lengths": lengths,
        "maximal": maximal,
        "choice": choice,
        "contraction": contraction,
        "chambers": [omega],
        "leg_intervals": [tuple(leg_intervals)],
    }


# ------------------------------------------------ canonical forms, matching

def _sigma_key(t: TropicalType, cone_id: int):
    return t.target.cones[cone_id].generators


def canonical_type_key(t: TropicalType, edge_extra=None, leg_extra=None):
    """A canonical serialization of (G, sigma, u) up to graph isomorphism."""
    g = t.graph
    nv = g.n_vertices
    edge_extra = edge_extra or tuple(None for _ in g.edges)
    leg_extra = leg_extra or tuple(None for _ in g.legs)

    def profile(v):
        items = []
        for i, (a, b) in enumerate(g.edges):
            if a == v:
                items.append(("e", _sigma_key(t, t.sigma_e[i]), t.u_e[i], edge_extra[i]))
            if b == v:
                items.append(("e", _sigma_key(t, t.sigma_e[i]),
                              vec_neg(t.u_e[i]), edge_extra[i]))
        for i, (w, punct) in enumerate(g.legs):
            if w == v:
                items.append(("l", _sigma_key(t, t.sigma_l[i]), t.u_l[i], punct,
                              leg_extra[i]))
        return tuple(sorted(map(repr, items)))

    labels = [(g.genus[v], _sigma_key(t, t.sigma_v[v]), profile(v)) for v in range(nv)]
    for _ in range(nv):
        new = []
        for v in range(nv):
            nbrs = []
            for a, b in g.edges:
                if a == v:
                    nbrs.append(labels[b])
                if b == v:
                    nbrs.append(labels[a])
            new.append((labels[v], tuple(sorted(map(repr, nbrs)))))
        if new == labels:
            break
        labels = new

    order = sorted(range(nv), key=lambda v: repr(labels[v]))
    groups = []
    for v in order:
        if groups and repr(labels[groups[-1][-1]]) == repr(labels[v]):
            groups[-1].append(v)
        else:
            groups.append([v])
    perms_per_group = 1
    for grp in groups:
        for i in range(2, len(grp) + 1):
            perms_per_group *= i
    if perms_per_group > 40320:
        raise TropliftError("graph too symmetric for canonical labeling")

    best = None
    for perm_parts in itertools.product(*[itertools.permutations(grp) for grp in groups]):
        ordering = [v for part in perm_parts for v in part]
        pos = {v: i for i, v in enumerate(ordering)}
        edges = []
        for i, (a, b) in enumerate(g.edges):
            fwd = (pos[a], pos[b], t.u_e[i])
            rev = (pos[b], pos[a], vec_neg(t.u_e[i]))
            lo = min(fwd, rev)
            edges.append((lo[0], lo[1], lo[2], _sigma_key(t, t.sigma_e[i]),
                          edge_extra[i]))
        legs = []
        for i, (v, punct) in enumerate(g.legs):
            legs.append((pos[v], t.u_l[i], punct, _sigma_key(t, t.sigma_l[i]),
                         leg_extra[i]))
        key = (
            tuple(g.genus[v] for v in ordering),
            tuple(_sigma_key(t, t.sigma_v[v]) for v in ordering),
            tuple(sorted(edges)),
            tuple(sorted(legs)),
        )
        skey = repr(key)
        if best is None or skey < best[0]:
            best = (skey, key)
    return best[0]


def types_isomorphic(t1: TropicalType, t2: TropicalType) -> bool:
    if t1.target != t2.target:
        return False
    return canonical_type_key(t1) == canonical_type_key(t2)


def is_tropical_lift(gamma: TropicalType, tau: ModuliCone,
                     s: Subdivision) -> Optional[TropicalLift]:
    """Match a type against the enumerated lifts, up to graph isomorphism."""
    for lift in enumerate_lifts(tau, s):
        if types_isomorphic(gamma, lift.gamma):
            return lift
    return None


def lift_partial_order(lifts: Sequence[TropicalLift]) -> List[Tuple[int, int]]:
    """Pairs (i, j) with lift i a truncation of lift j (sharing a chamber)."""
    out = []
    for i, a in enumerate(lifts):
        for j, b in enumerate(lifts):
            if i == j:
                continue
            share = any(cones_equal(ca, cb) for ca in a.chambers for cb in b.chambers)
            if share and all(x <= y for x, y in
                             zip(a.truncation_choice, b.truncation_choice)):
                out.append((i, j))
    return out


# ----------------------------------------------------- degeneracy / stabilize

def detect_degenerate_vertices(t: TropicalType, s: Subdivision):
    """(contracted 1-valent vertices, unconstrained balanced 2-valent vertices)."""
    g = t.graph
    contracted = []
    balanced2 = []
    for v in range(g.n_vertices):
        inc = g.incident(v)
        if len(inc) == 1 and inc[0][0] == "e":
            if all(x == 0 for x in t.u_e[inc[0][1]]):
                contracted.append(v)
        if len(inc) == 2:
            sigmas = []
            total = (0,) * t.target.ambient.rank
            for kind, i in inc:
                if kind == "e":
                    a, b = g.edges[i]
                    sigmas.append(t.sigma_e[i])
                    total = vec_add(total, t.u_e[i]) if a == v else vec_sub(total, t.u_e[i])
                else:
                    sigmas.append(t.sigma_l[i])
                    total = vec_add(total, t.u_l[i])
            if (sigmas[0] == sigmas[1] and all(x == 0 for x in total)
                    and t.sigma_v[v] == sigmas[0]):
                balanced2.append(v)
    return contracted, balanced2


def stabilize_type(gamma: DecoratedType, s: Subdivision,
                   keep_balanced_2valent: bool = True,
                   class_pushforward: Optional[LatticeMap] = None) -> DecoratedType:
    """Compose with the subdivision map and remove degenerate vertices.

    Balanced 2-valent vertices are deleted (edges merged) unless the keep
    flag is set and the pushed-forward vertex class is nonzero; the class of
    any deleted vertex must push forward to zero.
    """
    t = gamma.type
    g = t.graph
    sub = s.map
    base = sub.target

    def down_cone(sigma_id):
        m = sub.assignment[sigma_id][1]
        c = sub.source.cones[sigma_id]
        pts = [m(x) for x in c.generators]
        pts.append(m(interior_point(c)))
        return minimal_containing_cone(base, pts)

    def down_u(sigma_id, u):
        return sub.assignment[sigma_id][1](u)

    pf = class_pushforward

    def push_class(c):
        return pf(c) if pf is not None else tuple(c)

    genus = list(g.genus)
    edges = [tuple(e) for e in g.edges]
    legs = [tuple(l) for l in g.legs]
    sigma_v = [down_cone(t.sigma_v[v]) for v in range(g.n_vertices)]
    sigma_e = [down_cone(t.sigma_e[i]) for i in range(len(g.edges))]
    sigma_l = [down_cone(t.sigma_l[i]) for i in range(len(g.legs))]
    u_e = [down_u(t.sigma_e[i], t.u_e[i]) for i in range(len(g.edges))]
    u_l = [down_u(t.sigma_l[i], t.u_l[i]) for i in range(len(g.legs))]
    classes = [tuple(c) for c in gamma.decoration]

    def incident(v):
        out = []
        for i, (a, b) in enumerate(edges):
            if a == v:
                out.append(("e", i, "out"))
            if b == v:
                out.append(("e", i, "in"))
        for i, (w, _) in enumerate(legs):
            if w == v:
                out.append(("l", i, "out"))
        return out

    changed = True
    while changed:
        changed = False
        for v in range(len(genus)):
            if genus[v] != 0:
                continue
            inc = incident(v)
            if len(inc) == 1 and inc[0][0] == "e" and all(x == 0 for x in u_e[inc[0][1]]):
                kind, i, _ = inc[0]
                pushed = push_class(classes[v])
                if any(x != 0 for x in pushed):
                    raise InvalidInputError("nonzero class on deleted vertex")
                a, b = edges[i]
                other = b if a == v else a
                classes[other] = vec_add(classes[other], classes[v])
                _delete_vertex(v, [i], [], genus, edges, legs, sigma_v, sigma_e,
                               sigma_l, u_e, u_l, classes)
                changed = True
                break
            if len(inc) == 2:
                kinds = [x[0] for x in inc]
                if kinds == ["l", "l"]:
                    continue
                sig = []
                total = (0,) * base.ambient.rank
                for kind, i, direction in inc:
                    if kind == "e":
                        sig.append(sigma_e[i])
                        total = vec_add(total, u_e[i]) if direction == "out" \
                            else vec_sub(total, u_e[i])
                    else:
                        sig.append(sigma_l[i])
                        total = vec_add(total, u_l[i])
                if not (sig[0] == sig[1] and all(x == 0 for x in total)
                        and sigma_v[v] == sig[0]):
                    continue
                pushed = push_class(classes[v])
                if keep_balanced_2valent and any(x != 0 for x in pushed):
                    continue
                if any(x != 0 for x in pushed):
                    raise InvalidInputError("nonzero class on deleted vertex")
                _merge_through(v, inc, genus, edges, legs, sigma_v, sigma_e,
                               sigma_l, u_e, u_l, classes)
                changed = True
                break

    # re-extend legs: punctured only where the direction leaves the cone
    for i in range(len(legs)):
        cl = base.cones[sigma_l[i]]
        legs[i] = (legs[i][0], not cone_contains(cl, u_l[i]))

    graph = TropGraph(tuple(genus), tuple(tuple(e) for e in edges),
                      tuple(tuple(l) for l in legs))
    new_type = TropicalType(graph, base, tuple(sigma_v), tuple(sigma_e),
                            tuple(sigma_l), tuple(tuple(u) for u in u_e),
                            tuple(tuple(u) for u in u_l))
    return DecoratedType(new_type, gamma.classes, tuple(classes))


def _delete_vertex(v, dead_edges, dead_legs, genus, edges, legs, sigma_v,
                   sigma_e, sigma_l, u_e, u_l, classes):
    for i in sorted(dead_edges, reverse=True):
        del edges[i], sigma_e[i], u_e[i]
    for i in sorted(dead_legs, reverse=True):
        del legs[i], sigma_l[i], u_l[i]
    del genus[v], sigma_v[v], classes[v]

    def fix(w):
        return w - 1 if w > v else w

    for i in range(len(edges)):
        edges[i] = (fix(edges[i][0]), fix(edges[i][1]))
    for i in range(len(legs)):
        legs[i] = (fix(legs[i][0]), legs[i][1])


def _merge_through(v, inc, genus, edges, legs, sigma_v, sigma_e, sigma_l,
                   u_e, u_l, classes):
    (k1, i1, d1), (k2, i2, d2) = inc
    if k1 == "e" and k2 == "e":
        a = edges[i1][0] if d1 == "in" else edges[i1][1]
        b = edges[i2][0] if d2 == "in" else edges[i2][1]
        # orient the merged edge a -> b with the contact order leaving a
        u = u_e[i1] if d1 == "in" else vec_neg(u_e[i1])
        sigma = sigma_e[i1]
        other_class = classes[v]
        edges.append((a, b))
        sigma_e.append(sigma)
        u_e.append(u)
        classes[a] = vec_add(classes[a], other_class)
        _delete_vertex(v, [i1, i2], [], genus, edges, legs, sigma_v, sigma_e,
                       sigma_l, u_e, u_l, classes)
    else:
        if k1 == "l":
            (k1, i1, d1), (k2, i2, d2) = (k2, i2, d2), (k1, i1, d1)
        # k1 edge, k2 leg: absorb into a leg at the far endpoint of the edge
        a = edges[i1][0] if d1 == "in" else edges[i1][1]
        punct = legs[i2][1]
        legs.append((a, punct))
        sigma_l.append(sigma_l[i2])
        u_l.append(u_l[i2])
        classes[a] = vec_add(classes[a], classes[v])
        _delete_vertex(v, [i1], [i2], genus, edges, legs, sigma_v, sigma_e,
                       sigma_l, u_e, u_l, classes)


# ------------------------------------------------------- stratum and classes

@dataclass(frozen=True)
class Marking:
    """How a degenerate type contracts onto a less degenerate one."""

    vertex_map: Tuple[int, ...]
    edge_map: Tuple[Tuple[str, int], ...]  # ("e", j) kept or ("v", j) contracted
    leg_map: Tuple[int, ...]


def _face_matrix(tauprime: ModuliCone, tau: ModuliCone, marking: Marking):
    """Matrix of the face inclusion of moduli cones induced by a marking."""
    tp = tauprime.type
    t = tau.type
    n = t.target.ambient.rank
    d = cone_dim(tau.cone)
    dp = cone_dim(tauprime.cone)
    # full-coordinate image of the tau solution under the marking
    cols = []
    for j in range(d):
        unit = [0] * d
        unit[j] = 1
        h = {v: mat_vec(tau.vertex_maps[v], unit) for v in range(t.graph.n_vertices)}
        le = {i: vec_dot(tau.edge_lengths[i], unit) for i in range(len(t.graph.edges))}
        # express as a point of tauprime's solution space
        full = []
        for vp in range(tp.graph.n_vertices):
            full.extend(h[marking.vertex_map[vp]])
        for ep in range(len(tp.graph.edges)):
            kind, j2 = marking.edge_map[ep]
            full.append(le[j2] if kind == "e" else 0)
        cols.append(full)
    # solve M' z' = full for each column, where M' stacks tauprime's maps
    rows_mp = []
    for vp in range(tp.graph.n_vertices):
        for coord in range(n):
            rows_mp.append(list(tauprime.vertex_maps[vp][coord]))
    for ep in range(len(tp.graph.edges)):
        rows_mp.append(list(tauprime.edge_lengths[ep]))
    fcols = []
    for col in cols:
        sol = solve_rational(rows_mp, col)
        if sol is None or any(x.denominator != 1 for x in sol):
            raise InvalidInputError("tau not a face of tauprime")
        fcols.append([int(x) for x in sol])
    f = mat_tuple([[fcols[j][i] for j in range(d)] for i in range(dp)])
    img = cone_from_generators(dp, [mat_vec(f, gg) for gg in tau.cone.generators])
    from .cones import is_face as _isf
    if not _isf(img, tauprime.cone):
        raise InvalidInputError("tau not a face of tauprime")
    return f


def lifts_over_stratum(tauprime: ModuliCone, gamma: TropicalLift,
                       s: Subdivision, marking: Marking) -> List[TropicalLift]:
    """Lifts of a degenerate type marked by a given lift of its face type.

    For each maximal lift of `tauprime` extending an extension of `gamma`,
    selects the unique truncation whose leg cutoffs restrict to gamma's.
    """
    tau_mc = moduli_cone(gamma.tau)
    if tau_mc is None:
        raise UnrealizableError("base type unrealizable")
    f = _face_matrix(tauprime, tau_mc, marking)
    all_lifts = enumerate_lifts(tauprime, s)
    d = cone_dim(tau_mc.cone)
    gens_tau = list(gamma.cone.generators) + [interior_point(gamma.cone)]
    image_pts = [mat_vec(f, gg) for gg in gens_tau]
    # match each tau'-leg with its tau-leg
    leg_of = {lp: marking.leg_map[lp] for lp in range(len(tauprime.type.graph.legs))}
    selected = []
    for cand in all_lifts:
        if not all(cone_contains(cand.cone, p) for p in image_pts):
            continue
        ok = True
        for lp in range(len(tauprime.type.graph.legs)):
            l = leg_of[lp]
            lo_g, hi_g = gamma.leg_intervals[l]
            lo_c, hi_c = cand.leg_intervals[lp]
            lo_r = tuple(_eval_rowmat(lo_c, f))
            hi_r = None if hi_c is None else tuple(_eval_rowmat(hi_c, f))
            lo_gf = tuple(Fraction(x) for x in lo_g)
            hi_gf = None if hi_g is None else tuple(Fraction(x) for x in hi_g)
            if lo_r != lo_gf or (hi_r is None) != (hi_gf is None):
                ok = False
                break
            if hi_r is not None and hi_r != hi_gf:
                ok = False
                break
        if ok:
            selected.append(cand)
    return selected


def _eval_rowmat(row, matrix):
    # row . matrix  (restrict a functional along a linear map)
    cols = transpose(matrix)
    return [sum(Fraction(a) * Fraction(b) for a, b in zip(row, col)) for col in cols]


def stratum_complex(lifts: Sequence[TropicalLift], rank: int) -> ConeComplex:
    """The cone complex formed by the supports of the given lifts."""
    return complex_from_cones(rank, [l.cone.generators for l in lifts])


def enumerate_decorated_lifts(lift: TropicalLift, pushforward,
                              decorated_base: DecoratedType,
                              fiber_bound: Sequence[int]) -> List[DecoratedType]:
    """All decorations of a lift pushing forward to a decorated base type.

    `pushforward` is a monoid homomorphism on curve classes (an object with
    `.map` and `.source`, or a plain LatticeMap together with the base class
    monoid's generators).  `fiber_bound` bounds the coordinates of the total
    upstairs class.  Chain vertices (contracted by stabilization) must carry
    classes pushing to zero.  Raises FiberBoundError when the box is empty
    but enlarging it by one would produce a candidate total class.
    """
    base_a = decorated_base.decoration
    g = lift.gamma.graph
    total_down = None
    for a in base_a:
        total_down = tuple(a) if total_down is None else vec_add(total_down, a)
    if hasattr(pushforward, "map") and hasattr(pushforward, "source"):
        fmap = pushforward.map
        gens = [tuple(x) for x in pushforward.source.generators]
    else:
        fmap = pushforward
        gens = [tuple(x) for x in getattr(decorated_base.classes, "effective_generators")]

    def pf(x):
        return fmap(x)

    if not gens:
        raise InvalidInputError("class monoid has no effective generators")
    k = len(gens[0])
    eff_cone = cone_from_generators(k, gens)
    if not is_pointed(eff_cone):
        raise InvalidInputError("effective cone not pointed")
    ell = positive_grading(eff_cone)

    def enumerate_pool(bound_vec):
        cap = sum(b * abs(c) for b, c in zip(bound_vec, ell)) if any(ell) else 0
        pool = {(0,) * k}
        frontier = [(0,) * k]
        while frontier:
            x = frontier.pop()
            for ge in gens:
                y = vec_add(x, ge)
                if vec_dot(ell, y) <= cap and y not in pool:
                    pool.add(y)
                    frontier.append(y)
        return pool

    pool = enumerate_pool(fiber_bound)
    in_box = [x for x in pool if all(abs(c) <= b for c, b in zip(x, fiber_bound))]
    totals = [x for x in in_box if pf(x) == total_down]
    nverts = g.n_vertices
    per_vertex_target = []
    for w in range(nverts):
        base_v = lift.contraction[w]
        if _is_chain_vertex(lift, w):
            per_vertex_target.append(tuple([0] * len(total_down)))
        else:
            per_vertex_target.append(tuple(base_a[base_v]))
    results = []
    pool_set = pool
    for total in sorted(totals):
        partial: List[IntVector] = []

        def rec(w, remaining):
            if w == nverts - 1:
                if remaining in pool_set and pf(remaining) == per_vertex_target[w]:
                    results.append(tuple(partial) + (remaining,))
                return
            for c in sorted(pool_set):
                if pf(c) != per_vertex_target[w]:
                    continue
                rem = vec_sub(remaining, c)
                if rem not in pool_set:
                    continue
                partial.append(c)
                rec(w + 1, rem)
                partial.pop()

        rec(0, total)
    if not results and not totals:
        bigger = [b + 1 for b in fiber_bound]
        pool2 = enumerate_pool(bigger)
        totals2 = [x for x in pool2
                   if all(abs(c) <= b for c, b in zip(x, bigger))
                   and pf(x) == total_down]
        if totals2:
            raise FiberBoundError("fiber bound too small")
    out = []
    seen = set()
    for assignment in results:
        if assignment in seen:
            continue
        seen.add(assignment)
        out.append(DecoratedType(lift.gamma, decorated_base.classes, assignment))
    out.sort(key=lambda dec: dec.decoration)
    return out


def _is_chain_vertex(lift: TropicalLift, w: int) -> bool:
    """Vertices introduced by chain subdivision (contracted by stabilization)."""
    base_vertices = len(lift.tau.graph.genus)
    return w >= base_vertices
