"""Wall types, truncated wall functions, scattering diagrams, mirror tables.

Punctured invariants (the N values) are always user input; everything here
verifies identities conditionally on supplied tables.  Series live in a
monoid ring truncated by a monomial ideal whose complement is finite, and
all coefficients are exact rationals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import (
    IdealMismatchError,
    InvalidInputError,
    TruncationError,
    UnrealizableError,
)
from .cones import (
    LatticeCone,
    cone_contains,
    cone_dim,
    cone_from_generators,
    cone_from_inequalities,
    cones_equal,
    image_cone,
    interior_point,
    is_pointed,
    span_rows,
)
from .complexes import (
    ConeComplex,
    Report,
    Subdivision,
    maximal_cone_ids,
    minimal_containing_cone,
)
from .lattice import (
    IntVector,
    Lattice,
    LatticeMap,
    coords_in_basis,
    mat_vec,
    smith_torsion,
    vec_add,
    vec_dot,
    vec_neg,
    vec_scale,
)
from .monoids import (
    FineMonoid,
    MonoidIdeal,
    fine_monoid,
    ideal_contains,
    ideal_preimage,
    monoid_ideal,
    radical_is_maximal,
)
from .moduli import ModuliCone, TropicalType, moduli_cone


@dataclass(frozen=True)
class CurveClassMonoid:
    """A finitely generated monoid of curve classes inside H_2 = Z^k."""

    ambient: Lattice
    effective_generators: Tuple[IntVector, ...]
    name: str = "Q"

    def __post_init__(self):
        cone = cone_from_generators(self.ambient.rank, self.effective_generators)
        if not is_pointed(cone):
            raise InvalidInputError("effective cone must be pointed")

    def monoid(self) -> FineMonoid:
        return fine_monoid(self.ambient.rank, self.effective_generators)


def curve_classes(rank: int, effective: Sequence[Sequence[int]],
                  name: str = "Q") -> CurveClassMonoid:
    return CurveClassMonoid(Lattice(rank), tuple(tuple(g) for g in effective), name)


_radical_cache: Dict[tuple, bool] = {}


def _check_truncation(ideal: MonoidIdeal):
    key = (ideal.monoid.ambient.rank, ideal.monoid.generators, ideal.generators)
    if key not in _radical_cache:
        _radical_cache[key] = radical_is_maximal(ideal)
    if not _radical_cache[key]:
        raise TruncationError("truncation ideal complement is infinite")


@dataclass(frozen=True)
class TruncatedSeries:
    """An element of k[z^m q^A] truncated at classes in a monomial ideal."""

    base_rank: int
    classes: CurveClassMonoid
    ideal: MonoidIdeal
    terms: Tuple[Tuple[Tuple[IntVector, IntVector], Fraction], ...]

    def coefficient(self, m: Sequence[int], a: Sequence[int]) -> Fraction:
        key = (tuple(m), tuple(a))
        for k, c in self.terms:
            if k == key:
                return c
        return Fraction(0)


def make_series(base_rank: int, classes: CurveClassMonoid, ideal: MonoidIdeal,
                terms) -> TruncatedSeries:
    _check_truncation(ideal)
    cleaned: Dict[tuple, Fraction] = {}
    for (m, a), c in (terms.items() if isinstance(terms, dict) else terms):
        key = (tuple(m), tuple(a))
        c = Fraction(c)
        if c == 0:
            continue
        if any(x != 0 for x in key[1]) and ideal_contains(ideal, key[1]):
            continue
        cleaned[key] = cleaned.get(key, Fraction(0)) + c
    out = tuple(sorted((k, v) for k, v in cleaned.items() if v != 0))
    return TruncatedSeries(base_rank, classes, ideal, out)


def series_one(base_rank: int, classes: CurveClassMonoid,
               ideal: MonoidIdeal) -> TruncatedSeries:
    zero = (0,) * base_rank
    zclass = (0,) * classes.ambient.rank
    return make_series(base_rank, classes, ideal, {(zero, zclass): Fraction(1)})


def series_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    if a.classes != b.classes or a.ideal != b.ideal:
        raise InvalidInputError("series live in different truncated rings")
    acc: Dict[tuple, Fraction] = {}
    for (m1, a1), c1 in a.terms:
        for (m2, a2), c2 in b.terms:
            key = (vec_add(m1, m2), vec_add(a1, a2))
            acc[key] = acc.get(key, Fraction(0)) + c1 * c2
    return make_series(a.base_rank, a.classes, a.ideal, acc)


def wall_function(k: int, n_value, u: Sequence[int], a_class: Sequence[int],
                  classes: CurveClassMonoid, ideal: MonoidIdeal) -> TruncatedSeries:
    """exp(k N z^{-u} q^A) truncated at the first multiple of A in the ideal."""
    base_rank = len(u)
    n_value = Fraction(n_value)
    if n_value == 0:
        return series_one(base_rank, classes, ideal)
    a_class = tuple(a_class)
    if all(x == 0 for x in a_class):
        raise TruncationError("non-nilpotent wall exponent")
    _check_truncation(ideal)
    terms = {}
    coeff = Fraction(1)
    j = 0
    current = (0,) * len(a_class)
    while True:
        key = (vec_scale(-j, tuple(u)), current)
        terms[key] = coeff
        j += 1
        current = vec_add(current, a_class)
        if ideal_contains(ideal, current):
            break
        coeff = coeff * Fraction(k) * n_value / j
    return make_series(base_rank, classes, ideal, terms)


@dataclass(frozen=True)
class Wall:
    support: LatticeCone
    direction: IntVector
    function: TruncatedSeries


@dataclass(frozen=True)
class ScatteringDiagram:
    target: ConeComplex
    skeleton: Tuple[int, ...]
    walls: Tuple[Wall, ...]


def validate_diagram(d: ScatteringDiagram) -> Report:
    bad: List[str] = []
    for i, w in enumerate(d.walls):
        in_skeleton = any(
            all(cone_contains(d.target.cones[c], g) for g in w.support.generators)
            for c in d.skeleton)
        if not in_skeleton:
            bad.append(f"wall {i} support outside the skeleton")
        if all(x == 0 for x in w.direction):
            bad.append(f"wall {i} has zero direction")
        span = span_rows(w.support)
        if coords_in_basis(span, w.direction) is None:
            bad.append(f"wall {i} direction not tangent to its support")
    return Report(tuple(bad))


# ---------------------------------------------------------------- wall types

def validate_wall_type(t: TropicalType, skeleton: Sequence[int], n: int) -> Report:
    """Wall-type conditions: genus 0, one leg into the skeleton with nonzero
    direction, realizable and balanced, moduli dimension n-2, leg sweep n-1.

    Balancing is checked at all vertices except the one carrying the out-leg
    (whose balancing involves the curve class, which is input data here).
    """
    bad: List[str] = []
    g = t.graph
    if any(gen != 0 for gen in g.genus):
        bad.append("wall type must have genus 0 at every vertex")
    if len(g.legs) != 1:
        bad.append("wall type must have exactly one leg")
        return Report(tuple(bad))
    leg_vertex = g.legs[0][0]
    if t.sigma_l[0] not in tuple(skeleton):
        bad.append("out-leg does not map into the skeleton")
    if all(x == 0 for x in t.u_l[0]):
        bad.append("u_out must be nonzero")
        return Report(tuple(bad))
    for v in range(g.n_vertices):
        if v == leg_vertex:
            continue
        total = (0,) * t.target.ambient.rank
        for i, (a, b) in enumerate(g.edges):
            if a == v:
                total = vec_add(total, t.u_e[i])
            if b == v:
                total = vec_add(total, vec_neg(t.u_e[i]))
        if any(x != 0 for x in total):
            bad.append(f"vertex {v} is not balanced")
    mc = moduli_cone(t)
    if mc is None:
        bad.append("wall type is not realizable")
        return Report(tuple(bad))
    if mc.dim != n - 2:
        bad.append(f"moduli dimension {mc.dim} is not n-2")
    leg_image = _leg_image_cone(mc)
    if cone_dim(leg_image) != n - 1:
        bad.append(f"leg sweep has dimension {cone_dim(leg_image)}, not n-1")
    return Report(tuple(bad))


def _leg_matrix(mc: ModuliCone):
    t = mc.type
    v = t.graph.legs[0][0]
    n = t.target.ambient.rank
    d = mc.dim
    return tuple(tuple(list(mc.vertex_maps[v][coord]) + [t.u_l[0][coord]])
                 for coord in range(n)), d


def _leg_cone(mc: ModuliCone) -> LatticeCone:
    t = mc.type
    d = mc.dim
    rows = [tuple(list(f) + [0]) for f in mc.cone.facets]
    rows.append(tuple([0] * d + [1]))
    cl = t.target.cones[t.sigma_l[0]]
    mat, _ = _leg_matrix(mc)
    for f in cl.facets:
        rows.append(tuple(vec_dot(f, tuple(mat[coord][j] for coord in range(len(mat))))
                          for j in range(d + 1)))
    return cone_from_inequalities(d + 1, rows)


def _leg_image_cone(mc: ModuliCone) -> LatticeCone:
    mat, d = _leg_matrix(mc)
    leg = _leg_cone(mc)
    n = len(mat)
    return cone_from_generators(n, [mat_vec(mat, g) for g in leg.generators])


def kappa(t: TropicalType, lattice_inclusion: Optional[LatticeMap] = None) -> int:
    """Torsion order of the cokernel of the leg-cone lattice map.

    `lattice_inclusion` composes a moduli-lattice coarsening in front of the
    family map (used for synthetic lift data; genuine lifts recompute their
    coarsened lattice automatically through their own moduli cone)."""
    mc = moduli_cone(t)
    if mc is None:
        raise UnrealizableError("wall type is not realizable")
    mat, d = _leg_matrix(mc)
    if lattice_inclusion is not None:
        b = lattice_inclusion.matrix
        composed = []
        for row in mat:
            new = [sum(row[i] * b[i][j] for i in range(d)) for j in range(d)]
            new.append(row[d])
            composed.append(tuple(new))
        mat = tuple(composed)
    sigma = t.target.cones[t.sigma_l[0]]
    basis = span_rows(sigma)
    rows = []
    for bvec in transposed_columns(mat):
        coords = coords_in_basis(basis, bvec)
        if coords is None or any(x.denominator != 1 for x in coords):
            raise InvalidInputError("leg image leaves the lattice of sigma(L_out)")
        rows.append([int(x) for x in coords])
    matrix = tuple(tuple(rows[j][i] for j in range(len(rows)))
                   for i in range(len(basis)))
    torsion, _ = smith_torsion(LatticeMap(matrix, Lattice(d + 1), Lattice(len(basis))))
    return torsion


def transposed_columns(mat):
    ncols = len(mat[0]) if mat else 0
    return [tuple(mat[r][c] for r in range(len(mat))) for c in range(ncols)]


def verify_wall_relation(k_tau: int, n_tau, k_gamma: int, n_gammas) -> bool:
    """Exact check of k_tau N_tau = k_gamma * sum(N_gamma)."""
    total = sum((Fraction(x) for x in n_gammas), start=Fraction(0))
    return Fraction(k_tau) * Fraction(n_tau) == Fraction(k_gamma) * total


# --------------------------------------------------------- diagram transport

def _apply_to_series(f: TruncatedSeries, zmap, classmap, classes, ideal):
    acc = {}
    for (m, a), c in f.terms:
        key = (tuple(zmap(m)), tuple(classmap(a)))
        acc[key] = acc.get(key, Fraction(0)) + c
    return make_series(len(zmap((0,) * f.base_rank)), classes, ideal, acc)


def _class_map(pf):
    if hasattr(pf, "map"):
        return pf.map
    return pf


def pushforward_diagram(d: ScatteringDiagram, s: Subdivision, pf,
                        target_classes: Optional[CurveClassMonoid] = None,
                        target_ideal: Optional[MonoidIdeal] = None) -> ScatteringDiagram:
    """Push a diagram on the subdivided target down to the base.

    Wall supports and z-exponents are composed with the subdivision map,
    class exponents with the class pushforward; walls with identical pushed
    support and direction are merged by multiplying their functions, and the
    truncation is re-imposed with the base ideal (by default the image of the
    upstairs ideal)."""
    if d.target != s.map.source:
        raise InvalidInputError("diagram does not live on the subdivided target")
    fmap = _class_map(pf)
    if target_classes is None:
        images = sorted({tuple(fmap(g)) for g in d.walls[0].function.classes.effective_generators
                         if any(fmap(g))}) if d.walls else ()
        target_classes = CurveClassMonoid(Lattice(fmap.target.rank), tuple(images),
                                          name="pushforward")
    if target_ideal is None:
        if not d.walls:
            raise InvalidInputError("cannot derive a target ideal without walls")
        up_ideal = d.walls[0].function.ideal
        target_ideal = monoid_ideal(target_classes.monoid(),
                                    [fmap(g) for g in up_ideal.generators])
    base = s.map.target
    merged: Dict[tuple, Wall] = {}
    order: List[tuple] = []
    for w in d.walls:
        j = minimal_containing_cone(s.map.source, w.support.generators)
        mat = s.map.assignment[j][1]
        support = image_cone(mat, w.support)
        hosts = [i for i in maximal_cone_ids(base)
                 if all(cone_contains(base.cones[i], g) for g in support.generators)]
        if not any(cone_dim(support) == cone_dim(base.cones[i]) - 1 for i in hosts):
            raise InvalidInputError("pushed wall support is not codimension one")
        direction = tuple(mat(w.direction))
        func = _apply_to_series(w.function, mat, fmap, target_classes, target_ideal)
        key = (support.generators, direction)
        if key in merged:
            old = merged[key]
            merged[key] = Wall(support, direction, series_mul(old.function, func))
        else:
            merged[key] = Wall(support, direction, func)
            order.append(key)
    skeleton_down = sorted({
        minimal_containing_cone(base, [mat_vec(s.map.assignment[c][1].matrix, g)
                                       for g in s.map.source.cones[c].generators]
                                or [(0,) * base.ambient.rank])
        for c in d.skeleton})
    walls = tuple(merged[k] for k in sorted(order))
    return ScatteringDiagram(base, tuple(skeleton_down), walls)


def _ring_key(w: Wall):
    return (w.function.classes, w.function.ideal)


def diagrams_equivalent(d1: ScatteringDiagram, d2: ScatteringDiagram):
    """Equality of merged wall functions on a common support refinement.

    Returns (verdict, witness); the witness is (support generators, monomial,
    coefficient in d1, coefficient in d2) for the first difference."""
    if d1.target != d2.target:
        raise InvalidInputError("diagrams live on different targets")
    rings = {_ring_key(w) for w in d1.walls} | {_ring_key(w) for w in d2.walls}
    if len(rings) > 1:
        raise InvalidInputError("diagrams use different truncated rings")
    walls = list(d1.walls) + list(d2.walls)
    if not walls:
        return True, None
    dims = {cone_dim(w.support) for w in walls}
    if len(dims) != 1:
        raise InvalidInputError("wall supports have mixed dimension")
    wdim = dims.pop()
    rank = d1.target.ambient.rank
    supports = []
    for w in walls:
        if not any(cones_equal(w.support, c) for c in supports):
            supports.append(w.support)
    atoms = list(supports)
    changed = True
    while changed:
        changed = False
        for a, b in itertools.combinations(list(atoms), 2):
            inter = cone_from_inequalities(rank, a.facets + b.facets)
            if cone_dim(inter) == wdim and not any(cones_equal(inter, c) for c in atoms):
                atoms.append(inter)
                changed = True
    cells = []
    for a in atoms:
        proper = False
        for b in atoms:
            if b is not a and cone_dim(b) == wdim and \
                    all(cone_contains(a, g) for g in b.generators) and \
                    not cones_equal(a, b):
                proper = True
                break
        if not proper:
            cells.append(a)

    def function_at(d, cell):
        classes, ideal = next(iter(rings))
        total = series_one(rank, classes, ideal)
        for w in d.walls:
            if all(cone_contains(w.support, g) for g in cell.generators):
                total = series_mul(total, w.function)
        return total

    for cell in sorted(cells, key=lambda c: c.generators):
        f1 = function_at(d1, cell)
        f2 = function_at(d2, cell)
        if f1.terms != f2.terms:
            keys = sorted({k for k, _ in f1.terms} | {k for k, _ in f2.terms})
            for k in keys:
                c1 = f1.coefficient(*k)
                c2 = f2.coefficient(*k)
                if c1 != c2:
                    return False, (cell.generators, k, c1, c2)
    return True, None


# ------------------------------------------------------------- skeleton data

def ray_ids(fan: ConeComplex) -> List[int]:
    return [i for i, c in enumerate(fan.cones) if cone_dim(c) == 1]


def _check_complete_simplicial(fan: ConeComplex):
    n = fan.ambient.rank
    maxima = maximal_cone_ids(fan)
    for i in maxima:
        c = fan.cones[i]
        if cone_dim(c) != n:
            raise InvalidInputError("fan is not complete")
        if len(c.generators) != n:
            raise InvalidInputError("fan is not simplicial")
    # completeness: every facet of a maximal cone borders exactly two of them
    from .cones import facet_faces
    for i in maxima:
        for face in facet_faces(fan.cones[i]):
            count = sum(1 for j in maxima
                        if all(cone_contains(fan.cones[j], g) for g in face.generators))
            if count != 2:
                raise InvalidInputError("fan is not complete")


def skeleton_from_coefficients(fan: ConeComplex, a) -> Tuple[int, ...]:
    """Subcomplex spanned by the rays with coefficient zero."""
    rays = ray_ids(fan)
    coeffs = _ray_coefficients(fan, a, rays)
    for r, c in coeffs.items():
        if c < 0:
            raise InvalidInputError("coefficients must be nonnegative")
    _check_complete_simplicial(fan)
    good = {r for r in rays if coeffs[r] == 0}
    out = []
    for i, c in enumerate(fan.cones):
        crs = [r for r in rays
               if all(cone_contains(c, g) for g in fan.cones[r].generators)]
        if all(r in good for r in crs):
            out.append(i)
    return tuple(sorted(out))


def _ray_coefficients(fan, a, rays):
    if isinstance(a, dict):
        return {r: Fraction(a[r]) for r in rays}
    if len(a) != len(rays):
        raise InvalidInputError("one coefficient per ray required")
    return {r: Fraction(x) for r, x in zip(sorted(rays), a)}


def pullback_coefficients(s: Subdivision, a) -> Dict[int, Fraction]:
    """Coefficients on the refined fan's rays: old rays keep theirs, a new ray
    r gets sum_i a_i psi_i(prim(r)) over the minimal simplicial cone holding it."""
    target = s.map.target
    source = s.map.source
    t_rays = ray_ids(target)
    coeffs = _ray_coefficients(target, a, t_rays)
    prim_of = {target.cones[r].generators[0]: r for r in t_rays}
    out: Dict[int, Fraction] = {}
    for r in ray_ids(source):
        prim = source.cones[r].generators[0]
        if prim in prim_of:
            out[r] = coeffs[prim_of[prim]]
            continue
        host = minimal_containing_cone(target, [prim])
        hc = target.cones[host]
        if len(hc.generators) != cone_dim(hc):
            raise InvalidInputError("psi not determined on a non-simplicial cone")
        from .lattice import solve_rational, transpose
        lam = solve_rational(transpose(hc.generators), prim)
        assert lam is not None
        total = Fraction(0)
        for lam_j, v in zip(lam, hc.generators):
            total += lam_j * coeffs[prim_of[v]]
        out[r] = total
    return out


def multiplicity_ev(ev: LatticeMap) -> int:
    """|coker| of a nonzero map between rank-one lattices."""
    if ev.source.rank != 1 or ev.target.rank != 1:
        raise InvalidInputError("evaluation map must join rank-one lattices")
    d = ev.matrix[0][0]
    if d == 0:
        raise InvalidInputError("evaluation not integral")
    return abs(d)


# -------------------------------------------------------------- mirror tables

@dataclass(frozen=True)
class MirrorTable:
    """Structure constants N^A_{p,q,r} of a truncated theta-function basis."""

    classes: CurveClassMonoid
    ideal: MonoidIdeal
    contact_points: Tuple[str, ...]
    constants: Tuple[Tuple[Tuple[str, str, str, IntVector], Fraction], ...]

    def value(self, p, q, r, a) -> Fraction:
        key = (min(p, q), max(p, q), r, tuple(a))
        for k, v in self.constants:
            if k == key:
                return v
        return Fraction(0)


def mirror_table(classes: CurveClassMonoid, ideal: MonoidIdeal,
                 points: Sequence[str], entries) -> MirrorTable:
    _check_truncation(ideal)
    cleaned: Dict[tuple, Fraction] = {}
    for (p, q, r, a), n in (entries.items() if isinstance(entries, dict) else entries):
        for x in (p, q, r):
            if x not in points:
                raise InvalidInputError(f"unknown contact point {x!r}")
        a = tuple(a)
        if any(x != 0 for x in a) and ideal_contains(ideal, a):
            continue
        key = (min(p, q), max(p, q), r, a)
        if key in cleaned and cleaned[key] != Fraction(n):
            raise InvalidInputError("conflicting duplicate table entries")
        cleaned[key] = Fraction(n)
    out = tuple(sorted((k, v) for k, v in cleaned.items() if v != 0))
    return MirrorTable(classes, ideal, tuple(points), out)


def mirror_product(t: MirrorTable, p: str, q: str) -> Dict[tuple, Fraction]:
    """The coefficient row of theta_p * theta_q in the truncated basis."""
    if p not in t.contact_points or q not in t.contact_points:
        raise InvalidInputError("missing contact point")
    key_pq = (min(p, q), max(p, q))
    return {(r, a): v for (pp, qq, r, a), v in t.constants if (pp, qq) == key_pq}


def mirror_pushforward_check(upstairs: MirrorTable, downstairs: MirrorTable,
                             pf, point_map: Optional[Dict[str, str]] = None):
    """Verify N^A = sum over pf(A') = A of N^{A'} for all quadruples.

    Requires the upstairs ideal to be the preimage of the downstairs ideal.
    Returns (ok, witnesses); witnesses are the violating (p, q, r, A)."""
    fmap = _class_map(pf)
    if hasattr(pf, "map"):
        preim = ideal_preimage(pf, downstairs.ideal)
        same = (all(ideal_contains(preim, g) for g in upstairs.ideal.generators)
                and all(ideal_contains(upstairs.ideal, g) for g in preim.generators))
        if not same:
            raise IdealMismatchError("upstairs ideal is not the preimage of the base ideal")
    pmap = point_map or {p: p for p in upstairs.contact_points}
    keys = set()
    for (p, q, r, a), _ in downstairs.constants:
        keys.add((p, q, r, tuple(a)))
    for (p, q, r, a), _ in upstairs.constants:
        pa = tuple(fmap(a))
        if any(x != 0 for x in pa) and ideal_contains(downstairs.ideal, pa):
            continue
        keys.add((pmap[p], pmap[q], pmap[r], pa))
    witnesses = []
    for (p, q, r, a) in sorted(keys):
        total = Fraction(0)
        for (pp, qq, rr, aa), v in upstairs.constants:
            if (pmap[pp], pmap[qq], pmap[rr]) == (p, q, r) and tuple(fmap(aa)) == a:
                total += v
        if total != downstairs.value(p, q, r, a):
            witnesses.append((p, q, r, a))
    return (not witnesses), witnesses
