"""Rational polyhedral cones with integral lattices.

A cone is kept in both descriptions: `generators` (primitive extreme rays,
plus a +/- basis of the lineality space when not pointed) and `facets`
(integer inequality rows; a pair f, -f encodes a span equality).  The two are
synchronized at construction through the double description method, so every
constructor is also a consistency proof.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, Optional, Sequence, Tuple

from .errors import NotAConeError, NotPointedError
from .lattice import (
    IntVector,
    Lattice,
    LatticeMap,
    coords_in_basis,
    gcd_list,
    hnf_rows,
    invert_unimodular,
    is_zero,
    kernel_basis,
    mat_identity,
    mat_tuple,
    mat_vec,
    primitive,
    rational_primitive,
    rational_rank,
    smith_normal_form,
    solve_rational,
    transpose,
    vec_dot,
    vec_neg,
    vec_scale,
    vec_sub,
)


def _dedupe(vectors: Iterable[tuple]) -> list:
    seen = set()
    out = []
    for v in vectors:
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out


def double_description(rows: Sequence[IntVector], rank: int):
    """Extreme rays and lineality of {x in R^rank : r . x >= 0 for all rows}.

    Returns (rays, lineality): rays are primitive and extreme modulo the
    lineality space, lineality is a saturated lattice basis in HNF.
    """
    lineality = [tuple(r) for r in mat_identity(rank)]
    rays: list = []
    processed: list = []

    def tight(r):
        return frozenset(i for i, a in enumerate(processed) if vec_dot(a, r) == 0)

    for a in sorted(_dedupe(tuple(r) for r in rows if not is_zero(r))):
        pivot = next((b for b in lineality if vec_dot(a, b) != 0), None)
        if pivot is not None:
            if vec_dot(a, pivot) < 0:
                pivot = vec_neg(pivot)
            pa = vec_dot(a, pivot)
            lineality = [primitive(vec_sub(vec_scale(pa, b), vec_scale(vec_dot(a, b), pivot)))
                         for b in lineality if b != pivot and b != vec_neg(pivot)]
            lineality = [b for b in lineality if not is_zero(b)]
            rays = [primitive(vec_sub(vec_scale(pa, r), vec_scale(vec_dot(a, r), pivot)))
                    for r in rays]
            rays = _dedupe(r for r in rays if not is_zero(r))
            rays.append(primitive(pivot))
            processed.append(a)
            continue
        pos = [r for r in rays if vec_dot(a, r) > 0]
        zero = [r for r in rays if vec_dot(a, r) == 0]
        neg = [r for r in rays if vec_dot(a, r) < 0]
        processed.append(a)
        if not neg:
            continue
        tights = {r: tight(r) for r in rays}
        new = []
        for rp, rn in itertools.product(pos, neg):
            shared = tights[rp] & tights[rn]
            adjacent = True
            for r3 in rays:
                if r3 is rp or r3 is rn:
                    continue
                if shared <= tights[r3]:
                    adjacent = False
                    break
            if adjacent:
                w = vec_sub(vec_scale(vec_dot(a, rp), rn), vec_scale(vec_dot(a, rn), rp))
                if not is_zero(w):
                    new.append(primitive(w))
        rays = _dedupe(pos + zero + new)

    from .lattice import saturate_span

    lin_basis = saturate_span(lineality, rank)
    # canonical ray representatives modulo the lineality lattice
    canon = []
    if lin_basis:
        from .lattice import lattice_complement
        proj, section = lattice_complement(lin_basis, rank)
        for r in rays:
            p = primitive(mat_vec(proj, r))
            canon.append(tuple(mat_vec(section, p)))
        rays = _dedupe(canon)
    else:
        rays = _dedupe(primitive(r) for r in rays)
    return tuple(sorted(rays)), lin_basis


@dataclass(frozen=True)
class LatticeCone:
    """A rational polyhedral cone together with its ambient lattice."""

    lattice: Lattice
    generators: Tuple[IntVector, ...]
    facets: Tuple[IntVector, ...]

    def __repr__(self):
        return f"LatticeCone(rank={self.lattice.rank}, generators={list(self.generators)})"


def _canonical_from_rays(rank: int, rays, lin_basis):
    gens = list(rays)
    for b in lin_basis:
        gens.append(tuple(b))
        gens.append(vec_neg(b))
    return tuple(sorted(_dedupe(gens)))


@lru_cache(maxsize=None)
def _cone_from_generators_cached(rank: int, gens: Tuple[IntVector, ...]) -> LatticeCone:
    facet_rays, facet_lin = double_description(gens, rank)
    facets = _canonical_from_rays(rank, facet_rays, facet_lin)
    rays, lin = double_description(facets, rank)
    generators = _canonical_from_rays(rank, rays, lin)
    return LatticeCone(Lattice(rank), generators, facets)


def cone_from_generators(rank: int, gens: Sequence[Sequence[int]]) -> LatticeCone:
    cleaned = tuple(sorted(_dedupe(primitive(tuple(g)) for g in gens if not is_zero(g))))
    return _cone_from_generators_cached(rank, cleaned)


def cone_from_inequalities(rank: int, rows: Sequence[Sequence[int]]) -> LatticeCone:
    rays, lin = double_description(tuple(tuple(r) for r in rows), rank)
    return cone_from_generators(rank, _canonical_from_rays(rank, rays, lin))


def zero_cone(rank: int) -> LatticeCone:
    return cone_from_generators(rank, [])


@lru_cache(maxsize=None)
def span_rows(c: LatticeCone) -> Tuple[IntVector, ...]:
    """Saturated basis of span(c) as an integer lattice (HNF rows)."""
    if not c.generators:
        return ()
    ann = kernel_basis(c.generators, c.lattice.rank)
    if not ann:
        return mat_tuple(mat_identity(c.lattice.rank))
    return kernel_basis(ann, c.lattice.rank)


def cone_dim(c: LatticeCone) -> int:
    return len(span_rows(c))


@lru_cache(maxsize=None)
def lineality_rows(c: LatticeCone) -> Tuple[IntVector, ...]:
    """Saturated basis of the lineality space c intersect -c."""
    rows = [f for f in c.facets]
    if not rows:
        return mat_tuple(mat_identity(c.lattice.rank))
    return kernel_basis(rows, c.lattice.rank)


def is_pointed(c: LatticeCone) -> bool:
    return not lineality_rows(c)


def cone_contains(c: LatticeCone, p: Sequence, strict: bool = False) -> bool:
    """Membership of a rational point; strict tests the relative interior."""
    pf = tuple(Fraction(x) for x in p)
    for f in c.facets:
        if vec_dot(f, pf) < 0:
            return False
    if not strict:
        return True
    if coords_in_basis(span_rows(c), pf) is None:
        return False
    for f in c.facets:
        if all(vec_dot(f, g) == 0 for g in c.generators):
            continue
        if vec_dot(f, pf) <= 0:
            return False
    return True


def dual_cone(c: LatticeCone) -> LatticeCone:
    """The cone of functionals nonnegative on c, in the dual lattice."""
    return cone_from_generators(c.lattice.rank, c.facets)


def image_cone(f: LatticeMap, c: LatticeCone) -> LatticeCone:
    if f.source != c.lattice:
        raise ValueError("map source does not match cone lattice")
    return cone_from_generators(f.target.rank, [f(g) for g in c.generators])


def intersect_cones(a: LatticeCone, b: LatticeCone) -> LatticeCone:
    if a.lattice != b.lattice:
        raise ValueError("ambient mismatch")
    return cone_from_inequalities(a.lattice.rank, a.facets + b.facets)


def cones_equal(a: LatticeCone, b: LatticeCone) -> bool:
    return a.lattice == b.lattice and a.generators == b.generators


def cone_le(small: LatticeCone, big: LatticeCone) -> bool:
    """Set containment small <= big."""
    return all(cone_contains(big, g) for g in small.generators)


def is_face(small: LatticeCone, big: LatticeCone) -> bool:
    """Whether small is a face of big (cut out by valid inequalities)."""
    if not cone_le(small, big):
        return False
    zero_rows = [f for f in big.facets
                 if all(vec_dot(f, g) == 0 for g in small.generators)]
    cut = cone_from_inequalities(
        big.lattice.rank,
        list(big.facets) + [r for f in zero_rows for r in (f, vec_neg(f))])
    return cones_equal(cut, small)


def facet_faces(c: LatticeCone) -> Tuple[LatticeCone, ...]:
    """The codimension-one faces of c."""
    out = []
    for f in c.facets:
        if all(vec_dot(f, g) == 0 for g in c.generators):
            continue  # equality row, not a facet
        face = cone_from_inequalities(
            c.lattice.rank, list(c.facets) + [f, vec_neg(f)])
        if cone_dim(face) == cone_dim(c) - 1:
            out.append(face)
    return tuple(_dedupe(out))


@lru_cache(maxsize=None)
def all_faces(c: LatticeCone) -> Tuple[LatticeCone, ...]:
    """All faces of c, including c itself (and {0} when pointed)."""
    seen = {c}
    queue = [c]
    while queue:
        cur = queue.pop()
        for face in facet_faces(cur):
            if face not in seen:
                seen.add(face)
                queue.append(face)
    return tuple(sorted(seen, key=lambda k: (cone_dim(k), k.generators)))


def interior_point(c: LatticeCone) -> IntVector:
    """An integral point of the relative interior (0 for the zero cone)."""
    n = c.lattice.rank
    if not c.generators:
        return tuple([0] * n)
    total = [0] * n
    for g in c.generators:
        total = [x + y for x, y in zip(total, g)]
    if is_zero(total):  # lineality can cancel; perturb with half the rays
        rays = [g for g in c.generators if not cone_contains(c, vec_neg(g))]
        for g in rays:
            total = [x + y for x, y in zip(total, g)]
        if is_zero(total) and c.generators:
            total = list(c.generators[0])
    return tuple(total)


def _span_coords(c: LatticeCone):
    """Span basis plus generator/facet data rewritten in span coordinates."""
    basis = span_rows(c)
    d = len(basis)
    gens = []
    for g in c.generators:
        coords = coords_in_basis(basis, g)
        assert coords is not None
        assert all(x.denominator == 1 for x in coords)
        gens.append(tuple(int(x) for x in coords))
    facet_rows = []
    for f in c.facets:
        row = tuple(vec_dot(f, b) for b in basis)
        if not is_zero(row):
            facet_rows.append(row)
    return basis, d, gens, _dedupe(facet_rows)


def _triangulate_span(rank: int, rays: Sequence[IntVector]):
    """Triangulate a pointed full-support cone given by rays, recursively."""
    rays = sorted(_dedupe(tuple(r) for r in rays))
    d = rational_rank(rays)
    if len(rays) == d:
        return [tuple(rays)]
    c = cone_from_generators(rank, rays)
    v0 = c.generators[0]
    pieces = []
    for f in c.facets:
        if vec_dot(f, v0) > 0:
            sub = [r for r in c.generators if vec_dot(f, r) == 0]
            for piece in _triangulate_span(rank, sub):
                pieces.append(piece + (v0,))
    return pieces


def _parallelepiped_points(cols: Sequence[IntVector]):
    """Lattice points of the half-open parallelepiped of the column vectors."""
    d = len(cols)
    m = [[cols[j][i] for j in range(d)] for i in range(d)]
    u, s, _ = smith_normal_form(m)
    uinv = invert_unimodular(u)
    ranges = [range(s[i][i]) for i in range(d)]
    points = []
    for y in itertools.product(*ranges):
        x = mat_vec(uinv, y)
        lam = solve_rational(m, x)
        assert lam is not None
        frac = [l - (l.numerator // l.denominator) for l in lam]
        p = tuple(int(sum(Fraction(m[i][j]) * frac[j] for j in range(d))) for i in range(d))
        points.append(p)
    return _dedupe(points)


def hilbert_basis(c: LatticeCone) -> Tuple[IntVector, ...]:
    """Unique minimal generating set of the monoid c intersect Z^n.

    Requires a pointed cone; raises NotPointedError otherwise.  Output is
    sorted lexicographically.
    """
    if not is_pointed(c):
        raise NotPointedError("cone not pointed")
    if not c.generators:
        return ()
    basis, d, gens, facet_rows = _span_coords(c)
    candidates = set(gens)
    for piece in _triangulate_span(d, gens):
        for p in _parallelepiped_points(piece):
            if not is_zero(p):
                candidates.add(tuple(p))
    grading = tuple(sum(col) for col in zip(*facet_rows)) if facet_rows else (0,) * d
    def grade(x):
        return vec_dot(grading, x)
    def in_span_cone(x):
        return all(vec_dot(f, x) >= 0 for f in facet_rows)
    ordered = sorted(candidates, key=lambda x: (grade(x), x))
    hb: list = []
    for x in ordered:
        reducible = False
        for h in hb:
            diff = vec_sub(x, h)
            if not is_zero(diff) and in_span_cone(diff):
                reducible = True
                break
        if not reducible:
            hb.append(x)
    ambient = [tuple(mat_vec(transpose(basis), h)) for h in hb]
    return tuple(sorted(ambient))


def dual_monoid_generators(c: LatticeCone) -> Tuple[IntVector, ...]:
    """Generators of the monoid of integral functionals nonnegative on c.

    Hilbert basis when the dual is pointed; otherwise the lineality basis
    (both signs) together with lifted Hilbert generators of the pointed part.
    """
    dual = dual_cone(c)
    if is_pointed(dual):
        return hilbert_basis(dual)
    return saturated_generators(dual)


def saturated_generators(c: LatticeCone) -> Tuple[IntVector, ...]:
    """Generators of the monoid of all lattice points of c (any lineality)."""
    lin = lineality_rows(c)
    if not lin:
        return hilbert_basis(c)
    from .lattice import lattice_complement
    n = c.lattice.rank
    proj, section = lattice_complement(lin, n)
    quotient = cone_from_generators(n - len(lin), [mat_vec(proj, g) for g in c.generators])
    lifted = [tuple(mat_vec(section, h)) for h in hilbert_basis(quotient)]
    gens = list(lifted)
    for b in lin:
        gens.append(tuple(b))
        gens.append(vec_neg(b))
    return tuple(sorted(_dedupe(gens)))


def positive_grading(c: LatticeCone) -> IntVector:
    """An integer functional strictly positive on c minus the origin."""
    if not is_pointed(c):
        raise NotPointedError("cone not pointed")
    total = [0] * c.lattice.rank
    for f in c.facets:
        total = [x + y for x, y in zip(total, f)]
    return tuple(total)


def relative_volume(c: LatticeCone, span_basis: Sequence[IntVector], ell: Sequence[int]) -> Fraction:
    """d-volume of c cut by {ell <= 1}, measured in the given span lattice.

    `span_basis` must be a saturated basis whose span contains c and `ell`
    must be strictly positive on the nonzero points of c.
    """
    if not c.generators:
        return Fraction(0)
    d = len(span_basis)
    gens = []
    for g in c.generators:
        coords = coords_in_basis(span_basis, g)
        if coords is None:
            raise ValueError("cone not inside the reference span")
        gens.append(tuple(int(x) for x in coords))
    if rational_rank(gens) < d:
        return Fraction(0)
    ell_span = tuple(vec_dot(ell, b) for b in span_basis)
    total = Fraction(0)
    for piece in _triangulate_span(d, gens):
        cols = []
        for r in piece:
            height = vec_dot(ell_span, r)
            if height <= 0:
                raise ValueError("grading not positive on the cone")
            cols.append(tuple(Fraction(x, height) for x in r))
        det = _det_fraction([list(col) for col in cols])
        total += abs(det)
    fact = 1
    for i in range(2, d + 1):
        fact *= i
    return total / fact


def _det_fraction(rows) -> Fraction:
    n = len(rows)
    m = [[Fraction(x) for x in row] for row in rows]
    det = Fraction(1)
    for col in range(n):
        pivot = next((i for i in range(col, n) if m[i][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        pv = m[col][col]
        for i in range(col + 1, n):
            if m[i][col] != 0:
                c = m[i][col] / pv
                m[i] = [x - c * y for x, y in zip(m[i], m[col])]
    return det


def convex_union(cones: Sequence[LatticeCone]) -> LatticeCone:
    """The union of the cones when convex; raises NotAConeError otherwise."""
    if not cones:
        raise ValueError("empty union")
    rank = cones[0].lattice.rank
    hull = cone_from_generators(rank, [g for c in cones for g in c.generators])
    cut_rows = _dedupe(tuple(f) for c in cones for f in c.facets)

    def covered(cell_rows):
        cell = cone_from_inequalities(rank, cell_rows)
        if cone_dim(cell) < cone_dim(hull):
            return True
        if any(all(cone_contains(c, g) for g in cell.generators) for c in cones):
            return True
        return False

    def split(cell_rows, remaining):
        if covered(cell_rows):
            return True
        if not remaining:
            return False
        f, rest = remaining[0], remaining[1:]
        return (split(cell_rows + [f], rest)
                and split(cell_rows + [vec_neg(f)], rest))

    if not split(list(hull.facets), cut_rows):
        raise NotAConeError("union of cones is not convex")
    return hull
