"""Finitely generated submonoids of lattices and their ideals.

Monoids are given by canonical generator lists (irredundant, sorted).
Membership is decided by exact bounded search, with the bound certified by a
positive grading of the (pointed) generated cone; saturated monoids over
non-pointed cones fall back to cone membership.  Ideal-theoretic searches
(preimages, radical tests) are made exact by reducing them to Hilbert bases
of solution cones, so no uncertified bound is ever trusted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import (
    GenerationBoundError,
    InvalidInputError,
    MembershipBoundError,
    NonIntegralAmalgamationError,
    NotAConeError,
)
from .cones import (
    LatticeCone,
    cone_contains,
    cone_from_generators,
    convex_union,
    hilbert_basis,
    is_pointed,
    positive_grading,
    saturated_generators,
)
from .lattice import (
    IntVector,
    Lattice,
    LatticeMap,
    mat_identity,
    mat_tuple,
    smith_normal_form,
    vec_add,
    vec_dot,
    vec_neg,
    vec_sub,
)


@dataclass(frozen=True)
class FineMonoid:
    """A finitely generated submonoid of Z^rank, canonically presented."""

    ambient: Lattice
    generators: Tuple[IntVector, ...]
    saturated_hint: bool = False

    def __repr__(self):
        return f"FineMonoid(rank={self.ambient.rank}, generators={list(self.generators)})"


def _monoid_cone(gens: Sequence[IntVector], rank: int) -> LatticeCone:
    return cone_from_generators(rank, gens)


def _member_search(gens: Sequence[IntVector], v: IntVector, grading: IntVector) -> bool:
    """Decide v in the N-span of gens; complete when the grading is positive
    on every generator."""
    target_grade = vec_dot(grading, v)
    if target_grade < 0:
        return False
    memo: Dict[Tuple[IntVector, int], bool] = {}

    def rec(rem: IntVector, start: int) -> bool:
        if all(x == 0 for x in rem):
            return True
        key = (rem, start)
        if key in memo:
            return memo[key]
        out = False
        for i in range(start, len(gens)):
            g = gens[i]
            gg = vec_dot(grading, g)
            if gg <= 0 or gg > vec_dot(grading, rem):
                continue
            out = rec(vec_sub(rem, g), i)
            if out:
                break
        memo[key] = out
        return out

    return rec(tuple(v), 0)


def membership(m: FineMonoid, v: Sequence[int]) -> bool:
    """Exact membership of an integer vector in the monoid."""
    v = tuple(v)
    if len(v) != m.ambient.rank:
        raise InvalidInputError("vector has the wrong ambient rank")
    if all(x == 0 for x in v):
        return True
    if not m.generators:
        return False
    cone = _monoid_cone(m.generators, m.ambient.rank)
    if not cone_contains(cone, v):
        return False
    if is_pointed(cone):
        return _member_search(m.generators, v, positive_grading(cone))
    if m.saturated_hint:
        return True  # cone membership of an integer point in a saturated monoid
    raise MembershipBoundError(
        "membership undecided: fine monoid over a non-pointed cone")


def fine_monoid(rank: int, gens: Sequence[Sequence[int]],
                saturated_hint: bool = False) -> FineMonoid:
    """Canonical fine monoid: duplicates and redundant generators removed."""
    cleaned = sorted({tuple(g) for g in gens if any(g)})
    cone = _monoid_cone(cleaned, rank) if cleaned else None
    if cleaned and is_pointed(cone):
        grading = positive_grading(cone)
        cleaned.sort(key=lambda g: (vec_dot(grading, g), g))
        kept: List[IntVector] = []
        for i, g in enumerate(cleaned):
            others = kept + cleaned[i + 1:]
            if not (others and _member_search(others, g, grading)):
                kept.append(g)
        cleaned = sorted(kept)
    return FineMonoid(Lattice(rank), tuple(cleaned), saturated_hint)


def saturation(m: FineMonoid) -> FineMonoid:
    """The monoid of all lattice points of the rational cone spanned by m."""
    if not m.generators:
        return FineMonoid(m.ambient, (), True)
    cone = _monoid_cone(m.generators, m.ambient.rank)
    if is_pointed(cone):
        gens = hilbert_basis(cone)
    else:
        gens = saturated_generators(cone)
    return FineMonoid(m.ambient, tuple(sorted(gens)), True)


def is_saturated(m: FineMonoid) -> bool:
    sat = saturation(m)
    return all(membership(m, g) for g in sat.generators)


@dataclass(frozen=True)
class MonoidHom:
    """A monoid homomorphism restricted from a lattice map on the ambients."""

    source: FineMonoid
    target: FineMonoid
    map: LatticeMap

    def __post_init__(self):
        for g in self.source.generators:
            if not membership(self.target, self.map(g)):
                raise InvalidInputError("homomorphism does not map into the target monoid")

    def __call__(self, v):
        return self.map(v)


def identity_hom(m: FineMonoid) -> MonoidHom:
    from .lattice import identity_map
    return MonoidHom(m, m, identity_map(m.ambient))


# ----------------------------------------------------------- puncturing data

def mu_cone_from_images(cones: Sequence[LatticeCone]) -> LatticeCone:
    """The union of image cones, verified convex; the domain of Q_l data."""
    try:
        return convex_union(cones)
    except NotAConeError:
        raise NotAConeError("mu is not a cone") from None


def puncturing_monoid_Ql(gamma_dual: FineMonoid, mu_dual: Sequence[Sequence[int]],
                         pullback: LatticeMap) -> FineMonoid:
    """The monoid generated by gamma'-dual + N together with pulled-back
    mu-dual functionals, inside gamma'-dual + Z."""
    r = gamma_dual.ambient.rank
    gens = [tuple(g) + (0,) for g in gamma_dual.generators]
    gens.append(tuple([0] * r + [1]))
    if pullback.target.rank != r + 1:
        raise InvalidInputError("pullback must land in gamma'-dual + Z")
    for mvec in mu_dual:
        pulled = pullback(tuple(mvec))
        gens.append(pulled)
    out = fine_monoid(r + 1, gens)
    sat = saturation(gamma_dual)
    for g in out.generators:
        if not membership(sat, g[:r]):
            raise InvalidInputError("Q_l is not contained in gamma'-dual + Z")
    return out


def prestable_monoid(ql: FineMonoid, rho: Sequence[int]) -> FineMonoid:
    """Adjoin (-rho, 1) to Q_l and recanonicalize."""
    r = ql.ambient.rank - 1
    if len(rho) != r:
        raise InvalidInputError("rho must be a functional on the moduli cone")
    extra = tuple(-x for x in rho) + (1,)
    return fine_monoid(ql.ambient.rank, list(ql.generators) + [extra])


def pushforward_stalk_monoid(gamma_dual: FineMonoid, rho: Sequence[int]) -> FineMonoid:
    """gamma-dual + N with (-rho, 1) adjoined: the stalk at a punctured node."""
    r = gamma_dual.ambient.rank
    base = [tuple(g) + (0,) for g in gamma_dual.generators]
    base.append(tuple([0] * r + [1]))
    ql = fine_monoid(r + 1, base)
    return prestable_monoid(ql, rho)


def fine_pushout(a: FineMonoid, b: FineMonoid, c_to_a: MonoidHom,
                 c_to_b: MonoidHom) -> FineMonoid:
    """The integralized (fine) amalgamated pushout of a and b over a shared
    source, presented inside the groupified pushout."""
    if c_to_a.source != c_to_b.source:
        raise InvalidInputError("pushout legs must share their source")
    ra, rb = a.ambient.rank, b.ambient.rank
    rc = c_to_a.source.ambient.rank
    cols = []
    for j in range(rc):
        unit = [0] * rc
        unit[j] = 1
        fa = c_to_a.map(unit)
        fb = c_to_b.map(unit)
        cols.append(list(fa) + [-x for x in fb])
    mat = [[cols[j][i] for j in range(rc)] for i in range(ra + rb)]
    u, s, _ = smith_normal_form(mat) if rc else (mat_identity(ra + rb),
                                                 [[0] * rc for _ in range(ra + rb)],
                                                 None)
    k = min(ra + rb, rc)
    rank = 0
    for i in range(k):
        if s[i][i] != 0:
            if abs(s[i][i]) != 1:
                raise NonIntegralAmalgamationError("non-integral amalgamation")
            rank += 1
    proj = [u[i] for i in range(rank, ra + rb)]
    out_rank = ra + rb - rank
    gens = []
    for g in a.generators:
        vecfull = list(g) + [0] * rb
        gens.append(tuple(vec_dot(row, vecfull) for row in proj))
    for g in b.generators:
        vecfull = [0] * ra + list(g)
        gens.append(tuple(vec_dot(row, vecfull) for row in proj))
    return fine_monoid(out_rank, gens)


# ------------------------------------------------------------------- ideals

@dataclass(frozen=True)
class MonoidIdeal:
    """An ideal of a fine monoid, by a canonical minimal generator list."""

    monoid: FineMonoid
    generators: Tuple[IntVector, ...]


def monoid_ideal(m: FineMonoid, gens: Sequence[Sequence[int]]) -> MonoidIdeal:
    cleaned = sorted({tuple(g) for g in gens})
    for g in cleaned:
        if not membership(m, g):
            raise InvalidInputError("ideal generator outside the monoid")
    kept: List[IntVector] = []
    for g in cleaned:
        redundant = False
        for g2 in cleaned:
            if g2 != g and membership(m, vec_sub(g, g2)):
                if not (membership(m, vec_sub(g2, g)) and g2 > g):
                    redundant = True
                    break
        if not redundant:
            kept.append(g)
    return MonoidIdeal(m, tuple(sorted(kept)))


def ideal_contains(i: MonoidIdeal, v: Sequence[int]) -> bool:
    return any(membership(i.monoid, vec_sub(tuple(v), w)) for w in i.generators)


def puncturing_ideal(m: FineMonoid, interior_of: LatticeCone) -> MonoidIdeal:
    """The ideal of monoid elements strictly positive somewhere on the
    relative interior of the cone (as functionals on its ambient)."""
    if m.ambient.rank != interior_of.lattice.rank:
        raise InvalidInputError("functional rank does not match the cone")
    gens = [g for g in m.generators
            if any(vec_dot(g, x) != 0 for x in interior_of.generators)]
    return monoid_ideal(m, gens)


def _solution_monoid_elements(source_gens, image_vecs, target_gens, w, rank):
    """Source-monoid elements q with image q = w + (target element), via the
    Hilbert basis of the homogenized solution cone."""
    na, nb = len(source_gens), len(target_gens)
    nvars = na + nb + 1
    rows = []
    for coord in range(rank):
        row = [image_vecs[i][coord] for i in range(na)]
        row += [-target_gens[j][coord] for j in range(nb)]
        row += [-w[coord]]
        rows.append(tuple(row))
    ineqs = []
    for i in range(nvars):
        unit = [0] * nvars
        unit[i] = 1
        ineqs.append(tuple(unit))
    for row in rows:
        ineqs.append(row)
        ineqs.append(vec_neg(row))
    from .cones import cone_from_inequalities
    cone = cone_from_inequalities(nvars, ineqs)
    if len(cone.generators) > 200:
        raise GenerationBoundError("generation bound exceeded")
    out = []
    for h in hilbert_basis(cone):
        if h[-1] == 1:
            q = tuple(sum(h[i] * g[c] for i, g in enumerate(source_gens))
                      for c in range(len(source_gens[0]) if source_gens else 0))
            out.append(q)
    return out


def ideal_preimage(h: MonoidHom, i: MonoidIdeal) -> MonoidIdeal:
    """{q in source : h(q) in i}, presented by certified minimal generators."""
    if i.monoid != h.target:
        raise InvalidInputError("ideal does not live in the homomorphism target")
    src = h.source
    cone = _monoid_cone(src.generators, src.ambient.rank) if src.generators else None
    if cone is not None and not is_pointed(cone):
        raise GenerationBoundError("generation bound exceeded")
    images = [h.map(g) for g in src.generators]
    candidates: List[IntVector] = []
    for w in i.generators:
        candidates.extend(_solution_monoid_elements(
            src.generators, images, i.monoid.generators, w, h.target.ambient.rank))
    candidates = sorted(set(candidates))
    kept = []
    for q in candidates:
        redundant = False
        for q2 in candidates:
            if q2 != q and membership(src, vec_sub(q, q2)):
                if not (membership(src, vec_sub(q2, q)) and q2 > q):
                    redundant = True
                    break
        if not redundant:
            kept.append(q)
    return MonoidIdeal(src, tuple(sorted(kept)))


def _is_sharp(m: FineMonoid) -> bool:
    if not m.generators:
        return True
    return is_pointed(_monoid_cone(m.generators, m.ambient.rank))


def radical_is_maximal(i: MonoidIdeal) -> bool:
    """True iff the complement of the ideal in its (sharp) monoid is finite."""
    m = i.monoid
    if not _is_sharp(m):
        raise InvalidInputError("radical test requires a sharp monoid")
    if not i.generators:
        return not m.generators
    rank = m.ambient.rank
    for g in m.generators:
        hit = False
        for w in i.generators:
            # exists k >= 1 with k*g in w + M?
            sols = _solution_monoid_elements([g], [g], m.generators, w, rank)
            if sols:
                hit = True
                break
        if not hit:
            return False
    return True


def ideal_complement(i: MonoidIdeal, cap: int = 100000) -> List[IntVector]:
    """The finite complement of an ideal whose radical is maximal."""
    if not radical_is_maximal(i):
        raise InvalidInputError("ideal complement is infinite")
    m = i.monoid
    out = []
    seen = {(0,) * m.ambient.rank}
    frontier = [(0,) * m.ambient.rank]
    while frontier:
        q = frontier.pop()
        if ideal_contains(i, q):
            continue
        out.append(q)
        for g in m.generators:
            y = vec_add(q, g)
            if y not in seen:
                seen.add(y)
                frontier.append(y)
        if len(out) > cap:
            raise GenerationBoundError("generation bound exceeded")
    return sorted(out)
