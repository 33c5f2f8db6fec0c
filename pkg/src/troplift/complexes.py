"""Cone complexes, piecewise-linear maps, and subdivisions.

Two flavours of complex are supported.  Embedded complexes live in one
ambient lattice, cones intersect pairwise in faces, and face inclusions are
identity-coordinate.  Abstract complexes (used for universal families of
tropical curves, whose cones have different ranks) carry explicit face maps.
All geometric computation in this module requires the relevant complexes to
be embedded; abstract complexes support validation and per-cone operations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .errors import EmbeddingRequiredError, InvalidInputError
from .cones import (
    LatticeCone,
    all_faces,
    cone_contains,
    cone_dim,
    cone_from_generators,
    cone_from_inequalities,
    cones_equal,
    image_cone,
    interior_point,
    is_face,
    is_pointed,
    positive_grading,
    relative_volume,
    span_rows,
    dual_monoid_generators,
)
from .lattice import (
    Lattice,
    LatticeMap,
    coords_in_basis,
    identity_map,
    mat_identity,
    mat_mul,
    mat_tuple,
    mat_vec,
    rational_rank,
    solve_rational,
    transpose,
    vec_dot,
    vec_neg,
)


@dataclass(frozen=True)
class Report:
    """Validation outcome: empty violation list means valid."""

    violations: Tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class ConeComplex:
    """A collection of cones glued along faces."""

    cones: Tuple[LatticeCone, ...]
    faces: Tuple[Tuple[int, int, LatticeMap], ...]
    ambient: Optional[Lattice] = None

    @property
    def embedded(self) -> bool:
        return self.ambient is not None

    def face_pairs(self) -> set:
        return {(s, b) for s, b, _ in self.faces}

    def face_map(self, small: int, big: int) -> Optional[LatticeMap]:
        for s, b, m in self.faces:
            if (s, b) == (small, big):
                return m
        return None


def complex_from_cones(rank: int, generator_lists: Sequence[Sequence[Sequence[int]]]) -> ConeComplex:
    """Embedded complex from generator lists; closes under faces, dedupes."""
    cones: List[LatticeCone] = []
    for gens in generator_lists:
        c = cone_from_generators(rank, gens)
        if c not in cones:
            cones.append(c)
    closed: List[LatticeCone] = []
    for c in cones:
        for f in all_faces(c):
            if f not in closed:
                closed.append(f)
    closed.sort(key=lambda c: (cone_dim(c), c.generators))
    faces = []
    ident = identity_map(Lattice(rank))
    for i, small in enumerate(closed):
        for j, big in enumerate(closed):
            if is_face(small, big):
                faces.append((i, j, ident))
    return ConeComplex(tuple(closed), tuple(faces), Lattice(rank))


def abstract_complex(cones: Sequence[LatticeCone],
                     faces: Sequence[Tuple[int, int, LatticeMap]]) -> ConeComplex:
    """Abstract (face-glued) complex; identities and compositions are added."""
    n = len(cones)
    rels: Dict[Tuple[int, int], LatticeMap] = {}
    for i, c in enumerate(cones):
        rels[(i, i)] = identity_map(c.lattice)
    for s, b, m in faces:
        rels[(s, b)] = m
    changed = True
    while changed:
        changed = False
        for (a, b), m1 in list(rels.items()):
            for (c, d), m2 in list(rels.items()):
                if b == c and (a, d) not in rels:
                    rels[(a, d)] = m2.compose(m1)
                    changed = True
    out = tuple((s, b, m) for (s, b), m in sorted(rels.items()))
    return ConeComplex(tuple(cones), out, None)


def find_cone(k: ConeComplex, c: LatticeCone) -> Optional[int]:
    for i, cc in enumerate(k.cones):
        if cones_equal(cc, c):
            return i
    return None


def maximal_cone_ids(k: ConeComplex) -> List[int]:
    return [i for i in range(len(k.cones))
            if not any(s == i and b != i for s, b, _ in k.faces)]


def minimal_containing_cone(k: ConeComplex, points: Sequence[Sequence]) -> int:
    """Index of the smallest cone of an embedded complex containing the points."""
    if not k.embedded:
        raise EmbeddingRequiredError("containment search requires embedding")
    containing = [i for i, c in enumerate(k.cones)
                  if all(cone_contains(c, p) for p in points)]
    if not containing:
        raise InvalidInputError("points are outside the support of the complex")
    best = min(containing, key=lambda i: (cone_dim(k.cones[i]), k.cones[i].generators))
    for i in containing:
        if not cone_contains_cone(k.cones[i], k.cones[best]):
            raise InvalidInputError("complex has no unique minimal containing cone")
    return best


def cone_contains_cone(big: LatticeCone, small: LatticeCone) -> bool:
    return all(cone_contains(big, g) for g in small.generators)


def validate_complex(k: ConeComplex) -> Report:
    """Check the complex invariants; returns a report, never raises."""
    bad: List[str] = []
    pairs = k.face_pairs()
    for i in range(len(k.cones)):
        if (i, i) not in pairs:
            bad.append(f"face relation not reflexive at cone {i}")
    for (a, b) in pairs:
        for (c, d) in pairs:
            if b == c and (a, d) not in pairs:
                bad.append(f"face relation not transitive: {a}<{b}<{d}")
    for s, b, m in k.faces:
        small, big = k.cones[s], k.cones[b]
        if m.source != small.lattice or m.target != big.lattice:
            bad.append(f"face map {s}->{b} has wrong lattices")
            continue
        img = image_cone(m, small)
        if cone_dim(img) != cone_dim(small):
            bad.append(f"face map {s}->{b} not injective on the cone")
        elif not is_face(img, big):
            bad.append(f"face map {s}->{b} does not identify a face")
    if k.embedded:
        n = k.ambient.rank
        for c in k.cones:
            if c.lattice.rank != n:
                bad.append("embedded complex has a cone in the wrong lattice")
        for i in range(len(k.cones)):
            for j in range(i + 1, len(k.cones)):
                inter = cone_from_inequalities(n, k.cones[i].facets + k.cones[j].facets)
                if not (is_face(inter, k.cones[i]) and is_face(inter, k.cones[j])):
                    bad.append(f"non-face intersection between cones {i} and {j}")
                elif find_cone(k, inter) is None:
                    bad.append(f"intersection of cones {i} and {j} missing from the complex")
        for i, c in enumerate(k.cones):
            for f in all_faces(c):
                if find_cone(k, f) is None:
                    bad.append(f"face of cone {i} missing from the complex")
                    break
    return Report(tuple(bad))


@dataclass(frozen=True)
class PLMap:
    """A piecewise-linear lattice map between cone complexes."""

    source: ConeComplex
    target: ConeComplex
    assignment: Tuple[Tuple[int, LatticeMap], ...]

    def image_of(self, i: int) -> LatticeCone:
        t, m = self.assignment[i]
        return image_cone(m, self.source.cones[i])


def plmap_from_matrix(source: ConeComplex, target: ConeComplex,
                      matrix: Sequence[Sequence[int]]) -> PLMap:
    """PLMap given by one global matrix on an embedded source and target."""
    if not (source.embedded and target.embedded):
        raise EmbeddingRequiredError("global-matrix maps require embedded complexes")
    m = LatticeMap(mat_tuple(matrix), source.ambient, target.ambient)
    assignment = []
    for c in source.cones:
        img = [m(g) for g in c.generators]
        assignment.append((minimal_containing_cone(target, img or [(0,) * target.ambient.rank]), m))
    return PLMap(source, target, tuple(assignment))


def validate_plmap(f: PLMap) -> Report:
    bad: List[str] = []
    for i, (t, m) in enumerate(f.assignment):
        cone = f.source.cones[i]
        if m.source != cone.lattice:
            bad.append(f"map at cone {i} has wrong source lattice")
            continue
        tgt = f.target.cones[t]
        for g in cone.generators:
            if not cone_contains(tgt, m(g)):
                bad.append(f"cone {i} does not map into its assigned cone {t}")
                break
    for s, b, fm in f.source.faces:
        ts, ms = f.assignment[s]
        tb, mb = f.assignment[b]
        comp = mb.compose(fm)
        if f.target.embedded:
            if (ts, tb) not in f.target.face_pairs() and not cone_contains_cone(
                    f.target.cones[tb], f.target.cones[ts]):
                bad.append(f"assignments at face {s}<{b} land in incompatible cones")
            if comp.matrix != ms.matrix:
                bad.append(f"assignments do not commute with face inclusion {s}<{b}")
        else:
            g = f.target.face_map(ts, tb)
            if g is None:
                bad.append(f"no target face relation for {s}<{b}")
            elif comp.matrix != g.compose(ms).matrix:
                bad.append(f"assignments do not commute with face inclusion {s}<{b}")
    return Report(tuple(bad))


@dataclass(frozen=True)
class Subdivision:
    """A PLMap that is bijective on support and refines cones."""

    map: PLMap
    witness: Optional[PLMap] = field(default=None, compare=False)

    def fibers(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {t: [] for t in range(len(self.map.target.cones))}
        for i, (t, _) in enumerate(self.map.assignment):
            out[t].append(i)
        return out

    def pieces_over(self, t: int) -> List[int]:
        """Source cones assigned to t or to one of its faces."""
        below = {s for s, b in self.map.target.face_pairs() if b == t}
        below.add(t)
        return [i for i, (tt, _) in enumerate(self.map.assignment) if tt in below]


def identity_subdivision(k: ConeComplex) -> Subdivision:
    assignment = tuple((i, identity_map(c.lattice)) for i, c in enumerate(k.cones))
    pl = PLMap(k, k, assignment)
    return Subdivision(pl, witness=pl)


def subdivision_from_fans(source: ConeComplex, target: ConeComplex) -> Subdivision:
    """Subdivision with identity coordinates: each source cone is assigned the
    minimal target cone containing it."""
    if not (source.embedded and target.embedded):
        raise EmbeddingRequiredError("fan subdivisions require embedded complexes")
    if source.ambient != target.ambient:
        raise InvalidInputError("source and target fans have different ambient rank")
    ident = identity_map(source.ambient)
    assignment = []
    for c in source.cones:
        pts = c.generators or [(0,) * source.ambient.rank]
        assignment.append((minimal_containing_cone(target, pts), ident))
    pl = PLMap(source, target, tuple(assignment))
    return Subdivision(pl, witness=None)


def validate_subdivision(s: Subdivision) -> Report:
    bad = list(validate_complex(s.map.source).violations)
    bad += list(validate_plmap(s.map).violations)
    for i, (t, m) in enumerate(s.map.assignment):
        c = s.map.source.cones[i]
        if c.generators:
            if rational_rank([m(g) for g in c.generators]) != cone_dim(c):
                bad.append(f"source cone {i} does not embed into the target")
    for t in maximal_cone_ids(s.map.target):
        tgt = s.map.target.cones[t]
        d = cone_dim(tgt)
        if d == 0:
            continue
        if not is_pointed(tgt):
            bad.append(f"support check requires pointed target cone {t}")
            continue
        ell = positive_grading(tgt)
        span = span_rows(tgt)
        total = relative_volume(tgt, span, ell)
        pieces = []
        for i in s.pieces_over(t):
            img = s.map.image_of(i)
            if cone_dim(img) == d:
                pieces.append(img)
        covered = sum((relative_volume(p, span, ell) for p in pieces), start=total * 0)
        for a in range(len(pieces)):
            for b in range(a + 1, len(pieces)):
                inter = cone_from_inequalities(tgt.lattice.rank,
                                               pieces[a].facets + pieces[b].facets)
                if cone_dim(inter) == d and not cones_equal(pieces[a], pieces[b]):
                    bad.append(f"pieces overlap inside target cone {t}")
        if covered < total:
            bad.append(f"support not covered on target cone {t}")
        elif covered > total:
            bad.append(f"pieces overflow target cone {t}")
    return Report(tuple(bad))


def _factor_through(b_matrix: Sequence[Sequence[int]], m_matrix: Sequence[Sequence[int]],
                    piece: LatticeCone) -> Optional[Tuple[Tuple[int, ...], ...]]:
    """An integer matrix psi with B psi = M, at least on the span of `piece`."""
    ncols_m = len(m_matrix[0]) if m_matrix else 0
    ncols_b = len(b_matrix[0]) if b_matrix else 0
    cols = []
    exact = True
    for j in range(ncols_m):
        target_col = [m_matrix[i][j] for i in range(len(m_matrix))]
        sol = solve_rational(b_matrix, target_col)
        if sol is None or any(x.denominator != 1 for x in sol):
            exact = False
            break
        cols.append([int(x) for x in sol])
    if exact:
        psi = [[cols[j][i] for j in range(ncols_m)] for i in range(ncols_b)]
        return mat_tuple(psi)
    # fall back: solve on the span of the piece and extend by zero
    basis = span_rows(piece)
    psi_cols = {}
    for vec_idx, bvec in enumerate(basis):
        img = mat_vec(m_matrix, bvec)
        sol = solve_rational(b_matrix, img)
        if sol is None or any(x.denominator != 1 for x in sol):
            return None
        psi_cols[vec_idx] = [int(x) for x in sol]
    # assemble psi on a basis completion: zero outside the span
    n = len(m_matrix[0])
    full = []
    for i in range(ncols_b):
        row = []
        for e in range(n):
            unit = [0] * n
            unit[e] = 1
            coords = coords_in_basis(basis, unit) if basis else None
            if coords is None:
                row.append(0)
            else:
                val = sum(coords[t] * psi_cols[t][i] for t in range(len(basis)))
                if val.denominator != 1:
                    return None
                row.append(int(val))
        full.append(row)
    return mat_tuple(full)


def pullback_subdivision(f: PLMap, s: Subdivision) -> Subdivision:
    """Pull a subdivision of f.target back along f (fiber product in RPCC).

    The result subdivides f.source; `witness` is the induced PLMap from the
    refined source to s.map.source.
    """
    if s.map.target is not f.target and s.map.target != f.target:
        raise InvalidInputError("subdivision target does not match the map target")
    src = f.source
    pieces: List[LatticeCone] = []
    orig: List[int] = []
    fiber_cone: List[int] = []
    for i, ci in enumerate(src.cones):
        ti, mi = f.assignment[i]
        local: List[Tuple[LatticeCone, int]] = []
        for j in s.pieces_over(ti):
            imj = s.map.image_of(j)
            rows = [tuple(vec_dot(row, col) for col in zip(*mi.matrix)) for row in imj.facets]
            piece = cone_from_inequalities(ci.lattice.rank, list(ci.facets) + rows)
            if cone_dim(piece) == cone_dim(ci):
                local.append((piece, j))
        seen = {}
        for piece, j in local:
            if piece in seen:
                jj = seen[piece]
                if cone_dim(s.map.source.cones[j]) < cone_dim(s.map.source.cones[jj]):
                    seen[piece] = j
            else:
                seen[piece] = j
        maximal = list(seen.items())
        # face-close within this source cone
        face_pieces = {}
        for piece, j in maximal:
            for fc in all_faces(piece):
                if fc not in face_pieces:
                    img_pts = [mi(g) for g in fc.generators] or [(0,) * mi.target.rank]
                    jj = _minimal_fiber_cone(s, ti, img_pts)
                    face_pieces[fc] = jj
        for piece, j in sorted(face_pieces.items(), key=lambda kv: (cone_dim(kv[0]), kv[0].generators)):
            pieces.append(piece)
            orig.append(i)
            fiber_cone.append(j)
    # global dedupe is not wanted: the same cone shape in different source cones
    # stays separate (abstract complexes); build face relations
    faces: List[Tuple[int, int, LatticeMap]] = []
    for a in range(len(pieces)):
        for b in range(len(pieces)):
            if orig[a] == orig[b]:
                if is_face(pieces[a], pieces[b]):
                    faces.append((a, b, identity_map(pieces[a].lattice)))
            else:
                fm = src.face_map(orig[a], orig[b])
                if fm is not None and orig[a] != orig[b]:
                    img = image_cone(fm, pieces[a])
                    if is_face(img, pieces[b]) and cone_dim(img) == cone_dim(pieces[a]):
                        faces.append((a, b, fm))
    refined = ConeComplex(tuple(pieces), tuple(faces),
                          src.ambient if src.embedded else None)
    assignment = tuple((orig[i], identity_map(pieces[i].lattice)) for i in range(len(pieces)))
    to_source = PLMap(refined, src, assignment)
    wit_assignment = []
    for idx, piece in enumerate(pieces):
        j = fiber_cone[idx]
        ti, mi = f.assignment[orig[idx]]
        bmat = s.map.assignment[j][1].matrix
        psi = _factor_through(bmat, mi.matrix, piece)
        if psi is None:
            raise InvalidInputError("pullback piece does not factor through the refinement")
        wit_assignment.append((j, LatticeMap(psi, piece.lattice, s.map.source.cones[j].lattice)))
    witness = PLMap(refined, s.map.source, tuple(wit_assignment))
    return Subdivision(to_source, witness=witness)


def _minimal_fiber_cone(s: Subdivision, t: int, points) -> int:
    cands = []
    for j in s.pieces_over(t):
        img = s.map.image_of(j)
        if all(cone_contains(img, p) for p in points):
            cands.append(j)
    if not cands:
        raise InvalidInputError("refinement does not cover a pullback piece")
    return min(cands, key=lambda j: (cone_dim(s.map.source.cones[j]),
                                     s.map.source.cones[j].generators))


def pushforward_subdivision(pi: PLMap) -> Subdivision:
    """Push a subdivided family forward to its base cone.

    The target of `pi` must have a unique maximal cone; the result subdivides
    it by all intersections of images of source cones, kept as cells.
    """
    maxima = maximal_cone_ids(pi.target)
    if len(maxima) != 1:
        raise InvalidInputError("pushforward target must be a single cone with its faces")
    omega = pi.target.cones[maxima[0]]
    rank = omega.lattice.rank
    images = []
    for i in range(len(pi.source.cones)):
        img = pi.image_of(i)
        if not cone_contains_cone(omega, img):
            raise InvalidInputError("a source cone does not map into the base cone")
        if img not in images:
            images.append(img)
    d = cone_dim(omega)
    # cutting hyperplanes: facet rows of every image, plus the span equalities
    # of lower-dimensional images (a ray inside a chamber acts as a wall)
    cuts = []
    seen_cuts = set()
    from .lattice import kernel_basis

    def add_cut(row):
        if all(x == 0 for x in row):
            return
        key = min(tuple(row), vec_neg(row))
        if key not in seen_cuts:
            seen_cuts.add(key)
            cuts.append(tuple(row))

    for img in images:
        for f in img.facets:
            add_cut(f)
        if img.generators and cone_dim(img) < d:
            for row in kernel_basis(img.generators, rank):
                add_cut(row)
    cells: List[LatticeCone] = []

    def split(cell: LatticeCone, remaining):
        if cone_dim(cell) < d:
            return
        if not remaining:
            if cell not in cells:
                cells.append(cell)
            return
        row, rest = remaining[0], remaining[1:]
        plus = cone_from_inequalities(rank, list(cell.facets) + [row])
        minus = cone_from_inequalities(rank, list(cell.facets) + [vec_neg(row)])
        if cone_dim(plus) < d:
            split(minus, rest)
        elif cone_dim(minus) < d:
            split(plus, rest)
        else:
            split(plus, rest)
            split(minus, rest)

    split(omega, cuts)
    refined = complex_from_cones(rank, [c.generators for c in cells])
    base = complex_from_cones(rank, [omega.generators])
    sub = subdivision_from_fans(refined, base)
    report = validate_subdivision(sub)
    if not report.ok:
        raise InvalidInputError("pushforward did not produce a subdivision: "
                                + "; ".join(report.violations))
    return sub


def lift_through_subdivision(f: PLMap, s: Subdivision,
                             dual_hook: Optional[Callable[[int, tuple], bool]] = None
                             ) -> Optional[PLMap]:
    """The unique factorization of f through a subdivision, if it exists.

    Returns None when some source cone's image is not contained in a single
    cone of the refinement.  `dual_hook(i, functional)` may additionally
    reject a factorization whose pulled-back dual generators leave a
    designated submonoid (the fine, non-saturated case).
    """
    assignment = []
    for i, ci in enumerate(f.source.cones):
        ti, mi = f.assignment[i]
        pts = [mi(g) for g in ci.generators] or [(0,) * mi.target.rank]
        cands = []
        for j in s.pieces_over(ti):
            img = s.map.image_of(j)
            if all(cone_contains(img, p) for p in pts):
                cands.append(j)
        if not cands:
            return None
        j = min(cands, key=lambda j: (cone_dim(s.map.source.cones[j]),
                                      s.map.source.cones[j].generators))
        psi = _factor_through(s.map.assignment[j][1].matrix, mi.matrix, ci)
        if psi is None:
            return None
        target_cone = s.map.source.cones[j]
        lifted = LatticeMap(psi, ci.lattice, target_cone.lattice)
        if any(not cone_contains(target_cone, lifted(g)) for g in ci.generators):
            return None
        if dual_hook is not None:
            for h in dual_monoid_generators(target_cone):
                pulled = tuple(vec_dot(h, col) for col in zip(*psi)) if psi else ()
                if not dual_hook(i, pulled):
                    return None
        assignment.append((j, lifted))
    return PLMap(f.source, s.map.source, tuple(assignment))


def star_fan(k: ConeComplex, cone_id: int) -> ConeComplex:
    """Quotient fan of the cones containing the given cone."""
    if not k.embedded:
        raise EmbeddingRequiredError("star requires embedding")
    c = k.cones[cone_id]
    n = k.ambient.rank
    from .lattice import lattice_complement, saturate_span
    span = saturate_span(c.generators, n) if c.generators else ()
    if span:
        proj, _ = lattice_complement(span, n)
    else:
        proj = mat_identity(n)
    star_cones = []
    for i, big in enumerate(k.cones):
        if (cone_id, i) in k.face_pairs():
            star_cones.append([mat_vec(proj, g) for g in big.generators])
    return complex_from_cones(n - len(span), star_cones)
