import random
from fractions import Fraction
from itertools import product

import pytest

from troplift.errors import NotAConeError, NotPointedError
from troplift.cones import (
    all_faces,
    cone_contains,
    cone_dim,
    cone_from_generators,
    cone_from_inequalities,
    cones_equal,
    convex_union,
    dual_cone,
    dual_monoid_generators,
    hilbert_basis,
    image_cone,
    interior_point,
    intersect_cones,
    is_face,
    is_pointed,
    lineality_rows,
    relative_volume,
    saturated_generators,
    span_rows,
    zero_cone,
)
from troplift.lattice import Lattice, LatticeMap, mat_tuple, vec_dot


def cone2(*gens):
    return cone_from_generators(2, gens)


QUADRANT = cone_from_generators(2, [(1, 0), (0, 1)])


def grid(bound, dim):
    return product(range(-bound, bound + 1), repeat=dim)


def brute_membership(c, pts):
    return {p: cone_contains(c, p) for p in pts}


# ---------------------------------------------------------------- dual cones

def test_dual_quadrant_self_dual():
    assert cones_equal(dual_cone(QUADRANT), QUADRANT)


def test_dual_of_ray_is_halfplane():
    ray = cone2((1, 0))
    dual = dual_cone(ray)
    assert set(dual.generators) == {(1, 0), (0, 1), (0, -1)}
    # sample-grid oracle: dual contains f iff f nonnegative on the ray
    for f in grid(3, 2):
        expected = f[0] >= 0
        assert cone_contains(dual, f) == expected


def test_dual_skew_cone():
    c = cone2((1, 0), (1, 2))
    dual = dual_cone(c)
    assert set(dual.generators) == {(0, 1), (2, -1)}
    for f in dual.generators:
        for g in c.generators:
            assert vec_dot(f, g) >= 0


def test_double_dual_roundtrip_random():
    rng = random.Random(23)
    for _ in range(40):
        dim = rng.randint(1, 4)
        gens = [tuple(rng.randint(-5, 5) for _ in range(dim))
                for _ in range(rng.randint(1, dim + 2))]
        c = cone_from_generators(dim, gens)
        dd = dual_cone(dual_cone(c))
        pts = [tuple(rng.randint(-4, 4) for _ in range(dim)) for _ in range(40)]
        assert brute_membership(c, pts) == brute_membership(dd, pts)


# ------------------------------------------------------------- hilbert basis

def oracle_hilbert(c, dim):
    """Brute-force irreducible enumeration within the doubled bounding box."""
    bound = 2 * max((max(abs(x) for x in g) for g in c.generators), default=1)
    pts = [p for p in grid(bound, dim) if cone_contains(c, p) and any(p)]
    irt = []
    for p in pts:
        reducible = False
        for q in pts:
            if q != p:
                diff = tuple(a - b for a, b in zip(p, q))
                if any(diff) and cone_contains(c, diff):
                    # p = q + diff with both in the monoid and inside the box?
                    if all(abs(x) <= bound for x in diff):
                        reducible = True
                        break
        if not reducible:
            irt.append(p)
    return sorted(irt)


def test_hilbert_quadrant():
    assert hilbert_basis(QUADRANT) == ((0, 1), (1, 0))


def test_hilbert_skew_cone():
    c = cone2((1, 0), (1, 2))
    assert hilbert_basis(c) == ((1, 0), (1, 1), (1, 2))
    assert hilbert_basis(c) == tuple(oracle_hilbert(c, 2))


def test_hilbert_steeper_cone():
    c = cone2((1, 0), (1, 3))
    assert hilbert_basis(c) == ((1, 0), (1, 1), (1, 2), (1, 3))


def test_hilbert_not_pointed():
    half = cone2((1, 0), (0, 1), (0, -1))
    with pytest.raises(NotPointedError):
        hilbert_basis(half)


def test_hilbert_matches_bruteforce_random():
    rng = random.Random(5)
    for _ in range(30):
        dim = rng.randint(2, 3)
        gens = [tuple(rng.randint(0, 4) for _ in range(dim))
                for _ in range(rng.randint(2, 4))]
        c = cone_from_generators(dim, gens)
        if not is_pointed(c) or not c.generators:
            continue
        assert list(hilbert_basis(c)) == oracle_hilbert(c, dim)


# --------------------------------------------------------------- containment

def test_contains_strict_interior():
    assert cone_contains(QUADRANT, (1, 1), strict=True)


def test_contains_boundary():
    assert not cone_contains(QUADRANT, (1, 0), strict=True)
    assert cone_contains(QUADRANT, (1, 0), strict=False)


def test_contains_ray_relative_interior():
    ray = cone2((1, 0))
    assert cone_contains(ray, (2, 0), strict=True)
    assert not cone_contains(ray, (0, 0), strict=True)
    assert not cone_contains(ray, (1, 1), strict=False)


def test_contains_rational_points():
    assert cone_contains(QUADRANT, (Fraction(1, 2), Fraction(3, 7)))
    assert not cone_contains(QUADRANT, (Fraction(-1, 2), Fraction(1, 2)))


# --------------------------------------------------------------- image cones

def test_image_identity():
    ident = LatticeMap(mat_tuple([[1, 0], [0, 1]]), Lattice(2), Lattice(2))
    assert cones_equal(image_cone(ident, QUADRANT), QUADRANT)


def test_image_projection():
    proj = LatticeMap(mat_tuple([[1, 0]]), Lattice(2), Lattice(1))
    img = image_cone(proj, QUADRANT)
    assert img.generators == ((1,),)


def test_image_second_coordinate():
    proj = LatticeMap(mat_tuple([[0, 1]]), Lattice(2), Lattice(1))
    img = image_cone(proj, cone2((1, 1), (2, 1)))
    assert img.generators == ((1,),)


# ------------------------------------------------------------ faces and misc

def test_faces_of_quadrant():
    faces = all_faces(QUADRANT)
    dims = sorted(cone_dim(f) for f in faces)
    assert dims == [0, 1, 1, 2]
    assert is_face(cone2((1, 0)), QUADRANT)
    assert not is_face(cone2((1, 1)), QUADRANT)


def test_zero_cone():
    z = zero_cone(3)
    assert z.generators == ()
    assert cone_dim(z) == 0
    assert cone_contains(z, (0, 0, 0))
    assert not cone_contains(z, (1, 0, 0))


def test_interior_point_strict():
    rng = random.Random(31)
    for _ in range(20):
        dim = rng.randint(1, 3)
        gens = [tuple(rng.randint(-3, 3) for _ in range(dim))
                for _ in range(rng.randint(1, 4))]
        c = cone_from_generators(dim, gens)
        if not c.generators:
            continue
        assert cone_contains(c, interior_point(c), strict=True)


def test_relative_volume_split():
    # stellar split of the quadrant: volumes of the halves add up
    ell = (1, 1)
    span = span_rows(QUADRANT)
    lower = cone2((1, 0), (1, 1))
    upper = cone2((1, 1), (0, 1))
    total = relative_volume(QUADRANT, span, ell)
    assert total == relative_volume(lower, span, ell) + relative_volume(upper, span, ell)


def test_convex_union_accepts_and_rejects():
    lower = cone2((1, 0), (1, 1))
    upper = cone2((1, 1), (0, 1))
    u = convex_union([lower, upper])
    assert cones_equal(u, QUADRANT)
    other = cone2((0, 1), (-1, 0))
    with pytest.raises(NotAConeError):
        convex_union([lower, other])


def test_saturated_generators_halfplane():
    half = cone2((1, 0), (0, 1), (0, -1))
    gens = saturated_generators(half)
    # membership agreement on a grid
    mon = set()
    frontier = {(0, 0)}
    for _ in range(8):
        frontier = {tuple(a + b for a, b in zip(p, g)) for p in frontier for g in gens} | frontier
    for p in grid(3, 2):
        expected = p[0] >= 0
        if expected:
            assert any(all(abs(x) < 50 for x in p) for _ in [0])  # sanity
    assert any(g == (0, -1) or g == (0, 1) for g in gens)


def test_dual_monoid_generators_ray():
    ray = cone2((1, 0))
    gens = set(dual_monoid_generators(ray))
    assert gens == {(1, 0), (0, 1), (0, -1)}
