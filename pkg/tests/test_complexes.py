import random
from fractions import Fraction

import pytest

from troplift.errors import EmbeddingRequiredError, InvalidInputError
from troplift.cones import (
    cone_contains,
    cone_dim,
    cone_from_generators,
    cones_equal,
    interior_point,
)
from troplift.complexes import (
    ConeComplex,
    complex_from_cones,
    find_cone,
    identity_subdivision,
    lift_through_subdivision,
    maximal_cone_ids,
    minimal_containing_cone,
    plmap_from_matrix,
    pullback_subdivision,
    pushforward_subdivision,
    star_fan,
    subdivision_from_fans,
    validate_complex,
    validate_plmap,
    validate_subdivision,
)
from troplift.lattice import Lattice, LatticeMap, identity_map, mat_tuple


def p1xp1_fan():
    return complex_from_cones(2, [
        [(1, 0), (0, 1)],
        [(0, 1), (-1, 0)],
        [(-1, 0), (0, -1)],
        [(0, -1), (1, 0)],
    ])


def blowup_fan():
    # blow up of the D1 * D2 corner: stellar subdivision at (1, 1)
    return complex_from_cones(2, [
        [(1, 0), (1, 1)],
        [(1, 1), (0, 1)],
        [(0, 1), (-1, 0)],
        [(-1, 0), (0, -1)],
        [(0, -1), (1, 0)],
    ])


def quadrant_complex():
    return complex_from_cones(2, [[(1, 0), (0, 1)]])


def stellar_quadrant():
    return complex_from_cones(2, [[(1, 0), (1, 1)], [(1, 1), (0, 1)]])


def test_validate_p1xp1():
    fan = p1xp1_fan()
    assert validate_complex(fan).ok
    # 1 zero cone + 4 rays + 4 two-cones
    assert len(fan.cones) == 9
    assert len(maximal_cone_ids(fan)) == 4


def test_validate_overlapping_cones():
    # two 2-cones overlapping in their interiors
    bad = ConeComplex(
        cones=(cone_from_generators(2, [(1, 0), (0, 1)]),
               cone_from_generators(2, [(1, 1), (-1, 1)])),
        faces=((0, 0, identity_map(Lattice(2))), (1, 1, identity_map(Lattice(2)))),
        ambient=Lattice(2),
    )
    rep = validate_complex(bad)
    assert any("non-face intersection" in v for v in rep.violations)


def test_validate_missing_identity_face():
    c = cone_from_generators(1, [(1,)])
    bad = ConeComplex((c,), (), Lattice(1))
    rep = validate_complex(bad)
    assert any("not reflexive" in v for v in rep.violations)


def test_identity_subdivision_valid():
    s = identity_subdivision(p1xp1_fan())
    assert validate_subdivision(s).ok


def test_stellar_subdivision_valid():
    s = subdivision_from_fans(stellar_quadrant(), quadrant_complex())
    assert validate_subdivision(s).ok
    # sampled rational points: both halves cover the quadrant
    for p in [(1, 2), (2, 1), (3, 3), (5, 1)]:
        assert any(cone_contains(c, p) for c in s.map.source.cones)


def test_dropping_a_cone_breaks_support():
    half = complex_from_cones(2, [[(1, 0), (1, 1)]])
    s = subdivision_from_fans(half, quadrant_complex())
    rep = validate_subdivision(s)
    assert any("support not covered" in v for v in rep.violations)


def test_pullback_identity():
    fan = quadrant_complex()
    s = identity_subdivision(fan)
    f = plmap_from_matrix(fan, fan, [[1, 0], [0, 1]])
    pb = pullback_subdivision(f, s)
    assert validate_subdivision(pb).ok
    # each maximal source cone keeps one maximal piece
    assert sorted(cone_dim(c) for c in pb.map.source.cones).count(2) == 1


def test_pullback_ray_into_stellar():
    ray = complex_from_cones(2, [[(1, 1)]])
    f = plmap_from_matrix(ray, quadrant_complex(), [[1, 0], [0, 1]])
    s = subdivision_from_fans(stellar_quadrant(), quadrant_complex())
    pb = pullback_subdivision(f, s)
    # the ray lies inside a single new cone: not subdivided
    maxima = [pb.map.source.cones[i] for i in maximal_cone_ids(pb.map.source)]
    assert len(maxima) == 1 and cones_equal(maxima[0], cone_from_generators(2, [(1, 1)]))


def test_pullback_skew_cone_splits():
    skew = complex_from_cones(2, [[(1, 0), (1, 2)]])
    f = plmap_from_matrix(skew, quadrant_complex(), [[1, 0], [0, 1]])
    s = subdivision_from_fans(stellar_quadrant(), quadrant_complex())
    pb = pullback_subdivision(f, s)
    assert validate_subdivision(pb).ok
    maxima = [pb.map.source.cones[i] for i in maximal_cone_ids(pb.map.source)]
    assert len(maxima) == 2
    expected = {cone_from_generators(2, [(1, 0), (1, 1)]).generators,
                cone_from_generators(2, [(1, 1), (1, 2)]).generators}
    assert {m.generators for m in maxima} == expected


def test_pullback_witness_composes():
    skew = complex_from_cones(2, [[(1, 0), (1, 2)]])
    f = plmap_from_matrix(skew, quadrant_complex(), [[1, 0], [0, 1]])
    s = subdivision_from_fans(stellar_quadrant(), quadrant_complex())
    pb = pullback_subdivision(f, s)
    wit = pb.witness
    assert wit is not None
    assert validate_plmap(wit).ok
    # s.map o witness == f o pb.map on every refined cone
    for i in range(len(pb.map.source.cones)):
        j, psi = wit.assignment[i]
        sj, mj = s.map.assignment[j]
        oi, ident = pb.map.assignment[i]
        ti, mi = f.assignment[oi]
        lhs = mj.compose(psi)
        for g in pb.map.source.cones[i].generators:
            assert lhs(g) == mi(g)


def test_pushforward_identity_trivial():
    q = quadrant_complex()
    s = identity_subdivision(q)
    pi = plmap_from_matrix(q, q, [[1, 0], [0, 1]])
    push = pushforward_subdivision(pi)
    assert validate_subdivision(push).ok
    maxima = maximal_cone_ids(push.map.source)
    assert len(maxima) == 1


def test_pushforward_two_rays_make_walls():
    # two projected rays (1,0), (1,1) inside a 2-cone split it into chambers
    src = complex_from_cones(2, [[(1, 0)], [(1, 1)], [(1, 0), (0, 1)]])
    base = quadrant_complex()
    pi = plmap_from_matrix(src, base, [[1, 0], [0, 1]])
    push = pushforward_subdivision(pi)
    assert validate_subdivision(push).ok
    maxima = {push.map.source.cones[i].generators for i in maximal_cone_ids(push.map.source)}
    assert maxima == {cone_from_generators(2, [(1, 0), (1, 1)]).generators,
                      cone_from_generators(2, [(1, 1), (0, 1)]).generators}


def test_lift_through_identity():
    fan = quadrant_complex()
    f = plmap_from_matrix(fan, fan, [[1, 0], [0, 1]])
    s = identity_subdivision(fan)
    lifted = lift_through_subdivision(f, s)
    assert lifted is not None
    assert validate_plmap(lifted).ok


def test_lift_ray_onto_new_ray():
    ray = complex_from_cones(2, [[(1, 1)]])
    f = plmap_from_matrix(ray, quadrant_complex(), [[1, 0], [0, 1]])
    s = subdivision_from_fans(stellar_quadrant(), quadrant_complex())
    lifted = lift_through_subdivision(f, s)
    assert lifted is not None
    # the 1-dimensional cone lands on the new ray
    j, _ = lifted.assignment[find_cone(ray, cone_from_generators(2, [(1, 1)]))]
    assert cones_equal(s.map.source.cones[j], cone_from_generators(2, [(1, 1)]))


def test_lift_spanning_cone_fails():
    quad = quadrant_complex()
    f = plmap_from_matrix(quad, quad, [[1, 0], [0, 1]])
    s = subdivision_from_fans(stellar_quadrant(), quadrant_complex())
    assert lift_through_subdivision(f, s) is None


def test_lift_bruteforce_point_classification():
    rng = random.Random(17)
    quad = quadrant_complex()
    s = subdivision_from_fans(stellar_quadrant(), quadrant_complex())
    for _ in range(20):
        g1 = (rng.randint(0, 4), rng.randint(0, 4))
        g2 = (rng.randint(0, 4), rng.randint(0, 4))
        if g1 == (0, 0) or g2 == (0, 0):
            continue
        src = complex_from_cones(2, [[g1, g2]])
        f = plmap_from_matrix(src, quad, [[1, 0], [0, 1]])
        lifted = lift_through_subdivision(f, s)
        # brute force: sample points of each source cone, classify fibers
        for i, c in enumerate(src.cones):
            if not c.generators:
                continue
            samples = [g for g in c.generators] + [interior_point(c)]
            fibs = set()
            for p in samples:
                for j, sc in enumerate(s.map.source.cones):
                    if cone_dim(sc) == 2 and cone_contains(sc, p):
                        fibs.add(j)
                        break
            if lifted is None:
                continue
            assert len(fibs) >= 1
        if lifted is not None:
            assert validate_plmap(lifted).ok


def test_star_of_zero_cone_is_identity():
    fan = p1xp1_fan()
    z = find_cone(fan, cone_from_generators(2, []))
    star = star_fan(fan, z)
    assert len(star.cones) == len(fan.cones)


def test_star_of_ray_in_p1xp1():
    fan = p1xp1_fan()
    ray = find_cone(fan, cone_from_generators(2, [(1, 0)]))
    star = star_fan(fan, ray)
    # fan of P^1 in Z: two rays and the origin
    dims = sorted(cone_dim(c) for c in star.cones)
    assert dims == [0, 1, 1]
    gens = {c.generators for c in star.cones if cone_dim(c) == 1}
    assert gens == {((1,),), ((-1,),)}


def test_star_of_maximal_cone_is_zero_fan():
    fan = p1xp1_fan()
    top = maximal_cone_ids(fan)[0]
    star = star_fan(fan, top)
    assert all(cone_dim(c) == 0 for c in star.cones)


def test_star_requires_embedding():
    c = cone_from_generators(1, [(1,)])
    k = ConeComplex((c,), ((0, 0, identity_map(Lattice(1))),), None)
    with pytest.raises(EmbeddingRequiredError):
        star_fan(k, 0)


def test_pullback_then_support_roundtrip_random():
    rng = random.Random(29)
    quad = quadrant_complex()
    s = subdivision_from_fans(stellar_quadrant(), quadrant_complex())
    for _ in range(10):
        g1 = (rng.randint(1, 4), rng.randint(0, 4))
        g2 = (rng.randint(0, 4), rng.randint(1, 4))
        src = complex_from_cones(2, [[g1, g2]])
        f = plmap_from_matrix(src, quad, [[1, 0], [0, 1]])
        pb = pullback_subdivision(f, s)
        rep = validate_subdivision(pb)
        assert rep.ok, rep.violations
