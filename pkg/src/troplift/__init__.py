"""troplift: exact tropical-lift, cone-complex, monoid, and scattering computations."""

from .lattice import (
    Lattice,
    LatticeMap,
    IntVector as LatticeVector,
    RationalVector,
    identity_map,
    integrality_sublattice,
    smith_torsion,
)
from .cones import (
    LatticeCone,
    cone_contains,
    cone_dim,
    cone_from_generators,
    cone_from_inequalities,
    dual_cone,
    hilbert_basis,
    image_cone,
    intersect_cones,
    is_pointed,
    zero_cone,
)

__all__ = [
    "Lattice",
    "LatticeMap",
    "LatticeVector",
    "RationalVector",
    "LatticeCone",
    "cone_contains",
    "cone_dim",
    "cone_from_generators",
    "cone_from_inequalities",
    "dual_cone",
    "hilbert_basis",
    "image_cone",
    "intersect_cones",
    "identity_map",
    "integrality_sublattice",
    "is_pointed",
    "smith_torsion",
    "zero_cone",
]
