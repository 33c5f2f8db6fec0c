"""Exact integer and rational linear algebra.

Matrices are tuples/lists of row tuples over Python ints, rational data uses
fractions.Fraction.  Everything is arbitrary precision; no floating point is
used anywhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Optional, Sequence, Tuple

IntVector = Tuple[int, ...]
RationalVector = Tuple[Fraction, ...]


def vec(v: Iterable) -> tuple:
    return tuple(v)


def vec_add(a: Sequence, b: Sequence) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def vec_sub(a: Sequence, b: Sequence) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


def vec_scale(c, a: Sequence) -> tuple:
    return tuple(c * x for x in a)


def vec_dot(a: Sequence, b: Sequence):
    return sum(x * y for x, y in zip(a, b))


def vec_neg(a: Sequence) -> tuple:
    return tuple(-x for x in a)


def is_zero(a: Sequence) -> bool:
    return all(x == 0 for x in a)


def gcd_list(xs: Iterable[int]) -> int:
    g = 0
    for x in xs:
        g = gcd(g, abs(x))
    return g


def primitive(v: Sequence[int]) -> IntVector:
    """Divide an integer vector by the gcd of its entries; zero stays zero."""
    g = gcd_list(v)
    if g <= 1:
        return tuple(v)
    return tuple(x // g for x in v)


def rational_primitive(v: Sequence[Fraction]) -> IntVector:
    """Scale a rational vector to a primitive integer vector (same ray)."""
    lcm = 1
    for x in v:
        f = Fraction(x)
        lcm = lcm * f.denominator // gcd(lcm, f.denominator)
    return primitive(tuple(int(x * lcm) for x in v))


def xgcd(a: int, b: int) -> Tuple[int, int, int]:
    """Return (g, s, t) with s*a + t*b = g = gcd(a, b), g >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def mat_identity(n: int) -> list:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def mat_mul(a: Sequence[Sequence], b: Sequence[Sequence]) -> list:
    if not a:
        return []
    bt = list(zip(*b)) if b else []
    return [[vec_dot(row, col) for col in bt] for row in a]


def mat_vec(m: Sequence[Sequence], v: Sequence) -> tuple:
    return tuple(vec_dot(row, v) for row in m)


def transpose(m: Sequence[Sequence]) -> list:
    return [list(col) for col in zip(*m)] if m else []


def mat_tuple(m: Sequence[Sequence]) -> Tuple[IntVector, ...]:
    return tuple(tuple(row) for row in m)


def smith_normal_form(a: Sequence[Sequence[int]]):
    """Return (u, s, v) with u*a*v = s in Smith normal form.

    u and v are unimodular, s is diagonal with nonnegative entries forming a
    divisibility chain.  All lists of lists of ints.
    """
    nrows = len(a)
    ncols = len(a[0]) if nrows else 0
    s = [list(r) for r in a]
    u = mat_identity(nrows)
    v = mat_identity(ncols)

    def swap_rows(i, j):
        s[i], s[j] = s[j], s[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in s:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def addmul_row(i, j, c):
        # row_i += c*row_j
        s[i] = [x + c * y for x, y in zip(s[i], s[j])]
        u[i] = [x + c * y for x, y in zip(u[i], u[j])]

    def addmul_col(i, j, c):
        # col_i += c*col_j
        for row in s:
            row[i] += c * row[j]
        for row in v:
            row[i] += c * row[j]

    def combine_rows(i, j, p, q, r, t):
        # (row_i, row_j) <- (p*row_i + q*row_j, r*row_i + t*row_j)
        si, sj = s[i], s[j]
        s[i] = [p * x + q * y for x, y in zip(si, sj)]
        s[j] = [r * x + t * y for x, y in zip(si, sj)]
        ui, uj = u[i], u[j]
        u[i] = [p * x + q * y for x, y in zip(ui, uj)]
        u[j] = [r * x + t * y for x, y in zip(ui, uj)]

    def combine_cols(i, j, p, q, r, t):
        for row in s:
            xi, xj = row[i], row[j]
            row[i] = p * xi + q * xj
            row[j] = r * xi + t * xj
        for row in v:
            xi, xj = row[i], row[j]
            row[i] = p * xi + q * xj
            row[j] = r * xi + t * xj

    k = min(nrows, ncols)
    for t0 in range(k):
        # find a nonzero pivot in the lower-right block
        pivot = None
        best = None
        for i in range(t0, nrows):
            for j in range(t0, ncols):
                if s[i][j] != 0 and (best is None or abs(s[i][j]) < best):
                    best = abs(s[i][j])
                    pivot = (i, j)
        if pivot is None:
            break
        swap_rows(t0, pivot[0])
        swap_cols(t0, pivot[1])
        while True:
            # clear column t0 with Bezout row ops
            for i in range(t0 + 1, nrows):
                if s[i][t0] == 0:
                    continue
                aa, bb = s[t0][t0], s[i][t0]
                if bb % aa == 0:
                    addmul_row(i, t0, -(bb // aa))
                else:
                    g, p, q = xgcd(aa, bb)
                    combine_rows(t0, i, p, q, -(bb // g), aa // g)
            # clear row t0 with Bezout column ops
            dirty = False
            for j in range(t0 + 1, ncols):
                if s[t0][j] == 0:
                    continue
                aa, bb = s[t0][t0], s[t0][j]
                if bb % aa == 0:
                    addmul_col(j, t0, -(bb // aa))
                else:
                    g, p, q = xgcd(aa, bb)
                    combine_cols(t0, j, p, q, -(bb // g), aa // g)
                    dirty = True
            if not dirty and all(s[i][t0] == 0 for i in range(t0 + 1, nrows)):
                break
        if s[t0][t0] < 0:
            s[t0] = [-x for x in s[t0]]
            u[t0] = [-x for x in u[t0]]

    # enforce the divisibility chain
    changed = True
    while changed:
        changed = False
        for i in range(k - 1):
            a0, b0 = s[i][i], s[i + 1][i + 1]
            if a0 != 0 and b0 % a0 != 0:
                addmul_col(i, i + 1, 1)
                g, p, q = xgcd(s[i][i], s[i + 1][i])
                combine_rows(i, i + 1, p, q, -(s[i + 1][i] // g), s[i][i] // g)
                # re-clear the 2x2 block
                if s[i][i + 1] != 0:
                    addmul_col(i + 1, i, -(s[i][i + 1] // s[i][i]))
                if s[i][i] < 0:
                    s[i] = [-x for x in s[i]]
                    u[i] = [-x for x in u[i]]
                if s[i + 1][i + 1] < 0:
                    s[i + 1] = [-x for x in s[i + 1]]
                    u[i + 1] = [-x for x in u[i + 1]]
                changed = True
    return u, s, v


def smith_diagonal(a: Sequence[Sequence[int]]) -> list:
    """Nonzero elementary divisors of an integer matrix, in chain order."""
    _, s, _ = smith_normal_form(a)
    k = min(len(s), len(s[0]) if s else 0)
    return [s[i][i] for i in range(k) if s[i][i] != 0]


def rational_rank(rows: Sequence[Sequence]) -> int:
    m = [[Fraction(x) for x in row] for row in rows]
    rank = 0
    ncols = len(m[0]) if m else 0
    col = 0
    while rank < len(m) and col < ncols:
        pivot = None
        for i in range(rank, len(m)):
            if m[i][col] != 0:
                pivot = i
                break
        if pivot is None:
            col += 1
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        pv = m[rank][col]
        m[rank] = [x / pv for x in m[rank]]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                c = m[i][col]
                m[i] = [x - c * y for x, y in zip(m[i], m[rank])]
        rank += 1
        col += 1
    return rank


def solve_rational(a_rows: Sequence[Sequence], b: Sequence) -> Optional[RationalVector]:
    """One exact solution x of A x = b, or None if inconsistent.

    Free variables are set to zero.
    """
    nrows = len(a_rows)
    ncols = len(a_rows[0]) if nrows else 0
    m = [[Fraction(x) for x in row] + [Fraction(bb)] for row, bb in zip(a_rows, b)]
    pivots = []
    rank = 0
    for col in range(ncols):
        pivot = None
        for i in range(rank, nrows):
            if m[i][col] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        pv = m[rank][col]
        m[rank] = [x / pv for x in m[rank]]
        for i in range(nrows):
            if i != rank and m[i][col] != 0:
                c = m[i][col]
                m[i] = [x - c * y for x, y in zip(m[i], m[rank])]
        pivots.append(col)
        rank += 1
    for i in range(rank, nrows):
        if m[i][ncols] != 0:
            return None
    x = [Fraction(0)] * ncols
    for r, col in enumerate(pivots):
        x[col] = m[r][ncols]
    return tuple(x)


def hnf_rows(rows: Sequence[Sequence[int]]) -> Tuple[IntVector, ...]:
    """Canonical Hermite basis (as rows) of the lattice spanned by the rows.

    Pivots positive, entries above a pivot reduced into [0, pivot).
    """
    work = [list(r) for r in rows if not is_zero(r)]
    if not work:
        return ()
    ncols = len(work[0])
    basis = []
    col = 0
    while work and col < ncols:
        work = [r for r in work if not is_zero(r)]
        cand = [r for r in work if r[col] != 0]
        if not cand:
            col += 1
            continue
        # combine all rows with a nonzero entry in this column into one pivot row
        pivot_row = cand[0]
        for r in cand[1:]:
            a0, b0 = pivot_row[col], r[col]
            g, p, q = xgcd(a0, b0)
            new_pivot = [p * x + q * y for x, y in zip(pivot_row, r)]
            rest = [(a0 // g) * y - (b0 // g) * x for x, y in zip(pivot_row, r)]
            pivot_row = new_pivot
            r[:] = rest
        if pivot_row[col] < 0:
            pivot_row = [-x for x in pivot_row]
        work = [r for r in work if not is_zero(r) and r is not pivot_row]
        # clear this column from the remaining rows
        for r in work:
            if r[col] != 0:
                c = r[col] // pivot_row[col]
                r[:] = [x - c * y for x, y in zip(r, pivot_row)]
        basis.append(pivot_row)
        work = [r for r in work if not is_zero(r)]
        col += 1
    # reduce entries above each pivot
    for i in range(len(basis) - 1, -1, -1):
        pcol = next(j for j, x in enumerate(basis[i]) if x != 0)
        for k2 in range(i):
            c = basis[k2][pcol] // basis[i][pcol]
            if c:
                basis[k2] = [x - c * y for x, y in zip(basis[k2], basis[i])]
    return tuple(tuple(r) for r in basis)


def kernel_basis(a_rows: Sequence[Sequence[int]], ncols: Optional[int] = None) -> Tuple[IntVector, ...]:
    """Canonical basis (rows) of the saturated integer kernel of x -> A x."""
    if not a_rows:
        if ncols is None:
            raise ValueError("ncols required for an empty row list")
        return hnf_rows(mat_identity(ncols))
    n = len(a_rows[0])
    _, s, v = smith_normal_form(a_rows)
    k = min(len(s), n)
    zero_cols = [j for j in range(n) if j >= k or s[j][j] == 0]
    cols = [[v[i][j] for i in range(n)] for j in zero_cols]
    return hnf_rows(cols)


def saturate_span(rows: Sequence[Sequence[int]], n: int) -> Tuple[IntVector, ...]:
    """Saturated lattice basis (HNF rows) of the rational span of the rows."""
    rows = [r for r in rows if not is_zero(r)]
    if not rows:
        return ()
    ann = kernel_basis(rows, n)
    if not ann:
        return hnf_rows(mat_identity(n))
    return kernel_basis(ann, n)


def invert_unimodular(u: Sequence[Sequence[int]]) -> list:
    """Exact inverse of a unimodular integer matrix, as integer lists."""
    n = len(u)
    m = [[Fraction(x) for x in row] + [Fraction(1 if i == j else 0) for j in range(n)]
         for i, row in enumerate(u)]
    for col in range(n):
        pivot = next(i for i in range(col, n) if m[i][col] != 0)
        m[col], m[pivot] = m[pivot], m[col]
        pv = m[col][col]
        m[col] = [x / pv for x in m[col]]
        for i in range(n):
            if i != col and m[i][col] != 0:
                c = m[i][col]
                m[i] = [x - c * y for x, y in zip(m[i], m[col])]
    inv = [[m[i][n + j] for j in range(n)] for i in range(n)]
    assert all(x.denominator == 1 for row in inv for x in row), "matrix not unimodular"
    return [[int(x) for x in row] for row in inv]


def lattice_complement(basis_rows: Sequence[Sequence[int]], n: int):
    """Projection and section for a saturated sublattice L of Z^n.

    Returns (proj, section): proj is an (n-d) x n matrix with kernel exactly
    the rational span of L and proj surjective onto Z^(n-d); section is an
    n x (n-d) right inverse of proj.
    """
    d = len(basis_rows)
    if d == 0:
        return mat_identity(n), mat_identity(n)
    m_cols = [[basis_rows[j][i] for j in range(d)] for i in range(n)]  # n x d
    u, s, _ = smith_normal_form(m_cols)
    for i in range(d):
        assert abs(s[i][i]) == 1, "sublattice basis not saturated"
    uinv = invert_unimodular(u)
    proj = [u[i] for i in range(d, n)]
    section = [[uinv[i][j] for j in range(d, n)] for i in range(n)]
    return proj, section


def coords_in_basis(basis_rows: Sequence[Sequence[int]], v: Sequence) -> Optional[RationalVector]:
    """Coordinates of v in the given (row) basis, or None if outside the span."""
    if not basis_rows:
        return () if all(Fraction(x) == 0 for x in v) else None
    cols = transpose(basis_rows)
    sol = solve_rational(cols, v)
    if sol is None:
        return None
    back = mat_vec(cols, sol)
    if any(Fraction(x) != Fraction(y) for x, y in zip(back, v)):
        return None
    return sol


@dataclass(frozen=True)
class Lattice:
    """A free abelian group Z^rank; vectors are integer tuples of that length."""

    rank: int

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError("lattice rank must be nonnegative")


@dataclass(frozen=True)
class LatticeMap:
    """An integer-linear map between lattices, matrix acting on column vectors."""

    matrix: Tuple[IntVector, ...]
    source: Lattice
    target: Lattice

    def __post_init__(self):
        if len(self.matrix) != self.target.rank:
            raise ValueError("matrix row count must equal target rank")
        for row in self.matrix:
            if len(row) != self.source.rank:
                raise ValueError("matrix column count must equal source rank")

    def __call__(self, v: Sequence) -> tuple:
        return mat_vec(self.matrix, v)

    def compose(self, other: "LatticeMap") -> "LatticeMap":
        """self after other."""
        if other.target != self.source:
            raise ValueError("composition rank mismatch")
        return LatticeMap(mat_tuple(mat_mul(self.matrix, other.matrix)),
                          other.source, self.target)


def identity_map(lattice: Lattice) -> LatticeMap:
    return LatticeMap(mat_tuple(mat_identity(lattice.rank)), lattice, lattice)


def smith_torsion(m: LatticeMap) -> Tuple[int, int]:
    """Order of the torsion of coker(m) and the rank of its free part."""
    if m.source.rank == 0 or m.target.rank == 0:
        return 1, m.target.rank
    divisors = smith_diagonal(m.matrix)
    torsion = 1
    for d in divisors:
        torsion *= d
    return torsion, m.target.rank - len(divisors)


def integral_sublattice(rank: int, functionals: Sequence[Sequence]) -> Tuple[Tuple[IntVector, ...], int]:
    """Maximal sublattice of Z^rank on which all rational functionals are integral.

    Returns (basis rows in HNF, index).
    """
    rows = []
    modulus = 1
    for f in functionals:
        fr = [Fraction(x) for x in f]
        den = 1
        for x in fr:
            den = den * x.denominator // gcd(den, x.denominator)
        rows.append(([int(x * den) for x in fr], den))
        modulus = modulus * den // gcd(modulus, den)
    if modulus == 1 or not rows:
        return mat_tuple(mat_identity(rank)), 1
    h = [[x * (modulus // den) for x in row] for row, den in rows]
    _, s, v = smith_normal_form(h)
    k = min(len(h), rank)
    mults = []
    for j in range(rank):
        sj = s[j][j] if j < k else 0
        mults.append(modulus // gcd(sj, modulus) if sj != 0 else 1)
    basis_cols = [[v[i][j] * mults[j] for i in range(rank)] for j in range(rank)]
    index = 1
    for t in mults:
        index *= t
    return hnf_rows(basis_cols), index


def integrality_sublattice(base, functions: Sequence[Sequence]) -> Tuple[Tuple[IntVector, ...], int]:
    """Spec-facing wrapper: accept a cone, a Lattice, or a plain rank."""
    if hasattr(base, "lattice"):
        rank = base.lattice.rank
    elif hasattr(base, "rank"):
        rank = base.rank
    else:
        rank = int(base)
    return integral_sublattice(rank, functions)
