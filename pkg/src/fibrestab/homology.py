"""Simplicial homology over Z, Q and Z/p, with induced maps of inclusions.

Over Z the engine reduces boundary operators to invariant factors (Smith
machinery from ``exactalg``); over a field it uses rank-nullity with plain
Gaussian elimination.  The two routes are algorithmically unrelated, which
the test-suite exploits: universal coefficients says the field Betti
numbers are determined by the integral answer, so any disagreement exposes
a bug in one of the engines.

Induced maps are computed at chain level with deterministic reduced-echelon
cycle bases (lexicographically smallest pivots), so repeated runs produce
identical matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .complexes import (
    SimplicialComplex,
    SimplicialPair,
    boundary_columns,
)
from .exactalg import (
    AbelianGroup,
    CompositeModulus,
    group_from_presentation,
    invariant_factors_sparse,
    kernel_of_columns,
    rref_rows,
    smith_normal_form,
    IntegerMatrix,
)


class NotConnected(ValueError):
    """Operation requires a connected complex."""


# ---------------------------------------------------------------------------
# coefficient rings
# ---------------------------------------------------------------------------


def parse_ring(ring):
    """Normalize a ring spec to (label, modulus).

    modulus None = integers, 0 = rationals, prime p = Z/p.
    """
    if ring in ("Z", "ℤ", None):
        return "Z", None
    if ring in ("Q", "ℚ"):
        return "Q", 0
    if isinstance(ring, str) and ring.startswith("Z/"):
        try:
            p = int(ring[2:])
        except ValueError:
            raise CompositeModulus(f"cannot parse modulus in {ring!r}") from None
        _require_prime(p)
        return f"Z/{p}", p
    if isinstance(ring, int):
        _require_prime(ring)
        return f"Z/{ring}", ring
    raise ValueError(f"unknown coefficient ring {ring!r}")


def _require_prime(p):
    if p < 2:
        raise CompositeModulus(f"modulus {p} is not prime")
    d = 2
    while d * d <= p:
        if p % d == 0:
            raise CompositeModulus(f"modulus {p} is composite")
        d += 1


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HomologyProfile:
    """Homology groups H_0..H_dim of one complex over one ring."""

    ring: str
    groups: tuple  # AbelianGroup per degree; over a field torsion is empty

    def group(self, k):
        """H_k, with the zero group outside the stored range."""
        if 0 <= k < len(self.groups):
            return self.groups[k]
        return AbelianGroup.trivial()

    @property
    def top_degree(self):
        return len(self.groups) - 1

    def betti(self, k):
        return self.group(k).free_rank

    def to_json_dict(self):
        return {
            "ring": self.ring,
            "groups": [
                {"rank": g.free_rank, "torsion": list(g.torsion)}
                for g in self.groups
            ],
        }

    @classmethod
    def from_json_dict(cls, data):
        return cls(
            data["ring"],
            tuple(
                AbelianGroup(g["rank"], tuple(g["torsion"]))
                for g in data["groups"]
            ),
        )

    def __str__(self):
        return "[" + ", ".join(str(g) for g in self.groups) + "]"


def _factors_of_columns(rows, cols, data):
    """Invariant factors of a sparse boundary operator."""
    if rows == 0 or cols == 0:
        return ()
    if rows * cols <= 3600:
        entries = [0] * (rows * cols)
        for j, col in data.items():
            for i, v in col.items():
                entries[i * cols + j] = v
        return smith_normal_form(IntegerMatrix(rows, cols, tuple(entries))).factors
    triples = [(i, j, v) for j, col in data.items() for i, v in col.items()]
    return invariant_factors_sparse(rows, cols, triples)


def _rank_of_columns_mod(rows, cols, data, p):
    """Field rank of a sparse boundary operator (p = 0 means Q)."""
    if rows == 0 or cols == 0:
        return 0
    row_map = {}
    for j, col in data.items():
        for i, v in col.items():
            if p:
                v %= p
            if v:
                row_map.setdefault(i, {})[j] = v
    from .exactalg import _eliminate

    return len(_eliminate([dict(r) for r in row_map.values()], p))


def _profile_from_boundaries(boundaries, label, modulus):
    """Assemble a profile from a list of (rows, cols, data) per degree.

    ``boundaries[k]`` is del_k; the chain group dimension in degree k is the
    column count of del_k.
    """
    dim = len(boundaries) - 1
    if modulus is None:
        factors = [
            _factors_of_columns(*boundaries[k]) if k >= 1 else ()
            for k in range(dim + 1)
        ]
        groups = []
        for k in range(dim + 1):
            n_k = boundaries[k][1]
            rank_k = len(factors[k]) if k >= 1 else 0
            if k + 1 <= dim:
                up = factors[k + 1]
            else:
                up = ()
            free = n_k - rank_k - len(up)
            torsion = [d for d in up if d > 1]
            groups.append(AbelianGroup.from_cyclic_orders([0] * free + torsion))
        return HomologyProfile(label, tuple(groups))
    ranks = [
        _rank_of_columns_mod(*boundaries[k], modulus) if k >= 1 else 0
        for k in range(dim + 1)
    ]
    groups = []
    for k in range(dim + 1):
        n_k = boundaries[k][1]
        up = ranks[k + 1] if k + 1 <= dim else 0
        groups.append(AbelianGroup(n_k - ranks[k] - up))
    return HomologyProfile(label, tuple(groups))


def homology(complex_: SimplicialComplex, ring="Z") -> HomologyProfile:
    """Homology profile of a complex in degrees 0..dimension.

    The empty complex has an empty profile.  Degree-0 free rank always
    equals the number of connected components, which the tests assert
    against a union-find count.
    """
    label, modulus = parse_ring(ring)
    dim = complex_.dimension
    if dim < 0:
        return HomologyProfile(label, ())
    boundaries = [boundary_columns(complex_, k) for k in range(dim + 1)]
    return _profile_from_boundaries(boundaries, label, modulus)


def relative_boundary_columns(pair: SimplicialPair, k):
    """Boundary operator of the quotient chain complex C(total)/C(sub)."""
    total, sub = pair.total, pair.sub
    top = [s for s in total.simplices(k) if not sub.has_simplex(s)]
    if k == 0:
        return 0, len(top), {}
    low = [s for s in total.simplices(k - 1) if not sub.has_simplex(s)]
    index = {s: i for i, s in enumerate(low)}
    cols = {}
    for j, s in enumerate(top):
        col = {}
        for i in range(len(s)):
            face = s[:i] + s[i + 1 :]
            if face in index:
                col[index[face]] = 1 if i % 2 == 0 else -1
        if col:
            cols[j] = col
    return len(low), len(top), cols


def relative_homology(pair: SimplicialPair, ring="Z") -> HomologyProfile:
    """Homology of the pair (total, sub) via the quotient chain complex."""
    label, modulus = parse_ring(ring)
    dim = pair.total.dimension
    if dim < 0:
        return HomologyProfile(label, ())
    boundaries = [relative_boundary_columns(pair, k) for k in range(dim + 1)]
    return _profile_from_boundaries(boundaries, label, modulus)


def reduced_profile(profile: HomologyProfile) -> HomologyProfile:
    """Reduced homology: one Z stripped from degree 0 of a nonempty complex."""
    if not profile.groups:
        return profile
    g0 = profile.groups[0]
    if g0.free_rank < 1:
        raise ValueError("degree-0 group has no free summand to strip")
    stripped = AbelianGroup.from_cyclic_orders(
        [0] * (g0.free_rank - 1) + list(g0.torsion)
    )
    return HomologyProfile(profile.ring, (stripped,) + profile.groups[1:])


# ---------------------------------------------------------------------------
# connectivity
# ---------------------------------------------------------------------------


def connected_components(complex_: SimplicialComplex) -> int:
    verts = complex_.vertices()
    parent = {v: v for v in verts}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for f in complex_.facets:
        for a, b in zip(f, f[1:]):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
    return len({find(v) for v in verts})


def is_connected(complex_: SimplicialComplex) -> bool:
    return connected_components(complex_) == 1


def pi1_abelianized(complex_: SimplicialComplex) -> AbelianGroup:
    """Abelianized fundamental group of a connected complex (= H_1 over Z)."""
    if not is_connected(complex_):
        raise NotConnected("pi_1 needs a connected complex")
    return homology(complex_, "Z").group(1)


# ---------------------------------------------------------------------------
# homology bases and induced maps over fields
# ---------------------------------------------------------------------------


def _reduce_row(vec, pivots, p, record=None):
    """Eliminate vec (dict) against pivot rows; optionally record coefficients.

    ``pivots`` maps a column index to (row_dict, tag).  When ``record`` is a
    dict, the Fraction/int coefficient applied at each tagged pivot is
    accumulated there.  Returns the reduced vector.
    """
    vec = dict(vec)
    while vec:
        lead = min(vec)
        hit = pivots.get(lead)
        if hit is None:
            break
        row, tag = hit
        if p:
            coeff = (vec[lead] * pow(row[lead], p - 2, p)) % p
            for c, v in row.items():
                nv = (vec.get(c, 0) - coeff * v) % p
                if nv:
                    vec[c] = nv
                else:
                    vec.pop(c, None)
        else:
            coeff = Fraction(vec[lead], row[lead])
            for c, v in row.items():
                nv = vec.get(c, Fraction(0)) - coeff * v
                if nv:
                    vec[c] = nv
                else:
                    vec.pop(c, None)
        if record is not None and tag is not None:
            record[tag] = record.get(tag, 0) + coeff
    return vec


class HomologyBasis:
    """Deterministic cycle-representative basis of H_k(X; field).

    Representatives are reduced-echelon: boundary pivots are eliminated
    first, then surviving kernel rows are kept with lexicographically
    smallest pivots.  ``express`` rewrites any cycle in this basis.
    """

    def __init__(self, boundary_k, boundary_up, p):
        rows_k, n_k, data_k = boundary_k
        self.n_k = n_k
        self.p = p
        cycle_basis = kernel_of_columns(data_k, n_k, p)
        image_rows = []
        if boundary_up is not None:
            _, _, data_up = boundary_up
            image_rows = [dict(col) for col in data_up.values()]
        if p:
            image_rows = [
                {c: v % p for c, v in r.items() if v % p} for r in image_rows
            ]
            image_rows = [r for r in image_rows if r]
        self.pivots = {}
        for pc, row in rref_rows(image_rows, p):
            self.pivots[pc] = (row, None)
        self.reps = []
        for vec in cycle_basis:
            red = _reduce_row(vec, self.pivots, p)
            if not red:
                continue
            red = self._normalize(red)
            tag = len(self.reps)
            self.reps.append(red)
            self.pivots[min(red)] = (red, tag)

    def _normalize(self, vec):
        if self.p:
            lead = min(vec)
            inv = pow(vec[lead], self.p - 2, self.p)
            return {c: (v * inv) % self.p for c, v in vec.items()}
        from math import gcd

        g = 0
        for v in vec.values():
            num = v.numerator if isinstance(v, Fraction) else v
            g = gcd(g, num)
        denoms = [v.denominator for v in vec.values() if isinstance(v, Fraction)]
        from math import lcm

        scale = Fraction(lcm(*denoms) if denoms else 1, g if g else 1)
        out = {c: int(v * scale) for c, v in vec.items()}
        if out[min(out)] < 0:
            out = {c: -v for c, v in out.items()}
        return out

    @property
    def dimension(self):
        return len(self.reps)

    def express(self, vec):
        """Coordinates of the homology class of ``vec`` in this basis."""
        record = {}
        rem = _reduce_row(vec, self.pivots, self.p, record)
        if rem:
            raise ValueError("vector is not a cycle modulo boundaries")
        coords = [record.get(i, 0) for i in range(len(self.reps))]
        if self.p:
            return [c % self.p for c in coords]
        return [Fraction(c) for c in coords]


@dataclass(frozen=True)
class InducedMap:
    """Matrix of H_k(sub) -> H_k(total) in the stored cycle bases.

    ``matrix[i][j]`` is the coefficient of codomain basis vector i in the
    image of domain basis vector j; columns are images of the domain
    representatives re-expressed in the codomain basis.
    """

    degree: int
    ring: str
    matrix: tuple  # rows x cols, Fraction (Q) or int (Z/p)
    domain_reps: tuple  # cycle chains, as {simplex: coeff} dicts
    codomain_reps: tuple

    @property
    def domain_dim(self):
        return len(self.matrix[0]) if self.matrix else len(self.domain_reps)

    @property
    def codomain_dim(self):
        return len(self.matrix)

    def rank(self):
        rows = []
        for r in self.matrix:
            d = {}
            for j, v in enumerate(r):
                if v:
                    d[j] = v if isinstance(v, int) else v
            if d:
                rows.append(d)
        if not rows:
            return 0
        p = 0 if self.ring == "Q" else int(self.ring[2:])
        if p == 0:
            rows = [
                {
                    j: v.numerator * 1
                    if isinstance(v, Fraction) and v.denominator == 1
                    else v
                    for j, v in r.items()
                }
                for r in rows
            ]
            clean = []
            for r in rows:
                from math import lcm

                denoms = [
                    v.denominator for v in r.values() if isinstance(v, Fraction)
                ]
                scale = lcm(*denoms) if denoms else 1
                clean.append({j: int(v * scale) for j, v in r.items()})
            rows = clean
        from .exactalg import _eliminate

        return len(_eliminate(rows, p))


def homology_basis(complex_: SimplicialComplex, k, ring="Q") -> HomologyBasis:
    label, modulus = parse_ring(ring)
    if modulus is None:
        raise ValueError("homology bases are a field-coefficient construction")
    dim = complex_.dimension
    bk = boundary_columns(complex_, k) if 0 <= k <= dim else (0, 0, {})
    bup = boundary_columns(complex_, k + 1) if k + 1 <= dim else None
    return HomologyBasis(bk, bup, modulus)


def induced_map(pair: SimplicialPair, k, ring="Q") -> InducedMap:
    """Map on degree-k homology induced by the inclusion sub -> total."""
    label, modulus = parse_ring(ring)
    if modulus is None:
        raise ValueError("induced maps are computed over a field")
    sub, total = pair.sub, pair.total
    basis_sub = homology_basis(sub, k, label)
    basis_tot = homology_basis(total, k, label)
    sub_simplices = sub.simplices(k)
    tot_index = {s: i for i, s in enumerate(total.simplices(k))}
    cols = []
    for rep in basis_sub.reps:
        pushed = {tot_index[sub_simplices[c]]: v for c, v in rep.items()}
        cols.append(basis_tot.express(pushed))
    matrix = tuple(
        tuple(cols[j][i] for j in range(len(cols)))
        for i in range(basis_tot.dimension)
    )

    def chain(reps, simplices):
        return tuple(
            {simplices[c]: v for c, v in rep.items()} for rep in reps
        )

    return InducedMap(
        degree=k,
        ring=label,
        matrix=matrix,
        domain_reps=chain(basis_sub.reps, sub_simplices),
        codomain_reps=chain(basis_tot.reps, total.simplices(k)),
    )
