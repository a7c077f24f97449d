"""Abstract simplicial complexes: constructions, boundary operators, catalog.

A complex is stored by its maximal simplices (facets) over vertices
0..vertex_count-1.  Simplices are sorted tuples of vertex indices; the
k-simplices of the complex are ordered lexicographically, and boundary
matrices orient faces by increasing vertex index with the usual (-1)^i
signs, so del o del = 0 holds on the nose.

The ``catalog`` returns version-pinned triangulations of the recurring
spaces (circle, sphere, torus, Klein bottle, Mobius band, projective plane,
3-torus, ...) from JSON data files shipped with the package; the script
``scripts/generate_catalog.py`` rebuilds and re-verifies them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from itertools import combinations

from .exactalg import IntegerMatrix


class DegreeOutOfRange(ValueError):
    """Requested chain degree outside 0..dimension."""


class UnknownVertex(ValueError):
    """Vertex index absent from the complex."""


class UnknownName(KeyError):
    """Catalog lookup for a name that is not shipped."""


class NotASubcomplex(ValueError):
    """Pair construction where `sub` is not contained in `total`."""


@dataclass(frozen=True)
class SimplicialComplex:
    """Finite abstract simplicial complex given by maximal faces.

    ``facets`` is normalized on construction: faces sorted, duplicates and
    non-maximal faces dropped, the whole tuple sorted by (size, lex).
    Vertices not mentioned by any facet simply are not part of the complex
    (``vertex_count`` is the ambient index bound, which lets punctured
    complexes keep their original labels).
    """

    vertex_count: int
    facets: tuple

    def __post_init__(self):
        faces = sorted({tuple(sorted(set(f))) for f in self.facets})
        for f in faces:
            if f and (f[0] < 0 or f[-1] >= self.vertex_count):
                raise UnknownVertex(
                    f"facet {f} out of range for {self.vertex_count} vertices"
                )
            if () == f:
                raise ValueError("empty facet")
        maximal = [
            f
            for f in faces
            if not any(set(f) < set(g) for g in faces if len(g) > len(f))
        ]
        maximal.sort(key=lambda f: (len(f), f))
        object.__setattr__(self, "facets", tuple(maximal))

    # -- basic queries ------------------------------------------------------

    @property
    def dimension(self):
        return max((len(f) - 1 for f in self.facets), default=-1)

    def vertices(self):
        return sorted({v for f in self.facets for v in f})

    def simplices(self, k):
        """All k-simplices, lexicographically sorted."""
        if k < 0:
            return []
        out = set()
        for f in self.facets:
            if len(f) >= k + 1:
                out.update(combinations(f, k + 1))
        return sorted(out)

    def all_simplices(self):
        return [s for k in range(self.dimension + 1) for s in self.simplices(k)]

    def has_simplex(self, simplex):
        s = set(simplex)
        return any(s <= set(f) for f in self.facets)

    def euler_characteristic(self):
        return sum(
            (-1) ** k * len(self.simplices(k)) for k in range(self.dimension + 1)
        )

    def is_subcomplex_of(self, other):
        return all(other.has_simplex(f) for f in self.facets)

    # -- serialization ------------------------------------------------------

    def to_json_dict(self, name="complex"):
        return {
            "name": name,
            "vertex_count": self.vertex_count,
            "facets": [list(f) for f in self.facets],
        }

    @classmethod
    def from_json_dict(cls, data):
        try:
            n = data["vertex_count"]
            facets = data["facets"]
        except (TypeError, KeyError) as exc:
            raise ValueError(f"complex JSON missing field: {exc}") from exc
        if not isinstance(n, int) or not isinstance(facets, list):
            raise ValueError("complex JSON has wrong field types")
        for f in facets:
            if not isinstance(f, list) or not all(isinstance(v, int) for v in f):
                raise ValueError(f"facet {f!r} is not a list of ints")
        return cls(n, tuple(tuple(f) for f in facets))


@dataclass(frozen=True)
class SimplicialPair:
    """A complex together with a subcomplex, for relative homology."""

    total: SimplicialComplex
    sub: SimplicialComplex

    def __post_init__(self):
        if not self.sub.is_subcomplex_of(self.total):
            raise NotASubcomplex("sub is not a subcomplex of total")


# ---------------------------------------------------------------------------
# boundary operators
# ---------------------------------------------------------------------------


def boundary_columns(complex_: SimplicialComplex, k):
    """Sparse boundary data: (rows, cols, {col: {row: sign}}).

    Internal building block shared by the dense matrix and the homology
    engine; rows are (k-1)-simplices, columns k-simplices, both in
    lexicographic order.
    """
    if k < 0 or k > complex_.dimension:
        raise DegreeOutOfRange(
            f"degree {k} outside 0..{complex_.dimension}"
        )
    top = complex_.simplices(k)
    if k == 0:
        return 0, len(top), {}
    low = complex_.simplices(k - 1)
    index = {s: i for i, s in enumerate(low)}
    cols = {}
    for j, s in enumerate(top):
        col = {}
        for i in range(len(s)):
            face = s[:i] + s[i + 1 :]
            col[index[face]] = 1 if i % 2 == 0 else -1
        cols[j] = col
    return len(low), len(top), cols


def boundary_matrix(complex_: SimplicialComplex, k) -> IntegerMatrix:
    """Boundary operator del_k as a dense integer matrix.

    del_0 maps onto the zero module, so k = 0 yields a 0 x (#vertices)
    matrix.  Raises DegreeOutOfRange outside 0..dimension.
    """
    rows, cols, data = boundary_columns(complex_, k)
    entries = [0] * (rows * cols)
    for j, col in data.items():
        for i, v in col.items():
            entries[i * cols + j] = v
    return IntegerMatrix(rows, cols, tuple(entries))


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------


def product(x: SimplicialComplex, y: SimplicialComplex) -> SimplicialComplex:
    """Staircase triangulation of |x| x |y|.

    Vertices are pairs (u, v) indexed as u * y.vertex_count + v.  For each
    facet pair the product cell is cut along monotone staircase chains in
    the grid poset, giving the standard product triangulation: a p-simplex
    times a q-simplex splits into binomial(p+q, p) top cells.
    """
    ny = y.vertex_count

    def chains(sigma, tau):
        """Maximal monotone chains through the grid sigma x tau."""
        end = (len(sigma) - 1, len(tau) - 1)
        out = []

        def walk(a, b, path):
            if (a, b) == end:
                out.append(tuple(sigma[i] * ny + tau[j] for i, j in path))
                return
            if a < end[0]:
                walk(a + 1, b, path + [(a + 1, b)])
            if b < end[1]:
                walk(a, b + 1, path + [(a, b + 1)])

        walk(0, 0, [(0, 0)])
        return out

    facets = []
    for f in x.facets:
        for g in y.facets:
            facets.extend(chains(f, g))
    return SimplicialComplex(x.vertex_count * ny, tuple(facets))


def puncture(x: SimplicialComplex, v) -> SimplicialComplex:
    """Full subcomplex on all vertices except ``v`` (open-star deletion).

    Keeps the ambient vertex numbering so the result is a genuine
    subcomplex of ``x`` and can be fed straight into a SimplicialPair.
    """
    if v not in set(x.vertices()):
        raise UnknownVertex(f"vertex {v} not in complex")
    facets = []
    for f in x.facets:
        if v in f:
            g = tuple(u for u in f if u != v)
            if g:
                facets.append(g)
        else:
            facets.append(f)
    return SimplicialComplex(x.vertex_count, tuple(facets))


def link(x: SimplicialComplex, v) -> SimplicialComplex:
    """Link of a vertex: all faces s with v not in s and s + {v} in x."""
    if v not in set(x.vertices()):
        raise UnknownVertex(f"vertex {v} not in complex")
    facets = [
        tuple(u for u in f if u != v) for f in x.facets if v in f and len(f) > 1
    ]
    if not facets:
        return SimplicialComplex(x.vertex_count, ())
    return SimplicialComplex(x.vertex_count, tuple(facets))


def cone(x: SimplicialComplex) -> SimplicialComplex:
    """Cone over x with apex at index x.vertex_count (always contractible)."""
    apex = x.vertex_count
    if not x.facets:
        return SimplicialComplex(apex + 1, ((apex,),))
    return SimplicialComplex(
        apex + 1, tuple(f + (apex,) for f in x.facets)
    )


def barycentric_subdivision(x: SimplicialComplex) -> SimplicialComplex:
    """First barycentric subdivision.

    New vertices are the simplices of x (indexed by their position in the
    (dimension, lex) ordering); facets are maximal inclusion chains inside
    the facets of x.
    """
    all_faces = sorted(
        {s for f in x.facets for k in range(len(f)) for s in combinations(f, k + 1)},
        key=lambda s: (len(s), s),
    )
    index = {s: i for i, s in enumerate(all_faces)}

    facets = []

    def chains_into(face):
        """Maximal chains of proper subsets ending at ``face``."""
        if len(face) == 1:
            return [[face]]
        out = []
        for sub in combinations(face, len(face) - 1):
            for chain in chains_into(sub):
                out.append(chain + [face])
        return out

    for f in x.facets:
        for chain in chains_into(f):
            facets.append(tuple(index[s] for s in chain))
    return SimplicialComplex(len(all_faces), tuple(facets))


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CatalogEntry:
    """A pinned triangulation plus the manifold bookkeeping the checks need."""

    name: str
    complex: SimplicialComplex
    dimension: int
    closed: bool          # compact manifold without boundary
    orientable: bool | None
    description: str


def _load_catalog():
    out = {}
    root = resources.files("fibrestab").joinpath("data/catalog")
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if not entry.name.endswith(".json"):
            continue
        data = json.loads(entry.read_text())
        cx = SimplicialComplex.from_json_dict(data)
        out[data["name"]] = CatalogEntry(
            name=data["name"],
            complex=cx,
            dimension=cx.dimension,
            closed=data["closed"],
            orientable=data["orientable"],
            description=data.get("description", ""),
        )
    return out


_CATALOG_CACHE = None


def catalog_names():
    global _CATALOG_CACHE
    if _CATALOG_CACHE is None:
        _CATALOG_CACHE = _load_catalog()
    return sorted(_CATALOG_CACHE)


def catalog_entry(name) -> CatalogEntry:
    global _CATALOG_CACHE
    if _CATALOG_CACHE is None:
        _CATALOG_CACHE = _load_catalog()
    try:
        return _CATALOG_CACHE[name]
    except KeyError:
        raise UnknownName(
            f"no catalog space {name!r}; available: {', '.join(sorted(_CATALOG_CACHE))}"
        ) from None


def catalog(name) -> SimplicialComplex:
    """Pinned triangulation of a named space (see ``catalog_names``)."""
    return catalog_entry(name).complex
