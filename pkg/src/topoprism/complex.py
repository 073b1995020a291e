"""Pure simplicial complexes stored as a face -> neighborhood map.

Vertices are string tokens. Internally every token owns one bit of a Python
integer, so a face is an ``int`` bitmask and the face map is a
``dict[int, int]`` from face to the vertex set of its star. The public API
speaks tokens (``frozenset[str]``); the masks never leak out.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from typing import Iterable, Iterator, Mapping

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .exceptions import (
    EmptyComplexError,
    LabelClashError,
    MixedDimensionError,
    NonBijectiveError,
    NotAFaceError,
    NotAFacetError,
    NotAVertexError,
    NotPseudomanifoldError,
    UnknownFacetError,
    VertexClashError,
    ComplexError,
)

Face = frozenset  # frozenset[str]

_FORBIDDEN = set(" \t\r\n,#=")


def check_token(token) -> str:
    if not isinstance(token, str) or not token or _FORBIDDEN.intersection(token):
        raise ComplexError(f"invalid vertex token {token!r}")
    return token


def face(vertices: Iterable[str]) -> frozenset:
    """Normalize an iterable of tokens (or a single token string) to a face."""
    if isinstance(vertices, str):
        vertices = (vertices,)
    return frozenset(check_token(v) for v in vertices)


def sorted_face(f: Iterable[str]) -> tuple:
    return tuple(sorted(f))


def fmt_face(f: Iterable[str], sep: str = "") -> str:
    return sep.join(sorted(f))


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low
        mask ^= low


def submasks(mask: int) -> Iterator[int]:
    """All submasks of ``mask``, from ``mask`` itself down to 0."""
    sub = mask
    while True:
        yield sub
        if not sub:
            return
        sub = (sub - 1) & mask


class SimplicialComplex:
    """A simplicial complex given by its maximal faces.

    Parameters
    ----------
    facets : iterable of iterables of str
        Maximal faces. Duplicates are merged. Faces contained in another
        listed face are dropped when ``pure=False``; with ``pure=True`` (the
        default) all facets must have the same size.
    ground_set : iterable of str, optional
        Extra, possibly unused, vertex labels.
    pure : bool
        Enforce purity (raise :class:`MixedDimensionError` otherwise).
    """

    def __init__(self, facets: Iterable[Iterable[str]], ground_set: Iterable[str] = (),
                 *, pure: bool = True):
        facet_list = [face(f) for f in facets]
        if not facet_list:
            raise EmptyComplexError("a complex needs at least one facet")
        tokens = set(face(ground_set))
        for f in facet_list:
            tokens |= f
        self._labels: list[str] = sorted(tokens)
        self._bit: dict[str, int] = {t: 1 << i for i, t in enumerate(self._labels)}
        masks = list(dict.fromkeys(self._mask_of(f) for f in facet_list))
        sizes = {m.bit_count() for m in masks}
        if pure and len(sizes) > 1:
            raise MixedDimensionError(f"facet sizes differ: {sorted(sizes)}")
        if not pure and len(sizes) > 1:
            masks = _maximal(masks)
        self.dim = max(sizes) - 1
        self._facets: dict[int, None] = dict.fromkeys(masks)
        self._faces: dict[int, int] | None = None

    # ------------------------------------------------------------------
    # construction helpers
    @classmethod
    def _from_masks(cls, template: "SimplicialComplex", masks: Iterable[int],
                    pure: bool = True) -> "SimplicialComplex":
        """Build from masks expressed in ``template``'s vertex table."""
        return cls([template._tokens(m) for m in masks], pure=pure)

    def copy(self) -> "SimplicialComplex":
        new = object.__new__(SimplicialComplex)
        new._labels = list(self._labels)
        new._bit = dict(self._bit)
        new.dim = self.dim
        new._facets = dict(self._facets)
        new._faces = None if self._faces is None else dict(self._faces)
        return new

    def _mask_of(self, f: Iterable[str]) -> int:
        m = 0
        bit = self._bit
        for v in f:
            m |= bit[v]
        return m

    def _mask(self, f: Iterable[str]) -> int | None:
        """Mask of ``f`` or ``None`` if it uses tokens outside the ground set."""
        try:
            return self._mask_of(face(f))
        except KeyError:
            return None

    def _tokens(self, mask: int) -> frozenset:
        labels = self._labels
        return frozenset([labels[b.bit_length() - 1] for b in iter_bits(mask)])

    def _register(self, token: str) -> int:
        """Bit of ``token``, adding it to the ground set if needed."""
        b = self._bit.get(token)
        if b is None:
            check_token(token)
            b = 1 << len(self._labels)
            self._labels.append(token)
            self._bit[token] = b
        return b

    @property
    def _face_map(self) -> dict[int, int]:
        if self._faces is None:
            faces: dict[int, int] = {}
            get = faces.get
            for F in self._facets:
                sub = F
                while True:
                    faces[sub] = get(sub, 0) | F
                    if not sub:
                        break
                    sub = (sub - 1) & F
            self._faces = faces
        return self._faces

    # ------------------------------------------------------------------
    # basic queries
    @property
    def facets(self) -> list[frozenset]:
        return [self._tokens(F) for F in self._facets]

    def sorted_facets(self) -> list[tuple]:
        return sorted(sorted_face(f) for f in self.facets)

    @property
    def n_facets(self) -> int:
        return len(self._facets)

    @property
    def _used(self) -> int:
        if self._faces is not None:
            return self._faces.get(0, 0)
        m = 0
        for F in self._facets:
            m |= F
        return m

    @property
    def vertices(self) -> frozenset:
        return self._tokens(self._used)

    @property
    def n_vertices(self) -> int:
        return self._used.bit_count()

    @property
    def ground_set(self) -> frozenset:
        return frozenset(self._labels)

    @property
    def is_pure(self) -> bool:
        return len({F.bit_count() for F in self._facets}) == 1

    def __contains__(self, f) -> bool:
        m = self._mask(f)
        return m is not None and m in self._face_map

    def is_face(self, f) -> bool:
        return f in self

    def is_facet(self, f) -> bool:
        m = self._mask(f)
        return m is not None and m in self._facets

    def neighborhood(self, f) -> frozenset | None:
        """Vertex set of the star of ``f``; ``None`` when ``f`` is not a face."""
        m = self._mask(f)
        if m is None:
            return None
        nb = self._face_map.get(m)
        return None if nb is None else self._tokens(nb)

    def face_map(self) -> dict[frozenset, frozenset]:
        """The full face -> neighborhood map in token form."""
        return {self._tokens(G): self._tokens(nb) for G, nb in self._face_map.items()}

    def faces(self, size: int | None = None) -> list[frozenset]:
        return [self._tokens(G) for G in self._face_map
                if size is None or G.bit_count() == size]

    def hasse_neighbors(self, f) -> tuple[list[frozenset], list[frozenset]]:
        """Maximal proper subfaces and minimal proper superfaces of ``f``."""
        m = self._mask(f)
        faces = self._face_map
        if m is None or m not in faces:
            raise NotAFaceError(f"{fmt_face(face(f), ' ')!s} is not a face")
        subs = [self._tokens(m ^ b) for b in iter_bits(m)]
        sups = [self._tokens(m | b) for b in iter_bits(faces[m] & ~m) if (m | b) in faces]
        return subs, sups

    def f_vector(self) -> tuple[int, ...]:
        counts = [0] * (self.dim + 1)
        for G in self._face_map:
            k = G.bit_count()
            if k:
                counts[k - 1] += 1
        return tuple(counts)

    def euler_characteristic(self) -> int:
        return sum((-1) ** i * c for i, c in enumerate(self.f_vector()))

    # ------------------------------------------------------------------
    # subcomplexes
    def _require_face(self, f) -> int:
        m = self._mask(f)
        if m is None or m not in self._face_map:
            raise NotAFaceError(f"{{{', '.join(sorted(face(f)))}}} is not a face")
        return m

    def star(self, f) -> "SimplicialComplex":
        m = self._require_face(f)
        return SimplicialComplex._from_masks(self, [F for F in self._facets if F & m == m])

    def link(self, f) -> "SimplicialComplex":
        m = self._require_face(f)
        return SimplicialComplex._from_masks(
            self, [F & ~m for F in self._facets if F & m == m], pure=False)

    def deletion(self, f) -> "SimplicialComplex":
        m = self._require_face(f)
        return self._restricted(~m)

    def induced(self, vertices: Iterable[str]) -> "SimplicialComplex":
        w = 0
        for v in face(vertices):
            w |= self._bit.get(v, 0)
        return self._restricted(w)

    def _restricted(self, keep: int) -> "SimplicialComplex":
        return SimplicialComplex._from_masks(
            self, _maximal({F & keep for F in self._facets}), pure=False)

    # ------------------------------------------------------------------
    # ridges, boundary, dual graph
    def _ridge_facets(self) -> dict[int, list[int]]:
        ridges: dict[int, list[int]] = {}
        for F in self._facets:
            for b in iter_bits(F):
                ridges.setdefault(F ^ b, []).append(F)
        return ridges

    def check_pseudomanifold(self) -> dict[int, list[int]]:
        """Raise unless every ridge lies in one or two facets."""
        self._require_pure()
        ridges = self._ridge_facets()
        for R, fs in ridges.items():
            if len(fs) > 2:
                raise NotPseudomanifoldError(
                    f"ridge {fmt_face(self._tokens(R), ' ')} lies in {len(fs)} facets")
        return ridges

    def is_closed_pseudomanifold(self) -> bool:
        self._require_pure()
        return all(len(fs) == 2 for fs in self._ridge_facets().values())

    def _boundary_ridges(self) -> list[int]:
        return [R for R, fs in self.check_pseudomanifold().items() if len(fs) == 1]

    def boundary(self) -> "SimplicialComplex | None":
        ridges = self._boundary_ridges()
        if not ridges:
            return None
        return SimplicialComplex._from_masks(self, ridges)

    def boundary_components(self) -> list["SimplicialComplex"]:
        """Connected components of the boundary, largest vertex set last."""
        ridges = self._boundary_ridges()
        comps = [SimplicialComplex._from_masks(self, part)
                 for part in _ridge_components(ridges)]
        return sorted(comps, key=lambda c: (c.n_vertices, sorted(c.vertices)))

    def _require_pure(self):
        if not self.is_pure:
            raise MixedDimensionError("operation needs a pure complex")

    def _dual_adjacency(self) -> dict[int, list[int]]:
        self._require_pure()
        adj: dict[int, list[int]] = {F: [] for F in self._facets}
        for fs in self._ridge_facets().values():
            if len(fs) >= 2:
                for a, b in itertools.combinations(fs, 2):
                    adj[a].append(b)
                    adj[b].append(a)
        return adj

    def dual_graph(self) -> dict[frozenset, set[frozenset]]:
        """Facet adjacency through shared ridges, in token form."""
        return {self._tokens(F): {self._tokens(G) for G in nbrs}
                for F, nbrs in self._dual_adjacency().items()}

    def _facet_masks(self, facets: Iterable[Iterable[str]]) -> set[int]:
        out = set()
        for f in facets:
            m = self._mask(f)
            if m is None or m not in self._facets:
                raise UnknownFacetError(f"{fmt_face(face(f), ' ')} is not a facet")
            out.add(m)
        if not out:
            raise UnknownFacetError("empty facet set")
        return out

    def dual_distance(self, source: Iterable[Iterable[str]],
                      target: Iterable[Iterable[str]]) -> float:
        """Set-to-set BFS distance in the dual graph (``math.inf`` if unreachable)."""
        src = self._facet_masks(source)
        dst = self._facet_masks(target)
        return _bfs_distance(self._dual_adjacency(), src, dst)

    def dual_diameter(self) -> float:
        """Largest pairwise dual distance, ``math.inf`` for a disconnected dual graph."""
        adj = self._dual_adjacency()
        index = {F: i for i, F in enumerate(adj)}
        rows, cols = [], []
        for F, nbrs in adj.items():
            for G in nbrs:
                rows.append(index[F])
                cols.append(index[G])
        n = len(index)
        graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        dist = shortest_path(graph, directed=False, unweighted=True)
        top = dist.max()
        return math.inf if np.isinf(top) else int(top)

    def is_dual_connected(self) -> bool:
        adj = self._dual_adjacency()
        start = next(iter(adj))
        seen = {start}
        queue = deque([start])
        while queue:
            for G in adj[queue.popleft()]:
                if G not in seen:
                    seen.add(G)
                    queue.append(G)
        return len(seen) == len(adj)

    # ------------------------------------------------------------------
    def relabel(self, mapping: Mapping[str, str]) -> "SimplicialComplex":
        new = [{mapping.get(v, v) for v in f} for f in self.facets]
        if any(len(a) != len(b) for a, b in zip(new, self.facets)):
            raise LabelClashError("relabeling merges vertices of a facet")
        return SimplicialComplex(new, pure=self.is_pure)

    def __eq__(self, other):
        if not isinstance(other, SimplicialComplex):
            return NotImplemented
        return set(self.facets) == set(other.facets)

    __hash__ = None

    def __repr__(self):
        return (f"SimplicialComplex(dim={self.dim}, n_vertices={self.n_vertices}, "
                f"n_facets={self.n_facets})")

    # ------------------------------------------------------------------
    # in-place bistellar replacement, used by the flip machinery
    def _bistellar(self, support: int, f: int, l: int) -> tuple[list[int], list[int]]:
        """Replace the star of ``f`` by ``l * boundary(f)`` inside ``support``.

        Removes every face containing ``f``, inserts every subset of
        ``support`` that contains ``l`` but not ``f`` and refreshes the
        neighborhoods of all faces inside ``support``. Returns the removed
        and inserted facets.
        """
        faces = self._face_map
        facets = self._facets
        old_nb = {}
        for G in submasks(support):
            nb = faces.get(G)
            if nb is not None:
                old_nb[G] = nb

        removed = [support ^ b for b in iter_bits(support & ~f) if (support ^ b) in facets]
        for G in submasks(support & ~f):
            faces.pop(G | f, None)
        for F in removed:
            del facets[F]

        added = [support ^ b for b in iter_bits(f)]
        rest = support & ~l
        for G in submasks(rest):
            if G & f != f:
                faces.setdefault(G | l, 0)
        for F in added:
            facets[F] = None

        # stars only change inside the support, so only support vertices can
        # enter or leave the neighborhood of a face inside it
        sbits = list(iter_bits(support))
        keep = ~support
        for G in submasks(support):
            if G not in faces:
                continue
            nb = (old_nb.get(G, 0) & keep) | G
            for x in sbits:
                if not x & G and (G | x) in faces:
                    nb |= x
            faces[G] = nb
        return removed, added


# ----------------------------------------------------------------------
def build_complex(facets: Iterable[Iterable[str]], ground_set: Iterable[str] = ()) -> SimplicialComplex:
    """Pure complex from its facet list (downward closure is materialized)."""
    C = SimplicialComplex(facets, ground_set)
    C._face_map  # noqa: B018 - materialize
    return C


def face_neighborhood(C: SimplicialComplex, f) -> frozenset | None:
    return C.neighborhood(f)


def subcomplex(C: SimplicialComplex, mode: str, arg) -> SimplicialComplex:
    ops = {"star": C.star, "link": C.link, "deletion": C.deletion, "induced": C.induced}
    try:
        return ops[mode](arg)
    except KeyError:
        if mode not in ops:
            raise ValueError(f"unknown subcomplex mode {mode!r}") from None
        raise


def simplex_boundary(vertices: Iterable[str]) -> SimplicialComplex:
    vs = sorted(face(vertices))
    return SimplicialComplex(itertools.combinations(vs, len(vs) - 1))


def join(C1: SimplicialComplex, C2: SimplicialComplex) -> SimplicialComplex:
    """Join of two complexes on disjoint vertex sets."""
    clash = C1.vertices & C2.vertices
    if clash:
        raise VertexClashError(f"shared vertices {sorted(clash)}")
    return SimplicialComplex([a | b for a in C1.facets for b in C2.facets],
                             pure=C1.is_pure and C2.is_pure)


def _fresh_pair(C: SimplicialComplex, labels) -> tuple[str, str]:
    if labels is None:
        labels = []
        i = 0
        while len(labels) < 2:
            t = f"_w{i}"
            if t not in C.ground_set:
                labels.append(t)
            i += 1
    w1, w2 = (check_token(t) for t in labels)
    if w1 == w2 or {w1, w2} & C.vertices:
        raise LabelClashError(f"suspension labels {w1!r}, {w2!r} clash")
    return w1, w2


def suspension(C: SimplicialComplex, labels: tuple[str, str] | None = None) -> SimplicialComplex:
    w1, w2 = _fresh_pair(C, labels)
    return join(C, SimplicialComplex([[w1], [w2]]))


def one_point_suspension(C: SimplicialComplex, w: str,
                         labels: tuple[str, str] | None = None) -> SimplicialComplex:
    """Suspension at ``w`` with the stars of ``w w1`` and ``w w2`` merged.

    Facets containing ``w`` become ``(F - w) + {w1, w2}``; every other facet
    ``F`` yields ``F + w1`` and ``F + w2``.
    """
    if w not in C.vertices:
        raise NotAVertexError(f"{w!r} is not a vertex")
    w1, w2 = _fresh_pair(C, labels)
    out = []
    for F in C.facets:
        if w in F:
            out.append((F - {w}) | {w1, w2})
        else:
            out.append(F | {w1})
            out.append(F | {w2})
    return SimplicialComplex(out, pure=C.is_pure)


def connected_sum(S1: SimplicialComplex, S2: SimplicialComplex, F1, F2,
                  phi: Mapping[str, str]) -> SimplicialComplex:
    """Glue ``S1 - F1`` and ``S2 - F2`` identifying ``v`` with ``phi[v]``.

    The glued vertices keep their ``S1`` names.
    """
    if S1.dim != S2.dim or not (S1.is_pure and S2.is_pure):
        raise MixedDimensionError("connected sum needs pure complexes of equal dimension")
    F1, F2 = face(F1), face(F2)
    if not S1.is_facet(F1):
        raise NotAFacetError(f"{fmt_face(F1, ' ')} is not a facet of the first complex")
    if not S2.is_facet(F2):
        raise NotAFacetError(f"{fmt_face(F2, ' ')} is not a facet of the second complex")
    if set(phi) != set(F1) or set(phi.values()) != set(F2):
        raise NonBijectiveError("gluing map must be a bijection between the two facets")
    clash = S1.vertices & S2.vertices
    if clash:
        raise VertexClashError(f"shared vertices {sorted(clash)}")
    back = {w: v for v, w in phi.items()}
    facets = [F for F in S1.facets if F != F1]
    facets += [frozenset(back.get(x, x) for x in F) for F in S2.facets if F != F2]
    return SimplicialComplex(facets)


# ----------------------------------------------------------------------
def _maximal(masks: Iterable[int]) -> list[int]:
    ordered = sorted(set(masks), key=int.bit_count, reverse=True)
    keep: list[int] = []
    for m in ordered:
        if not any(m & k == m for k in keep):
            keep.append(m)
    return keep


def _ridge_components(ridges: list[int]) -> list[list[int]]:
    """Group boundary ridges into components connected through codimension-one faces."""
    parent = {R: R for R in ridges}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    by_sub: dict[int, int] = {}
    for R in ridges:
        if R.bit_count() < 2:  # isolated points are separate components
            continue
        for b in iter_bits(R):
            other = by_sub.setdefault(R ^ b, R)
            if other != R:
                parent[find(R)] = find(other)
    groups: dict[int, list[int]] = {}
    for R in ridges:
        groups.setdefault(find(R), []).append(R)
    return list(groups.values())


def _bfs_distance(adj: Mapping[int, Iterable[int]], src: set[int], dst: set[int]) -> float:
    if src & dst:
        return 0
    dist = dict.fromkeys(src, 0)
    queue = deque(src)
    while queue:
        F = queue.popleft()
        k = dist[F] + 1
        for G in adj[F]:
            if G not in dist:
                if G in dst:
                    return k
                dist[G] = k
                queue.append(G)
    return math.inf
