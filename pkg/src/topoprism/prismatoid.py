"""Topological prismatoids: validation, width, incidence patterns, layers, shellings."""
from __future__ import annotations

import heapq
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .complex import SimplicialComplex, face, fmt_face, iter_bits, sorted_face
from .exceptions import (
    BaseNotInducedError,
    BasesOverlapError,
    DualDisconnectedError,
    EulerMismatchError,
    InvalidPrismatoidError,
    NotAPermutationError,
    NotManifoldError,
    VertexOutsideBasesError,
    WrongBoundaryCountError,
)

INF = math.inf


def _dec(hist: Counter, key):
    hist[key] -= 1
    if not hist[key]:
        del hist[key]


class WidthLabels:
    """Per-facet (distance to the ``base_plus`` incident facets, shortest path count).

    Distances are BFS distances in the dual graph; facets incident to
    ``base_plus`` sit at distance 0 with count 1. Unreachable facets carry
    ``(inf, 0)``. :meth:`update` repairs the labels after a local change of
    the facet set instead of re-running the BFS.
    """

    def __init__(self, prismatoid: "Prismatoid"):
        self._p = prismatoid
        self.dist: dict[int, float] = {}
        self.count: dict[int, int] = {}
        self.minus_incident: set[int] = set()
        self.minus_hist: Counter = Counter()  # distance -> number of minus-incident facets

    def copy(self, prismatoid: "Prismatoid") -> "WidthLabels":
        new = WidthLabels(prismatoid)
        new.dist = dict(self.dist)
        new.count = dict(self.count)
        new.minus_incident = set(self.minus_incident)
        new.minus_hist = Counter(self.minus_hist)
        return new

    def _adjacent(self, F: int) -> list[int]:
        faces = self._p.complex._faces
        top = self._p.d + 1
        out = []
        for b in iter_bits(F):
            nb = faces[F ^ b]
            if nb.bit_count() == top:
                out.append(nb ^ b)
        return out

    def recompute(self):
        """Full BFS from the facets incident to ``base_plus``."""
        P = self._p
        dist: dict[int, float] = {}
        count: dict[int, int] = {}
        frontier = [F for F in P.complex._facets if P._is_plus_incident(F)]
        for F in frontier:
            dist[F] = 0
            count[F] = 1
        k = 0
        while frontier:
            nxt = []
            for F in frontier:
                c = count[F]
                for G in self._adjacent(F):
                    g = dist.get(G)
                    if g is None:
                        dist[G] = k + 1
                        count[G] = c
                        nxt.append(G)
                    elif g == k + 1:
                        count[G] += c
            frontier = nxt
            k += 1
        for F in P.complex._facets:
            if F not in dist:
                dist[F] = INF
                count[F] = 0
        self.dist, self.count = dist, count
        self.minus_incident = {F for F in P.complex._facets if P._is_minus_incident(F)}
        self.minus_hist = Counter(dist[F] for F in self.minus_incident)

    def update(self, removed: Iterable[int], added: Iterable[int]):
        """Repair labels after ``removed`` facets were replaced by ``added`` ones."""
        P = self._p
        removed, added = list(removed), list(added)
        if not removed and not added:
            return
        dist, count = self.dist, self.count
        adjacent = self._adjacent
        is_source = P._is_plus_incident
        added_set = set(added)
        minus, hist = self.minus_incident, self.minus_hist
        for F in removed:
            if F in minus:
                minus.discard(F)
                _dec(hist, dist[F])
            dist.pop(F, None)
            count.pop(F, None)

        # surviving facets across the boundary of the replaced region
        faces = P.complex._faces
        facets = P.complex._facets
        outer = set()
        for X in removed:
            for b in iter_bits(X):
                nb = faces.get(X ^ b)
                if nb is None:
                    continue
                for y in iter_bits(nb & ~X):
                    G = (X ^ b) | y
                    if G in facets and G not in added_set:
                        outer.add(G)
        for F in added:
            for G in adjacent(F):
                if G not in added_set:
                    outer.add(G)

        # 1. facets that lost every shortest-path parent
        invalid = set()
        heap = [(dist[G], id_, G) for id_, G in enumerate(outer)
                if dist[G] != INF and not is_source(G)]
        heapq.heapify(heap)
        tie = len(heap)
        while heap:
            dg, _, G = heapq.heappop(heap)
            if G in invalid:
                continue
            ok = False
            for H in adjacent(G):
                if H not in invalid and H not in added_set and dist[H] == dg - 1:
                    ok = True
                    break
            if ok:
                continue
            invalid.add(G)
            for H in adjacent(G):
                if H not in added_set and H not in invalid and dist[H] == dg + 1:
                    tie += 1
                    heapq.heappush(heap, (dg + 1, tie, H))

        # 2. distances: Dijkstra-style relaxation from the repaired region
        old = {G: dist[G] for G in invalid}
        pending = invalid | added_set
        for G in pending:
            dist[G] = INF
        heap = []
        for G in pending:
            if is_source(G):
                t = 0
            else:
                t = min((dist[H] for H in adjacent(G)), default=INF) + 1
            if t < dist[G]:
                dist[G] = t
                tie += 1
                heap.append((t, tie, G))
        heapq.heapify(heap)
        touched = set(pending)
        while heap:
            t, _, G = heapq.heappop(heap)
            if t != dist[G]:
                continue
            for H in adjacent(G):
                if t + 1 < dist[H]:
                    if H not in touched:
                        old[H] = dist[H]
                        touched.add(H)
                    dist[H] = t + 1
                    tie += 1
                    heapq.heappush(heap, (t + 1, tie, H))
        changed = {G for G in touched if dist[G] != old.get(G, None)}
        for G in changed:
            if G in minus:
                _dec(hist, old[G])
                hist[dist[G]] += 1
        for F in added:
            if P._is_minus_incident(F):
                minus.add(F)
                hist[dist[F]] += 1

        # 3. path counts, in increasing distance from every seed
        seeds = set(outer) | added_set | changed
        for G in changed:
            seeds.update(adjacent(G))
        heap = []
        for G in seeds:
            if dist[G] == INF:
                count[G] = 0
            else:
                tie += 1
                heap.append((dist[G], tie, G))
        heapq.heapify(heap)
        done = set()
        while heap:
            t, _, G = heapq.heappop(heap)
            if G in done:
                continue
            done.add(G)
            if is_source(G):
                c = 1
            else:
                c = sum(count[H] for H in adjacent(G) if dist[H] == t - 1)
            if c != count.get(G):
                count[G] = c
                for H in adjacent(G):
                    if dist[H] == t + 1 and H not in done:
                        tie += 1
                        heapq.heappush(heap, (t + 1, tie, H))

    def width(self) -> float:
        return min(self.minus_hist, default=INF) + 2

    def as_tokens(self) -> dict[frozenset, tuple[float, int]]:
        C = self._p.complex
        return {C._tokens(F): (self.dist[F], self.count[F]) for F in C._facets}


class Prismatoid:
    """A pure complex with two designated bases and maintained width labels.

    Build validated instances with :func:`validate_prismatoid`; the
    constructor itself trusts its input. The object owns its complex: flips
    mutate it in place, so use :meth:`copy` before handing it to another
    chain.
    """

    def __init__(self, complex: SimplicialComplex, base_plus: Iterable[str],
                 base_minus: Iterable[str]):
        self.complex = complex
        complex._face_map  # noqa: B018 - materialize
        self._plus = complex._mask_of(face(base_plus))
        self._minus = complex._mask_of(face(base_minus))
        self.d = complex.dim + 1
        self.labels = WidthLabels(self)
        self.labels.recompute()
        self._ridges = None   # flips.RidgeNeighborhoodIndex, built on demand
        self._fresh = None    # flips.FreshVertexSource, built on demand

    def copy(self) -> "Prismatoid":
        new = object.__new__(Prismatoid)
        new.complex = self.complex.copy()
        new._plus, new._minus, new.d = self._plus, self._minus, self.d
        new.labels = self.labels.copy(new)
        new._ridges = None if self._ridges is None else self._ridges.copy()
        new._fresh = None if self._fresh is None else self._fresh.copy()
        return new

    # ------------------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.d - 1

    @property
    def base_plus(self) -> frozenset:
        return self.complex._tokens(self._plus)

    @property
    def base_minus(self) -> frozenset:
        return self.complex._tokens(self._minus)

    @property
    def n_vertices(self) -> int:
        return self.complex.n_vertices

    @property
    def n_facets(self) -> int:
        return self.complex.n_facets

    @property
    def facets(self) -> list[frozenset]:
        return self.complex.facets

    def _is_plus_incident(self, F: int) -> bool:
        return (F & self._plus).bit_count() == self.d - 1

    def _is_minus_incident(self, F: int) -> bool:
        return (F & self._minus).bit_count() == self.d - 1

    def base_complex(self, side: str) -> SimplicialComplex:
        """Boundary component on ``side`` ('plus' or 'minus') as a complex."""
        mask = self._side_mask(side)
        C = self.complex
        return SimplicialComplex._from_masks(
            C, [F & mask for F in C._facets if (F & mask).bit_count() == self.d - 1])

    def _side_mask(self, side: str) -> int:
        if side in ("plus", "+", "base_plus"):
            return self._plus
        if side in ("minus", "-", "base_minus"):
            return self._minus
        raise ValueError(f"unknown base {side!r}")

    def width(self) -> float:
        """2 + dual distance between the facets incident to either base."""
        return self.labels.width()

    def is_non_dstep(self) -> bool:
        return self.width() > self.d

    def layer_vector(self) -> tuple[int, ...]:
        return tuple(len(layer) for layer in self.layers())

    def layers(self, side: str = "plus") -> list[list[frozenset]]:
        """Facets grouped by how many vertices they take from ``side``, most first."""
        mask = self._side_mask(side)
        groups: dict[int, list[frozenset]] = {k: [] for k in range(self.d - 1, 0, -1)}
        for F in self.complex._facets:
            groups.setdefault((F & mask).bit_count(), []).append(self.complex._tokens(F))
        return [groups[k] for k in sorted(groups, reverse=True)]

    def excess(self) -> Fraction | float:
        w = self.width()
        if w == INF:
            return INF
        return Fraction(int(w) - self.d, self.n_vertices - self.d)

    def structure(self) -> tuple:
        """Token-level snapshot used for exact structural comparisons."""
        ridges = None if self._ridges is None else self._ridges.as_tokens(self)
        return (self.complex.face_map(), self.base_plus, self.base_minus,
                self.labels.as_tokens(), ridges)

    def __eq__(self, other):
        if not isinstance(other, Prismatoid):
            return NotImplemented
        a, b = self.complex, other.complex
        if a._labels == b._labels:
            return (self._plus, self._minus) == (other._plus, other._minus) and a._face_map == b._face_map
        return (a.face_map() == b.face_map()
                and self.base_plus == other.base_plus
                and self.base_minus == other.base_minus)

    __hash__ = None

    def __repr__(self):
        return (f"Prismatoid(dim={self.dim}, n_vertices={self.n_vertices}, "
                f"n_facets={self.n_facets}, width={self.width()})")


def validate_prismatoid(complex, base_plus: Iterable[str], base_minus: Iterable[str]) -> Prismatoid:
    """Check the computable prismatoid conditions and return the object.

    Checks, in order: disjoint bases covering the used vertices, every ridge
    in one or two facets, both bases induced, exactly two boundary components
    with the base vertex sets, connected dual graph, Euler characteristic of
    the base sphere and, up to dimension 2, vertex links that are paths.
    """
    C = complex if isinstance(complex, SimplicialComplex) else SimplicialComplex(complex)
    plus, minus = face(base_plus), face(base_minus)
    if not C.is_pure:
        raise InvalidPrismatoidError("complex is not pure")
    d = C.dim + 1
    if d < 3:
        raise InvalidPrismatoidError("prismatoids of dimension below 2 are not supported")
    if plus & minus:
        raise BasesOverlapError(f"bases share {sorted(plus & minus)}")
    used = C.vertices
    if used - plus - minus:
        raise VertexOutsideBasesError(f"vertices {sorted(used - plus - minus)} lie in no base")
    if (plus | minus) - used:
        raise VertexOutsideBasesError(f"base vertices {sorted((plus | minus) - used)} are unused")

    ridges = C.check_pseudomanifold()
    boundary_faces: set[int] = set()
    for R, fs in ridges.items():
        if len(fs) == 1:
            sub = R
            while True:
                boundary_faces.add(sub)
                if not sub:
                    break
                sub = (sub - 1) & R
    pm, mm = C._mask_of(plus), C._mask_of(minus)
    for F in C._facets:
        for side in (pm, mm):
            if (F & side) not in boundary_faces:
                raise BaseNotInducedError(
                    f"face {fmt_face(C._tokens(F & side), ' ')} lies in a base "
                    "but is not a boundary face")

    comps = C.boundary_components()
    if len(comps) != 2:
        raise WrongBoundaryCountError(f"{len(comps)} boundary components, expected 2")
    if {c.vertices for c in comps} != {plus, minus}:
        raise WrongBoundaryCountError("boundary components do not match the bases")
    if not C.is_dual_connected():
        raise DualDisconnectedError("dual graph is disconnected")
    chi = C.euler_characteristic()
    expected = 1 + (-1) ** (d - 2)  # that of the base sphere, as for any cylinder over it
    if chi != expected:
        raise EulerMismatchError(f"Euler characteristic {chi}, expected {expected}")
    if d == 3:
        for v in used:
            if not _is_path(C.link(v)):
                raise NotManifoldError(f"link of {v} is not a path")
    return Prismatoid(C, plus, minus)


def _is_path(link: SimplicialComplex) -> bool:
    if link.dim != 1 or not link.is_pure:
        return False
    degree: dict[str, int] = {}
    for e in link.facets:
        for v in e:
            degree[v] = degree.get(v, 0) + 1
    ends = sum(1 for k in degree.values() if k == 1)
    return all(k <= 2 for k in degree.values()) and ends == 2 and link.is_dual_connected()


# ----------------------------------------------------------------------
# incidence patterns
@dataclass
class IncidencePattern:
    """Bipartite digraph of cross edges seen from base-incident facets.

    ``arcs`` holds ``(tail, head)`` token pairs. The reduced pattern is the
    subgraph induced on the nodes with at least one incoming arc.
    """

    plus_nodes: frozenset
    minus_nodes: frozenset
    arcs: frozenset
    reduced_nodes: frozenset
    reduced_arcs: frozenset
    two_cycles: tuple

    def side(self, v: str) -> str:
        return "plus" if v in self.plus_nodes else "minus"

    def arc_lines(self, reduced: bool = True) -> list[str]:
        arcs = self.reduced_arcs if reduced else self.arcs
        return [f"{a} -> {b}" for a, b in sorted(arcs)]


def incidence_pattern(P: Prismatoid) -> IncidencePattern:
    C = P.complex
    arcs = set()
    for F in C._facets:
        fp, fm = F & P._plus, F & P._minus
        from_plus = fp.bit_count() == P.d - 1
        from_minus = fm.bit_count() == P.d - 1
        if not (from_plus or from_minus):
            continue
        ps = C._tokens(fp)
        ms = C._tokens(fm)
        for v in ps:
            for w in ms:
                if from_plus:
                    arcs.add((v, w))
                if from_minus:
                    arcs.add((w, v))
    heads = {b for _, b in arcs}
    reduced = frozenset(heads)
    red_arcs = frozenset((a, b) for a, b in arcs if a in reduced and b in reduced)
    plus = P.base_plus
    cycles = tuple(sorted((a, b) for a, b in red_arcs if a in plus and (b, a) in red_arcs))
    return IncidencePattern(plus, P.base_minus, frozenset(arcs), reduced, red_arcs, cycles)


@dataclass
class Certificate:
    """Outcome of :func:`certify_non_dstep`.

    ``kind`` is ``"pattern"`` (reduced incidence pattern without two-cycles),
    ``"width"`` (width computed and larger than ``d``) or ``"dstep"``.
    """

    kind: str
    width: float
    d: int
    pattern: IncidencePattern

    @property
    def non_dstep(self) -> bool:
        return self.kind != "dstep"

    def summary(self) -> str:
        if self.kind == "pattern":
            return (f"non-d-step: reduced incidence pattern on "
                    f"{len(self.pattern.reduced_nodes)} nodes has no two-cycle")
        if self.kind == "width":
            return f"non-d-step: width {self.width} > d = {self.d}"
        return f"d-step: width {self.width} <= d = {self.d}"


def certify_non_dstep(P: Prismatoid) -> Certificate:
    pattern = incidence_pattern(P)
    w = P.width()
    if not pattern.two_cycles:
        return Certificate("pattern", w, P.d, pattern)
    if w > P.d:
        return Certificate("width", w, P.d, pattern)
    return Certificate("dstep", w, P.d, pattern)


def layer_vector(P: Prismatoid) -> tuple[int, ...]:
    return P.layer_vector()


def excess(P: Prismatoid):
    return P.excess()


# ----------------------------------------------------------------------
# shellings
@dataclass
class ShellingReport:
    order: list
    direction: str
    ridge_counts: list[int] = field(default_factory=list)
    valid: bool = False
    failed_step: int | None = None

    def __bool__(self):
        return self.valid


def _ridge_lookup(masks: Sequence[int]) -> dict[int, list[int]]:
    out: dict[int, list[int]] = {}
    for F in masks:
        for b in iter_bits(F):
            out.setdefault(F ^ b, []).append(F)
    return out


def _step_count(F: int, placed: set[int], placed_list: Sequence[int], start: int,
                ridge_map: dict[int, list[int]], d: int) -> int:
    """Number of ridges of ``F`` in its intersection with the start set and the
    placed facets, or -1 if that intersection is not pure of codimension one."""
    cov = 0
    for b in iter_bits(F):
        R = F ^ b
        if R & ~start == 0 or any(G in placed for G in ridge_map.get(R, ()) if G != F):
            cov |= b
    G = F & start
    if G and (F & ~G) & cov == 0:
        return -1
    for H in placed_list:
        G = F & H
        if G and (F & ~G) & cov == 0:
            return -1
    return cov.bit_count()


def _scan(order: Sequence[int], start: int, d: int, closed: bool) -> ShellingReport:
    ridge_map = _ridge_lookup(order)
    placed: set[int] = set()
    placed_list: list[int] = []
    counts = []
    n = len(order)
    for i, F in enumerate(order):
        if closed and i == 0:
            k = 0
        else:
            k = _step_count(F, placed, placed_list, start, ridge_map, d)
        counts.append(k)
        top = d if (closed and i == n - 1) else d - 1
        low = 0 if (closed and i == 0) else 1
        if not (low <= k <= top):
            return ShellingReport([], "", counts, False, i)
        placed.add(F)
        placed_list.append(F)
    return ShellingReport([], "", counts, True, None)


def check_shelling(P: Prismatoid, order: Iterable[Iterable[str]], direction: str = "plus") -> ShellingReport:
    """Check a prismatoid shelling starting from base ``direction``.

    Step ``i`` intersects the simplex ``F_i`` with the subcomplex induced by
    the start base and by ``F_1 .. F_{i-1}``; the step is fine when that
    intersection is pure of dimension ``d - 2`` with 1 to ``d - 1`` ridges.
    """
    C = P.complex
    order = [face(f) for f in order]
    masks = []
    for f in order:
        m = C._mask(f)
        if m is None or m not in C._facets:
            raise NotAPermutationError(f"{fmt_face(f, ' ')} is not a facet")
        masks.append(m)
    if len(set(masks)) != len(masks) or len(masks) != C.n_facets:
        raise NotAPermutationError("order is not a permutation of the facets")
    start = P._side_mask(direction)
    rep = _scan(masks, start, P.d, closed=False)
    rep.order = order
    rep.direction = "plus" if start == P._plus else "minus"
    return rep


def check_sphere_shelling(S: SimplicialComplex, order: Iterable[Iterable[str]]) -> ShellingReport:
    """Ordinary shelling test for a closed pseudomanifold (last facet may close up)."""
    order = [face(f) for f in order]
    masks = [S._mask(f) for f in order]
    if (None in masks or len(set(masks)) != len(masks) or len(masks) != S.n_facets
            or any(m not in S._facets for m in masks)):
        raise NotAPermutationError("order is not a permutation of the facets")
    rep = _scan(masks, 0, S.dim + 1, closed=True)
    rep.order = order
    rep.direction = "sphere"
    return rep


def find_layer_monotone_shelling(P: Prismatoid, direction: str | None = None,
                                 max_nodes: int = 200_000) -> ShellingReport | None:
    """Depth-first search for a shelling that finishes each layer before the next.

    Layers are visited starting next to the start base. Candidates with the
    most already-covered ridges are tried first. Returns ``None`` when the
    node budget runs out in every tried direction.
    """
    directions = [direction] if direction else ["plus", "minus"]
    budget = [max_nodes]
    for side in directions:
        rep = _layer_search(P, side, budget)
        if rep is not None:
            return rep
    return None


def _layer_search(P: Prismatoid, side: str, budget: list[int]) -> ShellingReport | None:
    C = P.complex
    start = P._side_mask(side)
    d = P.d
    facets = list(C._facets)
    ridge_map = _ridge_lookup(facets)
    groups: dict[int, list[int]] = {}
    for F in facets:
        groups.setdefault((F & start).bit_count(), []).append(F)
    layers = [sorted(groups[k], key=lambda m: sorted_face(C._tokens(m)))
              for k in sorted(groups, reverse=True)]

    placed: set[int] = set()
    placed_list: list[int] = []
    # stack of candidate lists; each entry: (layer index, candidates, position)
    stack: list[list] = []

    def candidates(li: int) -> list[tuple[int, int]]:
        out = []
        for F in layers[li]:
            if F in placed:
                continue
            k = _step_count(F, placed, placed_list, start, ridge_map, d)
            if 1 <= k <= d - 1:
                out.append((-k, F))
        out.sort(key=lambda t: (t[0], sorted_face(C._tokens(t[1]))))
        return out

    def layer_done(li: int) -> bool:
        return all(F in placed for F in layers[li])

    li = 0
    stack.append([li, candidates(li), 0])
    while stack:
        if budget[0] <= 0:
            return None
        top = stack[-1]
        li, cands, pos = top
        if pos >= len(cands):
            stack.pop()
            if placed_list:
                F = placed_list.pop()
                placed.discard(F)
            continue
        top[2] += 1
        F = cands[pos][1]
        budget[0] -= 1
        placed.add(F)
        placed_list.append(F)
        if len(placed_list) == len(facets):
            order = [C._tokens(m) for m in placed_list]
            rep = check_shelling(P, order, side)
            if rep.valid:
                return rep
            placed.discard(placed_list.pop())
            continue
        nli = li + 1 if layer_done(li) else li
        stack.append([nli, candidates(nli), 0])
    return None
