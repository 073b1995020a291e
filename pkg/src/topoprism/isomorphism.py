"""Combinatorial isomorphism of simplicial complexes by refined-invariant backtracking."""
from __future__ import annotations

from typing import Sequence

from .complex import SimplicialComplex, iter_bits
from .prismatoid import Prismatoid


def _refine(complexes: Sequence[SimplicialComplex], colors: Sequence[dict[int, int]]) -> list[dict[int, int]]:
    """Colour refinement on the vertex-facet incidence structure, shared across inputs.

    Signatures are translated to small integers through one table for all
    complexes, so equal colours mean equal invariants across complexes.
    """
    facets = [list(C._facets) for C in complexes]
    n_classes = -1
    while True:
        table: dict = {}
        new = []
        for C, fs, col in zip(complexes, facets, colors):
            by_vertex: dict[int, list] = {b: [] for b in col}
            for F in fs:
                members = list(iter_bits(F))
                shape = sorted(col[b] for b in members)
                for b in members:
                    rest = list(shape)
                    rest.remove(col[b])
                    by_vertex[b].append(tuple(rest))
            sig = {b: (col[b], tuple(sorted(by_vertex[b]))) for b in col}
            new.append(sig)
        for sig in new:
            for s in sorted(set(sig.values())):
                table.setdefault(s, len(table))
        colors = [{b: table[s] for b, s in sig.items()} for sig in new]
        count = len(table)
        if count == n_classes:
            return colors
        n_classes = count


def _initial_colors(C: SimplicialComplex, parts: Sequence[frozenset] | None) -> dict[int, tuple]:
    faces = C._face_map
    out = {}
    for b in iter_bits(C._used):
        part = -1
        if parts is not None:
            (tok,) = C._tokens(b)
            part = next((i for i, p in enumerate(parts) if tok in p), -1)
        degree = sum(1 for F in C._facets if F & b)
        nb_sizes = tuple(sorted(faces[x].bit_count() for x in iter_bits(faces[b] & ~b)))
        out[b] = (part, degree, nb_sizes)
    return out


def _search(C1: SimplicialComplex, C2: SimplicialComplex, col1: dict[int, int],
            col2: dict[int, int]) -> dict[int, int] | None:
    faces1, faces2 = C1._face_map, C2._face_map
    by_color: dict[int, list[int]] = {}
    for b, c in col2.items():
        by_color.setdefault(c, []).append(b)
    # most constrained vertices first, then stay adjacent to what is assigned
    order: list[int] = []
    pending = set(col1)
    while pending:
        assigned = 0
        for b in order:
            assigned |= b
        best = min(pending, key=lambda b: (
            -(faces1[b] & assigned).bit_count(), len(by_color.get(col1[b], ())), b))
        order.append(best)
        pending.discard(best)

    facets1 = {b: [F for F in C1._facets if F & b] for b in col1}
    facets2 = {b: [F for F in C2._facets if F & b] for b in col2}
    fwd: dict[int, int] = {}
    back: dict[int, int] = {}

    def image(mask: int, table: dict[int, int]) -> int:
        out = 0
        for x in iter_bits(mask):
            out |= table[x]
        return out

    def consistent(v: int, w: int) -> bool:
        dom = 0
        for x in fwd:
            dom |= x
        for F in facets1[v]:
            if image(F & dom, fwd) not in faces2:
                return False
        rng = 0
        for y in back:
            rng |= y
        for G in facets2[w]:
            if image(G & rng, back) not in faces1:
                return False
        return True

    def extend(i: int) -> bool:
        if i == len(order):
            return True
        v = order[i]
        for w in by_color.get(col1[v], ()):
            if w in back:
                continue
            fwd[v], back[w] = w, v
            if consistent(v, w) and extend(i + 1):
                return True
            del fwd[v], back[w]
        return False

    if not extend(0):
        return None
    for F in C1._facets:
        if image(F, fwd) not in C2._facets:
            return None
    return fwd


def are_isomorphic(C1, C2, respect_bases: tuple | None = None) -> dict[str, str] | None:
    """A vertex bijection carrying facets of ``C1`` onto facets of ``C2``, or ``None``.

    ``C1`` and ``C2`` may be complexes or prismatoids. ``respect_bases`` is a
    pair ``(parts1, parts2)`` of vertex partitions; the bijection must then
    map each part of ``parts1`` onto a part of ``parts2``, in either order.
    Passing ``True`` with two prismatoids uses their bases.
    """
    if respect_bases is True:
        if not (isinstance(C1, Prismatoid) and isinstance(C2, Prismatoid)):
            raise TypeError("respect_bases=True needs two prismatoids")
        respect_bases = ((C1.base_plus, C1.base_minus), (C2.base_plus, C2.base_minus))
    C1 = C1.complex if isinstance(C1, Prismatoid) else C1
    C2 = C2.complex if isinstance(C2, Prismatoid) else C2
    if C1.f_vector() != C2.f_vector():
        return None
    if respect_bases is None:
        trials = [(None, None)]
    else:
        p1, p2 = (tuple(frozenset(p) for p in ps) for ps in respect_bases)
        if len(p1) != len(p2):
            return None
        trials = [(p1, p2), (p1, p2[::-1])] if len(p2) == 2 else [(p1, p2)]
    for parts1, parts2 in trials:
        init1 = _initial_colors(C1, parts1)
        init2 = _initial_colors(C2, parts2)
        table = {s: i for i, s in enumerate(sorted(set(init1.values()) | set(init2.values())))}
        col1, col2 = _refine([C1, C2], [{b: table[s] for b, s in init1.items()},
                                        {b: table[s] for b, s in init2.items()}])
        if sorted(col1.values()) != sorted(col2.values()):
            continue
        got = _search(C1, C2, col1, col2)
        if got is not None:
            return {next(iter(C1._tokens(a))): next(iter(C2._tokens(b))) for a, b in got.items()}
    return None
