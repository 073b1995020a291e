"""Flips (f, l, v) on prismatoids: derivation from supports, validity, application, sampling."""
from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from typing import Iterable, Iterator

from .complex import face, fmt_face, iter_bits, sorted_face
from .exceptions import BadSupportSizeError, InvalidFlipError, NoValidFlipsError, ParseError
from .prismatoid import Prismatoid

MAX_TRIES = 64


@dataclass(frozen=True)
class Flip:
    """A flip replacing the star of ``f`` by ``l * boundary(f) * v``.

    ``v`` is ``None`` for interior flips and a base vertex for boundary
    flips. A boundary flip with a single-vertex ``l`` inserts that vertex;
    one with a single-vertex ``f`` deletes it.
    """

    f: frozenset
    l: frozenset
    v: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "f", face(self.f))
        object.__setattr__(self, "l", face(self.l))

    @property
    def kind(self) -> str:
        return "interior" if self.v is None else "boundary"

    @property
    def support(self) -> frozenset:
        return self.f | self.l | ({self.v} if self.v is not None else frozenset())

    @property
    def inserts_vertex(self) -> bool:
        return self.v is not None and len(self.l) == 1

    @property
    def deletes_vertex(self) -> bool:
        return self.v is not None and len(self.f) == 1

    def inverse(self) -> "Flip":
        return Flip(self.l, self.f, self.v)

    def to_line(self) -> str:
        return (f"flip {self.kind} f={fmt_face(self.f, ',')} l={fmt_face(self.l, ',')} "
                f"v={self.v if self.v is not None else '-'} support={fmt_face(self.support, ',')}")

    @classmethod
    def from_line(cls, line: str, lineno: int | None = None) -> "Flip":
        parts = line.split()
        if len(parts) != 6 or parts[0] != "flip" or parts[1] not in ("interior", "boundary"):
            raise ParseError(f"malformed flip line {line!r}", lineno)
        fields = {}
        for p in parts[2:]:
            key, sep, val = p.partition("=")
            if not sep or key not in ("f", "l", "v", "support"):
                raise ParseError(f"malformed field {p!r}", lineno)
            fields[key] = val
        if set(fields) != {"f", "l", "v", "support"}:
            raise ParseError("flip line needs f, l, v and support", lineno)
        v = None if fields["v"] == "-" else fields["v"]
        flip = cls(_split(fields["f"]), _split(fields["l"]), v)
        if flip.kind != parts[1] or flip.support != frozenset(_split(fields["support"])):
            raise ParseError("flip kind or support does not match f, l, v", lineno)
        return flip

    def __str__(self):
        return self.to_line()


def _split(s: str) -> list[str]:
    return [t for t in s.split(",") if t]


class RidgeNeighborhoodIndex:
    """Multiset of ridge neighborhoods with O(1) uniform sampling of distinct ones.

    An interior ridge contributes the ``d + 1`` vertices of its two facets, a
    boundary ridge the ``d`` vertices of its facet.
    """

    __slots__ = ("count", "keys", "pos")

    def __init__(self):
        self.count: dict[int, int] = {}
        self.keys: list[int] = []
        self.pos: dict[int, int] = {}

    @classmethod
    def build(cls, P: Prismatoid) -> "RidgeNeighborhoodIndex":
        idx = cls()
        r = P.d - 1
        for G, nb in P.complex._face_map.items():
            if G.bit_count() == r:
                idx.add(nb)
        return idx

    def copy(self) -> "RidgeNeighborhoodIndex":
        new = RidgeNeighborhoodIndex()
        new.count = dict(self.count)
        new.keys = list(self.keys)
        new.pos = dict(self.pos)
        return new

    def add(self, nb: int):
        c = self.count.get(nb, 0)
        self.count[nb] = c + 1
        if not c:
            self.pos[nb] = len(self.keys)
            self.keys.append(nb)

    def discard(self, nb: int):
        c = self.count[nb]
        if c > 1:
            self.count[nb] = c - 1
            return
        del self.count[nb]
        i = self.pos.pop(nb)
        last = self.keys.pop()
        if last != nb:
            self.keys[i] = last
            self.pos[last] = i

    def sample(self, rng: random.Random) -> int:
        return self.keys[rng.randrange(len(self.keys))]

    def __len__(self):
        return len(self.keys)

    def __contains__(self, nb: int):
        return nb in self.count

    def as_tokens(self, P: Prismatoid) -> dict[frozenset, int]:
        return {P.complex._tokens(k): c for k, c in self.count.items()}


class FreshVertexSource:
    """Deterministic supply of unused vertex tokens ``_x0, _x1, ...``.

    :meth:`peek` always names the lowest-numbered token that is not a
    vertex, so labels released by vertex-deleting flips are reused. Tokens in
    ``reserved`` (the original ground set) are never emitted, even after
    their vertex has been deleted.
    """

    def __init__(self, reserved: Iterable[str] = (), prefix: str = "_x"):
        self.reserved = frozenset(reserved)
        self.prefix = prefix
        self._next = 0           # every unused index below this sits in _free
        self._free: list[int] = []

    def copy(self) -> "FreshVertexSource":
        new = FreshVertexSource.__new__(FreshVertexSource)
        new.reserved, new.prefix = self.reserved, self.prefix
        new._next, new._free = self._next, list(self._free)
        return new

    def _unused(self, C, i: int) -> bool:
        t = f"{self.prefix}{i}"
        if t in self.reserved:
            return False
        b = C._bit.get(t)
        return b is None or not (b & C._used)

    def peek(self, P: Prismatoid) -> str:
        C = P.complex
        free = self._free
        while free and not self._unused(C, free[0]):
            heapq.heappop(free)
        while not self._unused(C, self._next):
            self._next += 1
        i = min(free[0], self._next) if free else self._next
        return f"{self.prefix}{i}"

    def release(self, token: str):
        """Return a deleted vertex label to the pool if this source could emit it."""
        if token in self.reserved or not token.startswith(self.prefix):
            return
        digits = token[len(self.prefix):]
        if digits.isdigit() and str(int(digits)) == digits:
            i = int(digits)
            if i < self._next:
                heapq.heappush(self._free, i)


def ridge_index(P: Prismatoid) -> RidgeNeighborhoodIndex:
    if P._ridges is None:
        P._ridges = RidgeNeighborhoodIndex.build(P)
    return P._ridges


def fresh_source(P: Prismatoid) -> FreshVertexSource:
    if P._fresh is None:
        P._fresh = FreshVertexSource(P.complex.ground_set)
    return P._fresh


# ----------------------------------------------------------------------
# mask-level core
def _derive_masks(P: Prismatoid, s: int, fresh: int = 0):
    """(f, l, v) masks recovered from support ``s``; None if no facet lies inside."""
    used = s & ~fresh
    if (s & P._plus).bit_count() == 1:
        v = s & P._plus
    elif (s & P._minus).bit_count() == 1:
        v = s & P._minus
    else:
        v = 0
    facets = P.complex._facets
    inter = -1
    if fresh:
        if used in facets:
            inter = used
    else:
        for x in iter_bits(used):
            G = used ^ x
            if G in facets:
                inter &= G
    if inter == -1:
        return None
    f = inter & ~v
    l = fresh if fresh else s & ~inter & ~v
    return f, l, v


def _problem(P: Prismatoid, f: int, l: int, v: int, insertion: bool) -> str | None:
    """First failing validity condition, or None for a valid flip."""
    d = P.d
    if f & l or f & v or l & v:
        return "f, l and v are not pairwise disjoint"
    if v and v.bit_count() != 1:
        return "v is not a single vertex"
    C = P.complex
    faces = C._faces
    s = f | l | v
    nf, nl = f.bit_count(), l.bit_count()
    if not f or not l:
        return "f and l must be nonempty"
    if v:
        if nf + nl != d:
            return "boundary flip needs |f| + |l| = d"
    elif nf + nl != d + 1:
        return "interior flip needs |f| + |l| = d + 1"
    s_used = s & ~l if insertion else s
    # (1) support is a ridge neighborhood
    if s_used not in ridge_index(P):
        return "support is not the neighborhood of a ridge"
    # (2) neighborhood of f has the support size
    nb = faces.get(f)
    if nb is None:
        return "f is not a face"
    if nb.bit_count() != (d if insertion else d + 1):
        return "neighborhood of f has the wrong size"
    # (3) l is not a face
    if not insertion and l in faces:
        return "l is a face"
    # link(f) = boundary(l) * v
    if nb != s_used:
        return "link of f is not boundary(l) * v"
    facets = C._facets
    for x in iter_bits(l):
        if s ^ x not in facets:
            return "link of f is not boundary(l) * v"
    # side constraints
    if v:
        if v & ~(P._plus | P._minus) or not (v & C._used):
            return "v is not a base vertex"
        opposite = P._minus if v & P._plus else P._plus
        if (f | (0 if insertion else l)) & ~opposite:
            return "f and l are not in the base opposite to v"
    else:
        if not (l & P._plus) or not (l & P._minus):
            return "l does not meet both bases"
    return None


def _insertion_label(P: Prismatoid, flip: Flip) -> str | None:
    if not flip.inserts_vertex:
        return None
    (w,) = flip.l
    C = P.complex
    b = C._bit.get(w)
    if b is not None and b & C._used:
        return None
    return w


def _flip_masks(P: Prismatoid, flip: Flip):
    C = P.complex
    w = _insertion_label(P, flip)
    if w is not None:
        lm = C._register(w)
    else:
        lm = C._mask(flip.l)
    fm = C._mask(flip.f)
    vm = 0 if flip.v is None else C._mask((flip.v,))
    return fm, lm, vm, w is not None


def flip_problem(P: Prismatoid, flip: Flip) -> str | None:
    C = P.complex
    for part in (flip.f, flip.l if not flip.inserts_vertex else ()):
        if C._mask(part) is None:
            return "flip uses a token outside the ground set"
    if flip.v is not None and C._mask((flip.v,)) is None:
        return "v is not in the ground set"
    fm, lm, vm, insertion = _flip_masks(P, flip)
    return _problem(P, fm, lm, vm, insertion)


def is_valid_flip(P: Prismatoid, flip: Flip) -> tuple[bool, str]:
    """(True, "valid") or (False, reason for the first failing condition)."""
    reason = flip_problem(P, flip)
    return (reason is None, reason or "valid")


def derive_flip_from_support(P: Prismatoid, u: Iterable[str], fresh: str | None = None) -> Flip | None:
    u = face(u)
    C = P.complex
    d = P.d
    if fresh is not None:
        if len(u) != d:
            raise BadSupportSizeError(f"insertion support needs {d} vertices, got {len(u)}")
        fb = C._register(fresh)
        if fb & C._used:
            raise BadSupportSizeError(f"{fresh!r} is already a vertex")
    else:
        if len(u) != d + 1:
            raise BadSupportSizeError(f"support needs {d + 1} vertices, got {len(u)}")
        fb = 0
    s = C._mask(u)
    if s is None:
        return None
    got = _derive_masks(P, s | fb, fb)
    if got is None:
        return None
    return _to_flip(P, *got)


def _to_flip(P: Prismatoid, f: int, l: int, v: int) -> Flip:
    C = P.complex
    vt = None
    if v:
        (vt,) = C._tokens(v)
    return Flip(C._tokens(f), C._tokens(l), vt)


def _candidate(P: Prismatoid, nb: int):
    """Masks of the flip defined by ridge neighborhood ``nb`` if it is valid."""
    fb = 0
    insertion = nb.bit_count() == P.d
    if insertion:
        fb = P.complex._register(fresh_source(P).peek(P))
    got = _derive_masks(P, nb | fb, fb)
    if got is None:
        return None
    f, l, v = got
    if _problem(P, f, l, v, insertion) is not None:
        return None
    return f, l, v


def iter_flips(P: Prismatoid) -> Iterator[Flip]:
    for nb in list(ridge_index(P).keys):
        got = _candidate(P, nb)
        if got is not None:
            yield _to_flip(P, *got)


def enumerate_flips(P: Prismatoid) -> list[Flip]:
    """All valid flips, one per flip-defining ridge neighborhood, in a canonical order."""
    return sorted(iter_flips(P), key=lambda fl: (fl.kind, sorted_face(fl.support),
                                                 sorted_face(fl.f)))


def sample_flip(P: Prismatoid, rng: random.Random, max_tries: int = MAX_TRIES) -> Flip:
    """Uniformly random valid flip by rejection over distinct ridge neighborhoods."""
    idx = ridge_index(P)
    for _ in range(max_tries):
        got = _candidate(P, idx.sample(rng))
        if got is not None:
            return _to_flip(P, *got)
    flips = enumerate_flips(P)
    if not flips:
        raise NoValidFlipsError("prismatoid admits no valid flip")
    return flips[rng.randrange(len(flips))]


def apply_flip(P: Prismatoid, flip: Flip, check: bool = True) -> Flip:
    """Apply ``flip`` in place and return its inverse.

    Updates the face map, the ridge index, the base vertex sets and the width
    labels incrementally.
    """
    if check:
        reason = flip_problem(P, flip)
        if reason is not None:
            raise InvalidFlipError(f"{flip.to_line()}: {reason}")
    fm, lm, vm, insertion = _flip_masks(P, flip)
    _apply_masks(P, fm, lm, vm, insertion)
    return flip.inverse()


def _apply_masks(P: Prismatoid, fm: int, lm: int, vm: int, insertion: bool):
    C = P.complex
    idx = ridge_index(P)
    s = fm | lm | vm
    faces = C._faces
    bits = list(iter_bits(s))
    ridges = [s ^ a ^ b for i, a in enumerate(bits) for b in bits[i + 1:]]
    for R in ridges:
        nb = faces.get(R)
        if nb is not None:
            idx.discard(nb)
    removed, added = C._bistellar(s, fm, lm)
    for R in ridges:
        nb = faces.get(R)
        if nb is not None:
            idx.add(nb)
    if insertion:
        if vm & P._plus:
            P._minus |= lm
        else:
            P._plus |= lm
    elif vm and fm.bit_count() == 1:
        P._plus &= ~fm
        P._minus &= ~fm
        fresh_source(P).release(next(iter(C._tokens(fm))))
    P.labels.update(removed, added)


def replay(P: Prismatoid, flips: Iterable[Flip]) -> Prismatoid:
    """Apply a sequence of flips in place, validating each one."""
    for flip in flips:
        apply_flip(P, flip)
    return P


def read_trace(path) -> list[Flip]:
    out = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if line:
                out.append(Flip.from_line(line, lineno))
    return out
