"""Strong d-step construction: from a non-d-step prismatoid to a non-Hirsch sphere."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .complex import SimplicialComplex, _bfs_distance, fmt_face, one_point_suspension, sorted_face
from .exceptions import (
    DegenerateConeError,
    DStepPreconditionError,
    LabelClashError,
    NoValidPairError,
    NotPseudomanifoldError,
    NotSimplexBasesError,
    WidthRegressionError,
)
from .prismatoid import (
    Prismatoid,
    ShellingReport,
    _ridge_lookup,
    _step_count,
    check_shelling,
    check_sphere_shelling,
    find_layer_monotone_shelling,
    validate_prismatoid,
)


def _closure(facets) -> set[frozenset]:
    out: set[frozenset] = set()
    for F in facets:
        items = sorted(F)
        n = len(items)
        for m in range(1 << n):
            out.add(frozenset(items[i] for i in range(n) if m >> i & 1))
    return out


def pull_cone(B: SimplicialComplex, v: str) -> SimplicialComplex:
    """Cone from ``v`` over the facets of ``B`` that miss ``v``.

    For a sphere ``B`` this is a ball whose boundary is ``B``.
    """
    if v not in B.vertices:
        raise DegenerateConeError(f"{v!r} is not a vertex of the sphere")
    facets = [F | {v} for F in B.facets if v not in F]
    if len(facets) < 2:
        raise DegenerateConeError("cone is a single simplex; the sphere is a simplex boundary")
    return SimplicialComplex(facets)


@dataclass
class CoveringSphere:
    sphere: SimplicialComplex
    half1: SimplicialComplex
    half2: SimplicialComplex
    base: SimplicialComplex
    apexes: tuple[str, str]


def _check_covering(B: SimplicialComplex, S1: SimplicialComplex, S2: SimplicialComplex,
                    base_faces: set[frozenset]) -> SimplicialComplex | None:
    S = SimplicialComplex(S1.facets + S2.facets)
    if S.n_facets != S1.n_facets + S2.n_facets:
        return None
    if _closure(S1.facets) & _closure(S2.facets) != base_faces:
        return None
    try:
        if not S.is_closed_pseudomanifold():
            return None
    except NotPseudomanifoldError:
        return None
    if not S.is_dual_connected():
        return None
    if S.euler_characteristic() != 1 + (-1) ** S.dim:
        return None
    if S.vertices != B.vertices:
        return None
    return S


def covering_sphere(B: SimplicialComplex) -> CoveringSphere:
    """A sphere of one more dimension containing ``B`` and no new vertices.

    Vertex pairs are tried in lexicographic order; the first pair whose pull
    cones meet exactly in ``B`` (as face sets) and whose union passes the
    sphere checks is returned.
    """
    if not B.is_closed_pseudomanifold():
        raise DStepPreconditionError("base is not a closed pseudomanifold")
    if B.n_vertices < B.dim + 3:
        raise DStepPreconditionError("base is a simplex boundary; there is no room for a cover")
    base_faces = _closure(B.facets)
    verts = sorted(B.vertices)
    for i, v1 in enumerate(verts):
        S1 = pull_cone(B, v1)
        for v2 in verts[i + 1:]:
            S2 = pull_cone(B, v2)
            S = _check_covering(B, S1, S2, base_faces)
            if S is not None:
                return CoveringSphere(S, S1, S2, B, (v1, v2))
    raise NoValidPairError("no pair of pull cones covers the base")


@dataclass
class StepCertificate:
    step: int
    n_in: int
    dim_in: int
    width_in: float
    n_out: int
    dim_out: int
    width_out: float
    covered_side: str
    cover_apexes: tuple[str, str]
    contracted: str
    labels: tuple[str, str]
    facets_c1: int
    facets_out: int
    base_sizes: tuple[int, int]

    def row(self) -> str:
        return (f"step {self.step}: n {self.n_in}->{self.n_out} dim {self.dim_in}->{self.dim_out} "
                f"width {_w(self.width_in)}->{_w(self.width_out)} cover={self.covered_side} "
                f"apexes={','.join(self.cover_apexes)} v={self.contracted} "
                f"new={','.join(self.labels)} bases={self.base_sizes[0]},{self.base_sizes[1]}")


def _w(x) -> str:
    return "inf" if x == math.inf else str(int(x))


def _slack(P: Prismatoid, side: str) -> int:
    mask = P._plus if side == "plus" else P._minus
    return mask.bit_count() - P.d


def dstep_step(P: Prismatoid, step: int = 1, shelling: list | None = None,
               shelling_side: str | None = None):
    """One application of the construction: n -> n + 1 vertices, d -> d + 1.

    Returns ``(prismatoid, certificate)``; when a shelling of ``P`` (and the
    base it starts from) is supplied, a third item carries the transferred
    shelling report.
    """
    d = P.d
    sp, sm = _slack(P, "plus"), _slack(P, "minus")
    if max(sp, sm) <= 0:
        raise DStepPreconditionError(f"n = {P.n_vertices} = 2d; both bases are simplices")
    side = "plus" if sp >= sm else "minus"
    other = "minus" if side == "plus" else "plus"
    B = P.base_complex(side)
    cover = covering_sphere(B)
    v1, v2 = f"_s{step}1", f"_s{step}2"
    for lab in (v1, v2):
        if lab in P.complex.ground_set:
            raise LabelClashError(f"label {lab!r} is already in use")

    C = P.facets
    c1 = ([F | {v1} for F in C] + [G | {v1} for G in cover.half1.facets]
          + [F | {v2} for F in C] + [G | {v2} for G in cover.half2.facets])
    if len(c1) != 2 * len(C) + cover.sphere.n_facets:
        raise AssertionError("facet count of the doubled complex is off")

    other_verts = P.base_minus if other == "minus" else P.base_plus
    v = min(other_verts)
    star_v = [F for F in C if v in F]
    c2 = [F for F in c1 if not (v in F and (v1 in F or v2 in F))]
    c2 += [(F - {v}) | {v1, v2} for F in star_v]
    if len(c2) != len(c1) - len(star_v):
        raise AssertionError("facet count after merging edge stars is off")

    new_side = B.vertices
    new_other = (other_verts - {v}) | {v1, v2}
    plus, minus = (new_side, new_other) if side == "plus" else (new_other, new_side)
    Q = validate_prismatoid(SimplicialComplex(c2), plus, minus)

    expected_other = one_point_suspension(P.base_complex(other), v, (v1, v2))
    if (Q.base_complex(side) != cover.sphere or Q.base_complex(other) != expected_other):
        raise AssertionError("bases of the new prismatoid are not the cover and the one-point suspension")
    w_in, w_out = P.width(), Q.width()
    if not w_out >= w_in + 1:
        raise WidthRegressionError(f"width went from {w_in} to {w_out}")
    cert = StepCertificate(step, P.n_vertices, P.dim, w_in, Q.n_vertices, Q.dim, w_out, side,
                           cover.apexes, v, (v1, v2), len(c1), len(c2),
                           (len(Q.base_plus), len(Q.base_minus)))
    if shelling is None:
        return Q, cert
    report = transfer_shelling(P, Q, cover, side, shelling, shelling_side, (v1, v2), v)
    return Q, cert, report


# ----------------------------------------------------------------------
# shelling transfer
def _shell_part(Q: Prismatoid, start: int, placed: list[int], part: list[int],
                budget: int = 20_000) -> list[int] | None:
    """Order ``part`` so that it extends the partial shelling ``placed``."""
    ridge_map = _ridge_lookup(list(Q.complex._facets))
    d = Q.d
    seen = set(placed)
    order = list(placed)
    remaining = sorted(part, key=lambda m: sorted_face(Q.complex._tokens(m)))
    stack = [0]
    chosen: list[int] = []
    while True:
        if len(chosen) == len(remaining):
            return order[len(placed):]
        budget -= 1
        if budget <= 0:
            return None
        i = stack[-1]
        while i < len(remaining):
            F = remaining[i]
            if F not in seen and 1 <= _step_count(F, seen, order, start, ridge_map, d) <= d - 1:
                break
            i += 1
        if i == len(remaining):
            stack.pop()
            if not chosen:
                return None
            F = chosen.pop()
            seen.discard(F)
            order.pop()
            stack[-1] += 1
            continue
        stack[-1] = i
        F = remaining[i]
        chosen.append(F)
        seen.add(F)
        order.append(F)
        stack.append(0)


def transfer_shelling(P: Prismatoid, Q: Prismatoid, cover: CoveringSphere, side: str,
                      shelling: list, shelling_side: str | None, labels: tuple[str, str],
                      v: str) -> ShellingReport:
    """Assemble a shelling of ``Q`` from one of ``P``: cone halves first, then doubled facets.

    The input shelling must start from the covered base; if it starts from
    the other base its reverse is used. The assembled order is checked with
    :func:`check_shelling` and the report is returned whatever the verdict.
    """
    v1, v2 = labels
    order = [frozenset(F) for F in shelling]
    if shelling_side is not None and shelling_side != side:
        order = order[::-1]
    C = Q.complex
    start = Q._side_mask(side)
    half1 = [C._mask_of(G | {v1}) for G in cover.half1.facets]
    half2 = [C._mask_of(G | {v2}) for G in cover.half2.facets]
    first = _shell_part(Q, start, [], half1)
    second = None if first is None else _shell_part(Q, start, first, half2)
    if second is None:
        return ShellingReport([], side, [], False, 0)
    rest: list[frozenset] = []
    for F in order:
        if v in F:
            rest.append((F - {v}) | {v1, v2})
        else:
            rest.append(F | {v1})
            rest.append(F | {v2})
    full = [C._tokens(m) for m in first + second] + rest
    return check_shelling(Q, full, side)


# ----------------------------------------------------------------------
@dataclass
class SphereCertificate:
    sphere: SimplicialComplex
    dim: int
    n_vertices: int
    facet_plus: frozenset
    facet_minus: frozenset
    distance: float
    diameter: float
    steps: list[StepCertificate] = field(default_factory=list)
    start: tuple = ()
    shelling: ShellingReport | None = None
    final_prismatoid: Prismatoid | None = None

    @property
    def D(self) -> int:
        return self.dim + 1

    @property
    def hirsch_bound(self) -> int:
        return self.n_vertices - self.D

    @property
    def non_hirsch(self) -> bool:
        return self.distance > self.hirsch_bound

    @property
    def excess(self):
        from fractions import Fraction

        if self.distance == math.inf:
            return math.inf
        return Fraction(int(self.distance) - self.hirsch_bound, self.hirsch_bound)

    def report_lines(self) -> list[str]:
        n0, dim0, w0 = self.start
        lines = [f"start n={n0} dim={dim0} width={_w(w0)}"]
        lines += [s.row() for s in self.steps]
        lines.append(f"facet+ {fmt_face(self.facet_plus, ' ')}")
        lines.append(f"facet- {fmt_face(self.facet_minus, ' ')}")
        verdict = "non-Hirsch" if self.non_hirsch else "Hirsch bound holds"
        lines.append(f"verdict {verdict}: distance {_w(self.distance)} vs N-D = {self.hirsch_bound}")
        return lines

    def key_values(self) -> dict[str, str]:
        kv = {
            "N": str(self.n_vertices),
            "D": str(self.D),
            "dim": str(self.dim),
            "facets": str(self.sphere.n_facets),
            "distance": _w(self.distance),
            "diameter": _w(self.diameter),
            "hirsch_bound": str(self.hirsch_bound),
            "non_hirsch": str(self.non_hirsch).lower(),
            "excess": str(self.excess),
            "widths": ",".join([_w(self.start[2])] + [_w(s.width_out) for s in self.steps]),
        }
        if self.shelling is not None:
            kv["shelling"] = "valid" if self.shelling.valid else "invalid"
        return kv


def build_nonhirsch_sphere(P: Prismatoid, shelling: bool = False,
                           shelling_nodes: int = 200_000) -> SphereCertificate:
    """Run the construction down to simplex bases and close the sphere with two facets.

    With ``shelling=True`` a layer-monotone shelling of ``P`` is searched
    for and carried through every step; the final report says whether the
    assembled sphere order passes the shelling test.
    """
    steps: list[StepCertificate] = []
    start = (P.n_vertices, P.dim, P.width())
    order = side = None
    report = None
    if shelling:
        found = find_layer_monotone_shelling(P, max_nodes=shelling_nodes)
        if found is not None:
            order, side = found.order, found.direction
    Q = P
    k = 0
    while _slack(Q, "plus") > 0 or _slack(Q, "minus") > 0:
        k += 1
        if order is not None:
            Q, cert, report = dstep_step(Q, k, order, side)
            if report.valid:
                order, side = report.order, report.direction
            else:
                order = None
        else:
            Q, cert = dstep_step(Q, k)
        steps.append(cert)
    expected = P.n_vertices - 2 * P.d
    if k != expected or len(Q.base_plus) != Q.d or len(Q.base_minus) != Q.d:
        raise NotSimplexBasesError(f"expected {expected} steps ending in simplex bases, got {k}")
    fp, fm = Q.base_plus, Q.base_minus
    S = SimplicialComplex(Q.facets + [fp, fm])
    if not S.is_closed_pseudomanifold():
        raise NotPseudomanifoldError("closed-up complex has a ridge outside exactly two facets")
    if S.euler_characteristic() != 1 + (-1) ** S.dim:
        raise NotPseudomanifoldError("closed-up complex has the wrong Euler characteristic")
    adj = S._dual_adjacency()
    dist = _bfs_distance(adj, {S._mask_of(fp)}, {S._mask_of(fm)})
    diam = S.dual_diameter()
    sphere_report = None
    if shelling:
        if order is not None:
            seq = order if side == "plus" else order[::-1]
            sphere_report = check_sphere_shelling(S, [fp] + list(seq) + [fm])
        else:
            sphere_report = report if report is not None else ShellingReport([], "sphere")
    return SphereCertificate(S, S.dim, S.n_vertices, fp, fm, dist, diam, steps, start,
                             sphere_report, Q)
