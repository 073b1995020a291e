import itertools
from collections import Counter
from fractions import Fraction

import pytest

from topoprism.complex import build_complex, simplex_boundary
from topoprism.dstep import build_nonhirsch_sphere, covering_sphere, dstep_step, pull_cone
from topoprism.exceptions import DegenerateConeError, DStepPreconditionError
from topoprism.io import BUNDLED
from topoprism.prismatoid import find_layer_monotone_shelling

from conftest import corpus

_spheres = {}


def sphere_cert(name):
    if name not in _spheres:
        _spheres[name] = build_nonhirsch_sphere(corpus(name))
    return _spheres[name]


def square():
    return build_complex([["1", "2"], ["2", "3"], ["3", "4"], ["4", "1"]])


def stacked_sphere():
    """Boundary of the stacked ball {01234, 01245, 01256}."""
    ridges = Counter()
    for F in ("01234", "01245", "01256"):
        for R in itertools.combinations(F, 4):
            ridges[frozenset(R)] += 1
    return build_complex([sorted(R) for R, c in ridges.items() if c == 1])


def facet_set(C):
    return set(C.facets)


def test_pull_cone_square():
    assert facet_set(pull_cone(square(), "1")) == {frozenset("123"), frozenset("134")}
    assert facet_set(pull_cone(square(), "2")) == {frozenset("234"), frozenset("124")}


def test_pull_cone_stacked_sphere():
    B = stacked_sphere()
    ball = pull_cone(B, "3")
    (bd,) = ball.boundary_components()
    assert bd == B
    assert ball.dim == B.dim + 1


def test_pull_cone_of_simplex_boundary_is_degenerate():
    with pytest.raises(DegenerateConeError):
        pull_cone(simplex_boundary(list("1234")), "1")


def test_covering_square():
    cover = covering_sphere(square())
    assert cover.apexes == ("1", "2")
    assert cover.sphere == simplex_boundary(list("1234"))


def test_covering_rejects_simplex():
    with pytest.raises(DStepPreconditionError):
        covering_sphere(simplex_boundary(list("1234")))


def test_covering_stacked_sphere():
    B = stacked_sphere()
    cover = covering_sphere(B)
    S = cover.sphere
    assert S.dim == 4 and S.vertices == B.vertices and len(S.vertices) == 7
    assert S.is_closed_pseudomanifold() and S.is_dual_connected()
    assert S.euler_characteristic() == 2
    shared = set(cover.half1.face_map()) & set(cover.half2.face_map())
    assert shared == set(B.face_map())


def test_single_step_on_1039():
    P = corpus("p1039")
    Q, cert = dstep_step(P)
    assert (Q.dim, Q.n_vertices) == (5, 15)
    assert Q.width() >= 7 and cert.width_out == Q.width()
    cover = covering_sphere(P.base_complex(cert.covered_side))
    assert cert.facets_c1 == 2 * P.n_facets + cover.sphere.n_facets
    star_v = sum(1 for F in P.facets if cert.contracted in F)
    assert cert.facets_out == cert.facets_c1 - star_v == Q.n_facets
    for side in ("plus", "minus"):
        assert Q.base_complex(side).is_closed_pseudomanifold()


def test_precondition_on_minimal_input(ann6):
    with pytest.raises(DStepPreconditionError):
        dstep_step(ann6)


@pytest.mark.parametrize("name", BUNDLED)
def test_full_pipeline(name):
    cert = sphere_cert(name)
    S = cert.sphere
    assert [s.n_out for s in cert.steps] == [15, 16, 17, 18]
    assert [s.dim_out for s in cert.steps] == [5, 6, 7, 8]
    widths = [cert.start[2]] + [s.width_out for s in cert.steps]
    assert all(b >= a + 1 for a, b in zip(widths, widths[1:]))
    assert [s.base_sizes for s in cert.steps] == [(7, 8), (8, 8), (8, 9), (9, 9)]
    assert (cert.n_vertices, cert.dim, cert.D) == (18, 8, 9)
    assert S.n_vertices == 18 and S.dim == 8
    ridge_counts = Counter()
    for F in S.facets:
        for x in F:
            ridge_counts[F - {x}] += 1
    assert set(ridge_counts.values()) == {2}
    assert S.euler_characteristic() == 2
    assert cert.distance >= 10 > 9 == cert.hirsch_bound
    assert cert.diameter >= cert.distance
    assert cert.non_hirsch
    assert cert.excess >= Fraction(1, 9)
    assert S.is_facet(cert.facet_plus) and S.is_facet(cert.facet_minus)


def test_distance_values_are_pinned():
    assert [sphere_cert(n).distance for n in BUNDLED] == [10, 10, 10, 10]
    assert [sphere_cert(n).sphere.n_facets for n in BUNDLED] == [474, 490, 470, 480]


def test_ann6_is_not_non_hirsch(ann6):
    cert = build_nonhirsch_sphere(ann6)
    assert not cert.non_hirsch
    assert cert.distance <= cert.n_vertices - cert.D


def test_shelling_is_carried_through():
    cert = build_nonhirsch_sphere(corpus("p1963"), shelling=True)
    assert cert.shelling is not None and cert.shelling.valid


def test_step_with_shelling_report():
    P = corpus("p3513")
    rep = find_layer_monotone_shelling(P)
    Q, cert, report = dstep_step(P, 1, rep.order, rep.direction)
    assert report.valid
    assert len(report.order) == Q.n_facets


def test_report_lines_and_key_values():
    cert = sphere_cert("p1039")
    kv = cert.key_values()
    assert kv["N"] == "18" and kv["D"] == "9" and kv["non_hirsch"] == "true"
    assert cert.report_lines()[-1].startswith("verdict non-Hirsch")
