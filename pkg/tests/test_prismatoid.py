import random
from fractions import Fraction

import networkx as nx
import pytest
from networkx.algorithms.isomorphism import DiGraphMatcher

from oracles import labels_by_bfs, width_by_bfs
from topoprism.complex import build_complex
from topoprism.exceptions import (
    BaseNotInducedError,
    BasesOverlapError,
    DualDisconnectedError,
    InvalidPrismatoidError,
    NotAPermutationError,
    VertexOutsideBasesError,
    WrongBoundaryCountError,
)
from topoprism.flips import apply_flip, sample_flip
from topoprism.io import BUNDLED
from topoprism.prismatoid import (
    Prismatoid,
    certify_non_dstep,
    check_shelling,
    excess,
    find_layer_monotone_shelling,
    incidence_pattern,
    layer_vector,
    validate_prismatoid,
)

from conftest import ANN6_FACETS, corpus

# Reduced incidence patterns as drawn in the published figures (grey base 3..6).
MINIMAL_RIGHT = [("3", "d"), ("e", "3"), ("f", "3"), ("3", "g"), ("d", "4"), ("e", "4"),
                 ("4", "f"), ("4", "g"), ("d", "5"), ("5", "e"), ("5", "f"), ("g", "5"),
                 ("6", "d"), ("6", "e"), ("f", "6"), ("g", "6")]
MINIMAL_LEFT = [("3", "d"), ("3", "e"), ("4", "d"), ("4", "e"), ("d", "5"), ("d", "6"),
                ("e", "5"), ("e", "6"), ("5", "f"), ("5", "g"), ("6", "f"), ("6", "g"),
                ("f", "3"), ("f", "4"), ("g", "3"), ("g", "4")]
PATTERN_1963_3513 = [("3", "d"), ("3", "e"), ("f", "3"), ("g", "3"), ("d", "4"), ("4", "e"),
                     ("4", "f"), ("g", "4"), ("d", "5"), ("e", "5"), ("5", "f"), ("5", "g"),
                     ("6", "d"), ("e", "6"), ("f", "6"), ("6", "g")]
PATTERN_1039 = [("3", "b"), ("b", "3"), ("d", "3"), ("3", "e"), ("g", "3"), ("3", "f"),
                ("4", "b"), ("b", "4"), ("4", "d"), ("4", "e"), ("f", "4"), ("g", "4"),
                ("b", "5"), ("5", "d"), ("e", "5"), ("f", "5"), ("5", "g"), ("b", "6"),
                ("d", "6"), ("e", "6"), ("6", "f"), ("6", "g")]
PATTERN_2669 = [("3", "a"), ("a", "3"), ("d", "3"), ("e", "3"), ("3", "f"), ("3", "g"),
                ("4", "a"), ("a", "4"), ("d", "4"), ("4", "e"), ("4", "f"), ("g", "4"),
                ("a", "5"), ("5", "d"), ("5", "e"), ("f", "5"), ("g", "5"), ("a", "6"),
                ("6", "d"), ("e", "6"), ("f", "6"), ("6", "g")]
FIGURE = {"p1963": PATTERN_1963_3513, "p3513": PATTERN_1963_3513,
          "p1039": PATTERN_1039, "p2669": PATTERN_2669}


def digraph(arcs, plus):
    g = nx.DiGraph(list(arcs))
    for n in g:
        g.nodes[n]["plus"] = n in plus
    return g


def same_pattern(g1, g2):
    """Isomorphic as digraphs with the bipartition kept, possibly with the sides swapped."""
    for swap in (False, True):
        match = DiGraphMatcher(g1, g2, node_match=lambda a, b: (a["plus"] == b["plus"]) != swap)
        if match.is_isomorphic():
            return True
    return False


def ann6_with(facets):
    return build_complex([list(f) for f in facets])


# ---------------------------------------------------------------- validation
def test_ann6_valid(ann6):
    assert ann6.d == 3 and ann6.dim == 2


def test_table_prismatoid_valid(bundled):
    assert bundled.d == 5
    assert bundled.base_plus == frozenset("0123456")
    assert bundled.base_minus == frozenset("abcdefg")
    for side in ("plus", "minus"):
        B = bundled.base_complex(side)
        assert B.is_closed_pseudomanifold() and B.euler_characteristic() == 0


def test_p2669_validates_from_raw_facets():
    P = corpus("p2669")
    Q = validate_prismatoid(build_complex(P.facets), list("0123456"),
                            list("abcdefg"))
    assert Q.d == 5


def test_base_not_induced():
    facets = ["123"] + ANN6_FACETS[1:]
    with pytest.raises(BaseNotInducedError):
        validate_prismatoid(ann6_with(facets), list("123"), list("abc"))


def test_overlapping_and_outside_bases():
    C = ann6_with(ANN6_FACETS)
    with pytest.raises(BasesOverlapError):
        validate_prismatoid(C, list("123a"), list("abc"))
    with pytest.raises(VertexOutsideBasesError):
        validate_prismatoid(C, list("12"), list("abc"))
    with pytest.raises(VertexOutsideBasesError):
        validate_prismatoid(C, list("123z"), list("abc"))


def test_closed_sphere_rejected():
    # a closed 2-sphere has no boundary at all
    C = ann6_with(["12a", "1a3", "23a", "12b", "13b", "23b"])
    with pytest.raises(InvalidPrismatoidError):
        validate_prismatoid(C, list("123"), list("ab"))


def test_bases_must_match_components():
    C = ann6_with(ANN6_FACETS)
    with pytest.raises(InvalidPrismatoidError):
        validate_prismatoid(C, list("12b"), list("3ac"))


def test_low_dimension_rejected():
    with pytest.raises(InvalidPrismatoidError):
        validate_prismatoid(build_complex([["1", "a"], ["2", "b"]]), ["1", "2"], ["a", "b"])


def test_disconnected_pieces_rejected():
    # two disjoint annuli: four boundary circles
    C = ann6_with(ANN6_FACETS + [f.replace("1", "4").replace("2", "5").replace("3", "6")
                                 .replace("a", "d").replace("b", "e").replace("c", "f")
                                 for f in ANN6_FACETS])
    with pytest.raises((WrongBoundaryCountError, DualDisconnectedError)):
        validate_prismatoid(C, list("123456"), list("abcdef"))


# ---------------------------------------------------------------- width
def test_width_ann6(ann6):
    assert ann6.width() == 3
    assert not ann6.is_non_dstep()


def test_width_tables(bundled):
    w = bundled.width()
    assert w == width_by_bfs(bundled) == 6
    assert bundled.is_non_dstep()


def test_width_unreachable_is_infinite():
    P = Prismatoid(ann6_with(["12a", "3bc"]), list("123"), list("abc"))
    assert P.width() == float("inf")


def test_labels_match_bfs_after_ann6_flip(ann6):
    from topoprism.flips import Flip

    apply_flip(ann6, Flip(["2", "a"], ["1", "b"]))
    assert ann6.labels.as_tokens() == labels_by_bfs(ann6)


def test_labels_unchanged_by_empty_update(p1039):
    before = p1039.labels.as_tokens()
    p1039.labels.update([], [])
    assert p1039.labels.as_tokens() == before


def test_labels_match_bfs_along_random_walk(p1039):
    rng = random.Random(11)
    for _ in range(200):
        apply_flip(p1039, sample_flip(p1039, rng))
        assert p1039.labels.as_tokens() == labels_by_bfs(p1039)
        assert p1039.width() == width_by_bfs(p1039)


# ---------------------------------------------------------------- patterns
@pytest.mark.parametrize("name", BUNDLED)
def test_reduced_pattern_matches_figure(name):
    P = corpus(name)
    pat = incidence_pattern(P)
    ours = digraph(pat.reduced_arcs, pat.plus_nodes)
    drawn = digraph(FIGURE[name], set("0123456"))
    assert same_pattern(ours, drawn)
    if name in ("p1963", "p3513"):
        assert len(pat.reduced_nodes) == 8 and not pat.two_cycles
        assert same_pattern(ours, digraph(MINIMAL_RIGHT, set("0123456")))
        assert not same_pattern(ours, digraph(MINIMAL_LEFT, set("0123456")))
    else:
        assert len(pat.reduced_nodes) == 9 and pat.two_cycles


def test_pattern_two_cycles_are_exact():
    assert incidence_pattern(corpus("p1039")).two_cycles == (("0", "d"), ("0", "e"))
    assert incidence_pattern(corpus("p2669")).two_cycles == (("3", "a"), ("4", "a"))


def test_pattern_ann6(ann6):
    pat = incidence_pattern(ann6)
    tails = {a for a, _ in pat.reduced_arcs}
    assert tails == pat.reduced_nodes == frozenset("123abc")
    assert pat.two_cycles


def test_certificates(ann6):
    assert certify_non_dstep(corpus("p3513")).kind == "pattern"
    assert certify_non_dstep(corpus("p1963")).kind == "pattern"
    assert certify_non_dstep(corpus("p2669")).kind == "width"
    assert certify_non_dstep(corpus("p1039")).kind == "width"
    cert = certify_non_dstep(ann6)
    assert cert.kind == "dstep" and not cert.non_dstep


def test_pattern_certificate_soundness(bundled):
    cert = certify_non_dstep(bundled)
    pat = cert.pattern
    if not pat.two_cycles:
        assert len(pat.reduced_nodes) >= 8
        assert width_by_bfs(bundled) > bundled.d
    assert (bundled.width() > bundled.d) == cert.non_dstep


def test_certificate_agrees_with_width_on_random_states():
    P = corpus("p1963")
    rng = random.Random(2)
    for _ in range(150):
        apply_flip(P, sample_flip(P, rng))
        cert = certify_non_dstep(P)
        assert cert.non_dstep == (P.width() > P.d)
        if cert.kind == "pattern":
            assert len(cert.pattern.reduced_nodes) >= 8


# ---------------------------------------------------------------- layers
@pytest.mark.parametrize("name,vector", [("p1039", (11, 35, 35, 11)), ("p1963", (11, 35, 35, 11)),
                                         ("p3513", (11, 35, 35, 11)), ("p2669", (11, 34, 36, 11))])
def test_layer_vectors(name, vector):
    assert layer_vector(corpus(name)) == vector


def test_excess(bundled):
    assert excess(bundled) == Fraction(bundled.width() - 5, 9) == Fraction(1, 9)


# ---------------------------------------------------------------- shelling
def table_order(P):
    return [f for layer in P.layers("plus") for f in layer]


def file_order(name):
    from topoprism.io import bundled_path

    return [line.split()[1:] for line in bundled_path(name).read_text().splitlines()
            if line.startswith("facet")]


@pytest.mark.parametrize("name", BUNDLED)
def test_table_order_shells(name):
    P = corpus(name)
    order = file_order(name)
    ok = check_shelling(P, order, "plus").valid or check_shelling(P, order[::-1], "minus").valid
    assert ok


def test_ann6_shelling(ann6):
    order = [list(f) for f in ANN6_FACETS]
    rep = check_shelling(ann6, order, "plus")
    assert rep.valid and bool(rep)
    assert rep.ridge_counts[0] == 1


def test_bad_first_facet(ann6):
    order = [list(f) for f in ["2ab"] + ANN6_FACETS[:1] + ANN6_FACETS[2:]]
    rep = check_shelling(ann6, order, "plus")
    assert not rep.valid and rep.failed_step == 0


def test_shelling_needs_permutation(ann6):
    with pytest.raises(NotAPermutationError):
        check_shelling(ann6, [list("12a")], "plus")


def test_find_shelling(ann6):
    rep = find_layer_monotone_shelling(ann6)
    assert rep is not None and check_shelling(ann6, rep.order, rep.direction).valid
    assert find_layer_monotone_shelling(ann6, max_nodes=0) is None


@pytest.mark.parametrize("name", BUNDLED)
def test_find_layer_monotone_shelling(name):
    P = corpus(name)
    rep = find_layer_monotone_shelling(P)
    assert rep is not None and rep.valid
    assert check_shelling(P, rep.order, rep.direction).valid
    layers = P.layers(rep.direction)
    rank = {F: i for i, layer in enumerate(layers) for F in layer}
    seq = [rank[frozenset(F)] for F in rep.order]
    assert seq == sorted(seq)


def test_prismatoid_equality_and_copy(p1039):
    Q = p1039.copy()
    assert Q == p1039
    apply_flip(Q, sample_flip(Q, random.Random(0)))
    assert Q != p1039
