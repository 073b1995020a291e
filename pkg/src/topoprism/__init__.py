"""Combinatorial toolkit for topological prismatoids and non-Hirsch spheres."""

__version__ = "0.1.0"

from .complex import (
    SimplicialComplex,
    build_complex,
    connected_sum,
    join,
    one_point_suspension,
    simplex_boundary,
    suspension,
)
from .prismatoid import (
    Prismatoid,
    certify_non_dstep,
    check_shelling,
    find_layer_monotone_shelling,
    incidence_pattern,
    validate_prismatoid,
)
from .flips import Flip, apply_flip, enumerate_flips, is_valid_flip, sample_flip
from .isomorphism import are_isomorphic
from .annealer import PrismatoidAnnealer, anneal_run, cost, inflate_walk
from .dstep import build_nonhirsch_sphere, covering_sphere, pull_cone
from .io import load_bundled, parse_file, serialize

__all__ = [
    "SimplicialComplex", "build_complex", "connected_sum", "join", "one_point_suspension",
    "simplex_boundary", "suspension", "Prismatoid", "certify_non_dstep", "check_shelling",
    "find_layer_monotone_shelling", "incidence_pattern", "validate_prismatoid", "Flip",
    "apply_flip", "enumerate_flips", "is_valid_flip", "sample_flip", "are_isomorphic",
    "PrismatoidAnnealer", "anneal_run", "cost", "inflate_walk", "build_nonhirsch_sphere",
    "covering_sphere", "pull_cone", "load_bundled", "parse_file", "serialize",
]
