"""Reading and writing the COMPLEX v1 and PRISMATOID v1 text formats."""
from __future__ import annotations

import warnings
from importlib import resources
from pathlib import Path

from .complex import SimplicialComplex, check_token, sorted_face
from .exceptions import ComplexError, FacetSizeError, ParseError
from .prismatoid import Prismatoid, validate_prismatoid

HEADERS = ("COMPLEX v1", "PRISMATOID v1")
BUNDLED = ("p1039", "p1963", "p2669", "p3513")


class DuplicateFacetWarning(UserWarning):
    pass


def _tokens(rest: list[str], lineno: int) -> list[str]:
    try:
        return [check_token(t) for t in rest]
    except ValueError as exc:
        raise ParseError(str(exc), lineno) from None


def parse_text(text: str, validate: bool = True):
    """Parse either format; returns a :class:`Prismatoid` or :class:`SimplicialComplex`.

    Facet order from the file is kept. Repeated facet lines are dropped with a
    :class:`DuplicateFacetWarning`.
    """
    header = None
    dim = None
    bases: dict[str, list[str]] = {}
    facets: list[tuple[str, ...]] = []
    seen: set[frozenset] = set()
    last = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        last = lineno
        if header is None:
            if line not in HEADERS:
                raise ParseError(f"expected one of {HEADERS}, got {line!r}", lineno)
            header = line
            continue
        key, *rest = line.split()
        if key == "dim":
            if dim is not None or len(rest) != 1:
                raise ParseError("malformed or repeated dim line", lineno)
            try:
                dim = int(rest[0])
            except ValueError:
                raise ParseError(f"bad dimension {rest[0]!r}", lineno) from None
            if dim < 0:
                raise ParseError("negative dimension", lineno)
        elif key in ("base+", "base-"):
            if header != "PRISMATOID v1":
                raise ParseError(f"{key} line in a COMPLEX file", lineno)
            if key in bases:
                raise ParseError(f"repeated {key} line", lineno)
            bases[key] = _tokens(rest, lineno)
        elif key == "facet":
            if dim is None:
                raise ParseError("facet before dim line", lineno)
            toks = _tokens(rest, lineno)
            f = frozenset(toks)
            if len(f) != len(toks):
                raise ParseError("repeated vertex in facet", lineno)
            if len(f) != dim + 1:
                raise FacetSizeError(
                    f"facet has {len(f)} vertices, dimension {dim} needs {dim + 1}", lineno)
            if f in seen:
                warnings.warn(f"line {lineno}: duplicate facet ignored",
                              DuplicateFacetWarning, stacklevel=2)
                continue
            seen.add(f)
            facets.append(tuple(toks))
        else:
            raise ParseError(f"unknown keyword {key!r}", lineno)
    if header is None:
        raise ParseError("empty file", 1)
    if dim is None:
        raise ParseError("missing dim line", last or 1)
    if not facets:
        raise ParseError("no facets", last or 1)
    ground = [v for key in ("base+", "base-") for v in bases.get(key, [])]
    C = SimplicialComplex(facets, ground)
    if header == "COMPLEX v1":
        return C
    if set(bases) != {"base+", "base-"}:
        raise ParseError("prismatoid needs both base+ and base- lines", last)
    if not validate:
        return Prismatoid(C, bases["base+"], bases["base-"])
    return validate_prismatoid(C, bases["base+"], bases["base-"])


def parse_file(path, validate: bool = True):
    return parse_text(Path(path).read_text(), validate=validate)


def load_bundled(name: str) -> Prismatoid:
    """Load one of the bundled prismatoids, e.g. ``"p1039"`` or ``"1039"``."""
    name = name if name.startswith("p") else "p" + name
    if name not in BUNDLED:
        raise KeyError(f"no bundled prismatoid {name!r}; choose from {BUNDLED}")
    text = resources.files(__package__).joinpath("data", name + ".prism").read_text()
    return parse_text(text)


def bundled_path(name: str) -> Path:
    name = name if name.startswith("p") else "p" + name
    return Path(str(resources.files(__package__).joinpath("data", name + ".prism")))


def _facet_lines(C: SimplicialComplex) -> list[str]:
    return [f"facet {' '.join(f)}" for f in C.sorted_facets()]


def serialize_complex(C: SimplicialComplex) -> str:
    if not C.n_facets:
        raise ComplexError("cannot serialize an empty complex")
    return "\n".join(["COMPLEX v1", f"dim {C.dim}", *_facet_lines(C)]) + "\n"


def serialize_prismatoid(P: Prismatoid) -> str:
    return "\n".join([
        "PRISMATOID v1",
        f"dim {P.dim}",
        "base+ " + " ".join(sorted_face(P.base_plus)),
        "base- " + " ".join(sorted_face(P.base_minus)),
        *_facet_lines(P.complex),
    ]) + "\n"


def serialize(obj) -> str:
    if isinstance(obj, Prismatoid):
        return serialize_prismatoid(obj)
    return serialize_complex(obj)


def write_file(obj, path) -> None:
    Path(path).write_text(serialize(obj))
