"""Command line interface: ``topoprism <command> ...``.

Every command prints a short human-readable report followed by a
``key=value`` block. Verification-style commands exit with status 0 exactly
when their verdict is positive, 1 when it is negative, and 2 on errors.
"""
from __future__ import annotations

import argparse
import math
import random
import sys
from pathlib import Path

from . import __version__
from .annealer import Objective, Schedule, histogram_csv, inflate_walk, run_chains
from .complex import SimplicialComplex, fmt_face
from .dstep import build_nonhirsch_sphere
from .exceptions import TopoprismError
from .flips import read_trace, replay
from .io import BUNDLED, bundled_path, parse_file, serialize, write_file
from .isomorphism import are_isomorphic
from .prismatoid import (
    Prismatoid,
    certify_non_dstep,
    check_shelling,
    check_sphere_shelling,
    find_layer_monotone_shelling,
    incidence_pattern,
)


def _fmt(x) -> str:
    if isinstance(x, float):
        if x == math.inf:
            return "inf"
        if x.is_integer():
            return str(int(x))
        return repr(x)
    if isinstance(x, (tuple, list)):
        return ",".join(_fmt(y) for y in x)
    if isinstance(x, bool):
        return str(x).lower()
    return str(x)


def _emit(lines, kv: dict, out=None):
    out = out or sys.stdout
    for line in lines:
        print(line, file=out)
    if lines:
        print(file=out)
    for k, v in kv.items():
        print(f"{k}={_fmt(v)}", file=out)


def resolve_path(name: str) -> Path:
    """Existing path, or a bundled prismatoid named like ``data/p1039.prism``."""
    p = Path(name)
    if p.exists():
        return p
    stem = p.name.removesuffix(".prism")
    if stem in BUNDLED or "p" + stem in BUNDLED:
        return bundled_path(stem)
    raise FileNotFoundError(f"no such file: {name}")


def _load(name: str, validate: bool = True):
    return parse_file(resolve_path(name), validate=validate)


def _load_prismatoid(name: str) -> Prismatoid:
    obj = _load(name)
    if not isinstance(obj, Prismatoid):
        raise TopoprismError(f"{name} holds a COMPLEX, a PRISMATOID is needed")
    return obj


def _read_order(path: str) -> list[list[str]]:
    order = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        if line[0] == "facet":
            line = line[1:]
        order.append(line)
    return order


# ----------------------------------------------------------------------
def cmd_verify(args) -> int:
    obj = _load(args.file)
    if isinstance(obj, Prismatoid):
        cert = certify_non_dstep(obj)
        lines = [f"valid {obj.dim}-dimensional topological prismatoid",
                 f"certificate: {cert.summary()}"]
        if cert.pattern.two_cycles:
            lines.append("two-cycles: " + " ".join(f"{a}<->{b}" for a, b in cert.pattern.two_cycles))
        kv = {"valid": True, "dim": obj.dim, "n_vertices": obj.n_vertices,
              "n_facets": obj.n_facets, "width": obj.width(), "certificate": cert.kind,
              "non_dstep": cert.non_dstep}
        _emit(lines, kv)
        return 0 if cert.non_dstep else 1
    closed = obj.is_closed_pseudomanifold()
    chi = obj.euler_characteristic()
    sphere_like = closed and chi == 1 + (-1) ** obj.dim and obj.is_dual_connected()
    lines = [f"{obj.dim}-dimensional complex: "
             + ("closed pseudomanifold with sphere Euler characteristic" if sphere_like
                else "not a sphere candidate")]
    _emit(lines, {"dim": obj.dim, "n_vertices": obj.n_vertices, "n_facets": obj.n_facets,
                  "closed_pseudomanifold": closed, "euler": chi, "sphere_candidate": sphere_like})
    return 0 if sphere_like else 1


def cmd_stats(args) -> int:
    obj = _load(args.file)
    if isinstance(obj, Prismatoid):
        kv = {"dim": obj.dim, "n_vertices": obj.n_vertices, "n_facets": obj.n_facets,
              "f_vector": obj.complex.f_vector(), "layers": obj.layer_vector(),
              "width": obj.width(), "excess": obj.excess(), "non_dstep": obj.is_non_dstep(),
              "base_plus": len(obj.base_plus), "base_minus": len(obj.base_minus)}
        lines = [f"f-vector ({_fmt(kv['f_vector'])})", f"layers ({_fmt(kv['layers'])})",
                 f"width {_fmt(kv['width'])}, excess {kv['excess']}"]
    else:
        kv = {"dim": obj.dim, "n_vertices": obj.n_vertices, "n_facets": obj.n_facets,
              "f_vector": obj.f_vector(), "euler": obj.euler_characteristic()}
        lines = [f"f-vector ({_fmt(kv['f_vector'])})"]
    _emit(lines, kv)
    return 0


def cmd_pattern(args) -> int:
    P = _load_prismatoid(args.file)
    pat = incidence_pattern(P)
    reduced = not args.full
    nodes = pat.reduced_nodes if reduced else pat.plus_nodes | pat.minus_nodes
    arcs = pat.reduced_arcs if reduced else pat.arcs
    lines = [("reduced " if reduced else "") + f"incidence pattern: {len(nodes)} nodes, {len(arcs)} arcs"]
    lines += pat.arc_lines(reduced)
    lines.append("two-cycles: " + (" ".join(f"{a}<->{b}" for a, b in pat.two_cycles) or "none"))
    _emit(lines, {"nodes": len(nodes), "arcs": len(arcs), "two_cycles": len(pat.two_cycles),
                  "reduced_nodes": " ".join(sorted(pat.reduced_nodes))})
    return 0


def cmd_shell_check(args) -> int:
    obj = _load(args.file)
    if args.search:
        if not isinstance(obj, Prismatoid):
            raise TopoprismError("--search needs a PRISMATOID file")
        direction = None if args.direction == "auto" else args.direction
        rep = find_layer_monotone_shelling(obj, direction, max_nodes=args.max_nodes)
        if rep is None:
            _emit(["no layer-monotone shelling found within the node budget"],
                  {"valid": False, "searched": True})
            return 1
        lines = [f"layer-monotone shelling from base {rep.direction}"]
        lines += ["facet " + " ".join(sorted(f)) for f in rep.order]
        _emit(lines, {"valid": True, "searched": True, "direction": rep.direction,
                      "n_facets": len(rep.order)})
        return 0
    order = _read_order(args.order) if args.order else [sorted(f) for f in obj.facets]
    if not isinstance(obj, Prismatoid):
        rep = check_sphere_shelling(obj, order)
        _emit([f"sphere shelling {'valid' if rep.valid else 'invalid'}"],
              {"valid": rep.valid, "failed_step": rep.failed_step if rep.failed_step is not None else "-"})
        return 0 if rep.valid else 1
    sides = ["plus", "minus"] if args.direction == "auto" else [args.direction]
    results = []
    for side in sides:
        seq = order if side == "plus" or args.direction != "auto" else order[::-1]
        rep = check_shelling(obj, seq, side)
        results.append(rep)
        if rep.valid:
            break
    lines = []
    for rep in results:
        status = "valid" if rep.valid else f"invalid at step {rep.failed_step + 1}"
        lines.append(f"from base {rep.direction}: {status}")
    ok = any(r.valid for r in results)
    kv = {"valid": ok}
    if ok:
        kv["direction"] = next(r.direction for r in results if r.valid)
    _emit(lines, kv)
    return 0 if ok else 1


def cmd_iso(args) -> int:
    a, b = _load(args.first), _load(args.second)
    respect = None
    if args.respect_bases:
        if not (isinstance(a, Prismatoid) and isinstance(b, Prismatoid)):
            raise TopoprismError("--respect-bases needs two PRISMATOID files")
        respect = True
    m = are_isomorphic(a, b, respect)
    if m is None:
        _emit(["not isomorphic"], {"isomorphic": False})
        return 1
    lines = ["isomorphic", "map " + " ".join(f"{k}->{m[k]}" for k in sorted(m))]
    _emit(lines, {"isomorphic": True})
    return 0


def _schedule(args) -> Schedule:
    return Schedule(args.t0, args.rate, args.iters)


def cmd_anneal(args) -> int:
    P = _load_prismatoid(args.file)
    seeds = [args.seed + i for i in range(args.chains)]
    runs = run_chains(P, seeds, _schedule(args), Objective(args.epsilon), args.min_width,
                      args.exact_width, n_jobs=args.jobs)
    lines = [r.summary_line() for r in runs]
    best = min(runs, key=lambda r: (r.best.n_vertices, r.best_cost))
    if args.trace:
        text = "".join(line + "\n" for line in best.trace_lines())
        Path(args.trace).write_text(text)
    if args.histogram:
        Path(args.histogram).write_text(histogram_csv(runs))
    if args.output:
        write_file(best.best, args.output)
    ok = all(r.best.width() >= r.min_width for r in runs)
    _emit(lines, {"chains": len(runs), "best_seed": best.seed, "best_v": best.best.n_vertices,
                  "best_f": best.best.n_facets, "best_width": best.best.width(),
                  "final_v": best.final.n_vertices, "accepted": best.accepted,
                  "rejected": best.rejected, "constraint_rejected": best.constraint_rejected})
    return 0 if ok else 1


def cmd_inflate(args) -> int:
    P = _load_prismatoid(args.file)
    Q, applied = inflate_walk(P, args.iters, random.Random(args.seed), args.insertion_bias,
                              args.min_width, args.target_vertices)
    if args.output:
        write_file(Q, args.output)
    if args.trace:
        Path(args.trace).write_text("".join(f.to_line() + "\n" for f in applied))
    _emit([f"inflated {P.n_vertices} -> {Q.n_vertices} vertices with {len(applied)} flips"],
          {"n_vertices": Q.n_vertices, "n_facets": Q.n_facets, "width": Q.width(),
           "flips": len(applied)})
    return 0


def cmd_dstep(args) -> int:
    P = _load_prismatoid(args.file)
    cert = build_nonhirsch_sphere(P, shelling=args.shelling)
    lines = cert.report_lines()
    if args.output:
        Path(args.output).write_text(serialize(cert.sphere))
    if args.certificate:
        kv_text = "".join(f"{k}={v}\n" for k, v in cert.key_values().items())
        Path(args.certificate).write_text("\n".join(lines) + "\n\n" + kv_text)
    _emit(lines, cert.key_values())
    return 0 if cert.non_hirsch else 1


def cmd_diameter(args) -> int:
    obj = _load(args.file)
    C = obj.complex if isinstance(obj, Prismatoid) else obj
    diam = C.dual_diameter()
    _emit([f"dual graph diameter {_fmt(diam)}"],
          {"diameter": diam, "n_vertices": C.n_vertices, "dim": C.dim,
           "hirsch_bound": C.n_vertices - C.dim - 1})
    return 0


def cmd_replay(args) -> int:
    P = _load_prismatoid(args.file)
    flips = read_trace(args.trace)
    replay(P, flips)
    if args.output:
        write_file(P, args.output)
    _emit([f"replayed {len(flips)} flips"],
          {"flips": len(flips), "n_vertices": P.n_vertices, "n_facets": P.n_facets,
           "width": P.width()})
    return 0


# ----------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topoprism", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--seed", type=int, default=0)
    search.add_argument("--iters", type=int, default=500_000,
                        help="annealing iterations, or walk steps for inflate")
    search.add_argument("--t0", type=float, default=1000.0, help="initial temperature (anneal)")
    search.add_argument("--rate", type=float, default=0.99997, help="cooling rate (anneal)")
    search.add_argument("--epsilon", type=float, default=0.01, help="tie-breaker weight (anneal)")
    search.add_argument("--min-width", type=int, default=None,
                        help="width constraint; default d + 1")

    p = sub.add_parser("verify", help="validate a file and certify non-d-step")
    p.add_argument("file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stats", help="f-vector, layers, width, excess")
    p.add_argument("file")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("pattern", help="incidence pattern arcs and two-cycles")
    p.add_argument("file")
    p.add_argument("--full", action="store_true", help="print the unreduced pattern")
    p.set_defaults(func=cmd_pattern)

    p = sub.add_parser("shell-check", help="check a facet order or search for a shelling")
    p.add_argument("file")
    p.add_argument("--order", help="file with one facet per line (default: file order)")
    p.add_argument("--direction", choices=["plus", "minus", "auto"], default="auto",
                   help="start base; auto tries plus, then the reversed order from minus")
    p.add_argument("--search", action="store_true", help="search a layer-monotone shelling")
    p.add_argument("--max-nodes", type=int, default=200_000)
    p.set_defaults(func=cmd_shell_check)

    p = sub.add_parser("iso", help="test two files for combinatorial isomorphism")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--respect-bases", action="store_true")
    p.set_defaults(func=cmd_iso)

    p = sub.add_parser("anneal", parents=[search], help="simulated annealing chains")
    p.add_argument("file")
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--jobs", type=int, default=None, help="parallel worker processes")
    p.add_argument("--exact-width", action="store_true", help="keep the width fixed")
    p.add_argument("--trace", help="write the accepted flips of the best chain here")
    p.add_argument("--histogram", help="write the vertices,facets,count CSV here")
    p.add_argument("--output", help="write the best prismatoid here")
    p.set_defaults(func=cmd_anneal)

    p = sub.add_parser("inflate", parents=[search], help="insertion-biased random flip walk")
    p.add_argument("file")
    p.add_argument("--insertion-bias", type=float, default=1.0)
    p.add_argument("--target-vertices", type=int, default=None)
    p.add_argument("--trace", help="write the applied flips here")
    p.add_argument("--output", help="write the inflated prismatoid here")
    p.set_defaults(func=cmd_inflate)

    p = sub.add_parser("dstep", help="build the non-Hirsch sphere and its certificate")
    p.add_argument("file")
    p.add_argument("--output", help="write the sphere (COMPLEX v1) here")
    p.add_argument("--certificate", help="write the certificate here")
    p.add_argument("--shelling", action="store_true", help="carry a shelling through the steps")
    p.set_defaults(func=cmd_dstep)

    p = sub.add_parser("diameter", help="dual graph diameter of a complex")
    p.add_argument("file")
    p.set_defaults(func=cmd_diameter)

    p = sub.add_parser("replay", help="re-apply a flip trace")
    p.add_argument("file")
    p.add_argument("trace")
    p.add_argument("--output", help="write the resulting prismatoid here")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TopoprismError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
